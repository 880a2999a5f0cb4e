//! Causal DAGs over `{Y, T, X1..Xp}` and exact adjustment-set ground truth.
//!
//! Edge-list format: one edge per line written `X3 -> X1`; a line holding a
//! single node name declares it without edges (useful for isolated
//! predictors). Blank lines and `#` comments are ignored.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::collection::{AdjustmentCollection, Source};
use crate::error::{Error, Result};
use crate::subset::{check_dimension, enumerate_subsets, SubsetId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    Y,
    T,
    /// 1-based predictor index.
    X(usize),
}

impl Node {
    fn id(self) -> usize {
        match self {
            Node::Y => 0,
            Node::T => 1,
            Node::X(i) => i + 1,
        }
    }

    fn from_id(id: usize) -> Self {
        match id {
            0 => Node::Y,
            1 => Node::T,
            i => Node::X(i - 1),
        }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Y => f.write_str("Y"),
            Node::T => f.write_str("T"),
            Node::X(i) => write!(f, "X{i}"),
        }
    }
}

impl FromStr for Node {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "Y" | "y" => Ok(Node::Y),
            "T" | "t" => Ok(Node::T),
            _ => {
                let digits = s
                    .strip_prefix('X')
                    .or_else(|| s.strip_prefix('x'))
                    .ok_or_else(|| Error::InvalidGraph(format!("unknown node `{s}`")))?;
                match digits.parse::<usize>() {
                    Ok(i) if i >= 1 => Ok(Node::X(i)),
                    _ => Err(Error::InvalidGraph(format!("unknown node `{s}`"))),
                }
            }
        }
    }
}

/// Node sets as bitmasks over internal ids (Y = bit 0, T = bit 1, Xi = bit i+1).
type NodeMask = u32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dag {
    p: usize,
    edges: Vec<(Node, Node)>,
    parents: Vec<NodeMask>,
    children: Vec<NodeMask>,
}

impl Dag {
    /// Validates node names, self-loops, duplicates and acyclicity.
    pub fn new(p: usize, edges: Vec<(Node, Node)>) -> Result<Self> {
        check_dimension(p)?;
        let k = p + 2;
        let mut parents = vec![0; k];
        let mut children = vec![0; k];
        for &(a, b) in &edges {
            for n in [a, b] {
                if let Node::X(i) = n {
                    if i > p {
                        return Err(Error::InvalidGraph(format!("{n} exceeds p = {p}")));
                    }
                }
            }
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop at {a}")));
            }
            if parents[b.id()] & (1 << a.id()) != 0 {
                return Err(Error::InvalidGraph(format!("duplicate edge {a} -> {b}")));
            }
            parents[b.id()] |= 1 << a.id();
            children[a.id()] |= 1 << b.id();
        }
        let dag = Self {
            p,
            edges,
            parents,
            children,
        };
        if let Some(n) = dag.find_cycle() {
            return Err(Error::InvalidGraph(format!("graph has a cycle through {n}")));
        }
        Ok(dag)
    }

    /// Parses the edge-list format; `p` is the largest predictor index seen.
    pub fn parse(text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        let mut p = 0;
        let mut note = |n: Node| {
            if let Node::X(i) = n {
                p = p.max(i);
            }
        };
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let wrap = |e: Error| match e {
                Error::InvalidGraph(m) => Error::InvalidGraph(format!("line {}: {m}", lineno + 1)),
                other => other,
            };
            match line.split_once("->") {
                Some((a, b)) => {
                    let a: Node = a.parse().map_err(wrap)?;
                    let b: Node = b.parse().map_err(wrap)?;
                    note(a);
                    note(b);
                    edges.push((a, b));
                }
                None => note(line.parse().map_err(wrap)?),
            }
        }
        if p == 0 {
            return Err(Error::InvalidGraph("graph has no predictor nodes".into()));
        }
        Self::new(p, edges)
    }

    pub fn from_path(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Renders the edge-list format; isolated predictors are declared on
    /// their own lines.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for (a, b) in &self.edges {
            out.push_str(&format!("{a} -> {b}\n"));
        }
        for i in 1..=self.p {
            let id = Node::X(i).id();
            if self.parents[id] | self.children[id] == 0 {
                out.push_str(&format!("X{i}\n"));
            }
        }
        out
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn edges(&self) -> &[(Node, Node)] {
        &self.edges
    }

    pub fn parents(&self, n: Node) -> Vec<Node> {
        mask_nodes(self.parents[n.id()])
    }

    pub fn children(&self, n: Node) -> Vec<Node> {
        mask_nodes(self.children[n.id()])
    }

    fn node_count(&self) -> usize {
        self.p + 2
    }

    fn find_cycle(&self) -> Option<Node> {
        // Kahn's algorithm; leftovers lie on or behind a cycle
        let k = self.node_count();
        let mut indeg: Vec<u32> = self.parents.iter().map(|m| m.count_ones()).collect();
        let mut stack: Vec<usize> = (0..k).filter(|&i| indeg[i] == 0).collect();
        let mut seen = 0;
        while let Some(i) = stack.pop() {
            seen += 1;
            for c in bits(self.children[i]) {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    stack.push(c);
                }
            }
        }
        (seen < k).then(|| Node::from_id((0..k).find(|&i| indeg[i] > 0).unwrap()))
    }

    fn ancestors_of(&self, set: NodeMask) -> NodeMask {
        let mut anc = set;
        let mut frontier = set;
        while frontier != 0 {
            let mut next = 0;
            for i in bits(frontier) {
                next |= self.parents[i];
            }
            frontier = next & !anc;
            anc |= next;
        }
        anc
    }

    fn descendants_of(&self, id: usize) -> NodeMask {
        let mut desc = 1 << id;
        let mut frontier = desc;
        while frontier != 0 {
            let mut next = 0;
            for i in bits(frontier) {
                next |= self.children[i];
            }
            frontier = next & !desc;
            desc |= next;
        }
        desc
    }

    fn x_mask(&self, z: SubsetId) -> NodeMask {
        z.mask() << 2
    }

    /// Set-level d-separation via the moralized ancestral graph.
    fn separated_masks(&self, u: NodeMask, v: NodeMask, z: NodeMask) -> bool {
        let anc = self.ancestors_of(u | v | z);
        let k = self.node_count();
        let mut adj = vec![0 as NodeMask; k];
        for c in bits(anc) {
            let pa = self.parents[c] & anc;
            adj[c] |= pa;
            for a in bits(pa) {
                adj[a] |= (1 << c) | pa;
            }
        }
        for (i, a) in adj.iter_mut().enumerate() {
            *a &= !(1 << i);
        }
        let mut reached = u & !z;
        let mut frontier = reached;
        while frontier != 0 {
            let mut next = 0;
            for i in bits(frontier) {
                next |= adj[i];
            }
            next &= !z & !reached;
            if next & v != 0 {
                return false;
            }
            reached |= next;
            frontier = next;
        }
        reached & v == 0
    }

    /// Whether `u` and `v` are d-separated given `X_z`.
    pub fn d_separated(&self, u: Node, v: Node, z: SubsetId) -> bool {
        assert_eq!(z.dimension(), self.p, "conditioning set dimension differs from graph");
        self.separated_masks(1 << u.id(), 1 << v.id(), self.x_mask(z))
    }

    /// The same query by enumerating every simple path in the skeleton.
    /// Exponential; meant for cross-checking on small graphs.
    pub fn d_separated_by_paths(&self, u: Node, v: Node, z: SubsetId) -> bool {
        let zmask = self.x_mask(z);
        let k = self.node_count();
        let open_collider: Vec<bool> = (0..k).map(|i| self.descendants_of(i) & zmask != 0).collect();
        let mut path = vec![u.id()];
        !self.any_open_path(&mut path, 1 << u.id(), v.id(), zmask, &open_collider)
    }

    fn any_open_path(
        &self,
        path: &mut Vec<usize>,
        visited: NodeMask,
        target: usize,
        z: NodeMask,
        open_collider: &[bool],
    ) -> bool {
        let last = *path.last().unwrap();
        for next in bits(self.parents[last] | self.children[last]) {
            if visited & (1 << next) != 0 {
                continue;
            }
            // `last` becomes interior; check it against its neighbours
            if path.len() >= 2 {
                let prev = path[path.len() - 2];
                let into_from_prev = self.parents[last] & (1 << prev) != 0;
                let into_from_next = self.parents[last] & (1 << next) != 0;
                let blocked = if into_from_prev && into_from_next {
                    !open_collider[last]
                } else {
                    z & (1 << last) != 0
                };
                if blocked {
                    continue;
                }
            }
            if next == target {
                return true;
            }
            path.push(next);
            let found = self.any_open_path(path, visited | (1 << next), target, z, open_collider);
            path.pop();
            if found {
                return true;
            }
        }
        false
    }

    /// Every `A` with `Y ⟂ T | X_A`. The node `Y` stands for the potential
    /// outcome of whichever arm is being analysed.
    pub fn true_collection(&self) -> Result<AdjustmentCollection> {
        let mut c = AdjustmentCollection::new(self.p, Source::Oracle)?;
        for a in enumerate_subsets(self.p)? {
            if self.d_separated(Node::Y, Node::T, a) {
                c.insert(a);
            }
        }
        Ok(c)
    }

    /// Smallest `C` with `node ⟂ X_{-C} | X_C`, found by enumerating
    /// subsets in order of size.
    pub fn markov_boundary(&self, node: Node) -> Result<SubsetId> {
        check_dimension(self.p)?;
        let mut all: Vec<SubsetId> = enumerate_subsets(self.p)?.collect();
        all.sort_by_key(|a| (a.len(), a.mask()));
        let own = match node {
            Node::X(i) => SubsetId::from_indices(&[i], self.p)?,
            _ => SubsetId::empty(self.p),
        };
        for c in all {
            if c.intersection(own) != SubsetId::empty(self.p) {
                continue;
            }
            let rest = c.union(own).complement();
            if rest.is_empty() || self.separated_masks(1 << node.id(), self.x_mask(rest), self.x_mask(c)) {
                return Ok(c);
            }
        }
        unreachable!("the full complement always separates")
    }
}

fn bits(mut m: NodeMask) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if m == 0 {
            return None;
        }
        let b = m.trailing_zeros() as usize;
        m &= m - 1;
        Some(b)
    })
}

fn mask_nodes(m: NodeMask) -> Vec<Node> {
    bits(m).map(Node::from_id).collect()
}

/// Built-in example graphs as `(name, edge list)`.
pub const CATALOG: [(&str, &str); 8] = [
    ("three_minimal_sets", include_str!("../graphs/three_minimal_sets.dag")),
    ("fork_plus_collider", include_str!("../graphs/fork_plus_collider.dag")),
    ("chain_plus_collider", include_str!("../graphs/chain_plus_collider.dag")),
    ("hidden_collider", include_str!("../graphs/hidden_collider.dag")),
    ("fork_chain_collider", include_str!("../graphs/fork_chain_collider.dag")),
    ("two_collider_paths", include_str!("../graphs/two_collider_paths.dag")),
    ("mixed_paths", include_str!("../graphs/mixed_paths.dag")),
    ("fork_chain_collider_variant", include_str!("../graphs/fork_chain_collider_variant.dag")),
];

/// A built-in graph by name.
pub fn catalog_graph(name: &str) -> Result<Dag> {
    CATALOG
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| Dag::parse(text))
        .unwrap_or_else(|| Err(Error::InvalidGraph(format!("no built-in graph named `{name}`"))))
}

/// Population moments feeding the noise-free criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationSpec {
    pub sigma0: DMatrix<f64>,
    pub sigma1: DMatrix<f64>,
    /// `p x d_y` basis of the outcome central subspace.
    pub beta_y: DMatrix<f64>,
    /// `p x d_t` basis of the treatment central subspace.
    pub beta_t: DMatrix<f64>,
    pub provenance: String,
}

impl PopulationSpec {
    pub fn p(&self) -> usize {
        self.sigma0.nrows()
    }

    pub fn f(&self, a: SubsetId) -> Result<f64> {
        crate::criterion::population_f(&self.sigma0, &self.sigma1, &self.beta_y, &self.beta_t, a)
    }

    /// `{A : f(A) < threshold}` together with the smallest value outside it.
    pub fn zero_set(&self, threshold: f64) -> Result<(AdjustmentCollection, f64)> {
        let p = self.p();
        let mut c = AdjustmentCollection::new(p, Source::Oracle)?;
        let mut min_excluded = f64::INFINITY;
        for a in enumerate_subsets(p)? {
            let v = self.f(a)?;
            if v < threshold {
                c.insert(a);
            } else {
                min_excluded = min_excluded.min(v);
            }
        }
        Ok((c, min_excluded))
    }
}

/// Linear-Gaussian design on a DAG.
///
/// Predictors follow the structural equations `X_i = Σ_j w_ji X_j + e_i`
/// with `Var(e_i) = noise[i-1]`, giving a shared within-arm covariance
/// `Σ = (I - B)⁻¹ D (I - B)⁻ᵀ`. Treatment follows a discriminant model
/// whose arms differ only in mean, by `Σ γ`, so `T | X` is logistic with
/// coefficients `γ` on the parents of `T`. The outcome direction is the
/// vector of weights on the edges into `Y`.
///
/// `weights` is aligned with `g.edges()`.
pub fn linear_sem_population(g: &Dag, weights: &[f64], noise: &[f64]) -> Result<PopulationSpec> {
    let p = g.p();
    if weights.len() != g.edges().len() {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for {} edges",
            weights.len(),
            g.edges().len()
        )));
    }
    if noise.len() != p {
        return Err(Error::DimensionMismatch(format!("{} noise variances for p = {p}", noise.len())));
    }
    for n in [Node::Y, Node::T] {
        if !g.children(n).is_empty() {
            return Err(Error::InvalidMechanism(format!(
                "{n} must have no children in a linear design"
            )));
        }
    }
    if let Some(v) = noise.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::InvalidMechanism(format!("noise variance {v} is not positive")));
    }
    let mut b = DMatrix::zeros(p, p);
    let mut beta_y = DMatrix::zeros(p, 1);
    let mut gamma = DMatrix::zeros(p, 1);
    for (&(from, to), &w) in g.edges().iter().zip(weights) {
        match (from, to) {
            (Node::X(j), Node::X(i)) => b[(i - 1, j - 1)] = w,
            (Node::X(j), Node::Y) => beta_y[(j - 1, 0)] = w,
            (Node::X(j), Node::T) => gamma[(j - 1, 0)] = w,
            _ => unreachable!("Y and T are sinks"),
        }
    }
    let path = (DMatrix::identity(p, p) - b)
        .try_inverse()
        .ok_or_else(|| Error::InvalidMechanism("structural matrix is not invertible".into()))?;
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(noise));
    let mut sigma = &path * d * path.transpose();
    crate::linalg::symmetrize(&mut sigma);
    Ok(PopulationSpec {
        sigma0: sigma.clone(),
        sigma1: sigma,
        beta_y,
        beta_t: gamma,
        provenance: "linear structural design".into(),
    })
}
