#![allow(dead_code)]

use adjustkit::dag::{catalog_graph, Dag, Node};
use adjustkit::{AdjustmentCollection, Source, SubsetId};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn s(idx: &[usize], p: usize) -> SubsetId {
    SubsetId::from_indices(idx, p).unwrap()
}

/// Written-out answer for one built-in graph.
pub struct Expected {
    pub name: &'static str,
    pub p: usize,
    pub singles: &'static [&'static [usize]],
    pub cones: &'static [&'static [usize]],
    /// Sets in the written form that condition on a descendant of a
    /// collider and so leave a path open.
    pub opened: &'static [&'static [usize]],
    pub minimal: &'static [&'static [usize]],
    pub unique: Option<&'static [usize]>,
    pub colliders: &'static [usize],
    pub refined: &'static [usize],
}

impl Expected {
    pub fn collection(&self) -> AdjustmentCollection {
        let mut c = AdjustmentCollection::new(self.p, Source::Oracle).unwrap();
        for set in self.singles {
            c.insert(s(set, self.p));
        }
        let full = (1u32 << self.p) - 1;
        for base in self.cones {
            let b = s(base, self.p).mask();
            for m in 0..=full {
                if m & b == b {
                    c.insert(SubsetId::new(m, self.p).unwrap());
                }
            }
        }
        c
    }

    /// The written form with the `opened` sets taken out.
    pub fn separated(&self) -> AdjustmentCollection {
        let mut c = self.collection();
        for set in self.opened {
            assert!(c.remove(s(set, self.p)), "{} does not list {:?}", self.name, set);
        }
        c
    }

    pub fn graph(&self) -> Dag {
        catalog_graph(self.name).unwrap()
    }
}

pub const GOLDEN: [Expected; 8] = [
    Expected {
        name: "three_minimal_sets",
        p: 6,
        singles: &[&[1], &[2], &[3], &[1, 2], &[1, 3], &[2, 3], &[1, 2, 3]],
        cones: &[&[1, 4], &[1, 6], &[2, 4], &[2, 6], &[3, 4], &[3, 6]],
        opened: &[],
        minimal: &[&[1], &[2], &[3]],
        unique: None,
        // X5 sits between X4 and X6, and adding it to {1} opens that path
        colliders: &[5],
        refined: &[5],
    },
    Expected {
        name: "fork_plus_collider",
        p: 4,
        singles: &[&[1]],
        cones: &[&[1, 2], &[1, 4]],
        opened: &[],
        minimal: &[&[1]],
        unique: Some(&[1]),
        colliders: &[3],
        refined: &[3],
    },
    Expected {
        name: "chain_plus_collider",
        p: 4,
        singles: &[&[1], &[1, 2], &[2, 3], &[1, 2, 3]],
        cones: &[&[4]],
        opened: &[&[1]],
        minimal: &[&[1], &[4], &[2, 3]],
        unique: None,
        colliders: &[3],
        refined: &[],
    },
    Expected {
        name: "hidden_collider",
        p: 4,
        singles: &[],
        cones: &[&[1, 4], &[1, 2, 3]],
        opened: &[],
        minimal: &[&[1, 4], &[1, 2, 3]],
        unique: None,
        colliders: &[],
        refined: &[],
    },
    Expected {
        name: "fork_chain_collider",
        p: 4,
        singles: &[&[1]],
        cones: &[&[1, 2], &[1, 4]],
        opened: &[&[1]],
        minimal: &[&[1]],
        unique: Some(&[1]),
        colliders: &[3],
        refined: &[3],
    },
    Expected {
        name: "two_collider_paths",
        p: 6,
        singles: &[&[3], &[4], &[1, 3], &[3, 4], &[4, 6], &[4, 5, 6]],
        cones: &[&[1, 2], &[1, 4], &[2, 3], &[3, 6]],
        opened: &[&[4], &[4, 6], &[4, 5, 6]],
        minimal: &[&[3], &[4], &[1, 2]],
        unique: None,
        colliders: &[2, 5],
        refined: &[5],
    },
    Expected {
        name: "mixed_paths",
        p: 5,
        singles: &[&[1], &[1, 2], &[2, 3, 4]],
        cones: &[&[1, 4], &[1, 5], &[2, 5]],
        opened: &[&[1], &[1, 2]],
        minimal: &[&[1], &[2, 5], &[2, 3, 4]],
        unique: None,
        colliders: &[3],
        refined: &[],
    },
    Expected {
        name: "fork_chain_collider_variant",
        p: 4,
        singles: &[&[1]],
        cones: &[&[1, 2], &[1, 4]],
        opened: &[],
        minimal: &[&[1]],
        unique: Some(&[1]),
        colliders: &[3],
        refined: &[3],
    },
];

/// Random DAG over Y, T and `p` predictors. Y and T are sinks when
/// `sinks` is set, otherwise every pair in a random order may be joined.
pub fn random_dag(rng: &mut ChaCha8Rng, p: usize, density: f64, sinks: bool) -> Dag {
    let mut nodes: Vec<Node> = (1..=p).map(Node::X).collect();
    if !sinks {
        nodes.push(Node::Y);
        nodes.push(Node::T);
    }
    nodes.shuffle(rng);
    if sinks {
        nodes.push(Node::Y);
        nodes.push(Node::T);
    }
    let mut edges = Vec::new();
    for i in 0..nodes.len() {
        for j in i + 1..nodes.len() {
            if sinks && nodes[i] == Node::Y {
                continue;
            }
            if rng.random::<f64>() < density {
                edges.push((nodes[i], nodes[j]));
            }
        }
    }
    Dag::new(p, edges).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
