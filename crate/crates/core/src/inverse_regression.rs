//! Slicing and inverse-regression candidate matrices.
//!
//! Two candidate matrices feed the criterion: the outcome matrix, estimated
//! inside one treatment arm with that arm's mean and covariance, and the
//! treatment matrix, estimated on the full sample with the treatment label as
//! a two-level discrete response and the marginal moments.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{split_by_treatment, Dataset};
use crate::error::{Error, Result};
use crate::linalg::{center_rows, mean_and_covariance, min_eigenvalue, SpdSolver};

/// Default number of slices for a continuous response.
pub const DEFAULT_SLICES: usize = 5;

/// Responses with at most this many distinct values are sliced by value.
pub const DISCRETE_LEVELS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Sliced inverse regression: inverse-covariance-weighted slice means.
    Sir,
    /// Sliced average variance estimation: `Σ^{-1}(Σ - Var(X | slice))` blocks.
    Save,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Sir => "sir",
            Method::Save => "save",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sir" => Ok(Method::Sir),
            "save" => Ok(Method::Save),
            other => Err(Error::Config(format!("unknown estimator `{other}`; use sir or save"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SliceKind {
    Quantile,
    Discrete,
}

/// Slice label per observation. Labels are 0-based internally.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SliceAssignment {
    pub labels: Vec<usize>,
    pub h: usize,
    pub kind: SliceKind,
    /// Set when the response is constant and everything fell into one slice.
    pub degenerate: bool,
}

impl SliceAssignment {
    /// Row indices per slice.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.h];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }

    /// Slice sizes.
    pub fn sizes(&self) -> Vec<usize> {
        let mut out = vec![0; self.h];
        for &l in &self.labels {
            out[l] += 1;
        }
        out
    }

    /// Uses already-discrete labels (0/1 treatment, etc.) as slices.
    pub fn from_labels(labels: &[u8]) -> Self {
        let mut levels: Vec<u8> = labels.to_vec();
        levels.sort_unstable();
        levels.dedup();
        let labels = labels
            .iter()
            .map(|l| levels.binary_search(l).expect("level present"))
            .collect();
        Self {
            labels,
            h: levels.len(),
            kind: SliceKind::Discrete,
            degenerate: levels.len() == 1,
        }
    }
}

/// Slices a response into `h` equiprobable bins, or one bin per level when
/// it has at most [`DISCRETE_LEVELS`] distinct values.
///
/// Ties are never split across slices; slices emptied by heavy ties are
/// dropped and the labels compacted, so every slice is nonempty.
pub fn slice_response(values: &[f64], h: usize) -> Result<SliceAssignment> {
    if h < 2 {
        return Err(Error::Config(format!("slice count must be at least 2, got {h}")));
    }
    let m = values.len();
    if m < h {
        return Err(Error::TooFewObservations { needed: h, have: m });
    }

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));

    let mut distinct = 1;
    for w in order.windows(2) {
        if values[w[0]] != values[w[1]] {
            distinct += 1;
        }
    }

    let mut labels = vec![0usize; m];
    if distinct <= DISCRETE_LEVELS {
        let mut level = 0;
        for (pos, &i) in order.iter().enumerate() {
            if pos > 0 && values[i] != values[order[pos - 1]] {
                level += 1;
            }
            labels[i] = level;
        }
        let degenerate = distinct == 1;
        if degenerate {
            log::warn!("response is constant; using a single degenerate slice");
        }
        return Ok(SliceAssignment {
            labels,
            h: distinct,
            kind: SliceKind::Discrete,
            degenerate,
        });
    }

    let mut raw = vec![0usize; m];
    let mut pos = 0;
    while pos < m {
        let slice = pos * h / m;
        let mut end = pos + 1;
        while end < m && values[order[end]] == values[order[pos]] {
            end += 1;
        }
        for &i in &order[pos..end] {
            raw[i] = slice;
        }
        pos = end;
    }
    let mut used = vec![false; h];
    for &s in &raw {
        used[s] = true;
    }
    let mut remap = vec![0usize; h];
    let mut next = 0;
    for s in 0..h {
        if used[s] {
            remap[s] = next;
            next += 1;
        }
    }
    for (l, r) in labels.iter_mut().zip(&raw) {
        *l = remap[*r];
    }
    Ok(SliceAssignment {
        labels,
        h: next,
        kind: SliceKind::Quantile,
        degenerate: false,
    })
}

/// What a candidate matrix targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    /// The potential outcome of one arm, estimated within that arm.
    Outcome { arm: u8 },
    /// The treatment indicator, estimated on the full sample.
    Treatment,
}

/// A `p x H` (SIR) or `p x pH` (SAVE) candidate matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateMatrix {
    pub m: DMatrix<f64>,
    pub method: Method,
    pub target: Target,
    pub h: usize,
}

impl CandidateMatrix {
    pub fn p(&self) -> usize {
        self.m.nrows()
    }
}

/// Inverse-covariance weighted slice means of centered predictors.
pub fn sir_matrix(
    x: &DMatrix<f64>,
    slices: &SliceAssignment,
    sigma: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let solver = SpdSolver::new(sigma, None)?;
    sir_with(x, slices, &solver)
}

fn sir_with(x: &DMatrix<f64>, slices: &SliceAssignment, solver: &SpdSolver) -> Result<DMatrix<f64>> {
    check_rows(x, slices)?;
    let p = x.ncols();
    let mut means = DMatrix::zeros(p, slices.h);
    let sizes = slices.sizes();
    for (r, &l) in slices.labels.iter().enumerate() {
        for c in 0..p {
            means[(c, l)] += x[(r, c)];
        }
    }
    for (l, &size) in sizes.iter().enumerate() {
        if size == 0 {
            return Err(Error::SliceTooSmall { slice: l + 1, rows: 0 });
        }
        let inv = 1.0 / size as f64;
        for c in 0..p {
            means[(c, l)] *= inv;
        }
    }
    Ok(solver.solve(&means))
}

/// Blocks `Σ^{-1}(Σ - Var(X | slice h))`, concatenated column-wise.
pub fn save_matrix(
    x: &DMatrix<f64>,
    slices: &SliceAssignment,
    sigma: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let solver = SpdSolver::new(sigma, None)?;
    save_with(x, slices, sigma, &solver)
}

fn save_with(
    x: &DMatrix<f64>,
    slices: &SliceAssignment,
    sigma: &DMatrix<f64>,
    solver: &SpdSolver,
) -> Result<DMatrix<f64>> {
    check_rows(x, slices)?;
    let p = x.ncols();
    let mut blocks = DMatrix::zeros(p, p * slices.h);
    for (l, rows) in slices.members().iter().enumerate() {
        if rows.len() < 2 {
            return Err(Error::SliceTooSmall {
                slice: l + 1,
                rows: rows.len(),
            });
        }
        let (_, within) = mean_and_covariance(&x.select_rows(rows.iter()));
        blocks
            .columns_mut(l * p, p)
            .copy_from(&(sigma - within));
    }
    Ok(solver.solve(&blocks))
}

fn check_rows(x: &DMatrix<f64>, slices: &SliceAssignment) -> Result<()> {
    if x.nrows() != slices.labels.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} rows but {} slice labels",
            x.nrows(),
            slices.labels.len()
        )));
    }
    Ok(())
}

/// Mean and covariance of `X | T = s`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupMoments {
    pub arm: u8,
    pub mu: DVector<f64>,
    pub sigma: DMatrix<f64>,
    pub n: usize,
    /// The arm covariance is (numerically) singular.
    pub degenerate: bool,
}

/// Per-arm moments plus the marginal moments of `X`.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub arms: [GroupMoments; 2],
    pub marginal_mean: DVector<f64>,
    pub marginal_sigma: DMatrix<f64>,
}

pub fn group_moments(d: &Dataset) -> Result<Moments> {
    let (g0, g1) = split_by_treatment(d)?;
    let arm = |g: &crate::data::GroupView| -> Result<GroupMoments> {
        if g.len() < 2 {
            return Err(Error::TooFewObservations {
                needed: 2,
                have: g.len(),
            });
        }
        let (mu, sigma) = mean_and_covariance(&g.select_rows(d.x()));
        let degenerate = min_eigenvalue(&sigma) <= crate::linalg::SINGULAR_EIGENVALUE;
        if degenerate {
            log::warn!("covariance of arm {} is singular", g.arm);
        }
        Ok(GroupMoments {
            arm: g.arm,
            mu,
            sigma,
            n: g.len(),
            degenerate,
        })
    };
    let arms = [arm(&g0)?, arm(&g1)?];
    let (marginal_mean, marginal_sigma) = mean_and_covariance(d.x());
    Ok(Moments {
        arms,
        marginal_mean,
        marginal_sigma,
    })
}

/// Estimator settings shared by both candidate matrices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateOptions {
    pub slices: usize,
    /// Diagonal jitter added before inverting a covariance; off by default.
    pub ridge: Option<f64>,
}

impl Default for CandidateOptions {
    fn default() -> Self {
        Self {
            slices: DEFAULT_SLICES,
            ridge: None,
        }
    }
}

/// Candidate matrix for `Y(t)`, from the rows with `T = arm`.
pub fn outcome_candidate(
    d: &Dataset,
    arm: u8,
    method: Method,
    opts: CandidateOptions,
) -> Result<CandidateMatrix> {
    let (g0, g1) = split_by_treatment(d)?;
    let g = if arm == 0 { g0 } else { g1 };
    let needed = 2 * opts.slices;
    if g.len() < needed {
        return Err(Error::TooFewObservations {
            needed,
            have: g.len(),
        });
    }
    let x = g.select_rows(d.x());
    let y = g.select(d.y());
    let (mu, sigma) = mean_and_covariance(&x);
    let xc = center_rows(&x, &mu);
    let slices = slice_response(&y, opts.slices)?;
    let solver = SpdSolver::new(&sigma, opts.ridge)?;
    let m = match method {
        Method::Sir => sir_with(&xc, &slices, &solver)?,
        Method::Save => save_with(&xc, &slices, &sigma, &solver)?,
    };
    Ok(CandidateMatrix {
        m,
        method,
        target: Target::Outcome { arm },
        h: slices.h,
    })
}

/// Candidate matrix for `T`, sliced by treatment label on the full sample.
pub fn treatment_candidate(
    d: &Dataset,
    method: Method,
    opts: CandidateOptions,
) -> Result<CandidateMatrix> {
    split_by_treatment(d)?;
    let (mu, sigma) = mean_and_covariance(d.x());
    let xc = center_rows(d.x(), &mu);
    let slices = SliceAssignment::from_labels(d.t());
    let solver = SpdSolver::new(&sigma, opts.ridge)?;
    let m = match method {
        Method::Sir => sir_with(&xc, &slices, &solver)?,
        Method::Save => save_with(&xc, &slices, &sigma, &solver)?,
    };
    Ok(CandidateMatrix {
        m,
        method,
        target: Target::Treatment,
        h: slices.h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn binary_response_passes_through() {
        let s = slice_response(&[0.0, 0.0, 1.0, 1.0], 2).unwrap();
        assert_eq!(s.kind, SliceKind::Discrete);
        assert_eq!(s.h, 2);
        assert_eq!(s.labels, vec![0, 0, 1, 1]);
    }

    #[test]
    fn quantile_slices_of_one_to_hundred() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        let s = slice_response(&v, 5).unwrap();
        assert_eq!(s.kind, SliceKind::Quantile);
        assert_eq!(s.sizes(), vec![20; 5]);
        // slice boundaries sit at the 20/40/60/80% quantiles
        assert_eq!(s.labels[19], 0);
        assert_eq!(s.labels[20], 1);
        assert_eq!(s.labels[99], 4);
    }

    #[test]
    fn constant_response_is_degenerate() {
        let s = slice_response(&[3.0; 12], 5).unwrap();
        assert_eq!(s.h, 1);
        assert!(s.degenerate);
    }

    #[test]
    fn too_few_for_slices() {
        assert_eq!(
            slice_response(&[1.0, 2.0], 5),
            Err(Error::TooFewObservations { needed: 5, have: 2 })
        );
    }

    #[test]
    fn heavy_ties_stay_together() {
        // 11 distinct values, one of them repeated many times
        let mut v = vec![0.0; 30];
        v.extend((1..=10).map(f64::from));
        let s = slice_response(&v, 5).unwrap();
        let zero_label = s.labels[0];
        assert!(v.iter().zip(&s.labels).all(|(&x, &l)| x != 0.0 || l == zero_label));
        assert!(s.sizes().iter().all(|&n| n > 0));
        // labels are monotone in the value
        for i in 0..v.len() {
            for j in 0..v.len() {
                if v[i] < v[j] {
                    assert!(s.labels[i] <= s.labels[j]);
                }
            }
        }
    }

    #[test]
    fn sir_one_dimensional_hand_case() {
        let x = DMatrix::from_row_slice(2, 1, &[-1.0, 1.0]);
        let s = SliceAssignment::from_labels(&[0, 1]);
        let m = sir_matrix(&x, &s, &DMatrix::identity(1, 1)).unwrap();
        assert_eq!(m, DMatrix::from_row_slice(1, 2, &[-1.0, 1.0]));
    }

    #[test]
    fn save_homogeneous_slices_vanish() {
        // two slices, each with identity-like within covariance
        let x = DMatrix::from_row_slice(
            8,
            2,
            &[
                1., 0., -1., 0., 0., 1., 0., -1., //
                1., 0., -1., 0., 0., 1., 0., -1.,
            ],
        );
        let s = SliceAssignment::from_labels(&[0, 0, 0, 0, 1, 1, 1, 1]);
        let (_, within) = mean_and_covariance(&x.rows(0, 4).into_owned());
        let m = save_matrix(&x, &s, &within).unwrap();
        assert_eq!(m.shape(), (2, 4));
        assert!(m.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn save_single_slice_is_zero() {
        let x = DMatrix::from_row_slice(5, 2, &[1., 2., 0., 1., 3., -1., 2., 2., -1., 0.5]);
        let (mu, sigma) = mean_and_covariance(&x);
        let xc = center_rows(&x, &mu);
        let s = SliceAssignment::from_labels(&[0; 5]);
        let m = save_matrix(&xc, &s, &sigma).unwrap();
        assert!(m.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn save_needs_two_rows_per_slice() {
        let x = DMatrix::from_row_slice(3, 1, &[1.0, 2.0, 3.0]);
        let s = SliceAssignment::from_labels(&[0, 0, 1]);
        assert!(matches!(
            save_matrix(&x, &s, &DMatrix::identity(1, 1)),
            Err(Error::SliceTooSmall { slice: 2, rows: 1 })
        ));
    }

    #[test]
    fn singular_sigma_is_rejected() {
        let x = DMatrix::from_row_slice(2, 2, &[1., 1., -1., -1.]);
        let s = SliceAssignment::from_labels(&[0, 1]);
        let sigma = DMatrix::from_element(2, 2, 1.0);
        assert!(matches!(
            sir_matrix(&x, &s, &sigma),
            Err(Error::SingularCovariance { .. })
        ));
    }

    #[test]
    fn group_moments_two_points() {
        let x = DMatrix::from_row_slice(4, 1, &[-1.0, 5.0, 1.0, 7.0]);
        let d = Dataset::new(x, vec![0, 1, 0, 1], vec![0.0; 4]).unwrap();
        let m = group_moments(&d).unwrap();
        assert_eq!(m.arms[0].mu[0], 0.0);
        assert_eq!(m.arms[0].sigma[(0, 0)], 2.0);
        assert_eq!(m.arms[1].mu[0], 6.0);
    }

    #[test]
    fn identical_rows_flag_degenerate_moments() {
        let x = DMatrix::from_row_slice(4, 1, &[2.0, 5.0, 2.0, 7.0]);
        let d = Dataset::new(x, vec![0, 1, 0, 1], vec![0.0; 4]).unwrap();
        let m = group_moments(&d).unwrap();
        assert!(m.arms[0].degenerate);
        assert_eq!(m.arms[0].sigma[(0, 0)], 0.0);
        assert!(!m.arms[1].degenerate);
    }

    #[test]
    fn constant_outcome_gives_zero_matrix() {
        let x = DMatrix::from_fn(40, 2, |i, j| ((i * 7 + j * 3) % 11) as f64 - 5.0 + 0.1 * j as f64);
        let t: Vec<u8> = (0..40).map(|i| (i % 2) as u8).collect();
        let d = Dataset::new(x, t, vec![1.0; 40]).unwrap();
        for method in [Method::Sir, Method::Save] {
            let c = outcome_candidate(&d, 0, method, CandidateOptions::default()).unwrap();
            assert_eq!(c.h, 1);
            assert!(c.m.iter().all(|v| v.abs() < 1e-12), "{method}");
        }
    }

    #[test]
    fn outcome_candidate_needs_rows() {
        let x = DMatrix::from_fn(12, 1, |i, _| i as f64);
        let t: Vec<u8> = (0..12).map(|i| u8::from(i < 3)).collect();
        let d = Dataset::new(x, t, (0..12).map(f64::from).collect()).unwrap();
        assert_eq!(
            outcome_candidate(&d, 1, Method::Sir, CandidateOptions::default()).unwrap_err(),
            Error::TooFewObservations { needed: 10, have: 3 }
        );
    }

    #[test]
    fn diagonal_rescaling_maps_sir() {
        // X -> X B maps M_SIR to B^{-1} M_SIR
        let x = DMatrix::from_fn(30, 3, |i, j| (((i * 13 + j * 7) % 17) as f64 - 8.0) * 0.3 + (i as f64).sin());
        let s = SliceAssignment::from_labels(&(0..30).map(|i| (i % 3) as u8).collect::<Vec<_>>());
        let (mu, sigma) = mean_and_covariance(&x);
        let xc = center_rows(&x, &mu);
        let m = sir_matrix(&xc, &s, &sigma).unwrap();
        let b = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, -0.5, 3.0]));
        let xb = &x * &b;
        let (mub, sigmab) = mean_and_covariance(&xb);
        let mb = sir_matrix(&center_rows(&xb, &mub), &s, &sigmab).unwrap();
        let expected = b.try_inverse().unwrap() * m;
        for (a, e) in mb.iter().zip(expected.iter()) {
            assert_relative_eq!(a, e, epsilon = 1e-8, max_relative = 1e-8);
        }
    }
}
