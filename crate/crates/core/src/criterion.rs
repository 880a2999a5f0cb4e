//! The subset criterion and its exhaustive table.
//!
//! For a subset `A` and arm `t`,
//!
//! ```text
//! f_t(A) = Σ_s ‖ M'_{Y(t),-A} (Σ⁽ˢ⁾_{-A,-A} - Σ⁽ˢ⁾_{-A,A} (Σ⁽ˢ⁾_{A,A})⁻¹ Σ⁽ˢ⁾_{A,-A}) M_{T,-A} ‖
//! ```
//!
//! summed over both treatment arms `s`, with `‖·‖` the spectral norm. The
//! empty set uses the unconditioned `Σ⁽ˢ⁾`, and the full set scores zero.
//! A subset is a sufficient adjustment set exactly when its population value
//! is zero.
//!
//! The table evaluates every subset with [`CriterionEvaluator`], which
//! rewrites the product as `M'_Y Σ M_T - (Σ_{A,·} M_Y)' Σ_{A,A}⁻¹ (Σ_{A,·} M_T)`
//! (the rows of the conditional covariance indexed by `A` vanish), so each
//! subset costs one small Cholesky factorization. [`f_value`] keeps the
//! literal Schur-complement form as an independent reference.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copula::transform_dataset;
use crate::data::{block, subset_rows, Dataset};
use crate::error::{Error, Result};
use crate::inverse_regression::{
    group_moments, outcome_candidate, treatment_candidate, CandidateOptions, Method,
};
use crate::linalg::{min_eigenvalue, spectral_norm, SINGULAR_EIGENVALUE};
use crate::subset::{check_dimension, enumerate_subsets, SubsetId};

/// Which model for `X | T` the criterion assumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// `X | T` multivariate normal.
    #[serde(rename = "mn")]
    Normal,
    /// `X | T` Gaussian copula; predictors are replaced by pooled normal scores.
    #[serde(rename = "gc")]
    Copula,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Normal => "mn",
            Variant::Copula => "gc",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mn" | "normal" => Ok(Variant::Normal),
            "gc" | "copula" => Ok(Variant::Copula),
            other => Err(Error::Config(format!("unknown variant `{other}`; use mn or gc"))),
        }
    }
}

/// Estimator choices for one criterion table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriterionConfig {
    pub method_y: Method,
    pub method_t: Method,
    pub candidate: CandidateOptions,
}

impl Default for CriterionConfig {
    fn default() -> Self {
        Self {
            method_y: Method::Sir,
            method_t: Method::Sir,
            candidate: CandidateOptions::default(),
        }
    }
}

/// `Σ_{-A,-A} - Σ_{-A,A} Σ_{A,A}⁻¹ Σ_{A,-A}`, indexed by `-A` in ascending order.
pub fn schur_complement(sigma: &DMatrix<f64>, a: SubsetId) -> Result<DMatrix<f64>> {
    check_square(sigma, a.dimension())?;
    let rest = a.complement();
    let s_rr = block(sigma, rest, rest);
    if a.is_empty() {
        return Ok(s_rr);
    }
    let s_aa = block(sigma, a, a);
    let min_eig = min_eigenvalue(&s_aa);
    if !(min_eig > SINGULAR_EIGENVALUE) {
        return Err(Error::SingularBlock {
            min_eigenvalue: min_eig,
        });
    }
    let chol = s_aa.cholesky().ok_or(Error::SingularBlock {
        min_eigenvalue: min_eig,
    })?;
    let s_ar = block(sigma, a, rest);
    let mut out = s_rr - s_ar.transpose() * chol.solve(&s_ar);
    crate::linalg::symmetrize(&mut out);
    Ok(out)
}

/// One arm's summand, evaluated literally through the Schur complement.
fn arm_term(m_y: &DMatrix<f64>, m_t: &DMatrix<f64>, sigma: &DMatrix<f64>, a: SubsetId) -> Result<f64> {
    let s = schur_complement(sigma, a)?;
    let rest = a.complement();
    let my = subset_rows(m_y, rest);
    let mt = subset_rows(m_t, rest);
    Ok(spectral_norm(&(my.transpose() * s * mt)))
}

/// The criterion for one subset from raw matrices (reference evaluation).
pub fn f_value(
    m_y: &DMatrix<f64>,
    m_t: &DMatrix<f64>,
    sigma0: &DMatrix<f64>,
    sigma1: &DMatrix<f64>,
    a: SubsetId,
) -> Result<f64> {
    let p = a.dimension();
    check_rows(m_y, p, "outcome candidate")?;
    check_rows(m_t, p, "treatment candidate")?;
    if a.is_full() {
        return Ok(0.0);
    }
    Ok(arm_term(m_y, m_t, sigma0, a)? + arm_term(m_y, m_t, sigma1, a)?)
}

/// Noise-free criterion from population covariances and central-subspace
/// bases `β_{Y(t)}` (`p x d_y`) and `β_T` (`p x d_t`).
pub fn population_f(
    sigma0: &DMatrix<f64>,
    sigma1: &DMatrix<f64>,
    beta_y: &DMatrix<f64>,
    beta_t: &DMatrix<f64>,
    a: SubsetId,
) -> Result<f64> {
    f_value(beta_y, beta_t, sigma0, sigma1, a)
}

fn check_square(m: &DMatrix<f64>, p: usize) -> Result<()> {
    if m.nrows() != p || m.ncols() != p {
        return Err(Error::DimensionMismatch(format!(
            "expected a {p}x{p} covariance, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

fn check_rows(m: &DMatrix<f64>, p: usize, what: &str) -> Result<()> {
    if m.nrows() != p {
        return Err(Error::DimensionMismatch(format!(
            "{what} has {} rows, expected {p}",
            m.nrows()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone)]
struct ArmParts {
    sigma: DMatrix<f64>,
    /// `M_Y' Σ M_T`
    base: DMatrix<f64>,
    /// `Σ M_Y`
    u: DMatrix<f64>,
    /// `Σ M_T`
    v: DMatrix<f64>,
    /// every principal block passes the eigenvalue guard (by interlacing)
    all_blocks_regular: bool,
}

/// Precomputed moments for evaluating the criterion on many subsets.
#[derive(Debug, Clone)]
pub struct CriterionEvaluator {
    p: usize,
    arms: [ArmParts; 2],
}

/// Per-thread buffers for [`CriterionEvaluator::evaluate_with`].
#[derive(Debug, Default)]
pub struct Scratch {
    idx: Vec<usize>,
    chol: Vec<f64>,
    wu: Vec<f64>,
    wv: Vec<f64>,
}

impl CriterionEvaluator {
    pub fn new(
        m_y: &DMatrix<f64>,
        m_t: &DMatrix<f64>,
        sigma0: &DMatrix<f64>,
        sigma1: &DMatrix<f64>,
    ) -> Result<Self> {
        let p = m_y.nrows();
        check_dimension(p)?;
        check_rows(m_t, p, "treatment candidate")?;
        check_square(sigma0, p)?;
        check_square(sigma1, p)?;
        let parts = |sigma: &DMatrix<f64>| {
            let u = sigma * m_y;
            let v = sigma * m_t;
            ArmParts {
                base: m_y.transpose() * &v,
                u,
                v,
                all_blocks_regular: min_eigenvalue(sigma) > SINGULAR_EIGENVALUE,
                sigma: sigma.clone(),
            }
        };
        Ok(Self {
            p,
            arms: [parts(sigma0), parts(sigma1)],
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn evaluate(&self, a: SubsetId) -> Result<f64> {
        self.evaluate_with(a, &mut Scratch::default())
    }

    pub fn evaluate_with(&self, a: SubsetId, scratch: &mut Scratch) -> Result<f64> {
        debug_assert_eq!(a.dimension(), self.p);
        if a.is_full() {
            return Ok(0.0);
        }
        let mut total = 0.0;
        for arm in &self.arms {
            total += self.arm_value(arm, a, scratch)?;
        }
        Ok(total)
    }

    fn arm_value(&self, arm: &ArmParts, a: SubsetId, sc: &mut Scratch) -> Result<f64> {
        let dy = arm.u.ncols();
        let dt = arm.v.ncols();
        if a.is_empty() {
            return Ok(spectral_norm(&arm.base));
        }
        sc.idx.clear();
        sc.idx.extend(a.positions());
        let k = sc.idx.len();

        if !arm.all_blocks_regular {
            let min_eig = min_eigenvalue(&block(&arm.sigma, a, a));
            if !(min_eig > SINGULAR_EIGENVALUE) {
                return Err(Error::SingularBlock {
                    min_eigenvalue: min_eig,
                });
            }
        }

        // lower Cholesky factor of Σ_{A,A}, row-major k x k
        sc.chol.clear();
        sc.chol.resize(k * k, 0.0);
        let l = &mut sc.chol;
        for i in 0..k {
            for j in 0..=i {
                let mut s = arm.sigma[(sc.idx[i], sc.idx[j])];
                for q in 0..j {
                    s -= l[i * k + q] * l[j * k + q];
                }
                if i == j {
                    if !(s > 0.0) {
                        return Err(Error::SingularBlock { min_eigenvalue: s });
                    }
                    l[i * k + i] = s.sqrt();
                } else {
                    l[i * k + j] = s / l[j * k + j];
                }
            }
        }

        // W = L⁻¹ B_A for B = U and V (forward substitution, row-major k x d)
        let forward = |b: &DMatrix<f64>, out: &mut Vec<f64>, l: &[f64], idx: &[usize]| {
            let d = b.ncols();
            out.clear();
            out.resize(k * d, 0.0);
            for i in 0..k {
                for c in 0..d {
                    let mut s = b[(idx[i], c)];
                    for q in 0..i {
                        s -= l[i * k + q] * out[q * d + c];
                    }
                    out[i * d + c] = s / l[i * k + i];
                }
            }
        };
        forward(&arm.u, &mut sc.wu, &sc.chol, &sc.idx);
        forward(&arm.v, &mut sc.wv, &sc.chol, &sc.idx);

        let mut kmat = arm.base.clone();
        for r in 0..dy {
            for c in 0..dt {
                let mut s = 0.0;
                for i in 0..k {
                    s += sc.wu[i * dy + r] * sc.wv[i * dt + c];
                }
                kmat[(r, c)] -= s;
            }
        }
        Ok(spectral_norm(&kmat))
    }
}

/// Provenance of a criterion table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableMetadata {
    pub n: usize,
    pub p: usize,
    pub arm: u8,
    pub variant: Variant,
    pub method_y: Method,
    pub method_t: Method,
    /// Slices actually used for the outcome candidate.
    pub h_y: usize,
    /// Slices used for the treatment candidate (treatment levels).
    pub h_t: usize,
    pub ridge: Option<f64>,
}

/// Criterion value for every evaluated subset, in ascending mask order.
#[derive(Debug, Clone, PartialEq)]
pub struct CriterionTable {
    pub metadata: TableMetadata,
    pub entries: Vec<(SubsetId, f64)>,
    /// Subsets whose conditioning block was singular; scored `+inf`.
    pub singular: usize,
}

impl CriterionTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn p(&self) -> usize {
        self.metadata.p
    }

    /// Value for a subset, if it was evaluated.
    pub fn get(&self, a: SubsetId) -> Option<f64> {
        self.entries
            .binary_search_by_key(&a.mask(), |(s, _)| s.mask())
            .ok()
            .map(|i| self.entries[i].1)
    }
}

/// Evaluates the criterion on every subset of `{1..p}`.
pub fn criterion_table(
    d: &Dataset,
    arm: u8,
    variant: Variant,
    config: &CriterionConfig,
) -> Result<CriterionTable> {
    let universe: Vec<SubsetId> = enumerate_subsets(d.p())?.collect();
    criterion_table_over(d, arm, variant, config, &universe)
}

/// Evaluates the criterion on the given subsets (e.g. a pruned universe).
pub fn criterion_table_over(
    d: &Dataset,
    arm: u8,
    variant: Variant,
    config: &CriterionConfig,
    universe: &[SubsetId],
) -> Result<CriterionTable> {
    if arm > 1 {
        return Err(Error::Config(format!("arm must be 0 or 1, got {arm}")));
    }
    check_dimension(d.p())?;
    let transformed;
    let data = match variant {
        Variant::Normal => d,
        Variant::Copula => {
            transformed = transform_dataset(d)?;
            &transformed
        }
    };
    let moments = group_moments(data)?;
    let m_y = outcome_candidate(data, arm, config.method_y, config.candidate)?;
    let m_t = treatment_candidate(data, config.method_t, config.candidate)?;
    let eval = CriterionEvaluator::new(
        &m_y.m,
        &m_t.m,
        &moments.arms[0].sigma,
        &moments.arms[1].sigma,
    )?;

    let mut sorted: Vec<SubsetId> = universe.to_vec();
    sorted.sort_unstable_by_key(|a| a.mask());
    sorted.dedup();
    if let Some(bad) = sorted.iter().find(|a| a.dimension() != d.p()) {
        return Err(Error::DimensionMismatch(format!(
            "subset {bad} has dimension {}, data has p = {}",
            bad.dimension(),
            d.p()
        )));
    }

    let values: Vec<Result<f64>> = sorted
        .par_iter()
        .with_min_len(256)
        .map_init(Scratch::default, |sc, &a| eval.evaluate_with(a, sc))
        .collect();

    let mut singular = 0;
    let mut entries = Vec::with_capacity(sorted.len());
    for (a, v) in sorted.into_iter().zip(values) {
        let v = match v {
            Ok(v) => v,
            Err(Error::SingularBlock { .. }) => {
                singular += 1;
                f64::INFINITY
            }
            Err(e) => return Err(e),
        };
        entries.push((a, v));
    }
    if singular > 0 {
        log::warn!("{singular} subsets had singular conditioning blocks and score +inf");
    }
    Ok(CriterionTable {
        metadata: TableMetadata {
            n: d.n(),
            p: d.p(),
            arm,
            variant,
            method_y: config.method_y,
            method_t: config.method_t,
            h_y: m_y.h,
            h_t: m_t.h,
            ridge: config.candidate.ridge,
        },
        entries,
        singular,
    })
}
