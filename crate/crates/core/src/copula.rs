//! Gaussian-copula front end.
//!
//! Each predictor is mapped to normal scores within each treatment arm, and
//! the treated-arm scores are then pooled onto the control-arm scale by a
//! truncated least-squares fit. Everything here depends on the data only
//! through within-arm ranks, so the output is unchanged by any strictly
//! increasing transform of a predictor column.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::{split_by_treatment, Dataset, GroupView};
use crate::error::Result;

/// Observations with a score at or beyond this magnitude are dropped from
/// the pooling fit (the 97.5% standard normal quantile).
pub fn truncation_threshold() -> f64 {
    standard_normal().inverse_cdf(0.975)
}

/// Minimum number of untruncated observations for a pooling fit.
pub const MIN_POOLING_OBSERVATIONS: usize = 10;

fn standard_normal() -> Normal {
    Normal::standard()
}

/// Standard normal quantile function.
pub fn normal_quantile(u: f64) -> f64 {
    standard_normal().inverse_cdf(u)
}

/// Standard normal distribution function.
pub fn normal_cdf(z: f64) -> f64 {
    standard_normal().cdf(z)
}

/// Normal scores of `column[group.rows]`, in the order of `group.rows`.
///
/// Midranks break ties; the empirical distribution function is shrunk by
/// `n_s / (n_s + 1)` so every score is finite.
pub fn normal_scores(column: &[f64], group: &GroupView) -> Vec<f64> {
    let values: Vec<f64> = group.rows.iter().map(|&r| column[r]).collect();
    let n = values.len() as f64;
    midranks(&values)
        .into_iter()
        .map(|r| normal_quantile(r / (n + 1.0)))
        .collect()
}

/// 1-based midranks (average rank within tie groups).
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let m = values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; m];
    let mut pos = 0;
    while pos < m {
        let mut end = pos + 1;
        while end < m && values[order[end]] == values[order[pos]] {
            end += 1;
        }
        // positions pos..end hold ranks pos+1..=end
        let mid = (pos + 1 + end) as f64 / 2.0;
        for &i in &order[pos..end] {
            ranks[i] = mid;
        }
        pos = end;
    }
    ranks
}

/// A fitted step function from data values to normal scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    knots: Vec<f64>,
    scores: Vec<f64>,
}

impl ScoreTable {
    /// Builds the table from one arm's column and its scores.
    pub fn new(values: &[f64], scores: &[f64]) -> Self {
        let mut pairs: Vec<(f64, f64)> = values.iter().copied().zip(scores.iter().copied()).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        pairs.dedup_by(|a, b| a.0 == b.0);
        let (knots, scores) = pairs.into_iter().unzip();
        Self { knots, scores }
    }

    /// Score at the largest knot not above `v`; values below the first knot
    /// take the first score.
    pub fn eval(&self, v: f64) -> f64 {
        let idx = self.knots.partition_point(|&k| k <= v);
        self.scores[idx.saturating_sub(1)]
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }
}

/// Affine map `a * z1 + b` putting treated-arm scores on the control scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoolFit {
    pub a: f64,
    pub b: f64,
    /// Observations that survived truncation.
    pub used: usize,
    /// The fit fell back to `(1, 0)`.
    pub degenerate: bool,
}

/// Least squares of `z0` on `z1` over the observations where both scores
/// are below the truncation threshold in magnitude.
///
/// `z0[i]` and `z1[i]` are the control- and treated-arm score functions
/// evaluated at the same observation.
pub fn pool_transforms(z0: &[f64], z1: &[f64]) -> PoolFit {
    debug_assert_eq!(z0.len(), z1.len());
    let q = truncation_threshold();
    let kept: Vec<(f64, f64)> = z0
        .iter()
        .zip(z1)
        .filter(|(a, b)| a.abs().max(b.abs()) < q)
        .map(|(&a, &b)| (a, b))
        .collect();
    let used = kept.len();
    let fallback = PoolFit {
        a: 1.0,
        b: 0.0,
        used,
        degenerate: true,
    };
    if used < MIN_POOLING_OBSERVATIONS {
        log::warn!("pooling fit has only {used} untruncated observations; using (1, 0)");
        return fallback;
    }
    let k = used as f64;
    let mean0 = kept.iter().map(|p| p.0).sum::<f64>() / k;
    let mean1 = kept.iter().map(|p| p.1).sum::<f64>() / k;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(r, s) in &kept {
        sxy += (s - mean1) * (r - mean0);
        sxx += (s - mean1) * (s - mean1);
    }
    if !(sxx / k > 1e-12) {
        log::warn!("pooling regressor has zero variance; using (1, 0)");
        return fallback;
    }
    let a = sxy / sxx;
    let b = mean0 - a * mean1;
    if !a.is_finite() || !b.is_finite() {
        return fallback;
    }
    PoolFit {
        a,
        b,
        used,
        degenerate: false,
    }
}

/// Per-coordinate score tables and pooling coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CopulaTransform {
    pub tables: Vec<[ScoreTable; 2]>,
    pub pooling: Vec<PoolFit>,
    pub threshold: f64,
}

impl CopulaTransform {
    /// Fits the transform and returns it with the transformed predictors.
    pub fn fit(d: &Dataset) -> Result<(Self, DMatrix<f64>)> {
        let (g0, g1) = split_by_treatment(d)?;
        let (n, p) = (d.n(), d.p());
        let mut out = DMatrix::zeros(n, p);
        let mut tables = Vec::with_capacity(p);
        let mut pooling = Vec::with_capacity(p);
        for c in 0..p {
            let column: Vec<f64> = d.x().column(c).iter().copied().collect();
            let s0 = normal_scores(&column, &g0);
            let s1 = normal_scores(&column, &g1);
            let t0 = ScoreTable::new(&g0.select(&column), &s0);
            let t1 = ScoreTable::new(&g1.select(&column), &s1);

            // both score functions on every observation; own-arm values are
            // exact, cross-arm values come from the step lookup
            let mut z0 = vec![0.0; n];
            let mut z1 = vec![0.0; n];
            for (k, &r) in g0.rows.iter().enumerate() {
                z0[r] = s0[k];
                z1[r] = t1.eval(column[r]);
            }
            for (k, &r) in g1.rows.iter().enumerate() {
                z1[r] = s1[k];
                z0[r] = t0.eval(column[r]);
            }
            let fit = pool_transforms(&z0, &z1);
            for &r in &g0.rows {
                out[(r, c)] = z0[r];
            }
            for &r in &g1.rows {
                out[(r, c)] = fit.a * z1[r] + fit.b;
            }
            tables.push([t0, t1]);
            pooling.push(fit);
        }
        Ok((
            Self {
                tables,
                pooling,
                threshold: truncation_threshold(),
            },
            out,
        ))
    }
}

/// Replaces every predictor by its pooled normal-score estimate.
pub fn transform_dataset(d: &Dataset) -> Result<Dataset> {
    let (_, x) = CopulaTransform::fit(d)?;
    d.with_predictors(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn group(rows: Vec<usize>) -> GroupView {
        GroupView { arm: 0, rows }
    }

    #[test]
    fn three_point_scores() {
        let s = normal_scores(&[1.0, 2.0, 3.0], &group(vec![0, 1, 2]));
        assert_relative_eq!(s[0], normal_quantile(0.25), epsilon = 1e-15);
        assert_eq!(s[1], 0.0);
        assert_relative_eq!(s[2], normal_quantile(0.75), epsilon = 1e-15);
        assert_relative_eq!(s[0], -0.674_489_750_196_081_7, epsilon = 1e-12);
    }

    #[test]
    fn binary_column_midranks() {
        let s = normal_scores(&[0.0, 0.0, 1.0, 1.0], &group(vec![0, 1, 2, 3]));
        assert_eq!(midranks(&[0.0, 0.0, 1.0, 1.0]), vec![1.5, 1.5, 3.5, 3.5]);
        assert_relative_eq!(s[0], normal_quantile(0.3), epsilon = 1e-15);
        assert_relative_eq!(s[3], normal_quantile(0.7), epsilon = 1e-15);
        assert_eq!(s[0], s[1]);
    }

    #[test]
    fn scores_ignore_monotone_maps() {
        let v = [0.3, -1.2, 5.0, 2.2, 0.0];
        let w: Vec<f64> = v.iter().map(|x: &f64| x.exp() * 3.0 + 1.0).collect();
        let g = group(vec![0, 1, 2, 3, 4]);
        assert_eq!(normal_scores(&v, &g), normal_scores(&w, &g));
    }

    #[test]
    fn step_lookup() {
        let t = ScoreTable::new(&[3.0, 1.0, 2.0], &[0.3, 0.1, 0.2]);
        assert_eq!(t.eval(0.5), 0.1);
        assert_eq!(t.eval(1.0), 0.1);
        assert_eq!(t.eval(1.7), 0.1);
        assert_eq!(t.eval(2.0), 0.2);
        assert_eq!(t.eval(9.0), 0.3);
    }

    #[test]
    fn pooling_identity_and_affine() {
        let z1: Vec<f64> = (0..40).map(|i| -1.5 + 3.0 * i as f64 / 39.0).collect();
        let fit = pool_transforms(&z1, &z1);
        assert_relative_eq!(fit.a, 1.0, epsilon = 1e-12);
        assert_relative_eq!(fit.b, 0.0, epsilon = 1e-12);
        assert!(!fit.degenerate);

        // z0 = 2 z1 + 1, kept inside the truncation window
        let z1: Vec<f64> = (0..40).map(|i| -1.4 + 1.8 * i as f64 / 39.0).collect();
        let z0: Vec<f64> = z1.iter().map(|z| 2.0 * z + 1.0).collect();
        assert!(z0.iter().all(|z| z.abs() < truncation_threshold()));
        let fit = pool_transforms(&z0, &z1);
        assert_relative_eq!(fit.a, 2.0, epsilon = 1e-12);
        assert_relative_eq!(fit.b, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn pooling_falls_back_when_degenerate() {
        let fit = pool_transforms(&[0.1; 5], &[0.2; 5]);
        assert!(fit.degenerate);
        assert_eq!((fit.a, fit.b), (1.0, 0.0));
        let fit = pool_transforms(&[0.1; 20], &[0.2; 20]);
        assert!(fit.degenerate);
    }

    #[test]
    fn constant_column_maps_to_zero() {
        let n = 30;
        let x = DMatrix::from_fn(n, 2, |i, j| if j == 0 { 4.0 } else { i as f64 });
        let t: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        let d = Dataset::new(x, t, vec![0.0; n]).unwrap();
        let (tr, z) = CopulaTransform::fit(&d).unwrap();
        assert!(tr.pooling[0].degenerate);
        assert!(z.column(0).iter().all(|&v| v == 0.0));
        assert!(!tr.pooling[1].degenerate);
    }
}
