//! Ridge-ratio thresholding of a criterion table.
//!
//! Sorted descending, a criterion table has a head of clearly positive values
//! and a tail of near-zero values (the estimated sufficient sets). The ridge
//! ratio `R(k) = (f(A_{k+1}) + c_n) / (f(A_k) + c_n)` dips sharply where the
//! head meets the tail, and everything after its argmin is selected.
//!
//! Positions here are 0-based: with sorted values `v`, `R(0) = c0` and
//! `R(k) = (v[k] + c_n) / (v[k-1] + c_n)` for `1 <= k < N`, so the selected
//! sets are `v[tau..]`. In 1-based subset numbering this is the usual
//! `{A_k : k > tau}`; the ratio sequence has `N` entries, one per subset,
//! because the last ratio compares the last two subsets.

use std::cmp::Ordering;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::collection::{AdjustmentCollection, Source};
use crate::criterion::{CriterionTable, TableMetadata};
use crate::error::{Error, Result};
use crate::subset::SubsetId;

pub const DEFAULT_C0: f64 = 0.6;

/// `0.2 n^{-1/2} log n`.
pub fn default_cn(n: usize) -> f64 {
    let n = n as f64;
    0.2 * n.ln() / n.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectorConfig {
    pub c0: f64,
    pub cn: f64,
}

impl SelectorConfig {
    pub fn new(c0: f64, cn: f64) -> Result<Self> {
        if !(c0 > 0.0 && c0 < 1.0) {
            return Err(Error::Config(format!("c0 must lie in (0, 1), got {c0}")));
        }
        if !(cn > 0.0 && cn.is_finite()) {
            return Err(Error::Config(format!("cn must be positive, got {cn}")));
        }
        Ok(Self { c0, cn })
    }

    /// Defaults for total sample size `n`.
    pub fn for_sample_size(n: usize) -> Self {
        Self {
            c0: DEFAULT_C0,
            cn: default_cn(n),
        }
    }
}

fn descending(a: &(SubsetId, f64), b: &(SubsetId, f64)) -> Ordering {
    b.1.total_cmp(&a.1)
        .then(a.0.len().cmp(&b.0.len()))
        .then(a.0.mask().cmp(&b.0.mask()))
}

/// Entries sorted by descending value; ties go to smaller sets, then lower masks.
pub fn sort_table(entries: &[(SubsetId, f64)]) -> Vec<(SubsetId, f64)> {
    let mut out = entries.to_vec();
    out.sort_by(descending);
    out
}

/// Ridge ratios of descending values; a ratio touching `+inf` is set to 1.
pub fn ridge_ratios(sorted: &[f64], config: &SelectorConfig) -> Vec<f64> {
    let mut out = Vec::with_capacity(sorted.len());
    if sorted.is_empty() {
        return out;
    }
    out.push(config.c0);
    for k in 1..sorted.len() {
        let (num, den) = (sorted[k], sorted[k - 1]);
        let r = if num.is_infinite() || den.is_infinite() {
            1.0
        } else {
            (num + config.cn) / (den + config.cn)
        };
        out.push(r);
    }
    out
}

/// Index of the smallest ratio, first on ties.
pub fn argmin_ratio(ratios: &[f64]) -> usize {
    let mut best = 0;
    for (k, &r) in ratios.iter().enumerate() {
        if r < ratios[best] {
            best = k;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub arm: u8,
    pub config: SelectorConfig,
    /// Subsets in descending criterion order.
    pub order: Vec<SubsetId>,
    /// Criterion values aligned with `order`.
    pub values: Vec<f64>,
    pub ratios: Vec<f64>,
    pub tau: usize,
    pub selected: AdjustmentCollection,
    pub metadata: Option<TableMetadata>,
}

impl SelectionResult {
    /// The selected subsets, in descending criterion order.
    pub fn selected_in_order(&self) -> &[SubsetId] {
        &self.order[self.tau..]
    }

    /// JSON-friendly summary; `head` ratios from each end are kept.
    pub fn document(&self, head: usize) -> SelectionDocument {
        let head_len = head.min(self.ratios.len());
        let tail_start = self.ratios.len().saturating_sub(head);
        let mut selected: Vec<SubsetId> = self.selected.iter().collect();
        selected.sort_by(|a, b| a.len().cmp(&b.len()).then(a.mask().cmp(&b.mask())));
        SelectionDocument {
            t: self.arm,
            tau: self.tau,
            c0: self.config.c0,
            cn: self.config.cn,
            n_subsets: self.order.len(),
            n_selected: self.selected.len(),
            selected: selected.iter().map(|s| s.indices()).collect(),
            selected_masks: selected.iter().map(|s| s.to_hex()).collect(),
            ratios_head: self.ratios[..head_len].to_vec(),
            ratios_tail: self.ratios[tail_start..].to_vec(),
            metadata: self.metadata.clone(),
        }
    }

    /// `k,f_value` rows (1-based `k`) in descending order.
    pub fn write_scree_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["k", "f_value"])?;
        for (k, v) in self.values.iter().enumerate() {
            w.write_record([(k + 1).to_string(), format_value(*v)])?;
        }
        w.flush()?;
        Ok(())
    }

    /// `mask_hex,indices,f_value` rows in descending order; indices are
    /// space separated.
    pub fn write_table_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["mask_hex", "indices", "f_value"])?;
        for (s, v) in self.order.iter().zip(&self.values) {
            let idx: Vec<String> = s.indices().iter().map(|i| i.to_string()).collect();
            w.write_record([s.to_hex(), idx.join(" "), format_value(*v)])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn format_value(v: f64) -> String {
    if v.is_infinite() {
        "inf".to_string()
    } else {
        format!("{v:e}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionDocument {
    pub t: u8,
    pub tau: usize,
    pub c0: f64,
    pub cn: f64,
    pub n_subsets: usize,
    pub n_selected: usize,
    /// Selected sets as sorted 1-based index lists.
    pub selected: Vec<Vec<usize>>,
    pub selected_masks: Vec<String>,
    pub ratios_head: Vec<f64>,
    pub ratios_tail: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub metadata: Option<TableMetadata>,
}

/// Cuts sorted entries at the ridge-ratio argmin.
pub fn select_tail(
    sorted: &[(SubsetId, f64)],
    p: usize,
    arm: u8,
    config: &SelectorConfig,
) -> Result<SelectionResult> {
    if sorted.is_empty() {
        return Err(Error::Config("cannot select from an empty table".into()));
    }
    let order: Vec<SubsetId> = sorted.iter().map(|e| e.0).collect();
    let values: Vec<f64> = sorted.iter().map(|e| e.1).collect();
    let ratios = ridge_ratios(&values, config);
    let tau = argmin_ratio(&ratios);
    let selected = AdjustmentCollection::from_subsets(p, Source::Estimated, order[tau..].iter().copied())?;
    Ok(SelectionResult {
        arm,
        config: *config,
        order,
        values,
        ratios,
        tau,
        selected,
        metadata: None,
    })
}

/// Sorts a criterion table and selects its tail.
///
/// Fails with `AllSingular` when no subset had a regular conditioning block.
pub fn select(table: &CriterionTable, config: &SelectorConfig) -> Result<SelectionResult> {
    if table.is_empty() {
        return Err(Error::Config("cannot select from an empty table".into()));
    }
    if table.entries.iter().all(|e| e.1.is_infinite()) {
        return Err(Error::AllSingular);
    }
    let sorted = sort_table(&table.entries);
    let mut res = select_tail(&sorted, table.p(), table.metadata.arm, config)?;
    res.metadata = Some(table.metadata.clone());
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn s(idx: &[usize], p: usize) -> SubsetId {
        SubsetId::from_indices(idx, p).unwrap()
    }

    #[test]
    fn sort_by_value_then_size() {
        let e = [(s(&[], 2), 3.0), (s(&[1], 2), 1.0), (s(&[2], 2), 2.0)];
        let order: Vec<_> = sort_table(&e).into_iter().map(|x| x.0).collect();
        assert_eq!(order, vec![s(&[], 2), s(&[2], 2), s(&[1], 2)]);

        let e = [(s(&[1, 2], 2), 0.0), (s(&[2], 2), 0.0), (s(&[1], 2), 0.0), (s(&[], 2), 0.0)];
        let order: Vec<_> = sort_table(&e).into_iter().map(|x| x.0).collect();
        assert_eq!(order, vec![s(&[], 2), s(&[1], 2), s(&[2], 2), s(&[1, 2], 2)]);
    }

    #[test]
    fn ratio_vector() {
        let cfg = SelectorConfig::new(0.6, 0.01).unwrap();
        let r = ridge_ratios(&[1.0, 0.9, 0.001, 0.0005], &cfg);
        let want = [0.6, 0.9010, 0.0121, 0.9545];
        for (a, b) in r.iter().zip(want) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-3);
        }
        assert_eq!(argmin_ratio(&r), 2);
    }

    #[test]
    fn zero_table_selects_everything() {
        let cfg = SelectorConfig::new(0.6, 0.01).unwrap();
        let e: Vec<_> = crate::subset::enumerate_subsets(3).unwrap().map(|a| (a, 0.0)).collect();
        let res = select_tail(&sort_table(&e), 3, 0, &cfg).unwrap();
        assert_eq!(res.tau, 0);
        assert!(res.ratios[1..].iter().all(|&r| r == 1.0));
        assert_eq!(res.selected.len(), 8);
    }

    #[test]
    fn two_level_table() {
        let cfg = SelectorConfig::new(0.6, 0.01).unwrap();
        let mut v = vec![1.0; 100];
        v.extend(vec![0.0; 100]);
        assert_eq!(argmin_ratio(&ridge_ratios(&v, &cfg)), 100);
    }

    #[test]
    fn infinite_values_do_not_set_the_cut() {
        let cfg = SelectorConfig::new(0.6, 0.01).unwrap();
        let r = ridge_ratios(&[f64::INFINITY, f64::INFINITY, 1.0, 1.0, 0.0], &cfg);
        assert_eq!(&r[1..3], &[1.0, 1.0]);
        assert_eq!(argmin_ratio(&r), 4);
    }

    #[test]
    fn default_cn_value() {
        assert_abs_diff_eq!(default_cn(800), 0.2 * 800f64.ln() / 800f64.sqrt(), epsilon = 1e-15);
        assert!(SelectorConfig::new(1.0, 0.1).is_err());
        assert!(SelectorConfig::new(0.5, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn joint_scaling_keeps_tau(vals in proptest::collection::vec(0.0f64..10.0, 2..60), scale in 0.01f64..100.0) {
            let mut v = vals.clone();
            v.sort_by(|a, b| b.total_cmp(a));
            let a = ridge_ratios(&v, &SelectorConfig { c0: 0.6, cn: 0.05 });
            let w: Vec<f64> = v.iter().map(|x| x * scale).collect();
            let b = ridge_ratios(&w, &SelectorConfig { c0: 0.6, cn: 0.05 * scale });
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-9);
            }
            // exact ties in the scaled sequence can differ only by rounding
            let (ta, tb) = (argmin_ratio(&a), argmin_ratio(&b));
            prop_assert!(ta == tb || (a[ta] - a[tb]).abs() < 1e-9);
        }

        #[test]
        fn sorted_nonincreasing(vals in proptest::collection::vec(0.0f64..5.0, 16)) {
            let e: Vec<_> = crate::subset::enumerate_subsets(4).unwrap().zip(vals).collect();
            let sorted = sort_table(&e);
            prop_assert!(sorted.windows(2).all(|w| w[0].1 >= w[1].1));
        }
    }
}
