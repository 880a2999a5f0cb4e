//! Structural reports on a collection of adjustment sets, search-space
//! pruning, and a matching estimator of the average treatment effect.
//!
//! All reports work on any collection, oracle or estimated. Identities that
//! hold for exact collections (e.g. a unique minimal set belongs to the
//! collection) are checked and reported as warnings rather than errors.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::collection::{AdjustmentCollection, Source};
use crate::data::{split_by_treatment, Dataset};
use crate::error::{Error, Result};
use crate::subset::{enumerate_subsets, full_mask, SubsetId};

pub const DEFAULT_MAX_BLOCK: usize = 3;

/// `has[m]`: some member is a subset of mask `m`.
fn dominated(c: &AdjustmentCollection) -> Vec<bool> {
    let n = 1usize << c.p();
    let mut has = vec![false; n];
    for m in 0..n {
        let mut v = c.contains_mask(m as u32);
        let mut rest = m;
        while !v && rest != 0 {
            let b = rest & rest.wrapping_neg();
            v = has[m ^ b];
            rest ^= b;
        }
        has[m] = v;
    }
    has
}

/// Members with no proper subset in the collection, in ascending mask order.
pub fn locally_minimal(c: &AdjustmentCollection) -> Vec<SubsetId> {
    let has = dominated(c);
    c.iter()
        .filter(|a| {
            let m = a.mask() as usize;
            a.positions().all(|i| !has[m ^ (1 << i)])
        })
        .collect()
}

/// Intersection of the given sets; the empty set when there are none.
pub fn intersection_of(sets: &[SubsetId], p: usize) -> SubsetId {
    match sets.split_first() {
        None => SubsetId::empty(p),
        Some((first, rest)) => rest.iter().fold(*first, |acc, s| acc.intersection(*s)),
    }
}

/// The locally minimal set, if there is exactly one.
pub fn unique_minimal(c: &AdjustmentCollection) -> Option<SubsetId> {
    match locally_minimal(c).as_slice() {
        [only] => Some(*only),
        _ => None,
    }
}

/// Members all of whose supersets are also members.
pub fn upward_closed_members(c: &AdjustmentCollection) -> AdjustmentCollection {
    let p = c.p();
    let full = full_mask(p) as usize;
    let n = 1usize << p;
    let mut up = vec![false; n];
    let mut out = AdjustmentCollection::new(p, c.source()).expect("dimension already checked");
    for m in (0..n).rev() {
        let mut v = c.contains_mask(m as u32);
        let mut missing = full & !m;
        while v && missing != 0 {
            let b = missing & missing.wrapping_neg();
            v = up[m | b];
            missing ^= b;
        }
        up[m] = v;
        if v {
            out.insert(SubsetId::from_raw(m as u32, p));
        }
    }
    out
}

/// Indices shown to be a non-collider on some path.
///
/// `i` qualifies when some member `A ∋ i` has `A∖{i}` outside the
/// collection, or when some upward-closed member `A ∋ i` has `A∖{i}` in the
/// collection but not upward closed.
pub fn noncollider_indices(c: &AdjustmentCollection) -> SubsetId {
    let upward = upward_closed_members(c);
    noncolliders_with(c, &upward)
}

fn noncolliders_with(c: &AdjustmentCollection, upward: &AdjustmentCollection) -> SubsetId {
    let p = c.p();
    let mut found = 0u32;
    for a in c.iter() {
        for i in a.positions() {
            if found & (1 << i) != 0 {
                continue;
            }
            let smaller = a.mask() & !(1 << i);
            let rule1 = !c.contains_mask(smaller);
            let rule2 = upward.contains_mask(a.mask())
                && c.contains_mask(smaller)
                && !upward.contains_mask(smaller);
            if rule1 || rule2 {
                found |= 1 << i;
            }
        }
    }
    SubsetId::from_raw(found, p)
}

/// Sets `B` (of size at most `max_block`) made of colliders on a common path:
/// for some member `A` disjoint from `B`, `A ∪ B` is not a member while
/// `A ∪ C` is for every proper subset `C` of `B`.
pub fn collider_blocks(c: &AdjustmentCollection, max_block: usize) -> Vec<SubsetId> {
    let p = c.p();
    let members: Vec<u32> = c.iter().map(|a| a.mask()).collect();
    let mut candidates: Vec<u32> = enumerate_subsets(p)
        .expect("dimension already checked")
        .map(|b| b.mask())
        .filter(|b| *b != 0 && (b.count_ones() as usize) <= max_block)
        .collect();
    candidates.sort_by_key(|b| (b.count_ones(), *b));
    candidates
        .into_par_iter()
        .filter(|&b| {
            members.iter().any(|&a| {
                if a & b != 0 || c.contains_mask(a | b) {
                    return false;
                }
                // every nonempty proper submask of b
                let mut sub = (b - 1) & b;
                while sub != 0 {
                    if !c.contains_mask(a | sub) {
                        return false;
                    }
                    sub = (sub - 1) & b;
                }
                true
            })
        })
        .map(|b| SubsetId::from_raw(b, p))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructureReport {
    pub p: usize,
    pub source: Source,
    pub collection_size: usize,
    pub locally_minimal: Vec<SubsetId>,
    pub intersection_of_minimal: SubsetId,
    pub unique_minimal: Option<SubsetId>,
    pub upward_closed: AdjustmentCollection,
    pub collider_blocks: Vec<SubsetId>,
    /// Union of the collider blocks.
    pub colliders: SubsetId,
    /// `colliders` minus the detected non-colliders.
    pub refined_colliders: SubsetId,
    pub noncolliders: SubsetId,
    /// Identities that fail on this collection (expected only for estimates).
    pub warnings: Vec<String>,
}

impl StructureReport {
    pub fn new(c: &AdjustmentCollection, max_block: usize) -> Self {
        let p = c.p();
        let minimal = locally_minimal(c);
        let intersection = intersection_of(&minimal, p);
        let unique = match minimal.as_slice() {
            [only] => Some(*only),
            _ => None,
        };
        let upward = upward_closed_members(c);
        let noncolliders = noncolliders_with(c, &upward);
        let blocks = collider_blocks(c, max_block);
        let colliders = blocks
            .iter()
            .fold(SubsetId::empty(p), |acc, b| acc.union(*b));
        let refined = colliders.difference(noncolliders);

        let mut warnings = Vec::new();
        if c.is_empty() {
            warnings.push("collection is empty".to_string());
        }
        if unique.is_some() != (!c.is_empty() && c.contains(intersection)) {
            warnings.push(format!(
                "intersection of minimal sets {intersection} {} the collection but {} unique minimal set",
                if c.contains(intersection) { "is in" } else { "is not in" },
                if unique.is_some() { "there is a" } else { "there is no" },
            ));
        }
        Self {
            p,
            source: c.source(),
            collection_size: c.len(),
            locally_minimal: minimal,
            intersection_of_minimal: intersection,
            unique_minimal: unique,
            upward_closed: upward,
            collider_blocks: blocks,
            colliders,
            refined_colliders: refined,
            noncolliders,
            warnings,
        }
    }

    pub fn document(&self) -> ReportDocument {
        let lists = |v: &[SubsetId]| v.iter().map(|s| s.indices()).collect();
        ReportDocument {
            p: self.p,
            source: self.source,
            collection_size: self.collection_size,
            locally_minimal: lists(&self.locally_minimal),
            intersection_of_minimal: self.intersection_of_minimal.indices(),
            unique_minimal: self.unique_minimal.map(|s| s.indices()),
            upward_closed_size: self.upward_closed.len(),
            collider_blocks: lists(&self.collider_blocks),
            colliders: self.colliders.indices(),
            refined_colliders: self.refined_colliders.indices(),
            noncolliders: self.noncolliders.indices(),
            warnings: self.warnings.clone(),
        }
    }
}

/// JSON form of a [`StructureReport`] with sorted 1-based index lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub p: usize,
    pub source: Source,
    pub collection_size: usize,
    pub locally_minimal: Vec<Vec<usize>>,
    pub intersection_of_minimal: Vec<usize>,
    pub unique_minimal: Option<Vec<usize>>,
    pub upward_closed_size: usize,
    pub collider_blocks: Vec<Vec<usize>>,
    pub colliders: Vec<usize>,
    pub refined_colliders: Vec<usize>,
    pub noncolliders: Vec<usize>,
    pub warnings: Vec<String>,
}

/// Prior structural knowledge used to shrink the enumerated universe.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hints {
    /// Indices every sufficient set must contain.
    pub known_forks: Vec<usize>,
    /// Indices that are colliders on every path; left out of every candidate.
    pub pure_colliders: Vec<usize>,
    /// Indices that are non-colliders on every path; put into every candidate.
    pub pure_noncolliders: Vec<usize>,
}

impl Hints {
    pub fn universe(&self, p: usize) -> Result<Vec<SubsetId>> {
        prune_hints(
            p,
            SubsetId::from_indices(&self.known_forks, p)?,
            SubsetId::from_indices(&self.pure_colliders, p)?,
            SubsetId::from_indices(&self.pure_noncolliders, p)?,
        )
    }
}

/// Candidate subsets consistent with the hints, in ascending mask order.
pub fn prune_hints(
    p: usize,
    known_forks: SubsetId,
    pure_colliders: SubsetId,
    pure_noncolliders: SubsetId,
) -> Result<Vec<SubsetId>> {
    let clash = |a: SubsetId, b: SubsetId, first: &'static str, second: &'static str| {
        match a.intersection(b).indices().first() {
            Some(&index) => Err(Error::ContradictoryHints { index, first, second }),
            None => Ok(()),
        }
    };
    clash(known_forks, pure_colliders, "known_forks", "pure_colliders")?;
    clash(pure_noncolliders, pure_colliders, "pure_noncolliders", "pure_colliders")?;
    let forced = known_forks.union(pure_noncolliders);
    Ok(enumerate_subsets(p)?
        .filter(|a| forced.is_subset_of(*a) && a.intersection(pure_colliders).is_empty())
        .collect())
}

/// Average treatment effect by one-to-one nearest-neighbour matching.
///
/// Each unit's missing potential outcome is the observed outcome of its
/// nearest unit in the other arm: on the columns `a1` when imputing `Y(1)`
/// and `a0` when imputing `Y(0)`. Columns are standardized by their
/// full-sample standard deviation, matching is with replacement, and ties go
/// to the lowest row index. An empty set imputes the other arm's mean.
pub fn estimate_ate(d: &Dataset, a0: SubsetId, a1: SubsetId) -> Result<f64> {
    for a in [a0, a1] {
        if a.dimension() != d.p() {
            return Err(Error::DimensionMismatch(format!(
                "subset {a} has dimension {}, data has p = {}",
                a.dimension(),
                d.p()
            )));
        }
    }
    let (g0, g1) = split_by_treatment(d)?;
    let x = d.x();
    let y = d.y();
    let n = d.n();
    let scale: Vec<f64> = (0..d.p())
        .map(|j| {
            let col = x.column(j);
            let mean = col.mean();
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            if var > 0.0 {
                var.sqrt()
            } else {
                1.0
            }
        })
        .collect();

    let impute = |unit: usize, pool: &[usize], a: SubsetId| -> f64 {
        if a.is_empty() {
            return pool.iter().map(|&r| y[r]).sum::<f64>() / pool.len() as f64;
        }
        let cols: Vec<usize> = a.positions().collect();
        let mut best = (f64::INFINITY, usize::MAX);
        for &r in pool {
            let dist: f64 = cols
                .iter()
                .map(|&j| ((x[(unit, j)] - x[(r, j)]) / scale[j]).powi(2))
                .sum();
            if dist < best.0 || (dist == best.0 && r < best.1) {
                best = (dist, r);
            }
        }
        y[best.1]
    };

    let mut total = 0.0;
    for i in 0..n {
        let (y1, y0) = if d.t()[i] == 1 {
            (y[i], impute(i, &g0.rows, a0))
        } else {
            (impute(i, &g1.rows, a1), y[i])
        };
        total += y1 - y0;
    }
    Ok(total / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn s(idx: &[usize], p: usize) -> SubsetId {
        SubsetId::from_indices(idx, p).unwrap()
    }

    fn coll(p: usize, sets: &[&[usize]]) -> AdjustmentCollection {
        AdjustmentCollection::from_subsets(p, Source::Oracle, sets.iter().map(|x| s(x, p))).unwrap()
    }

    fn everything(p: usize) -> AdjustmentCollection {
        AdjustmentCollection::from_subsets(p, Source::Oracle, enumerate_subsets(p).unwrap()).unwrap()
    }

    #[test]
    fn trivial_collections() {
        let c = coll(3, &[&[]]);
        assert_eq!(locally_minimal(&c), vec![s(&[], 3)]);
        assert!(upward_closed_members(&c).is_empty());

        let f = everything(3);
        assert_eq!(unique_minimal(&f), Some(s(&[], 3)));
        assert_eq!(upward_closed_members(&f).len(), 8);
        assert!(noncollider_indices(&f).is_empty());
        assert!(collider_blocks(&f, 3).is_empty());
    }

    #[test]
    fn pair_block() {
        // {∅, 1, 2} without {1,2}
        let c = coll(2, &[&[], &[1], &[2]]);
        assert_eq!(collider_blocks(&c, 3), vec![s(&[1], 2), s(&[2], 2), s(&[1, 2], 2)]);
        // only ∅ and {1}: {2} is a block through ∅, the pair needs {2} in the collection
        let c = coll(2, &[&[], &[1]]);
        assert_eq!(collider_blocks(&c, 3), vec![s(&[2], 2)]);
    }

    #[test]
    fn pruning_counts() {
        let u = prune_hints(4, s(&[1], 4), s(&[], 4), s(&[], 4)).unwrap();
        assert_eq!(u.len(), 8);
        assert_eq!(prune_hints(4, s(&[], 4), s(&[], 4), s(&[], 4)).unwrap().len(), 16);
        let u = prune_hints(4, s(&[1], 4), s(&[3], 4), s(&[2], 4)).unwrap();
        assert_eq!(u.len(), 2);
        assert!(matches!(
            prune_hints(4, s(&[1], 4), s(&[1], 4), s(&[], 4)),
            Err(Error::ContradictoryHints { index: 1, .. })
        ));
    }

    #[test]
    fn hints_json() {
        let h: Hints = serde_json::from_str(r#"{"known_forks":[1]}"#).unwrap();
        assert_eq!(h.universe(3).unwrap().len(), 4);
        assert!(serde_json::from_str::<Hints>(r#"{"forks":[1]}"#).is_err());
    }

    #[test]
    fn ate_shared_outcomes_is_zero() {
        let x = DMatrix::from_row_slice(4, 1, &[0.0, 1.0, 0.0, 1.0]);
        let d = Dataset::new(x, vec![0, 0, 1, 1], vec![5.0, 7.0, 5.0, 7.0]).unwrap();
        assert_eq!(estimate_ate(&d, s(&[1], 1), s(&[1], 1)).unwrap(), 0.0);
    }

    #[test]
    fn ate_empty_sets_give_mean_difference() {
        let x = DMatrix::from_row_slice(4, 1, &[0.0, 1.0, 2.0, 3.0]);
        let d = Dataset::new(x, vec![0, 0, 1, 1], vec![1.0, 3.0, 4.0, 6.0]).unwrap();
        assert_eq!(estimate_ate(&d, s(&[], 1), s(&[], 1)).unwrap(), 3.0);
    }

    #[test]
    fn ate_ties_go_to_lowest_row() {
        // unit 2 is equidistant from rows 0 and 1
        let x = DMatrix::from_row_slice(3, 1, &[0.0, 2.0, 1.0]);
        let d = Dataset::new(x, vec![0, 0, 1], vec![10.0, 20.0, 0.0]).unwrap();
        // Y(1) imputed for rows 0, 1 from row 2 (0.0); Y(0) for row 2 is row 0's 10.0
        let ate = estimate_ate(&d, s(&[1], 1), s(&[1], 1)).unwrap();
        assert_eq!(ate, ((0.0 - 10.0) + (0.0 - 20.0) + (0.0 - 10.0)) / 3.0);
    }

    proptest! {
        #[test]
        fn minimal_sets_cover_and_are_antichain(masks in proptest::collection::btree_set(0u32..64, 1..30)) {
            let c = AdjustmentCollection::from_subsets(6, Source::Estimated, masks.iter().map(|&m| SubsetId::new(m, 6).unwrap())).unwrap();
            let mins = locally_minimal(&c);
            for (i, a) in mins.iter().enumerate() {
                prop_assert!(c.contains(*a));
                for b in &mins[i + 1..] {
                    prop_assert!(!a.is_subset_of(*b) && !b.is_subset_of(*a));
                }
            }
            for a in c.iter() {
                prop_assert!(mins.iter().any(|m| m.is_subset_of(a)));
            }
            let up = upward_closed_members(&c);
            for a in up.iter() {
                for i in 1..=6 {
                    let bigger = a.union(s(&[i], 6));
                    prop_assert!(up.contains(bigger));
                }
            }
            let report = StructureReport::new(&c, 3);
            prop_assert!(report.refined_colliders.is_subset_of(report.colliders));
            prop_assert!(report.refined_colliders.intersection(report.noncolliders).is_empty());
        }
    }
}
