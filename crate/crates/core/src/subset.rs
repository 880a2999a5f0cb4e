//! Index sets over the predictor coordinates, stored as bitmasks.
//!
//! Bit `i` of the mask stands for predictor `X_{i+1}`: all user-facing
//! output is 1-based, all internal arithmetic 0-based.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard cap on the ambient dimension for exhaustive enumeration.
pub const MAX_DIMENSION: usize = 24;

/// Dimension from which a full enumeration is slow enough to warn about.
pub const WARN_DIMENSION: usize = 20;

/// A subset `A` of `{1, ..., p}`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SubsetId {
    mask: u32,
    p: u8,
}

impl SubsetId {
    /// Build from a raw mask. Bits at or above `p` must be clear.
    pub fn new(mask: u32, p: usize) -> Result<Self> {
        check_dimension(p)?;
        if u64::from(mask) >= 1u64 << p {
            return Err(Error::InvalidData(format!(
                "mask {mask:#x} has bits outside of p = {p}"
            )));
        }
        Ok(Self { mask, p: p as u8 })
    }

    /// Unchecked constructor for internal hot loops.
    #[inline]
    pub(crate) fn from_raw(mask: u32, p: usize) -> Self {
        debug_assert!(p <= MAX_DIMENSION && u64::from(mask) < 1u64 << p);
        Self { mask, p: p as u8 }
    }

    pub fn empty(p: usize) -> Self {
        Self::from_raw(0, p)
    }

    pub fn full(p: usize) -> Self {
        Self::from_raw(full_mask(p), p)
    }

    /// Build from 1-based indices.
    pub fn from_indices(indices: &[usize], p: usize) -> Result<Self> {
        check_dimension(p)?;
        let mut mask = 0u32;
        for &i in indices {
            if i == 0 || i > p {
                return Err(Error::InvalidData(format!(
                    "index {i} is outside 1..={p}"
                )));
            }
            mask |= 1 << (i - 1);
        }
        Ok(Self { mask, p: p as u8 })
    }

    #[inline]
    pub fn mask(self) -> u32 {
        self.mask
    }

    #[inline]
    pub fn dimension(self) -> usize {
        self.p as usize
    }

    #[inline]
    pub fn len(self) -> usize {
        self.mask.count_ones() as usize
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.mask == 0
    }

    #[inline]
    pub fn is_full(self) -> bool {
        self.mask == full_mask(self.p as usize)
    }

    /// Membership test for a 1-based index.
    #[inline]
    pub fn contains(self, index: usize) -> bool {
        index >= 1 && index <= self.p as usize && self.mask & (1 << (index - 1)) != 0
    }

    /// `-A`: the complement within `{1, ..., p}`.
    #[inline]
    pub fn complement(self) -> Self {
        Self {
            mask: !self.mask & full_mask(self.p as usize),
            p: self.p,
        }
    }

    #[inline]
    pub fn union(self, other: Self) -> Self {
        Self {
            mask: self.mask | other.mask,
            p: self.p,
        }
    }

    #[inline]
    pub fn intersection(self, other: Self) -> Self {
        Self {
            mask: self.mask & other.mask,
            p: self.p,
        }
    }

    #[inline]
    pub fn difference(self, other: Self) -> Self {
        Self {
            mask: self.mask & !other.mask,
            p: self.p,
        }
    }

    #[inline]
    pub fn is_subset_of(self, other: Self) -> bool {
        self.mask & !other.mask == 0
    }

    /// 1-based indices in ascending order.
    pub fn indices(self) -> Vec<usize> {
        self.positions().map(|i| i + 1).collect()
    }

    /// 0-based positions in ascending order.
    pub fn positions(self) -> impl Iterator<Item = usize> {
        let mut m = self.mask;
        std::iter::from_fn(move || {
            if m == 0 {
                None
            } else {
                let i = m.trailing_zeros() as usize;
                m &= m - 1;
                Some(i)
            }
        })
    }

    /// Lower-case hexadecimal mask, e.g. `0x5` for `{1,3}`.
    pub fn to_hex(self) -> String {
        format!("{:#x}", self.mask)
    }

    /// Compact form used in reports: `(13)` for `{1,3}`, `()` for the empty set.
    /// Indices above 9 are separated by commas to stay unambiguous.
    pub fn compact(self) -> String {
        let idx = self.indices();
        if idx.iter().any(|&i| i > 9) {
            let parts: Vec<String> = idx.iter().map(|i| i.to_string()).collect();
            format!("({})", parts.join(","))
        } else {
            let parts: String = idx.iter().map(|i| i.to_string()).collect();
            format!("({parts})")
        }
    }
}

impl fmt::Debug for SubsetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for SubsetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.indices().iter().map(|i| i.to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

#[inline]
pub(crate) fn full_mask(p: usize) -> u32 {
    if p >= 32 {
        u32::MAX
    } else {
        ((1u64 << p) - 1) as u32
    }
}

pub(crate) fn check_dimension(p: usize) -> Result<()> {
    if p == 0 {
        return Err(Error::EmptyDimension);
    }
    if p > MAX_DIMENSION {
        return Err(Error::DimensionTooLarge {
            p,
            max: MAX_DIMENSION,
        });
    }
    Ok(())
}

/// All `2^p` subsets in ascending mask order, produced lazily.
pub fn enumerate_subsets(p: usize) -> Result<impl ExactSizeIterator<Item = SubsetId>> {
    check_dimension(p)?;
    if p >= WARN_DIMENSION {
        log::warn!("enumerating 2^{p} subsets; expect long run times");
    }
    let count = 1usize << p;
    Ok((0..count).map(move |m| SubsetId::from_raw(m as u32, p)))
}
