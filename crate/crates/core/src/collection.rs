//! Collections of adjustment sets over `{1..p}`, stored as a bitset on the
//! `2^p` masks.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::subset::{check_dimension, SubsetId};

/// Where a collection came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Estimated,
    Oracle,
}

#[derive(Clone, PartialEq, Eq)]
pub struct AdjustmentCollection {
    p: usize,
    bits: Vec<u64>,
    len: usize,
    source: Source,
}

impl AdjustmentCollection {
    pub fn new(p: usize, source: Source) -> Result<Self> {
        check_dimension(p)?;
        let words = ((1usize << p) + 63) / 64;
        Ok(Self {
            p,
            bits: vec![0; words],
            len: 0,
            source,
        })
    }

    pub fn from_subsets(p: usize, source: Source, sets: impl IntoIterator<Item = SubsetId>) -> Result<Self> {
        let mut c = Self::new(p, source)?;
        for s in sets {
            c.insert(s);
        }
        Ok(c)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn source(&self) -> Source {
        self.source
    }

    /// Inserts `s`; returns whether it was new.
    pub fn insert(&mut self, s: SubsetId) -> bool {
        assert_eq!(s.dimension(), self.p, "subset dimension differs from collection");
        let m = s.mask() as usize;
        let (w, b) = (m / 64, m % 64);
        let fresh = self.bits[w] & (1 << b) == 0;
        if fresh {
            self.bits[w] |= 1 << b;
            self.len += 1;
        }
        fresh
    }

    pub fn remove(&mut self, s: SubsetId) -> bool {
        let m = s.mask() as usize;
        let (w, b) = (m / 64, m % 64);
        let present = self.bits[w] & (1 << b) != 0;
        if present {
            self.bits[w] &= !(1 << b);
            self.len -= 1;
        }
        present
    }

    pub fn contains(&self, s: SubsetId) -> bool {
        s.dimension() == self.p && self.contains_mask(s.mask())
    }

    pub(crate) fn contains_mask(&self, m: u32) -> bool {
        let m = m as usize;
        self.bits[m / 64] & (1 << (m % 64)) != 0
    }

    /// Members in ascending mask order.
    pub fn iter(&self) -> impl Iterator<Item = SubsetId> + '_ {
        let p = self.p;
        self.bits.iter().enumerate().flat_map(move |(w, &word)| {
            let mut word = word;
            std::iter::from_fn(move || {
                if word == 0 {
                    return None;
                }
                let b = word.trailing_zeros() as usize;
                word &= word - 1;
                Some(SubsetId::from_raw((w * 64 + b) as u32, p))
            })
        })
    }

    pub fn intersection_len(&self, other: &Self) -> usize {
        self.bits
            .iter()
            .zip(&other.bits)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    pub fn intersection(&self, other: &Self) -> Self {
        let bits: Vec<u64> = self.bits.iter().zip(&other.bits).map(|(a, b)| a & b).collect();
        let len = bits.iter().map(|w| w.count_ones() as usize).sum();
        Self {
            p: self.p,
            bits,
            len,
            source: self.source,
        }
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.bits.iter().zip(&other.bits).all(|(a, b)| a & !b == 0)
    }

    /// `{A : A ⊇ base}`.
    pub fn supersets_of(base: SubsetId, source: Source) -> Result<Self> {
        let p = base.dimension();
        let mut c = Self::new(p, source)?;
        let free = base.complement().mask();
        // walk the submasks of the free coordinates
        let mut sub = free;
        loop {
            c.insert(SubsetId::from_raw(base.mask() | sub, p));
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & free;
        }
        Ok(c)
    }
}

impl fmt::Debug for AdjustmentCollection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AdjustmentCollection(p={}, {:?}, ", self.p, self.source)?;
        f.debug_set().entries(self.iter()).finish()?;
        f.write_str(")")
    }
}
