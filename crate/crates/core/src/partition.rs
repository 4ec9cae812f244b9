//! Consecutive partitions of index sets and the reduced index set.
//!
//! Indices are 1-based throughout this module.

use serde::{Deserialize, Serialize};

use crate::error::{FtcError, Result};

/// A maximal run `start..=end` of consecutive integers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub start: usize,
    pub end: usize,
}

impl Block {
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, i: usize) -> bool {
        self.start <= i && i <= self.end
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsecutivePartition {
    pub k: usize,
    pub source: Vec<usize>,
    pub blocks: Vec<Block>,
}

fn sorted_checked(set: &[usize], k: usize) -> Result<Vec<usize>> {
    let mut v = set.to_vec();
    v.sort_unstable();
    v.dedup();
    if let Some(&bad) = v.iter().find(|&&i| i == 0 || i > k) {
        return Err(FtcError::IndexOutOfRange { index: bad, k });
    }
    Ok(v)
}

pub fn consecutive_partition(set: &[usize], k: usize) -> Result<ConsecutivePartition> {
    let source = sorted_checked(set, k)?;
    let mut blocks: Vec<Block> = Vec::new();
    for &i in &source {
        match blocks.last_mut() {
            Some(b) if b.end + 1 == i => b.end = i,
            _ => blocks.push(Block { start: i, end: i }),
        }
    }
    Ok(ConsecutivePartition { k, source, blocks })
}

/// Complement of `set` within `1..=k`.
pub fn complement(set: &[usize], k: usize) -> Result<Vec<usize>> {
    let s = sorted_checked(set, k)?;
    let mut out = Vec::with_capacity(k - s.len());
    let mut it = s.iter().peekable();
    for i in 1..=k {
        if it.peek() == Some(&&i) {
            it.next();
        } else {
            out.push(i);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReducedIndexSet {
    pub j: Vec<usize>,
    pub removed: Vec<usize>,
    /// Blocks of the untuned indices, whose interiors were removed.
    pub untuned_blocks: Vec<Block>,
}

impl ReducedIndexSet {
    pub fn len(&self) -> usize {
        self.j.len()
    }

    pub fn is_empty(&self) -> bool {
        self.j.is_empty()
    }
}

/// Keeps the tuned indices and the two endpoints of every run of untuned
/// ones.
pub fn reduced_index_set(k: usize, tuned: &[usize]) -> Result<ReducedIndexSet> {
    let untuned = complement(tuned, k)?;
    let part = consecutive_partition(&untuned, k)?;
    let mut removed = Vec::new();
    for b in &part.blocks {
        removed.extend(b.start + 1..b.end);
    }
    let j = complement(&removed, k)?;
    Ok(ReducedIndexSet {
        j,
        removed,
        untuned_blocks: part.blocks,
    })
}

/// Number of samples removed: Σ max{|P| − 2, 0} over untuned blocks.
pub fn removal_count(blocks: &[Block]) -> usize {
    blocks.iter().map(|b| b.len().saturating_sub(2)).sum()
}

/// `(|P(I)|, min{|I|, K − |I| + 1})`.
pub fn partition_cardinality_bound(set: &[usize], k: usize) -> Result<(usize, usize)> {
    let part = consecutive_partition(set, k)?;
    let n = part.source.len();
    let bound = n.min(k - n + 1);
    debug_assert!(part.blocks.len() <= bound);
    Ok((part.blocks.len(), bound))
}

/// `min{3N + 2, K}`.
pub fn j_size_bound(k: usize, n: usize) -> usize {
    (3 * n + 2).min(k)
}
