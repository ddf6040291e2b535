//! Priority queue on a buffer tree, and heapsort built on it.
//!
//! The queue keeps three tiers ordered by key: a small in-memory set
//! `alpha` of at most `M/4` records, an intermediate set `beta` in secondary
//! memory (see [`beta`]), and a [`tree::BufferTree`] holding everything
//! else. Every record in `alpha` is at most every record in `beta`, which
//! in turn is at most every record in the tree.
//!
//! Records must be distinct: the implicit deletions in `beta` identify
//! removed records by value. [`crate::model::Record`] carries a tiebreak
//! for this purpose.

pub mod beta;
pub mod tree;

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::{BlockReader, BlockWriter, ExtArray, Machine};

pub use beta::Beta;
pub use tree::{BufferTree, TreeStats};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PqStats {
    pub inserts: u64,
    pub delete_mins: u64,
    /// Leaves moved from the tree into beta.
    pub refills: u64,
    /// Batches moved from beta into alpha.
    pub extractions: u64,
    /// Times beta grew past `2 lambda M` and shed records into the tree.
    pub overflows: u64,
    pub beta_rebuilds: u64,
    pub tree: TreeStats,
}

#[derive(Debug)]
pub struct AemPriorityQueue<T> {
    /// Multiset: record -> multiplicity.
    alpha: BTreeMap<T, usize>,
    alpha_len: usize,
    alpha_cap: usize,
    beta: Beta<T>,
    tree: BufferTree<T>,
    lambda_m: usize,
    work: usize,
    stats: PqStats,
}

impl<T: Copy + Ord> AemPriorityQueue<T> {
    /// Requires `lambda M / B >= 4`, `M / B` even and `M >= 4B`.
    pub fn new(m: &mut Machine) -> Result<Self> {
        let cfg = *m.config();
        if cfg.m < 4 * cfg.b {
            return Err(Error::Config("priority queue needs M >= 4B"));
        }
        let alpha_cap = (cfg.m / 4).max(1);
        m.reserve_words(alpha_cap)?;
        let beta = Beta::new(m)?;
        let tree = BufferTree::new(m)?;
        Ok(AemPriorityQueue {
            alpha: BTreeMap::new(),
            alpha_len: 0,
            alpha_cap,
            beta,
            tree,
            lambda_m: cfg.base_len(),
            work: cfg.m / 2,
            stats: PqStats::default(),
        })
    }

    /// Releases the resident memory.
    pub fn close(self, m: &mut Machine) {
        m.release_words(self.alpha_cap);
        self.beta.close(m);
        self.tree.close(m);
    }

    pub fn len(&self) -> usize {
        self.alpha_len + self.beta.len() + self.tree.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn stats(&self) -> PqStats {
        let mut s = self.stats.clone();
        s.beta_rebuilds = self.beta.rebuilds;
        s.tree = self.tree.stats.clone();
        s
    }

    fn alpha_max(&self) -> Option<T> {
        self.alpha.last_key_value().map(|(&k, _)| k)
    }

    fn alpha_push(&mut self, x: T) {
        *self.alpha.entry(x).or_insert(0) += 1;
        self.alpha_len += 1;
    }

    fn alpha_pop(&mut self, largest: bool) -> Option<T> {
        let mut entry = if largest {
            self.alpha.last_entry()?
        } else {
            self.alpha.first_entry()?
        };
        let x = *entry.key();
        if *entry.get() == 1 {
            entry.remove();
        } else {
            *entry.get_mut() -= 1;
        }
        self.alpha_len -= 1;
        Some(x)
    }

    pub fn insert(&mut self, m: &mut Machine, x: T) -> Result<()> {
        self.stats.inserts += 1;
        let alpha_max = self.alpha_max();
        if self.beta.is_empty() && self.tree.is_empty() || alpha_max.is_some_and(|a| x < a) {
            self.alpha_push(x);
            if self.alpha_len > self.alpha_cap {
                let top = self.alpha_pop(true).expect("alpha is non-empty");
                self.beta_insert(m, top)?;
            }
            return Ok(());
        }
        if !self.beta.is_empty() && self.beta.max().is_some_and(|b| x < b) || self.tree.is_empty() {
            return self.beta_insert(m, x);
        }
        self.tree.insert(m, x)
    }

    fn beta_insert(&mut self, m: &mut Machine, x: T) -> Result<()> {
        self.beta.insert(m, x)?;
        if self.beta.len() >= 2 * self.lambda_m {
            self.stats.overflows += 1;
            let top = self.beta.split_off_largest(m, self.lambda_m, self.work)?;
            let mut r = BlockReader::new(m, &top)?;
            while let Some(v) = r.next(m)? {
                self.tree.insert(m, v)?;
            }
            r.finish(m);
        }
        Ok(())
    }

    /// Removes and returns the smallest record.
    pub fn delete_min(&mut self, m: &mut Machine) -> Result<T> {
        if self.alpha_len == 0 {
            while self.beta.is_empty() {
                if self.tree.is_empty() {
                    return Err(Error::EmptyQueue);
                }
                self.stats.refills += 1;
                let (items, max) = self.tree.take_leftmost_leaf(m)?;
                self.beta.load(m, items, max)?;
            }
            self.stats.extractions += 1;
            let batch = self.beta.extract_min(m, self.alpha_cap)?;
            // the batch occupies the words reserved for alpha
            for &v in batch.iter() {
                self.alpha_push(v);
            }
            m.free(batch);
        }
        self.stats.delete_mins += 1;
        Ok(self.alpha_pop(false).expect("alpha was refilled"))
    }

    /// Checks tier ordering and the tree's invariants without charging
    /// transfers. For tests only.
    pub fn check_invariants(&self) -> core::result::Result<(), &'static str> {
        self.tree.check_invariants()?;
        self.beta.check_pairs()?;
        let beta = self.beta.inspect_valid();
        if beta.len() != self.beta.len() {
            return Err("beta valid count mismatch");
        }
        if self.alpha_len > self.alpha_cap {
            return Err("alpha over capacity");
        }
        let tree = self.tree.inspect_all();
        let bmin = beta.iter().min();
        let bmax = beta.iter().max();
        let tmin = tree.iter().min();
        if let (Some(a), Some(b)) = (self.alpha_max(), bmin) {
            if a > *b {
                return Err("alpha record above a beta record");
            }
        }
        if let (Some(b), Some(t)) = (bmax, tmin) {
            if b > t {
                return Err("beta record above a tree record");
            }
        }
        if let (Some(a), Some(t)) = (self.alpha_max(), tmin) {
            if a > *t {
                return Err("alpha record above a tree record");
            }
        }
        if let (Some(bm), Some(b)) = (self.beta.max(), bmax) {
            if bm < *b {
                return Err("beta maximum is stale");
            }
        }
        Ok(())
    }

    /// Every record in the queue, uncharged. For tests only.
    pub fn inspect_all(&self) -> Vec<T> {
        let mut v: Vec<T> = Vec::with_capacity(self.len());
        for (&k, &c) in &self.alpha {
            v.extend(core::iter::repeat_n(k, c));
        }
        v.extend(self.beta.inspect_valid());
        v.extend(self.tree.inspect_all());
        v
    }
}

/// Sorts `input` by inserting every record into an [`AemPriorityQueue`] and
/// deleting the minimum `n` times.
pub fn aem_heapsort<T: Copy + Ord>(m: &mut Machine, input: &ExtArray<T>) -> Result<(ExtArray<T>, PqStats)> {
    let mut pq = AemPriorityQueue::new(m)?;
    let mut r = BlockReader::new(m, input)?;
    while let Some(v) = r.next(m)? {
        pq.insert(m, v)?;
    }
    r.finish(m);
    let mut w = BlockWriter::new(m)?;
    for _ in 0..input.len() {
        let v = pq.delete_min(m)?;
        w.push(m, v)?;
    }
    let out = w.finish(m)?;
    let stats = pq.stats();
    pq.close(m);
    Ok((out, stats))
}
