//! The intermediate working set of the priority queue.
//!
//! Records live in an append-only array in secondary memory. Extracting the
//! smallest records does not rewrite the array; instead a list of
//! `(index, x)` pairs is kept in primary memory, meaning that every record
//! stored before `index` and not larger than `x` has been removed. The array
//! is compacted after `lambda` extractions.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;

use crate::error::Result;
use crate::model::{ArenaBuf, BlockWriter, ExtArray, Machine};
use crate::selection::{selection_sort_into, Order};

#[derive(Debug)]
pub struct Beta<T> {
    store: ExtArray<T>,
    /// Records logically after `store`, not yet written.
    tail: ArenaBuf<T>,
    /// Increasing `index`, decreasing `x`.
    pairs: Vec<(usize, T)>,
    valid: usize,
    extractions: usize,
    /// Upper bound on the valid records.
    max: Option<T>,
    lambda: usize,
    b: usize,
    pub rebuilds: u64,
}

impl<T: Copy + Ord> Beta<T> {
    pub fn new(m: &mut Machine) -> Result<Self> {
        let cfg = *m.config();
        Ok(Beta {
            store: ExtArray::new(cfg.b),
            tail: m.alloc(cfg.b)?,
            pairs: Vec::new(),
            valid: 0,
            extractions: 0,
            max: None,
            lambda: cfg.lambda,
            b: cfg.b,
            rebuilds: 0,
        })
    }

    pub fn close(self, m: &mut Machine) {
        m.free(self.tail);
    }

    pub fn len(&self) -> usize {
        self.valid
    }

    pub fn is_empty(&self) -> bool {
        self.valid == 0
    }

    pub fn max(&self) -> Option<T> {
        self.max
    }

    /// Stored records including removed ones.
    pub fn stored(&self) -> usize {
        self.store.len() + self.tail.len()
    }

    pub fn insert(&mut self, m: &mut Machine, x: T) -> Result<()> {
        self.tail.push(x);
        if self.tail.len() == self.b {
            m.append_block(&mut self.store, &self.tail)?;
            self.tail.clear();
        }
        self.valid += 1;
        self.max = Some(self.max.map_or(x, |mx| mx.max(x)));
        Ok(())
    }

    /// Replaces the (empty) contents with `items`.
    pub fn load(&mut self, m: &mut Machine, mut items: ExtArray<T>, max: Option<T>) -> Result<()> {
        debug_assert!(self.valid == 0);
        self.reset();
        let partial = items.len() % self.b;
        if partial != 0 {
            let last = items.num_blocks() - 1;
            m.read_block(&items, last, &mut self.tail)?;
            items.truncate(last * self.b);
        }
        self.valid = items.len() + self.tail.len();
        self.store = items;
        self.max = max;
        Ok(())
    }

    fn reset(&mut self) {
        self.store = ExtArray::new(self.b);
        self.tail.clear();
        self.pairs.clear();
        self.valid = 0;
        self.extractions = 0;
        self.max = None;
    }

    /// Threshold for the record at position `pos`: it is removed iff it is
    /// not larger than the returned value.
    fn bound_at(&self, pos: usize) -> Option<T> {
        let k = self.pairs.partition_point(|&(i, _)| i <= pos);
        self.pairs.get(k).map(|&(_, x)| x)
    }

    /// Calls `f` on every valid record, in storage order.
    fn for_each_valid(&self, m: &mut Machine, load: &mut Vec<T>, mut f: impl FnMut(&mut Machine, T) -> Result<()>) -> Result<()> {
        let mut pos = 0;
        for blk in 0..self.store.num_blocks() {
            m.read_block(&self.store, blk, load)?;
            for &v in load.iter() {
                if self.bound_at(pos).is_none_or(|x| v > x) {
                    f(m, v)?;
                }
                pos += 1;
            }
        }
        for &v in self.tail.iter() {
            if self.bound_at(pos).is_none_or(|x| v > x) {
                f(m, v)?;
            }
            pos += 1;
        }
        Ok(())
    }

    /// Removes and returns (ascending) the `k` smallest valid records.
    pub fn extract_min(&mut self, m: &mut Machine, k: usize) -> Result<ArenaBuf<T>> {
        let mut heap_words = m.alloc::<T>(k)?;
        let mut heap: BinaryHeap<T> = BinaryHeap::with_capacity(k);
        let mut load = m.alloc::<T>(self.b)?;
        let mut cmps = 0u64;
        self.for_each_valid(m, &mut load, |_, v| {
            if heap.len() < k {
                heap.push(v);
            } else if heap.peek().is_some_and(|&top| v < top) {
                cmps += 1;
                heap.pop();
                heap.push(v);
            }
            Ok(())
        })?;
        m.free(load);
        m.tally_comparisons(cmps);
        heap_words.extend(heap.into_sorted_vec());
        let taken = heap_words.len();
        self.valid -= taken;
        if let Some(&x) = heap_words.last() {
            while self.pairs.last().is_some_and(|&(_, px)| px <= x) {
                self.pairs.pop();
            }
            self.pairs.push((self.stored(), x));
        }
        self.extractions += 1;
        if self.valid == 0 {
            self.reset();
        } else if self.extractions >= self.lambda {
            self.rebuild(m)?;
        }
        Ok(heap_words)
    }

    /// Rewrites the valid records contiguously and clears the pair list.
    pub fn rebuild(&mut self, m: &mut Machine) -> Result<()> {
        self.filter_rebuild(m, None)
    }

    /// Rebuild keeping only records not above `cut`, dropping the first
    /// `skip` records equal to it.
    fn filter_rebuild(&mut self, m: &mut Machine, cut: Option<(T, usize)>) -> Result<()> {
        self.rebuilds += 1;
        let mut load = m.alloc::<T>(self.b)?;
        let mut w = BlockWriter::new(m)?;
        let mut skip = cut.map_or(0, |(_, s)| s);
        let mut kept = 0;
        let mut max: Option<T> = None;
        self.for_each_valid(m, &mut load, |m, v| {
            let keep = match cut {
                None => true,
                Some((c, _)) => {
                    if v < c {
                        true
                    } else if v == c {
                        if skip > 0 {
                            skip -= 1;
                            false
                        } else {
                            true
                        }
                    } else {
                        false
                    }
                }
            };
            if keep {
                kept += 1;
                max = Some(max.map_or(v, |mx: T| mx.max(v)));
                w.push(m, v)?;
            }
            Ok(())
        })?;
        m.free(load);
        let packed = w.finish(m)?;
        self.reset();
        self.load(m, packed, max)?;
        debug_assert_eq!(self.valid, kept);
        Ok(())
    }

    /// Moves the `limit` largest valid records out of the set, returning
    /// them in descending order.
    pub fn split_off_largest(&mut self, m: &mut Machine, limit: usize, work: usize) -> Result<ExtArray<T>> {
        self.rebuild(m)?;
        if !self.tail.is_empty() {
            m.append_block(&mut self.store, &self.tail)?;
            self.tail.clear();
        }
        let mut out = ExtArray::new(self.b);
        let mut last: Option<T> = None;
        let mut ties = 0usize;
        selection_sort_into(m, &self.store, work, Order::Descending, limit, &mut |m, chunk| {
            for &v in chunk {
                if last == Some(v) {
                    ties += 1;
                } else {
                    last = Some(v);
                    ties = 1;
                }
            }
            m.append_block(&mut out, chunk)
        })?;
        if let Some(t) = last {
            self.filter_rebuild(m, Some((t, ties)))?;
        }
        Ok(out)
    }

    /// Pair-list monotonicity and length. For tests only.
    pub fn check_pairs(&self) -> core::result::Result<(), &'static str> {
        if self.pairs.len() > self.lambda {
            return Err("more than lambda invalidation pairs");
        }
        let ok = self.pairs.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 > w[1].1);
        if !ok {
            return Err("invalidation pairs not monotone");
        }
        Ok(())
    }

    /// All valid records, uncharged. For tests only.
    pub fn inspect_valid(&self) -> Vec<T> {
        let mut v = Vec::new();
        let all = self.store.inspect().iter().chain(self.tail.iter());
        for (pos, &r) in all.enumerate() {
            if self.bound_at(pos).is_none_or(|x| r > x) {
                v.push(r);
            }
        }
        v
    }
}
