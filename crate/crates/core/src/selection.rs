//! Multi-pass selection sort.
//!
//! Each pass scans the whole input, keeps the `work` smallest records above
//! the last one written, and writes them out. With `work = M` and
//! `n <= lambda * M` there are at most `lambda` passes, so the sort costs at
//! most `lambda * ceil(n/B)` reads and exactly `ceil(n/B)` writes while
//! holding `M + B` records in primary memory.

use alloc::collections::BinaryHeap;
use core::cmp::Reverse;

use crate::error::{Error, Result};
use crate::model::{ExtArray, Machine};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    Ascending,
    Descending,
}

/// Sorts `input` with the base-case selection sort using `work = M`.
///
/// Fails with [`Error::BaseCaseTooLarge`] when `input` holds more than
/// `lambda * M` records.
pub fn selection_sort_base<T: Copy + Ord>(m: &mut Machine, input: &ExtArray<T>) -> Result<ExtArray<T>> {
    let limit = m.config().base_len();
    if input.len() > limit {
        return Err(Error::BaseCaseTooLarge {
            len: input.len(),
            limit,
        });
    }
    let work = m.config().m;
    selection_sort(m, input, work, Order::Ascending, usize::MAX)
}

/// General multi-pass selection: emits the first `limit` records of `input`
/// in `order`, selecting `work` records per pass. `work` must be a positive
/// multiple of `B` so that every pass except the last writes whole blocks.
pub fn selection_sort<T: Copy + Ord>(
    m: &mut Machine,
    input: &ExtArray<T>,
    work: usize,
    order: Order,
    limit: usize,
) -> Result<ExtArray<T>> {
    let mut out = ExtArray::new(m.config().b);
    selection_sort_into(m, input, work, order, limit, &mut |m, chunk| m.append_block(&mut out, chunk))?;
    Ok(out)
}

/// Like [`selection_sort`], but hands each output chunk (at most one block,
/// in order) to `emit` instead of writing it to a fresh array.
pub fn selection_sort_into<T: Copy + Ord>(
    m: &mut Machine,
    input: &ExtArray<T>,
    work: usize,
    order: Order,
    limit: usize,
    emit: &mut dyn FnMut(&mut Machine, &[T]) -> Result<()>,
) -> Result<()> {
    let b = m.config().b;
    if work == 0 || work % b != 0 {
        return Err(Error::Config("selection work size must be a positive multiple of B"));
    }
    match order {
        Order::Ascending => run(m, input, work, limit, |x| x, emit),
        Order::Descending => {
            // work on Reverse<T> so one max-heap routine serves both orders
            run(m, input, work, limit, Reverse, emit)
        }
    }
}

fn run<T: Copy, K: Ord + Copy>(
    m: &mut Machine,
    input: &ExtArray<T>,
    work: usize,
    limit: usize,
    key: impl Fn(T) -> K,
    emit: &mut dyn FnMut(&mut Machine, &[T]) -> Result<()>,
) -> Result<()> {
    let b = m.config().b;
    let total = input.len().min(limit);
    if total == 0 {
        return Ok(());
    }
    let mut heap_buf = m.alloc::<T>(work)?;
    let mut load = m.alloc::<T>(b)?;
    let mut last: Option<K> = None;
    // copies of `last` already emitted; equal keys may straddle passes
    let mut dup = 0;
    let mut written = 0;
    while written < total {
        let want = work.min(total - written);
        let mut heap: BinaryHeap<Wrap<K, T>> = BinaryHeap::with_capacity(want);
        let mut seen = 0;
        for i in 0..input.num_blocks() {
            m.read_block(input, i, &mut load)?;
            for &rec in load.iter() {
                let k = key(rec);
                if let Some(l) = last {
                    if k < l {
                        continue;
                    }
                    if k == l && seen < dup {
                        seen += 1;
                        continue;
                    }
                }
                if heap.len() < want {
                    heap.push(Wrap(k, rec));
                } else if let Some(mut top) = heap.peek_mut() {
                    if k < top.0 {
                        *top = Wrap(k, rec);
                    }
                }
            }
        }
        heap_buf.clear();
        heap_buf.extend(heap.into_sorted_vec().into_iter().map(|w| w.1));
        let Some(&top) = heap_buf.last() else {
            break;
        };
        let k = key(top);
        let same = heap_buf.iter().rev().take_while(|&&r| key(r) == k).count();
        dup = if last == Some(k) { dup + same } else { same };
        last = Some(k);
        for part in heap_buf.chunks(b) {
            emit(m, part)?;
        }
        written += heap_buf.len();
    }
    m.free(heap_buf);
    m.free(load);
    Ok(())
}

/// Heap entry ordered by its key only.
struct Wrap<K, T>(K, T);

impl<K: Ord, T> PartialEq for Wrap<K, T> {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0
    }
}
impl<K: Ord, T> Eq for Wrap<K, T> {}
impl<K: Ord, T> PartialOrd for Wrap<K, T> {
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl<K: Ord, T> Ord for Wrap<K, T> {
    fn cmp(&self, other: &Self) -> core::cmp::Ordering {
        self.0.cmp(&other.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds;
    use crate::model::{MemoryConfig, Mode, Record};
    use alloc::vec::Vec;
    use alloc::vec;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn shuffled(n: usize, seed: u64) -> Vec<Record> {
        let mut v: Vec<Record> = (0..n).map(|i| Record::new((i as u64 * 7) % 1000, i as u32)).collect();
        v.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        v
    }

    /// Machine whose arena is exactly M + B.
    fn tight(m: usize, b: usize, lambda: usize) -> Machine {
        let cfg = MemoryConfig::new(m, b, lambda.max(1), lambda).unwrap();
        let mut mach = Machine::new(cfg, Mode::Strict);
        // pin everything beyond M + B so the sort must fit in M + B
        mach.reserve_words(cfg.aux_slack - b).unwrap();
        mach
    }

    #[test]
    fn base_case_at_lambda_m() {
        let mut m = tight(1024, 32, 4);
        let v = shuffled(4096, 1);
        let out = selection_sort_base(&mut m, &ExtArray::from_vec(v.clone(), 32)).unwrap();
        let mut want = v;
        want.sort();
        assert_eq!(out.into_vec(), want);
        assert!(m.counters().block_reads <= 512);
        assert_eq!(m.counters().block_writes, 128);
    }

    #[test]
    fn single_pass_when_fits() {
        let mut m = tight(1024, 32, 4);
        let v = shuffled(1000, 2);
        selection_sort_base(&mut m, &ExtArray::from_vec(v, 32)).unwrap();
        assert_eq!(m.counters().block_reads, 32);
        assert_eq!(m.counters().block_writes, 32);
    }

    #[test]
    fn empty_input_is_free() {
        let mut m = tight(1024, 32, 4);
        let out = selection_sort_base::<Record>(&mut m, &ExtArray::new(32)).unwrap();
        assert!(out.is_empty());
        assert_eq!(m.cost(), 0);
    }

    #[test]
    fn rejects_oversized() {
        let mut m = tight(64, 8, 2);
        let v = shuffled(129, 0);
        assert_eq!(
            selection_sort_base(&mut m, &ExtArray::from_vec(v, 8)).unwrap_err(),
            Error::BaseCaseTooLarge { len: 129, limit: 128 }
        );
    }

    #[test]
    fn descending_with_limit() {
        let mut m = tight(64, 8, 2);
        let v = shuffled(100, 3);
        let out = selection_sort(&mut m, &ExtArray::from_vec(v.clone(), 8), 32, Order::Descending, 40).unwrap();
        let mut want = v;
        want.sort_by(|a, b| b.cmp(a));
        want.truncate(40);
        assert_eq!(out.into_vec(), want);
    }

    proptest! {
        #[test]
        fn lemma4_bounds(
            lambda in 1usize..6,
            mb in 1usize..8,
            b in prop::sample::select(vec![1usize, 4, 8, 16]),
            frac in 0.0f64..=1.0,
            seed in any::<u64>(),
        ) {
            let mm = mb * b;
            let n = ((lambda * mm) as f64 * frac) as usize;
            let mut mach = tight(mm, b, lambda);
            let v = shuffled(n, seed);
            let out = selection_sort_base(&mut mach, &ExtArray::from_vec(v.clone(), b)).unwrap();
            let mut want = v;
            want.sort();
            prop_assert_eq!(out.into_vec(), want);
            let cfg = *mach.config();
            prop_assert!(mach.counters().block_reads <= bounds::selection_reads(&cfg, n));
            prop_assert_eq!(mach.counters().block_writes, bounds::selection_writes(&cfg, n));
        }
    }
}
