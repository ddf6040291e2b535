//! Low-depth cache-oblivious sort with `omega`-way sub-bucketing.
//!
//! For an input of `n` records:
//!
//! * (a) split into rows of `r = ceil(sqrt(n / omega))` records (about
//!   `sqrt(n omega)` rows) and sort each row recursively;
//! * (b) sample every `log n`-th record of every row, mergesort the sample
//!   and pick `r - 1` evenly spaced splitters; merging the splitters with each
//!   row records where every bucket starts in that row;
//! * (c) transpose the per-row counts, prefix-sum them, and move every
//!   row segment to its bucket with a recursive segment transpose;
//! * (d) in each bucket, sample `max(omega, sqrt(omega n) / log n)` records,
//!   pick `omega - 1` pivots, and partition the bucket in `omega` scans, one
//!   per sub-bucket; sort each sub-bucket recursively.
//!
//! Records equal to a pivot are set aside in (d) and never recursed on, so
//! inputs with repeated keys terminate. Problems of at most 64 records are
//! sorted directly.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::transpose::visit_transposed;
use super::{TracedArray, TracedStore};
use crate::bounds::{ceil_log2, isqrt};
use crate::cache::WordStore;

const BASE: usize = 64;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CoSortStats {
    /// Deepest recursion level reached; the top call is level 1.
    pub depth: usize,
    pub base_cases: u64,
    /// Buckets formed by the top-level call.
    pub top_buckets: usize,
    pub top_max_bucket: usize,
    /// Largest sub-bucket of the top-level call, pivot copies included.
    pub top_max_sub_bucket: usize,
}

struct Ctx {
    omega: usize,
    rng: ChaCha8Rng,
    stats: CoSortStats,
}

/// Sorts `input` into a new array; `input` is left unchanged.
pub fn co_sort<T, S>(mem: &mut S, input: TracedArray, omega: usize, seed: u64) -> (TracedArray, CoSortStats)
where
    T: Copy + Ord,
    S: TracedStore<T> + WordStore,
{
    let n = input.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let mut ctx = Ctx {
        omega: omega.max(2),
        rng,
        stats: CoSortStats::default(),
    };
    if n == 0 {
        return (input, ctx.stats);
    }
    let fill = mem.get(input, 0);
    let out = mem.alloc(n, fill);
    sort(mem, input, out, &mut ctx, 1);
    (out, ctx.stats)
}

/// Reads `src` into registers, sorts, writes to `dst`.
fn base_sort<T: Copy + Ord, S: TracedStore<T>>(mem: &mut S, src: TracedArray, dst: TracedArray) {
    let mut v: Vec<T> = (0..src.len()).map(|i| mem.get(src, i)).collect();
    v.sort_unstable();
    for (i, x) in v.into_iter().enumerate() {
        mem.set(dst, i, x);
    }
}

fn merge<T: Copy + Ord, S: TracedStore<T>>(mem: &mut S, x: TracedArray, y: TracedArray, out: TracedArray) {
    let (mut i, mut j) = (0, 0);
    for o in 0..out.len() {
        let take_x = j == y.len() || (i < x.len() && mem.get(x, i) <= mem.get(y, j));
        let v = if take_x {
            i += 1;
            mem.get(x, i - 1)
        } else {
            j += 1;
            mem.get(y, j - 1)
        };
        mem.set(out, o, v);
    }
}

/// Top-down mergesort of `a` in place, with `t` as scratch of equal length.
fn msort<T: Copy + Ord, S: TracedStore<T>>(mem: &mut S, a: TracedArray, t: TracedArray) {
    let n = a.len();
    if n <= BASE {
        base_sort(mem, a, a);
        return;
    }
    let h = n / 2;
    msort_to(mem, a.slice(0, h), t.slice(0, h));
    msort_to(mem, a.slice(h, n - h), t.slice(h, n - h));
    merge(mem, t.slice(0, h), t.slice(h, n - h), a);
}

/// Mergesort of `a` with the result in `t`; `a` is clobbered.
fn msort_to<T: Copy + Ord, S: TracedStore<T>>(mem: &mut S, a: TracedArray, t: TracedArray) {
    let n = a.len();
    if n <= BASE {
        base_sort(mem, a, t);
        return;
    }
    let h = n / 2;
    msort(mem, a.slice(0, h), t.slice(0, h));
    msort(mem, a.slice(h, n - h), t.slice(h, n - h));
    merge(mem, a.slice(0, h), a.slice(h, n - h), t);
}

/// Sorts the records of `src` into `a`. `src` is only read, and may be `a`
/// itself. Scratch space comes from the top of the allocation stack, so
/// consecutive sibling calls reuse the same addresses.
fn sort<T, S>(mem: &mut S, src: TracedArray, a: TracedArray, ctx: &mut Ctx, depth: usize)
where
    T: Copy + Ord,
    S: TracedStore<T> + WordStore,
{
    let n = a.len();
    ctx.stats.depth = ctx.stats.depth.max(depth);
    if n <= BASE {
        ctx.stats.base_cases += 1;
        base_sort(mem, src, a);
        return;
    }
    let omega = ctx.omega;
    let lg = ceil_log2(n as u64) as usize;
    let rows_target = n.div_ceil(omega);
    let mut r = isqrt(rows_target as u64) as usize;
    if r * r < rows_target {
        r += 1;
    }
    let q = n.div_ceil(r);
    let row_len = |i: usize| r.min(n - i * r);

    // (a)
    for i in 0..q {
        let len = row_len(i);
        sort(mem, src.slice(i * r, len), a.slice(i * r, len), ctx, depth + 1);
    }

    // (b)
    let fill = mem.get(a, 0);
    let t = mem.alloc(n, fill);
    let cnt: usize = (0..q).map(|i| (row_len(i) + lg - 1 - lg / 2) / lg).sum();
    let nb = r.min(cnt + 1);
    let starts = mem.alloc_words(q * nb);
    if nb > 1 {
        let samples = mem.alloc(cnt, fill);
        let scratch = mem.alloc(cnt, fill);
        let mut s = 0;
        for i in 0..q {
            for p in (lg / 2..row_len(i)).step_by(lg) {
                let v = mem.get(a, i * r + p);
                mem.set(samples, s, v);
                s += 1;
            }
        }
        msort(mem, samples, scratch);
        mem.release(scratch);
        let splitters = mem.alloc(nb - 1, fill);
        for j in 1..nb {
            let v = mem.get(samples, j * cnt / nb);
            mem.set(splitters, j - 1, v);
        }
        for i in 0..q {
            let row = a.slice(i * r, row_len(i));
            let mut pos = 0;
            mem.set_word(starts, i * nb, 0);
            for j in 1..nb {
                let p = mem.get(splitters, j - 1);
                while pos < row.len() && mem.get(row, pos) <= p {
                    pos += 1;
                }
                mem.set_word(starts, i * nb + j, pos as u64);
            }
        }
        mem.release(splitters);
        mem.release(samples);
    } else {
        for i in 0..q {
            mem.set_word(starts, i * nb, 0);
        }
    }

    // (c)
    let seg = |mem: &mut S, i: usize, j: usize| -> (usize, usize) {
        let s = mem.get_word(starts, i * nb + j) as usize;
        let e = if j + 1 < nb {
            mem.get_word(starts, i * nb + j + 1) as usize
        } else {
            row_len(i)
        };
        (s, e)
    };
    // bucket j occupies [bounds[j], bounds[j + 1]) of t
    let bounds = mem.alloc_words(nb + 1);
    for i in 0..q {
        for j in 0..nb {
            let (s, e) = seg(mem, i, j);
            let c = mem.get_word(bounds, j + 1);
            mem.set_word(bounds, j + 1, c + (e - s) as u64);
        }
    }
    for j in 1..=nb {
        let c = mem.get_word(bounds, j) + mem.get_word(bounds, j - 1);
        mem.set_word(bounds, j, c);
    }
    // the recursive visit reaches the cells of each column in row order,
    // so one cursor per bucket places the segments
    let cursor = mem.alloc_words(nb);
    for j in 0..nb {
        let c = mem.get_word(bounds, j);
        mem.set_word(cursor, j, c);
    }
    visit_transposed(q, nb, &mut |i, j| {
        let (s, e) = seg(mem, i, j);
        let d = mem.get_word(cursor, j) as usize;
        for x in s..e {
            let v = mem.get(a, i * r + x);
            mem.set(t, d + x - s, v);
        }
        mem.set_word(cursor, j, (d + e - s) as u64);
    });
    mem.release_words(cursor);

    // (d)
    if depth == 1 {
        ctx.stats.top_buckets = nb;
    }
    for j in 0..nb {
        let start = mem.get_word(bounds, j) as usize;
        let end = mem.get_word(bounds, j + 1) as usize;
        let len = end - start;
        if depth == 1 {
            ctx.stats.top_max_bucket = ctx.stats.top_max_bucket.max(len);
        }
        if len == 0 {
            continue;
        }
        let (src, dst) = (t.slice(start, len), a.slice(start, len));
        if len <= BASE {
            if depth == 1 {
                ctx.stats.top_max_sub_bucket = ctx.stats.top_max_sub_bucket.max(len);
            }
            ctx.stats.base_cases += 1;
            base_sort(mem, src, dst);
            continue;
        }
        partition_and_sort(mem, src, dst, n, lg, ctx, depth);
    }
    mem.release_words(bounds);
    mem.release_words(starts);
    mem.release(t);
}
/// Partitions bucket `src` into `omega` sub-buckets laid out in `dst`, one
/// scan per sub-bucket. Sub-bucket `u` holds the records strictly between
/// pivots `u - 1` and `u`, followed by the copies of pivot `u`. Each
/// sub-bucket is sorted as soon as its scan has written it, while it is
/// still likely to be cached.
fn partition_and_sort<T, S>(mem: &mut S, src: TracedArray, dst: TracedArray, n: usize, lg: usize, ctx: &mut Ctx, depth: usize)
where
    T: Copy + Ord,
    S: TracedStore<T> + WordStore,
{
    let len = src.len();
    let omega = ctx.omega;
    let want = libm::ceil(libm::sqrt((omega * n) as f64) / lg as f64) as usize;
    let k = len.min(omega.max(want));
    let fill = mem.get(src, 0);
    let sample = mem.alloc(k, fill);
    let scratch = mem.alloc(k, fill);
    for s in 0..k {
        let v = mem.get(src, ctx.rng.gen_range(0..len));
        mem.set(sample, s, v);
    }
    msort(mem, sample, scratch);
    mem.release(scratch);
    let pivots: Vec<T> = (1..omega).map(|u| mem.get(sample, u * k / omega)).collect();
    mem.release(sample);

    let classify = |x: T| -> (usize, bool) {
        let u = pivots.partition_point(|&p| p < x);
        (u, u < pivots.len() && pivots[u] == x)
    };
    let mut sizes = alloc::vec![(0usize, 0usize); omega];
    for i in 0..len {
        let (u, eq) = classify(mem.get(src, i));
        if eq {
            sizes[u].1 += 1;
        } else {
            sizes[u].0 += 1;
        }
    }
    let mut off = 0;
    for u in 0..omega {
        let strict = sizes[u].0;
        let (mut lo, mut hi) = (off, off + strict);
        for i in 0..len {
            let x = mem.get(src, i);
            match classify(x) {
                (c, false) if c == u => {
                    mem.set(dst, lo, x);
                    lo += 1;
                }
                (c, true) if c == u => {
                    mem.set(dst, hi, x);
                    hi += 1;
                }
                _ => {}
            }
        }
        let (strict, equal) = sizes[u];
        if depth == 1 {
            ctx.stats.top_max_sub_bucket = ctx.stats.top_max_sub_bucket.max(strict + equal);
        }
        if strict > 1 {
            let part = dst.slice(off, strict);
            sort(mem, part, part, ctx, depth + 1);
        }
        off = hi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cache::TracedMemory;
    use crate::input::{generate_records, Distribution};
    use crate::model::Record;
    use proptest::prelude::*;

    fn run<T: Copy + Ord + core::fmt::Debug>(v: &[T], omega: usize, seed: u64) -> (Vec<T>, CoSortStats, TracedMemory<T>) {
        let mut mem = TracedMemory::new(1024, 32);
        let a = mem.load(v);
        let (out, st) = co_sort(&mut mem, a, omega, seed);
        mem.flush_all();
        assert_eq!(mem.snapshot(a), v, "input must be left alone");
        (mem.snapshot(out), st, mem)
    }

    #[test]
    fn small_input_is_a_base_case() {
        let v: Vec<u64> = (0..64).rev().collect();
        let (got, st, mem) = run(&v, 4, 0);
        assert_eq!(got, (0..64).collect::<Vec<_>>());
        assert_eq!(st.depth, 1);
        assert_eq!(st.base_cases, 1);
        // cold misses on input, copy and (write-allocated) output
        assert_eq!(mem.counters().block_reads, 4);
        assert_eq!(mem.counters().block_writes, 2);
    }

    #[test]
    fn empty_and_single() {
        assert_eq!(run::<u64>(&[], 4, 0).0, Vec::<u64>::new());
        assert_eq!(run(&[7u64], 4, 0).0, [7]);
    }

    #[test]
    fn sorts_every_distribution() {
        for omega in [1, 2, 4, 8, 16] {
            for d in Distribution::ALL {
                let v = generate_records(20_000, d, omega as u64);
                let (got, st, _) = run(&v, omega, 3);
                let mut want = v.clone();
                want.sort();
                assert_eq!(got, want, "{d} omega={omega}");
                assert!(st.depth >= 2);
            }
        }
    }

    #[test]
    fn heavy_duplicates_terminate() {
        let v: Vec<u64> = (0..30_000u64).map(|i| (i * 7919) % 3).collect();
        let (got, _, _) = run(&v, 8, 1);
        let mut want = v;
        want.sort();
        assert_eq!(got, want);
        let v = alloc::vec![5u64; 5000];
        assert_eq!(run(&v, 4, 1).0, v);
    }

    #[test]
    fn read_write_ratio_tracks_omega() {
        for omega in [4usize, 8, 16] {
            let v: Vec<Record> = generate_records(1 << 18, Distribution::Uniform, 11);
            let (_, _, mem) = run(&v, omega, 5);
            let io = mem.counters();
            let ratio = io.block_reads as f64 / io.block_writes as f64;
            let w = omega as f64;
            assert!(ratio >= w / 4.0 && ratio <= 4.0 * w, "omega={omega}: {io:?} ratio {ratio}");
        }
    }

    #[test]
    fn sub_buckets_stay_within_log_factor() {
        // c = 4 in max sub-bucket <= c sqrt(n / omega) log n
        for omega in [4usize, 16] {
            let n = 1usize << 14;
            let cap = 4.0 * libm::sqrt((n / omega) as f64) * 14.0;
            let mut worst = 0;
            for seed in 0..100 {
                let v = generate_records(n, Distribution::Uniform, seed);
                let (_, st, _) = run(&v, omega, seed);
                worst = worst.max(st.top_max_sub_bucket);
            }
            assert!((worst as f64) <= cap, "omega={omega}: {worst} > {cap}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn sorted_permutation(v in proptest::collection::vec(any::<u16>(), 0..3000), omega in 1usize..20, seed in any::<u64>()) {
            let (got, _, _) = run(&v, omega, seed);
            let mut want = v;
            want.sort();
            prop_assert_eq!(got, want);
        }
    }
}
