//! `lambda * M / B`-way randomized sample sort.
//!
//! Each level draws a random sample of `8 l ceil(log2 n0)` records, sorts it,
//! takes every `(m/l)`-th sample record as a splitter and distributes the
//! input into `l` buckets. Only `M / B` buckets have a resident block at a
//! time, so the distribution runs in `ceil(l / (M/B)) <= lambda` rounds, each
//! scanning the whole input. Buckets of at most `lambda * M` records finish
//! with the selection-sort base case; all leaves stream into one shared
//! output writer, so the final output is written exactly once.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bounds::ceil_log2;
use crate::error::{Error, Result};
use crate::model::{ArenaBuf, BlockWriter, ExtArray, Machine};
use crate::selection::{selection_sort, selection_sort_into, Order};

/// Sample-size multiplier: `m = SAMPLE_FACTOR * l * ceil(log2 n0)`.
pub const SAMPLE_FACTOR: usize = 8;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SampleSortReport {
    /// Levels on the deepest root-to-leaf path, counting the base case.
    pub depth: u64,
    pub partitions: usize,
    /// Largest bucket relative to `n / l`, over all partitions.
    pub max_bucket_ratio: f64,
    /// Bucket sizes of the top-level partition.
    pub top_buckets: Vec<usize>,
}

/// Fan-out used for a subproblem of `n` records: `lambda M / B` when
/// `n > lambda^2 M^2 / B`, otherwise `max(2, ceil(n / (lambda M)))`.
pub fn fanout_for(m: &Machine, n: usize) -> usize {
    let cfg = m.config();
    let big = cfg.lambda * cfg.m;
    if n as u128 > (big as u128 * big as u128) / cfg.b as u128 {
        cfg.fanout()
    } else {
        n.div_ceil(big).max(2)
    }
}

/// Sample size for a subproblem of `n` records out of an original `n0`.
pub fn sample_size(l: usize, n: usize, n0: usize) -> usize {
    (SAMPLE_FACTOR * l * (ceil_log2(n0 as u64).max(1) as usize)).min(n / 2)
}

/// Sorts `input`. All randomness comes from `seed`.
pub fn aem_samplesort<T: Copy + Ord>(m: &mut Machine, input: ExtArray<T>, seed: u64) -> Result<ExtArray<T>> {
    aem_samplesort_report(m, input, seed).map(|(o, _)| o)
}

pub fn aem_samplesort_report<T: Copy + Ord>(
    m: &mut Machine,
    input: ExtArray<T>,
    seed: u64,
) -> Result<(ExtArray<T>, SampleSortReport)> {
    if m.config().m < 8 {
        return Err(Error::Config("sample sort needs M >= 8"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // stream 0 belongs to the input generators
    rng.set_stream(1);
    let mut rep = SampleSortReport::default();
    let n0 = input.len();
    let mut sink = Some(BlockWriter::new(m)?);
    sort_into(m, &input, &mut sink, &mut rng, n0, 1, &mut rep)?;
    let out = sink.take().expect("sink is active").finish(m)?;
    Ok((out, rep))
}

fn sort_into<T: Copy + Ord>(
    m: &mut Machine,
    input: &ExtArray<T>,
    sink: &mut Option<BlockWriter<T>>,
    rng: &mut ChaCha8Rng,
    n0: usize,
    depth: u64,
    rep: &mut SampleSortReport,
) -> Result<()> {
    rep.depth = rep.depth.max(depth);
    let cfg = *m.config();
    let n = input.len();
    if n <= cfg.base_len() {
        return selection_sort_into(m, input, cfg.m, Order::Ascending, usize::MAX, &mut |m, chunk| {
            let w = sink.as_mut().expect("sink is active");
            for &r in chunk {
                w.push(m, r)?;
            }
            Ok(())
        });
    }

    let ms = sample_size(fanout_for(m, n), n, n0);
    let l = fanout_for(m, n).min(ms / 2).max(2);
    let sample = draw_sample(m, input, ms, rng)?;
    let sorted_sample = if sample.len() <= cfg.base_len() {
        selection_sort(m, &sample, cfg.m, Order::Ascending, usize::MAX)?
    } else {
        // the sample needs its own output writer; spill ours meanwhile so
        // both never hold a store block at the same time
        let parked = sink.take().expect("sink is active").park(m)?;
        let mut s = Some(BlockWriter::new(m)?);
        let mut sub = SampleSortReport::default();
        sort_into(m, &sample, &mut s, rng, n0, 1, &mut sub)?;
        let sorted = s.take().expect("sample sink").finish(m)?;
        *sink = Some(parked.resume(m)?);
        sorted
    };

    let buckets = partition_rounds(m, input, &sorted_sample, l)?;
    rep.partitions += 1;
    let avg = n as f64 / l as f64;
    let biggest = buckets.iter().map(|b| b.len()).max().unwrap_or(0);
    rep.max_bucket_ratio = rep.max_bucket_ratio.max(biggest as f64 / avg);
    if depth == 1 {
        rep.top_buckets = buckets.iter().map(|b| b.len()).collect();
    }
    if biggest == n {
        return Err(Error::Config("splitters failed to divide the input"));
    }
    for b in &buckets {
        if !b.is_empty() {
            sort_into(m, b, sink, rng, n0, depth + 1, rep)?;
        }
    }
    Ok(())
}

/// Draws `k` distinct positions uniformly (sequential selection sampling, so
/// no position list is held in memory) and writes the sampled records out.
/// Only blocks containing a sampled position are read.
fn draw_sample<T: Copy>(m: &mut Machine, input: &ExtArray<T>, k: usize, rng: &mut ChaCha8Rng) -> Result<ExtArray<T>> {
    let b = m.config().b;
    let n = input.len();
    let mut load = m.alloc::<T>(b)?;
    let mut loaded = usize::MAX;
    let mut out = BlockWriter::new(m)?;
    let mut need = k;
    for i in 0..n {
        if need == 0 {
            break;
        }
        if rng.gen_range(0..n - i) < need {
            let blk = i / b;
            if blk != loaded {
                m.read_block(input, blk, &mut load)?;
                loaded = blk;
            }
            out.push(m, load[i % b])?;
            need -= 1;
        }
    }
    m.free(load);
    out.finish(m)
}

/// Reads the record at position `pos` of `arr`, reusing `cache` when the
/// block is already loaded.
fn read_at<T: Copy>(
    m: &mut Machine,
    arr: &ExtArray<T>,
    pos: usize,
    buf: &mut ArenaBuf<T>,
    cache: &mut usize,
) -> Result<T> {
    let b = arr.block_size();
    if *cache != pos / b {
        m.read_block(arr, pos / b, buf)?;
        *cache = pos / b;
    }
    Ok(buf[pos % b])
}

/// Distributes `input` into `l` buckets separated by every `(|sample|/l)`-th
/// record of the sorted sample. Bucket `j` receives the records in
/// `(s_j, s_{j+1}]`.
///
/// Runs `ceil(l / (M/B))` rounds; a round loads its `M/B` splitters, keeps one
/// block per bucket of the round, scans the input once and flushes partial
/// blocks at its end. Primary memory: `M` for bucket blocks, `B` for the
/// load block and `M/B + 1` splitters.
pub fn partition_rounds<T: Copy + Ord>(
    m: &mut Machine,
    input: &ExtArray<T>,
    sorted_sample: &ExtArray<T>,
    l: usize,
) -> Result<Vec<ExtArray<T>>> {
    let cfg = *m.config();
    let b = cfg.b;
    let g = cfg.m / b;
    let ms = sorted_sample.len();
    if l < 2 || ms < l {
        return Err(Error::Config("need at least 2 buckets and one sample per bucket"));
    }
    let mut buckets: Vec<ExtArray<T>> = (0..l).map(|_| ExtArray::new(b)).collect();
    let mut load = m.alloc::<T>(b)?;
    let mut spl = m.alloc::<T>(g + 1)?;
    let mut frames: Vec<ArenaBuf<T>> = Vec::with_capacity(g);
    for _ in 0..g.min(l) {
        frames.push(m.alloc::<T>(b)?);
    }
    let mut lower: Option<T> = None;
    let mut cached = usize::MAX;
    let mut first = 0;
    while first < l {
        let count = g.min(l - first);
        // splitters s_{first+1} ..= s_{first+count}; the last bucket is unbounded
        spl.clear();
        for j in first + 1..=first + count {
            if j < l {
                let pos = j * ms / l;
                let s = read_at(m, sorted_sample, pos, &mut load, &mut cached)?;
                spl.push(s);
            }
        }
        cached = usize::MAX;
        for blk in 0..input.num_blocks() {
            m.read_block(input, blk, &mut load)?;
            for idx in 0..load.len() {
                let r = load[idx];
                if lower.is_some_and(|lo| r <= lo) {
                    continue;
                }
                let j = spl.partition_point(|s| *s < r);
                if j == spl.len() && first + count < l {
                    continue;
                }
                let f = &mut frames[j];
                f.push(r);
                if f.len() == b {
                    m.append_block(&mut buckets[first + j], f)?;
                    f.clear();
                }
            }
        }
        for (j, f) in frames.iter_mut().enumerate().take(count) {
            if !f.is_empty() {
                m.append_block(&mut buckets[first + j], f)?;
                f.clear();
            }
        }
        lower = spl.last().copied();
        first += count;
    }
    for f in frames {
        m.free(f);
    }
    m.free(spl);
    m.free(load);
    Ok(buckets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds;
    use crate::input::{generate_records, Distribution};
    use crate::model::{MemoryConfig, Mode, Record};
    use alloc::vec;
    use proptest::prelude::*;

    fn machine(m: usize, b: usize, omega: usize, lambda: usize) -> Machine {
        Machine::new(MemoryConfig::new(m, b, omega, lambda).unwrap(), Mode::Strict)
    }

    fn sorted(mut v: Vec<Record>) -> Vec<Record> {
        v.sort();
        v
    }

    #[test]
    fn base_case_costs_match_selection() {
        let v = generate_records(3000, Distribution::Uniform, 1);
        let mut a = machine(1024, 32, 4, 4);
        let out = aem_samplesort(&mut a, ExtArray::from_vec(v.clone(), 32), 5).unwrap();
        let mut b = machine(1024, 32, 4, 4);
        selection_sort(&mut b, &ExtArray::from_vec(v.clone(), 32), 1024, Order::Ascending, usize::MAX).unwrap();
        assert_eq!(out.into_vec(), sorted(v));
        assert_eq!(a.counters(), b.counters());
    }

    #[test]
    fn sorts_all_distributions() {
        for d in Distribution::ALL {
            let v = generate_records(40_000, d, 3);
            let mut m = machine(256, 16, 8, 2);
            let (out, rep) = aem_samplesort_report(&mut m, ExtArray::from_vec(v.clone(), 16), 11).unwrap();
            assert_eq!(out.into_vec(), sorted(v), "{d}");
            let cfg = *m.config();
            assert!(rep.depth <= bounds::levels(&cfg, 40_000) + 2, "{d}: depth {}", rep.depth);
            assert!(m.counters().block_writes <= 8 * bounds::mergesort_writes(&cfg, 40_000));
            assert_eq!(m.arena().in_use(), 0);
        }
    }

    #[test]
    fn two_buckets_split_near_median() {
        let v = generate_records(4000, Distribution::Uniform, 8);
        let input = ExtArray::from_vec(v.clone(), 8);
        let sample = ExtArray::from_vec(sorted(v.iter().step_by(10).copied().collect()), 8);
        let mut m = machine(64, 8, 4, 1);
        let b = partition_rounds(&mut m, &input, &sample, 2).unwrap();
        let (x, y) = (b[0].len(), b[1].len());
        assert_eq!(x + y, 4000);
        assert!(x.abs_diff(y) < 400);
    }

    #[test]
    fn rounds_each_scan_input() {
        // l = 4 * M/B with lambda = 4: four rounds
        let v = generate_records(2048, Distribution::Uniform, 2);
        let input = ExtArray::from_vec(v.clone(), 8);
        let sample = ExtArray::from_vec(sorted(v.iter().step_by(4).copied().collect()), 8);
        let mut m = machine(64, 8, 4, 4);
        let l = 32;
        let buckets = partition_rounds(&mut m, &input, &sample, l).unwrap();
        let nb = 256u64;
        assert!(m.counters().block_reads >= 4 * nb);
        // plus at most l/(M/B) splitter block loads per round
        assert!(m.counters().block_reads <= 4 * nb + l as u64);
        assert!(m.counters().block_writes <= nb + l as u64);
        // buckets are ordered and cover the input
        let flat: Vec<Record> = buckets.iter().flat_map(|b| sorted(b.inspect().to_vec())).collect();
        assert_eq!(flat, sorted(v));
        for w in buckets.windows(2) {
            if let (Some(a), Some(b)) = (w[0].inspect().iter().max(), w[1].inspect().iter().min()) {
                assert!(a < b);
            }
        }
    }

    #[test]
    fn skewed_bucket_write_bound() {
        // one splitter range holds most of the input
        let mut v: Vec<Record> = (0..3000).map(|i| Record::new(5, i)).collect();
        v.extend((0..1000).map(|i| Record::new(1000 + i as u64, 3000 + i)));
        let input = ExtArray::from_vec(v.clone(), 8);
        let sample = ExtArray::from_vec(sorted(v.iter().step_by(37).copied().collect()), 8);
        let mut m = machine(64, 8, 4, 2);
        let l = 16;
        partition_rounds(&mut m, &input, &sample, l).unwrap();
        assert!(m.counters().block_writes <= 500 + l as u64);
    }

    #[test]
    fn fanout_rule() {
        let m = machine(1024, 32, 4, 4);
        // lambda^2 M^2 / B = 524288
        assert_eq!(fanout_for(&m, 1 << 16), 16);
        assert_eq!(fanout_for(&m, 1 << 20), 128);
        assert_eq!(fanout_for(&m, 4097), 2);
    }

    #[test]
    fn sample_size_concentrates_buckets() {
        // n = 2^16, lambda = 4, M = 1024, B = 32: l = 16
        let n = 1 << 16;
        let mut worst: f64 = 0.0;
        for seed in 0..100 {
            let v = generate_records(n, Distribution::Uniform, 1000 + seed);
            let mut m = machine(1024, 32, 4, 4);
            let (_, rep) = aem_samplesort_report(&mut m, ExtArray::from_vec(v, 32), seed).unwrap();
            assert_eq!(rep.top_buckets.len(), 16);
            worst = worst.max(rep.max_bucket_ratio);
        }
        assert!(worst < 2.0, "max bucket / average = {worst}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn sorts_any_input(
            n in 0usize..20_000,
            seed in any::<u64>(),
            dist in prop::sample::select(Distribution::ALL.to_vec()),
            lambda in 1usize..4,
            b in prop::sample::select(vec![4usize, 8, 16]),
        ) {
            let v = generate_records(n, dist, seed);
            let mut m = machine(8 * b, b, 4, lambda);
            let (out, rep) = aem_samplesort_report(&mut m, ExtArray::from_vec(v.clone(), b), seed).unwrap();
            prop_assert_eq!(out.into_vec(), sorted(v));
            let cfg = *m.config();
            prop_assert!(rep.depth <= bounds::levels(&cfg, n) + 2);
            prop_assert!(m.arena().peak() <= cfg.capacity());
        }
    }
}
