//! `lambda * M / B`-way mergesort.
//!
//! Inputs of at most `lambda * M` records go to the selection-sort base
//! case. Larger inputs are split into `l = lambda * M / B` block-aligned
//! parts, sorted recursively, and combined by [`merge_runs`], which never
//! holds more than one block per input: it works in rounds, each of which
//! rescans the current block of every input and then streams the smallest
//! records out through a bounded in-memory queue.

use alloc::vec::Vec;

use crate::bounds;
use crate::error::{Error, Result};
use crate::runqueue::RunQueue;
use crate::model::{BlockWriter, ExtArray, Machine};
use crate::selection::selection_sort_base;

/// Per-merge diagnostics.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MergeReport {
    /// Records emitted in each round.
    pub round_emits: Vec<usize>,
}

impl MergeReport {
    pub fn rounds(&self) -> usize {
        self.round_emits.len()
    }

    /// True when every round except the last emitted at least `m` records.
    pub fn rounds_progress(&self, m: usize) -> bool {
        let k = self.round_emits.len();
        self.round_emits.iter().take(k.saturating_sub(1)).all(|&e| e >= m)
    }
}

/// Whole-sort diagnostics.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SortReport {
    /// Recursion levels actually used, counting the base case.
    pub depth: u64,
    pub merges: usize,
    pub base_cases: usize,
    /// Every merge met the per-round progress property.
    pub rounds_progress: bool,
    /// Every merge met its own read and write bound.
    pub merges_within_bounds: bool,
}

/// Sorts `input`, returning the sorted array.
pub fn aem_mergesort<T: Copy + Ord>(m: &mut Machine, input: ExtArray<T>) -> Result<ExtArray<T>> {
    aem_mergesort_report(m, input).map(|(out, _)| out)
}

pub fn aem_mergesort_report<T: Copy + Ord>(
    m: &mut Machine,
    input: ExtArray<T>,
) -> Result<(ExtArray<T>, SortReport)> {
    let mut rep = SortReport {
        rounds_progress: true,
        merges_within_bounds: true,
        ..SortReport::default()
    };
    let out = sort_rec(m, input, 1, &mut rep)?;
    Ok((out, rep))
}

fn sort_rec<T: Copy + Ord>(
    m: &mut Machine,
    input: ExtArray<T>,
    depth: u64,
    rep: &mut SortReport,
) -> Result<ExtArray<T>> {
    rep.depth = rep.depth.max(depth);
    let cfg = *m.config();
    if input.len() <= cfg.base_len() {
        rep.base_cases += 1;
        return selection_sort_base(m, &input);
    }
    let parts = input.partition_blocks(cfg.fanout());
    let mut runs = Vec::with_capacity(parts.len());
    for p in parts {
        runs.push(sort_rec(m, p, depth + 1, rep)?);
    }
    let n: usize = runs.iter().map(|r| r.len()).sum();
    let before = m.counters();
    let (out, mr) = merge_runs(m, &runs)?;
    let used = m.counters().since(&before);
    rep.merges += 1;
    rep.rounds_progress &= mr.rounds_progress(cfg.m);
    rep.merges_within_bounds &= used.block_reads <= bounds::merge_reads(&cfg, n)
        && used.block_writes <= bounds::merge_writes(&cfg, n);
    Ok(out)
}

struct MergeState<'a, T> {
    runs: &'a [ExtArray<T>],
    cursor: Vec<usize>,
    q: RunQueue<T>,
    cap: usize,
    last_v: Option<T>,
    /// Smallest record turned away by a full queue in the current round.
    /// Emitting anything at or above it could overtake that record.
    hi: Option<T>,
}

impl<T: Copy + Ord> MergeState<'_, T> {
    fn process_block(&mut self, m: &mut Machine, i: usize, load: &mut Vec<T>) -> Result<()> {
        let run = &self.runs[i];
        if self.cursor[i] >= run.num_blocks() {
            return Ok(());
        }
        m.read_block(run, self.cursor[i], load)?;
        let last_idx = load.len() - 1;
        for (j, &e) in load.iter().enumerate() {
            if self.last_v.is_some_and(|v| e <= v) {
                continue;
            }
            if self.hi.is_some_and(|h| e >= h) {
                continue;
            }
            if self.q.len() == self.cap {
                let qmax = self.q.peek_max().expect("full queue is non-empty");
                if e > qmax {
                    self.hi = Some(e);
                    continue;
                }
                self.q.pop_max();
                self.hi = Some(qmax);
            }
            self.q.push(i, e, j == last_idx);
        }
        m.tally_comparisons(load.len() as u64);
        Ok(())
    }
}

/// Merges sorted, block-aligned `runs` (at most `lambda * M / B` of them).
///
/// Uses at most `(lambda + 1) * ceil(n/B)` reads and exactly `ceil(n/B)`
/// writes with `M + 2B + 2l` records of primary memory: the queue, the load
/// and store blocks, one cursor per run and one tag per run.
pub fn merge_runs<T: Copy + Ord>(m: &mut Machine, runs: &[ExtArray<T>]) -> Result<(ExtArray<T>, MergeReport)> {
    let cfg = *m.config();
    let l = runs.len();
    if l > cfg.fanout() {
        return Err(Error::TooManyRuns {
            runs: l,
            fanout: cfg.fanout(),
        });
    }
    debug_assert!(runs.iter().all(|r| crate::model::is_sorted(r.inspect())));
    let n: usize = runs.iter().map(|r| r.len()).sum();

    m.reserve_words(cfg.m)?;
    m.reserve_words(2 * l)?;
    let mut load = m.alloc::<T>(cfg.b)?;
    let mut out = BlockWriter::new(m)?;

    let mut st = MergeState {
        runs,
        cursor: alloc::vec![0; l],
        q: RunQueue::new(l),
        cap: cfg.m,
        last_v: None,
        hi: None,
    };
    let mut report = MergeReport::default();
    let mut c = 0;
    while c < n {
        st.hi = None;
        for i in 0..l {
            st.process_block(m, i, &mut load)?;
        }
        let mut emitted = 0;
        while let Some((e, i, last)) = st.q.pop_min() {
            out.push(m, e)?;
            c += 1;
            emitted += 1;
            st.last_v = Some(e);
            if last {
                st.cursor[i] += 1;
                st.process_block(m, i, &mut load)?;
            }
        }
        if emitted == 0 {
            // unreachable for sorted, block-aligned runs
            return Err(Error::Config("merge made no progress; runs must be sorted"));
        }
        report.round_emits.push(emitted);
    }

    let result = out.finish(m)?;
    m.free(load);
    m.release_words(cfg.m + 2 * l);
    Ok((result, report))
}
