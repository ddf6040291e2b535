//! The in-memory queue of a merge round.
//!
//! Records enter the queue in ascending order per run and leave from either
//! end, so each run's queued records form an ascending deque. The queue's
//! minimum is the least deque front and its maximum the greatest deque
//! back; two tournament trees over the runs track both.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

const NONE: u32 = u32::MAX;

#[derive(Debug)]
struct Tourney<T> {
    leaves: usize,
    /// Winning run of each subtree, `NONE` if all its runs are empty; node 1
    /// is the root.
    node: Vec<u32>,
    /// Current key of each run, meaningful while its leaf is not `NONE`.
    key: Vec<Option<T>>,
    /// Runs whose key changed without the tree being updated.
    stale: Vec<usize>,
    is_stale: Vec<bool>,
    max: bool,
}

impl<T: Copy + Ord> Tourney<T> {
    fn new(runs: usize, max: bool) -> Self {
        let leaves = runs.next_power_of_two().max(1);
        Tourney {
            leaves,
            node: vec![NONE; 2 * leaves],
            key: vec![None; runs],
            stale: Vec::new(),
            is_stale: vec![false; runs],
            max,
        }
    }

    fn better(&self, a: u32, b: u32) -> u32 {
        if a == NONE {
            return b;
        }
        if b == NONE {
            return a;
        }
        let (x, y) = (self.key[a as usize], self.key[b as usize]);
        // ties go to the lower run for the minimum, the higher for the maximum
        let take_b = if self.max { y >= x } else { y < x };
        if take_b {
            b
        } else {
            a
        }
    }

    fn set(&mut self, run: usize, v: Option<T>) {
        self.key[run] = v;
        let mut p = self.leaves + run;
        self.node[p] = if v.is_some() { run as u32 } else { NONE };
        let me = run as u32;
        while p > 1 {
            p /= 2;
            let old = self.node[p];
            let new = self.better(self.node[2 * p], self.node[2 * p + 1]);
            if new == old && old != me {
                // this subtree's winner is unaffected, so every ancestor is too
                break;
            }
            self.node[p] = new;
        }
    }

    /// Records a key change, deferring the tree update to [`Self::sync`].
    fn stage(&mut self, run: usize, v: Option<T>) {
        self.key[run] = v;
        if !self.is_stale[run] {
            self.is_stale[run] = true;
            self.stale.push(run);
        }
    }

    fn sync(&mut self) {
        while let Some(run) = self.stale.pop() {
            self.is_stale[run] = false;
            self.set(run, self.key[run]);
        }
    }

    fn top(&self) -> Option<(T, usize)> {
        debug_assert!(self.stale.is_empty());
        let r = self.node[1];
        if r == NONE {
            return None;
        }
        self.key[r as usize].map(|v| (v, r as usize))
    }
}

#[derive(Debug)]
pub(crate) struct RunQueue<T> {
    runs: Vec<VecDeque<(T, bool)>>,
    fronts: Tourney<T>,
    backs: Tourney<T>,
    len: usize,
}

impl<T: Copy + Ord> RunQueue<T> {
    pub fn new(runs: usize) -> Self {
        RunQueue {
            runs: (0..runs).map(|_| VecDeque::new()).collect(),
            fronts: Tourney::new(runs, false),
            backs: Tourney::new(runs, true),
            len: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    /// Appends `v` to `run`; it must not be below that run's queued records.
    pub fn push(&mut self, run: usize, v: T, last: bool) {
        debug_assert!(self.runs[run].back().is_none_or(|b| b.0 <= v));
        let was_empty = self.runs[run].is_empty();
        self.runs[run].push_back((v, last));
        self.len += 1;
        // the maximum is only asked for when the queue is full
        self.backs.stage(run, Some(v));
        if was_empty {
            self.fronts.set(run, Some(v));
        }
    }

    pub fn peek_max(&mut self) -> Option<T> {
        self.backs.sync();
        self.backs.top().map(|(v, _)| v)
    }

    pub fn pop_max(&mut self) -> Option<T> {
        self.backs.sync();
        let (_, r) = self.backs.top()?;
        let (v, _) = self.runs[r].pop_back().expect("tracked run is non-empty");
        self.len -= 1;
        let b = self.runs[r].back().map(|x| x.0);
        self.backs.set(r, b);
        if b.is_none() {
            self.fronts.set(r, None);
        }
        Some(v)
    }

    /// Removes the smallest record, returning it with its run and its
    /// last-in-block flag.
    pub fn pop_min(&mut self) -> Option<(T, usize, bool)> {
        let (_, r) = self.fronts.top()?;
        let (v, last) = self.runs[r].pop_front().expect("tracked run is non-empty");
        self.len -= 1;
        let f = self.runs[r].front().map(|x| x.0);
        self.fronts.set(r, f);
        if f.is_none() {
            self.backs.stage(r, None);
        }
        Some((v, r, last))
    }
}
