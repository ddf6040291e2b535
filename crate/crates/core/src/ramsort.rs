//! Sorting on the asymmetric RAM and a sequential run of the asymmetric
//! PRAM sample sort, both counted at word granularity.
//!
//! One comparison-key load is one word read and one store of a record,
//! pointer, flag word or color is one word write.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bounds::ceil_log2;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WordCounters {
    pub word_reads: u64,
    pub word_writes: u64,
}

impl WordCounters {
    pub fn cost(&self, omega: u64) -> u64 {
        self.word_reads + omega * self.word_writes
    }
}

const NIL: u32 = u32::MAX;

#[derive(Clone, Copy)]
struct Node<T> {
    key: T,
    prio: u32,
    left: u32,
    right: u32,
}

/// Treap with top-down insertion: the new node is linked in where its
/// priority belongs and the subtree below is split around it. The split
/// touches as many links as a bottom-up insert would rotate, which is
/// fewer than two in expectation whatever the input order. Field
/// accesses are charged to a [`WordCounters`].
struct Treap<'c, T> {
    nodes: Vec<Node<T>>,
    root: u32,
    rng: ChaCha8Rng,
    c: &'c mut WordCounters,
}

/// A child slot: `(node, left?)`, or the root pointer when `node` is NIL.
type Hook = (u32, bool);

impl<'c, T: Copy + Ord> Treap<'c, T> {
    fn new(c: &'c mut WordCounters, cap: usize) -> Self {
        Treap {
            nodes: Vec::with_capacity(cap),
            root: NIL,
            rng: ChaCha8Rng::seed_from_u64(0x7265_6170),
            c,
        }
    }

    fn key(&mut self, x: u32) -> T {
        self.c.word_reads += 1;
        self.nodes[x as usize].key
    }

    fn prio(&mut self, x: u32) -> u32 {
        self.c.word_reads += 1;
        self.nodes[x as usize].prio
    }

    fn child(&mut self, x: u32, left: bool) -> u32 {
        self.c.word_reads += 1;
        let n = &self.nodes[x as usize];
        if left {
            n.left
        } else {
            n.right
        }
    }

    fn link(&mut self, (x, left): Hook, y: u32) {
        let slot = if x == NIL {
            &mut self.root
        } else if left {
            &mut self.nodes[x as usize].left
        } else {
            &mut self.nodes[x as usize].right
        };
        if *slot != y {
            *slot = y;
            self.c.word_writes += 1;
        }
    }

    fn insert(&mut self, v: T) {
        let prio: u32 = self.rng.gen();
        let mut hook: Hook = (NIL, false);
        let mut cur = self.root;
        while cur != NIL && self.prio(cur) >= prio {
            let left = v < self.key(cur);
            hook = (cur, left);
            cur = self.child(cur, left);
        }
        let z = self.nodes.len() as u32;
        // the new node: one record store
        self.c.word_writes += 1;
        self.nodes.push(Node {
            key: v,
            prio,
            left: NIL,
            right: NIL,
        });
        self.link(hook, z);
        // split the displaced subtree into keys <= v and keys > v
        let (mut lo, mut hi): (Hook, Hook) = ((z, true), (z, false));
        while cur != NIL {
            if self.key(cur) <= v {
                self.link(lo, cur);
                lo = (cur, false);
                cur = self.child(cur, false);
            } else {
                self.link(hi, cur);
                hi = (cur, true);
                cur = self.child(cur, true);
            }
        }
        self.link(lo, NIL);
        self.link(hi, NIL);
    }

    /// In-order traversal. The explicit stack is memory too: one write per
    /// push, and every record is stored once into `out`.
    fn drain_into(&mut self, out: &mut Vec<T>) {
        let mut stack = Vec::new();
        let mut cur = self.root;
        loop {
            while cur != NIL {
                self.c.word_writes += 1;
                stack.push(cur);
                cur = self.child(cur, true);
            }
            let Some(x) = stack.pop() else { break };
            let k = self.key(x);
            self.c.word_writes += 1;
            out.push(k);
            cur = self.child(x, false);
        }
    }

    fn height(&self) -> usize {
        let mut best = 0;
        let mut stack = alloc::vec![(self.root, 1usize)];
        while let Some((x, d)) = stack.pop() {
            if x == NIL {
                continue;
            }
            best = best.max(d);
            let n = &self.nodes[x as usize];
            stack.push((n.left, d + 1));
            stack.push((n.right, d + 1));
        }
        best
    }
}

/// Sorts by inserting every record into a balanced search tree and reading
/// the tree off in order.
pub fn ram_tree_sort<T: Copy + Ord>(records: &[T], c: &mut WordCounters) -> Vec<T> {
    let mut out = Vec::with_capacity(records.len());
    if records.len() == 1 {
        c.word_reads += 1;
        c.word_writes += 1;
        out.push(records[0]);
        return out;
    }
    let mut t = Treap::new(c, records.len());
    for &r in records {
        t.c.word_reads += 1;
        t.insert(r);
    }
    t.drain_into(&mut out);
    out
}

/// Height of the search tree built over `records`, uncounted.
pub fn ram_tree_height<T: Copy + Ord>(records: &[T]) -> usize {
    let mut c = WordCounters::default();
    let mut t = Treap::new(&mut c, records.len());
    for &r in records {
        t.insert(r);
    }
    t.height()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PramReport {
    pub counters: WordCounters,
    /// `ceil(log2 n)`, the sampling period.
    pub log_n: usize,
    pub sample_size: usize,
    pub buckets: usize,
    pub bucket_capacity: usize,
    /// Largest bucket population.
    pub max_bucket: usize,
    /// Buckets filled beyond half their capacity.
    pub crowded_buckets: usize,
    /// Random probes over all records in the placement step.
    pub placement_tries: u64,
    /// Most probes any single record needed.
    pub max_tries: u64,
    /// Writes made by each step, in order: sample, sample sort, bucket
    /// arrays, search and placement, pack, per-bucket sort.
    pub step_writes: [u64; 6],
}

impl PramReport {
    pub fn tries_per_record(&self, n: usize) -> f64 {
        if n == 0 {
            0.0
        } else {
            self.placement_tries as f64 / n as f64
        }
    }
}

/// Bottom-up mergesort over a scratch array, counting every load and store.
fn counted_mergesort<T: Copy + Ord>(v: &mut Vec<T>, c: &mut WordCounters) {
    let n = v.len();
    if n < 2 {
        return;
    }
    let mut src = core::mem::take(v);
    let mut dst: Vec<T> = src.clone();
    let mut width = 1;
    while width < n {
        let mut lo = 0;
        while lo < n {
            let mid = (lo + width).min(n);
            let hi = (lo + 2 * width).min(n);
            let (mut i, mut j) = (lo, mid);
            for slot in dst[lo..hi].iter_mut() {
                let take_left = j >= hi || (i < mid && {
                    c.word_reads += 2;
                    src[i] <= src[j]
                });
                if j >= hi && i < mid {
                    c.word_reads += 1;
                }
                *slot = if take_left {
                    i += 1;
                    src[i - 1]
                } else {
                    if i >= mid {
                        c.word_reads += 1;
                    }
                    j += 1;
                    src[j - 1]
                };
                c.word_writes += 1;
            }
            lo = hi;
        }
        core::mem::swap(&mut src, &mut dst);
        width *= 2;
    }
    *v = src;
}

/// Sample sort with random bucket placement. Every sampled record is
/// sorted with a counted mergesort, buckets are arrays of
/// `slack * log^2 n` slots with one occupancy bit per slot, and each bucket
/// is finally sorted with [`ram_tree_sort`].
pub fn pram_sample_sort_sim<T: Copy + Ord>(records: &[T], seed: u64, slack: usize) -> Result<(Vec<T>, PramReport)> {
    let n = records.len();
    let mut rep = PramReport::default();
    if n < 2 {
        rep.counters.word_reads = n as u64;
        rep.counters.word_writes = n as u64;
        return Ok((records.to_vec(), rep));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // stream 0 belongs to the input generators
    rng.set_stream(1);
    let lg = ceil_log2(n as u64).max(1) as usize;
    rep.log_n = lg;
    let mut c = WordCounters::default();
    let mut mark = c;
    let mut step = 0;
    let mut close_step = |c: &WordCounters, rep: &mut PramReport| {
        rep.step_writes[step] = c.word_writes - mark.word_writes;
        mark = *c;
        step += 1;
    };

    // 1. sample with probability 1/log n and sort the sample
    let p = 1.0 / lg as f64;
    let mut sample = Vec::new();
    for &r in records {
        c.word_reads += 1;
        if rng.gen_bool(p) {
            c.word_writes += 1;
            sample.push(r);
        }
    }
    rep.sample_size = sample.len();
    close_step(&c, &mut rep);
    counted_mergesort(&mut sample, &mut c);
    close_step(&c, &mut rep);

    // 2. every log n-th sample is a splitter; allocate the bucket arrays
    let splitters: Vec<T> = sample.iter().skip(lg - 1).step_by(lg).copied().collect();
    c.word_reads += splitters.len() as u64;
    c.word_writes += splitters.len() as u64;
    let buckets = splitters.len() + 1;
    let cap = (slack * lg * lg).max(1);
    rep.buckets = buckets;
    rep.bucket_capacity = cap;
    let mut slots: Vec<Option<T>> = vec![None; buckets * cap];
    let mut occupied = vec![0u64; (buckets * cap).div_ceil(64)];
    // clearing the occupancy bitmap
    c.word_writes += occupied.len() as u64;
    close_step(&c, &mut rep);

    // 3 and 4. binary search for each record's bucket (bucket j holds
    // (s_{j-1}, s_j]), then probe random slots of that bucket until a free
    // one is found; the bucket index stays in a register
    let limit = (slack * lg) as u64;
    let mut pop = vec![0usize; buckets];
    for &r in records {
        c.word_reads += 1;
        let (mut lo, mut hi) = (0, splitters.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            c.word_reads += 1;
            if splitters[mid] < r {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        let b = lo;
        pop[b] += 1;
        let mut tries = 0u64;
        loop {
            tries += 1;
            if tries > limit {
                return Err(Error::PlacementFailure { limit: limit as usize });
            }
            let s = b * cap + rng.gen_range(0..cap);
            c.word_reads += 1;
            if occupied[s / 64] >> (s % 64) & 1 == 0 {
                occupied[s / 64] |= 1 << (s % 64);
                slots[s] = Some(r);
                c.word_writes += 2;
                break;
            }
        }
        rep.placement_tries += tries;
        rep.max_tries = rep.max_tries.max(tries);
    }
    rep.max_bucket = pop.iter().copied().max().unwrap_or(0);
    rep.crowded_buckets = pop.iter().filter(|&&p| 2 * p > cap).count();
    close_step(&c, &mut rep);

    // 5. pack out the empty cells, bucket by bucket
    let mut packed: Vec<T> = Vec::with_capacity(n);
    let mut starts = Vec::with_capacity(buckets + 1);
    for b in 0..buckets {
        starts.push(packed.len());
        for w in (b * cap / 64)..((b + 1) * cap).div_ceil(64) {
            c.word_reads += 1;
            let _ = occupied[w];
        }
        for s in &slots[b * cap..(b + 1) * cap] {
            if let Some(r) = s {
                c.word_reads += 1;
                c.word_writes += 1;
                packed.push(*r);
            }
        }
    }
    starts.push(packed.len());
    close_step(&c, &mut rep);

    // 7. sort each bucket on the asymmetric RAM
    let mut out = Vec::with_capacity(n);
    for w in starts.windows(2) {
        out.extend(ram_tree_sort(&packed[w[0]..w[1]], &mut c));
    }
    close_step(&c, &mut rep);
    rep.counters = c;
    Ok((out, rep))
}
