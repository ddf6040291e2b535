//! Read-write LRU cache over a traced address space.
//!
//! [`AsymCache`] keeps two equal pools of `M_L / B` block frames each. The
//! read pool holds clean copies and the write pool holds dirty blocks:
//!
//! * read hit in the read pool: free;
//! * read hit in the write pool: the block is copied into the read pool and
//!   stays dirty in the write pool, free;
//! * read miss: one block read, the block enters the read pool;
//! * write hit in the write pool: free; any read-pool copy is dropped;
//! * write hit in the read pool: the block moves to the write pool, free;
//! * write miss: one block read (write-allocate), the block enters the
//!   write pool.
//!
//! Evicting a clean block is free. Evicting a dirty block writes it back,
//! one block write. [`AsymCache::flush_all`] writes back every dirty block.
//!
//! [`TracedMemory`] is a record-addressed memory whose every access goes
//! through the cache. Algorithms see it only through [`TracedStore`], which
//! exposes neither `M` nor `B`.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::model::IoCounters;

const ABSENT: u32 = u32::MAX;

/// One event in the optional trace log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TraceEvent {
    /// Block loaded from secondary memory.
    Read(u64),
    /// Dirty block written back by a flush.
    Write(u64),
    /// Clean block dropped from the read pool.
    EvictClean(u64),
    /// Dirty block evicted from the write pool and written back.
    EvictDirty(u64),
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceEvent::Read(b) => write!(f, "R {b}"),
            TraceEvent::Write(b) => write!(f, "W {b}"),
            TraceEvent::EvictClean(b) => write!(f, "EVICT_CLEAN {b}"),
            TraceEvent::EvictDirty(b) => write!(f, "EVICT_DIRTY {b}"),
        }
    }
}

impl core::str::FromStr for TraceEvent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut it = s.split_whitespace();
        let kind = it.next().ok_or(Error::Config("empty trace line"))?;
        let block: u64 = it
            .next()
            .and_then(|b| b.parse().ok())
            .ok_or(Error::Config("trace line lacks a block id"))?;
        Ok(match kind {
            "R" => TraceEvent::Read(block),
            "W" => TraceEvent::Write(block),
            "EVICT_CLEAN" => TraceEvent::EvictClean(block),
            "EVICT_DIRTY" => TraceEvent::EvictDirty(block),
            _ => return Err(Error::Config("unknown trace event")),
        })
    }
}

/// A fixed number of block frames with LRU replacement.
#[derive(Debug, Clone)]
struct Pool {
    lines: usize,
    /// (block, last-use stamp) per occupied frame.
    frames: Vec<(u64, u64)>,
    /// Frame index per block id, or `ABSENT`.
    frame_of: Vec<u32>,
}

impl Pool {
    fn new(lines: usize) -> Self {
        Pool {
            lines,
            frames: Vec::with_capacity(lines),
            frame_of: Vec::new(),
        }
    }

    fn find(&self, block: u64) -> Option<usize> {
        match self.frame_of.get(block as usize) {
            Some(&f) if f != ABSENT => Some(f as usize),
            _ => None,
        }
    }

    fn touch(&mut self, frame: usize, stamp: u64) {
        self.frames[frame].1 = stamp;
    }

    fn is_full(&self) -> bool {
        self.frames.len() >= self.lines
    }

    /// Removes and returns the least recently used block.
    fn evict_lru(&mut self) -> Option<u64> {
        let (idx, _) = self.frames.iter().enumerate().min_by_key(|(_, f)| f.1)?;
        Some(self.remove_frame(idx))
    }

    fn remove(&mut self, block: u64) -> bool {
        match self.find(block) {
            Some(f) => {
                self.remove_frame(f);
                true
            }
            None => false,
        }
    }

    fn remove_frame(&mut self, idx: usize) -> u64 {
        let (block, _) = self.frames.swap_remove(idx);
        self.frame_of[block as usize] = ABSENT;
        if let Some(&(moved, _)) = self.frames.get(idx) {
            self.frame_of[moved as usize] = idx as u32;
        }
        block
    }

    /// Inserts a block known to be absent into a pool with a free frame.
    fn insert(&mut self, block: u64, stamp: u64) {
        debug_assert!(!self.is_full());
        let b = block as usize;
        if b >= self.frame_of.len() {
            self.frame_of.resize(b + 1, ABSENT);
        }
        self.frame_of[b] = self.frames.len() as u32;
        self.frames.push((block, stamp));
    }

    fn blocks(&self) -> impl Iterator<Item = u64> + '_ {
        self.frames.iter().map(|f| f.0)
    }

    fn clear(&mut self) {
        for &(b, _) in &self.frames {
            self.frame_of[b as usize] = ABSENT;
        }
        self.frames.clear();
    }
}

/// Two-pool read-write LRU cache with block-granular cost accounting.
#[derive(Debug, Clone)]
pub struct AsymCache {
    read: Pool,
    write: Pool,
    counters: IoCounters,
    clock: u64,
    trace: Option<Vec<TraceEvent>>,
}

impl AsymCache {
    /// A cache whose pools each hold `lines` blocks.
    pub fn new(lines: usize) -> Self {
        assert!(lines > 0, "each pool needs at least one frame");
        AsymCache {
            read: Pool::new(lines),
            write: Pool::new(lines),
            counters: IoCounters::default(),
            clock: 0,
            trace: None,
        }
    }

    /// A cache of `m_l` records per pool with `b`-record blocks.
    pub fn with_capacity(m_l: usize, b: usize) -> Self {
        Self::new(m_l / b)
    }

    pub fn enable_trace(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    pub fn trace(&self) -> Option<&[TraceEvent]> {
        self.trace.as_deref()
    }

    pub fn take_trace(&mut self) -> Vec<TraceEvent> {
        self.trace.as_mut().map(core::mem::take).unwrap_or_default()
    }

    pub fn counters(&self) -> IoCounters {
        self.counters
    }

    pub fn lines(&self) -> usize {
        self.read.lines
    }

    pub fn read_pool_len(&self) -> usize {
        self.read.frames.len()
    }

    pub fn write_pool_len(&self) -> usize {
        self.write.frames.len()
    }

    pub fn in_read_pool(&self, block: u64) -> bool {
        self.read.find(block).is_some()
    }

    pub fn in_write_pool(&self, block: u64) -> bool {
        self.write.find(block).is_some()
    }

    fn log(&mut self, e: TraceEvent) {
        if let Some(t) = &mut self.trace {
            t.push(e);
        }
    }

    fn make_room_read(&mut self) {
        if self.read.is_full() {
            if let Some(v) = self.read.evict_lru() {
                self.log(TraceEvent::EvictClean(v));
            }
        }
    }

    fn make_room_write(&mut self) {
        if self.write.is_full() {
            if let Some(v) = self.write.evict_lru() {
                self.counters.block_writes += 1;
                self.log(TraceEvent::EvictDirty(v));
            }
        }
    }

    /// Accounts for reading any record of `block`.
    pub fn read(&mut self, block: u64) {
        self.clock += 1;
        let now = self.clock;
        if let Some(f) = self.read.find(block) {
            self.read.touch(f, now);
        } else if let Some(f) = self.write.find(block) {
            self.write.touch(f, now);
            self.make_room_read();
            self.read.insert(block, now);
        } else {
            self.counters.block_reads += 1;
            self.log(TraceEvent::Read(block));
            self.make_room_read();
            self.read.insert(block, now);
        }
        self.check();
    }

    /// Accounts for writing any record of `block`.
    pub fn write(&mut self, block: u64) {
        self.clock += 1;
        let now = self.clock;
        if let Some(f) = self.write.find(block) {
            self.write.touch(f, now);
            self.read.remove(block);
        } else {
            if !self.read.remove(block) {
                self.counters.block_reads += 1;
                self.log(TraceEvent::Read(block));
            }
            self.make_room_write();
            self.write.insert(block, now);
        }
        self.check();
    }

    /// Writes back every dirty block and empties both pools.
    pub fn flush_all(&mut self) {
        let dirty: Vec<u64> = self.write.blocks().collect();
        for b in dirty {
            self.counters.block_writes += 1;
            self.log(TraceEvent::Write(b));
        }
        self.write.clear();
        self.read.clear();
    }

    fn check(&self) {
        debug_assert!(self.read.frames.len() <= self.read.lines);
        debug_assert!(self.write.frames.len() <= self.write.lines);
    }
}

/// A contiguous range of a [`TracedMemory`]. Handles are plain values; the
/// memory they point into does the accounting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TracedArray {
    base: usize,
    len: usize,
}

impl TracedArray {
    /// The range `[base, base + len)` of some store's address space. Stores
    /// other than [`TracedMemory`] use this to hand out their own ranges.
    pub fn new(base: usize, len: usize) -> Self {
        TracedArray { base, len }
    }

    pub fn base(&self) -> usize {
        self.base
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// The sub-range `[start, start + len)`.
    pub fn slice(&self, start: usize, len: usize) -> TracedArray {
        assert!(start + len <= self.len, "slice out of range");
        TracedArray {
            base: self.base + start,
            len,
        }
    }
}

/// What cache-oblivious code may do with memory. Nothing here reveals the
/// cache size or the block size.
pub trait TracedStore<T> {
    /// Allocates `len` records initialized to `fill`. The initialization is
    /// not charged; the first write to each block is.
    fn alloc(&mut self, len: usize, fill: T) -> TracedArray;
    /// Returns space; the most recent allocation is reclaimed first.
    fn release(&mut self, arr: TracedArray);
    fn get(&mut self, arr: TracedArray, i: usize) -> T;
    fn set(&mut self, arr: TracedArray, i: usize, v: T);
}

/// Integer cells in the same address space as the records, for counts and
/// offsets. Each word occupies one record slot.
pub trait WordStore {
    fn alloc_words(&mut self, len: usize) -> TracedArray;
    fn release_words(&mut self, arr: TracedArray);
    fn get_word(&mut self, arr: TracedArray, i: usize) -> u64;
    fn set_word(&mut self, arr: TracedArray, i: usize, v: u64);
}

#[derive(Debug, Clone, Copy)]
enum Slot<T> {
    Rec(T),
    Word(u64),
}

/// Record-addressed memory with every access mediated by an [`AsymCache`].
#[derive(Debug, Clone)]
pub struct TracedMemory<T> {
    data: Vec<Slot<T>>,
    block: usize,
    cache: AsymCache,
}

impl<T: Copy> TracedMemory<T> {
    /// Memory with `b`-record blocks and two pools of `m_l` records each.
    pub fn new(m_l: usize, b: usize) -> Self {
        assert!(b > 0 && m_l >= b, "need at least one block per pool");
        TracedMemory {
            data: Vec::new(),
            block: b,
            cache: AsymCache::with_capacity(m_l, b),
        }
    }

    pub fn cache(&self) -> &AsymCache {
        &self.cache
    }

    pub fn cache_mut(&mut self) -> &mut AsymCache {
        &mut self.cache
    }

    pub fn counters(&self) -> IoCounters {
        self.cache.counters()
    }

    pub fn flush_all(&mut self) {
        self.cache.flush_all();
    }

    /// Places `values` in memory without charging any transfer.
    pub fn load(&mut self, values: &[T]) -> TracedArray {
        let arr = TracedArray {
            base: self.data.len(),
            len: values.len(),
        };
        self.data.extend(values.iter().map(|&v| Slot::Rec(v)));
        arr
    }

    /// Reads `arr` out without charging any transfer.
    pub fn snapshot(&self, arr: TracedArray) -> Vec<T> {
        self.data[arr.base..arr.base + arr.len]
            .iter()
            .map(|s| match s {
                Slot::Rec(v) => *v,
                Slot::Word(_) => panic!("snapshot of a word array"),
            })
            .collect()
    }

    fn block_of(&self, addr: usize) -> u64 {
        (addr / self.block) as u64
    }

    pub fn try_get(&mut self, arr: TracedArray, i: usize) -> Result<T> {
        if i >= arr.len {
            return Err(Error::IndexOutOfRange { index: i, len: arr.len });
        }
        let a = arr.base + i;
        self.cache.read(self.block_of(a));
        match self.data[a] {
            Slot::Rec(v) => Ok(v),
            Slot::Word(_) => panic!("record read from a word array"),
        }
    }

    pub fn try_set(&mut self, arr: TracedArray, i: usize, v: T) -> Result<()> {
        if i >= arr.len {
            return Err(Error::IndexOutOfRange { index: i, len: arr.len });
        }
        let a = arr.base + i;
        self.cache.write(self.block_of(a));
        self.data[a] = Slot::Rec(v);
        Ok(())
    }

    fn check_word(&self, arr: TracedArray, i: usize) -> usize {
        assert!(i < arr.len, "word index {i} out of range for length {}", arr.len);
        arr.base + i
    }
}

impl<T: Copy> TracedStore<T> for TracedMemory<T> {
    fn alloc(&mut self, len: usize, fill: T) -> TracedArray {
        let arr = TracedArray {
            base: self.data.len(),
            len,
        };
        self.data.resize(self.data.len() + len, Slot::Rec(fill));
        arr
    }

    fn release(&mut self, arr: TracedArray) {
        if arr.base + arr.len == self.data.len() {
            self.data.truncate(arr.base);
        }
    }

    fn get(&mut self, arr: TracedArray, i: usize) -> T {
        match self.try_get(arr, i) {
            Ok(v) => v,
            Err(e) => panic!("{e}"),
        }
    }

    fn set(&mut self, arr: TracedArray, i: usize, v: T) {
        if let Err(e) = self.try_set(arr, i, v) {
            panic!("{e}");
        }
    }
}

impl<T: Copy> WordStore for TracedMemory<T> {
    fn alloc_words(&mut self, len: usize) -> TracedArray {
        let arr = TracedArray {
            base: self.data.len(),
            len,
        };
        self.data.resize(self.data.len() + len, Slot::Word(0));
        arr
    }

    fn release_words(&mut self, arr: TracedArray) {
        self.release(arr);
    }

    fn get_word(&mut self, arr: TracedArray, i: usize) -> u64 {
        let a = self.check_word(arr, i);
        self.cache.read(self.block_of(a));
        match self.data[a] {
            Slot::Word(v) => v,
            Slot::Rec(_) => panic!("word read from a record array"),
        }
    }

    fn set_word(&mut self, arr: TracedArray, i: usize, v: u64) {
        let a = self.check_word(arr, i);
        self.cache.write(self.block_of(a));
        self.data[a] = Slot::Word(v);
    }
}

/// Reference LRU of `lines` frames; returns the miss count of `trace`.
/// Kept deliberately naive as an independent check of the read pool.
pub fn reference_lru_misses(lines: usize, trace: &[u64]) -> u64 {
    let mut order: Vec<u64> = vec![];
    let mut misses = 0;
    for &b in trace {
        if let Some(p) = order.iter().position(|&x| x == b) {
            order.remove(p);
        } else {
            misses += 1;
            if order.len() == lines {
                order.remove(0);
            }
        }
        order.push(b);
    }
    misses
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeSet;
    use alloc::string::ToString;
    use proptest::prelude::*;

    #[test]
    fn cold_read_then_hit() {
        let mut mem = TracedMemory::new(64, 8);
        let a = mem.load(&[0u32; 100]);
        mem.get(a, 3);
        assert_eq!(mem.counters(), IoCounters { block_reads: 1, block_writes: 0 });
        mem.get(a, 3);
        mem.get(a, 7);
        assert_eq!(mem.counters().block_reads, 1);
    }

    #[test]
    fn cyclic_reads_thrash() {
        let lines = 8;
        let mut c = AsymCache::new(lines);
        for _ in 0..5 {
            for b in 0..=lines as u64 {
                c.read(b);
            }
        }
        assert_eq!(c.counters().block_reads, 5 * (lines as u64 + 1));
    }

    #[test]
    fn write_allocate_and_flush() {
        let mut mem = TracedMemory::new(64, 8);
        let a = mem.load(&[0u32; 16]);
        mem.set(a, 0, 5);
        assert_eq!(mem.counters(), IoCounters { block_reads: 1, block_writes: 0 });
        mem.flush_all();
        assert_eq!(mem.counters(), IoCounters { block_reads: 1, block_writes: 1 });
        mem.flush_all();
        assert_eq!(mem.counters().block_writes, 1);
    }

    #[test]
    fn dirty_eviction_costs_one_write() {
        let mut c = AsymCache::new(2);
        c.enable_trace();
        c.write(0);
        c.write(1);
        c.write(2);
        assert_eq!(c.counters(), IoCounters { block_reads: 3, block_writes: 1 });
        assert_eq!(c.trace().unwrap().last(), Some(&TraceEvent::EvictDirty(0)));
    }

    #[test]
    fn read_hit_in_write_pool_keeps_dirty_copy() {
        let mut c = AsymCache::new(4);
        c.write(9);
        c.read(9);
        assert!(c.in_read_pool(9) && c.in_write_pool(9));
        assert_eq!(c.counters().block_reads, 1);
        c.flush_all();
        assert_eq!(c.counters().block_writes, 1);
    }

    #[test]
    fn write_hit_in_read_pool_moves_block() {
        let mut c = AsymCache::new(4);
        c.read(3);
        c.write(3);
        assert!(!c.in_read_pool(3) && c.in_write_pool(3));
        assert_eq!(c.counters().block_reads, 1);
    }

    #[test]
    fn flush_costs() {
        let mut c = AsymCache::new(4);
        c.flush_all();
        assert_eq!(c.counters(), IoCounters::default());
        c.read(1);
        c.read(2);
        c.flush_all();
        assert_eq!(c.counters().block_writes, 0);
        for b in 0..3 {
            c.write(b);
        }
        let before = c.counters().block_writes;
        c.flush_all();
        assert_eq!(c.counters().block_writes - before, 3);
        assert_eq!(c.read_pool_len() + c.write_pool_len(), 0);
    }

    #[test]
    fn trace_lines_roundtrip() {
        let mut c = AsymCache::new(1);
        c.enable_trace();
        c.read(0);
        c.read(1);
        c.write(2);
        c.write(3);
        c.flush_all();
        let lines: Vec<_> = c.trace().unwrap().iter().map(|e| e.to_string()).collect();
        assert_eq!(lines, ["R 0", "R 1", "EVICT_CLEAN 0", "R 2", "R 3", "EVICT_DIRTY 2", "W 3"]);
        let parsed: Vec<TraceEvent> = lines.iter().map(|l| l.parse().unwrap()).collect();
        assert_eq!(parsed, c.take_trace());
    }

    #[test]
    fn words_share_blocks_with_records() {
        let mut mem = TracedMemory::new(64, 8);
        let a = mem.load(&[1u8; 4]);
        let w = mem.alloc_words(4);
        mem.get(a, 0);
        assert_eq!(mem.get_word(w, 3), 0);
        mem.set_word(w, 3, 9);
        assert_eq!(mem.get_word(w, 3), 9);
        assert_eq!(mem.counters(), IoCounters { block_reads: 1, block_writes: 0 });
        mem.release_words(w);
        assert_eq!(mem.snapshot(a), [1; 4]);
    }

    #[test]
    fn out_of_range_access() {
        let mut mem = TracedMemory::new(64, 8);
        let a = mem.load(&[1u8; 10]);
        assert_eq!(mem.try_get(a, 10), Err(Error::IndexOutOfRange { index: 10, len: 10 }));
        assert!(mem.try_set(a, 11, 0).is_err());
        assert_eq!(mem.counters(), IoCounters::default());
    }

    proptest! {
        #[test]
        fn read_only_matches_reference(
            lines in 1usize..12,
            trace in prop::collection::vec(0u64..30, 0..400),
        ) {
            let mut c = AsymCache::new(lines);
            for &b in &trace {
                c.read(b);
            }
            prop_assert_eq!(c.counters().block_reads, reference_lru_misses(lines, &trace));
            prop_assert_eq!(c.counters().block_writes, 0);
        }

        #[test]
        fn every_dirty_eviction_is_one_write(
            lines in 1usize..6,
            ops in prop::collection::vec((any::<bool>(), 0u64..16), 0..300),
        ) {
            let mut c = AsymCache::new(lines);
            c.enable_trace();
            for &(w, b) in &ops {
                let before = c.counters();
                let mark = c.trace().unwrap().len();
                if w { c.write(b) } else { c.read(b) }
                let new = &c.trace().unwrap()[mark..];
                let dirty = new.iter().filter(|e| matches!(e, TraceEvent::EvictDirty(_))).count() as u64;
                let loads = new.iter().filter(|e| matches!(e, TraceEvent::Read(_))).count() as u64;
                prop_assert_eq!(c.counters().block_writes - before.block_writes, dirty);
                prop_assert_eq!(c.counters().block_reads - before.block_reads, loads);
                prop_assert!(c.read_pool_len() <= lines && c.write_pool_len() <= lines);
            }
        }

        #[test]
        fn dirty_conservation(lines in 1usize..8, blocks in prop::collection::vec(0u64..40, 0..100)) {
            // each block written in one consecutive burst, so an evicted dirty
            // block is never loaded again
            let mut c = AsymCache::new(lines);
            let mut seen = BTreeSet::new();
            let mut last = None;
            for &b in &blocks {
                if last != Some(b) && seen.contains(&b) {
                    continue;
                }
                c.write(b);
                c.write(b);
                seen.insert(b);
                last = Some(b);
            }
            c.flush_all();
            prop_assert_eq!(c.counters().block_writes, seen.len() as u64);
        }
    }
}
