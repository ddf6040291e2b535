//! Explicit-transfer cost model.
//!
//! A [`Machine`] owns the configuration, the transfer counters and the
//! primary-memory [`Arena`]. Secondary memory is made of [`ExtArray`]s whose
//! contents can only be moved through [`Machine::read_block`],
//! [`Machine::write_block`] and [`Machine::append_block`]; each call charges
//! exactly one transfer. Computation on data held in arena buffers is free.

use alloc::vec::Vec;
use core::cmp::Ordering;
use core::ops::{Deref, DerefMut};

use crate::error::{Error, Result};

/// Model parameters, all sizes in records.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MemoryConfig {
    /// Primary-memory capacity.
    pub m: usize,
    /// Block size.
    pub b: usize,
    /// Cost of one block write relative to one block read.
    pub omega: usize,
    /// Branching multiplier; fan-outs become `lambda * m / b`.
    pub lambda: usize,
    /// Extra primary records allowed for cursors, tags and I/O buffers.
    pub aux_slack: usize,
    /// Require `m >= b * b`.
    pub tall_cache: bool,
}

impl MemoryConfig {
    /// Builds a configuration with the default `aux_slack`.
    pub fn new(m: usize, b: usize, omega: usize, lambda: usize) -> Result<Self> {
        let cfg = MemoryConfig {
            m,
            b,
            omega,
            lambda,
            aux_slack: 0,
            tall_cache: false,
        };
        if b == 0 {
            return Err(Error::Config("block size must be at least 1"));
        }
        let cfg = MemoryConfig {
            aux_slack: Self::default_aux_slack(m, b, lambda),
            ..cfg
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `2B + 2 * ceil(lambda * M / B)`: load and store buffers plus one cursor
    /// and one last-in-block tag per merge input (a cursor is one record wide).
    pub fn default_aux_slack(m: usize, b: usize, lambda: usize) -> usize {
        2 * b + 2 * (lambda * m).div_ceil(b.max(1))
    }

    pub fn with_aux_slack(mut self, aux_slack: usize) -> Result<Self> {
        self.aux_slack = aux_slack;
        self.validate()?;
        Ok(self)
    }

    pub fn with_tall_cache(mut self) -> Result<Self> {
        self.tall_cache = true;
        self.validate()?;
        Ok(self)
    }

    pub fn with_lambda(mut self, lambda: usize) -> Result<Self> {
        self.lambda = lambda;
        self.aux_slack = self
            .aux_slack
            .max(Self::default_aux_slack(self.m, self.b, lambda));
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.b == 0 {
            return Err(Error::Config("block size must be at least 1"));
        }
        if self.m < self.b {
            return Err(Error::Config("M must be at least B"));
        }
        if self.m % self.b != 0 {
            return Err(Error::Config("M must be a multiple of B"));
        }
        if self.omega == 0 {
            return Err(Error::Config("omega must be at least 1"));
        }
        if self.lambda == 0 {
            return Err(Error::Config("lambda must be at least 1"));
        }
        if self.lambda > self.omega {
            return Err(Error::Config("lambda must not exceed omega"));
        }
        if self.tall_cache && self.m < self.b * self.b {
            return Err(Error::Config("tall cache requires M >= B^2"));
        }
        if self.aux_slack < Self::default_aux_slack(self.m, self.b, self.lambda) {
            return Err(Error::Config("aux_slack below 2B + 2*ceil(lambda*M/B)"));
        }
        Ok(())
    }

    /// Merge fan-in, splitter count and buffer-tree branching: `lambda * M / B`.
    pub fn fanout(&self) -> usize {
        self.lambda * self.m / self.b
    }

    /// Largest input handled by the selection-sort base case: `lambda * M`.
    pub fn base_len(&self) -> usize {
        self.lambda * self.m
    }

    /// Arena capacity: `M + aux_slack`.
    pub fn capacity(&self) -> usize {
        self.m + self.aux_slack
    }

    pub fn blocks(&self, records: usize) -> usize {
        records.div_ceil(self.b)
    }
}

/// Block transfer counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct IoCounters {
    pub block_reads: u64,
    pub block_writes: u64,
}

impl IoCounters {
    /// `block_reads + omega * block_writes`.
    pub fn cost(&self, omega: usize) -> u64 {
        self.block_reads + omega as u64 * self.block_writes
    }

    /// Counters accumulated since `earlier`.
    pub fn since(&self, earlier: &IoCounters) -> IoCounters {
        IoCounters {
            block_reads: self.block_reads - earlier.block_reads,
            block_writes: self.block_writes - earlier.block_writes,
        }
    }
}

/// A sortable record. Ordering is by `(key, tiebreak)`; the tiebreak is the
/// record's input position, which makes keys unique within one instance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Record {
    pub key: u64,
    pub tiebreak: u32,
    pub payload: u32,
}

impl Record {
    pub fn new(key: u64, tiebreak: u32) -> Self {
        Record {
            key,
            tiebreak,
            payload: tiebreak ^ (key as u32),
        }
    }
}

/// A block-aligned array in secondary memory.
///
/// There is no per-record accessor. [`ExtArray::from_vec`] and
/// [`ExtArray::into_vec`] place and inspect data outside the model and exist
/// for harnesses and tests only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtArray<T> {
    data: Vec<T>,
    block: usize,
}

impl<T: Copy> ExtArray<T> {
    pub fn new(block: usize) -> Self {
        assert!(block > 0, "block size must be positive");
        ExtArray {
            data: Vec::new(),
            block,
        }
    }

    /// Places `data` in secondary memory without charging any transfer.
    pub fn from_vec(data: Vec<T>, block: usize) -> Self {
        assert!(block > 0, "block size must be positive");
        ExtArray { data, block }
    }

    /// Takes the contents back out of the model without charging transfers.
    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    /// Uncharged view of the contents, for verification only.
    pub fn inspect(&self) -> &[T] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn block_size(&self) -> usize {
        self.block
    }

    pub fn num_blocks(&self) -> usize {
        self.data.len().div_ceil(self.block)
    }

    /// Number of records in block `index` (the last block may be partial).
    pub fn block_len(&self, index: usize) -> usize {
        let start = index * self.block;
        self.data.len().saturating_sub(start).min(self.block)
    }

    /// Splits off the blocks from `first_block` on. Relabels storage only.
    pub fn split_off_blocks(&mut self, first_block: usize) -> ExtArray<T> {
        let at = (first_block * self.block).min(self.data.len());
        ExtArray {
            data: self.data.split_off(at),
            block: self.block,
        }
    }

    /// Evenly partitions the array into `parts` pieces at block granularity.
    pub fn partition_blocks(mut self, parts: usize) -> Vec<ExtArray<T>> {
        let parts = parts.max(1);
        let nb = self.num_blocks();
        let mut sizes: Vec<usize> = (0..parts)
            .map(|i| nb / parts + usize::from(i < nb % parts))
            .filter(|&s| s > 0)
            .collect();
        if sizes.is_empty() {
            sizes.push(0);
        }
        let mut out = Vec::with_capacity(sizes.len());
        for &s in sizes.iter().rev().skip(1) {
            let first = self.num_blocks() - s;
            out.push(self.split_off_blocks(first));
        }
        out.push(self);
        out.reverse();
        out
    }

    /// Drops every record from position `len` on.
    pub fn truncate(&mut self, len: usize) {
        self.data.truncate(len);
    }

    fn block_range(&self, index: usize) -> core::ops::Range<usize> {
        let start = index * self.block;
        start..(start + self.block).min(self.data.len())
    }
}

/// How the arena reacts to a reservation beyond its capacity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// Over-budget reservations fail with [`Error::BudgetExceeded`].
    #[default]
    Strict,
    /// Over-budget reservations succeed and are recorded as warnings.
    Audit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BudgetWarning {
    pub requested: usize,
    pub in_use: usize,
    pub capacity: usize,
}

/// Primary-memory budget, in records.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arena {
    capacity: usize,
    in_use: usize,
    peak: usize,
    mode: Mode,
    warnings: Vec<BudgetWarning>,
}

impl Arena {
    pub fn new(capacity: usize, mode: Mode) -> Self {
        Arena {
            capacity,
            in_use: 0,
            peak: 0,
            mode,
            warnings: Vec::new(),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn in_use(&self) -> usize {
        self.in_use
    }

    pub fn peak(&self) -> usize {
        self.peak
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn warnings(&self) -> &[BudgetWarning] {
        &self.warnings
    }

    /// Reserves `records` records.
    pub fn reserve(&mut self, records: usize) -> Result<()> {
        if self.in_use + records > self.capacity {
            let w = BudgetWarning {
                requested: records,
                in_use: self.in_use,
                capacity: self.capacity,
            };
            match self.mode {
                Mode::Strict => {
                    return Err(Error::BudgetExceeded {
                        requested: w.requested,
                        in_use: w.in_use,
                        capacity: w.capacity,
                    })
                }
                Mode::Audit => self.warnings.push(w),
            }
        }
        self.in_use += records;
        self.peak = self.peak.max(self.in_use);
        Ok(())
    }

    pub fn release(&mut self, records: usize) {
        debug_assert!(records <= self.in_use, "arena release underflow");
        self.in_use -= records.min(self.in_use);
    }
}

/// A buffer living in primary memory, reserved from the arena.
///
/// Must be handed back with [`Machine::free`]; dropping it leaks the
/// reservation, which strict-mode tests then detect.
#[derive(Debug)]
pub struct ArenaBuf<T> {
    data: Vec<T>,
    reserved: usize,
}

impl<T> ArenaBuf<T> {
    pub fn reserved(&self) -> usize {
        self.reserved
    }
}

impl<T> Deref for ArenaBuf<T> {
    type Target = Vec<T>;
    fn deref(&self) -> &Vec<T> {
        &self.data
    }
}

impl<T> DerefMut for ArenaBuf<T> {
    fn deref_mut(&mut self) -> &mut Vec<T> {
        &mut self.data
    }
}

/// One simulation run: configuration, transfer counters and arena.
#[derive(Debug, Clone)]
pub struct Machine {
    cfg: MemoryConfig,
    counters: IoCounters,
    arena: Arena,
    comparisons: u64,
}

impl Machine {
    pub fn new(cfg: MemoryConfig, mode: Mode) -> Self {
        Machine {
            cfg,
            counters: IoCounters::default(),
            arena: Arena::new(cfg.capacity(), mode),
            comparisons: 0,
        }
    }

    pub fn strict(cfg: MemoryConfig) -> Self {
        Self::new(cfg, Mode::Strict)
    }

    pub fn config(&self) -> &MemoryConfig {
        &self.cfg
    }

    pub fn counters(&self) -> IoCounters {
        self.counters
    }

    pub fn cost(&self) -> u64 {
        self.counters.cost(self.cfg.omega)
    }

    pub fn arena(&self) -> &Arena {
        &self.arena
    }

    /// Record comparisons tallied for diagnostics; they carry no cost.
    pub fn comparisons(&self) -> u64 {
        self.comparisons
    }

    pub fn tally_comparisons(&mut self, n: u64) {
        self.comparisons += n;
    }

    /// Reserves a primary-memory buffer able to hold `records` values.
    pub fn alloc<T>(&mut self, records: usize) -> Result<ArenaBuf<T>> {
        self.arena.reserve(records)?;
        Ok(ArenaBuf {
            data: Vec::with_capacity(records),
            reserved: records,
        })
    }

    pub fn free<T>(&mut self, buf: ArenaBuf<T>) {
        self.arena.release(buf.reserved);
    }

    /// Reserves primary memory that is not backed by a typed buffer
    /// (cursor tables, tags, resident keys).
    pub fn reserve_words(&mut self, words: usize) -> Result<()> {
        self.arena.reserve(words)
    }

    pub fn release_words(&mut self, words: usize) {
        self.arena.release(words)
    }

    /// Copies block `index` of `arr` into `dest`, replacing its contents.
    pub fn read_block<T: Copy>(
        &mut self,
        arr: &ExtArray<T>,
        index: usize,
        dest: &mut Vec<T>,
    ) -> Result<()> {
        let blocks = arr.num_blocks();
        if index >= blocks {
            return Err(Error::BlockOutOfRange { index, blocks });
        }
        dest.clear();
        dest.extend_from_slice(&arr.data[arr.block_range(index)]);
        self.counters.block_reads += 1;
        Ok(())
    }

    /// Overwrites block `index` of `arr` with `src`, which must have exactly
    /// the block's length.
    pub fn write_block<T: Copy>(
        &mut self,
        arr: &mut ExtArray<T>,
        index: usize,
        src: &[T],
    ) -> Result<()> {
        let blocks = arr.num_blocks();
        if index >= blocks {
            return Err(Error::BlockOutOfRange { index, blocks });
        }
        let range = arr.block_range(index);
        if src.len() != range.len() {
            return Err(Error::BlockLength {
                got: src.len(),
                expected: range.len(),
            });
        }
        arr.data[range].copy_from_slice(src);
        self.counters.block_writes += 1;
        Ok(())
    }

    /// Writes `src` (at most one block) as a new block at the end of `arr`.
    /// The array must currently end on a block boundary.
    pub fn append_block<T: Copy>(&mut self, arr: &mut ExtArray<T>, src: &[T]) -> Result<()> {
        if src.len() > arr.block || src.is_empty() {
            return Err(Error::BlockLength {
                got: src.len(),
                expected: arr.block,
            });
        }
        if arr.data.len() % arr.block != 0 {
            return Err(Error::BlockLength {
                got: arr.block_len(arr.num_blocks() - 1),
                expected: arr.block,
            });
        }
        arr.data.extend_from_slice(src);
        self.counters.block_writes += 1;
        Ok(())
    }

    /// Loads all of `arr` into a new primary-memory buffer.
    pub fn read_all<T: Copy>(&mut self, arr: &ExtArray<T>) -> Result<ArenaBuf<T>> {
        let mut out = self.alloc::<T>(arr.len())?;
        let mut blk = alloc::vec::Vec::with_capacity(arr.block);
        for i in 0..arr.num_blocks() {
            self.read_block(arr, i, &mut blk)?;
            out.extend_from_slice(&blk);
        }
        Ok(out)
    }

    /// Writes `records` to a new array, one block write per block.
    pub fn write_all<T: Copy>(&mut self, records: &[T]) -> Result<ExtArray<T>> {
        let mut out = ExtArray::new(self.cfg.b);
        for chunk in records.chunks(self.cfg.b) {
            self.append_block(&mut out, chunk)?;
        }
        Ok(out)
    }

    /// Appends `records` to `arr`, which may end in a partial block. The
    /// partial block is read back, completed and rewritten.
    pub fn extend<T: Copy>(&mut self, arr: &mut ExtArray<T>, records: &[T], scratch: &mut Vec<T>) -> Result<()> {
        if records.is_empty() {
            return Ok(());
        }
        let b = arr.block;
        let mut rest = records;
        let tail = arr.len() % b;
        if tail != 0 {
            let last = arr.num_blocks() - 1;
            self.read_block(arr, last, scratch)?;
            let take = (b - tail).min(rest.len());
            scratch.extend_from_slice(&rest[..take]);
            arr.data.truncate(last * b);
            self.append_block(arr, scratch)?;
            rest = &rest[take..];
        }
        for chunk in rest.chunks(b) {
            self.append_block(arr, chunk)?;
        }
        Ok(())
    }
}

/// Streams records into an output array through one resident store block.
#[derive(Debug)]
pub struct BlockWriter<T> {
    out: ExtArray<T>,
    buf: ArenaBuf<T>,
    pushed: usize,
}

impl<T: Copy> BlockWriter<T> {
    pub fn new(m: &mut Machine) -> Result<Self> {
        let b = m.config().b;
        Ok(BlockWriter {
            out: ExtArray::new(b),
            buf: m.alloc(b)?,
            pushed: 0,
        })
    }

    pub fn push(&mut self, m: &mut Machine, rec: T) -> Result<()> {
        self.buf.push(rec);
        self.pushed += 1;
        if self.buf.len() == self.out.block {
            m.append_block(&mut self.out, &self.buf)?;
            self.buf.clear();
        }
        Ok(())
    }

    pub fn pushed(&self) -> usize {
        self.pushed
    }

    /// The most recently pushed record, if any.
    pub fn last(&self) -> Option<T> {
        if let Some(&r) = self.buf.last() {
            return Some(r);
        }
        self.out.data.last().copied()
    }

    /// Frees the store buffer by spilling its partial block to secondary
    /// memory (one block write). [`Parked::resume`] reads it back.
    pub fn park(mut self, m: &mut Machine) -> Result<Parked<T>> {
        let mut spill = ExtArray::new(self.out.block);
        if !self.buf.is_empty() {
            m.append_block(&mut spill, &self.buf)?;
            self.buf.clear();
        }
        m.free(self.buf);
        Ok(Parked {
            out: self.out,
            spill,
            pushed: self.pushed,
        })
    }

    /// Flushes the partial block and releases the store buffer.
    pub fn finish(mut self, m: &mut Machine) -> Result<ExtArray<T>> {
        if !self.buf.is_empty() {
            m.append_block(&mut self.out, &self.buf)?;
            self.buf.clear();
        }
        m.free(self.buf);
        Ok(self.out)
    }
}

/// Streams the records of an array through one resident load block. Each
/// block is read exactly once.
#[derive(Debug)]
pub struct BlockReader<'a, T> {
    arr: &'a ExtArray<T>,
    buf: ArenaBuf<T>,
    next_block: usize,
    pos: usize,
}

impl<'a, T: Copy> BlockReader<'a, T> {
    pub fn new(m: &mut Machine, arr: &'a ExtArray<T>) -> Result<Self> {
        Ok(BlockReader {
            arr,
            buf: m.alloc(m.config().b)?,
            next_block: 0,
            pos: 0,
        })
    }

    pub fn peek(&mut self, m: &mut Machine) -> Result<Option<T>> {
        if self.pos == self.buf.len() {
            if self.next_block == self.arr.num_blocks() {
                return Ok(None);
            }
            m.read_block(self.arr, self.next_block, &mut self.buf)?;
            self.next_block += 1;
            self.pos = 0;
        }
        Ok(Some(self.buf[self.pos]))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn next(&mut self, m: &mut Machine) -> Result<Option<T>> {
        let r = self.peek(m)?;
        if r.is_some() {
            self.pos += 1;
        }
        Ok(r)
    }

    pub fn finish(self, m: &mut Machine) {
        m.free(self.buf);
    }
}

/// A [`BlockWriter`] whose store buffer lives in secondary memory.
#[derive(Debug)]
pub struct Parked<T> {
    out: ExtArray<T>,
    spill: ExtArray<T>,
    pushed: usize,
}

impl<T: Copy> Parked<T> {
    /// Reallocates the store buffer and reads the spilled block back.
    pub fn resume(self, m: &mut Machine) -> Result<BlockWriter<T>> {
        let mut buf = m.alloc(m.config().b)?;
        if !self.spill.is_empty() {
            m.read_block(&self.spill, 0, &mut buf)?;
        }
        Ok(BlockWriter {
            out: self.out,
            buf,
            pushed: self.pushed,
        })
    }
}

/// Scans `arr` block by block, calling `f` on every block's records.
pub fn scan_blocks<T: Copy>(
    m: &mut Machine,
    arr: &ExtArray<T>,
    load: &mut Vec<T>,
    mut f: impl FnMut(&mut Machine, &[T]) -> Result<()>,
) -> Result<()> {
    for i in 0..arr.num_blocks() {
        m.read_block(arr, i, load)?;
        f(m, load)?;
    }
    Ok(())
}

/// Lexicographic check used by debug assertions.
pub(crate) fn is_sorted<T: Ord>(xs: &[T]) -> bool {
    xs.windows(2).all(|w| w[0].cmp(&w[1]) != Ordering::Greater)
}
