//! Write-asymmetric two-level memory simulator.
//!
//! The crate models a machine with a small primary memory of `M` records and
//! an unbounded secondary memory that is accessed in blocks of `B` records.
//! Reading a block costs 1 and writing a block costs `omega`. Every algorithm
//! in this crate performs its secondary-memory traffic through the simulator
//! so block reads and block writes are counted exactly.
//!
//! Two access styles are provided:
//!
//! * [`model`]: explicit transfers. Algorithms move whole blocks between an
//!   [`ExtArray`] and buffers reserved from a bounded primary-memory [`Arena`].
//! * [`cache`]: an implicit, cache-mediated address space with a read-write
//!   LRU policy, used by the cache-oblivious algorithms in [`oblivious`].
//!
//! The algorithms:
//!
//! * [`mergesort`]: multi-way mergesort with `lambda * M / B` fan-out.
//! * [`samplesort`]: `lambda * M / B`-way randomized distribution sort.
//! * [`bufpq`]: buffer tree, priority queue with alpha/beta working sets, heapsort.
//! * [`ramsort`]: word-granularity tree sort and a PRAM sample sort simulation.
//! * [`oblivious`]: cache-oblivious sort, FFT and matrix multiplication, plus
//!   the blocked explicit-transfer matrix multiply.
//!
//! The crate is `no_std` and only needs `alloc`.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod bounds;
pub mod bufpq;
pub mod cache;
mod error;
pub mod input;
pub mod mergesort;
pub mod model;
pub mod oblivious;
pub mod ramsort;
mod runqueue;
pub mod samplesort;
pub mod selection;

pub use cache::{AsymCache, TraceEvent, TracedArray, TracedMemory, TracedStore, WordStore};
pub use error::{Error, Result};
pub use model::{
    Arena, ArenaBuf, BlockWriter, BudgetWarning, ExtArray, IoCounters, Machine, MemoryConfig,
    Mode, Record,
};
