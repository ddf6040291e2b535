//! Cache-oblivious algorithms over a [`TracedMemory`](crate::TracedMemory).
//!
//! The routines here see memory only through [`TracedStore`] and
//! [`WordStore`](crate::cache::WordStore); they know the write cost `omega`
//! but neither the cache size nor the block size. Transfers are charged by
//! the cache that sits under the memory.
//!
//! [`matmul::em_blocked_matmul`] is the exception: it is a cache-aware
//! external-memory algorithm on the explicit-transfer [`Machine`](crate::Machine).

pub mod fft;
pub mod matmul;
pub mod sort;
pub mod transpose;

pub use fft::{co_fft, Complex};
pub use matmul::{co_matmul, em_blocked_matmul, CoMatmulStats};
pub use sort::{co_sort, CoSortStats};
pub use transpose::{transpose, visit_transposed, MatrixView};

use crate::cache::{TracedArray, TracedStore};
