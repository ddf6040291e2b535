//! Row-major matrix views and the recursive transpose.

use super::{TracedArray, TracedStore};

/// A `rows x cols` row-major window into a traced array.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatrixView {
    pub backing: TracedArray,
    pub offset: usize,
    pub rows: usize,
    pub cols: usize,
    pub stride: usize,
}

impl MatrixView {
    /// The whole of `backing` as a dense `rows x cols` matrix.
    pub fn new(backing: TracedArray, rows: usize, cols: usize) -> Self {
        assert_eq!(backing.len(), rows * cols, "backing length must be rows * cols");
        MatrixView {
            backing,
            offset: 0,
            rows,
            cols,
            stride: cols,
        }
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.rows && j < self.cols);
        self.offset + i * self.stride + j
    }

    pub fn get<T, S: TracedStore<T>>(&self, mem: &mut S, i: usize, j: usize) -> T {
        mem.get(self.backing, self.index(i, j))
    }

    pub fn set<T, S: TracedStore<T>>(&self, mem: &mut S, i: usize, j: usize, v: T) {
        mem.set(self.backing, self.index(i, j), v)
    }

    /// The `rows x cols` submatrix whose top-left corner is `(r0, c0)`.
    pub fn sub(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        assert!(r0 + rows <= self.rows && c0 + cols <= self.cols, "submatrix out of range");
        MatrixView {
            offset: self.offset + r0 * self.stride + c0,
            rows,
            cols,
            ..*self
        }
    }

    /// Row `i` as a contiguous array.
    pub fn row(&self, i: usize) -> TracedArray {
        self.backing.slice(self.index(i, 0), self.cols)
    }
}

/// Calls `f(i, j)` for every cell of a `rows x cols` index space, splitting
/// the longer side in half until a single cell is left. Any pair of
/// row-major and column-major accesses made from `f` then has good locality
/// at every cache size.
pub fn visit_transposed(rows: usize, cols: usize, f: &mut impl FnMut(usize, usize)) {
    visit(0, rows, 0, cols, f);
}

fn visit(r0: usize, r1: usize, c0: usize, c1: usize, f: &mut impl FnMut(usize, usize)) {
    let (h, w) = (r1 - r0, c1 - c0);
    if h == 0 || w == 0 {
        return;
    }
    if h == 1 && w == 1 {
        f(r0, c0);
    } else if h >= w {
        let mid = r0 + h / 2;
        visit(r0, mid, c0, c1, f);
        visit(mid, r1, c0, c1, f);
    } else {
        let mid = c0 + w / 2;
        visit(r0, r1, c0, mid, f);
        visit(r0, r1, mid, c1, f);
    }
}

/// Writes the transpose of `src` into `dst`, which must be `cols x rows`.
pub fn transpose<T, S: TracedStore<T>>(mem: &mut S, src: &MatrixView, dst: &MatrixView) {
    transpose_map(mem, src, dst, |_, _, v| v);
}

/// As [`transpose`], storing `f(i, j, src[i][j])` at `dst[j][i]`.
pub fn transpose_map<T, S: TracedStore<T>>(
    mem: &mut S,
    src: &MatrixView,
    dst: &MatrixView,
    f: impl Fn(usize, usize, T) -> T,
) {
    assert!(dst.rows == src.cols && dst.cols == src.rows, "transpose shape mismatch");
    visit_transposed(src.rows, src.cols, &mut |i, j| {
        let v = src.get(mem, i, j);
        dst.set(mem, j, i, f(i, j, v));
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cache::TracedMemory;
    use alloc::vec::Vec;

    #[test]
    fn transpose_values() {
        let mut mem = TracedMemory::new(64, 4);
        let vals: Vec<u32> = (0..15).collect();
        let a = mem.load(&vals);
        let t = mem.alloc(15, 0);
        transpose(&mut mem, &MatrixView::new(a, 3, 5), &MatrixView::new(t, 5, 3));
        let got = mem.snapshot(t);
        for i in 0..3 {
            for j in 0..5 {
                assert_eq!(got[j * 3 + i], vals[i * 5 + j]);
            }
        }
    }

    #[test]
    fn submatrix_transpose() {
        let mut mem = TracedMemory::new(64, 4);
        let a = mem.load(&(0..36u32).collect::<Vec<_>>());
        let t = mem.alloc(6, 0);
        let src = MatrixView::new(a, 6, 6).sub(1, 2, 2, 3);
        transpose(&mut mem, &src, &MatrixView::new(t, 3, 2));
        assert_eq!(mem.snapshot(t), [8, 14, 9, 15, 10, 16]);
    }

    #[test]
    fn transpose_io_is_linear_in_blocks() {
        // tall cache: 64 lines of 8 records
        for (r, c) in [(64usize, 64usize), (128, 32), (37, 200), (256, 256)] {
            let mut mem = TracedMemory::new(512, 8);
            let a = mem.load(&alloc::vec![1u64; r * c]);
            let t = mem.alloc(r * c, 0);
            transpose(&mut mem, &MatrixView::new(a, r, c), &MatrixView::new(t, c, r));
            mem.flush_all();
            let blocks = (r * c).div_ceil(8) as u64;
            let io = mem.counters();
            assert!(io.block_reads <= 4 * blocks, "{r}x{c}: {io:?}");
            assert!(io.block_writes <= 2 * blocks, "{r}x{c}: {io:?}");
            assert!(io.block_writes >= blocks);
        }
    }
}
