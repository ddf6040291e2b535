//! Matrix multiplication: blocked external-memory tiles on the
//! explicit-transfer machine, and randomized divide and conquer over traced
//! memory.

use alloc::vec;
use core::ops::{Add, Mul};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::transpose::MatrixView;
use super::TracedStore;
use crate::bounds::isqrt;
use crate::error::{Error, Result};
use crate::model::{ExtArray, Machine};

/// Subproblems with every side at most this long are multiplied directly.
const BASE: usize = 4;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CoMatmulStats {
    /// Branching per dimension at the first level.
    pub first_branch: usize,
    pub depth: usize,
    pub base_cases: u64,
}

/// `C = A * B` for `n x n` row-major matrices with `sqrt(M) x sqrt(M)` tiles.
///
/// Each output tile stays resident while the `n / sqrt(M)` tile products
/// that feed it are accumulated, so every output block is written once.
/// Primary memory holds the output tile, one tile of `B` and one block of
/// `A`: `2M + B` records. `M` must be a square whose root is a multiple of
/// `B`, and `n` a multiple of `sqrt(M)`.
pub fn em_blocked_matmul<T>(m: &mut Machine, a: &ExtArray<T>, b: &ExtArray<T>, n: usize) -> Result<ExtArray<T>>
where
    T: Copy + Default + Add<Output = T> + Mul<Output = T>,
{
    let cfg = *m.config();
    let bs = cfg.b;
    if a.len() != n * n || b.len() != n * n {
        return Err(Error::Dimension("operands must both be n x n"));
    }
    if a.block_size() != bs || b.block_size() != bs {
        return Err(Error::Dimension("operand block size differs from B"));
    }
    let t = isqrt(cfg.m as u64) as usize;
    if t * t != cfg.m || t % bs != 0 {
        return Err(Error::Config("blocked multiply needs M = t^2 with B dividing t"));
    }
    if n % t != 0 {
        return Err(Error::Dimension("n must be a multiple of sqrt(M)"));
    }
    let tiles = n / t;
    let per_row = t / bs;
    let mut out = ExtArray::from_vec(vec![T::default(); n * n], bs);
    let mut ctile = m.alloc::<T>(t * t)?;
    let mut btile = m.alloc::<T>(t * t)?;
    let mut blk = m.alloc::<T>(bs)?;
    ctile.resize(t * t, T::default());
    btile.resize(t * t, T::default());
    for ti in 0..tiles {
        for tj in 0..tiles {
            ctile.fill(T::default());
            for tk in 0..tiles {
                for r in 0..t {
                    let first = ((tk * t + r) * n + tj * t) / bs;
                    for q in 0..per_row {
                        m.read_block(b, first + q, &mut blk)?;
                        btile[r * t + q * bs..r * t + (q + 1) * bs].copy_from_slice(&blk);
                    }
                }
                for i in 0..t {
                    let first = ((ti * t + i) * n + tk * t) / bs;
                    let crow = &mut ctile[i * t..(i + 1) * t];
                    for q in 0..per_row {
                        m.read_block(a, first + q, &mut blk)?;
                        for (e, &av) in blk.iter().enumerate() {
                            let brow = &btile[(q * bs + e) * t..(q * bs + e + 1) * t];
                            for (cv, &bv) in crow.iter_mut().zip(brow) {
                                *cv = *cv + av * bv;
                            }
                        }
                    }
                }
            }
            for r in 0..t {
                let first = ((ti * t + r) * n + tj * t) / bs;
                for q in 0..per_row {
                    let src = &ctile[r * t + q * bs..r * t + (q + 1) * bs];
                    m.write_block(&mut out, first + q, src)?;
                }
            }
        }
    }
    m.free(blk);
    m.free(btile);
    m.free(ctile);
    Ok(out)
}

/// `C = A * B` by divide and conquer. The first level splits every
/// dimension `2^b` ways with `b` drawn uniformly from `1..=floor(log2
/// omega)`; deeper levels split `omega` ways. The products feeding one
/// output block run one after another in increasing inner index, so the
/// block can stay cached until all of them are done.
///
/// The result is a new zero-initialized matrix in `mem`.
pub fn co_matmul<T, S>(
    mem: &mut S,
    a: &MatrixView,
    b: &MatrixView,
    omega: usize,
    seed: u64,
) -> Result<(MatrixView, CoMatmulStats)>
where
    T: Copy + Default + Add<Output = T> + Mul<Output = T>,
    S: TracedStore<T>,
{
    if a.cols != b.rows {
        return Err(Error::Dimension("inner dimensions differ"));
    }
    let backing = mem.alloc(a.rows * b.cols, T::default());
    let c = MatrixView::new(backing, a.rows, b.cols);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let top = (usize::BITS - 1 - omega.max(2).leading_zeros()) as usize;
    let first = 1usize << rng.gen_range(1..=top);
    let mut stats = CoMatmulStats {
        first_branch: first,
        ..Default::default()
    };
    recurse(mem, a, b, &c, first, omega.max(2), 1, &mut stats);
    Ok((c, stats))
}

/// Start and length of part `i` when `len` is cut into `parts` near-equal
/// pieces.
fn part(len: usize, parts: usize, i: usize) -> (usize, usize) {
    let (q, r) = (len / parts, len % parts);
    (i * q + i.min(r), q + usize::from(i < r))
}

#[allow(clippy::too_many_arguments)]
fn recurse<T, S>(
    mem: &mut S,
    a: &MatrixView,
    b: &MatrixView,
    c: &MatrixView,
    f: usize,
    omega: usize,
    depth: usize,
    stats: &mut CoMatmulStats,
) where
    T: Copy + Default + Add<Output = T> + Mul<Output = T>,
    S: TracedStore<T>,
{
    let (n, k, p) = (a.rows, a.cols, b.cols);
    stats.depth = stats.depth.max(depth);
    if n.max(k).max(p) <= BASE {
        stats.base_cases += 1;
        for i in 0..n {
            for j in 0..p {
                let mut acc = c.get(mem, i, j);
                for t in 0..k {
                    acc = acc + a.get(mem, i, t) * b.get(mem, t, j);
                }
                c.set(mem, i, j, acc);
            }
        }
        return;
    }
    let (fn_, fk, fp) = (f.min(n), f.min(k), f.min(p));
    for bi in 0..fn_ {
        let (r0, rl) = part(n, fn_, bi);
        for bj in 0..fp {
            let (c0, cl) = part(p, fp, bj);
            let cs = c.sub(r0, c0, rl, cl);
            for bk in 0..fk {
                let (k0, kl) = part(k, fk, bk);
                let as_ = a.sub(r0, k0, rl, kl);
                let bs = b.sub(k0, c0, kl, cl);
                recurse(mem, &as_, &bs, &cs, omega, omega, depth + 1, stats);
            }
        }
    }
}
