//! Cooley-Tukey FFT with an `omega`-way brute-force stage.
//!
//! A length `n` transform with `n / omega = s1 * s2` (powers of two, `s1`
//! the larger) views the input as an `R x C` matrix with `R = omega * s1`
//! and `C = s2`:
//!
//! 1. transpose to `C x R`;
//! 2. each length-`R` row, viewed as `omega x s1`: length-`omega` column
//!    DFTs by brute force (`omega` reads and one write per value), a
//!    recursive FFT on each of the `omega` rows, then a transpose back into
//!    the row with the outer twiddle factors applied;
//! 3. transpose to `R x C`;
//! 4. a recursive FFT on each length-`C` row;
//! 5. transpose to the output order.
//!
//! Short transforms (`n < 4 omega`) are computed directly.

use core::f64::consts::PI;

use super::transpose::{transpose, transpose_map, MatrixView};
use super::{TracedArray, TracedStore};
use crate::error::{Error, Result};

pub type Complex = num_complex::Complex64;

/// `exp(-2 pi i e / n)`, reducing `e` first so large exponents stay exact.
fn root(e: usize, n: usize) -> Complex {
    let e = e % n;
    Complex::cis(-2.0 * PI * e as f64 / n as f64)
}

/// Discrete Fourier transform of `input`, returned in a new array. `input`
/// is used as scratch space and overwritten.
///
/// `n` and `omega` must be powers of two.
pub fn co_fft<S: TracedStore<Complex>>(mem: &mut S, input: TracedArray, omega: usize) -> Result<TracedArray> {
    let n = input.len();
    if !n.is_power_of_two() {
        return Err(Error::UnsupportedSize(n));
    }
    if !omega.is_power_of_two() {
        return Err(Error::Config("omega must be a power of two"));
    }
    let out = mem.alloc(n, Complex::new(0.0, 0.0));
    fft_into(mem, input, out, omega);
    Ok(out)
}

/// Transform of `src` into `dst`; `src` is clobbered.
fn fft_into<S: TracedStore<Complex>>(mem: &mut S, src: TracedArray, dst: TracedArray, omega: usize) {
    let n = src.len();
    if n < 4 * omega || n <= 2 {
        direct(mem, src, dst);
        return;
    }
    let m = n / omega;
    let s1 = 1usize << m.trailing_zeros().div_ceil(2);
    let s2 = m / s1;
    let (r, c) = (omega * s1, s2);

    // 1
    transpose(mem, &MatrixView::new(src, r, c), &MatrixView::new(dst, c, r));
    // 2
    for j2 in 0..c {
        let row = dst.slice(j2 * r, r);
        let z = mem.alloc(r, Complex::new(0.0, 0.0));
        for k1 in 0..omega {
            for b in 0..s1 {
                let mut acc = Complex::new(0.0, 0.0);
                for a in 0..omega {
                    acc += mem.get(row, a * s1 + b) * root(a * k1, omega);
                }
                mem.set(z, k1 * s1 + b, acc * root(b * k1, r));
            }
        }
        for k1 in 0..omega {
            fft_into(mem, z.slice(k1 * s1, s1), row.slice(k1 * s1, s1), omega);
        }
        mem.release(z);
        let back = src.slice(j2 * r, r);
        transpose_map(mem, &MatrixView::new(row, omega, s1), &MatrixView::new(back, s1, omega), |k1, k2, v| {
            v * root(j2 * (k1 + omega * k2), n)
        });
    }
    // 3
    transpose(mem, &MatrixView::new(src, c, r), &MatrixView::new(dst, r, c));
    // 4
    for k in 0..r {
        fft_into(mem, dst.slice(k * c, c), src.slice(k * c, c), omega);
    }
    // 5
    transpose(mem, &MatrixView::new(src, r, c), &MatrixView::new(dst, c, r));
}

fn direct<S: TracedStore<Complex>>(mem: &mut S, src: TracedArray, dst: TracedArray) {
    let n = src.len();
    for k in 0..n {
        let mut acc = Complex::new(0.0, 0.0);
        for j in 0..n {
            acc += mem.get(src, j) * root(j * k, n);
        }
        mem.set(dst, k, acc);
    }
}
