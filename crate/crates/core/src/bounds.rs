//! Closed-form transfer bounds and branching-factor selection.
//!
//! All exact bounds are evaluated in integer arithmetic so that measured
//! counters can be compared against them with zero tolerance.

use alloc::vec::Vec;

use crate::model::MemoryConfig;

/// `ceil(log_base(x))` for integers, with a minimum of 1: the smallest
/// `k >= 1` such that `base^k >= x`.
pub fn ceil_log(base: u64, x: u64) -> u64 {
    assert!(base >= 2, "logarithm base must be at least 2");
    let mut k = 1;
    let mut p = base as u128;
    while p < x as u128 {
        p *= base as u128;
        k += 1;
    }
    k
}

/// `ceil(log2(x))` for `x >= 1`.
pub fn ceil_log2(x: u64) -> u64 {
    if x <= 1 {
        0
    } else {
        64 - (x - 1).leading_zeros() as u64
    }
}

/// Number of merge levels for `n` records: `ceil(log_{lambda M / B}(n / B))`,
/// at least 1. Uses the configuration's `lambda`.
pub fn levels(cfg: &MemoryConfig, n: usize) -> u64 {
    levels_with(cfg, cfg.lambda, n)
}

pub fn levels_with(cfg: &MemoryConfig, lambda: usize, n: usize) -> u64 {
    let l = (lambda * cfg.m / cfg.b).max(2) as u64;
    ceil_log(l, cfg.blocks(n) as u64)
}

/// Mergesort read bound: `(lambda + 1) * ceil(n/B) * levels`.
pub fn mergesort_reads(cfg: &MemoryConfig, n: usize) -> u64 {
    (cfg.lambda as u64 + 1) * cfg.blocks(n) as u64 * levels(cfg, n)
}

/// Mergesort write bound: `ceil(n/B) * levels`.
pub fn mergesort_writes(cfg: &MemoryConfig, n: usize) -> u64 {
    cfg.blocks(n) as u64 * levels(cfg, n)
}

/// Single merge: `(lambda + 1) * ceil(n/B)` reads.
pub fn merge_reads(cfg: &MemoryConfig, n: usize) -> u64 {
    (cfg.lambda as u64 + 1) * cfg.blocks(n) as u64
}

/// Single merge: `ceil(n/B)` writes.
pub fn merge_writes(cfg: &MemoryConfig, n: usize) -> u64 {
    cfg.blocks(n) as u64
}

/// Selection-sort base case: `lambda * ceil(n/B)` reads.
pub fn selection_reads(cfg: &MemoryConfig, n: usize) -> u64 {
    cfg.lambda as u64 * cfg.blocks(n) as u64
}

/// Selection-sort base case: `ceil(n/B)` writes.
pub fn selection_writes(cfg: &MemoryConfig, n: usize) -> u64 {
    cfg.blocks(n) as u64
}

/// Blocked matrix multiply of `n x n` matrices: `2 n^3 / (B sqrt(M))` reads.
pub fn blocked_matmul_reads(cfg: &MemoryConfig, n: usize) -> u64 {
    let t = isqrt(cfg.m as u64);
    2 * (n as u64).pow(3) / (cfg.b as u64 * t)
}

/// Blocked matrix multiply: `n^2 / B` writes.
pub fn blocked_matmul_writes(cfg: &MemoryConfig, n: usize) -> u64 {
    (n as u64).pow(2) / cfg.b as u64
}

pub fn isqrt(x: u64) -> u64 {
    let mut r = libm::sqrt(x as f64) as u64;
    while r * r > x {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= x {
        r += 1;
    }
    r
}

/// `1 + log_{lambda M / B}(n)`, the per-operation factor of the buffer-tree
/// and priority-queue bounds.
pub fn tree_height_factor(cfg: &MemoryConfig, n: usize) -> f64 {
    let l = cfg.fanout().max(2) as f64;
    1.0 + libm::log(n.max(1) as f64) / libm::log(l)
}

/// Amortized read scale for `n` priority-queue operations:
/// `(lambda / B) * (1 + log_l n) * n`.
pub fn pq_read_scale(cfg: &MemoryConfig, n: usize) -> f64 {
    cfg.lambda as f64 / cfg.b as f64 * tree_height_factor(cfg, n) * n as f64
}

/// Amortized write scale for `n` priority-queue operations:
/// `(1 / B) * (1 + log_l n) * n`.
pub fn pq_write_scale(cfg: &MemoryConfig, n: usize) -> f64 {
    tree_height_factor(cfg, n) * n as f64 / cfg.b as f64
}

/// Cost model total for the mergesort bounds at a given `lambda`:
/// `(omega + lambda + 1) * ceil(n/B) * levels`.
pub fn mergesort_cost(cfg: &MemoryConfig, lambda: usize, n: usize) -> u64 {
    (cfg.omega + lambda + 1) as u64 * cfg.blocks(n) as u64 * levels_with(cfg, lambda, n)
}

/// `lambda / log2(lambda) < omega / log2(M/B)`. A branching multiplier
/// passing this test lowers the total cost compared with `lambda = 1`
/// whenever it also lowers the level count. `lambda = 1` always passes.
pub fn lambda_admissible(lambda: usize, omega: usize, m_over_b: usize) -> bool {
    if lambda <= 1 {
        return true;
    }
    let lhs = lambda as f64 / libm::log2(lambda as f64);
    let rhs = omega as f64 / libm::log2(m_over_b as f64);
    lhs < rhs
}

/// One candidate considered by [`choose_lambda`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LambdaCandidate {
    /// Target level count that produced the candidate (0 for the `lambda = 1`
    /// and `lambda = omega` endpoints).
    pub levels_target: u64,
    pub lambda: usize,
    pub levels: u64,
    pub cost: u64,
    pub admissible: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LambdaChoice {
    pub lambda: usize,
    pub cost: u64,
    pub baseline_cost: u64,
    pub candidates: Vec<LambdaCandidate>,
}

/// Picks the branching multiplier minimizing
/// `(omega + lambda + 1) * ceil(n/B) * levels(lambda)`.
///
/// For every target level count `p'` from 1 up to the level count at
/// `lambda = 1`, the smallest multiplier reaching `p'` levels is
/// `ceil((n/B)^(1/p') / (M/B))`; it is clamped to `[1, omega]`. `lambda = 1`
/// and `lambda = omega` are always candidates. Ties go to the smaller value.
pub fn choose_lambda(cfg: &MemoryConfig, n: usize) -> LambdaChoice {
    let nb = cfg.blocks(n).max(1) as f64;
    let mb = (cfg.m / cfg.b) as f64;
    let p = levels_with(cfg, 1, n);
    let mut raw: Vec<(u64, usize)> = Vec::new();
    raw.push((0, 1));
    for pp in 1..=p {
        let root = libm::pow(nb, 1.0 / pp as f64);
        let mut lam = libm::ceil(root / mb - 1e-9).max(1.0) as usize;
        // correct any floating-point slip so the candidate really reaches p' levels
        while lam > 1 && levels_with(cfg, lam - 1, n) <= pp {
            lam -= 1;
        }
        while levels_with(cfg, lam, n) > pp && lam < cfg.omega {
            lam += 1;
        }
        raw.push((pp, lam.clamp(1, cfg.omega)));
    }
    raw.push((0, cfg.omega));

    let mb_int = cfg.m / cfg.b;
    let mut candidates: Vec<LambdaCandidate> = raw
        .into_iter()
        .map(|(pp, lambda)| LambdaCandidate {
            levels_target: pp,
            lambda,
            levels: levels_with(cfg, lambda, n),
            cost: mergesort_cost(cfg, lambda, n),
            admissible: lambda_admissible(lambda, cfg.omega, mb_int),
        })
        .collect();
    candidates.sort_by_key(|c| (c.lambda, c.levels_target));
    candidates.dedup_by_key(|c| c.lambda);

    let baseline_cost = mergesort_cost(cfg, 1, n);
    let best = candidates
        .iter()
        .min_by_key(|c| (c.cost, c.lambda))
        .copied()
        .expect("lambda = 1 is always a candidate");
    LambdaChoice {
        lambda: best.lambda,
        cost: best.cost,
        baseline_cost,
        candidates,
    }
}
