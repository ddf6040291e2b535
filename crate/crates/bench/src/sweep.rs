use std::collections::HashMap;

use aemsim_core::input::Distribution;
use aemsim_core::Mode;
use rayon::prelude::*;

use crate::point::{Algo, GridPoint, LambdaSpec};
use crate::report::{RunReport, Status};
use crate::run::run_point;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub algo: Algo,
    pub n: Vec<usize>,
    pub m: Vec<usize>,
    pub b: Vec<usize>,
    pub omega: Vec<usize>,
    pub lambda: Vec<LambdaSpec>,
    pub dist: Vec<Distribution>,
    pub seeds: Vec<u64>,
    pub mode: Mode,
}

impl SweepSpec {
    /// Grid points in report order: `n`, `M`, `B`, `omega`, `lambda`,
    /// distribution, then seed, the last varying fastest.
    pub fn points(&self) -> Vec<GridPoint> {
        let mut out = Vec::new();
        for &n in &self.n {
            for &m in &self.m {
                for &b in &self.b {
                    for &omega in &self.omega {
                        for &lambda in &self.lambda {
                            for &dist in &self.dist {
                                for &seed in &self.seeds {
                                    out.push(GridPoint {
                                        algo: self.algo,
                                        n,
                                        m,
                                        b,
                                        omega,
                                        lambda,
                                        dist,
                                        seed,
                                        mode: self.mode,
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct RunKey {
    algo: Algo,
    n: usize,
    m: usize,
    b: usize,
    omega: usize,
    lambda: usize,
    dist: Distribution,
    seed: u64,
    strict: bool,
}

fn key(p: &GridPoint) -> Option<RunKey> {
    let cfg = p.config().ok()?;
    Some(RunKey {
        algo: p.algo,
        n: p.n,
        m: p.m,
        b: p.b,
        omega: if p.algo.uses_omega() { p.omega } else { 0 },
        lambda: if p.algo.uses_lambda() { cfg.lambda } else { 0 },
        dist: p.dist,
        seed: p.seed,
        strict: p.mode == Mode::Strict,
    })
}

/// Runs every grid point, one report per point in [`SweepSpec::points`]
/// order. Points run in parallel; points whose transfers cannot differ
/// (same resolved parameters, differing only in an `omega` or `lambda` the
/// algorithm ignores) share one simulation.
pub fn run_sweep(spec: &SweepSpec) -> Vec<RunReport> {
    run_points(&spec.points())
}

pub fn run_points(points: &[GridPoint]) -> Vec<RunReport> {
    let keys: Vec<Option<RunKey>> = points.par_iter().map(key).collect();
    let mut first: HashMap<&RunKey, usize> = HashMap::new();
    let mut unique: Vec<usize> = Vec::new();
    for (i, k) in keys.iter().enumerate() {
        if let Some(k) = k {
            first.entry(k).or_insert_with(|| {
                unique.push(i);
                i
            });
        }
    }
    let ran: Vec<RunReport> = unique.par_iter().map(|&i| run_point(&points[i])).collect();
    let by_index: HashMap<usize, &RunReport> = unique.iter().copied().zip(ran.iter()).collect();
    points
        .iter()
        .zip(&keys)
        .map(|(p, k)| match k {
            None => run_point(p),
            Some(k) => {
                let mut r = by_index[&first[k]].clone();
                r.omega = p.omega;
                r.lambda = p.config().map_or(0, |c| c.lambda);
                r.lambda_auto = p.lambda == LambdaSpec::Auto;
                r.cost = r.block_reads + p.omega as u64 * r.block_writes;
                r
            }
        })
        .collect()
}

/// Process exit status for a set of reports: 2 when any bound failed, else
/// 3 when any strict-mode budget violation occurred, 4 when no point could
/// run because every one had a configuration error, else 0. A configuration
/// error at some points of a larger grid is reported but does not change
/// the status.
pub fn exit_code(reports: &[RunReport]) -> i32 {
    if reports.iter().any(|r| r.status == Status::BoundFailure) {
        2
    } else if reports.iter().any(|r| r.status == Status::BudgetViolation) {
        3
    } else if !reports.is_empty() && reports.iter().all(|r| r.status == Status::ConfigError) {
        4
    } else {
        0
    }
}
