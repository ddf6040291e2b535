use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::time::Instant;

use aemsim_core::bounds::{
    blocked_matmul_reads, blocked_matmul_writes, ceil_log, ceil_log2, mergesort_reads, mergesort_writes,
    pq_read_scale, pq_write_scale, selection_reads, selection_writes,
};
use aemsim_core::bufpq::{aem_heapsort, AemPriorityQueue};
use aemsim_core::input::generate_records;
use aemsim_core::mergesort::aem_mergesort;
use aemsim_core::oblivious::{co_fft, co_matmul, co_sort, em_blocked_matmul, Complex, MatrixView};
use aemsim_core::ramsort::{pram_sample_sort_sim, ram_tree_sort, WordCounters};
use aemsim_core::samplesort::aem_samplesort;
use aemsim_core::selection::selection_sort_base;
use aemsim_core::{Error, ExtArray, IoCounters, Machine, MemoryConfig, Record, TracedMemory};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fixture::double_write_mergesort;
use crate::point::{mode_name, Algo, GridPoint, LambdaSpec};
use crate::report::{sig6, BoundKind, RunReport, Status, Unit};

/// Allowance on the mergesort formulas for the other external sorts.
pub const SORT_FIT: f64 = 8.0;
/// Allowance on the per-operation priority-queue expressions.
pub const PQ_FIT: f64 = 16.0;
/// Allowance for the cache-oblivious FFT and matrix multiply.
pub const CO_FIT: f64 = 16.0;
/// Allowance on words per record (writes) and per `n log2 n` (reads) for
/// the RAM sorts.
pub const RAM_FIT: f64 = 10.0;
/// The cache-oblivious sort's read/write ratio must lie in
/// `[omega / CO_SORT_RATIO, CO_SORT_RATIO * omega]`.
pub const CO_SORT_RATIO: f64 = 4.0;
/// Relative error allowed against the FFT oracle.
pub const FFT_TOLERANCE: f64 = 1e-9;
/// PRAM bucket slack.
pub const PRAM_SLACK: usize = 4;

struct Outcome {
    unit: Unit,
    reads: u64,
    writes: u64,
    kind: BoundKind,
    read_scale: f64,
    write_scale: f64,
    read_limit: f64,
    write_limit: f64,
    correct: bool,
    warnings: usize,
}

impl Outcome {
    fn exact(io: IoCounters, reads: u64, writes: u64, correct: bool) -> Self {
        Outcome {
            unit: Unit::Block,
            reads: io.block_reads,
            writes: io.block_writes,
            kind: BoundKind::Exact,
            read_scale: reads as f64,
            write_scale: writes as f64,
            read_limit: 1.0,
            write_limit: 1.0,
            correct,
            warnings: 0,
        }
    }

    fn fit(io: IoCounters, read_scale: f64, write_scale: f64, limit: f64, correct: bool) -> Self {
        Outcome {
            unit: Unit::Block,
            reads: io.block_reads,
            writes: io.block_writes,
            kind: BoundKind::ConstantFit,
            read_scale,
            write_scale,
            read_limit: limit,
            write_limit: limit,
            correct,
            warnings: 0,
        }
    }

    fn warned(mut self, m: &Machine) -> Self {
        self.warnings = m.arena().warnings().len();
        self
    }

    fn bound_reads(&self) -> f64 {
        self.read_limit * self.read_scale
    }

    fn bound_writes(&self) -> f64 {
        self.write_limit * self.write_scale
    }

    fn within(&self) -> bool {
        self.reads as f64 <= self.bound_reads() && self.writes as f64 <= self.bound_writes()
    }
}

fn ratio(x: u64, scale: f64) -> f64 {
    if x == 0 {
        0.0
    } else {
        x as f64 / scale
    }
}

fn blank(p: &GridPoint) -> RunReport {
    RunReport {
        algo: p.algo,
        n: p.n,
        m: p.m,
        b: p.b,
        omega: p.omega,
        lambda: 0,
        lambda_auto: p.lambda == LambdaSpec::Auto,
        dist: p.dist.name().to_string(),
        seed: p.seed,
        mode: mode_name(p.mode).to_string(),
        unit: Unit::Block,
        block_reads: 0,
        block_writes: 0,
        cost: 0,
        bound_kind: BoundKind::Exact,
        bound_reads: 0.0,
        bound_writes: 0.0,
        read_fit: 0.0,
        write_fit: 0.0,
        correct: false,
        pass: false,
        status: Status::ConfigError,
        budget_warnings: 0,
        error: None,
        wall_ms: 0.0,
    }
}

fn classify(e: &Error) -> Status {
    match e {
        Error::BudgetExceeded { .. } => Status::BudgetViolation,
        Error::Config(_) | Error::Dimension(_) | Error::UnsupportedSize(_) | Error::BaseCaseTooLarge { .. } => {
            Status::ConfigError
        }
        _ => Status::BoundFailure,
    }
}

/// Runs one grid point in a fresh simulator.
pub fn run_point(p: &GridPoint) -> RunReport {
    let mut rep = blank(p);
    let cfg = match p.config() {
        Ok(c) => c,
        Err(e) => {
            rep.error = Some(e.to_string());
            return rep;
        }
    };
    rep.lambda = cfg.lambda;
    let start = Instant::now();
    let res = simulate(p, &cfg);
    rep.wall_ms = sig6(start.elapsed().as_secs_f64() * 1e3);
    match res {
        Ok(o) => {
            rep.unit = o.unit;
            rep.block_reads = o.reads;
            rep.block_writes = o.writes;
            rep.cost = o.reads + p.omega as u64 * o.writes;
            rep.bound_kind = o.kind;
            let round = |x: f64| if o.kind == BoundKind::Exact { x } else { sig6(x) };
            rep.bound_reads = round(o.bound_reads());
            rep.bound_writes = round(o.bound_writes());
            rep.read_fit = sig6(ratio(o.reads, o.read_scale));
            rep.write_fit = sig6(ratio(o.writes, o.write_scale));
            rep.correct = o.correct;
            rep.budget_warnings = o.warnings;
            rep.pass = o.correct && o.within();
            rep.status = if rep.pass { Status::Pass } else { Status::BoundFailure };
            if !o.correct {
                rep.error = Some("output does not match the oracle".to_string());
            }
        }
        Err(e) => {
            rep.status = classify(&e);
            rep.error = Some(e.to_string());
        }
    }
    rep
}

/// Whether `out` is `recs` in ascending order. Generated records carry
/// their input position as the tiebreak, so a strictly increasing output
/// whose every record sits at its own position in `recs` is a sorted
/// permutation.
pub fn is_sorted_permutation(out: &[Record], recs: &[Record]) -> bool {
    out.len() == recs.len()
        && out.windows(2).all(|w| w[0] < w[1])
        && out.iter().all(|r| recs.get(r.tiebreak as usize) == Some(r))
}

fn random_matrix(n: usize, seed: u64) -> Vec<i64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n * n).map(|_| rng.gen_range(-9..=9)).collect()
}

fn naive_matmul(a: &[i64], b: &[i64], n: usize) -> Vec<i64> {
    let mut c = vec![0i64; n * n];
    for i in 0..n {
        for k in 0..n {
            let x = a[i * n + k];
            for j in 0..n {
                c[i * n + j] += x * b[k * n + j];
            }
        }
    }
    c
}

fn random_signal(n: usize, seed: u64) -> Vec<Complex> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect()
}

/// Forward DFT: direct `O(n^2)` sum for `n <= 4096`, otherwise rustfft.
pub fn dft_oracle(x: &[Complex]) -> Vec<Complex> {
    let n = x.len();
    if n <= 4096 {
        let step = -2.0 * std::f64::consts::PI / n as f64;
        return (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(j, &v)| v * Complex::from_polar(1.0, step * ((j * k) % n) as f64))
                    .sum()
            })
            .collect();
    }
    let mut buf = x.to_vec();
    rustfft::FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf
}

/// Largest pointwise error relative to the largest oracle magnitude.
pub fn relative_error(got: &[Complex], want: &[Complex]) -> f64 {
    let scale = want.iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    got.iter().zip(want).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / scale
}

fn sort_outcome(io: IoCounters, cfg: &MemoryConfig, n: usize, correct: bool) -> Outcome {
    Outcome::fit(
        io,
        mergesort_reads(cfg, n) as f64,
        mergesort_writes(cfg, n) as f64,
        SORT_FIT,
        correct,
    )
}

fn ram_outcome(c: WordCounters, n: usize, correct: bool) -> Outcome {
    let nf = n.max(1) as f64;
    Outcome {
        unit: Unit::Word,
        reads: c.word_reads,
        writes: c.word_writes,
        kind: BoundKind::ConstantFit,
        read_scale: nf * ceil_log2(n as u64).max(1) as f64,
        write_scale: nf,
        read_limit: RAM_FIT,
        write_limit: RAM_FIT,
        correct,
        warnings: 0,
    }
}

fn simulate(p: &GridPoint, cfg: &MemoryConfig) -> aemsim_core::Result<Outcome> {
    let n = p.n;
    let omega = p.omega;
    match p.algo {
        Algo::Mergesort | Algo::DoubleWriteMergesort => {
            let recs = generate_records(n, p.dist, p.seed);
            let mut m = Machine::new(*cfg, p.mode);
            let input = ExtArray::from_vec(recs.clone(), cfg.b);
            let out = if p.algo == Algo::Mergesort {
                aem_mergesort(&mut m, input)?
            } else {
                double_write_mergesort(&mut m, input)?
            };
            let correct = is_sorted_permutation(out.inspect(), &recs);
            Ok(Outcome::exact(m.counters(), mergesort_reads(cfg, n), mergesort_writes(cfg, n), correct).warned(&m))
        }
        Algo::Samplesort => {
            let recs = generate_records(n, p.dist, p.seed);
            let mut m = Machine::new(*cfg, p.mode);
            let out = aem_samplesort(&mut m, ExtArray::from_vec(recs.clone(), cfg.b), p.seed)?;
            let correct = is_sorted_permutation(out.inspect(), &recs);
            Ok(sort_outcome(m.counters(), cfg, n, correct).warned(&m))
        }
        Algo::Heapsort => {
            let recs = generate_records(n, p.dist, p.seed);
            let mut m = Machine::new(*cfg, p.mode);
            let (out, _) = aem_heapsort(&mut m, &ExtArray::from_vec(recs.clone(), cfg.b))?;
            let correct = is_sorted_permutation(out.inspect(), &recs);
            Ok(sort_outcome(m.counters(), cfg, n, correct).warned(&m))
        }
        Algo::Selection => {
            let recs = generate_records(n, p.dist, p.seed);
            let mut m = Machine::new(*cfg, p.mode);
            // leave exactly M + B of primary memory to the sort
            m.reserve_words(cfg.aux_slack - cfg.b)?;
            let out = selection_sort_base(&mut m, &ExtArray::from_vec(recs.clone(), cfg.b))?;
            let correct = is_sorted_permutation(out.inspect(), &recs);
            Ok(Outcome::exact(m.counters(), selection_reads(cfg, n), selection_writes(cfg, n), correct).warned(&m))
        }
        Algo::Pq => {
            let recs = generate_records(n, p.dist, p.seed);
            let mut m = Machine::new(*cfg, p.mode);
            let correct = pq_workload(&mut m, &recs, p.seed)?;
            Ok(Outcome::fit(
                m.counters(),
                pq_read_scale(cfg, n),
                pq_write_scale(cfg, n),
                PQ_FIT,
                correct,
            )
            .warned(&m))
        }
        Algo::Matmul => {
            let (av, bv) = (random_matrix(n, p.seed), random_matrix(n, p.seed ^ 0x5eed));
            let mut m = Machine::new(*cfg, p.mode);
            let a = ExtArray::from_vec(av.clone(), cfg.b);
            let b = ExtArray::from_vec(bv.clone(), cfg.b);
            let c = em_blocked_matmul(&mut m, &a, &b, n)?;
            let correct = c.inspect() == naive_matmul(&av, &bv, n).as_slice();
            Ok(Outcome::exact(
                m.counters(),
                blocked_matmul_reads(cfg, n),
                blocked_matmul_writes(cfg, n),
                correct,
            )
            .warned(&m))
        }
        Algo::CoSort => {
            let recs = generate_records(n, p.dist, p.seed);
            let mut mem = TracedMemory::new(cfg.m, cfg.b);
            let a = mem.load(&recs);
            let (out, _) = co_sort(&mut mem, a, omega, p.seed);
            mem.flush_all();
            let correct = is_sorted_permutation(&mem.snapshot(out), &recs);
            let io = mem.counters();
            let w = omega as f64;
            Ok(Outcome {
                unit: Unit::Block,
                reads: io.block_reads,
                writes: io.block_writes,
                kind: BoundKind::Ratio,
                read_scale: w * io.block_writes as f64,
                write_scale: io.block_reads as f64 / w,
                read_limit: CO_SORT_RATIO,
                write_limit: CO_SORT_RATIO,
                correct,
                warnings: 0,
            })
        }
        Algo::CoFft => {
            let x = random_signal(n, p.seed);
            let mut mem = TracedMemory::new(cfg.m, cfg.b);
            let a = mem.load(&x);
            let out = co_fft(&mut mem, a, omega)?;
            mem.flush_all();
            let correct = relative_error(&mem.snapshot(out), &dft_oracle(&x)) <= FFT_TOLERANCE;
            let levels = ceil_log(((omega * cfg.m) as u64).max(2), (omega * n) as u64) as f64;
            let unit = cfg.blocks(n) as f64 * levels;
            Ok(Outcome::fit(mem.counters(), omega as f64 * unit, unit, CO_FIT, correct))
        }
        Algo::CoMatmul => {
            let (av, bv) = (random_matrix(n, p.seed), random_matrix(n, p.seed ^ 0x5eed));
            let mut mem = TracedMemory::new(cfg.m, cfg.b);
            let a = MatrixView::new(mem.load(&av), n, n);
            let b = MatrixView::new(mem.load(&bv), n, n);
            let (c, _) = co_matmul(&mut mem, &a, &b, omega, p.seed)?;
            mem.flush_all();
            let correct = mem.snapshot(c.backing) == naive_matmul(&av, &bv, n);
            let nf = n as f64;
            let lw = (usize::BITS - 1 - omega.max(2).leading_zeros()) as f64;
            let base = nf * nf / cfg.b as f64;
            let deep = nf * nf * nf / (cfg.b as f64 * (cfg.m as f64).sqrt() * lw);
            let ws = base.max(deep);
            Ok(Outcome::fit(mem.counters(), omega as f64 * ws, ws, CO_FIT, correct))
        }
        Algo::RamTreeSort => {
            let recs = generate_records(n, p.dist, p.seed);
            let mut c = WordCounters::default();
            let out = ram_tree_sort(&recs, &mut c);
            let correct = is_sorted_permutation(&out, &recs);
            Ok(ram_outcome(c, n, correct))
        }
        Algo::PramSampleSort => {
            let recs = generate_records(n, p.dist, p.seed);
            let (out, rep) = pram_sample_sort_sim(&recs, p.seed, PRAM_SLACK)?;
            let correct = is_sorted_permutation(&out, &recs);
            Ok(ram_outcome(rep.counters, n, correct))
        }
    }
}

/// `ops` random interleaved operations, inserts drawn from `recs` in order.
/// Returns whether every delete-min agreed with a reference heap.
fn pq_workload(m: &mut Machine, recs: &[Record], seed: u64) -> aemsim_core::Result<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let mut pq = AemPriorityQueue::new(m)?;
    let mut heap = BinaryHeap::new();
    let mut next = recs.iter();
    let mut correct = true;
    for _ in 0..recs.len() {
        if heap.is_empty() || rng.gen_bool(0.55) {
            let &r = next.next().expect("at most one insert per operation");
            pq.insert(m, r)?;
            heap.push(Reverse(r));
        } else {
            let got = pq.delete_min(m)?;
            correct &= heap.pop() == Some(Reverse(got));
        }
    }
    correct &= pq.len() == heap.len();
    pq.close(m);
    Ok(correct)
}
