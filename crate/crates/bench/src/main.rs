use std::path::PathBuf;
use std::process::ExitCode;

use aemsim::point::{parse_dist, parse_mode};
use aemsim::{emit_report, exit_code, run_sweep, Algo, Format, LambdaSpec, SweepSpec};
use aemsim_core::bounds::{choose_lambda, lambda_admissible};
use aemsim_core::input::Distribution;
use aemsim_core::{MemoryConfig, Mode};
use clap::{Args, Parser, Subcommand};

const EXIT_CONFIG: u8 = 4;

/// Asymmetric-write external memory simulator: runs algorithms, checks
/// their transfer counts against closed-form bounds and reports the results.
#[derive(Parser)]
#[command(name = "aemsim", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sort generated records (mergesort by default).
    Sort {
        #[arg(long, default_value = "mergesort")]
        algo: String,
        #[command(flatten)]
        grid: Grid,
    },
    /// Random interleaved insert and delete-min operations on the buffer-tree queue.
    Pq {
        #[command(flatten)]
        grid: Grid,
    },
    /// Cache-oblivious FFT of a random complex signal.
    Fft {
        #[command(flatten)]
        grid: Grid,
    },
    /// Multiply two random n x n integer matrices (blocked by default).
    Matmul {
        #[arg(long, default_value = "matmul")]
        algo: String,
        #[command(flatten)]
        grid: Grid,
    },
    /// Run any algorithm over the cross product of the given lists.
    Sweep {
        #[arg(long)]
        algo: String,
        #[command(flatten)]
        grid: Grid,
    },
    /// Show how the branching multiplier is chosen for one configuration.
    Lambda {
        #[arg(long, default_value_t = 1 << 20)]
        n: usize,
        #[arg(long, default_value_t = 1024)]
        m: usize,
        #[arg(long, default_value_t = 32)]
        b: usize,
        #[arg(long, default_value_t = 16)]
        omega: usize,
    },
}

/// Every flag takes a comma-separated list; the run covers their product.
#[derive(Args)]
struct Grid {
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    m: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    b: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    omega: Vec<usize>,
    /// Positive integers or `auto`.
    #[arg(long, value_delimiter = ',')]
    lambda: Vec<String>,
    /// uniform, sorted, reverse, few-distinct, adversarial-skew
    #[arg(long, value_delimiter = ',')]
    dist: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    seed: Vec<u64>,
    /// strict or audit
    #[arg(long, default_value = "strict")]
    mode: String,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

struct Defaults {
    n: usize,
    m: usize,
    b: usize,
}

fn or<T: Clone>(v: Vec<T>, d: T) -> Vec<T> {
    if v.is_empty() {
        vec![d]
    } else {
        v
    }
}

fn build(algo: Algo, g: Grid, d: Defaults) -> Result<(SweepSpec, Format, Option<PathBuf>), String> {
    let lambda = g
        .lambda
        .iter()
        .map(|s| s.parse::<LambdaSpec>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let dist = g
        .dist
        .iter()
        .map(|s| parse_dist(s))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let mode: Mode = parse_mode(&g.mode).map_err(|e| e.to_string())?;
    let spec = SweepSpec {
        algo,
        n: or(g.n, d.n),
        m: or(g.m, d.m),
        b: or(g.b, d.b),
        omega: or(g.omega, 8),
        lambda: or(lambda, LambdaSpec::Fixed(1)),
        dist: or(dist, Distribution::Uniform),
        seeds: or(g.seed, 1),
        mode,
    };
    Ok((spec, g.format, g.out))
}

fn parse_algo(s: &str, allowed: &[Algo]) -> Result<Algo, String> {
    let a: Algo = s.parse().map_err(|e: aemsim::BenchError| e.to_string())?;
    if allowed.is_empty() || allowed.contains(&a) {
        Ok(a)
    } else {
        Err(format!("`{s}` is not available here"))
    }
}

fn print_lambda(n: usize, m: usize, b: usize, omega: usize) -> Result<(), String> {
    let cfg = MemoryConfig::new(m, b, omega, 1).map_err(|e| e.to_string())?;
    let choice = choose_lambda(&cfg, n);
    let mb = m / b;
    println!("n={n} M={m} B={b} omega={omega}");
    println!(
        "cost(lambda) = (omega + lambda + 1) * ceil(n/B) * ceil(log_(lambda M/B)(n/B)), ceil(n/B) = {}",
        cfg.blocks(n)
    );
    println!("lambda  levels  cost  lambda/log2(lambda)  omega/log2(M/B)  admissible");
    let rhs = omega as f64 / (mb as f64).log2();
    for c in &choice.candidates {
        let lhs = if c.lambda <= 1 {
            "-".to_string()
        } else {
            format!("{:.4}", c.lambda as f64 / (c.lambda as f64).log2())
        };
        println!(
            "{:>6}  {:>6}  {}  {:>19}  {:>15.4}  {}",
            c.lambda, c.levels, c.cost, lhs, rhs, c.admissible
        );
    }
    println!(
        "chosen lambda = {} with cost {} (lambda = 1 costs {})",
        choice.lambda, choice.cost, choice.baseline_cost
    );
    let mut probe = 2;
    let mut passing = Vec::new();
    while probe <= omega.max(2) * 2 {
        if lambda_admissible(probe, omega, mb) {
            passing.push(probe.to_string());
        }
        probe *= 2;
    }
    println!(
        "powers of two with lambda/log2(lambda) < omega/log2(M/B): {}",
        if passing.is_empty() { "none".to_string() } else { passing.join(", ") }
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_CONFIG) } else { ExitCode::SUCCESS };
        }
    };
    use Algo::*;
    let big = Defaults { n: 1 << 16, m: 1024, b: 32 };
    let built = match cli.cmd {
        Cmd::Lambda { n, m, b, omega } => {
            return match print_lambda(n, m, b, omega) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_CONFIG)
                }
            };
        }
        Cmd::Sort { algo, grid } => parse_algo(
            &algo,
            &[Mergesort, Samplesort, Heapsort, Selection, CoSort, RamTreeSort, PramSampleSort, DoubleWriteMergesort],
        )
        .and_then(|a| build(a, grid, big)),
        Cmd::Pq { grid } => build(Pq, grid, big),
        Cmd::Fft { grid } => build(CoFft, grid, Defaults { n: 4096, m: 1024, b: 32 }),
        Cmd::Matmul { algo, grid } => {
            parse_algo(&algo, &[Matmul, CoMatmul]).and_then(|a| build(a, grid, Defaults { n: 64, m: 256, b: 8 }))
        }
        Cmd::Sweep { algo, grid } => parse_algo(&algo, &[]).and_then(|a| build(a, grid, big)),
    };
    let (spec, format, out) = match built {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let reports = run_sweep(&spec);
    for r in &reports {
        if let Some(e) = &r.error {
            eprintln!("{} n={} M={} B={} omega={}: {e}", r.algo, r.n, r.m, r.b, r.omega);
        }
    }
    if let Err(e) = emit_report(&reports, format, out.as_deref()) {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_CONFIG);
    }
    ExitCode::from(exit_code(&reports) as u8)
}
