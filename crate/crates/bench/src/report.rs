use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::point::Algo;
use crate::BenchError;

pub const SCHEMA_VERSION: u32 = 1;

pub const CSV_COLUMNS: [&str; 15] = [
    "algo",
    "n",
    "M",
    "B",
    "omega",
    "lambda",
    "dist",
    "seed",
    "block_reads",
    "block_writes",
    "cost",
    "bound_reads",
    "bound_writes",
    "pass",
    "wall_ms",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    /// Closed-form count, compared with zero tolerance.
    Exact,
    /// An asymptotic expression times a fixed allowance.
    ConstantFit,
    /// Read/write ratio window: `bound_reads` is the most reads allowed for
    /// the measured writes and `bound_writes` the most writes allowed for
    /// the measured reads.
    Ratio,
}

/// What the transfer columns count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Unit {
    Block,
    /// Single-word loads and stores of the RAM algorithms.
    Word,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    /// Wrong output, a bound exceeded, or an algorithm error.
    BoundFailure,
    /// Strict-mode primary-memory reservation beyond capacity.
    BudgetViolation,
    /// The grid point violates a configuration invariant; nothing ran.
    ConfigError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub algo: Algo,
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "B")]
    pub b: usize,
    pub omega: usize,
    /// Resolved branching multiplier, 0 when the configuration was invalid.
    pub lambda: usize,
    pub lambda_auto: bool,
    pub dist: String,
    pub seed: u64,
    pub mode: String,
    pub unit: Unit,
    pub block_reads: u64,
    pub block_writes: u64,
    /// `reads + omega * writes`.
    pub cost: u64,
    pub bound_kind: BoundKind,
    pub bound_reads: f64,
    pub bound_writes: f64,
    /// Measured reads over the read expression.
    pub read_fit: f64,
    /// Measured writes over the write expression.
    pub write_fit: f64,
    /// Output matched the oracle.
    pub correct: bool,
    pub pass: bool,
    pub status: Status,
    pub budget_warnings: usize,
    pub error: Option<String>,
    pub wall_ms: f64,
}

/// Rounds to six significant digits.
pub fn sig6(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.5e}").parse().unwrap_or(x)
}

fn fmt_bound(kind: BoundKind, v: f64) -> String {
    match kind {
        BoundKind::Exact => format!("{v:.0}"),
        _ => format!("{}", sig6(v)),
    }
}

impl RunReport {
    fn csv_record(&self) -> [String; 15] {
        let pass = match self.status {
            Status::ConfigError => "error".to_string(),
            _ => self.pass.to_string(),
        };
        [
            self.algo.id().to_string(),
            self.n.to_string(),
            self.m.to_string(),
            self.b.to_string(),
            self.omega.to_string(),
            self.lambda.to_string(),
            self.dist.clone(),
            self.seed.to_string(),
            self.block_reads.to_string(),
            self.block_writes.to_string(),
            self.cost.to_string(),
            fmt_bound(self.bound_kind, self.bound_reads),
            fmt_bound(self.bound_kind, self.bound_writes),
            pass,
            format!("{}", sig6(self.wall_ms)),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct JsonDoc {
    schema_version: u32,
    reports: Vec<RunReport>,
}

pub fn write_csv<W: Write>(out: W, reports: &[RunReport]) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in reports {
        w.write_record(r.csv_record())?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_json<W: Write>(out: W, reports: &[RunReport]) -> Result<(), BenchError> {
    let doc = JsonDoc {
        schema_version: SCHEMA_VERSION,
        reports: reports.to_vec(),
    };
    serde_json::to_writer_pretty(out, &doc)?;
    Ok(())
}

/// Parses a JSON report, rejecting other schema versions.
pub fn read_json(s: &str) -> Result<Vec<RunReport>, BenchError> {
    let doc: JsonDoc = serde_json::from_str(s)?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(BenchError::Parse(format!(
            "unsupported schema_version {}",
            doc.schema_version
        )));
    }
    Ok(doc.reports)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Writes `reports` to `path`, or to stdout when `path` is `None`.
pub fn emit_report(reports: &[RunReport], format: Format, path: Option<&Path>) -> Result<(), BenchError> {
    let io_err = |p: &Path, e: io::Error| BenchError::Io {
        path: p.display().to_string(),
        source: e,
    };
    match path {
        Some(p) => {
            let f = File::create(p).map_err(|e| io_err(p, e))?;
            let mut buf = io::BufWriter::new(f);
            match format {
                Format::Csv => write_csv(&mut buf, reports)?,
                Format::Json => write_json(&mut buf, reports)?,
            }
            buf.flush().map_err(|e| io_err(p, e))
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            match format {
                Format::Csv => write_csv(&mut lock, reports),
                Format::Json => {
                    write_json(&mut lock, reports)?;
                    writeln!(lock).map_err(|e| io_err(Path::new("<stdout>"), e))
                }
            }
        }
    }
}
