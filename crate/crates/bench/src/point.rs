use std::fmt;
use std::str::FromStr;

use aemsim_core::bounds::choose_lambda;
use aemsim_core::input::Distribution;
use aemsim_core::{MemoryConfig, Mode};
use serde::{Deserialize, Serialize};

use crate::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algo {
    Mergesort,
    Samplesort,
    Heapsort,
    /// The base-case selection sort alone; `n` must not exceed `lambda M`.
    Selection,
    /// `n` random interleaved insert and delete-min operations.
    Pq,
    /// Blocked multiply of two `n x n` matrices.
    Matmul,
    CoSort,
    CoFft,
    CoMatmul,
    RamTreeSort,
    PramSampleSort,
    /// Mergesort that writes every output block twice. Exists to show that
    /// the bound check catches a write-inefficient variant.
    DoubleWriteMergesort,
}

impl Algo {
    pub const ALL: [Algo; 12] = [
        Algo::Mergesort,
        Algo::Samplesort,
        Algo::Heapsort,
        Algo::Selection,
        Algo::Pq,
        Algo::Matmul,
        Algo::CoSort,
        Algo::CoFft,
        Algo::CoMatmul,
        Algo::RamTreeSort,
        Algo::PramSampleSort,
        Algo::DoubleWriteMergesort,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            Algo::Mergesort => "mergesort",
            Algo::Samplesort => "samplesort",
            Algo::Heapsort => "heapsort",
            Algo::Selection => "selection",
            Algo::Pq => "pq",
            Algo::Matmul => "matmul",
            Algo::CoSort => "co-sort",
            Algo::CoFft => "co-fft",
            Algo::CoMatmul => "co-matmul",
            Algo::RamTreeSort => "ram-tree-sort",
            Algo::PramSampleSort => "pram-sample-sort",
            Algo::DoubleWriteMergesort => "double-write-mergesort",
        }
    }

    /// Whether the transfer counts depend on `omega`. When they do not, grid
    /// points differing only in `omega` can share one simulation.
    pub fn uses_omega(&self) -> bool {
        matches!(self, Algo::CoSort | Algo::CoFft | Algo::CoMatmul)
    }

    /// Whether the algorithm reads its `lambda` from the configuration.
    pub fn uses_lambda(&self) -> bool {
        matches!(
            self,
            Algo::Mergesort
                | Algo::Samplesort
                | Algo::Heapsort
                | Algo::Selection
                | Algo::Pq
                | Algo::DoubleWriteMergesort
        )
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Algo {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, BenchError> {
        Algo::ALL
            .into_iter()
            .find(|a| a.id() == s)
            .ok_or_else(|| BenchError::Parse(format!("unknown algorithm `{s}`")))
    }
}

/// A fixed branching multiplier, or `auto` to take the one
/// [`choose_lambda`] picks for the grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LambdaSpec {
    Fixed(usize),
    Auto,
}

impl fmt::Display for LambdaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LambdaSpec::Fixed(l) => write!(f, "{l}"),
            LambdaSpec::Auto => f.write_str("auto"),
        }
    }
}

impl FromStr for LambdaSpec {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, BenchError> {
        if s == "auto" {
            return Ok(LambdaSpec::Auto);
        }
        s.parse()
            .map(LambdaSpec::Fixed)
            .map_err(|_| BenchError::Parse(format!("lambda must be a positive integer or `auto`, got `{s}`")))
    }
}

pub fn parse_mode(s: &str) -> Result<Mode, BenchError> {
    match s {
        "strict" => Ok(Mode::Strict),
        "audit" => Ok(Mode::Audit),
        _ => Err(BenchError::Parse(format!("mode must be `strict` or `audit`, got `{s}`"))),
    }
}

pub fn mode_name(m: Mode) -> &'static str {
    match m {
        Mode::Strict => "strict",
        Mode::Audit => "audit",
    }
}

pub fn parse_dist(s: &str) -> Result<Distribution, BenchError> {
    s.parse().map_err(|_| BenchError::Parse(format!("unknown distribution `{s}`")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridPoint {
    pub algo: Algo,
    pub n: usize,
    pub m: usize,
    pub b: usize,
    pub omega: usize,
    pub lambda: LambdaSpec,
    pub dist: Distribution,
    pub seed: u64,
    pub mode: Mode,
}

impl GridPoint {
    /// Resolves `lambda` and builds the configuration. `auto` asks
    /// [`choose_lambda`] at `lambda = 1`.
    pub fn config(&self) -> aemsim_core::Result<MemoryConfig> {
        let lambda = match self.lambda {
            LambdaSpec::Fixed(l) => l,
            LambdaSpec::Auto => {
                let base = MemoryConfig::new(self.m, self.b, self.omega, 1)?;
                choose_lambda(&base, self.n).lambda
            }
        };
        let cfg = MemoryConfig::new(self.m, self.b, self.omega, lambda)?;
        if self.algo == Algo::Matmul {
            // C tile, B tile and one block of A
            let need = cfg.m + cfg.b;
            return cfg.with_aux_slack(cfg.aux_slack.max(need));
        }
        Ok(cfg)
    }
}
