//! Sweep drivers behind the `softmax-kit` command line.
//!
//! Every driver walks `variants x batch_sizes` in ladder order and ascending
//! batch, feeding each variant the same input for a given batch: the input
//! is regenerated from the configured seed and fill range.

mod render;
mod run;

pub use render::{render_bench, render_probe, render_profile, render_verify};
pub use run::{
    input_digest, run_bench, run_probe, run_profile, run_verify, run_verify_with_fault, Fault,
    ProbeRow, ProbeTable, ProfileEntry, ProfileSummary, SweepResult, SweepRow, VerifyRow,
    VerifySummary, COPY_ROW, ROWSUM_TOLERANCE,
};

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::kernels::KernelVariant;
use crate::{Error, FillSpec, Matrix2D, Result};

/// Environment variable that must be unset or `1`.
pub const THREADS_ENV: &str = "SOFTMAX_KIT_THREADS";

/// Checks a value of [`THREADS_ENV`]: measurements are single-threaded.
pub fn check_thread_setting(value: Option<&str>) -> Result<()> {
    match value.map(str::trim) {
        None | Some("1") => Ok(()),
        Some(v) => Err(Error::argument(format!(
            "{THREADS_ENV}={v} is not supported: the harness is single-threaded, set it to 1 or unset it"
        ))),
    }
}

/// Reads [`THREADS_ENV`] from the process environment and checks it.
pub fn check_thread_env() -> Result<()> {
    let v = std::env::var(THREADS_ENV).ok();
    check_thread_setting(v.as_deref())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum OutputFormat {
    #[default]
    Text,
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "text" => Ok(OutputFormat::Text),
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(Error::argument(format!("unknown output format `{s}`"))),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Text => "text",
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub batch_sizes: Vec<usize>,
    pub num_classes: usize,
    pub variants: Vec<KernelVariant>,
    pub reps: usize,
    pub warmup: usize,
    pub seed: u64,
    pub fill_low: f32,
    pub fill_high: f32,
    pub format: OutputFormat,
    pub baseline: KernelVariant,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            batch_sizes: vec![1, 8, 32, 128],
            num_classes: 1000,
            variants: KernelVariant::ALL.to_vec(),
            reps: 100,
            warmup: 10,
            seed: 0,
            fill_low: -5.0,
            fill_high: 5.0,
            format: OutputFormat::Text,
            baseline: KernelVariant::ReferenceClipped,
        }
    }
}

impl BenchConfig {
    /// Checks the invariants and puts variants in ladder order and batch
    /// sizes in ascending order, dropping duplicates.
    pub fn normalized(mut self) -> Result<Self> {
        if self.batch_sizes.is_empty() {
            return Err(Error::argument("at least one batch size is required"));
        }
        if self.batch_sizes.contains(&0) {
            return Err(Error::argument("batch sizes must be at least 1"));
        }
        if self.num_classes == 0 {
            return Err(Error::argument("num_classes must be at least 1"));
        }
        if self.variants.is_empty() {
            return Err(Error::argument("at least one variant is required"));
        }
        if self.reps == 0 {
            return Err(Error::argument("reps must be at least 1"));
        }
        // Written so that NaN bounds are rejected too.
        if self.fill_low.partial_cmp(&self.fill_high) != Some(std::cmp::Ordering::Less) {
            return Err(Error::argument(format!(
                "fill range requires low < high, got ({}, {})",
                self.fill_low, self.fill_high
            )));
        }
        self.batch_sizes.sort_unstable();
        self.batch_sizes.dedup();
        self.variants.sort_unstable();
        self.variants.dedup();
        if !self.variants.contains(&self.baseline) {
            return Err(Error::argument(format!(
                "baseline {} is not among the selected variants",
                self.baseline
            )));
        }
        Ok(self)
    }

    pub fn fill_spec(&self) -> FillSpec {
        FillSpec::new(self.seed, self.fill_low, self.fill_high)
    }

    /// The input fed to every variant at `batch`.
    pub fn input(&self, batch: usize) -> Result<Matrix2D> {
        Matrix2D::uniform(batch, self.num_classes, &self.fill_spec())
    }
}

/// Outcome of a check printed by the drivers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Status {
    Pass,
    /// A hardware-dependent expectation was not met.
    Warn,
    Fail,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Warn => "WARN",
            Status::Fail => "FAIL",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub status: Status,
    pub what: String,
}

impl Check {
    /// PASS or WARN: for timing expectations.
    pub fn soft(ok: bool, what: impl Into<String>) -> Self {
        Self {
            status: if ok { Status::Pass } else { Status::Warn },
            what: what.into(),
        }
    }

    /// PASS or FAIL: for correctness and invariants.
    pub fn hard(ok: bool, what: impl Into<String>) -> Self {
        Self {
            status: if ok { Status::Pass } else { Status::Fail },
            what: what.into(),
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.status, self.what)
    }
}

pub fn any_failed(checks: &[Check]) -> bool {
    checks.iter().any(|c| c.status == Status::Fail)
}
