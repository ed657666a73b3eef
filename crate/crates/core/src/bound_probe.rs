//! Memory-boundedness probe.
//!
//! A softmax reads one buffer and writes another of the same size, so a bulk
//! copy of that buffer is a floor on its run time set by memory throughput.
//! When the kernel runs close to the copy it is likely memory bound; when it
//! is several times slower there is compute left to optimize.
//!
//! Kernel and copy are timed under the same protocol (same warmup count, same
//! rep count, medians) and both write into an output buffer allocated once
//! and reused, so first-touch page faults stay out of both measurements.

use std::fmt;
use std::hint::black_box;

use serde::{Deserialize, Serialize};

use crate::kernels::{KernelVariant, Softmax};
use crate::profiler::{global_timer, median_ticks, Ticks, Timer, DEFAULT_WARMUP};
use crate::{Error, Matrix2D, Result};

/// Kernel/copy ratio at or below which the kernel is deemed memory bound.
pub const MEMORY_BOUND_THRESHOLD: f64 = 1.3;

/// Smallest accepted rep count.
pub const MIN_REPS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    MemoryBoundLikely,
    ComputeBoundLikely,
}

impl Verdict {
    pub fn from_ratio(ratio: f64) -> Self {
        if ratio <= MEMORY_BOUND_THRESHOLD {
            Verdict::MemoryBoundLikely
        } else {
            Verdict::ComputeBoundLikely
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::MemoryBoundLikely => "MemoryBoundLikely",
            Verdict::ComputeBoundLikely => "ComputeBoundLikely",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundProbeResult {
    pub kernel_ticks: Ticks,
    pub copy_ticks: Ticks,
    pub ratio: f64,
    pub verdict: Verdict,
}

impl BoundProbeResult {
    /// Builds a result from two medians. A zero median is raised to one tick
    /// so the ratio stays positive and finite.
    pub fn from_ticks(kernel_ticks: Ticks, copy_ticks: Ticks) -> Self {
        let ratio = kernel_ticks.max(1) as f64 / copy_ticks.max(1) as f64;
        Self {
            kernel_ticks,
            copy_ticks,
            ratio,
            verdict: Verdict::from_ratio(ratio),
        }
    }
}

/// What gets compared against the copy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeTarget {
    Kernel(KernelVariant),
    /// The copy itself, as a calibration of the probe.
    Copy,
}

fn check_reps(reps: usize) -> Result<()> {
    if reps < MIN_REPS {
        return Err(Error::argument(format!(
            "probe needs at least {MIN_REPS} reps, got {reps}"
        )));
    }
    Ok(())
}

fn time_reps(timer: &Timer, reps: usize, warmup: usize, mut body: impl FnMut() -> Result<()>) -> Result<Vec<Ticks>> {
    for _ in 0..warmup {
        body()?;
    }
    let mut samples = Vec::with_capacity(reps);
    for _ in 0..reps {
        let t0 = timer.now();
        body()?;
        samples.push(timer.now() - t0);
    }
    Ok(samples)
}

/// Median ticks of copying `m` into a same-size buffer.
pub fn copy_baseline(m: &Matrix2D, reps: usize, warmup: usize) -> Result<Ticks> {
    check_reps(reps)?;
    let mut out = Matrix2D::zeros(m.rows(), m.cols())?;
    copy_baseline_into(global_timer(), m, &mut out, reps, warmup)
}

fn copy_baseline_into(
    timer: &Timer,
    m: &Matrix2D,
    out: &mut Matrix2D,
    reps: usize,
    warmup: usize,
) -> Result<Ticks> {
    let samples = time_reps(timer, reps, warmup, || {
        out.as_mut_slice().copy_from_slice(black_box(m.as_slice()));
        black_box(&mut *out);
        Ok(())
    })?;
    if out.as_slice() != m.as_slice() {
        return Err(Error::Resource("copy baseline produced a different buffer".into()));
    }
    Ok(median_ticks(&samples).expect("reps >= 3"))
}

/// Compares `variant` against the copy baseline on `m`.
pub fn probe(m: &Matrix2D, variant: KernelVariant, reps: usize) -> Result<BoundProbeResult> {
    probe_target(m, ProbeTarget::Kernel(variant), reps, DEFAULT_WARMUP)
}

/// Times `target` and the copy with the same protocol. The copy is timed first.
pub fn probe_target(
    m: &Matrix2D,
    target: ProbeTarget,
    reps: usize,
    warmup: usize,
) -> Result<BoundProbeResult> {
    check_reps(reps)?;
    let timer = global_timer();
    let mut out = Matrix2D::zeros(m.rows(), m.cols())?;
    let copy_ticks = copy_baseline_into(timer, m, &mut out, reps, warmup)?;
    let kernel_ticks = match target {
        ProbeTarget::Copy => copy_baseline_into(timer, m, &mut out, reps, warmup)?,
        ProbeTarget::Kernel(variant) => {
            let k = Softmax::new(variant);
            let samples = time_reps(timer, reps, warmup, || {
                k.run(m, &mut out)?;
                black_box(&mut out);
                Ok(())
            })?;
            median_ticks(&samples).expect("reps >= 3")
        }
    };
    Ok(BoundProbeResult::from_ticks(kernel_ticks, copy_ticks))
}
