//! Phase timing of softmax executions and profiling reports.
//!
//! [`time_phases`] runs a kernel repeatedly and records, per run, the ticks
//! spent in each of its three phases and in the whole operation. Input
//! validation is inside the whole-operation window but outside every phase,
//! so the phase sum never exceeds the whole.

mod report;
mod timer;

pub use report::{
    build_report, format_g, format_report, format_rows, parse_report, report_to_csv, EventStats,
    ProfileReport, ReportRow, SORT_NOTE, TITLE,
};
pub use timer::{global_timer, now, Ticks, Timer, TimerSource};

use std::fmt;
use std::hint::black_box;

use crate::kernels::{check_finite, KernelVariant, Softmax};
use crate::{Error, Matrix2D, Result};

/// Warmup executions discarded before timing, unless overridden.
pub const DEFAULT_WARMUP: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PhaseId {
    MaxSub,
    Exp,
    SumScale,
    WholeOp,
}

impl PhaseId {
    pub const ALL: [PhaseId; 4] = [PhaseId::MaxSub, PhaseId::Exp, PhaseId::SumScale, PhaseId::WholeOp];

    pub fn name(self) -> &'static str {
        match self {
            PhaseId::MaxSub => "MaxSub",
            PhaseId::Exp => "Exp",
            PhaseId::SumScale => "SumScale",
            PhaseId::WholeOp => "WholeOp",
        }
    }

    /// Event name used in reports.
    pub fn event_name(self) -> String {
        format!("thread0::{}", self.name())
    }
}

impl fmt::Display for PhaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Ticks of one timed softmax execution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PhaseTimings {
    pub max_sub: Ticks,
    pub exp: Ticks,
    pub sum_scale: Ticks,
    pub whole: Ticks,
}

impl PhaseTimings {
    pub fn get(&self, phase: PhaseId) -> Ticks {
        match phase {
            PhaseId::MaxSub => self.max_sub,
            PhaseId::Exp => self.exp,
            PhaseId::SumScale => self.sum_scale,
            PhaseId::WholeOp => self.whole,
        }
    }

    pub fn phase_sum(&self) -> Ticks {
        self.max_sub + self.exp + self.sum_scale
    }
}

/// Runs `warmup` untimed then `reps` timed executions with the global timer.
pub fn time_phases(
    m: &Matrix2D,
    variant: KernelVariant,
    reps: usize,
    warmup: usize,
) -> Result<Vec<PhaseTimings>> {
    time_phases_with(global_timer(), &Softmax::new(variant), m, reps, warmup)
}

pub fn time_phases_with(
    timer: &Timer,
    kernel: &Softmax,
    m: &Matrix2D,
    reps: usize,
    warmup: usize,
) -> Result<Vec<PhaseTimings>> {
    if reps == 0 {
        return Err(Error::argument("reps must be at least 1"));
    }
    let mut out = Matrix2D::zeros(m.rows(), m.cols())?;
    for _ in 0..warmup {
        kernel.run(m, &mut out)?;
    }
    let mut timings = Vec::with_capacity(reps);
    for _ in 0..reps {
        // Validation is a precondition, not part of the timed operation.
        check_finite(m)?;
        let t0 = timer.now();
        kernel.max_sub(m, &mut out);
        let t2 = timer.now();
        kernel.exp(&mut out);
        let t3 = timer.now();
        kernel.sum_scale(&mut out)?;
        let t4 = timer.now();
        black_box(&mut out);
        timings.push(PhaseTimings {
            max_sub: t2 - t0,
            exp: t3 - t2,
            sum_scale: t4 - t3,
            whole: t4 - t0,
        });
    }
    Ok(timings)
}

/// Builds the four-event report (MaxSub, Exp, SumScale, WholeOp) from timings.
pub fn phase_report(timings: &[PhaseTimings], ticks_per_second: f64) -> Result<ProfileReport> {
    let events: Vec<(String, Vec<Ticks>)> = PhaseId::ALL
        .iter()
        .map(|&p| (p.event_name(), timings.iter().map(|t| t.get(p)).collect()))
        .collect();
    build_report(&events, ticks_per_second)
}

/// Median share of the whole operation taken by each phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseShares {
    pub max_sub: f64,
    pub exp: f64,
    pub sum_scale: f64,
}

/// Per-phase median of `phase / whole` over the runs; runs with a zero whole
/// are skipped. All shares are zero if no run qualifies.
pub fn phase_shares(timings: &[PhaseTimings]) -> PhaseShares {
    let share = |phase: PhaseId| {
        let mut r: Vec<f64> = timings
            .iter()
            .filter(|t| t.whole > 0)
            .map(|t| t.get(phase) as f64 / t.whole as f64)
            .collect();
        median_f64(&mut r).unwrap_or(0.0)
    };
    PhaseShares {
        max_sub: share(PhaseId::MaxSub),
        exp: share(PhaseId::Exp),
        sum_scale: share(PhaseId::SumScale),
    }
}

/// Median of tick samples; the mean of the two middle values for even counts.
pub fn median_ticks(samples: &[Ticks]) -> Option<Ticks> {
    if samples.is_empty() {
        return None;
    }
    let mut s = samples.to_vec();
    s.sort_unstable();
    let mid = s.len() / 2;
    Some(if s.len() % 2 == 1 {
        s[mid]
    } else {
        s[mid - 1] + (s[mid] - s[mid - 1]) / 2
    })
}

pub fn median_f64(samples: &mut [f64]) -> Option<f64> {
    if samples.is_empty() {
        return None;
    }
    samples.sort_by(f64::total_cmp);
    let mid = samples.len() / 2;
    Some(if samples.len() % 2 == 1 {
        samples[mid]
    } else {
        0.5 * (samples[mid - 1] + samples[mid])
    })
}
