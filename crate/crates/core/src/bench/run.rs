use std::hash::{DefaultHasher, Hash, Hasher};
use std::hint::black_box;

use serde::Serialize;

use super::{BenchConfig, Check};
use crate::bound_probe::{self, BoundProbeResult, ProbeTarget, Verdict};
use crate::kernels::{softmax_into_unshifted, KernelVariant, Softmax};
use crate::oracle::{self, Deviation};
use crate::profiler::{
    self, global_timer, median_ticks, phase_report, phase_shares, PhaseShares, ProfileReport, Ticks,
};
use crate::{Matrix2D, Result};

/// Largest accepted `|sum(row) - 1|`, for every variant.
pub const ROWSUM_TOLERANCE: f64 = 1e-5;

/// Name of the copy-baseline row in bench and probe tables.
pub const COPY_ROW: &str = "memcpy";

/// Digest of an input buffer's bits.
pub fn input_digest(m: &Matrix2D) -> u64 {
    let mut h = DefaultHasher::new();
    m.shape().hash(&mut h);
    for v in m.as_slice() {
        v.to_bits().hash(&mut h);
    }
    h.finish()
}

/// Deliberate kernel defects, for exercising `verify`.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    SkipMaxShift,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyRow {
    pub variant: KernelVariant,
    pub batch: usize,
    pub cols: usize,
    pub max_elem_relerr: f64,
    pub worst_row: usize,
    pub max_rowsum_dev: f64,
    pub elem_tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifySummary {
    pub rows: Vec<VerifyRow>,
}

impl VerifySummary {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &VerifyRow> {
        self.rows.iter().filter(|r| !r.passed)
    }
}

fn verify_row(variant: KernelVariant, batch: usize, cols: usize, dev: Deviation) -> VerifyRow {
    let elem_tolerance = variant.tolerance();
    VerifyRow {
        variant,
        batch,
        cols,
        max_elem_relerr: dev.max_elem_relerr,
        worst_row: dev.worst_row,
        max_rowsum_dev: dev.max_rowsum_dev,
        elem_tolerance,
        passed: dev.max_elem_relerr <= elem_tolerance && dev.max_rowsum_dev <= ROWSUM_TOLERANCE,
    }
}

/// Checks every variant at every batch against the double-precision softmax.
pub fn run_verify(cfg: &BenchConfig) -> Result<VerifySummary> {
    verify_impl(cfg, None)
}

#[doc(hidden)]
pub fn run_verify_with_fault(cfg: &BenchConfig, fault: Fault) -> Result<VerifySummary> {
    verify_impl(cfg, Some(fault))
}

fn verify_impl(cfg: &BenchConfig, fault: Option<Fault>) -> Result<VerifySummary> {
    let cfg = cfg.clone().normalized()?;
    let mut rows = Vec::new();
    for &batch in &cfg.batch_sizes {
        let input = cfg.input(batch)?;
        let mut out = Matrix2D::zeros(batch, cfg.num_classes)?;
        for &variant in &cfg.variants {
            match fault {
                None => Softmax::new(variant).run(&input, &mut out)?,
                Some(Fault::SkipMaxShift) => softmax_into_unshifted(&input, &mut out, variant)?,
            }
            let dev = oracle::deviation(&input, &out);
            rows.push(verify_row(variant, batch, cfg.num_classes, dev));
        }
    }
    Ok(VerifySummary { rows })
}

/// One line of the bench table. Correctness columns are empty for the copy row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub variant: String,
    pub batch: usize,
    pub cols: usize,
    pub median_ticks: Ticks,
    pub min_ticks: Ticks,
    pub pct_of_baseline: f64,
    pub max_rowsum_dev: Option<f64>,
    pub max_elem_relerr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// `(batch, digest)` of the input shared by every variant at that batch.
    #[serde(skip)]
    pub input_digests: Vec<(usize, u64)>,
    /// Digest of the input actually consumed by each `(variant, batch)` run.
    #[serde(skip)]
    pub consumed_digests: Vec<(String, usize, u64)>,
    pub checks: Vec<Check>,
    pub ticks_per_second: f64,
}

impl SweepResult {
    pub fn row(&self, variant: &str, batch: usize) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.variant == variant && r.batch == batch)
    }
}

fn time_samples(cfg: &BenchConfig, mut body: impl FnMut() -> Result<()>) -> Result<Vec<Ticks>> {
    let timer = global_timer();
    for _ in 0..cfg.warmup {
        body()?;
    }
    let mut samples = Vec::with_capacity(cfg.reps);
    for _ in 0..cfg.reps {
        let t0 = timer.now();
        body()?;
        samples.push(timer.now() - t0);
    }
    Ok(samples)
}

/// Optimized variants should run at or below this percentage of the baseline.
pub const OPTIMIZED_PCT_TARGET: f64 = 70.0;

/// Times every variant and the copy baseline at every batch.
pub fn run_bench(cfg: &BenchConfig) -> Result<SweepResult> {
    let cfg = cfg.clone().normalized()?;
    let mut rows = Vec::new();
    let mut input_digests = Vec::new();
    let mut consumed_digests = Vec::new();
    let mut checks = Vec::new();

    for &batch in &cfg.batch_sizes {
        let input = cfg.input(batch)?;
        input_digests.push((batch, input_digest(&input)));
        let mut out = Matrix2D::zeros(batch, cfg.num_classes)?;

        let mut batch_rows = Vec::new();
        for &variant in &cfg.variants {
            let k = Softmax::new(variant);
            consumed_digests.push((variant.name().to_owned(), batch, input_digest(&input)));
            let samples = time_samples(&cfg, || {
                k.run(&input, &mut out)?;
                black_box(&mut out);
                Ok(())
            })?;
            // The buffer holds the last timed run's result.
            let dev = oracle::deviation(&input, &out);
            let ok = dev.max_elem_relerr <= variant.tolerance()
                && dev.max_rowsum_dev <= ROWSUM_TOLERANCE;
            if !ok {
                checks.push(Check::hard(
                    false,
                    format!(
                        "{variant} batch {batch}: elem relerr {:.3e} (tol {:.0e}), rowsum dev {:.3e}, worst row {}",
                        dev.max_elem_relerr,
                        variant.tolerance(),
                        dev.max_rowsum_dev,
                        dev.worst_row
                    ),
                ));
            }
            batch_rows.push(SweepRow {
                variant: variant.name().to_owned(),
                batch,
                cols: cfg.num_classes,
                median_ticks: median_ticks(&samples).expect("reps >= 1"),
                min_ticks: *samples.iter().min().expect("reps >= 1"),
                pct_of_baseline: 0.0,
                max_rowsum_dev: Some(dev.max_rowsum_dev),
                max_elem_relerr: Some(dev.max_elem_relerr),
            });
        }

        let copy_samples = time_samples(&cfg, || {
            out.as_mut_slice().copy_from_slice(black_box(input.as_slice()));
            black_box(&mut out);
            Ok(())
        })?;
        batch_rows.push(SweepRow {
            variant: COPY_ROW.to_owned(),
            batch,
            cols: cfg.num_classes,
            median_ticks: median_ticks(&copy_samples).expect("reps >= 1"),
            min_ticks: *copy_samples.iter().min().expect("reps >= 1"),
            pct_of_baseline: 0.0,
            max_rowsum_dev: None,
            max_elem_relerr: None,
        });

        let base = batch_rows
            .iter()
            .find(|r| r.variant == cfg.baseline.name())
            .map(|r| r.median_ticks.max(1))
            .expect("baseline is among the variants");
        for r in &mut batch_rows {
            r.pct_of_baseline = 100.0 * r.median_ticks.max(1) as f64 / base as f64;
        }

        let pct = |name: &str| batch_rows.iter().find(|r| r.variant == name).map(|r| r.pct_of_baseline);
        let copy_pct = pct(COPY_ROW).expect("copy row present");
        if let Some(p) = pct(KernelVariant::FullVectorized.name()) {
            checks.push(Check::soft(
                p <= OPTIMIZED_PCT_TARGET,
                format!(
                    "FullVectorized at batch {batch}: {p:.1}% of {} (expected <= {OPTIMIZED_PCT_TARGET}%)",
                    cfg.baseline
                ),
            ));
            checks.push(Check::soft(
                copy_pct < p,
                format!("memcpy at batch {batch}: {copy_pct:.1}% vs FullVectorized {p:.1}% (expected far below)"),
            ));
        }
        rows.extend(batch_rows);
    }

    Ok(SweepResult {
        rows,
        input_digests,
        consumed_digests,
        checks,
        ticks_per_second: global_timer().ticks_per_second(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileEntry {
    pub variant: KernelVariant,
    pub batch: usize,
    pub cols: usize,
    pub report: ProfileReport,
    pub shares: PhaseShares,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSummary {
    pub entries: Vec<ProfileEntry>,
    pub checks: Vec<Check>,
}

/// Share of the whole operation the exponential is expected to take in the scalar decomposition.
pub const EXP_SHARE_MIN: f64 = 0.40;
/// Bracket for the sum-and-scale share in the scalar decomposition.
pub const SUM_SCALE_SHARE: (f64, f64) = (0.10, 0.50);

/// Phase tables for every variant at every batch.
pub fn run_profile(cfg: &BenchConfig) -> Result<ProfileSummary> {
    let cfg = cfg.clone().normalized()?;
    let tps = global_timer().ticks_per_second();
    let mut entries = Vec::new();
    let mut checks = Vec::new();
    for &batch in &cfg.batch_sizes {
        let input = cfg.input(batch)?;
        for &variant in &cfg.variants {
            let timings = profiler::time_phases(&input, variant, cfg.reps, cfg.warmup)?;
            let report = phase_report(&timings, tps)?;
            let shares = phase_shares(&timings);

            let ratio_sum: f64 = report.events.iter().map(|e| e.ratio).sum();
            checks.push(Check::hard(
                (ratio_sum - 1.0).abs() <= 0.01,
                format!("{variant} batch {batch}: ratios sum to {ratio_sum:.4}"),
            ));
            let ordered = report
                .events
                .iter()
                .all(|e| e.min as f64 <= e.ave && e.ave <= e.max as f64);
            checks.push(Check::hard(ordered, format!("{variant} batch {batch}: min <= ave <= max")));

            if variant == KernelVariant::MklStyleScalar {
                let ratio = |p: profiler::PhaseId| report.get(&p.event_name()).map_or(0.0, |e| e.ratio);
                use profiler::PhaseId::{Exp, MaxSub, SumScale};
                checks.push(Check::soft(
                    ratio(Exp) >= ratio(MaxSub) && ratio(Exp) >= ratio(SumScale),
                    format!("{variant} batch {batch}: Exp has the largest ratio among phases"),
                ));
                checks.push(Check::soft(
                    shares.exp >= EXP_SHARE_MIN,
                    format!(
                        "{variant} batch {batch}: Exp share {:.3} of WholeOp (expected >= {EXP_SHARE_MIN})",
                        shares.exp
                    ),
                ));
                checks.push(Check::soft(
                    (SUM_SCALE_SHARE.0..=SUM_SCALE_SHARE.1).contains(&shares.sum_scale),
                    format!(
                        "{variant} batch {batch}: SumScale share {:.3} of WholeOp (expected in [{}, {}])",
                        shares.sum_scale, SUM_SCALE_SHARE.0, SUM_SCALE_SHARE.1
                    ),
                ));
            }
            entries.push(ProfileEntry {
                variant,
                batch,
                cols: cfg.num_classes,
                report,
                shares,
            });
        }
    }
    Ok(ProfileSummary { entries, checks })
}

/// One line of the probe table; `variant` is [`COPY_ROW`] for the self-probe.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeRow {
    pub batch: usize,
    pub cols: usize,
    pub variant: String,
    pub kernel_ticks: Ticks,
    pub copy_ticks: Ticks,
    pub ratio: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeTable {
    pub rows: Vec<ProbeRow>,
    pub checks: Vec<Check>,
}

fn probe_row(batch: usize, cols: usize, variant: &str, r: BoundProbeResult) -> ProbeRow {
    ProbeRow {
        batch,
        cols,
        variant: variant.to_owned(),
        kernel_ticks: r.kernel_ticks,
        copy_ticks: r.copy_ticks,
        ratio: r.ratio,
        verdict: r.verdict,
    }
}

/// Kernel-vs-copy probe for every variant at every batch, plus one copy
/// self-probe at the largest batch.
pub fn run_probe(cfg: &BenchConfig) -> Result<ProbeTable> {
    let cfg = cfg.clone().normalized()?;
    let reps = cfg.reps.max(bound_probe::MIN_REPS);
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for &batch in &cfg.batch_sizes {
        let input = cfg.input(batch)?;
        for &variant in &cfg.variants {
            let r = bound_probe::probe_target(&input, ProbeTarget::Kernel(variant), reps, cfg.warmup)?;
            if variant == KernelVariant::ReferenceClipped && cfg.num_classes >= 512 {
                checks.push(Check::soft(
                    r.verdict == Verdict::ComputeBoundLikely,
                    format!("{variant} batch {batch}: {} (ratio {:.2})", r.verdict, r.ratio),
                ));
            }
            rows.push(probe_row(batch, cfg.num_classes, variant.name(), r));
        }
        let ratio_of = |v: KernelVariant| {
            rows.iter()
                .rev()
                .find(|r: &&ProbeRow| r.batch == batch && r.variant == v.name())
                .map(|r| r.ratio)
        };
        if let (Some(reference), Some(fast)) = (
            ratio_of(KernelVariant::ReferenceClipped),
            ratio_of(KernelVariant::FullVectorized),
        ) {
            checks.push(Check::soft(
                reference >= fast,
                format!("batch {batch}: ReferenceClipped ratio {reference:.2} >= FullVectorized ratio {fast:.2}"),
            ));
        }
    }
    let largest = *cfg.batch_sizes.last().expect("non-empty");
    let input = cfg.input(largest)?;
    let r = bound_probe::probe_target(&input, ProbeTarget::Copy, reps, cfg.warmup)?;
    checks.push(Check::soft(
        r.verdict == Verdict::MemoryBoundLikely,
        format!("copy self-probe batch {largest}: {} (ratio {:.2})", r.verdict, r.ratio),
    ));
    rows.push(probe_row(largest, cfg.num_classes, COPY_ROW, r));
    Ok(ProbeTable { rows, checks })
}
