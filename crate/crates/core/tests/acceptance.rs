//! Acceptance suite: one PASS/WARN/FAIL line per criterion.
//!
//! Runs as a single test so the timing criteria never share the CPU with
//! other tests in this binary. WARN is reserved for hardware-dependent timing
//! expectations and does not fail the run.

mod common;

use std::io::Write;
use std::time::{Duration, Instant};

use softmax_kit::bound_probe::{probe_target, ProbeTarget, Verdict};
use softmax_kit::kernels::{row_max_scalar, Softmax};
use softmax_kit::profiler::{
    build_report, format_report, global_timer, median_ticks, phase_report, phase_shares,
    time_phases, EventStats, ProfileReport,
};
use softmax_kit::simd_reduce::{vexp, vmax_with, Backend, LaneConfig};
use softmax_kit::{FillSpec, KernelVariant, Matrix2D};

use common::{relerr, rng, row_errors, uniform_row};
use rand::Rng;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Outcome {
    Pass,
    Warn,
    Fail,
}

struct Line {
    id: u32,
    outcome: Outcome,
    detail: String,
}

fn emit(line: &Line) {
    let tag = match line.outcome {
        Outcome::Pass => "PASS",
        Outcome::Warn => "WARN",
        Outcome::Fail => "FAIL",
    };
    // Written to the process stdout directly so the lines survive output capture.
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "acceptance {:>2}: {tag}  {}", line.id, line.detail);
    let _ = out.flush();
}

fn hard(ok: bool) -> Outcome {
    if ok {
        Outcome::Pass
    } else {
        Outcome::Fail
    }
}

fn soft(ok: bool) -> Outcome {
    if ok {
        Outcome::Pass
    } else {
        Outcome::Warn
    }
}

const COLS: [usize; 11] = [1, 2, 7, 8, 9, 63, 64, 511, 512, 1000, 1024];

fn criterion_oracle() -> Line {
    const ROWS: usize = 10_000;
    let start = Instant::now();
    let mut r = rng(101);
    let mut worst: Vec<(f64, f64)> = vec![(0.0, 0.0); KernelVariant::ALL.len()];
    // Rows are spread evenly over the column counts, batched per count.
    for (i, &cols) in COLS.iter().enumerate() {
        let rows = ROWS / COLS.len() + usize::from(i < ROWS % COLS.len());
        let data: Vec<f32> = uniform_row(&mut r, rows * cols, -5.0, 5.0);
        let m = Matrix2D::from_slice(rows, cols, &data).unwrap();
        for (k, &v) in KernelVariant::ALL.iter().enumerate() {
            let out = softmax_kit::kernels::softmax(&m, v).unwrap();
            for n in 0..rows {
                let (e, s) = row_errors(m.row(n), out.row(n));
                worst[k].0 = worst[k].0.max(e);
                worst[k].1 = worst[k].1.max(s);
            }
        }
    }
    let elapsed = start.elapsed();
    let mut ok = elapsed < Duration::from_secs(60);
    let mut parts = Vec::new();
    for (k, &v) in KernelVariant::ALL.iter().enumerate() {
        let tol = if v == KernelVariant::FullVectorizedApproxExp { 1e-5 } else { 1e-6 };
        let (e, s) = worst[k];
        ok &= e <= tol && s <= 1e-5;
        parts.push(format!("{v} {e:.2e}/{s:.2e}"));
    }
    Line {
        id: 1,
        outcome: hard(ok),
        detail: format!(
            "oracle agreement over {ROWS} rows in {:.1}s (elem relerr/rowsum dev): {}",
            elapsed.as_secs_f64(),
            parts.join(", ")
        ),
    }
}

fn tricky_values(r: &mut impl Rng, n: usize) -> Vec<f32> {
    (0..n)
        .map(|_| match r.random_range(0..10) {
            0 => 0.0,
            1 => -0.0,
            2 => f32::MAX,
            3 => f32::MIN,
            _ => r.random_range(-1000.0f32..1000.0),
        })
        .collect()
}

fn criterion_vmax() -> Line {
    let start = Instant::now();
    let mut r = rng(202);
    let backends = [Backend::Portable, Backend::Native];
    let mut checked = 0usize;
    let mut mismatches = 0usize;
    let mut compare = |a: &[f32], lanes: LaneConfig, checked: &mut usize| {
        let want = row_max_scalar(a).unwrap().to_bits();
        for b in backends {
            *checked += 1;
            if vmax_with(a, lanes, b).unwrap().to_bits() != want {
                mismatches += 1;
            }
        }
    };
    for width in [8, 4] {
        let lanes = LaneConfig::new(width).unwrap();
        for len in 1..=35 {
            // The maximum in every position, plus random and signed-zero rows.
            for pos in 0..len {
                let mut a = uniform_row(&mut r, len, -10.0, 10.0);
                a[pos] = 100.0;
                compare(&a, lanes, &mut checked);
            }
            for _ in 0..20 {
                compare(&tricky_values(&mut r, len), lanes, &mut checked);
            }
            let mut z = vec![-0.0f32; len];
            compare(&z, lanes, &mut checked);
            z[len - 1] = 0.0;
            compare(&z, lanes, &mut checked);
        }
    }
    for _ in 0..10_000 {
        let len = r.random_range(1..=65_536);
        let width = LaneConfig::SUPPORTED_WIDTHS[r.random_range(0..3)];
        let a = tricky_values(&mut r, len);
        compare(&a, LaneConfig::new(width).unwrap(), &mut checked);
    }
    let elapsed = start.elapsed();
    Line {
        id: 2,
        outcome: hard(mismatches == 0 && elapsed < Duration::from_secs(30)),
        detail: format!(
            "vmax bitwise equal to scalar max: {mismatches} mismatches in {checked} comparisons, {:.1}s",
            elapsed.as_secs_f64()
        ),
    }
}

fn criterion_shift() -> Line {
    let mut r = rng(303);
    let mut worst = 0.0f64;
    for _ in 0..1_000 {
        let cols = COLS[r.random_range(0..COLS.len())];
        let z = uniform_row(&mut r, cols, -5.0, 5.0);
        let base = Matrix2D::from_slice(1, cols, &z).unwrap();
        for v in KernelVariant::ALL {
            let p = softmax_kit::kernels::softmax(&base, v).unwrap();
            for c in [-50.0f32, -1.0, 0.0, 1.0, 50.0] {
                let shifted: Vec<f32> = z.iter().map(|&x| x + c).collect();
                let m = Matrix2D::from_slice(1, cols, &shifted).unwrap();
                let q = softmax_kit::kernels::softmax(&m, v).unwrap();
                for (a, b) in p.as_slice().iter().zip(q.as_slice()) {
                    worst = worst.max((*a as f64 - *b as f64).abs());
                }
            }
        }
    }
    Line {
        id: 3,
        outcome: hard(worst <= 1e-6),
        detail: format!("shift invariance over 1000 rows, all variants: max |diff| {worst:.2e}"),
    }
}

fn criterion_clip() -> Line {
    let mut r = rng(404);
    let mut ok = true;
    let mut min_clipped = f32::INFINITY;
    for cols in [2, 8, 9, 64, 1000] {
        let mut row = uniform_row(&mut r, cols, -5.0, 5.0);
        let max = row_max_scalar(&row).unwrap();
        let pos = r.random_range(0..cols);
        row[pos] = max - 100.0;
        if row_max_scalar(&row).unwrap() != max {
            // `pos` held the unique maximum; restore one elsewhere.
            row[(pos + 1) % cols] = max;
        }
        let m = Matrix2D::from_slice(1, cols, &row).unwrap();
        let shifted = row[pos] - row_max_scalar(&row).unwrap();
        assert!(shifted < -87.4);
        let clipped = softmax_kit::kernels::softmax(&m, KernelVariant::ReferenceClipped).unwrap();
        let inference = softmax_kit::kernels::softmax(&m, KernelVariant::ReferenceInference).unwrap();
        min_clipped = min_clipped.min(clipped.get(0, pos));
        ok &= clipped.get(0, pos) > 0.0 && inference.get(0, pos) == 0.0;
    }
    Line {
        id: 4,
        outcome: hard(ok),
        detail: format!(
            "logit 100 below max: clipped output > 0 (smallest {min_clipped:e}), inference output exactly 0"
        ),
    }
}

fn criterion_phases() -> Vec<Line> {
    let m = Matrix2D::uniform(32, 1000, &FillSpec::new(5, -5.0, 5.0)).unwrap();
    let timings = time_phases(&m, KernelVariant::MklStyleScalar, 200, 20).unwrap();
    let report = phase_report(&timings, global_timer().ticks_per_second()).unwrap();
    let ratio_sum: f64 = report.events.iter().map(|e| e.ratio).sum();
    let ordered = report
        .events
        .iter()
        .all(|e| e.min as f64 <= e.ave && e.ave <= e.max as f64);
    let shares = phase_shares(&timings);
    let share_ok = shares.exp >= 0.40 && (0.10..=0.50).contains(&shares.sum_scale);
    vec![
        Line {
            id: 5,
            outcome: hard((ratio_sum - 1.0).abs() <= 0.01 && ordered),
            detail: format!("profile invariants: ratio sum {ratio_sum:.4}, min <= ave <= max {ordered}"),
        },
        Line {
            id: 5,
            outcome: soft(share_ok),
            detail: format!(
                "MklStyleScalar 32x1000 median shares: Exp {:.3} (>= 0.40), SumScale {:.3} (in [0.10, 0.50]), MaxSub {:.3}",
                shares.exp, shares.sum_scale, shares.max_sub
            ),
        },
    ]
}

/// Median ticks per variant, with reps interleaved across the variants so
/// clock or load drift affects them equally.
fn interleaved_medians(m: &Matrix2D, variants: &[KernelVariant], reps: usize) -> Vec<u64> {
    let timer = global_timer();
    let mut out = Matrix2D::zeros(m.rows(), m.cols()).unwrap();
    let kernels: Vec<Softmax> = variants.iter().map(|&v| Softmax::new(v)).collect();
    for k in &kernels {
        for _ in 0..10 {
            k.run(m, &mut out).unwrap();
        }
    }
    let mut samples = vec![Vec::with_capacity(reps); kernels.len()];
    for _ in 0..reps {
        for (k, s) in kernels.iter().zip(&mut samples) {
            let t0 = timer.now();
            k.run(m, &mut out).unwrap();
            std::hint::black_box(&mut out);
            s.push(timer.now() - t0);
        }
    }
    samples.iter().map(|s| median_ticks(s).unwrap()).collect()
}

fn criterion_speedup() -> Line {
    let m = Matrix2D::uniform(128, 1000, &FillSpec::new(6, -5.0, 5.0)).unwrap();
    let t = interleaved_medians(
        &m,
        &[
            KernelVariant::ReferenceClipped,
            KernelVariant::FullVectorized,
            KernelVariant::FullVectorizedApproxExp,
        ],
        100,
    );
    let (base, fast, approx) = (t[0], t[1], t[2]);
    let ratio = fast as f64 / base as f64;
    Line {
        id: 6,
        outcome: soft(ratio <= 0.7),
        detail: format!(
            "128x1000 median ticks: ReferenceClipped {base}, FullVectorized {fast} ({ratio:.3}x, target <= 0.7), FullVectorizedApproxExp {approx} ({:.3}x)",
            approx as f64 / base as f64
        ),
    }
}

fn criterion_bound() -> Line {
    let m = Matrix2D::uniform(128, 1000, &FillSpec::new(7, -5.0, 5.0)).unwrap();
    let kernel = probe_target(&m, ProbeTarget::Kernel(KernelVariant::ReferenceClipped), 50, 10).unwrap();
    let copy = probe_target(&m, ProbeTarget::Copy, 50, 10).unwrap();
    let ok = kernel.verdict == Verdict::ComputeBoundLikely && copy.verdict == Verdict::MemoryBoundLikely;
    Line {
        id: 7,
        outcome: hard(ok),
        detail: format!(
            "ReferenceClipped 128x1000 ratio {:.2} -> {}; copy self-probe ratio {:.2} -> {}",
            kernel.ratio, kernel.verdict, copy.ratio, copy.verdict
        ),
    }
}

fn golden_report() -> ProfileReport {
    // (name, calls, total ms, min ms, max ms, ave ms, ratio); ticks are nanoseconds.
    let rows = [
        ("thread0::layer_norm", 316_000, 68_958.0, 0.21599, 18.1111, 0.218222, 0.396),
        ("thread0::softmax", 158_000, 32_188.1, 0.193633, 0.882732, 0.203722, 0.185),
        ("thread0::stack", 19_000, 19_002.9, 0.926812, 2.51014, 1.00015, 0.109),
        ("thread0::conv3d", 2_000, 16_806.6, 1.25346, 19.4991, 8.40328, 0.096),
        ("thread0::mul", 317_000, 13_812.1, 0.009354, 69.8051, 0.0435712, 0.079),
    ];
    let ns = |ms: f64| (ms * 1e6).round() as u64;
    ProfileReport {
        events: rows
            .iter()
            .map(|&(name, calls, total, min, max, ave, ratio)| EventStats {
                name: name.to_owned(),
                calls,
                total: ns(total),
                min: ns(min),
                max: ns(max),
                ave: ave * 1e6,
                ratio,
            })
            .collect(),
        ticks_per_second: 1e9,
    }
}

fn criterion_report() -> Line {
    let golden = include_str!("golden/profiling_report.txt");
    let rendered = format_report(&golden_report());
    let single = format_report(&build_report(&[("e".to_owned(), vec![10, 20, 30])], 1e9).unwrap());
    let ok = rendered == golden && single.trim_end().ends_with("1.000");
    Line {
        id: 8,
        outcome: hard(ok),
        detail: format!(
            "report golden file byte-exact: {}; single event ratio renders as 1.000",
            rendered == golden
        ),
    }
}

fn criterion_vexp() -> Line {
    const N: usize = 100_000;
    let mut r = rng(909);
    let mut xs: Vec<f32> = (0..N).map(|_| r.random_range(-64.0f32..=0.0)).collect();
    xs[0] = -64.0;
    xs[1] = 0.0;
    let inputs = xs.clone();
    vexp(&mut xs, LaneConfig::default()).unwrap();
    let worst = inputs
        .iter()
        .zip(&xs)
        .map(|(&x, &y)| relerr(y, (x as f64).exp()))
        .fold(0.0, f64::max);
    Line {
        id: 9,
        outcome: hard(worst <= 2e-7),
        detail: format!("vexp max relative error over {N} points in [-64, 0]: {worst:.3e} (<= 2e-7)"),
    }
}

#[test]
fn acceptance() {
    let mut lines = Vec::new();
    let mut run = |l: Line| {
        emit(&l);
        lines.push(l);
    };
    run(criterion_oracle());
    run(criterion_vmax());
    run(criterion_shift());
    run(criterion_clip());
    for l in criterion_phases() {
        run(l);
    }
    run(criterion_speedup());
    run(criterion_bound());
    run(criterion_report());
    run(criterion_vexp());

    let failed: Vec<u32> = lines
        .iter()
        .filter(|l| l.outcome == Outcome::Fail)
        .map(|l| l.id)
        .collect();
    assert!(failed.is_empty(), "acceptance criteria failed: {failed:?}");
}
