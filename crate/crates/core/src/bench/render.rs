use std::fmt::Write as _;

use serde::Serialize;

use super::{Check, OutputFormat, ProbeTable, ProfileSummary, SweepResult, VerifySummary};
use crate::profiler::{format_report, ReportRow};
use crate::{Error, Result};

fn to_csv<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::argument(format!("csv: {e}")))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::argument(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::argument(format!("json: {e}")))?;
    s.push('\n');
    Ok(s)
}

fn push_checks(out: &mut String, checks: &[Check]) {
    if checks.is_empty() {
        return;
    }
    out.push('\n');
    for c in checks {
        let _ = writeln!(out, "{c}");
    }
}

fn opt_sci(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_owned(), |v| format!("{v:.3e}"))
}

pub fn render_verify(s: &VerifySummary, format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Csv => to_csv(&s.rows),
        OutputFormat::Json => to_json(&s.rows),
        OutputFormat::Text => {
            let mut out = String::new();
            let _ = writeln!(
                out,
                "{:<24} {:>6} {:>6} {:>12} {:>8} {:>12} {:>6}",
                "variant", "batch", "cols", "elem_relerr", "tol", "rowsum_dev", "status"
            );
            for r in &s.rows {
                let _ = writeln!(
                    out,
                    "{:<24} {:>6} {:>6} {:>12.3e} {:>8.0e} {:>12.3e} {:>6}",
                    r.variant.name(),
                    r.batch,
                    r.cols,
                    r.max_elem_relerr,
                    r.elem_tolerance,
                    r.max_rowsum_dev,
                    if r.passed { "PASS" } else { "FAIL" }
                );
            }
            out.push('\n');
            for r in s.failures() {
                let _ = writeln!(
                    out,
                    "FAIL: {} batch {} row {}: elem relerr {:.3e} (tol {:.0e}), rowsum dev {:.3e} (tol 1e-5)",
                    r.variant, r.batch, r.worst_row, r.max_elem_relerr, r.elem_tolerance, r.max_rowsum_dev
                );
            }
            let _ = writeln!(out, "verify: {}", if s.passed() { "PASS" } else { "FAIL" });
            Ok(out)
        }
    }
}

pub fn render_bench(r: &SweepResult, format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Csv => to_csv(&r.rows),
        OutputFormat::Json => to_json(&r.rows),
        OutputFormat::Text => {
            let mut out = String::new();
            let _ = writeln!(
                out,
                "{:<24} {:>6} {:>6} {:>12} {:>12} {:>9} {:>11} {:>11}",
                "variant", "batch", "cols", "median_ms", "min_ms", "%base", "rowsum_dev", "elem_relerr"
            );
            let ms = |t: u64| t as f64 / r.ticks_per_second * 1e3;
            for row in &r.rows {
                let _ = writeln!(
                    out,
                    "{:<24} {:>6} {:>6} {:>12.6} {:>12.6} {:>9.1} {:>11} {:>11}",
                    row.variant,
                    row.batch,
                    row.cols,
                    ms(row.median_ticks),
                    ms(row.min_ticks),
                    row.pct_of_baseline,
                    opt_sci(row.max_rowsum_dev),
                    opt_sci(row.max_elem_relerr)
                );
            }
            push_checks(&mut out, &r.checks);
            Ok(out)
        }
    }
}

#[derive(Serialize)]
struct ProfileCsvRow<'a> {
    variant: &'a str,
    batch: usize,
    cols: usize,
    #[serde(flatten)]
    row: ReportRow,
}

pub fn render_profile(s: &ProfileSummary, format: OutputFormat) -> Result<String> {
    let flat = || {
        s.entries.iter().flat_map(|e| {
            e.report.rows().into_iter().map(move |row| ProfileCsvRow {
                variant: e.variant.name(),
                batch: e.batch,
                cols: e.cols,
                row,
            })
        })
    };
    match format {
        OutputFormat::Csv => {
            // `csv` cannot serialize flattened structs; write the columns by hand.
            let mut w = csv::Writer::from_writer(Vec::new());
            let err = |e: csv::Error| Error::argument(format!("csv: {e}"));
            w.write_record([
                "variant", "batch", "cols", "event", "calls", "total_ms", "min_ms", "max_ms", "ave_ms",
                "ratio",
            ])
            .map_err(err)?;
            for r in flat() {
                w.write_record([
                    r.variant.to_owned(),
                    r.batch.to_string(),
                    r.cols.to_string(),
                    r.row.event.clone(),
                    r.row.calls.to_string(),
                    r.row.total_ms.to_string(),
                    r.row.min_ms.to_string(),
                    r.row.max_ms.to_string(),
                    r.row.ave_ms.to_string(),
                    r.row.ratio.to_string(),
                ])
                .map_err(err)?;
            }
            let bytes = w
                .into_inner()
                .map_err(|e| Error::argument(format!("csv: {e}")))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
        OutputFormat::Json => to_json(&flat().collect::<Vec<_>>()),
        OutputFormat::Text => {
            let mut out = String::new();
            for e in &s.entries {
                let _ = writeln!(out, "== {} | batch {} x {} classes ==", e.variant, e.batch, e.cols);
                out.push_str(&format_report(&e.report));
                let _ = writeln!(
                    out,
                    "median share of WholeOp: MaxSub {:.3}  Exp {:.3}  SumScale {:.3}\n",
                    e.shares.max_sub, e.shares.exp, e.shares.sum_scale
                );
            }
            push_checks(&mut out, &s.checks);
            Ok(out)
        }
    }
}

pub fn render_probe(t: &ProbeTable, format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Csv => to_csv(&t.rows),
        OutputFormat::Json => to_json(&t.rows),
        OutputFormat::Text => {
            let mut out = String::new();
            let _ = writeln!(
                out,
                "{:<24} {:>6} {:>6} {:>14} {:>12} {:>9}  verdict",
                "variant", "batch", "cols", "kernel_ticks", "copy_ticks", "ratio"
            );
            for r in &t.rows {
                let _ = writeln!(
                    out,
                    "{:<24} {:>6} {:>6} {:>14} {:>12} {:>9.2}  {}",
                    r.variant, r.batch, r.cols, r.kernel_ticks, r.copy_ticks, r.ratio, r.verdict
                );
            }
            push_checks(&mut out, &t.checks);
            Ok(out)
        }
    }
}
