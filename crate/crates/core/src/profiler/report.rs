//! Event tables in the classic framework-profiler layout:
//!
//! ```text
//! ------------------------->     Profiling Report     <-----------------------
//!
//! Place: CPU
//! Time unit: ms
//! Sorted by total time in descending order in the same thread
//!
//! Event                Calls    Total     Min.      Max.      Ave.       Ratio.
//! thread0::softmax     158000   32188.1   0.193633  0.882732  0.203722   0.185
//! ```
//!
//! Times are printed with six significant digits (C's `%g`), ratios with
//! three decimals. Trailing whitespace is trimmed from every line.

use serde::{Deserialize, Serialize};

use super::Ticks;
use crate::{Error, Result};

pub const TITLE: &str = "------------------------->     Profiling Report     <-----------------------";
pub const SORT_NOTE: &str = "Sorted by total time in descending order in the same thread";

const W_EVENT: usize = 21;
const W_CALLS: usize = 9;
const W_TIME: usize = 10;
const W_AVE: usize = 11;

/// Aggregated samples of one event. Times are in ticks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventStats {
    pub name: String,
    pub calls: u64,
    pub total: Ticks,
    pub min: Ticks,
    pub max: Ticks,
    pub ave: f64,
    /// Share of the grand total over every event in the report.
    pub ratio: f64,
}

impl EventStats {
    fn from_samples(name: &str, samples: &[Ticks]) -> Result<Self> {
        let (&first, _) = samples
            .split_first()
            .ok_or_else(|| Error::argument(format!("event `{name}` has no samples")))?;
        let (mut min, mut max, mut total) = (first, first, 0u64);
        for &s in samples {
            min = min.min(s);
            max = max.max(s);
            total = total.saturating_add(s);
        }
        Ok(Self {
            name: name.to_owned(),
            calls: samples.len() as u64,
            total,
            min,
            max,
            ave: total as f64 / samples.len() as f64,
            ratio: 0.0,
        })
    }
}

/// Event table sorted by total time, descending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileReport {
    pub events: Vec<EventStats>,
    pub ticks_per_second: f64,
}

/// One table row with times converted to milliseconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub event: String,
    pub calls: u64,
    pub total_ms: f64,
    pub min_ms: f64,
    pub max_ms: f64,
    pub ave_ms: f64,
    pub ratio: f64,
}

/// Aggregates raw samples per event.
///
/// When every sample is zero the ratios are split evenly so they still sum to one.
pub fn build_report(events: &[(String, Vec<Ticks>)], ticks_per_second: f64) -> Result<ProfileReport> {
    if events.is_empty() {
        return Err(Error::argument("a report needs at least one event"));
    }
    if !(ticks_per_second.is_finite() && ticks_per_second > 0.0) {
        return Err(Error::argument(format!(
            "tick rate must be positive, got {ticks_per_second}"
        )));
    }
    let mut stats = events
        .iter()
        .map(|(name, samples)| EventStats::from_samples(name, samples))
        .collect::<Result<Vec<_>>>()?;
    let grand: f64 = stats.iter().map(|e| e.total as f64).sum();
    let n = stats.len() as f64;
    for e in &mut stats {
        e.ratio = if grand > 0.0 { e.total as f64 / grand } else { 1.0 / n };
    }
    stats.sort_by_key(|e| std::cmp::Reverse(e.total));
    Ok(ProfileReport {
        events: stats,
        ticks_per_second,
    })
}

impl ProfileReport {
    pub fn rows(&self) -> Vec<ReportRow> {
        let ms = |t: f64| t / self.ticks_per_second * 1e3;
        self.events
            .iter()
            .map(|e| ReportRow {
                event: e.name.clone(),
                calls: e.calls,
                total_ms: ms(e.total as f64),
                min_ms: ms(e.min as f64),
                max_ms: ms(e.max as f64),
                ave_ms: ms(e.ave),
                ratio: e.ratio,
            })
            .collect()
    }

    /// Keeps only the events matching `keep`; ratios are not renormalized.
    pub fn retain(&mut self, keep: impl FnMut(&EventStats) -> bool) {
        self.events.retain(keep);
    }

    pub fn get(&self, name: &str) -> Option<&EventStats> {
        self.events.iter().find(|e| e.name == name)
    }
}

pub fn format_report(r: &ProfileReport) -> String {
    format_rows(&r.rows())
}

pub fn format_rows(rows: &[ReportRow]) -> String {
    let mut out = String::new();
    out.push_str(TITLE);
    out.push_str("\n\nPlace: CPU\nTime unit: ms\n");
    out.push_str(SORT_NOTE);
    out.push_str("\n\n");
    push_line(
        &mut out,
        &["Event", "Calls", "Total", "Min.", "Max.", "Ave.", "Ratio."],
    );
    for r in rows {
        push_line(
            &mut out,
            &[
                &r.event,
                &r.calls.to_string(),
                &format_g(r.total_ms),
                &format_g(r.min_ms),
                &format_g(r.max_ms),
                &format_g(r.ave_ms),
                &format!("{:.3}", r.ratio),
            ],
        );
    }
    out
}

fn push_line(out: &mut String, cells: &[&str; 7]) {
    let widths = [W_EVENT, W_CALLS, W_TIME, W_TIME, W_TIME, W_AVE, 0];
    let mut line = String::new();
    for (cell, w) in cells.iter().zip(widths) {
        line.push_str(cell);
        if w > 0 {
            let pad = w.saturating_sub(cell.chars().count()).max(1);
            line.extend(std::iter::repeat_n(' ', pad));
        }
    }
    out.push_str(line.trim_end());
    out.push('\n');
}

/// Parses the data rows back out of a formatted table.
pub fn parse_report(text: &str) -> Result<Vec<ReportRow>> {
    let mut lines = text.lines();
    lines
        .by_ref()
        .find(|l| l.starts_with("Event "))
        .ok_or_else(|| Error::argument("no `Event` header line found"))?;
    let mut rows = Vec::new();
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 7 {
            return Err(Error::argument(format!(
                "expected 7 columns, found {} in `{line}`",
                f.len()
            )));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| Error::argument(format!("bad number `{s}`: {e}")))
        };
        rows.push(ReportRow {
            event: f[0].to_owned(),
            calls: f[1]
                .parse()
                .map_err(|e| Error::argument(format!("bad call count `{}`: {e}", f[1])))?,
            total_ms: num(f[2])?,
            min_ms: num(f[3])?,
            max_ms: num(f[4])?,
            ave_ms: num(f[5])?,
            ratio: num(f[6])?,
        });
    }
    Ok(rows)
}

/// CSV export, one line per event.
pub fn report_to_csv(r: &ProfileReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in r.rows() {
        w.serialize(row)
            .map_err(|e| Error::argument(format!("csv: {e}")))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::argument(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Six-significant-digit general format, equivalent to C's `%g`.
pub fn format_g(v: f64) -> String {
    const SIG: i32 = 6;
    if v == 0.0 {
        return "0".to_owned();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{:.*e}", (SIG - 1) as usize, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..SIG).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_fraction(mantissa), exp.abs())
    } else {
        let decimals = (SIG - 1 - exp) as usize;
        trim_fraction(&format!("{v:.decimals$}")).to_owned()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(name: &str, samples: &[u64]) -> (String, Vec<u64>) {
        (name.to_owned(), samples.to_vec())
    }

    #[test]
    fn single_event_arithmetic() {
        let r = build_report(&[ev("a", &[10, 20, 30])], 1e9).unwrap();
        let e = &r.events[0];
        assert_eq!((e.calls, e.total, e.min, e.max), (3, 60, 10, 30));
        assert_eq!(e.ave, 20.0);
        assert_eq!(e.ratio, 1.0);
    }

    #[test]
    fn ratios_and_order() {
        let r = build_report(&[ev("small", &[40]), ev("big", &[30, 30])], 1e9).unwrap();
        assert_eq!(r.events[0].name, "big");
        assert!((r.events[0].ratio - 0.6).abs() < 1e-12);
        assert!((r.events[1].ratio - 0.4).abs() < 1e-12);
    }

    #[test]
    fn rejects_empty_input() {
        assert!(build_report(&[], 1e9).is_err());
        assert!(build_report(&[ev("a", &[])], 1e9).is_err());
        assert!(build_report(&[ev("a", &[1])], 0.0).is_err());
    }

    #[test]
    fn all_zero_samples_split_evenly() {
        let r = build_report(&[ev("a", &[0]), ev("b", &[0, 0])], 1e9).unwrap();
        assert!(r.events.iter().all(|e| e.ratio == 0.5));
    }

    #[test]
    fn format_g_matches_printf() {
        let cases = [
            (68958.0, "68958"),
            (32188.1, "32188.1"),
            (0.21599, "0.21599"),
            (0.0435712, "0.0435712"),
            (0.009354, "0.009354"),
            (18.1111, "18.1111"),
            (1.0, "1"),
            (100.0, "100"),
            (1234567.0, "1.23457e+06"),
            (0.00001234, "1.234e-05"),
            (0.0001, "0.0001"),
            (999999.5, "1e+06"),
            (-2.5, "-2.5"),
            (0.0, "0"),
        ];
        for (v, s) in cases {
            assert_eq!(format_g(v), s, "{v}");
        }
    }

    #[test]
    fn empty_report_has_only_header() {
        let mut r = build_report(&[ev("a", &[5])], 1e9).unwrap();
        r.retain(|_| false);
        let text = format_report(&r);
        assert_eq!(text.lines().count(), 7);
        assert!(text.ends_with("Ratio.\n"));
        assert!(parse_report(&text).unwrap().is_empty());
    }

    #[test]
    fn single_event_ratio_field() {
        let r = build_report(&[ev("x", &[1_000_000, 3_000_000])], 1e9).unwrap();
        let text = format_report(&r);
        let last = text.lines().last().unwrap();
        assert!(last.ends_with(" 1.000"), "{last}");
        assert!(last.starts_with("x "));
    }

    #[test]
    fn csv_has_one_line_per_event() {
        let r = build_report(&[ev("a", &[1]), ev("b", &[2])], 1e9).unwrap();
        let csv = report_to_csv(&r).unwrap();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "event,calls,total_ms,min_ms,max_ms,ave_ms,ratio");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("b,1,"));
    }

    #[test]
    fn parse_rejects_malformed_rows() {
        let text = format!("{}\nEvent x\nfoo 1 2\n", TITLE);
        assert!(parse_report(&text).is_err());
        assert!(parse_report("nothing here").is_err());
    }
}
