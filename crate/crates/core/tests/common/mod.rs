//! Test-side oracle, written independently of the library's own checker.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_row(rng: &mut ChaCha8Rng, n: usize, low: f32, high: f32) -> Vec<f32> {
    (0..n).map(|_| rng.random_range(low..high)).collect()
}

/// Kahan-summed f64 total.
pub fn kahan(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for v in values {
        let y = v - c;
        let t = s + y;
        c = (t - s) - y;
        s = t;
    }
    s
}

/// Double-precision softmax of one row.
pub fn softmax_f64(row: &[f32]) -> Vec<f64> {
    let m = row.iter().map(|&x| x as f64).fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = row.iter().map(|&x| (x as f64 - m).exp()).collect();
    let s = kahan(e.iter().copied());
    e.into_iter().map(|v| v / s).collect()
}

/// Relative error, with the denominator floored at the smallest normal f32.
pub fn relerr(got: f32, want: f64) -> f64 {
    if !got.is_finite() {
        return f64::INFINITY;
    }
    (got as f64 - want).abs() / want.abs().max(f32::MIN_POSITIVE as f64)
}

/// (max element relative error, max |row sum - 1|) of one output row.
pub fn row_errors(input: &[f32], output: &[f32]) -> (f64, f64) {
    let want = softmax_f64(input);
    let e = output
        .iter()
        .zip(&want)
        .map(|(&g, &w)| relerr(g, w))
        .fold(0.0, f64::max);
    let s = kahan(output.iter().map(|&v| v as f64));
    (e, (s - 1.0).abs())
}
