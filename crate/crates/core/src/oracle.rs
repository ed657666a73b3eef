//! Double-precision reference values used by `verify`.

use crate::Matrix2D;

/// Neumaier-compensated sum in `f64`.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Softmax of one `f32` row evaluated in `f64`.
pub fn softmax_row(row: &[f32]) -> Vec<f64> {
    let max = row.iter().map(|&x| f64::from(x)).fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = row.iter().map(|&x| (f64::from(x) - max).exp()).collect();
    let s = compensated_sum(e.iter().copied());
    e.into_iter().map(|v| v / s).collect()
}

/// Deviation of a computed softmax from the double-precision reference.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Deviation {
    /// Largest element-wise relative error.
    pub max_elem_relerr: f64,
    /// Row holding `max_elem_relerr`.
    pub worst_row: usize,
    /// Largest `|sum(row) - 1|`.
    pub max_rowsum_dev: f64,
}

impl Deviation {
    pub fn merge(self, other: Deviation, row_offset: usize) -> Deviation {
        let (max_elem_relerr, worst_row) = if other.max_elem_relerr > self.max_elem_relerr {
            (other.max_elem_relerr, other.worst_row + row_offset)
        } else {
            (self.max_elem_relerr, self.worst_row)
        };
        Deviation {
            max_elem_relerr,
            worst_row,
            max_rowsum_dev: self.max_rowsum_dev.max(other.max_rowsum_dev),
        }
    }
}

/// Relative error of one element. Reference values below the smallest normal
/// `f32` cannot be represented relatively; there the absolute error is scaled
/// by `f32::MIN_POSITIVE` instead. A non-finite output counts as infinite error.
pub fn element_relerr(got: f32, want: f64) -> f64 {
    if !got.is_finite() {
        return f64::INFINITY;
    }
    let diff = (f64::from(got) - want).abs();
    let floor = f64::from(f32::MIN_POSITIVE);
    if want >= floor {
        diff / want
    } else {
        diff / floor
    }
}

/// Compares every row of `output` with the reference softmax of `input`.
pub fn deviation(input: &Matrix2D, output: &Matrix2D) -> Deviation {
    assert_eq!(input.shape(), output.shape(), "shape mismatch");
    let mut dev = Deviation::default();
    for (n, (z, y)) in input.row_iter().zip(output.row_iter()).enumerate() {
        let want = softmax_row(z);
        let mut row_worst = 0.0f64;
        for (&g, &w) in y.iter().zip(&want) {
            let e = element_relerr(g, w);
            if e > row_worst || e.is_nan() {
                row_worst = if e.is_nan() { f64::INFINITY } else { e };
            }
        }
        let sum = compensated_sum(y.iter().map(|&v| f64::from(v)));
        let sum_dev = if sum.is_finite() { (sum - 1.0).abs() } else { f64::INFINITY };
        dev = dev.merge(
            Deviation {
                max_elem_relerr: row_worst,
                worst_row: n,
                max_rowsum_dev: sum_dev,
            },
            0,
        );
    }
    dev
}
