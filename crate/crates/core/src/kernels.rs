//! Softmax kernels.
//!
//! Every variant computes, per row `n`,
//!
//! ```text
//! out[n][c] = exp(z[n][c] - max(z[n])) / sum_i exp(z[n][i] - max(z[n]))
//! ```
//!
//! in three phases: max search and shift, exponentiation, and summation
//! followed by scaling with the reciprocal of the sum. The variants differ
//! in how each phase is carried out; see [`KernelVariant`].
//!
//! Exponentials smaller than the smallest normal `f32` are flushed to zero,
//! so unclipped variants produce exact zeros once a shifted logit drops below
//! `ln(f32::MIN_POSITIVE) ~ -87.34`. Row sums accumulate in `f64` and are
//! rounded to `f32` before the reciprocal is taken.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::simd_reduce::{self, Backend, LaneConfig};
use crate::{Error, Matrix2D, Result};

/// Floor applied to shifted logits by [`KernelVariant::ReferenceClipped`].
///
/// `exp(-64) ~ 1.6e-28` is a normal `f32`, so clipped outputs never reach zero.
pub const CLIP_FLOOR: f32 = -64.0;

/// One rung of the optimization ladder, in ladder order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum KernelVariant {
    /// Row-wise reference that clamps shifted logits at [`CLIP_FLOOR`].
    ReferenceClipped,
    /// The reference without clipping.
    ReferenceInference,
    /// Scalar max/shift per row, one exponential pass over the whole batch,
    /// scalar sum and reciprocal scaling per row.
    MklStyleScalar,
    /// As `MklStyleScalar` with the lane-accumulator sum.
    VectorizedSum,
    /// Lane max, shift, sum and scale; exact exponential.
    FullVectorized,
    /// `FullVectorized` with the polynomial exponential.
    FullVectorizedApproxExp,
}

impl KernelVariant {
    pub const ALL: [KernelVariant; 6] = [
        KernelVariant::ReferenceClipped,
        KernelVariant::ReferenceInference,
        KernelVariant::MklStyleScalar,
        KernelVariant::VectorizedSum,
        KernelVariant::FullVectorized,
        KernelVariant::FullVectorizedApproxExp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KernelVariant::ReferenceClipped => "ReferenceClipped",
            KernelVariant::ReferenceInference => "ReferenceInference",
            KernelVariant::MklStyleScalar => "MklStyleScalar",
            KernelVariant::VectorizedSum => "VectorizedSum",
            KernelVariant::FullVectorized => "FullVectorized",
            KernelVariant::FullVectorizedApproxExp => "FullVectorizedApproxExp",
        }
    }

    pub fn applies_clip(self) -> bool {
        self == KernelVariant::ReferenceClipped
    }

    pub fn uses_approx_exp(self) -> bool {
        self == KernelVariant::FullVectorizedApproxExp
    }

    /// Element-wise relative tolerance against the exact softmax.
    pub fn tolerance(self) -> f64 {
        if self.uses_approx_exp() {
            1e-5
        } else {
            1e-6
        }
    }

    fn vector_max_sub(self) -> bool {
        matches!(
            self,
            KernelVariant::FullVectorized | KernelVariant::FullVectorizedApproxExp
        )
    }

    fn vector_sum(self) -> bool {
        matches!(
            self,
            KernelVariant::VectorizedSum
                | KernelVariant::FullVectorized
                | KernelVariant::FullVectorizedApproxExp
        )
    }
}

impl fmt::Display for KernelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelVariant {
    type Err = Error;

    /// Accepts the variant name in any case, with or without `-`/`_` separators.
    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| *c != '-' && *c != '_')
            .flat_map(char::to_lowercase)
            .collect();
        KernelVariant::ALL
            .into_iter()
            .find(|v| v.name().to_lowercase() == key)
            .ok_or_else(|| Error::argument(format!("unknown kernel variant `{s}`")))
    }
}

/// Max and exponential sum of one row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowStats {
    pub max: f32,
    pub sum: f32,
}

/// Scalar statistics of a row: its maximum and `sum(exp(row - max))`.
pub fn row_stats(row: &[f32]) -> Result<RowStats> {
    let max = row_max_scalar(row)?;
    let mut shifted = vec![0.0; row.len()];
    subtract_broadcast(row, max, &mut shifted)?;
    exp_batch(&mut shifted);
    let sum = row_sum_scalar(&shifted)?;
    Ok(RowStats { max, sum })
}

/// Left-to-right maximum.
pub fn row_max_scalar(row: &[f32]) -> Result<f32> {
    let (&first, rest) = row
        .split_first()
        .ok_or_else(|| Error::argument("row_max needs at least one element"))?;
    Ok(max_scan(first, rest))
}

#[inline]
fn max_scan(first: f32, rest: &[f32]) -> f32 {
    let mut max = first;
    for &x in rest {
        max = if x > max { x } else { max };
    }
    max
}

/// `dst[c] = src[c] - v`.
pub fn subtract_broadcast(src: &[f32], v: f32, dst: &mut [f32]) -> Result<()> {
    if src.len() != dst.len() {
        return Err(Error::argument(format!(
            "source has {} elements but destination has {}",
            src.len(),
            dst.len()
        )));
    }
    for (d, &s) in dst.iter_mut().zip(src) {
        *d = s - v;
    }
    Ok(())
}

/// Clamps a shifted logit at [`CLIP_FLOOR`].
#[inline]
pub fn value_clip(x: f32) -> f32 {
    if x < CLIP_FLOOR {
        CLIP_FLOOR
    } else {
        x
    }
}

/// In-place `exp` of every element using the platform `expf`, flushing
/// subnormal results to zero.
pub fn exp_batch(buf: &mut [f32]) {
    for x in buf {
        let e = x.exp();
        *x = if e < f32::MIN_POSITIVE { 0.0 } else { e };
    }
}

/// Left-to-right sum, accumulated in `f64`.
pub fn row_sum_scalar(row: &[f32]) -> Result<f32> {
    if row.is_empty() {
        return Err(Error::argument("row_sum needs at least one element"));
    }
    Ok(sum_scan(row))
}

#[inline]
fn sum_scan(row: &[f32]) -> f32 {
    let mut sum = 0.0f64;
    for &x in row {
        sum += f64::from(x);
    }
    sum as f32
}

/// Multiplies every element by `1 / sum`; the reciprocal is taken once.
pub fn scale_reciprocal(row: &mut [f32], sum: f32) -> Result<()> {
    if !(sum.is_finite() && sum > 0.0) {
        return Err(Error::domain(format!(
            "row sum must be positive and finite, got {sum}"
        )));
    }
    let inv = 1.0f32 / sum;
    for x in row {
        *x *= inv;
    }
    Ok(())
}

/// Rejects non-finite input, naming the first offending row.
pub fn check_finite(m: &Matrix2D) -> Result<()> {
    // Branch-free fold so the common all-finite case vectorizes.
    if m.as_slice().iter().fold(true, |ok, x| ok & x.is_finite()) {
        return Ok(());
    }
    let (row, col) = m
        .row_iter()
        .enumerate()
        .find_map(|(n, r)| r.iter().position(|x| !x.is_finite()).map(|c| (n, c)))
        .expect("a non-finite element exists");
    Err(Error::domain_at_row(
        row,
        format!("non-finite logit {} at column {col}", m.get(row, col)),
    ))
}

fn check_shapes(input: &Matrix2D, output: &Matrix2D) -> Result<()> {
    if input.shape() != output.shape() {
        return Err(Error::argument(format!(
            "output shape {:?} differs from input shape {:?}",
            output.shape(),
            input.shape()
        )));
    }
    Ok(())
}

/// A variant bound to a lane layout and backend; the three phases can be run
/// one at a time, which is what the profiler does.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Softmax {
    pub variant: KernelVariant,
    pub lanes: LaneConfig,
    pub backend: Backend,
}

impl Softmax {
    pub fn new(variant: KernelVariant) -> Self {
        Self {
            variant,
            lanes: LaneConfig::default(),
            backend: Backend::Native,
        }
    }

    pub fn with_lanes(mut self, lanes: LaneConfig) -> Self {
        self.lanes = lanes;
        self
    }

    pub fn with_backend(mut self, backend: Backend) -> Self {
        self.backend = backend;
        self
    }

    /// Validates and runs all three phases, writing into `output`.
    pub fn run(&self, input: &Matrix2D, output: &mut Matrix2D) -> Result<()> {
        check_shapes(input, output)?;
        check_finite(input)?;
        self.max_sub(input, output);
        self.exp(output);
        self.sum_scale(output)
    }

    /// Phase 1: `output = input - rowmax(input)` (clipped for the reference
    /// variant). Shapes must match.
    pub fn max_sub(&self, input: &Matrix2D, output: &mut Matrix2D) {
        assert_eq!(input.shape(), output.shape(), "shape mismatch");
        let clip = self.variant.applies_clip();
        for (src, dst) in input.row_iter().zip(output.row_iter_mut()) {
            if self.variant.vector_max_sub() {
                let max = simd_reduce::max_unchecked(src, self.lanes, self.backend);
                simd_reduce::sub_unchecked(src, max, dst, self.lanes, self.backend);
            } else if clip {
                let max = max_scan(src[0], &src[1..]);
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d = value_clip(s - max);
                }
            } else {
                let max = max_scan(src[0], &src[1..]);
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d = s - max;
                }
            }
        }
    }

    /// Phase 2: in-place exponential.
    pub fn exp(&self, output: &mut Matrix2D) {
        match self.variant {
            KernelVariant::ReferenceClipped | KernelVariant::ReferenceInference => {
                for row in output.row_iter_mut() {
                    exp_batch(row);
                }
            }
            KernelVariant::FullVectorizedApproxExp => {
                simd_reduce::exp_unchecked(output.as_mut_slice(), self.lanes, self.backend)
            }
            _ => exp_batch(output.as_mut_slice()),
        }
    }

    /// Phase 3: divide each row by its sum.
    pub fn sum_scale(&self, output: &mut Matrix2D) -> Result<()> {
        for (n, row) in output.row_iter_mut().enumerate() {
            let sum = if self.variant.vector_sum() {
                simd_reduce::sum_unchecked(row, self.lanes, self.backend)
            } else {
                sum_scan(row)
            };
            if !(sum.is_finite() && sum > 0.0) {
                return Err(Error::domain_at_row(
                    n,
                    format!("exponential sum is {sum}"),
                ));
            }
            let inv = 1.0f32 / sum;
            if self.variant.vector_max_sub() {
                simd_reduce::scale_unchecked(row, inv, self.lanes, self.backend);
            } else {
                for x in row.iter_mut() {
                    *x *= inv;
                }
            }
        }
        Ok(())
    }
}

/// Softmax of every row of `m`.
pub fn softmax(m: &Matrix2D, variant: KernelVariant) -> Result<Matrix2D> {
    let mut out = Matrix2D::zeros(m.rows(), m.cols())?;
    softmax_into(m, &mut out, variant)?;
    Ok(out)
}

/// Softmax of every row of `input` into a preallocated `output`.
pub fn softmax_into(input: &Matrix2D, output: &mut Matrix2D, variant: KernelVariant) -> Result<()> {
    Softmax::new(variant).run(input, output)
}

/// Runs `variant` with the max-shift replaced by a plain copy. Only useful to
/// check that verification catches overflow; not a real kernel.
#[doc(hidden)]
pub fn softmax_into_unshifted(
    input: &Matrix2D,
    output: &mut Matrix2D,
    variant: KernelVariant,
) -> Result<()> {
    check_shapes(input, output)?;
    check_finite(input)?;
    output.as_mut_slice().copy_from_slice(input.as_slice());
    let k = Softmax::new(variant);
    k.exp(output);
    // An overflowed row yields inf/inf = NaN; leave it to the caller to notice.
    for row in output.row_iter_mut() {
        let sum = sum_scan(row);
        let inv = 1.0f32 / sum;
        for x in row.iter_mut() {
            *x *= inv;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::FillSpec;

    #[test]
    fn row_max_cases() {
        assert_eq!(row_max_scalar(&[3.0, 1.0, 2.0]).unwrap(), 3.0);
        assert_eq!(row_max_scalar(&[-5.0]).unwrap(), -5.0);
        assert!(row_max_scalar(&[]).is_err());
    }

    #[test]
    fn row_max_matches_sort() {
        let m = Matrix2D::uniform(1, 1024, &FillSpec::new(42, -10.0, 10.0)).unwrap();
        let mut sorted = m.row(0).to_vec();
        sorted.sort_by(f32::total_cmp);
        assert_eq!(row_max_scalar(m.row(0)).unwrap(), *sorted.last().unwrap());
    }

    #[test]
    fn subtract_cases() {
        let mut out = [0.0; 3];
        subtract_broadcast(&[1.0, 2.0, 3.0], 3.0, &mut out).unwrap();
        assert_eq!(out, [-2.0, -1.0, 0.0]);
        let mut one = [1.0];
        subtract_broadcast(&[5.0], 5.0, &mut one).unwrap();
        assert_eq!(one, [0.0]);
        assert!(subtract_broadcast(&[1.0], 0.0, &mut out).is_err());
    }

    #[test]
    fn shift_by_max_tops_out_at_zero() {
        let m = Matrix2D::uniform(1, 300, &FillSpec::new(5, -20.0, 20.0)).unwrap();
        let row = m.row(0);
        let mut out = vec![0.0; row.len()];
        subtract_broadcast(row, row_max_scalar(row).unwrap(), &mut out).unwrap();
        assert!(out.iter().all(|&x| x <= 0.0));
        assert_eq!(row_max_scalar(&out).unwrap(), 0.0);
    }

    #[test]
    fn clip_cases() {
        assert_eq!(value_clip(-100.0), -64.0);
        assert_eq!(value_clip(-1.0), -1.0);
        assert_eq!(value_clip(0.0), 0.0);
        assert!((-64.0f32).exp() > 0.0);
        assert!((-64.0f32).exp() >= f32::MIN_POSITIVE);
    }

    #[test]
    fn exp_batch_cases() {
        let mut a = [0.0; 3];
        exp_batch(&mut a);
        assert_eq!(a, [1.0; 3]);
        let mut b = [-64.0, -87.4, -100.0];
        exp_batch(&mut b);
        assert!(b[0] > 0.0);
        assert_eq!(&b[1..], &[0.0, 0.0]);
    }

    #[test]
    fn row_sum_cases() {
        assert_eq!(row_sum_scalar(&[1.0; 4]).unwrap(), 4.0);
        assert_eq!(row_sum_scalar(&[0.25; 8]).unwrap(), 2.0);
        assert!(row_sum_scalar(&[]).is_err());
    }

    #[test]
    fn scale_cases() {
        let mut a = [2.0, 4.0, 6.0];
        scale_reciprocal(&mut a, 2.0).unwrap();
        assert_eq!(a, [1.0, 2.0, 3.0]);
        let mut b = [1.0];
        scale_reciprocal(&mut b, 1.0).unwrap();
        assert_eq!(b, [1.0]);
        for bad in [0.0, -1.0, f32::INFINITY, f32::NAN] {
            assert!(matches!(
                scale_reciprocal(&mut b, bad),
                Err(Error::NumericDomain { .. })
            ));
        }
    }

    #[test]
    fn scaled_exponentials_sum_to_one() {
        let m = Matrix2D::uniform(1, 777, &FillSpec::new(3, -5.0, 5.0)).unwrap();
        let row = m.row(0);
        let mut e = vec![0.0; row.len()];
        subtract_broadcast(row, row_max_scalar(row).unwrap(), &mut e).unwrap();
        exp_batch(&mut e);
        let s = row_sum_scalar(&e).unwrap();
        scale_reciprocal(&mut e, s).unwrap();
        let total: f64 = e.iter().map(|&x| f64::from(x)).sum();
        assert!((total - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn uniform_row_and_single_class() {
        let z = Matrix2D::from_rows(&[[0.0f32; 4]]).unwrap();
        let one = Matrix2D::from_rows(&[[3.25f32]]).unwrap();
        for v in KernelVariant::ALL {
            assert_eq!(softmax(&z, v).unwrap().as_slice(), &[0.25; 4], "{v}");
            assert_eq!(softmax(&one, v).unwrap().as_slice(), &[1.0], "{v}");
        }
    }

    #[test]
    fn non_finite_input_names_row() {
        let mut m = Matrix2D::zeros(3, 4).unwrap();
        m.set(2, 1, f32::NAN);
        for v in KernelVariant::ALL {
            match softmax(&m, v) {
                Err(Error::NumericDomain { row: Some(2), .. }) => {}
                other => panic!("{v}: {other:?}"),
            }
        }
        m.set(2, 1, 0.0);
        m.set(1, 0, f32::INFINITY);
        assert!(matches!(
            softmax(&m, KernelVariant::FullVectorized),
            Err(Error::NumericDomain { row: Some(1), .. })
        ));
    }

    #[test]
    fn output_shape_must_match() {
        let m = Matrix2D::zeros(2, 3).unwrap();
        let mut out = Matrix2D::zeros(3, 2).unwrap();
        assert!(softmax_into(&m, &mut out, KernelVariant::MklStyleScalar).is_err());
    }

    #[test]
    fn only_reference_clipped_clips() {
        let clipping: Vec<_> = KernelVariant::ALL.into_iter().filter(|v| v.applies_clip()).collect();
        assert_eq!(clipping, [KernelVariant::ReferenceClipped]);
    }

    #[test]
    fn variant_names_round_trip() {
        for v in KernelVariant::ALL {
            assert_eq!(v.name().parse::<KernelVariant>().unwrap(), v);
        }
        assert_eq!(
            "full-vectorized".parse::<KernelVariant>().unwrap(),
            KernelVariant::FullVectorized
        );
        assert!("fastest".parse::<KernelVariant>().is_err());
    }

    #[test]
    fn row_stats_invariants() {
        let m = Matrix2D::uniform(1, 100, &FillSpec::new(11, -5.0, 5.0)).unwrap();
        let s = row_stats(m.row(0)).unwrap();
        assert!(m.row(0).iter().all(|&x| x <= s.max));
        assert!(s.sum >= 1.0);
    }

    #[test]
    fn unshifted_overflows_on_large_logits() {
        let m = Matrix2D::from_rows(&[[100.0f32, 99.0, 98.0]]).unwrap();
        let mut out = Matrix2D::zeros(1, 3).unwrap();
        softmax_into_unshifted(&m, &mut out, KernelVariant::FullVectorized).unwrap();
        assert!(out.as_slice().iter().any(|x| !x.is_finite()));
    }
}
