//! Lane-vectorized reductions and element-wise kernels.
//!
//! Every operation is defined by a portable emulation of a `W`-lane register
//! (see [`lanes`](self)). On x86-64 the same code is additionally compiled
//! with AVX2 enabled and selected at runtime; the arithmetic is identical, so
//! both backends return bit-identical results.

mod exp;
mod lanes;

pub use exp::{
    DOMAIN_MAX as VEXP_DOMAIN_MAX, DOMAIN_MIN as VEXP_DOMAIN_MIN, LN2_HI, LN2_LO, LOG2_E, P0, P1,
    P2, P3, P4, P5, UNDERFLOW as EXP_UNDERFLOW,
};

use crate::{Error, Result};

/// Lane layout of the wide path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LaneConfig {
    width: usize,
}

impl LaneConfig {
    /// Widths with a compiled kernel: 128-, 256- and 512-bit registers.
    pub const SUPPORTED_WIDTHS: [usize; 3] = [4, 8, 16];

    pub fn new(width: usize) -> Result<Self> {
        if width < 4 || !width.is_power_of_two() {
            return Err(Error::argument(format!(
                "lane width must be a power of two >= 4, got {width}"
            )));
        }
        if !Self::SUPPORTED_WIDTHS.contains(&width) {
            return Err(Error::argument(format!(
                "lane width {width} is not compiled in (supported: 4, 8, 16)"
            )));
        }
        Ok(Self { width })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn half_width(&self) -> usize {
        self.width / 2
    }
}

impl Default for LaneConfig {
    /// Eight single-precision lanes (256-bit).
    fn default() -> Self {
        Self { width: 8 }
    }
}

/// Code path used for the wide loops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    /// Plain emulation, compiled for the baseline target.
    Portable,
    /// Emulation compiled with the widest vector extension detected at runtime.
    #[default]
    Native,
}

impl Backend {
    /// True when `Native` actually resolves to a wider instruction set.
    pub fn native_available() -> bool {
        #[cfg(target_arch = "x86_64")]
        {
            std::arch::is_x86_feature_detected!("avx2")
        }
        #[cfg(not(target_arch = "x86_64"))]
        {
            false
        }
    }
}

macro_rules! dispatch {
    ($kernel:ident, $cfg:expr, $backend:expr, ($($arg:expr),*)) => {{
        #[cfg(target_arch = "x86_64")]
        {
            if $backend == Backend::Native && Backend::native_available() {
                // SAFETY: AVX2 support was verified at runtime just above.
                return unsafe {
                    match $cfg.width {
                        4 => avx2::$kernel::<4>($($arg),*),
                        8 => avx2::$kernel::<8>($($arg),*),
                        _ => avx2::$kernel::<16>($($arg),*),
                    }
                };
            }
        }
        let _ = $backend;
        match $cfg.width {
            4 => lanes::$kernel::<4>($($arg),*),
            8 => lanes::$kernel::<8>($($arg),*),
            _ => lanes::$kernel::<16>($($arg),*),
        }
    }};
}

#[cfg(target_arch = "x86_64")]
mod avx2 {
    use super::lanes;

    macro_rules! avx2_wrap {
        ($name:ident, ($($arg:ident : $ty:ty),*) $(-> $ret:ty)?) => {
            #[target_feature(enable = "avx2")]
            pub(super) unsafe fn $name<const W: usize>($($arg: $ty),*) $(-> $ret)? {
                lanes::$name::<W>($($arg),*)
            }
        };
    }

    avx2_wrap!(max_lanes, (a: &[f32]) -> f32);
    avx2_wrap!(sum_lanes, (a: &[f32]) -> f32);
    avx2_wrap!(sub_lanes, (src: &[f32], v: f32, dst: &mut [f32]));
    avx2_wrap!(scale_lanes, (buf: &mut [f32], factor: f32));
    avx2_wrap!(exp_lanes, (buf: &mut [f32]));
}

fn non_empty(a: &[f32], op: &str) -> Result<()> {
    if a.is_empty() {
        Err(Error::argument(format!("{op} needs at least one element")))
    } else {
        Ok(())
    }
}

fn same_len(src: &[f32], dst: &[f32]) -> Result<()> {
    if src.len() != dst.len() {
        Err(Error::argument(format!(
            "source has {} elements but destination has {}",
            src.len(),
            dst.len()
        )))
    } else {
        Ok(())
    }
}

/// Maximum of `a`, bit-identical to [`crate::kernels::row_max_scalar`].
///
/// Elements must be finite; NaN handling is unspecified.
pub fn vmax(a: &[f32], cfg: LaneConfig) -> Result<f32> {
    vmax_with(a, cfg, Backend::Native)
}

pub fn vmax_with(a: &[f32], cfg: LaneConfig, backend: Backend) -> Result<f32> {
    non_empty(a, "vmax")?;
    Ok(max_unchecked(a, cfg, backend))
}

pub(crate) fn max_unchecked(a: &[f32], cfg: LaneConfig, backend: Backend) -> f32 {
    dispatch!(max_lanes, cfg, backend, (a))
}

/// Sum of `a` using `W` partial accumulators.
///
/// Partials are held in `f64`; the result is rounded to `f32` once.
pub fn vsum(a: &[f32], cfg: LaneConfig) -> Result<f32> {
    vsum_with(a, cfg, Backend::Native)
}

pub fn vsum_with(a: &[f32], cfg: LaneConfig, backend: Backend) -> Result<f32> {
    non_empty(a, "vsum")?;
    Ok(sum_unchecked(a, cfg, backend))
}

pub(crate) fn sum_unchecked(a: &[f32], cfg: LaneConfig, backend: Backend) -> f32 {
    dispatch!(sum_lanes, cfg, backend, (a))
}

/// `dst[i] = src[i] - v`.
pub fn vsub_broadcast(src: &[f32], v: f32, dst: &mut [f32], cfg: LaneConfig) -> Result<()> {
    vsub_broadcast_with(src, v, dst, cfg, Backend::Native)
}

pub fn vsub_broadcast_with(
    src: &[f32],
    v: f32,
    dst: &mut [f32],
    cfg: LaneConfig,
    backend: Backend,
) -> Result<()> {
    non_empty(src, "vsub_broadcast")?;
    same_len(src, dst)?;
    sub_unchecked(src, v, dst, cfg, backend);
    Ok(())
}

pub(crate) fn sub_unchecked(src: &[f32], v: f32, dst: &mut [f32], cfg: LaneConfig, backend: Backend) {
    dispatch!(sub_lanes, cfg, backend, (src, v, dst))
}

/// `buf[i] *= factor`, lane-wise.
pub fn vscale(buf: &mut [f32], factor: f32, cfg: LaneConfig) {
    scale_unchecked(buf, factor, cfg, Backend::Native)
}

pub(crate) fn scale_unchecked(buf: &mut [f32], factor: f32, cfg: LaneConfig, backend: Backend) {
    dispatch!(scale_lanes, cfg, backend, (buf, factor))
}

/// Polynomial exponential, in place.
///
/// Every input must lie in `[-87, 0]`; otherwise nothing is written and a
/// numeric-domain error names the first offending index. Maximum relative
/// error against the exact exponential is below `2e-7` on that interval.
pub fn vexp(buf: &mut [f32], cfg: LaneConfig) -> Result<()> {
    vexp_with(buf, cfg, Backend::Native)
}

pub fn vexp_with(buf: &mut [f32], cfg: LaneConfig, backend: Backend) -> Result<()> {
    let in_domain = |x: &f32| (VEXP_DOMAIN_MIN..=VEXP_DOMAIN_MAX).contains(x);
    // Branch-free scan first; the index is only looked up on failure.
    let all_ok = buf.iter().fold(true, |ok, x| ok & in_domain(x));
    if !all_ok {
        let i = buf.iter().position(|x| !in_domain(x)).expect("some element is out of domain");
        return Err(Error::domain(format!(
            "vexp input {} at index {i} is outside [{VEXP_DOMAIN_MIN}, {VEXP_DOMAIN_MAX}]",
            buf[i]
        )));
    }
    exp_unchecked(buf, cfg, backend);
    Ok(())
}

/// Polynomial exponential without the domain check. Inputs below
/// [`EXP_UNDERFLOW`] produce 0; inputs above 88 saturate.
pub(crate) fn exp_unchecked(buf: &mut [f32], cfg: LaneConfig, backend: Backend) {
    dispatch!(exp_lanes, cfg, backend, (buf))
}
