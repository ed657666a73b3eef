//! Polynomial exponential.
//!
//! `x = k*ln2 + r` with `k = round(x / ln2)` and `|r| <= ln2/2`. `ln2` is split
//! into a short high part, so `k * LN2_HI` is exact for every `k` reachable from
//! the clamped input, and a low correction. On the reduced interval
//!
//! ```text
//! e^r ~= 1 + r + r^2 * (P0 + P1 r + P2 r^2 + P3 r^3 + P4 r^4 + P5 r^5)
//! ```
//!
//! (Cephes `expf` coefficients), and `2^k` is assembled directly in the
//! exponent field. Results smaller than the smallest normal `f32` are
//! flushed to zero, matching [`crate::kernels::exp_batch`].

// Constants keep the digits of the Cephes source.
#![allow(clippy::excessive_precision)]

pub const LOG2_E: f32 = std::f32::consts::LOG2_E;
pub const LN2_HI: f32 = 0.693_359_375;
pub const LN2_LO: f32 = -2.121_944_4e-4;

pub const P0: f32 = 5.000_000_1e-1;
pub const P1: f32 = 1.666_666_5e-1;
pub const P2: f32 = 4.166_579_6e-2;
pub const P3: f32 = 8.333_452e-3;
pub const P4: f32 = 1.398_2e-3;
pub const P5: f32 = 1.987_569_1e-4;

/// Lowest input accepted by the public `vexp`.
pub const DOMAIN_MIN: f32 = -87.0;
/// Highest input accepted by the public `vexp`.
pub const DOMAIN_MAX: f32 = 0.0;

/// `ln(f32::MIN_POSITIVE)`, rounded up: below this the exact result is subnormal.
pub const UNDERFLOW: f32 = -87.336_54;

const CLAMP_LO: f32 = -88.0;
const CLAMP_HI: f32 = 88.0;

// Adding and subtracting 1.5 * 2^23 rounds to the nearest integer for |t| < 2^22.
const ROUND_MAGIC: f32 = 12_582_912.0;

#[inline(always)]
pub(crate) fn exp_poly(x: f32) -> f32 {
    // min/max rather than clamp: both lower to single vector instructions.
    #[allow(clippy::manual_clamp)]
    let xc = x.max(CLAMP_LO).min(CLAMP_HI);
    let k = (xc * LOG2_E + ROUND_MAGIC) - ROUND_MAGIC;
    let r = (xc - k * LN2_HI) - k * LN2_LO;
    let z = r * r;

    let mut p = P5;
    p = p * r + P4;
    p = p * r + P3;
    p = p * r + P2;
    p = p * r + P1;
    p = p * r + P0;
    let y = p * z + r + 1.0;

    // k is integral in [-127, 127], so the biased exponent comes straight out
    // of the low mantissa bits of k + ROUND_MAGIC + 127.
    let biased = (k + (ROUND_MAGIC + 127.0)).to_bits() & 0xff;
    let out = y * f32::from_bits(biased << 23);
    let keep = (x >= UNDERFLOW) & (out >= f32::MIN_POSITIVE);
    f32::from_bits(out.to_bits() & (keep as u32).wrapping_neg())
}
