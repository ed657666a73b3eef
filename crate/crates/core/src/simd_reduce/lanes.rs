//! W-lane emulation kernels.
//!
//! These are the definitional semantics of every `simd_reduce` operation. The
//! register is modelled as a `[T; W]` array and every step is written as a
//! lane-wise loop, which the compiler lowers to packed instructions when the
//! target supports them. Any backend must reproduce these results.

use super::exp::exp_poly;

/// `a > b ? a : b`, the `maxps` lane rule.
#[inline(always)]
fn lane_max(a: f32, b: f32) -> f32 {
    if a > b {
        a
    } else {
        b
    }
}

/// Max search with the main/half-width/scalar tail structure.
///
/// 1. broadcast `a[0]` into every lane;
/// 2. consume `W` elements per step with lane-wise max;
/// 3. if at least `W/2` elements remain, load them once and max them into
///    both halves of the register;
/// 4. consume the rest one at a time, broadcast to all lanes;
/// 5. fold the register: halve it while wider than 4 lanes, then reverse the
///    4-lane group, then combine the last pair.
#[inline(always)]
pub(crate) fn max_lanes<const W: usize>(a: &[f32]) -> f32 {
    debug_assert!(!a.is_empty());
    let half = W / 2;
    let mut acc = [a[0]; W];

    let mut chunks = a.chunks_exact(W);
    for chunk in &mut chunks {
        for l in 0..W {
            acc[l] = lane_max(chunk[l], acc[l]);
        }
    }

    let mut tail = chunks.remainder();
    if tail.len() >= half {
        let (head, rest) = tail.split_at(half);
        for l in 0..W {
            acc[l] = lane_max(head[l % half], acc[l]);
        }
        tail = rest;
    }

    for &x in tail {
        for lane in acc.iter_mut() {
            *lane = lane_max(x, *lane);
        }
    }

    let mut width = W;
    while width > 4 {
        width /= 2;
        for l in 0..width {
            acc[l] = lane_max(acc[l + width], acc[l]);
        }
    }
    let lo = lane_max(acc[3], acc[0]);
    let hi = lane_max(acc[2], acc[1]);
    let m = lane_max(hi, lo);

    // +0.0 and -0.0 compare equal, so which one survives depends on visiting
    // order. The sequential scan keeps the first zero it meets.
    if m == 0.0 {
        if let Some(&z) = a.iter().find(|&&x| x == 0.0) {
            return z;
        }
    }
    m
}

/// Sum with `W` partial accumulators, tail into accumulator 0, then a
/// sequential chain over the partials starting from zero.
#[inline(always)]
pub(crate) fn sum_lanes<const W: usize>(a: &[f32]) -> f32 {
    let mut acc = [0.0f64; W];
    let mut chunks = a.chunks_exact(W);
    for chunk in &mut chunks {
        for l in 0..W {
            acc[l] += f64::from(chunk[l]);
        }
    }
    for &x in chunks.remainder() {
        acc[0] += f64::from(x);
    }
    let mut total = 0.0f64;
    for partial in acc {
        total += partial;
    }
    total as f32
}

#[inline(always)]
pub(crate) fn sub_lanes<const W: usize>(src: &[f32], v: f32, dst: &mut [f32]) {
    let mut s = src.chunks_exact(W);
    let mut d = dst.chunks_exact_mut(W);
    for (si, di) in (&mut s).zip(&mut d) {
        for l in 0..W {
            di[l] = si[l] - v;
        }
    }
    for (x, y) in s.remainder().iter().zip(d.into_remainder()) {
        *y = *x - v;
    }
}

#[inline(always)]
pub(crate) fn scale_lanes<const W: usize>(buf: &mut [f32], factor: f32) {
    let mut chunks = buf.chunks_exact_mut(W);
    for chunk in &mut chunks {
        for x in chunk.iter_mut() {
            *x *= factor;
        }
    }
    for x in chunks.into_remainder() {
        *x *= factor;
    }
}

/// Element-wise, so the lane width only has to match the other kernels' signature;
/// a flat loop lets the compiler pick the vector shape.
#[inline(always)]
pub(crate) fn exp_lanes<const W: usize>(buf: &mut [f32]) {
    for x in buf.iter_mut() {
        *x = exp_poly(*x);
    }
}
