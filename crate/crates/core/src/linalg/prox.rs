//! Shrinkage operators.

use crate::scalar::{norm2, Scalar};

/// `t_θ(ξ) = sgn(ξ)·max{0, |ξ| − θ}`; the tie `|ξ| = θ` maps to exactly zero.
#[inline]
pub fn soft_threshold_scalar<T: Scalar>(xi: T, theta: T) -> T {
    let mag = xi.abs() - theta;
    if mag > T::zero() {
        mag.copysign(xi)
    } else {
        T::zero()
    }
}

/// Elementwise soft thresholding, the proximal map of `θ‖·‖₁`.
pub fn soft_threshold<T: Scalar>(v: &[T], theta: T) -> Vec<T> {
    v.iter().map(|&x| soft_threshold_scalar(x, theta)).collect()
}

pub fn soft_threshold_in_place<T: Scalar>(v: &mut [T], theta: T) {
    for x in v {
        *x = soft_threshold_scalar(*x, theta);
    }
}

/// Proximal map of `θ‖·‖₂`: `max(0, 1 − θ/‖v‖₂)·v`, zero when `‖v‖₂ ≤ θ`.
pub fn block_soft_threshold<T: Scalar>(v: &[T], theta: T) -> Vec<T> {
    let mut out = v.to_vec();
    block_soft_threshold_in_place(&mut out, theta);
    out
}

pub fn block_soft_threshold_in_place<T: Scalar>(v: &mut [T], theta: T) {
    let norm = norm2(v);
    if norm <= theta {
        v.iter_mut().for_each(|x| *x = T::zero());
    } else {
        let scale = T::one() - theta / norm;
        v.iter_mut().for_each(|x| *x = *x * scale);
    }
}
