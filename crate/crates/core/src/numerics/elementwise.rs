use alloc::vec::Vec;

use num_complex::Complex;

use super::{Real, Tensor};
use crate::error::{Error, Result};

/// Floor added before taking logs of power maps.
pub const DEFAULT_LOG_EPSILON: f64 = 1e-6;

/// Symmetric Hann window, zero at both ends.
pub fn hann_window<T: Real>(n: usize) -> Result<Vec<T>> {
    if n < 2 {
        return Err(Error::invalid("hann window needs at least 2 taps"));
    }
    let denom = (n - 1) as f64;
    Ok((0..n)
        .map(|k| {
            let phase = 2.0 * core::f64::consts::PI * k as f64 / denom;
            T::cst(0.5 - 0.5 * num_traits::Float::cos(phase))
        })
        .collect())
}

pub fn magnitude<T: Real>(t: &Tensor<Complex<T>>) -> Tensor<T> {
    t.map(|z| z.re.hypot(z.im))
}

/// Elementwise `ln(x + epsilon)`.
#[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must be rejected as well
pub fn log_compress<T: Real>(t: &Tensor<T>, epsilon: T) -> Result<Tensor<T>> {
    if !(epsilon > T::zero()) {
        return Err(Error::invalid("log epsilon must be positive"));
    }
    if let Some((index, &v)) = t.data().iter().enumerate().find(|(_, v)| **v < T::zero()) {
        return Err(Error::NegativeInput {
            index,
            value: v.to_f64(),
        });
    }
    Ok(t.map(|&x| (x + epsilon).ln()))
}
