use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex;

use super::{Real, Tensor};
use crate::error::{Error, Result};

/// Precomputed twiddles and bit-reversal table for one power-of-two length.
#[derive(Debug, Clone)]
pub struct FftPlan<T> {
    n: usize,
    twiddles: Vec<Complex<T>>,
    bitrev: Vec<usize>,
}

impl<T: Real> FftPlan<T> {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(n));
        }
        let bits = n.trailing_zeros();
        let bitrev = (0..n)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) })
            .collect();
        // twiddles in f64 regardless of T, then narrowed
        let twiddles = (0..n / 2)
            .map(|k| {
                let angle = -2.0 * core::f64::consts::PI * k as f64 / n as f64;
                Complex::new(T::cst(libm_cos(angle)), T::cst(libm_sin(angle)))
            })
            .collect();
        Ok(Self { n, twiddles, bitrev })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// In-place transform. Forward is the unnormalized DFT; inverse carries
    /// the `1/N` factor.
    pub fn process(&self, buf: &mut [Complex<T>], inverse: bool) {
        let n = self.n;
        assert_eq!(buf.len(), n, "buffer length does not match plan");
        for i in 0..n {
            let j = self.bitrev[i];
            if j > i {
                buf.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let step = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..half {
                    let mut w = self.twiddles[k * step];
                    if inverse {
                        w = w.conj();
                    }
                    let a = buf[start + k];
                    let b = buf[start + k + half] * w;
                    buf[start + k] = a + b;
                    buf[start + k + half] = a - b;
                }
            }
            len <<= 1;
        }
        if inverse {
            let scale = T::one() / T::cst(n as f64);
            for v in buf.iter_mut() {
                *v = v.scale(scale);
            }
        }
    }
}

#[inline]
fn libm_cos(x: f64) -> f64 {
    num_traits::Float::cos(x)
}

#[inline]
fn libm_sin(x: f64) -> f64 {
    num_traits::Float::sin(x)
}

pub fn fft_1d<T: Real>(x: &[Complex<T>], inverse: bool) -> Result<Vec<Complex<T>>> {
    let plan = FftPlan::new(x.len())?;
    let mut out = x.to_vec();
    plan.process(&mut out, inverse);
    Ok(out)
}

/// Splits `shape` around `axis` into (outer, len, inner) extents.
fn lanes(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    let outer = shape[..axis].iter().product();
    let inner = shape[axis + 1..].iter().product();
    (outer, shape[axis], inner)
}

/// Independent 1-d transforms over every lane along `axis`.
pub fn fft_axis<T: Real>(
    t: &Tensor<Complex<T>>,
    axis: usize,
    inverse: bool,
) -> Result<Tensor<Complex<T>>> {
    t.check_axis(axis)?;
    let (outer, n, inner) = lanes(t.shape(), axis);
    let plan = FftPlan::new(n)?;
    let mut out = t.clone();
    let data = out.data_mut();
    let mut lane = vec![Complex::new(T::zero(), T::zero()); n];
    for o in 0..outer {
        let base = o * n * inner;
        for i in 0..inner {
            for (k, v) in lane.iter_mut().enumerate() {
                *v = data[base + k * inner + i];
            }
            plan.process(&mut lane, inverse);
            for (k, v) in lane.iter().enumerate() {
                data[base + k * inner + i] = *v;
            }
        }
    }
    Ok(out)
}

/// Circular rotation by `floor(N/2)` along `axis`, moving the zero bin to
/// the centre.
pub fn fftshift_axis<T: Copy>(t: &Tensor<T>, axis: usize) -> Result<Tensor<T>> {
    t.check_axis(axis)?;
    let (outer, n, inner) = lanes(t.shape(), axis);
    let shift = n / 2;
    let src = t.data();
    let mut out = t.clone();
    let dst = out.data_mut();
    for o in 0..outer {
        let base = o * n * inner;
        for k in 0..n {
            let to = (k + shift) % n;
            dst[base + to * inner..base + (to + 1) * inner]
                .copy_from_slice(&src[base + k * inner..base + (k + 1) * inner]);
        }
    }
    Ok(out)
}
