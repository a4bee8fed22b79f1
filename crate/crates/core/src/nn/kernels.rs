//! Raw per-sample NHWC kernels shared by the layers.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::numerics::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Padding {
    /// Output size `ceil(in / stride)`, zero padding split top/left-first.
    Same,
    Valid,
}

/// Output extent and leading pad along one spatial axis.
pub fn conv_output_size(
    input: usize,
    kernel: usize,
    stride: usize,
    dilation: usize,
    padding: Padding,
) -> Result<(usize, usize)> {
    if stride == 0 || dilation == 0 || kernel == 0 {
        return Err(Error::invalid("kernel, stride and dilation must be at least 1"));
    }
    let span = (kernel - 1) * dilation + 1;
    match padding {
        Padding::Same => {
            let out = input.div_ceil(stride);
            let total = ((out - 1) * stride + span).saturating_sub(input);
            Ok((out, total / 2))
        }
        Padding::Valid => {
            if input < span {
                return Err(Error::invalid("input smaller than the dilated kernel"));
            }
            Ok(((input - span) / stride + 1, 0))
        }
    }
}

/// Geometry of one 2-d convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct ConvGeom {
    pub in_h: usize,
    pub in_w: usize,
    pub out_h: usize,
    pub out_w: usize,
    pub kh: usize,
    pub kw: usize,
    pub stride: usize,
    pub dilation: usize,
    pub pad_top: usize,
    pub pad_left: usize,
}

impl ConvGeom {
    pub fn new(
        in_h: usize,
        in_w: usize,
        kernel: usize,
        stride: usize,
        dilation: usize,
        padding: Padding,
    ) -> Result<Self> {
        let (out_h, pad_top) = conv_output_size(in_h, kernel, stride, dilation, padding)?;
        let (out_w, pad_left) = conv_output_size(in_w, kernel, stride, dilation, padding)?;
        Ok(Self {
            in_h,
            in_w,
            out_h,
            out_w,
            kh: kernel,
            kw: kernel,
            stride,
            dilation,
            pad_top,
            pad_left,
        })
    }

    /// True when the patch matrix is the input itself.
    pub fn is_pointwise(&self) -> bool {
        self.kh == 1 && self.kw == 1 && self.stride == 1 && self.pad_top == 0 && self.pad_left == 0
    }

    #[inline]
    pub fn source(&self, o: usize, k: usize, pad: usize, limit: usize) -> Option<usize> {
        let i = (o * self.stride + k * self.dilation) as isize - pad as isize;
        if i >= 0 && (i as usize) < limit {
            Some(i as usize)
        } else {
            None
        }
    }

    pub fn positions(&self) -> usize {
        self.out_h * self.out_w
    }
}

/// Patch matrix `[out_h·out_w, kh·kw·c]` of one sample.
pub(crate) fn im2col<T: Real>(x: &[T], c: usize, g: &ConvGeom, cols: &mut Vec<T>) {
    let width = g.kh * g.kw * c;
    cols.clear();
    cols.resize(g.positions() * width, T::zero());
    for oy in 0..g.out_h {
        for ox in 0..g.out_w {
            let row = &mut cols[(oy * g.out_w + ox) * width..(oy * g.out_w + ox + 1) * width];
            for ky in 0..g.kh {
                let Some(iy) = g.source(oy, ky, g.pad_top, g.in_h) else { continue };
                for kx in 0..g.kw {
                    let Some(ix) = g.source(ox, kx, g.pad_left, g.in_w) else { continue };
                    let src = (iy * g.in_w + ix) * c;
                    let dst = (ky * g.kw + kx) * c;
                    row[dst..dst + c].copy_from_slice(&x[src..src + c]);
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: scatter-adds patch gradients into `dx`.
pub(crate) fn col2im<T: Real>(cols: &[T], c: usize, g: &ConvGeom, dx: &mut [T]) {
    let width = g.kh * g.kw * c;
    for oy in 0..g.out_h {
        for ox in 0..g.out_w {
            let row = &cols[(oy * g.out_w + ox) * width..(oy * g.out_w + ox + 1) * width];
            for ky in 0..g.kh {
                let Some(iy) = g.source(oy, ky, g.pad_top, g.in_h) else { continue };
                for kx in 0..g.kw {
                    let Some(ix) = g.source(ox, kx, g.pad_left, g.in_w) else { continue };
                    let dst = (iy * g.in_w + ix) * c;
                    let src = (ky * g.kw + kx) * c;
                    for (d, s) in dx[dst..dst + c].iter_mut().zip(&row[src..src + c]) {
                        *d += *s;
                    }
                }
            }
        }
    }
}

/// Per-channel convolution of one sample; `w` is `[kh, kw, c]`.
pub(crate) fn depthwise_forward<T: Real>(x: &[T], w: &[T], c: usize, g: &ConvGeom, y: &mut [T]) {
    y.fill(T::zero());
    for oy in 0..g.out_h {
        for ox in 0..g.out_w {
            let out = &mut y[(oy * g.out_w + ox) * c..(oy * g.out_w + ox + 1) * c];
            for ky in 0..g.kh {
                let Some(iy) = g.source(oy, ky, g.pad_top, g.in_h) else { continue };
                for kx in 0..g.kw {
                    let Some(ix) = g.source(ox, kx, g.pad_left, g.in_w) else { continue };
                    let xs = &x[(iy * g.in_w + ix) * c..(iy * g.in_w + ix + 1) * c];
                    let ws = &w[(ky * g.kw + kx) * c..(ky * g.kw + kx + 1) * c];
                    for ((o, a), b) in out.iter_mut().zip(xs).zip(ws) {
                        *o += *a * *b;
                    }
                }
            }
        }
    }
}

/// Accumulates `dx` and `dw` for one sample of a depthwise convolution.
pub(crate) fn depthwise_backward<T: Real>(
    x: &[T],
    w: &[T],
    dy: &[T],
    c: usize,
    g: &ConvGeom,
    dx: &mut [T],
    dw: &mut [T],
) {
    for oy in 0..g.out_h {
        for ox in 0..g.out_w {
            let go = &dy[(oy * g.out_w + ox) * c..(oy * g.out_w + ox + 1) * c];
            for ky in 0..g.kh {
                let Some(iy) = g.source(oy, ky, g.pad_top, g.in_h) else { continue };
                for kx in 0..g.kw {
                    let Some(ix) = g.source(ox, kx, g.pad_left, g.in_w) else { continue };
                    let base = (iy * g.in_w + ix) * c;
                    let kbase = (ky * g.kw + kx) * c;
                    for ch in 0..c {
                        dx[base + ch] += go[ch] * w[kbase + ch];
                        dw[kbase + ch] += go[ch] * x[base + ch];
                    }
                }
            }
        }
    }
}

/// Two-tap linear interpolation weights for one axis under the
/// half-pixel (align-corners = false) convention.
pub(crate) fn linear_taps<T: Real>(input: usize, output: usize) -> Vec<(usize, usize, T, T)> {
    let scale = input as f64 / output as f64;
    (0..output)
        .map(|o| {
            let src = ((o as f64 + 0.5) * scale - 0.5).max(0.0);
            let i0 = (num_traits::Float::floor(src) as usize).min(input - 1);
            let i1 = (i0 + 1).min(input - 1);
            let frac = if i1 == i0 { 0.0 } else { src - i0 as f64 };
            (i0, i1, T::cst(1.0 - frac), T::cst(frac))
        })
        .collect()
}
