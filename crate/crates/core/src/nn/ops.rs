//! Parameter-free shape operations.

use alloc::vec;
use alloc::vec::Vec;

use super::kernels::linear_taps;
use super::layers::{check_grad, expect_4d, Layer, Mode};
use super::param::{ParamId, ParamStore};
use crate::error::{Error, Result};
use crate::numerics::{Real, Tensor};

/// Stacks NHWC tensors along the channel axis.
pub fn concat_channels<T: Real>(xs: &[&Tensor<T>]) -> Result<Tensor<T>> {
    let first = xs.first().ok_or_else(|| Error::invalid("concat of zero tensors"))?;
    let (n, h, w, _) = expect_4d("concat input", first)?;
    let mut widths = Vec::with_capacity(xs.len());
    for x in xs {
        let (xn, xh, xw, xc) = expect_4d("concat input", x)?;
        if (xn, xh, xw) != (n, h, w) {
            return Err(Error::shape("concat input", &[n, h, w, xc], x.shape()));
        }
        widths.push(xc);
    }
    let total: usize = widths.iter().sum();
    let mut out = Vec::with_capacity(n * h * w * total);
    for pix in 0..n * h * w {
        for (x, &c) in xs.iter().zip(&widths) {
            out.extend_from_slice(&x.data()[pix * c..(pix + 1) * c]);
        }
    }
    Tensor::new(&[n, h, w, total], out)
}

/// Inverse of [`concat_channels`]: splits the channel axis into `widths`.
pub fn split_channels<T: Real>(x: &Tensor<T>, widths: &[usize]) -> Result<Vec<Tensor<T>>> {
    let (n, h, w, c) = expect_4d("split input", x)?;
    if widths.iter().sum::<usize>() != c || widths.contains(&0) {
        return Err(Error::invalid("split widths must be positive and sum to the channel count"));
    }
    let mut parts: Vec<Vec<T>> = widths.iter().map(|wd| Vec::with_capacity(n * h * w * wd)).collect();
    for row in x.data().chunks_exact(c) {
        let mut at = 0;
        for (p, &wd) in parts.iter_mut().zip(widths) {
            p.extend_from_slice(&row[at..at + wd]);
            at += wd;
        }
    }
    parts
        .into_iter()
        .zip(widths)
        .map(|(p, &wd)| Tensor::new(&[n, h, w, wd], p))
        .collect()
}

/// Keeps the top-left `h × w` window.
pub fn crop_spatial<T: Real>(x: &Tensor<T>, h: usize, w: usize) -> Result<Tensor<T>> {
    let (n, xh, xw, c) = expect_4d("crop input", x)?;
    if h > xh || w > xw || h == 0 || w == 0 {
        return Err(Error::shape("crop window", &[n, xh, xw, c], &[n, h, w, c]));
    }
    let mut out = Vec::with_capacity(n * h * w * c);
    for b in 0..n {
        for i in 0..h {
            let start = ((b * xh + i) * xw) * c;
            out.extend_from_slice(&x.data()[start..start + w * c]);
        }
    }
    Tensor::new(&[n, h, w, c], out)
}

/// Zero-pads on the bottom and right to `h × w`; the adjoint of [`crop_spatial`].
pub fn pad_spatial<T: Real>(x: &Tensor<T>, h: usize, w: usize) -> Result<Tensor<T>> {
    let (n, xh, xw, c) = expect_4d("pad input", x)?;
    if h < xh || w < xw {
        return Err(Error::shape("pad target", &[n, xh, xw, c], &[n, h, w, c]));
    }
    let mut out = vec![T::zero(); n * h * w * c];
    for b in 0..n {
        for i in 0..xh {
            let src = ((b * xh + i) * xw) * c;
            let dst = ((b * h + i) * w) * c;
            out[dst..dst + xw * c].copy_from_slice(&x.data()[src..src + xw * c]);
        }
    }
    Tensor::new(&[n, h, w, c], out)
}

/// Bilinear resampling with half-pixel centres (align-corners = false).
#[derive(Debug, Clone)]
pub struct BilinearResize {
    pub out_h: usize,
    pub out_w: usize,
    in_shape: Option<[usize; 4]>,
}

impl BilinearResize {
    pub fn new(out_h: usize, out_w: usize) -> Result<Self> {
        if out_h == 0 || out_w == 0 {
            return Err(Error::invalid("resize target must be at least 1×1"));
        }
        Ok(Self {
            out_h,
            out_w,
            in_shape: None,
        })
    }
}

impl<T: Real> Layer<T> for BilinearResize {
    fn forward(&mut self, _ps: &ParamStore<T>, x: &Tensor<T>, _mode: Mode) -> Result<Tensor<T>> {
        let (n, h, w, c) = expect_4d("resize input", x)?;
        self.in_shape = Some([n, h, w, c]);
        if (h, w) == (self.out_h, self.out_w) {
            return Ok(x.clone());
        }
        let ty = linear_taps::<T>(h, self.out_h);
        let tx = linear_taps::<T>(w, self.out_w);
        let mut out = vec![T::zero(); n * self.out_h * self.out_w * c];
        let src = x.data();
        for b in 0..n {
            for (oy, &(y0, y1, wy0, wy1)) in ty.iter().enumerate() {
                for (ox, &(x0, x1, wx0, wx1)) in tx.iter().enumerate() {
                    let o = ((b * self.out_h + oy) * self.out_w + ox) * c;
                    let corners = [
                        (y0, x0, wy0 * wx0),
                        (y0, x1, wy0 * wx1),
                        (y1, x0, wy1 * wx0),
                        (y1, x1, wy1 * wx1),
                    ];
                    for (iy, ix, wt) in corners {
                        let s = ((b * h + iy) * w + ix) * c;
                        for ch in 0..c {
                            out[o + ch] += wt * src[s + ch];
                        }
                    }
                }
            }
        }
        Tensor::new(&[n, self.out_h, self.out_w, c], out)
    }

    fn backward(&mut self, _ps: &mut ParamStore<T>, grad: &Tensor<T>) -> Result<Tensor<T>> {
        let [n, h, w, c] = self
            .in_shape
            .ok_or_else(|| Error::invalid("resize: backward called before forward"))?;
        check_grad("resize gradient", grad, &[n, self.out_h, self.out_w, c])?;
        if (h, w) == (self.out_h, self.out_w) {
            return Ok(grad.clone());
        }
        let ty = linear_taps::<T>(h, self.out_h);
        let tx = linear_taps::<T>(w, self.out_w);
        let mut dx = vec![T::zero(); n * h * w * c];
        let g = grad.data();
        for b in 0..n {
            for (oy, &(y0, y1, wy0, wy1)) in ty.iter().enumerate() {
                for (ox, &(x0, x1, wx0, wx1)) in tx.iter().enumerate() {
                    let o = ((b * self.out_h + oy) * self.out_w + ox) * c;
                    let corners = [
                        (y0, x0, wy0 * wx0),
                        (y0, x1, wy0 * wx1),
                        (y1, x0, wy1 * wx0),
                        (y1, x1, wy1 * wx1),
                    ];
                    for (iy, ix, wt) in corners {
                        let s = ((b * h + iy) * w + ix) * c;
                        for ch in 0..c {
                            dx[s + ch] += wt * g[o + ch];
                        }
                    }
                }
            }
        }
        Tensor::new(&[n, h, w, c], dx)
    }

    fn params(&self, _out: &mut Vec<ParamId>) {}
}

/// Spatial mean per channel: `[n, h, w, c] → [n, 1, 1, c]`.
#[derive(Debug, Clone, Default)]
pub struct GlobalAvgPool {
    in_shape: Option<[usize; 4]>,
}

impl GlobalAvgPool {
    pub fn new() -> Self {
        Self { in_shape: None }
    }
}

impl<T: Real> Layer<T> for GlobalAvgPool {
    fn forward(&mut self, _ps: &ParamStore<T>, x: &Tensor<T>, _mode: Mode) -> Result<Tensor<T>> {
        let (n, h, w, c) = expect_4d("pool input", x)?;
        self.in_shape = Some([n, h, w, c]);
        let inv = T::one() / T::cst((h * w) as f64);
        let mut out = vec![T::zero(); n * c];
        for b in 0..n {
            let acc = &mut out[b * c..(b + 1) * c];
            for row in x.data()[b * h * w * c..(b + 1) * h * w * c].chunks_exact(c) {
                for (a, v) in acc.iter_mut().zip(row) {
                    *a += *v;
                }
            }
            acc.iter_mut().for_each(|a| *a *= inv);
        }
        Tensor::new(&[n, 1, 1, c], out)
    }

    fn backward(&mut self, _ps: &mut ParamStore<T>, grad: &Tensor<T>) -> Result<Tensor<T>> {
        let [n, h, w, c] = self
            .in_shape
            .ok_or_else(|| Error::invalid("pool: backward called before forward"))?;
        check_grad("pool gradient", grad, &[n, 1, 1, c])?;
        let inv = T::one() / T::cst((h * w) as f64);
        let mut dx = Vec::with_capacity(n * h * w * c);
        for b in 0..n {
            let g = &grad.data()[b * c..(b + 1) * c];
            for _ in 0..h * w {
                dx.extend(g.iter().map(|v| *v * inv));
            }
        }
        Tensor::new(&[n, h, w, c], dx)
    }

    fn params(&self, _out: &mut Vec<ParamId>) {}
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{grad_check, GradCheckOptions};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(shape: &[usize], seed: u64) -> Tensor<f64> {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        Tensor::from_fn(shape, |_| r.random_range(-1.0..1.0))
    }

    #[test]
    fn concat_then_split_round_trips() {
        let a = random(&[2, 3, 2, 1], 1);
        let b = random(&[2, 3, 2, 4], 2);
        let c = concat_channels(&[&a, &b]).unwrap();
        assert_eq!(c.shape(), &[2, 3, 2, 5]);
        assert_eq!(c.get(&[1, 2, 1, 0]), a.get(&[1, 2, 1, 0]));
        assert_eq!(c.get(&[1, 2, 1, 3]), b.get(&[1, 2, 1, 2]));
        let parts = split_channels(&c, &[1, 4]).unwrap();
        assert_eq!(parts[0], a);
        assert_eq!(parts[1], b);
    }

    #[test]
    fn concat_rejects_spatial_mismatch() {
        let a = random(&[1, 3, 2, 1], 1);
        let b = random(&[1, 3, 3, 1], 2);
        assert!(matches!(concat_channels(&[&a, &b]), Err(Error::ShapeMismatch { .. })));
        assert!(split_channels(&a, &[2]).is_err());
    }

    #[test]
    fn pad_is_adjoint_of_crop() {
        let x = random(&[2, 5, 4, 3], 3);
        let y = random(&[2, 3, 2, 3], 4);
        let cx = crop_spatial(&x, 3, 2).unwrap();
        let py = pad_spatial(&y, 5, 4).unwrap();
        let lhs: f64 = cx.data().iter().zip(y.data()).map(|(a, b)| a * b).sum();
        let rhs: f64 = x.data().iter().zip(py.data()).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-12);
        assert!(crop_spatial(&x, 6, 1).is_err());
    }

    #[test]
    fn resize_identity_and_constant() {
        let ps = ParamStore::<f64>::new();
        let x = random(&[1, 4, 3, 2], 5);
        let mut same = BilinearResize::new(4, 3).unwrap();
        assert_eq!(same.forward(&ps, &x, Mode::Infer).unwrap(), x);
        let mut up = BilinearResize::new(11, 7).unwrap();
        let y = up.forward(&ps, &Tensor::full(&[2, 4, 3, 2], 2.5), Mode::Infer).unwrap();
        assert!(y.data().iter().all(|v| (v - 2.5).abs() < 1e-12));
        assert!(BilinearResize::new(0, 3).is_err());
    }

    #[test]
    fn resize_uses_half_pixel_centres() {
        let ps = ParamStore::<f64>::new();
        let x = Tensor::new(&[1, 1, 2, 1], vec![0.0, 4.0]).unwrap();
        let y = BilinearResize::new(1, 4).unwrap().forward(&ps, &x, Mode::Infer).unwrap();
        assert_eq!(y.data(), &[0.0, 1.0, 3.0, 4.0]);
        let down = BilinearResize::new(1, 1).unwrap().forward(&ps, &x, Mode::Infer).unwrap();
        assert_eq!(down.data(), &[2.0]);
    }

    #[test]
    fn resize_and_pool_pass_gradient_check() {
        let mut ps = ParamStore::<f64>::new();
        for (h, w) in [(7, 5), (2, 3), (4, 4)] {
            let mut rs = BilinearResize::new(h, w).unwrap();
            let rep = grad_check(&mut rs, &mut ps, &random(&[2, 4, 3, 2], 6), GradCheckOptions::default()).unwrap();
            assert!(rep.passes(1e-6), "{rep:?}");
        }
        let mut pool = GlobalAvgPool::new();
        let x = random(&[2, 3, 4, 2], 7);
        let y = pool.forward(&ps, &x, Mode::Infer).unwrap();
        assert_eq!(y.shape(), &[2, 1, 1, 2]);
        let want: f64 = x.data()[..24].iter().step_by(2).sum::<f64>() / 12.0;
        assert!((y.data()[0] - want).abs() < 1e-12);
        let rep = grad_check(&mut pool, &mut ps, &x, GradCheckOptions::default()).unwrap();
        assert!(rep.passes(1e-6), "{rep:?}");
    }
}
