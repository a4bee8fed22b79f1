use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::kernels::{col2im, depthwise_backward, depthwise_forward, im2col, ConvGeom, Padding};
use super::param::{ParamId, ParamStore};
use crate::error::{Error, Result};
use crate::numerics::{Real, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    Train,
    #[default]
    Infer,
}

/// A differentiable NHWC stage. `forward` caches whatever `backward` needs;
/// `backward` accumulates parameter gradients into the store and returns
/// the gradient with respect to the input of the last `forward`.
pub trait Layer<T: Real> {
    fn forward(&mut self, ps: &ParamStore<T>, x: &Tensor<T>, mode: Mode) -> Result<Tensor<T>>;

    fn backward(&mut self, ps: &mut ParamStore<T>, grad: &Tensor<T>) -> Result<Tensor<T>>;

    fn params(&self, out: &mut Vec<ParamId>);
}

pub(crate) fn expect_4d<T: Real>(
    ctx: &'static str,
    x: &Tensor<T>,
) -> Result<(usize, usize, usize, usize)> {
    if x.ndim() != 4 {
        return Err(Error::shape(ctx, &[0, 0, 0, 0], x.shape()));
    }
    Ok(x.nhwc())
}

pub(crate) fn cached<'a, T>(ctx: &'static str, c: &'a Option<Tensor<T>>) -> Result<&'a Tensor<T>> {
    c.as_ref()
        .ok_or_else(|| Error::invalid(format!("{ctx}: backward called before forward")))
}

pub(crate) fn check_grad<T: Real>(ctx: &'static str, grad: &Tensor<T>, shape: &[usize]) -> Result<()> {
    if grad.shape() != shape {
        return Err(Error::shape(ctx, shape, grad.shape()));
    }
    Ok(())
}

fn check_channels(ctx: &'static str, x: (usize, usize, usize, usize), c: usize) -> Result<()> {
    if x.3 != c {
        return Err(Error::shape(ctx, &[x.0, x.1, x.2, c], &[x.0, x.1, x.2, x.3]));
    }
    Ok(())
}

/// Dense 2-d cross-correlation; weights are `[k, k, in, out]`.
#[derive(Debug, Clone)]
pub struct Conv2d<T> {
    pub weight: ParamId,
    pub bias: Option<ParamId>,
    pub in_ch: usize,
    pub out_ch: usize,
    pub kernel: usize,
    pub stride: usize,
    pub dilation: usize,
    pub padding: Padding,
    input: Option<Tensor<T>>,
}

impl<T: Real> Conv2d<T> {
    /// Kaiming-initialised kernel and, when requested, a zero bias.
    #[allow(clippy::too_many_arguments)]
    pub fn new<R: Rng + ?Sized>(
        ps: &mut ParamStore<T>,
        name: &str,
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        stride: usize,
        dilation: usize,
        bias: bool,
        rng: &mut R,
    ) -> Self {
        let weight = ps.add_kaiming(
            format!("{name}.weight"),
            &[kernel, kernel, in_ch, out_ch],
            kernel * kernel * in_ch,
            rng,
        );
        let bias = bias.then(|| ps.add(format!("{name}.bias"), Tensor::zeros(&[out_ch]), true));
        Self {
            weight,
            bias,
            in_ch,
            out_ch,
            kernel,
            stride,
            dilation,
            padding: Padding::Same,
            input: None,
        }
    }

    pub fn with_padding(mut self, padding: Padding) -> Self {
        self.padding = padding;
        self
    }

    fn geom(&self, h: usize, w: usize) -> Result<ConvGeom> {
        ConvGeom::new(h, w, self.kernel, self.stride, self.dilation, self.padding)
    }
}

impl<T: Real> Layer<T> for Conv2d<T> {
    fn forward(&mut self, ps: &ParamStore<T>, x: &Tensor<T>, _mode: Mode) -> Result<Tensor<T>> {
        let dims = expect_4d("conv2d input", x)?;
        check_channels("conv2d input", dims, self.in_ch)?;
        let (n, h, w, c) = dims;
        let g = self.geom(h, w)?;
        let kdim = self.kernel * self.kernel * c;
        let p = g.positions();
        let wt = ps.value(self.weight);
        let mut y = vec![T::zero(); n * p * self.out_ch];
        let mut cols = Vec::new();
        for b in 0..n {
            let xs = &x.data()[b * h * w * c..(b + 1) * h * w * c];
            let ys = &mut y[b * p * self.out_ch..(b + 1) * p * self.out_ch];
            let patches = if g.is_pointwise() {
                xs
            } else {
                im2col(xs, c, &g, &mut cols);
                &cols
            };
            T::matmul(p, kdim, self.out_ch, patches, false, wt, false, ys, false);
        }
        if let Some(bid) = self.bias {
            let bias = ps.value(bid);
            for row in y.chunks_exact_mut(self.out_ch) {
                for (v, b) in row.iter_mut().zip(bias) {
                    *v += *b;
                }
            }
        }
        self.input = Some(x.clone());
        Tensor::new(&[n, g.out_h, g.out_w, self.out_ch], y)
    }

    fn backward(&mut self, ps: &mut ParamStore<T>, grad: &Tensor<T>) -> Result<Tensor<T>> {
        let x = cached("conv2d", &self.input)?;
        let (n, h, w, c) = x.nhwc();
        let g = self.geom(h, w)?;
        check_grad("conv2d gradient", grad, &[n, g.out_h, g.out_w, self.out_ch])?;
        let kdim = self.kernel * self.kernel * c;
        let p = g.positions();
        if let Some(bid) = self.bias {
            let db = ps.grad_mut(bid);
            for row in grad.data().chunks_exact(self.out_ch) {
                for (d, v) in db.iter_mut().zip(row) {
                    *d += *v;
                }
            }
        }
        let mut dx = vec![T::zero(); x.len()];
        let mut cols = Vec::new();
        let mut dcols = vec![T::zero(); p * kdim];
        let (wt, dw) = ps.value_and_grad_mut(self.weight);
        for b in 0..n {
            let xs = &x.data()[b * h * w * c..(b + 1) * h * w * c];
            let gs = &grad.data()[b * p * self.out_ch..(b + 1) * p * self.out_ch];
            let dxs = &mut dx[b * h * w * c..(b + 1) * h * w * c];
            if g.is_pointwise() {
                T::matmul(kdim, p, self.out_ch, xs, true, gs, false, dw, true);
                T::matmul(p, self.out_ch, kdim, gs, false, wt, true, dxs, false);
            } else {
                im2col(xs, c, &g, &mut cols);
                T::matmul(kdim, p, self.out_ch, &cols, true, gs, false, dw, true);
                T::matmul(p, self.out_ch, kdim, gs, false, wt, true, &mut dcols, false);
                col2im(&dcols, c, &g, dxs);
            }
        }
        Tensor::new(x.shape(), dx)
    }

    fn params(&self, out: &mut Vec<ParamId>) {
        out.push(self.weight);
        out.extend(self.bias);
    }
}

/// Per-channel spatial convolution, "same" padding; weights are `[k, k, c]`.
#[derive(Debug, Clone)]
pub struct DepthwiseConv2d<T> {
    pub weight: ParamId,
    pub channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub dilation: usize,
    input: Option<Tensor<T>>,
}

impl<T: Real> DepthwiseConv2d<T> {
    pub fn new<R: Rng + ?Sized>(
        ps: &mut ParamStore<T>,
        name: &str,
        channels: usize,
        kernel: usize,
        stride: usize,
        dilation: usize,
        rng: &mut R,
    ) -> Self {
        let weight = ps.add_kaiming(
            format!("{name}.weight"),
            &[kernel, kernel, channels],
            kernel * kernel,
            rng,
        );
        Self {
            weight,
            channels,
            kernel,
            stride,
            dilation,
            input: None,
        }
    }

    fn geom(&self, h: usize, w: usize) -> Result<ConvGeom> {
        ConvGeom::new(h, w, self.kernel, self.stride, self.dilation, Padding::Same)
    }
}

impl<T: Real> Layer<T> for DepthwiseConv2d<T> {
    fn forward(&mut self, ps: &ParamStore<T>, x: &Tensor<T>, _mode: Mode) -> Result<Tensor<T>> {
        let dims = expect_4d("depthwise input", x)?;
        check_channels("depthwise input", dims, self.channels)?;
        let (n, h, w, c) = dims;
        let g = self.geom(h, w)?;
        let p = g.positions();
        let mut y = vec![T::zero(); n * p * c];
        for b in 0..n {
            depthwise_forward(
                &x.data()[b * h * w * c..(b + 1) * h * w * c],
                ps.value(self.weight),
                c,
                &g,
                &mut y[b * p * c..(b + 1) * p * c],
            );
        }
        self.input = Some(x.clone());
        Tensor::new(&[n, g.out_h, g.out_w, c], y)
    }

    fn backward(&mut self, ps: &mut ParamStore<T>, grad: &Tensor<T>) -> Result<Tensor<T>> {
        let x = cached("depthwise", &self.input)?;
        let (n, h, w, c) = x.nhwc();
        let g = self.geom(h, w)?;
        check_grad("depthwise gradient", grad, &[n, g.out_h, g.out_w, c])?;
        let p = g.positions();
        let mut dx = vec![T::zero(); x.len()];
        let (wt, dw) = ps.value_and_grad_mut(self.weight);
        for b in 0..n {
            depthwise_backward(
                &x.data()[b * h * w * c..(b + 1) * h * w * c],
                wt,
                &grad.data()[b * p * c..(b + 1) * p * c],
                c,
                &g,
                &mut dx[b * h * w * c..(b + 1) * h * w * c],
                dw,
            );
        }
        Tensor::new(x.shape(), dx)
    }

    fn params(&self, out: &mut Vec<ParamId>) {
        out.push(self.weight);
    }
}

/// Upsampling by `stride`, defined as the adjoint of a "same"-padded
/// strided convolution with the same kernel. Weights are `[k, k, out, in]`,
/// i.e. the kernel of the convolution being transposed.
#[derive(Debug, Clone)]
pub struct ConvTranspose2d<T> {
    pub weight: ParamId,
    pub in_ch: usize,
    pub out_ch: usize,
    pub kernel: usize,
    pub stride: usize,
    input: Option<Tensor<T>>,
}

impl<T: Real> ConvTranspose2d<T> {
    pub fn new<R: Rng + ?Sized>(
        ps: &mut ParamStore<T>,
        name: &str,
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        stride: usize,
        rng: &mut R,
    ) -> Self {
        let fan_in = (in_ch * kernel * kernel / (stride * stride)).max(1);
        let weight = ps.add_kaiming(
            format!("{name}.weight"),
            &[kernel, kernel, out_ch, in_ch],
            fan_in,
            rng,
        );
        Self {
            weight,
            in_ch,
            out_ch,
            kernel,
            stride,
            input: None,
        }
    }

    /// Geometry of the convolution whose adjoint this layer computes.
    fn geom(&self, h: usize, w: usize) -> Result<ConvGeom> {
        let g = ConvGeom::new(h * self.stride, w * self.stride, self.kernel, self.stride, 1, Padding::Same)?;
        if (g.out_h, g.out_w) != (h, w) {
            return Err(Error::invalid("transposed convolution geometry does not invert"));
        }
        Ok(g)
    }
}

impl<T: Real> Layer<T> for ConvTranspose2d<T> {
    fn forward(&mut self, ps: &ParamStore<T>, x: &Tensor<T>, _mode: Mode) -> Result<Tensor<T>> {
        let dims = expect_4d("transposed conv input", x)?;
        check_channels("transposed conv input", dims, self.in_ch)?;
        let (n, h, w, c) = dims;
        let g = self.geom(h, w)?;
        let kdim = self.kernel * self.kernel * self.out_ch;
        let p = h * w;
        let (oh, ow) = (g.in_h, g.in_w);
        let mut y = vec![T::zero(); n * oh * ow * self.out_ch];
        let mut cols = vec![T::zero(); p * kdim];
        let wt = ps.value(self.weight);
        for b in 0..n {
            let xs = &x.data()[b * p * c..(b + 1) * p * c];
            T::matmul(p, c, kdim, xs, false, wt, true, &mut cols, false);
            col2im(&cols, self.out_ch, &g, &mut y[b * oh * ow * self.out_ch..(b + 1) * oh * ow * self.out_ch]);
        }
        self.input = Some(x.clone());
        Tensor::new(&[n, oh, ow, self.out_ch], y)
    }

    fn backward(&mut self, ps: &mut ParamStore<T>, grad: &Tensor<T>) -> Result<Tensor<T>> {
        let x = cached("transposed conv", &self.input)?;
        let (n, h, w, c) = x.nhwc();
        let g = self.geom(h, w)?;
        let (oh, ow) = (g.in_h, g.in_w);
        check_grad("transposed conv gradient", grad, &[n, oh, ow, self.out_ch])?;
        let kdim = self.kernel * self.kernel * self.out_ch;
        let p = h * w;
        let mut dx = vec![T::zero(); x.len()];
        let mut cols = Vec::new();
        let (wt, dw) = ps.value_and_grad_mut(self.weight);
        for b in 0..n {
            let gs = &grad.data()[b * oh * ow * self.out_ch..(b + 1) * oh * ow * self.out_ch];
            im2col(gs, self.out_ch, &g, &mut cols);
            let xs = &x.data()[b * p * c..(b + 1) * p * c];
            T::matmul(p, kdim, c, &cols, false, wt, false, &mut dx[b * p * c..(b + 1) * p * c], false);
            T::matmul(kdim, p, c, &cols, true, xs, false, dw, true);
        }
        Tensor::new(x.shape(), dx)
    }

    fn params(&self, out: &mut Vec<ParamId>) {
        out.push(self.weight);
    }
}

pub const BN_EPSILON: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.99;

/// Per-channel batch normalisation over N, H and W.
///
/// Training mode normalises with batch statistics; the running statistics
/// are folded in when `backward` runs, so inference-only callers can share
/// the store immutably.
#[derive(Debug, Clone)]
pub struct BatchNorm<T> {
    pub gamma: ParamId,
    pub beta: ParamId,
    pub running_mean: ParamId,
    pub running_var: ParamId,
    pub channels: usize,
    cache: Option<BnCache<T>>,
}

#[derive(Debug, Clone)]
struct BnCache<T> {
    xhat: Tensor<T>,
    inv_std: Vec<T>,
    batch_mean: Vec<T>,
    batch_var: Vec<T>,
    train: bool,
}

impl<T: Real> BatchNorm<T> {
    pub fn new(ps: &mut ParamStore<T>, name: &str, channels: usize) -> Self {
        Self {
            gamma: ps.add(format!("{name}.gamma"), Tensor::full(&[channels], T::one()), true),
            beta: ps.add(format!("{name}.beta"), Tensor::zeros(&[channels]), true),
            running_mean: ps.add(format!("{name}.running_mean"), Tensor::zeros(&[channels]), false),
            running_var: ps.add(format!("{name}.running_var"), Tensor::full(&[channels], T::one()), false),
            channels,
            cache: None,
        }
    }
}

impl<T: Real> Layer<T> for BatchNorm<T> {
    fn forward(&mut self, ps: &ParamStore<T>, x: &Tensor<T>, mode: Mode) -> Result<Tensor<T>> {
        let dims = expect_4d("batchnorm input", x)?;
        check_channels("batchnorm input", dims, self.channels)?;
        let (n, _, _, c) = dims;
        let eps = T::cst(BN_EPSILON);
        let (mean, var) = match mode {
            Mode::Train => {
                if n < 2 {
                    return Err(Error::BatchTooSmall(n));
                }
                let count = T::cst((x.len() / c) as f64);
                let mut mean = vec![T::zero(); c];
                for row in x.data().chunks_exact(c) {
                    for (m, v) in mean.iter_mut().zip(row) {
                        *m += *v;
                    }
                }
                mean.iter_mut().for_each(|m| *m /= count);
                let mut var = vec![T::zero(); c];
                for row in x.data().chunks_exact(c) {
                    for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                        let d = *v - *m;
                        *s += d * d;
                    }
                }
                var.iter_mut().for_each(|s| *s /= count);
                (mean, var)
            }
            Mode::Infer => (ps.value(self.running_mean).to_vec(), ps.value(self.running_var).to_vec()),
        };
        let inv_std: Vec<T> = var.iter().map(|v| T::one() / (*v + eps).sqrt()).collect();
        let gamma = ps.value(self.gamma);
        let beta = ps.value(self.beta);
        let mut xhat = x.clone();
        let mut y = x.clone();
        for (hr, yr) in xhat.data_mut().chunks_exact_mut(c).zip(y.data_mut().chunks_exact_mut(c)) {
            for ch in 0..c {
                let v = (hr[ch] - mean[ch]) * inv_std[ch];
                hr[ch] = v;
                yr[ch] = gamma[ch] * v + beta[ch];
            }
        }
        self.cache = Some(BnCache {
            xhat,
            inv_std,
            batch_mean: mean,
            batch_var: var,
            train: mode == Mode::Train,
        });
        Ok(y)
    }

    fn backward(&mut self, ps: &mut ParamStore<T>, grad: &Tensor<T>) -> Result<Tensor<T>> {
        let cache = self
            .cache
            .as_ref()
            .ok_or_else(|| Error::invalid("batchnorm: backward called before forward"))?;
        check_grad("batchnorm gradient", grad, cache.xhat.shape())?;
        let c = self.channels;
        let count = T::cst((grad.len() / c) as f64);
        let mut dgamma = vec![T::zero(); c];
        let mut dbeta = vec![T::zero(); c];
        for (gr, hr) in grad.data().chunks_exact(c).zip(cache.xhat.data().chunks_exact(c)) {
            for ch in 0..c {
                dbeta[ch] += gr[ch];
                dgamma[ch] += gr[ch] * hr[ch];
            }
        }
        let gamma = ps.value(self.gamma).to_vec();
        let mut dx = grad.clone();
        for (dr, hr) in dx.data_mut().chunks_exact_mut(c).zip(cache.xhat.data().chunks_exact(c)) {
            for ch in 0..c {
                let scale = gamma[ch] * cache.inv_std[ch];
                dr[ch] = if cache.train {
                    scale * (dr[ch] - (dbeta[ch] + hr[ch] * dgamma[ch]) / count)
                } else {
                    scale * dr[ch]
                };
            }
        }
        for (d, v) in ps.grad_mut(self.gamma).iter_mut().zip(&dgamma) {
            *d += *v;
        }
        for (d, v) in ps.grad_mut(self.beta).iter_mut().zip(&dbeta) {
            *d += *v;
        }
        if cache.train {
            let m = T::cst(BN_MOMENTUM);
            let k = T::one() - m;
            for (r, b) in ps.value_mut(self.running_mean).iter_mut().zip(&cache.batch_mean) {
                *r = m * *r + k * *b;
            }
            for (r, b) in ps.value_mut(self.running_var).iter_mut().zip(&cache.batch_var) {
                *r = m * *r + k * *b;
            }
        }
        Ok(dx)
    }

    fn params(&self, out: &mut Vec<ParamId>) {
        out.extend([self.gamma, self.beta, self.running_mean, self.running_var]);
    }
}

/// `min(max(x, 0), 6)`; the gradient is 1 strictly inside `(0, 6)`.
#[derive(Debug, Clone, Default)]
pub struct Relu6<T> {
    input: Option<Tensor<T>>,
}

impl<T: Real> Relu6<T> {
    pub fn new() -> Self {
        Self { input: None }
    }
}

impl<T: Real> Layer<T> for Relu6<T> {
    fn forward(&mut self, _ps: &ParamStore<T>, x: &Tensor<T>, _mode: Mode) -> Result<Tensor<T>> {
        let six = T::cst(6.0);
        self.input = Some(x.clone());
        Ok(x.map(|v| v.max(T::zero()).min(six)))
    }

    fn backward(&mut self, _ps: &mut ParamStore<T>, grad: &Tensor<T>) -> Result<Tensor<T>> {
        let x = cached("relu6", &self.input)?;
        check_grad("relu6 gradient", grad, x.shape())?;
        let six = T::cst(6.0);
        let mut dx = grad.clone();
        for (d, v) in dx.data_mut().iter_mut().zip(x.data()) {
            if *v <= T::zero() || *v >= six {
                *d = T::zero();
            }
        }
        Ok(dx)
    }

    fn params(&self, _out: &mut Vec<ParamId>) {}
}

/// Layers applied in order.
pub struct Sequential<T> {
    pub name: String,
    layers: Vec<Box<dyn Layer<T> + Send>>,
}

impl<T: Real> Sequential<T> {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            layers: Vec::new(),
        }
    }

    pub fn push(&mut self, layer: impl Layer<T> + Send + 'static) -> &mut Self {
        self.layers.push(Box::new(layer));
        self
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }
}

impl<T: Real> Layer<T> for Sequential<T> {
    fn forward(&mut self, ps: &ParamStore<T>, x: &Tensor<T>, mode: Mode) -> Result<Tensor<T>> {
        let mut h = x.clone();
        for l in &mut self.layers {
            h = l.forward(ps, &h, mode)?;
        }
        Ok(h)
    }

    fn backward(&mut self, ps: &mut ParamStore<T>, grad: &Tensor<T>) -> Result<Tensor<T>> {
        let mut g = grad.clone();
        for l in self.layers.iter_mut().rev() {
            g = l.backward(ps, &g)?;
        }
        Ok(g)
    }

    fn params(&self, out: &mut Vec<ParamId>) {
        for l in &self.layers {
            l.params(out);
        }
    }
}
