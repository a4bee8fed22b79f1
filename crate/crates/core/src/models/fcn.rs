use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use super::encoder::Encoder;
use super::spec::ModelSpec;
use super::split2;
use crate::error::Result;
use crate::nn::{
    concat_channels, crop_spatial, pad_spatial, BatchNorm, BilinearResize, Conv2d,
    ConvTranspose2d, Layer, Mode, ParamId, ParamStore, Relu6, Sequential,
};
use crate::numerics::{Real, Tensor};

/// Encoder → two ×2 transposed-convolution stages fused with the stride-16
/// and stride-8 taps → 1×1 classifier at input/8 → bilinear resize.
///
/// Upsampled maps are cropped top-left to the tap size before fusion, which
/// absorbs odd tap extents (8×3 at stride 16 on a 128×48 input).
pub struct Fcn<T> {
    pub encoder: Encoder<T>,
    up16: Sequential<T>,
    up8: Sequential<T>,
    classifier: Conv2d<T>,
    resize: BilinearResize,
    pub decoder_depth: usize,
    cache: Option<FcnCache>,
}

#[derive(Debug, Clone)]
struct FcnCache {
    up16_hw: (usize, usize),
    up8_hw: (usize, usize),
    tap16_ch: usize,
    tap8_ch: usize,
    logits_shape: [usize; 4],
}

impl<T: Real> Fcn<T> {
    pub fn new<R: Rng + ?Sized>(
        ps: &mut ParamStore<T>,
        spec: &ModelSpec,
        out_hw: (usize, usize),
        rng: &mut R,
    ) -> Result<Self> {
        spec.validate()?;
        let encoder = Encoder::new(ps, "encoder", spec.in_channels, spec.width_multiplier, 32, rng)?;
        let [_, c8, c16, c32] = encoder.tap_channels();
        let d = spec.decoder_depth;
        let up = |ps: &mut ParamStore<T>, name: &str, cin: usize, rng: &mut R| {
            let mut s = Sequential::new(name);
            s.push(ConvTranspose2d::new(ps, &format!("{name}.tconv"), cin, d, 4, 2, rng))
                .push(BatchNorm::new(ps, &format!("{name}.bn"), d))
                .push(Relu6::new());
            s
        };
        let up16 = up(ps, "decoder.up16", c32, rng);
        let up8 = up(ps, "decoder.up8", d + c16, rng);
        let classifier = Conv2d::new(ps, "decoder.classifier", d + c8, spec.n_classes, 1, 1, 1, true, rng);
        Ok(Self {
            encoder,
            up16,
            up8,
            classifier,
            resize: BilinearResize::new(out_hw.0, out_hw.1)?,
            decoder_depth: d,
            cache: None,
        })
    }

    /// Shape of the classifier output from the last forward pass.
    pub fn logits_shape(&self) -> Option<[usize; 4]> {
        self.cache.as_ref().map(|c| c.logits_shape)
    }

    /// Output channels of every decoder convolution, classifier excluded.
    pub fn decoder_channels(&self) -> [usize; 2] {
        [self.decoder_depth; 2]
    }
}

fn hw<T: Real>(t: &Tensor<T>) -> (usize, usize) {
    (t.shape()[1], t.shape()[2])
}

impl<T: Real> Layer<T> for Fcn<T> {
    fn forward(&mut self, ps: &ParamStore<T>, x: &Tensor<T>, mode: Mode) -> Result<Tensor<T>> {
        let [_, t8, t16, t32] = self.encoder.forward(ps, x, mode)?;
        let u = self.up16.forward(ps, &t32, mode)?;
        let up16_hw = hw(&u);
        let (h16, w16) = hw(&t16);
        let f16 = concat_channels(&[&crop_spatial(&u, h16, w16)?, &t16])?;
        let u = self.up8.forward(ps, &f16, mode)?;
        let up8_hw = hw(&u);
        let (h8, w8) = hw(&t8);
        let f8 = concat_channels(&[&crop_spatial(&u, h8, w8)?, &t8])?;
        let logits = self.classifier.forward(ps, &f8, mode)?;
        let ls = logits.nhwc();
        self.cache = Some(FcnCache {
            up16_hw,
            up8_hw,
            tap16_ch: t16.shape()[3],
            tap8_ch: t8.shape()[3],
            logits_shape: [ls.0, ls.1, ls.2, ls.3],
        });
        self.resize.forward(ps, &logits, mode)
    }

    fn backward(&mut self, ps: &mut ParamStore<T>, grad: &Tensor<T>) -> Result<Tensor<T>> {
        let c = self
            .cache
            .clone()
            .ok_or_else(|| crate::error::Error::invalid("fcn: backward called before forward"))?;
        let d = self.decoder_depth;
        let g = self.resize.backward(ps, grad)?;
        let g = self.classifier.backward(ps, &g)?;
        let (gu, g8) = split2(&g, d, c.tap8_ch)?;
        let gu = pad_spatial(&gu, c.up8_hw.0, c.up8_hw.1)?;
        let g = self.up8.backward(ps, &gu)?;
        let (gu, g16) = split2(&g, d, c.tap16_ch)?;
        let gu = pad_spatial(&gu, c.up16_hw.0, c.up16_hw.1)?;
        let g32 = self.up16.backward(ps, &gu)?;
        self.encoder.backward(ps, [None, Some(g8), Some(g16), Some(g32)])
    }

    fn params(&self, out: &mut Vec<ParamId>) {
        self.encoder.params(out);
        self.up16.params(out);
        self.up8.params(out);
        self.classifier.params(out);
    }
}
