use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use super::conv_bn;
use crate::error::{Error, Result};
use crate::nn::{BatchNorm, DepthwiseConv2d, Layer, Mode, ParamId, ParamStore, Relu6, Sequential};
use crate::numerics::{Real, Tensor};

/// MobileNetV2 stage table: expansion, channels, repeats, first stride.
const STAGES: [(usize, usize, usize, usize); 7] = [
    (1, 16, 1, 1),
    (6, 24, 2, 2),
    (6, 32, 3, 2),
    (6, 64, 4, 2),
    (6, 96, 3, 1),
    (6, 160, 3, 2),
    (6, 320, 1, 1),
];

/// Nominal strides of the exposed feature taps.
pub const TAP_STRIDES: [usize; 4] = [4, 8, 16, 32];
/// Stage after which each tap is read.
const TAP_STAGES: [usize; 4] = [1, 2, 4, 6];

/// `max(8, c·width rounded up to a multiple of 8)`.
pub fn round_channels(c: usize, width: f64) -> usize {
    let scaled = num_traits::Float::ceil(c as f64 * width - 1e-9) as usize;
    scaled.div_ceil(8).max(1) * 8
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockInfo {
    pub in_ch: usize,
    pub out_ch: usize,
    pub hidden: usize,
    pub stride: usize,
    pub dilation: usize,
    pub residual: bool,
}

/// Expand 1×1 → depthwise 3×3 → linear project 1×1, with an identity
/// shortcut when stride is 1 and the channel count is unchanged.
pub struct InvertedResidual<T> {
    pub info: BlockInfo,
    body: Sequential<T>,
}

impl<T: Real> InvertedResidual<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn new<R: Rng + ?Sized>(
        ps: &mut ParamStore<T>,
        name: &str,
        in_ch: usize,
        out_ch: usize,
        expansion: usize,
        stride: usize,
        dilation: usize,
        rng: &mut R,
    ) -> Self {
        let hidden = in_ch * expansion;
        let mut body = Sequential::new(name);
        if expansion != 1 {
            body.push(conv_bn(ps, &format!("{name}.expand"), in_ch, hidden, 1, 1, 1, true, rng));
        }
        body.push(DepthwiseConv2d::new(ps, &format!("{name}.dw.conv"), hidden, 3, stride, dilation, rng))
            .push(BatchNorm::new(ps, &format!("{name}.dw.bn"), hidden))
            .push(Relu6::new())
            .push(conv_bn(ps, &format!("{name}.project"), hidden, out_ch, 1, 1, 1, false, rng));
        Self {
            info: BlockInfo {
                in_ch,
                out_ch,
                hidden,
                stride,
                dilation,
                residual: stride == 1 && in_ch == out_ch,
            },
            body,
        }
    }
}

impl<T: Real> Layer<T> for InvertedResidual<T> {
    fn forward(&mut self, ps: &ParamStore<T>, x: &Tensor<T>, mode: Mode) -> Result<Tensor<T>> {
        let mut y = self.body.forward(ps, x, mode)?;
        if self.info.residual {
            for (a, b) in y.data_mut().iter_mut().zip(x.data()) {
                *a += *b;
            }
        }
        Ok(y)
    }

    fn backward(&mut self, ps: &mut ParamStore<T>, grad: &Tensor<T>) -> Result<Tensor<T>> {
        let mut dx = self.body.backward(ps, grad)?;
        if self.info.residual {
            for (a, b) in dx.data_mut().iter_mut().zip(grad.data()) {
                *a += *b;
            }
        }
        Ok(dx)
    }

    fn params(&self, out: &mut Vec<ParamId>) {
        self.body.params(out);
    }
}

/// MobileNetV2 feature extractor truncated after the 320-channel stage.
///
/// With `output_stride == 8` the stages that would reach strides 16 and 32
/// keep stride 1 and use dilation 2 and 4 instead.
pub struct Encoder<T> {
    pub in_channels: usize,
    pub width: f64,
    pub output_stride: usize,
    stem: Sequential<T>,
    blocks: Vec<InvertedResidual<T>>,
    /// Index of the block whose output is each tap.
    tap_blocks: [usize; 4],
    tap_channels: [usize; 4],
}

impl<T: Real> Encoder<T> {
    pub fn new<R: Rng + ?Sized>(
        ps: &mut ParamStore<T>,
        name: &str,
        in_channels: usize,
        width: f64,
        output_stride: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if output_stride != 8 && output_stride != 32 {
            return Err(Error::invalid("encoder output stride must be 8 or 32"));
        }
        let stem_ch = round_channels(32, width);
        let stem = conv_bn(ps, &format!("{name}.stem"), in_channels, stem_ch, 3, 2, 1, true, rng);
        let mut blocks = Vec::new();
        let mut tap_blocks = [0; 4];
        let mut tap_channels = [0; 4];
        let mut ch = stem_ch;
        for (si, &(t, c, n, s)) in STAGES.iter().enumerate() {
            let out = round_channels(c, width);
            let (stride, dilation) = match (output_stride, si) {
                (8, 3 | 4) => (1, 2),
                (8, 5 | 6) => (1, 4),
                _ => (s, 1),
            };
            for i in 0..n {
                let b = blocks.len();
                let (st, inp) = if i == 0 { (stride, ch) } else { (1, out) };
                blocks.push(InvertedResidual::new(
                    ps,
                    &format!("{name}.block{b}"),
                    inp,
                    out,
                    t,
                    st,
                    dilation,
                    rng,
                ));
            }
            ch = out;
            if let Some(k) = TAP_STAGES.iter().position(|&x| x == si) {
                tap_blocks[k] = blocks.len() - 1;
                tap_channels[k] = out;
            }
        }
        Ok(Self {
            in_channels,
            width,
            output_stride,
            stem,
            blocks,
            tap_blocks,
            tap_channels,
        })
    }

    pub fn stem_channels(&self) -> usize {
        round_channels(32, self.width)
    }

    pub fn blocks(&self) -> impl Iterator<Item = &BlockInfo> {
        self.blocks.iter().map(|b| &b.info)
    }

    /// Channels of the taps, in [`TAP_STRIDES`] order.
    pub fn tap_channels(&self) -> [usize; 4] {
        self.tap_channels
    }

    /// Feature taps in [`TAP_STRIDES`] order (the last is the encoder output).
    pub fn forward(&mut self, ps: &ParamStore<T>, x: &Tensor<T>, mode: Mode) -> Result<[Tensor<T>; 4]> {
        if x.ndim() != 4 || x.shape()[3] != self.in_channels {
            return Err(Error::shape("encoder input", &[0, 0, 0, self.in_channels], x.shape()));
        }
        let mut h = self.stem.forward(ps, x, mode)?;
        let mut taps: [Option<Tensor<T>>; 4] = Default::default();
        for (i, b) in self.blocks.iter_mut().enumerate() {
            h = b.forward(ps, &h, mode)?;
            if let Some(k) = self.tap_blocks.iter().position(|&t| t == i) {
                taps[k] = Some(h.clone());
            }
        }
        Ok(taps.map(|t| t.expect("every tap block runs")))
    }

    /// Back-propagates tap gradients; `None` marks an unused tap.
    pub fn backward(&mut self, ps: &mut ParamStore<T>, grads: [Option<Tensor<T>>; 4]) -> Result<Tensor<T>> {
        let mut grads = grads.map(Some);
        let mut g: Option<Tensor<T>> = None;
        for i in (0..self.blocks.len()).rev() {
            if let Some(k) = self.tap_blocks.iter().position(|&t| t == i) {
                if let Some(tg) = grads[k].take().flatten() {
                    g = Some(match g {
                        None => tg,
                        Some(mut acc) => {
                            if acc.shape() != tg.shape() {
                                return Err(Error::shape("encoder tap gradient", acc.shape(), tg.shape()));
                            }
                            for (a, b) in acc.data_mut().iter_mut().zip(tg.data()) {
                                *a += *b;
                            }
                            acc
                        }
                    });
                }
            }
            if let Some(cur) = g.as_ref() {
                g = Some(self.blocks[i].backward(ps, cur)?);
            }
        }
        let g = g.ok_or_else(|| Error::invalid("encoder backward without any tap gradient"))?;
        self.stem.backward(ps, &g)
    }

    pub fn params(&self, out: &mut Vec<ParamId>) {
        self.stem.params(out);
        for b in &self.blocks {
            b.params(out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn channel_rounding() {
        assert_eq!(round_channels(32, 0.25), 8);
        assert_eq!(round_channels(16, 0.25), 8);
        assert_eq!(round_channels(96, 0.25), 24);
        assert_eq!(round_channels(160, 0.25), 40);
        assert_eq!(round_channels(320, 1.0), 320);
        assert_eq!(round_channels(24, 0.5), 16);
    }

    #[test]
    fn taps_have_nominal_strides() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut ps = ParamStore::<f32>::new();
        let mut enc = Encoder::new(&mut ps, "enc", 1, 0.25, 32, &mut rng).unwrap();
        assert_eq!(enc.stem_channels(), 8);
        let taps = enc.forward(&ps, &Tensor::zeros(&[1, 128, 48, 1]), Mode::Infer).unwrap();
        let dims: Vec<_> = taps.iter().map(|t| (t.shape()[1], t.shape()[2], t.shape()[3])).collect();
        assert_eq!(dims, [(32, 12, 8), (16, 6, 8), (8, 3, 24), (4, 2, 80)]);
        assert_eq!(enc.tap_channels(), [8, 8, 24, 80]);
        assert!(enc.forward(&ps, &Tensor::zeros(&[1, 8, 8, 2]), Mode::Infer).is_err());
    }

    #[test]
    fn output_stride_eight_uses_dilation() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut ps = ParamStore::<f32>::new();
        let mut enc = Encoder::new(&mut ps, "enc", 1, 0.25, 8, &mut rng).unwrap();
        let taps = enc.forward(&ps, &Tensor::zeros(&[1, 128, 48, 1]), Mode::Infer).unwrap();
        assert_eq!((taps[3].shape()[1], taps[3].shape()[2]), (16, 6));
        assert_eq!((taps[0].shape()[1], taps[0].shape()[2]), (32, 12));
        let late: Vec<_> = enc.blocks().filter(|b| b.out_ch >= 16).map(|b| (b.stride, b.dilation)).collect();
        assert!(late.iter().all(|&(s, _)| s == 1));
        assert_eq!(late.first().unwrap().1, 2);
        assert_eq!(late.last().unwrap().1, 4);
    }

    #[test]
    fn residuals_only_where_shapes_allow() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut ps = ParamStore::<f32>::new();
        let enc = Encoder::new(&mut ps, "enc", 64, 1.0, 32, &mut rng).unwrap();
        let blocks: Vec<_> = enc.blocks().copied().collect();
        assert_eq!(blocks.len(), 17);
        for b in &blocks {
            assert_eq!(b.residual, b.stride == 1 && b.in_ch == b.out_ch);
        }
        assert_eq!(blocks.iter().filter(|b| b.residual).count(), 10);
    }
}
