use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::encoder::Encoder;
use super::spec::ModelSpec;
use super::{conv_bn, split2};
use crate::error::{Error, Result};
use crate::nn::{
    concat_channels, split_channels, BilinearResize, Conv2d, GlobalAvgPool, Layer, Mode, ParamId,
    ParamStore, Sequential,
};
use crate::numerics::{Real, Tensor};

/// Channels of the projected stride-4 skip.
const LOW_LEVEL_DEPTH: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AsppBranch {
    Pointwise,
    Atrous { dilation: usize },
    ImagePool,
}

/// Atrous spatial pyramid pooling: parallel 1×1, dilated 3×3 and
/// image-pooling branches, concatenated and projected by a 1×1.
pub struct Aspp<T> {
    kinds: Vec<AsppBranch>,
    branches: Vec<Sequential<T>>,
    pool: GlobalAvgPool,
    pool_conv: Sequential<T>,
    pool_up: Option<BilinearResize>,
    project: Sequential<T>,
    depth: usize,
}

impl<T: Real> Aspp<T> {
    pub fn new<R: Rng + ?Sized>(
        ps: &mut ParamStore<T>,
        in_ch: usize,
        depth: usize,
        rates: &[usize],
        rng: &mut R,
    ) -> Self {
        let mut kinds = vec![AsppBranch::Pointwise];
        let mut branches = vec![conv_bn(ps, "aspp.b0", in_ch, depth, 1, 1, 1, true, rng)];
        for (i, &r) in rates.iter().enumerate() {
            kinds.push(AsppBranch::Atrous { dilation: r });
            branches.push(conv_bn(ps, &format!("aspp.b{}", i + 1), in_ch, depth, 3, 1, r, true, rng));
        }
        kinds.push(AsppBranch::ImagePool);
        let pool_conv = conv_bn(ps, "aspp.pool", in_ch, depth, 1, 1, 1, true, rng);
        let project = conv_bn(ps, "aspp.project", depth * kinds.len(), depth, 1, 1, 1, true, rng);
        Self {
            kinds,
            branches,
            pool: GlobalAvgPool::new(),
            pool_conv,
            pool_up: None,
            project,
            depth,
        }
    }

    pub fn branches(&self) -> &[AsppBranch] {
        &self.kinds
    }

    /// Spatial extent covered by each 3×3 atrous branch: `2·rate + 1`.
    pub fn atrous_spans(&self) -> Vec<usize> {
        self.kinds
            .iter()
            .filter_map(|k| match k {
                AsppBranch::Atrous { dilation } => Some(2 * dilation + 1),
                _ => None,
            })
            .collect()
    }
}

impl<T: Real> Layer<T> for Aspp<T> {
    fn forward(&mut self, ps: &ParamStore<T>, x: &Tensor<T>, mode: Mode) -> Result<Tensor<T>> {
        let (_, h, w, _) = x.nhwc();
        let mut outs = Vec::with_capacity(self.kinds.len());
        for b in &mut self.branches {
            outs.push(b.forward(ps, x, mode)?);
        }
        let pooled = self.pool.forward(ps, x, mode)?;
        let pooled = self.pool_conv.forward(ps, &pooled, mode)?;
        let mut up = BilinearResize::new(h, w)?;
        outs.push(up.forward(ps, &pooled, mode)?);
        self.pool_up = Some(up);
        let refs: Vec<&Tensor<T>> = outs.iter().collect();
        self.project.forward(ps, &concat_channels(&refs)?, mode)
    }

    fn backward(&mut self, ps: &mut ParamStore<T>, grad: &Tensor<T>) -> Result<Tensor<T>> {
        let g = self.project.backward(ps, grad)?;
        let parts = split_channels(&g, &vec![self.depth; self.kinds.len()])?;
        let (last, convs) = parts.split_last().expect("at least one branch");
        let up = self
            .pool_up
            .as_mut()
            .ok_or_else(|| Error::invalid("aspp: backward called before forward"))?;
        let gp = Layer::<T>::backward(up, ps, last)?;
        let gp = self.pool_conv.backward(ps, &gp)?;
        let mut dx = Layer::<T>::backward(&mut self.pool, ps, &gp)?;
        for (b, gb) in self.branches.iter_mut().zip(convs) {
            let d = b.backward(ps, gb)?;
            for (a, v) in dx.data_mut().iter_mut().zip(d.data()) {
                *a += *v;
            }
        }
        Ok(dx)
    }

    fn params(&self, out: &mut Vec<ParamId>) {
        for b in &self.branches {
            b.params(out);
        }
        self.pool_conv.params(out);
        self.project.params(out);
    }
}

/// Output-stride-8 encoder → ASPP → ×2 upsample fused with the projected
/// stride-4 tap → two 3×3 blocks → 1×1 classifier → bilinear resize.
pub struct DeepLabV3Plus<T> {
    pub encoder: Encoder<T>,
    pub aspp: Aspp<T>,
    low: Sequential<T>,
    up: Option<BilinearResize>,
    head: Sequential<T>,
    classifier: Conv2d<T>,
    resize: BilinearResize,
    depth: usize,
}

impl<T: Real> DeepLabV3Plus<T> {
    pub fn new<R: Rng + ?Sized>(
        ps: &mut ParamStore<T>,
        spec: &ModelSpec,
        out_hw: (usize, usize),
        rng: &mut R,
    ) -> Result<Self> {
        spec.validate()?;
        let encoder = Encoder::new(ps, "encoder", spec.in_channels, spec.width_multiplier, 8, rng)?;
        let [c4, _, _, c_out] = encoder.tap_channels();
        let d = spec.decoder_depth;
        let aspp = Aspp::new(ps, c_out, d, &spec.aspp_rates, rng);
        let low = conv_bn(ps, "decoder.low", c4, LOW_LEVEL_DEPTH, 1, 1, 1, true, rng);
        let mut head = Sequential::new("decoder.head");
        head.push(conv_bn(ps, "decoder.head0", d + LOW_LEVEL_DEPTH, d, 3, 1, 1, true, rng))
            .push(conv_bn(ps, "decoder.head1", d, d, 3, 1, 1, true, rng));
        let classifier = Conv2d::new(ps, "decoder.classifier", d, spec.n_classes, 1, 1, 1, true, rng);
        Ok(Self {
            encoder,
            aspp,
            low,
            up: None,
            head,
            classifier,
            resize: BilinearResize::new(out_hw.0, out_hw.1)?,
            depth: d,
        })
    }
}

impl<T: Real> Layer<T> for DeepLabV3Plus<T> {
    fn forward(&mut self, ps: &ParamStore<T>, x: &Tensor<T>, mode: Mode) -> Result<Tensor<T>> {
        let [t4, _, _, top] = self.encoder.forward(ps, x, mode)?;
        let a = self.aspp.forward(ps, &top, mode)?;
        let (_, h4, w4, _) = t4.nhwc();
        let mut up = BilinearResize::new(h4, w4)?;
        let a = up.forward(ps, &a, mode)?;
        self.up = Some(up);
        let l = self.low.forward(ps, &t4, mode)?;
        let f = self.head.forward(ps, &concat_channels(&[&a, &l])?, mode)?;
        let logits = self.classifier.forward(ps, &f, mode)?;
        self.resize.forward(ps, &logits, mode)
    }

    fn backward(&mut self, ps: &mut ParamStore<T>, grad: &Tensor<T>) -> Result<Tensor<T>> {
        let g = self.resize.backward(ps, grad)?;
        let g = self.classifier.backward(ps, &g)?;
        let g = self.head.backward(ps, &g)?;
        let (ga, gl) = split2(&g, self.depth, LOW_LEVEL_DEPTH)?;
        let g4 = self.low.backward(ps, &gl)?;
        let up = self
            .up
            .as_mut()
            .ok_or_else(|| Error::invalid("deeplab: backward called before forward"))?;
        let ga = Layer::<T>::backward(up, ps, &ga)?;
        let gtop = self.aspp.backward(ps, &ga)?;
        self.encoder.backward(ps, [Some(g4), None, None, Some(gtop)])
    }

    fn params(&self, out: &mut Vec<ParamId>) {
        self.encoder.params(out);
        self.aspp.params(out);
        self.low.params(out);
        self.head.params(out);
        self.classifier.params(out);
    }
}
