use alloc::boxed::Box;
use alloc::vec::Vec;

use rand::Rng;

use super::deeplab::DeepLabV3Plus;
use super::fcn::Fcn;
use super::spec::{Arch, ModelSpec};
use crate::error::Result;
use crate::nn::{Layer, Mode, ParamId, ParamStore};
use crate::numerics::{Real, Tensor};

/// One of the three segmentation models, producing `[n, H, W, 2]` logits
/// on the requested label grid.
pub enum Network<T> {
    Fcn(Box<Fcn<T>>),
    DeepLab(Box<DeepLabV3Plus<T>>),
}

impl<T: Real> Network<T> {
    pub fn new<R: Rng + ?Sized>(
        ps: &mut ParamStore<T>,
        spec: &ModelSpec,
        out_hw: (usize, usize),
        rng: &mut R,
    ) -> Result<Self> {
        Ok(match spec.arch {
            Arch::Fcn | Arch::FcnTiny => Network::Fcn(Box::new(Fcn::new(ps, spec, out_hw, rng)?)),
            Arch::DeepLabV3Plus => Network::DeepLab(Box::new(DeepLabV3Plus::new(ps, spec, out_hw, rng)?)),
        })
    }

    fn inner(&self) -> &dyn Layer<T> {
        match self {
            Network::Fcn(m) => m.as_ref(),
            Network::DeepLab(m) => m.as_ref(),
        }
    }

    fn inner_mut(&mut self) -> &mut dyn Layer<T> {
        match self {
            Network::Fcn(m) => m.as_mut(),
            Network::DeepLab(m) => m.as_mut(),
        }
    }

    pub fn param_ids(&self) -> Vec<ParamId> {
        let mut ids = Vec::new();
        self.params(&mut ids);
        ids
    }
}

impl<T: Real> Layer<T> for Network<T> {
    fn forward(&mut self, ps: &ParamStore<T>, x: &Tensor<T>, mode: Mode) -> Result<Tensor<T>> {
        self.inner_mut().forward(ps, x, mode)
    }

    fn backward(&mut self, ps: &mut ParamStore<T>, grad: &Tensor<T>) -> Result<Tensor<T>> {
        self.inner_mut().backward(ps, grad)
    }

    fn params(&self, out: &mut Vec<ParamId>) {
        self.inner().params(out);
    }
}

/// Trainable element count of a layer: weights, biases and batch-norm
/// scale/shift, excluding running statistics.
pub fn param_count<T: Real, L: Layer<T> + ?Sized>(layer: &L, ps: &ParamStore<T>) -> usize {
    let mut ids = Vec::new();
    layer.params(&mut ids);
    ps.count_trainable(&ids)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::AsppBranch;
    use crate::nn::{grad_check, Conv2d, GradCheckOptions};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn build(arch: Arch, in_ch: usize, out_hw: (usize, usize)) -> (ParamStore<f32>, Network<f32>) {
        let mut ps = ParamStore::new();
        let net = Network::new(&mut ps, &ModelSpec::new(arch, in_ch), out_hw, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        (ps, net)
    }

    #[test]
    fn single_conv_count() {
        let mut ps = ParamStore::<f32>::new();
        let conv = Conv2d::new(&mut ps, "c", 1, 8, 3, 1, 1, true, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(param_count(&conv, &ps), 80);
    }

    #[test]
    fn tiny_is_under_a_tenth_of_fcn() {
        let (pt, tiny) = build(Arch::FcnTiny, 64, (128, 48));
        let (pf, fcn) = build(Arch::Fcn, 64, (128, 48));
        let (nt, nf) = (param_count(&tiny, &pt), param_count(&fcn, &pf));
        assert!(nt <= 300_000, "{nt}");
        assert!((nt as f64) < 0.1 * nf as f64, "{nt} vs {nf}");
        let (pr, ra_tiny) = build(Arch::FcnTiny, 64, (128, 128));
        assert_eq!(param_count(&ra_tiny, &pr), nt);
    }

    #[test]
    fn fcn_logits_are_an_eighth_of_the_input() {
        let (ps, mut net) = build(Arch::FcnTiny, 64, (128, 48));
        let y = net.forward(&ps, &Tensor::zeros(&[1, 128, 48, 64]), Mode::Infer).unwrap();
        assert_eq!(y.shape(), &[1, 128, 48, 2]);
        let Network::Fcn(f) = &net else { unreachable!() };
        assert_eq!(f.logits_shape(), Some([1, 16, 6, 2]));
        assert_eq!(f.decoder_channels(), [8, 8]);
    }

    #[test]
    fn deeplab_aspp_layout() {
        let (ps, mut net) = build(Arch::DeepLabV3Plus, 1, (128, 128));
        let Network::DeepLab(d) = &net else { unreachable!() };
        assert_eq!(d.aspp.branches().len(), 5);
        assert_eq!(
            d.aspp.branches(),
            &[
                AsppBranch::Pointwise,
                AsppBranch::Atrous { dilation: 2 },
                AsppBranch::Atrous { dilation: 4 },
                AsppBranch::Atrous { dilation: 6 },
                AsppBranch::ImagePool
            ]
        );
        assert_eq!(d.aspp.atrous_spans().last(), Some(&13));
        let y = net.forward(&ps, &Tensor::zeros(&[1, 128, 48, 1]), Mode::Infer).unwrap();
        assert_eq!(y.shape(), &[1, 128, 128, 2]);
    }

    #[test]
    fn tiny_fcn_end_to_end_gradient_check() {
        let mut ps = ParamStore::<f64>::new();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut net = Network::new(&mut ps, &ModelSpec::new(Arch::FcnTiny, 2), (16, 12), &mut rng).unwrap();
        let x = Tensor::from_fn(&[2, 16, 12, 2], |i| ((i * 37 % 101) as f64 / 50.0) - 1.0);
        let opts = GradCheckOptions {
            max_per_tensor: Some(4),
            ..GradCheckOptions::default()
        };
        let rep = grad_check(&mut net, &mut ps, &x, opts).unwrap();
        assert!(rep.passes(1e-3), "{rep:?}");
    }

    #[test]
    fn inference_is_bit_deterministic() {
        let (ps, mut net) = build(Arch::DeepLabV3Plus, 1, (32, 16));
        let x = Tensor::from_fn(&[1, 32, 16, 1], |i| (i % 7) as f32);
        let a = net.forward(&ps, &x, Mode::Infer).unwrap();
        let b = net.forward(&ps, &x, Mode::Infer).unwrap();
        assert_eq!(a, b);
    }
}
