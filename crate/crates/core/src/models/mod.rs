//! Segmentation networks on a width-scalable MobileNetV2 encoder.

mod deeplab;
mod encoder;
mod fcn;
mod network;
mod spec;

pub use deeplab::{Aspp, AsppBranch, DeepLabV3Plus};
pub use encoder::{round_channels, BlockInfo, Encoder, InvertedResidual, TAP_STRIDES};
pub use fcn::Fcn;
pub use network::{param_count, Network};
pub use spec::{Arch, ModelSpec};

use alloc::format;
use rand::Rng;

use crate::error::Result;
use crate::nn::{split_channels, BatchNorm, Conv2d, ParamStore, Relu6, Sequential};
use crate::numerics::{Real, Tensor};

/// Convolution, batch norm and optionally ReLU6, named `{name}.conv` / `{name}.bn`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn conv_bn<T: Real, R: Rng + ?Sized>(
    ps: &mut ParamStore<T>,
    name: &str,
    in_ch: usize,
    out_ch: usize,
    kernel: usize,
    stride: usize,
    dilation: usize,
    relu: bool,
    rng: &mut R,
) -> Sequential<T> {
    let mut s = Sequential::new(name);
    s.push(Conv2d::new(ps, &format!("{name}.conv"), in_ch, out_ch, kernel, stride, dilation, false, rng))
        .push(BatchNorm::new(ps, &format!("{name}.bn"), out_ch));
    if relu {
        s.push(Relu6::new());
    }
    s
}

/// Splits channels into two tensors of widths `a` and `b`.
pub(crate) fn split2<T: Real>(g: &Tensor<T>, a: usize, b: usize) -> Result<(Tensor<T>, Tensor<T>)> {
    let mut parts = split_channels(g, &[a, b])?;
    let second = parts.pop().expect("two parts");
    let first = parts.pop().expect("two parts");
    Ok((first, second))
}
