//! Minimal reverse-mode network substrate over NHWC tensors.
//!
//! There is no tape: each layer caches what its backward pass needs during
//! `forward`, and the model code wires `backward` calls in reverse order.
//! Parameters live in a [`ParamStore`] addressed by [`ParamId`], together
//! with their gradients and RMSProp buffers.

mod gradcheck;
mod kernels;
mod layers;
mod loss;
mod ops;
mod optim;
mod param;

pub use gradcheck::{grad_check, GradCheckOptions, GradCheckReport};
pub use kernels::{conv_output_size, Padding};
pub use layers::{BatchNorm, Conv2d, ConvTranspose2d, DepthwiseConv2d, Layer, Mode, Relu6, Sequential};
pub use ops::{concat_channels, crop_spatial, pad_spatial, split_channels, BilinearResize, GlobalAvgPool};
pub use loss::{softmax_channels, TrainableCrossEntropy};
pub use optim::RmsProp;
pub use param::{Param, ParamId, ParamStore};
