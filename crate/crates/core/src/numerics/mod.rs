//! Dense tensors, radix-2 FFTs, windowing and elementwise kernels.

mod elementwise;
mod fft;
mod real;
mod tensor;

pub use elementwise::{hann_window, log_compress, magnitude, DEFAULT_LOG_EPSILON};
pub use fft::{fft_1d, fft_axis, fftshift_axis, FftPlan};
pub use real::Real;
pub use tensor::{DType, Element, Tensor};

pub use num_complex::Complex;
