use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("FFT length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("axis {axis} out of range for a {ndim}-d tensor")]
    AxisOutOfRange { axis: usize, ndim: usize },

    #[error("shape mismatch in {context}: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        context: &'static str,
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("buffer of length {len} does not fill shape {shape:?}")]
    BufferLength { shape: Vec<usize>, len: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("negative input {value} at element {index}")]
    NegativeInput { index: usize, value: f64 },

    #[error("every pixel carries the ignore label; loss is undefined")]
    EmptyLoss,

    #[error("confusion matrix holds no evaluated cells")]
    EmptyConfusion,

    #[error("batch norm needs at least two samples in train mode, got {0}")]
    BatchTooSmall(usize),

    #[error("non-finite gradient in parameter `{0}`")]
    NonFiniteGradient(String),
}

impl Error {
    pub(crate) fn shape(context: &'static str, expected: &[usize], found: &[usize]) -> Self {
        Error::ShapeMismatch {
            context,
            expected: expected.to_vec(),
            found: found.to_vec(),
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
