use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex;

use crate::error::{Error, Result};

/// Element type tag of a [`Tensor`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DType {
    Real32,
    Real64,
    /// Pair of `f32`.
    Complex64,
    /// Pair of `f64`.
    Complex128,
}

pub trait Element: Copy + Send + Sync + 'static {
    const DTYPE: DType;
}

impl Element for f32 {
    const DTYPE: DType = DType::Real32;
}
impl Element for f64 {
    const DTYPE: DType = DType::Real64;
}
impl Element for Complex<f32> {
    const DTYPE: DType = DType::Complex64;
}
impl Element for Complex<f64> {
    const DTYPE: DType = DType::Complex128;
}

/// Dense row-major N-d array.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T> Tensor<T> {
    pub fn new(shape: &[usize], data: Vec<T>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() || shape.contains(&0) {
            return Err(Error::BufferLength {
                shape: shape.to_vec(),
                len: data.len(),
            });
        }
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn from_fn(shape: &[usize], f: impl FnMut(usize) -> T) -> Self {
        let n = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: (0..n).map(f).collect(),
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.shape.len()];
        for i in (0..self.shape.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.shape[i + 1];
        }
        strides
    }

    /// Flat offset of a multi-index. Panics when out of bounds.
    pub fn offset(&self, index: &[usize]) -> usize {
        assert_eq!(index.len(), self.shape.len(), "index rank");
        index
            .iter()
            .zip(&self.shape)
            .fold(0, |acc, (&i, &d)| {
                assert!(i < d, "index {i} out of bounds for dim {d}");
                acc * d + i
            })
    }

    pub fn reshape(self, shape: &[usize]) -> Result<Self> {
        Self::new(shape, self.data)
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Tensor<U> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(f).collect(),
        }
    }

    pub(crate) fn check_axis(&self, axis: usize) -> Result<()> {
        if axis >= self.shape.len() {
            Err(Error::AxisOutOfRange {
                axis,
                ndim: self.shape.len(),
            })
        } else {
            Ok(())
        }
    }
}

impl<T: Copy> Tensor<T> {
    pub fn full(shape: &[usize], value: T) -> Self {
        let n = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: vec![value; n],
        }
    }

    pub fn get(&self, index: &[usize]) -> T {
        self.data[self.offset(index)]
    }

    pub fn set(&mut self, index: &[usize], value: T) {
        let o = self.offset(index);
        self.data[o] = value;
    }
}

impl<T: Copy + num_traits::Zero> Tensor<T> {
    pub fn zeros(shape: &[usize]) -> Self {
        Self::full(shape, T::zero())
    }
}

impl<T: Element> Tensor<T> {
    pub fn dtype(&self) -> DType {
        T::DTYPE
    }
}

impl<T: Copy> Tensor<T> {
    /// Views an NHWC tensor's dimensions.
    pub fn nhwc(&self) -> (usize, usize, usize, usize) {
        assert_eq!(self.shape.len(), 4, "expected an NHWC tensor");
        (self.shape[0], self.shape[1], self.shape[2], self.shape[3])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_mismatched_buffer() {
        assert!(matches!(
            Tensor::new(&[2, 3], vec![0.0f32; 5]),
            Err(Error::BufferLength { .. })
        ));
        assert!(Tensor::new(&[2, 0], Vec::<f32>::new()).is_err());
    }

    #[test]
    fn offsets_are_row_major() {
        let t = Tensor::from_fn(&[2, 3, 4], |i| i as f64);
        assert_eq!(t.strides(), vec![12, 4, 1]);
        assert_eq!(t.get(&[1, 2, 3]), 23.0);
        assert_eq!(t.dtype(), DType::Real64);
        let c = Tensor::full(&[1], Complex::new(0.0f32, 1.0));
        assert_eq!(c.dtype(), DType::Complex64);
    }
}
