use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use crate::numerics::{Real, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// A named parameter with its gradient and optimizer state. Non-trainable
/// entries (batch-norm running statistics) only use `value`.
#[derive(Debug, Clone, PartialEq)]
pub struct Param<T> {
    pub name: String,
    pub value: Tensor<T>,
    pub grad: Tensor<T>,
    /// RMSProp mean-square accumulator.
    pub acc: Tensor<T>,
    /// RMSProp momentum buffer.
    pub mom: Tensor<T>,
    pub trainable: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamStore<T> {
    params: Vec<Param<T>>,
}

impl<T: Real> ParamStore<T> {
    pub fn new() -> Self {
        Self { params: Vec::new() }
    }

    pub fn add(&mut self, name: impl Into<String>, value: Tensor<T>, trainable: bool) -> ParamId {
        let shape = value.shape().to_vec();
        self.params.push(Param {
            name: name.into(),
            grad: Tensor::zeros(&shape),
            acc: Tensor::zeros(&shape),
            mom: Tensor::zeros(&shape),
            value,
            trainable,
        });
        ParamId(self.params.len() - 1)
    }

    /// Kaiming-uniform tensor: `U(−b, b)` with `b = sqrt(6 / fan_in)`.
    pub fn add_kaiming<R: Rng + ?Sized>(
        &mut self,
        name: impl Into<String>,
        shape: &[usize],
        fan_in: usize,
        rng: &mut R,
    ) -> ParamId {
        let bound = num_traits::Float::sqrt(6.0 / fan_in.max(1) as f64);
        let value = Tensor::from_fn(shape, |_| T::cst(rng.random_range(-bound..bound)));
        self.add(name, value, true)
    }

    pub fn get(&self, id: ParamId) -> &Param<T> {
        &self.params[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Param<T> {
        &mut self.params[id.0]
    }

    pub fn value(&self, id: ParamId) -> &[T] {
        self.params[id.0].value.data()
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut [T] {
        self.params[id.0].value.data_mut()
    }

    pub fn grad_mut(&mut self, id: ParamId) -> &mut [T] {
        self.params[id.0].grad.data_mut()
    }

    pub fn value_and_grad_mut(&mut self, id: ParamId) -> (&[T], &mut [T]) {
        let p = &mut self.params[id.0];
        (p.value.data(), p.grad.data_mut())
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.params.iter().position(|p| p.name == name).map(ParamId)
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.params.len()).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Param<T>> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Param<T>> {
        self.params.iter_mut()
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn zero_grad(&mut self) {
        for p in &mut self.params {
            p.grad.data_mut().fill(T::zero());
        }
    }

    /// Element count over trainable entries among `ids`.
    pub fn count_trainable(&self, ids: &[ParamId]) -> usize {
        ids.iter()
            .map(|&id| self.get(id))
            .filter(|p| p.trainable)
            .map(|p| p.value.len())
            .sum()
    }

    /// Same store with every tensor cast to another precision.
    pub fn cast<U: Real>(&self) -> ParamStore<U> {
        let conv = |t: &Tensor<T>| t.map(|v| U::cst(Real::to_f64(*v)));
        ParamStore {
            params: self
                .params
                .iter()
                .map(|p| Param {
                    name: p.name.clone(),
                    value: conv(&p.value),
                    grad: conv(&p.grad),
                    acc: conv(&p.acc),
                    mom: conv(&p.mom),
                    trainable: p.trainable,
                })
                .collect(),
        }
    }
}
