use alloc::string::ToString;

use super::param::ParamStore;
use crate::error::{Error, Result};
use crate::numerics::Real;

/// RMSProp with heavy-ball momentum:
/// `acc ← ρ·acc + (1−ρ)·g²`, `mom ← μ·mom + lr·g/√(acc+ε)`, `p ← p − mom`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmsProp {
    pub lr: f64,
    pub decay: f64,
    pub momentum: f64,
    pub eps: f64,
}

impl Default for RmsProp {
    fn default() -> Self {
        Self {
            lr: 0.005,
            decay: 0.9,
            momentum: 0.9,
            eps: 1e-10,
        }
    }
}

impl RmsProp {
    pub fn with_lr(lr: f64) -> Self {
        Self { lr, ..Self::default() }
    }

    /// Updates every trainable parameter. Nothing is modified unless all
    /// gradients are finite.
    pub fn step<T: Real>(&self, ps: &mut ParamStore<T>) -> Result<()> {
        if let Some(p) = ps
            .iter()
            .find(|p| p.trainable && p.grad.data().iter().any(|g| !g.is_finite()))
        {
            return Err(Error::NonFiniteGradient(p.name.to_string()));
        }
        let (lr, rho, mu, eps) = (T::cst(self.lr), T::cst(self.decay), T::cst(self.momentum), T::cst(self.eps));
        let one_minus = T::one() - rho;
        for p in ps.iter_mut().filter(|p| p.trainable) {
            let it = p
                .value
                .data_mut()
                .iter_mut()
                .zip(p.grad.data())
                .zip(p.acc.data_mut().iter_mut().zip(p.mom.data_mut()));
            for ((v, g), (a, m)) in it {
                *a = rho * *a + one_minus * *g * *g;
                *m = mu * *m + lr * *g / (*a + eps).sqrt();
                *v -= *m;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Tensor;

    fn store(g: f64) -> ParamStore<f64> {
        let mut ps = ParamStore::new();
        let id = ps.add("w", Tensor::full(&[3], 1.0), true);
        ps.grad_mut(id).fill(g);
        ps.add("frozen", Tensor::full(&[1], 2.0), false);
        ps
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut ps = store(0.0);
        RmsProp::default().step(&mut ps).unwrap();
        assert!(ps.iter().next().unwrap().value.data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn single_unit_step_closed_form() {
        let mut ps = store(1.0);
        RmsProp::default().step(&mut ps).unwrap();
        let p = ps.iter().next().unwrap();
        let step = 0.005 / (0.1f64 + 1e-10).sqrt();
        assert!((step - 0.015811).abs() < 1e-6);
        assert!((p.acc.data()[0] - 0.1).abs() < 1e-15);
        assert!((p.value.data()[0] - (1.0 - step)).abs() < 1e-12);
    }

    #[test]
    fn momentum_grows_the_second_step() {
        let mut ps = store(1.0);
        let opt = RmsProp::default();
        opt.step(&mut ps).unwrap();
        let after1 = ps.iter().next().unwrap().value.data()[0];
        opt.step(&mut ps).unwrap();
        let after2 = ps.iter().next().unwrap().value.data()[0];
        assert!((after1 - after2) > (1.0 - after1));
    }

    #[test]
    fn non_finite_gradient_is_reported_by_name() {
        let mut ps = store(1.0);
        ps.grad_mut(crate::nn::ParamId(0))[1] = f64::NAN;
        let err = RmsProp::default().step(&mut ps).unwrap_err();
        assert_eq!(err, Error::NonFiniteGradient("w".into()));
        assert!(ps.iter().next().unwrap().value.data().iter().all(|&v| v == 1.0));
        assert_eq!(ps.iter().nth(1).unwrap().value.data(), &[2.0]);
    }
}
