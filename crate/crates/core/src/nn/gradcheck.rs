use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::layers::{Layer, Mode};
use super::param::ParamStore;
use crate::error::Result;
use crate::numerics::Tensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckOptions {
    /// Central-difference step.
    pub step: f64,
    /// Denominator floor of the relative error, so near-zero gradients are
    /// compared absolutely.
    pub floor: f64,
    /// Elements probed per tensor; `None` probes all of them.
    pub max_per_tensor: Option<usize>,
    pub mode: Mode,
    pub seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        Self {
            step: 1e-5,
            floor: 1e-4,
            max_per_tensor: None,
            mode: Mode::Train,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Tensor and flat index of the worst element.
    pub worst: (String, usize),
    pub checked: usize,
}

impl GradCheckReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_rel_error < tolerance
    }
}

/// Compares backward against central differences of `L = Σ y·r` for a fixed
/// random `r`, over the input and every trainable parameter.
pub fn grad_check<L: Layer<f64> + ?Sized>(
    layer: &mut L,
    ps: &mut ParamStore<f64>,
    input: &Tensor<f64>,
    opts: GradCheckOptions,
) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let y = layer.forward(ps, input, opts.mode)?;
    let r = Tensor::from_fn(y.shape(), |_| rng.random_range(-1.0..1.0));
    ps.zero_grad();
    let dx = layer.backward(ps, &r)?;

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: (String::new(), 0),
        checked: 0,
    };
    let mut record = |name: &str, i: usize, analytic: f64, numeric: f64| {
        let denom = analytic.abs().max(numeric.abs()).max(opts.floor);
        let err = (analytic - numeric).abs() / denom;
        report.checked += 1;
        if err > report.max_rel_error || report.worst.0.is_empty() {
            report.max_rel_error = report.max_rel_error.max(err);
            report.worst = (name.into(), i);
        }
    };
    let objective = |layer: &mut L, ps: &ParamStore<f64>, x: &Tensor<f64>| -> Result<f64> {
        let y = layer.forward(ps, x, opts.mode)?;
        Ok(y.data().iter().zip(r.data()).map(|(a, b)| a * b).sum())
    };
    let pick = |len: usize, rng: &mut ChaCha8Rng| -> Vec<usize> {
        match opts.max_per_tensor {
            Some(k) if k < len => sample(rng, len, k).into_vec(),
            _ => (0..len).collect(),
        }
    };

    let mut x = input.clone();
    for i in pick(x.len(), &mut rng) {
        let orig = x.data()[i];
        x.data_mut()[i] = orig + opts.step;
        let plus = objective(layer, ps, &x)?;
        x.data_mut()[i] = orig - opts.step;
        let minus = objective(layer, ps, &x)?;
        x.data_mut()[i] = orig;
        record("input", i, dx.data()[i], (plus - minus) / (2.0 * opts.step));
    }

    let ids: Vec<_> = ps.ids().filter(|&id| ps.get(id).trainable).collect();
    for id in ids {
        let analytic = ps.get(id).grad.clone();
        let name = ps.get(id).name.clone();
        for i in pick(analytic.len(), &mut rng) {
            let orig = ps.value(id)[i];
            ps.value_mut(id)[i] = orig + opts.step;
            let plus = objective(layer, ps, input)?;
            ps.value_mut(id)[i] = orig - opts.step;
            let minus = objective(layer, ps, input)?;
            ps.value_mut(id)[i] = orig;
            record(&name, i, analytic.data()[i], (plus - minus) / (2.0 * opts.step));
        }
    }
    Ok(report)
}
