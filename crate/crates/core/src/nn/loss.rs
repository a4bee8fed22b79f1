use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::layers::expect_4d;
use super::param::{ParamId, ParamStore};
use crate::error::{Error, Result};
use crate::numerics::{Real, Tensor};
use crate::simulate::IGNORE;

/// Softmax over the channel axis of an NHWC tensor.
pub fn softmax_channels<T: Real>(x: &Tensor<T>) -> Result<Tensor<T>> {
    let (_, _, _, c) = expect_4d("softmax input", x)?;
    let mut out = x.clone();
    for row in out.data_mut().chunks_exact_mut(c) {
        softmax_in_place(row);
    }
    Ok(out)
}

fn softmax_in_place<T: Real>(row: &mut [T]) {
    let m = row.iter().copied().fold(T::neg_infinity(), T::max);
    let mut s = T::zero();
    for v in row.iter_mut() {
        *v = (*v - m).exp();
        s += *v;
    }
    for v in row.iter_mut() {
        *v /= s;
    }
}

/// Class-weighted cross-entropy with learned weights `w = C·softmax(θ)`.
///
/// `Σ w = C` at every θ, and θ = 0 gives plain cross-entropy. Pixels
/// labelled [`IGNORE`] are excluded from the mean.
#[derive(Debug, Clone)]
pub struct TrainableCrossEntropy<T> {
    pub theta: ParamId,
    pub n_classes: usize,
    cache: Option<CeCache<T>>,
}

#[derive(Debug, Clone)]
struct CeCache<T> {
    probs: Tensor<T>,
    labels: Vec<u8>,
    weights: Vec<T>,
    softmax_theta: Vec<T>,
    per_class_nll: Vec<T>,
    count: usize,
}

impl<T: Real> TrainableCrossEntropy<T> {
    pub fn new(ps: &mut ParamStore<T>, name: &str, n_classes: usize) -> Self {
        Self {
            theta: ps.add(format!("{name}.theta"), Tensor::zeros(&[n_classes]), true),
            n_classes,
            cache: None,
        }
    }

    /// Current class weights.
    pub fn weights(&self, ps: &ParamStore<T>) -> Vec<T> {
        let mut s = ps.value(self.theta).to_vec();
        softmax_in_place(&mut s);
        let c = T::cst(self.n_classes as f64);
        s.iter().map(|v| *v * c).collect()
    }

    /// Mean weighted negative log-likelihood; `labels` is one byte per pixel
    /// in NHW order.
    pub fn forward(&mut self, ps: &ParamStore<T>, logits: &Tensor<T>, labels: &[u8]) -> Result<T> {
        let (n, h, w, c) = expect_4d("loss logits", logits)?;
        if c != self.n_classes {
            return Err(Error::shape("loss logits", &[n, h, w, self.n_classes], logits.shape()));
        }
        if labels.len() != n * h * w {
            return Err(Error::shape("loss labels", &[n * h * w], &[labels.len()]));
        }
        let mut softmax_theta = ps.value(self.theta).to_vec();
        softmax_in_place(&mut softmax_theta);
        let cw = T::cst(c as f64);
        let weights: Vec<T> = softmax_theta.iter().map(|v| *v * cw).collect();
        let mut probs = logits.clone();
        let mut per_class_nll = vec![T::zero(); c];
        let mut count = 0usize;
        for (row, &y) in probs.data_mut().chunks_exact_mut(c).zip(labels) {
            // log-softmax first for stability
            let m = row.iter().copied().fold(T::neg_infinity(), T::max);
            let lse = row.iter().map(|v| (*v - m).exp()).sum::<T>().ln() + m;
            if y != IGNORE {
                let yi = y as usize;
                if yi >= c {
                    return Err(Error::invalid(format!("label {y} out of range")));
                }
                per_class_nll[yi] += lse - row[yi];
                count += 1;
            }
            for v in row.iter_mut() {
                *v = (*v - lse).exp();
            }
        }
        if count == 0 {
            return Err(Error::EmptyLoss);
        }
        let inv = T::one() / T::cst(count as f64);
        per_class_nll.iter_mut().for_each(|v| *v *= inv);
        let loss = per_class_nll.iter().zip(&weights).map(|(a, w)| *a * *w).sum();
        self.cache = Some(CeCache {
            probs,
            labels: labels.to_vec(),
            weights,
            softmax_theta,
            per_class_nll,
            count,
        });
        Ok(loss)
    }

    /// Gradient with respect to the logits; accumulates the θ gradient.
    pub fn backward(&mut self, ps: &mut ParamStore<T>) -> Result<Tensor<T>> {
        let cache = self
            .cache
            .as_ref()
            .ok_or_else(|| Error::invalid("loss: backward called before forward"))?;
        let c = self.n_classes;
        let inv = T::one() / T::cst(cache.count as f64);
        let mut grad = cache.probs.clone();
        for (row, &y) in grad.data_mut().chunks_exact_mut(c).zip(&cache.labels) {
            if y == IGNORE {
                row.fill(T::zero());
                continue;
            }
            let scale = cache.weights[y as usize] * inv;
            row[y as usize] -= T::one();
            row.iter_mut().for_each(|v| *v *= scale);
        }
        // dL/dθ_k = C·s_k·(a_k − Σ_c a_c·s_c), a_c = per-class mean NLL
        let s = &cache.softmax_theta;
        let a = &cache.per_class_nll;
        let mix: T = a.iter().zip(s).map(|(x, y)| *x * *y).sum();
        let cw = T::cst(c as f64);
        for (k, d) in ps.grad_mut(self.theta).iter_mut().enumerate() {
            *d += cw * s[k] * (a[k] - mix);
        }
        Ok(grad)
    }

    pub fn params(&self, out: &mut Vec<ParamId>) {
        out.push(self.theta);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(seed: u64) -> (ParamStore<f64>, TrainableCrossEntropy<f64>, Tensor<f64>, Vec<u8>) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let mut ps = ParamStore::new();
        let ce = TrainableCrossEntropy::new(&mut ps, "loss", 2);
        let logits = Tensor::from_fn(&[2, 3, 2, 2], |_| r.random_range(-2.0..2.0));
        let labels = (0..12).map(|i| [0u8, 1, IGNORE][(i * 7 + seed as usize) % 3]).collect();
        (ps, ce, logits, labels)
    }

    /// Unweighted mean cross-entropy computed directly.
    fn plain_ce(logits: &Tensor<f64>, labels: &[u8]) -> f64 {
        let mut s = 0.0;
        let mut n = 0.0;
        for (row, &y) in logits.data().chunks(2).zip(labels) {
            if y == IGNORE {
                continue;
            }
            let z = row[0].exp() + row[1].exp();
            s -= (row[y as usize].exp() / z).ln();
            n += 1.0;
        }
        s / n
    }

    #[test]
    fn zero_theta_is_plain_cross_entropy() {
        let (ps, mut ce, logits, labels) = setup(1);
        let loss = ce.forward(&ps, &logits, &labels).unwrap();
        assert!((loss - plain_ce(&logits, &labels)).abs() < 1e-12);
        assert_eq!(ce.weights(&ps), vec![1.0, 1.0]);
    }

    #[test]
    fn confident_correct_logits_have_tiny_loss() {
        let (ps, mut ce, _, labels) = setup(2);
        let logits = Tensor::from_fn(&[2, 3, 2, 2], |i| {
            let y = labels[i / 2];
            if y != IGNORE && (i % 2) as u8 == y {
                20.0
            } else {
                -20.0
            }
        });
        assert!(ce.forward(&ps, &logits, &labels).unwrap() < 1e-6);
    }

    #[test]
    fn all_ignore_is_an_error() {
        let (ps, mut ce, logits, _) = setup(3);
        assert!(matches!(ce.forward(&ps, &logits, &[IGNORE; 12]), Err(Error::EmptyLoss)));
        let mut bad = vec![0u8; 12];
        bad[3] = 2;
        assert!(ce.forward(&ps, &logits, &bad).is_err());
    }

    #[test]
    fn ignored_pixels_do_not_contribute() {
        let (ps, mut ce, logits, labels) = setup(4);
        let base = ce.forward(&ps, &logits, &labels).unwrap();
        let mut other = logits.clone();
        for (row, &y) in other.data_mut().chunks_mut(2).zip(&labels) {
            if y == IGNORE {
                row[0] += 5.0;
            }
        }
        assert_eq!(ce.forward(&ps, &other, &labels).unwrap(), base);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let (mut ps, mut ce, logits, labels) = setup(5);
        ps.value_mut(ce.theta).copy_from_slice(&[0.3, -0.4]);
        ce.forward(&ps, &logits, &labels).unwrap();
        let dz = ce.backward(&mut ps).unwrap();
        let dtheta = ps.get(ce.theta).grad.data().to_vec();
        let h = 1e-5;
        let rel = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(1e-4);
        for (k, &analytic) in dtheta.iter().enumerate() {
            let orig = ps.value(ce.theta)[k];
            ps.value_mut(ce.theta)[k] = orig + h;
            let plus = ce.forward(&ps, &logits, &labels).unwrap();
            ps.value_mut(ce.theta)[k] = orig - h;
            let minus = ce.forward(&ps, &logits, &labels).unwrap();
            ps.value_mut(ce.theta)[k] = orig;
            assert!(rel(analytic, (plus - minus) / (2.0 * h)) < 1e-4);
        }
        for i in 0..logits.len() {
            let mut z = logits.clone();
            z.data_mut()[i] += h;
            let plus = ce.forward(&ps, &z, &labels).unwrap();
            z.data_mut()[i] -= 2.0 * h;
            let minus = ce.forward(&ps, &z, &labels).unwrap();
            assert!(rel(dz.data()[i], (plus - minus) / (2.0 * h)) < 1e-4);
        }
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let (_, _, logits, _) = setup(6);
        let p = softmax_channels(&logits).unwrap();
        for row in p.data().chunks(2) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
