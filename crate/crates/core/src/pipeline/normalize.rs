use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// Frozen per-modality affine normalization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormStats {
    pub mean: f64,
    pub std: f64,
}

impl NormStats {
    pub const IDENTITY: NormStats = NormStats { mean: 0.0, std: 1.0 };
}

/// Single-pass (Welford) accumulator for mean and population std.
#[derive(Debug, Clone, Default)]
pub struct RunningStats {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push_slice(&mut self, values: &[f32]) {
        for &v in values {
            self.count += 1;
            let v = v as f64;
            let delta = v - self.mean;
            self.mean += delta / self.count as f64;
            self.m2 += delta * (v - self.mean);
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    #[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must be rejected as well
    pub fn finish(&self) -> Result<NormStats> {
        if self.count == 0 {
            return Err(Error::invalid("no samples for normalization statistics"));
        }
        let std = num_traits::Float::sqrt(self.m2 / self.count as f64);
        if !(std > 0.0) {
            return Err(Error::invalid("normalization data has zero spread"));
        }
        Ok(NormStats { mean: self.mean, std })
    }
}

/// `(t − mean) / std`.
pub fn normalize(t: &Tensor<f32>, stats: NormStats) -> Result<Tensor<f32>> {
    if !(stats.std > 0.0 && stats.std.is_finite()) {
        return Err(Error::invalid("normalization std must be positive"));
    }
    let inv = 1.0 / stats.std;
    Ok(t.map(|&x| ((x as f64 - stats.mean) * inv) as f32))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let t = Tensor::full(&[4], 3.0f32);
        let z = normalize(&t, NormStats { mean: 3.0, std: 2.0 }).unwrap();
        assert!(z.data().iter().all(|&v| v == 0.0));
        let t = Tensor::new(&[3], alloc::vec![1.0f32, -2.0, 0.5]).unwrap();
        assert_eq!(normalize(&t, NormStats::IDENTITY).unwrap(), t);
        assert!(normalize(&t, NormStats { mean: 0.0, std: 0.0 }).is_err());
    }

    #[test]
    fn fitted_stats_standardize_their_data() {
        let values: alloc::vec::Vec<f32> = (0..5000).map(|i| ((i as f32) * 0.37).sin() * 4.0 + 7.0).collect();
        let mut acc = RunningStats::default();
        acc.push_slice(&values[..1234]);
        acc.push_slice(&values[1234..]);
        let stats = acc.finish().unwrap();
        let z = normalize(&Tensor::new(&[5000], values).unwrap(), stats).unwrap();
        let n = z.len() as f64;
        let mean = z.data().iter().map(|&v| v as f64).sum::<f64>() / n;
        let var = z.data().iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n;
        assert!(mean.abs() < 1e-3 && (var.sqrt() - 1.0).abs() < 1e-3);
        assert!(RunningStats::default().finish().is_err());
    }
}
