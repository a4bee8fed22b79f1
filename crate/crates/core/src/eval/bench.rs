use std::string::String;
use std::time::Instant;
use std::vec::Vec;

use crate::error::Result;
use crate::nn::{Layer, Mode, ParamStore};
use crate::numerics::{Real, Tensor};

#[derive(Debug, Clone, PartialEq)]
pub struct FpsReport {
    /// Frames per second at the median single-frame latency.
    pub median_fps: f64,
    pub stddev_fps: f64,
    pub iters: usize,
    pub hardware: String,
}

/// Single-frame inference throughput on a fixed deterministic input.
pub fn benchmark_fps<T: Real, L: Layer<T> + ?Sized>(
    model: &mut L,
    ps: &ParamStore<T>,
    input_shape: &[usize],
    warmup: usize,
    iters: usize,
) -> Result<FpsReport> {
    let x = Tensor::from_fn(input_shape, |i| T::cst(((i * 7919) % 1000) as f64 / 1000.0));
    for _ in 0..warmup {
        model.forward(ps, &x, Mode::Infer)?;
    }
    let mut times: Vec<f64> = Vec::with_capacity(iters.max(1));
    for _ in 0..iters.max(1) {
        let t = Instant::now();
        let y = model.forward(ps, &x, Mode::Infer)?;
        core::hint::black_box(&y);
        times.push(t.elapsed().as_secs_f64().max(1e-9));
    }
    times.sort_by(|a, b| a.total_cmp(b));
    let n = times.len();
    let median = if n % 2 == 1 {
        times[n / 2]
    } else {
        0.5 * (times[n / 2 - 1] + times[n / 2])
    };
    let fps: Vec<f64> = times.iter().map(|t| 1.0 / t).collect();
    let mean = fps.iter().sum::<f64>() / n as f64;
    let var = fps.iter().map(|f| (f - mean) * (f - mean)).sum::<f64>() / n as f64;
    Ok(FpsReport {
        median_fps: 1.0 / median,
        stddev_fps: var.sqrt(),
        iters: n,
        hardware: hardware_descriptor(),
    })
}

/// CPU model (from `/proc/cpuinfo` when readable), architecture and core count.
pub fn hardware_descriptor() -> String {
    let model = std::fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|s| {
            s.lines()
                .find(|l| l.starts_with("model name"))
                .and_then(|l| l.split(':').nth(1))
                .map(|m| m.trim().to_string())
        })
        .unwrap_or_else(|| "unknown cpu".into());
    let cores = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    std::format!("{model} ({}, {cores} cores)", std::env::consts::ARCH)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Relu6;

    #[test]
    fn reports_positive_finite_fps() {
        let ps = ParamStore::<f32>::new();
        let r = benchmark_fps(&mut Relu6::new(), &ps, &[1, 16, 16, 2], 2, 9).unwrap();
        assert!(r.median_fps.is_finite() && r.median_fps > 0.0);
        assert_eq!(r.iters, 9);
        assert!(!r.hardware.is_empty());
    }
}
