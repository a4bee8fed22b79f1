use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex;
#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::config::RadarConfig;
use super::scene::{Scatterer, Scene};
use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// Raw ADC frame, `[n_samples, n_chirps, n_virtual]`, virtual channel
/// `tx·n_rx + rx`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaCube {
    pub data: Tensor<Complex<f32>>,
    pub config: RadarConfig,
    pub frame_id: u32,
}

impl ScaCube {
    pub fn zeros(config: RadarConfig, frame_id: u32) -> Self {
        Self {
            data: Tensor::zeros(&[config.n_samples, config.n_chirps, config.n_virtual]),
            config,
            frame_id,
        }
    }
}

fn tone(len: usize, cycles_per_step: f64) -> Vec<Complex<f64>> {
    (0..len)
        .map(|i| Complex::from_polar(1.0, core::f64::consts::TAU * cycles_per_step * i as f64))
        .collect()
}

type Phasors = (Vec<Complex<f64>>, Vec<Complex<f64>>, Vec<Complex<f64>>);

/// Separable beat-signal phases of one scatterer along samples, chirps and
/// virtual channels.
fn steering(s: &Scatterer, cfg: &RadarConfig) -> Phasors {
    let range_bin = s.range / cfg.range_res;
    let doppler_bin = s.radial_velocity / cfg.vel_res;
    let spatial = cfg.element_spacing / cfg.wavelength * s.azimuth_deg.to_radians().sin();
    let fast = tone(cfg.n_samples, range_bin / cfg.n_samples as f64);
    let slow = tone(cfg.n_chirps, doppler_bin / cfg.n_chirps as f64);
    let mut array = tone(cfg.n_virtual, spatial);
    if cfg.tdm_mode {
        // later transmitters fire one slot after the previous one
        for (k, a) in array.iter_mut().enumerate() {
            let slot = (k / cfg.n_rx) as f64;
            let extra = core::f64::consts::TAU * doppler_bin * slot / (2.0 * cfg.n_chirps as f64);
            *a *= Complex::from_polar(1.0, extra);
        }
    }
    (fast, slow, array)
}

/// Point-target LFMCW frame plus circular complex Gaussian noise with total
/// variance `noise_std²` per element.
pub fn synthesize_frame(
    scene: &Scene,
    cfg: &RadarConfig,
    noise_std: f64,
    noise_seed: u64,
) -> Result<ScaCube> {
    if !(noise_std >= 0.0 && noise_std.is_finite()) {
        return Err(Error::invalid("noise_std must be finite and non-negative"));
    }
    let (nc, nv) = (cfg.n_chirps, cfg.n_virtual);
    let mut cube = ScaCube::zeros(*cfg, 0);
    let data = cube.data.data_mut();
    let mut plane = vec![Complex::new(0.0f64, 0.0); nc * nv];
    for s in &scene.scatterers {
        let (fast, slow, array) = steering(s, cfg);
        for (m, b) in slow.iter().enumerate() {
            for (k, c) in array.iter().enumerate() {
                plane[m * nv + k] = b * c * s.amplitude;
            }
        }
        for (n, a) in fast.iter().enumerate() {
            let row = &mut data[n * nc * nv..(n + 1) * nc * nv];
            for (out, p) in row.iter_mut().zip(&plane) {
                let v = a * p;
                *out += Complex::new(v.re as f32, v.im as f32);
            }
        }
    }
    if noise_std > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
        let normal = Normal::new(0.0, noise_std / core::f64::consts::SQRT_2)
            .map_err(|_| Error::invalid("bad noise level"))?;
        for v in data.iter_mut() {
            let re = normal.sample(&mut rng);
            let im = normal.sample(&mut rng);
            *v += Complex::new(re as f32, im as f32);
        }
    }
    Ok(cube)
}

/// Range, Doppler and azimuth bin where a scatterer should peak in the
/// fftshifted cube.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BinTriple {
    pub range: usize,
    pub doppler: usize,
    pub azimuth: usize,
}

/// Expected peak location for a zero-padded azimuth FFT of length `n_az`.
pub fn predict_bins(s: &Scatterer, cfg: &RadarConfig, n_az: usize) -> BinTriple {
    let wrap = |center: usize, offset: f64, n: usize| -> usize {
        ((center as i64 + offset.round() as i64).rem_euclid(n as i64)) as usize
    };
    let sin_az = s.azimuth_deg.to_radians().sin();
    BinTriple {
        range: (s.range / cfg.range_res).round() as usize,
        doppler: wrap(cfg.n_chirps / 2, s.radial_velocity / cfg.vel_res, cfg.n_chirps),
        azimuth: wrap(n_az / 2, n_az as f64 * sin_az / 2.0, n_az),
    }
}
