use alloc::vec;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::numerics::{hann_window, FftPlan, Tensor};
use crate::simulate::{PolarGrid, RadarConfig, ScaCube};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Window {
    None,
    #[default]
    Hann,
}

/// Linear-magnitude range × Doppler × azimuth cube. Doppler and azimuth
/// are fftshift-centred: Doppler bin `d` is `(d − n_chirps/2)·vel_res`,
/// azimuth bin `a` is at `sin(az) = 2·(a − n_az/2)/n_az`.
#[derive(Debug, Clone, PartialEq)]
pub struct RdaCube {
    pub data: Tensor<f32>,
    pub config: RadarConfig,
}

impl RdaCube {
    pub fn dims(&self) -> (usize, usize, usize) {
        let s = self.data.shape();
        (s[0], s[1], s[2])
    }
}

type C32 = Complex<f32>;

/// FFTs along samples, chirps and (zero-padded) virtual channels, then
/// magnitude. With `tdm_compensate` on a TDM config, the later transmitters'
/// channels are de-rotated by their Doppler-dependent slot phase before the
/// azimuth transform.
pub fn sca_to_rda(sca: &ScaCube, window: Window, tdm_compensate: bool) -> Result<RdaCube> {
    let cfg = &sca.config;
    let (ns, nc, nv) = (cfg.n_samples, cfg.n_chirps, cfg.n_virtual);
    if sca.data.shape() != [ns, nc, nv] {
        return Err(Error::shape("sca cube", &[ns, nc, nv], sca.data.shape()));
    }
    let n_az = PolarGrid::AZIMUTH_FFT.max(nv.next_power_of_two());

    let (w_fast, w_slow) = match window {
        Window::None => (vec![1.0f32; ns], vec![1.0f32; nc]),
        Window::Hann => (hann_window::<f32>(ns)?, hann_window::<f32>(nc)?),
    };
    let mut work: alloc::vec::Vec<C32> = sca.data.data().to_vec();
    for n in 0..ns {
        for m in 0..nc {
            let w = w_fast[n] * w_slow[m];
            for v in &mut work[(n * nc + m) * nv..(n * nc + m + 1) * nv] {
                *v = v.scale(w);
            }
        }
    }

    // range: lanes along samples
    let plan = FftPlan::<f32>::new(ns)?;
    let mut lane = vec![C32::new(0.0, 0.0); ns];
    for j in 0..nc * nv {
        for n in 0..ns {
            lane[n] = work[n * nc * nv + j];
        }
        plan.process(&mut lane, false);
        for n in 0..ns {
            work[n * nc * nv + j] = lane[n];
        }
    }

    // Doppler: lanes along chirps, written back fftshifted
    let plan = FftPlan::<f32>::new(nc)?;
    let mut lane = vec![C32::new(0.0, 0.0); nc];
    let half_c = nc / 2;
    for n in 0..ns {
        for k in 0..nv {
            let base = n * nc * nv + k;
            for m in 0..nc {
                lane[m] = work[base + m * nv];
            }
            plan.process(&mut lane, false);
            for m in 0..nc {
                work[base + ((m + half_c) % nc) * nv] = lane[m];
            }
        }
    }

    if tdm_compensate && cfg.tdm_mode {
        for m in 0..nc {
            let d = m as f64 - half_c as f64;
            for k in cfg.n_rx..nv {
                let slot = (k / cfg.n_rx) as f64;
                let phase = -core::f64::consts::PI * d * slot / nc as f64;
                let (s, c) = (num_traits::Float::sin(phase), num_traits::Float::cos(phase));
                let rot = C32::new(c as f32, s as f32);
                for n in 0..ns {
                    work[(n * nc + m) * nv + k] *= rot;
                }
            }
        }
    }

    // azimuth: zero-pad channels to n_az, transform, shift, magnitude
    let plan = FftPlan::<f32>::new(n_az)?;
    let mut lane = vec![C32::new(0.0, 0.0); n_az];
    let half_a = n_az / 2;
    let mut out = vec![0.0f32; ns * nc * n_az];
    for n in 0..ns {
        for m in 0..nc {
            let src = (n * nc + m) * nv;
            lane[..nv].copy_from_slice(&work[src..src + nv]);
            lane[nv..].fill(C32::new(0.0, 0.0));
            plan.process(&mut lane, false);
            let dst = &mut out[(n * nc + m) * n_az..(n * nc + m + 1) * n_az];
            for (a, v) in lane.iter().enumerate() {
                dst[(a + half_a) % n_az] = num_traits::Float::hypot(v.re, v.im);
            }
        }
    }
    Ok(RdaCube {
        data: Tensor::new(&[ns, nc, n_az], out)?,
        config: *cfg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{fft_axis, fftshift_axis, magnitude};
    use crate::simulate::{default_config, predict_bins, synthesize_frame, Scatterer, Scene};

    fn argmax(t: &Tensor<f32>) -> [usize; 3] {
        let (i, _) = t
            .data()
            .iter()
            .enumerate()
            .fold((0, f32::MIN), |best, (i, &v)| if v > best.1 { (i, v) } else { best });
        let s = t.shape();
        [i / (s[1] * s[2]), (i / s[2]) % s[1], i % s[2]]
    }

    fn scene_with(s: Scatterer) -> Scene {
        let mut scene = Scene::empty(&default_config(), 0);
        scene.scatterers.push(s);
        scene
    }

    #[test]
    fn boresight_peak() {
        let cfg = default_config();
        let s = Scatterer { range: 6.0, azimuth_deg: 0.0, radial_velocity: 0.0, amplitude: 1.0 };
        let cube = synthesize_frame(&scene_with(s), &cfg, 0.0, 0).unwrap();
        let rda = sca_to_rda(&cube, Window::None, false).unwrap();
        assert_eq!(rda.dims(), (128, 64, 64));
        assert_eq!(argmax(&rda.data), [50, 32, 32]);
        let b = predict_bins(&s, &cfg, 64);
        assert_eq!([b.range, b.doppler, b.azimuth], [50, 32, 32]);
    }

    #[test]
    fn zero_cube_stays_zero() {
        let cfg = default_config();
        let rda = sca_to_rda(&ScaCube::zeros(cfg, 0), Window::Hann, true).unwrap();
        assert!(rda.data.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn wrong_shape_is_rejected() {
        let cfg = default_config();
        let mut cube = ScaCube::zeros(cfg, 0);
        cube.data = Tensor::zeros(&[128, 64, 4]);
        assert!(matches!(sca_to_rda(&cube, Window::None, false), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn matches_generic_axis_transforms() {
        let cfg = default_config();
        let s = Scatterer { range: 7.7, azimuth_deg: -17.0, radial_velocity: 2.1, amplitude: 0.8 };
        let cube = synthesize_frame(&scene_with(s), &cfg, 0.05, 3).unwrap();
        let rda = sca_to_rda(&cube, Window::None, false).unwrap();
        // reference route: pad, three generic axis transforms, two shifts
        let mut padded = Tensor::zeros(&[128, 64, 64]);
        for n in 0..128 {
            for m in 0..64 {
                for k in 0..8 {
                    let v: C32 = cube.data.get(&[n, m, k]);
                    padded.set(&[n, m, k], Complex::new(v.re as f64, v.im as f64));
                }
            }
        }
        let mut t = fft_axis(&padded, 0, false).unwrap();
        t = fftshift_axis(&fft_axis(&t, 1, false).unwrap(), 1).unwrap();
        t = fftshift_axis(&fft_axis(&t, 2, false).unwrap(), 2).unwrap();
        let reference = magnitude(&t);
        let peak = reference.data().iter().cloned().fold(0.0, f64::max);
        for (a, b) in rda.data.data().iter().zip(reference.data()) {
            assert!((*a as f64 - b).abs() < 1e-4 * peak);
        }
    }
}
