use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Waveform and array parameters of the LFMCW radar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadarConfig {
    /// Hz
    pub carrier_freq: f64,
    /// m
    pub max_range: f64,
    /// m
    pub range_res: f64,
    /// m/s
    pub unambig_vel: f64,
    /// m/s
    pub vel_res: f64,
    /// Full field of view, degrees.
    pub fov_deg: f64,
    pub n_tx: usize,
    pub n_rx: usize,
    pub n_samples: usize,
    pub n_chirps: usize,
    pub n_virtual: usize,
    /// Hz, `c / (2·range_res)`.
    pub bandwidth: f64,
    /// m
    pub wavelength: f64,
    /// m, half a wavelength.
    pub element_spacing: f64,
    /// s, per TDM slot: `wavelength / (4·unambig_vel)`.
    pub chirp_duration: f64,
    /// Transmitters fire in alternating slots rather than simultaneously.
    pub tdm_mode: bool,
}

fn next_pow2_at_least(x: f64) -> usize {
    // 15 / 0.12 evaluates to 125.00000000000001; don't let that round up a bin
    let n = num_traits::Float::ceil(x - 1e-9).max(1.0) as usize;
    n.next_power_of_two()
}

impl RadarConfig {
    /// Derives bandwidth, wavelength, bin counts and timing from the
    /// headline waveform parameters.
    #[allow(clippy::too_many_arguments)]
    pub fn derive(
        carrier_freq: f64,
        max_range: f64,
        range_res: f64,
        unambig_vel: f64,
        vel_res: f64,
        fov_deg: f64,
        n_tx: usize,
        n_rx: usize,
    ) -> Result<Self> {
        let wavelength = SPEED_OF_LIGHT / carrier_freq;
        let cfg = Self {
            carrier_freq,
            max_range,
            range_res,
            unambig_vel,
            vel_res,
            fov_deg,
            n_tx,
            n_rx,
            n_samples: next_pow2_at_least(max_range / range_res),
            n_chirps: next_pow2_at_least(2.0 * unambig_vel / vel_res),
            n_virtual: n_tx * n_rx,
            bandwidth: SPEED_OF_LIGHT / (2.0 * range_res),
            wavelength,
            element_spacing: wavelength / 2.0,
            chirp_duration: wavelength / (4.0 * unambig_vel),
            tdm_mode: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_tdm(mut self, on: bool) -> Self {
        self.tdm_mode = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.carrier_freq,
            self.max_range,
            self.range_res,
            self.unambig_vel,
            self.vel_res,
            self.fov_deg,
        ];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::invalid("radar parameters must be positive and finite"));
        }
        if self.fov_deg >= 180.0 {
            return Err(Error::invalid("field of view must be below 180 degrees"));
        }
        if self.n_tx == 0 || self.n_rx == 0 || self.n_virtual != self.n_tx * self.n_rx {
            return Err(Error::invalid("n_virtual must equal n_tx * n_rx"));
        }
        if !self.n_samples.is_power_of_two() || !self.n_chirps.is_power_of_two() {
            return Err(Error::invalid("sample and chirp counts must be powers of two"));
        }
        if (self.n_samples as f64) < self.max_range / self.range_res - 1e-9 {
            return Err(Error::invalid("too few samples to cover the maximum range"));
        }
        let bw = SPEED_OF_LIGHT / (2.0 * self.range_res);
        if ((self.bandwidth - bw) / bw).abs() > 1e-9 {
            return Err(Error::invalid("bandwidth inconsistent with range resolution"));
        }
        if ((self.element_spacing - self.wavelength / 2.0) / self.wavelength).abs() > 1e-12 {
            return Err(Error::invalid("element spacing must be half a wavelength"));
        }
        Ok(())
    }

    /// Half the field of view in radians.
    pub fn half_fov(&self) -> f64 {
        self.fov_deg.to_radians() / 2.0
    }
}

/// 76 GHz, 15 m, 0.12 m, 10.5 m/s, 0.33 m/s, 90° with 2 Tx × 4 Rx.
pub fn default_config() -> RadarConfig {
    RadarConfig::derive(76e9, 15.0, 0.12, 10.5, 0.33, 90.0, 2, 4)
        .expect("built-in radar configuration is valid")
}
