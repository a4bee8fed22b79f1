use std::fmt::Write as _;
use std::path::PathBuf;

use openspace_core::models::Arch;
use openspace_core::pipeline::{Modality, Window};
use openspace_core::simulate::LabelDomain;

use crate::error::{Error, Result};
use crate::kv::KvMap;
use crate::manifest::{parse_on_off, parse_window};

/// One experiment: which data, which network, how to train it.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub modality: Modality,
    pub label_domain: LabelDomain,
    pub arch: Arch,
    pub lr: f64,
    pub steps: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub dataset: PathBuf,
    pub window: Window,
    pub tdm: bool,
    /// Steps between evaluations (and checkpoint candidates).
    pub eval_every: usize,
    /// Dataset layout used by `simulate`.
    pub sequences: usize,
    pub frames_per_sequence: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            modality: Modality::Ra,
            label_domain: LabelDomain::Polar,
            arch: Arch::FcnTiny,
            lr: 0.005,
            steps: 3000,
            batch_size: 8,
            seed: 0,
            dataset: PathBuf::from("data"),
            window: Window::Hann,
            tdm: false,
            eval_every: 250,
            sequences: 11,
            frames_per_sequence: 32,
        }
    }
}

impl ExperimentConfig {
    /// Sets one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |e: &dyn std::fmt::Display| Error::Config(format!("{key}: {e}"));
        match key {
            "modality" => self.modality = value.parse().map_err(|e| bad(&e))?,
            "label_domain" => self.label_domain = value.parse().map_err(|e| bad(&e))?,
            "arch" => self.arch = value.parse().map_err(|e| bad(&e))?,
            "lr" => self.lr = value.parse().map_err(|e| bad(&e))?,
            "steps" => self.steps = value.parse().map_err(|e| bad(&e))?,
            "batch_size" => self.batch_size = value.parse().map_err(|e| bad(&e))?,
            "seed" => self.seed = value.parse().map_err(|e| bad(&e))?,
            "dataset" => self.dataset = PathBuf::from(value),
            "window" => self.window = parse_window(value)?,
            "tdm" => self.tdm = parse_on_off(value)?,
            "eval_every" => self.eval_every = value.parse().map_err(|e| bad(&e))?,
            "sequences" => self.sequences = value.parse().map_err(|e| bad(&e))?,
            "frames_per_sequence" => self.frames_per_sequence = value.parse().map_err(|e| bad(&e))?,
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Defaults overlaid with every pair in `text`.
    pub fn parse(text: &str) -> Result<Self> {
        let kv = KvMap::parse(text)?;
        let mut cfg = Self::default();
        for k in kv.keys() {
            cfg.set(k, kv.get_str(k).expect("listed key"))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "modality={}", self.modality);
        let _ = writeln!(s, "label_domain={}", self.label_domain);
        let _ = writeln!(s, "arch={}", self.arch);
        let _ = writeln!(s, "lr={:?}", self.lr);
        let _ = writeln!(s, "steps={}", self.steps);
        let _ = writeln!(s, "batch_size={}", self.batch_size);
        let _ = writeln!(s, "seed={}", self.seed);
        let _ = writeln!(s, "dataset={}", self.dataset.display());
        let _ = writeln!(
            s,
            "window={}",
            match self.window {
                Window::None => "none",
                Window::Hann => "hann",
            }
        );
        let _ = writeln!(s, "tdm={}", if self.tdm { "on" } else { "off" });
        let _ = writeln!(s, "eval_every={}", self.eval_every);
        let _ = writeln!(s, "sequences={}", self.sequences);
        let _ = writeln!(s, "frames_per_sequence={}", self.frames_per_sequence);
        s
    }

    pub fn validate(&self) -> Result<()> {
        if !self.modality.supports(self.label_domain) {
            return Err(Error::Config(format!(
                "{} input requires cartesian labels",
                self.modality
            )));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config("lr must be positive".into()));
        }
        if self.batch_size < 2 {
            return Err(Error::Config("batch_size must be at least 2 (batch norm)".into()));
        }
        if self.eval_every == 0 {
            return Err(Error::Config("eval_every must be positive".into()));
        }
        if self.sequences < 3 {
            return Err(Error::Config(format!("need at least 3 sequences, got {}", self.sequences)));
        }
        if self.frames_per_sequence == 0 {
            return Err(Error::Config("frames_per_sequence must be positive".into()));
        }
        Ok(())
    }
}
