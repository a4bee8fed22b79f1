use std::fmt::Write as _;
use std::path::Path;

use openspace_core::pipeline::{Modality, NormStats, Window};

use crate::error::{Error, Result};
use crate::kv::KvMap;

pub const MANIFEST_FILE: &str = "manifest.txt";
const FORMAT: &str = "radar-openspace-dataset/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Eval,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Eval => "eval",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "eval" => Ok(Split::Eval),
            other => Err(Error::Config(format!("unknown split `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceInfo {
    pub id: u16,
    pub file: String,
    pub frames: usize,
    pub split: Split,
    /// Seed of the simulated world this sequence traverses.
    pub scene_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub seed: u64,
    pub noise_std: f64,
    pub window: Window,
    pub tdm: bool,
    pub sequences: Vec<SequenceInfo>,
    /// Training-split statistics, indexed like [`Modality::ALL`].
    pub stats: [NormStats; 3],
}

fn window_str(w: Window) -> &'static str {
    match w {
        Window::None => "none",
        Window::Hann => "hann",
    }
}

pub fn parse_window(s: &str) -> Result<Window> {
    match s {
        "none" => Ok(Window::None),
        "hann" => Ok(Window::Hann),
        other => Err(Error::Config(format!("unknown window `{other}`"))),
    }
}

pub fn parse_on_off(s: &str) -> Result<bool> {
    match s {
        "on" => Ok(true),
        "off" => Ok(false),
        other => Err(Error::Config(format!("expected on|off, got `{other}`"))),
    }
}

fn modality_index(m: Modality) -> usize {
    Modality::ALL.iter().position(|&x| x == m).expect("listed")
}

impl DatasetManifest {
    pub fn stats_for(&self, m: Modality) -> NormStats {
        self.stats[modality_index(m)]
    }

    pub fn sequences_in(&self, split: Split) -> impl Iterator<Item = &SequenceInfo> {
        self.sequences.iter().filter(move |s| s.split == split)
    }

    pub fn frame_count(&self, split: Split) -> usize {
        self.sequences_in(split).map(|s| s.frames).sum()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "format={FORMAT}");
        let _ = writeln!(out, "seed={}", self.seed);
        let _ = writeln!(out, "noise_std={:?}", self.noise_std);
        let _ = writeln!(out, "window={}", window_str(self.window));
        let _ = writeln!(out, "tdm={}", if self.tdm { "on" } else { "off" });
        let _ = writeln!(out, "sequences={}", self.sequences.len());
        for (i, s) in self.sequences.iter().enumerate() {
            let _ = writeln!(out, "sequence.{i}.id={}", s.id);
            let _ = writeln!(out, "sequence.{i}.file={}", s.file);
            let _ = writeln!(out, "sequence.{i}.frames={}", s.frames);
            let _ = writeln!(out, "sequence.{i}.split={}", s.split.as_str());
            let _ = writeln!(out, "sequence.{i}.scene_seed={}", s.scene_seed);
        }
        for m in Modality::ALL {
            let st = self.stats_for(m);
            let _ = writeln!(out, "stats.{m}.mean={:?}", st.mean);
            let _ = writeln!(out, "stats.{m}.std={:?}", st.std);
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let kv = KvMap::parse(text)?;
        let format: String = kv.require("format")?;
        if format != FORMAT {
            return Err(Error::Manifest {
                line: 0,
                msg: format!("unsupported format `{format}`"),
            });
        }
        let n: usize = kv.require("sequences")?;
        let mut sequences = Vec::with_capacity(n);
        for i in 0..n {
            let p = |k: &str| format!("sequence.{i}.{k}");
            sequences.push(SequenceInfo {
                id: kv.require(&p("id"))?,
                file: kv.require(&p("file"))?,
                frames: kv.require(&p("frames"))?,
                split: kv.require(&p("split"))?,
                scene_seed: kv.require(&p("scene_seed"))?,
            });
        }
        let mut stats = [NormStats::IDENTITY; 3];
        for m in Modality::ALL {
            stats[modality_index(m)] = NormStats {
                mean: kv.require(&format!("stats.{m}.mean"))?,
                std: kv.require(&format!("stats.{m}.std"))?,
            };
        }
        Ok(Self {
            seed: kv.require("seed")?,
            noise_std: kv.require("noise_std")?,
            window: parse_window(&kv.require::<String>("window")?)?,
            tdm: parse_on_off(&kv.require::<String>("tdm")?)?,
            sequences,
            stats,
        })
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(Error::io(&path))?;
        Self::parse(&text)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        std::fs::write(&path, self.render()).map_err(Error::io(&path))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_parse_round_trip() {
        let m = DatasetManifest {
            seed: 9,
            noise_std: 0.01,
            window: Window::Hann,
            tdm: true,
            sequences: vec![SequenceInfo {
                id: 0,
                file: "seq_00.rseg".into(),
                frames: 4,
                split: Split::Eval,
                scene_seed: 123,
            }],
            stats: [
                NormStats { mean: 1.0 / 3.0, std: 0.1 },
                NormStats { mean: -2.5, std: 1e-7 },
                NormStats::IDENTITY,
            ],
        };
        assert_eq!(DatasetManifest::parse(&m.render()).unwrap(), m);
        assert!(DatasetManifest::parse("format=other/1").is_err());
    }
}
