//! Synthetic dataset generation and split loading.

use std::path::Path;

use openspace_core::pipeline::{
    normalize, ra_to_doa, rad_input, rda_to_ra, sca_to_rda, Modality, NormStats, RunningStats, Window,
};
use openspace_core::simulate::{
    default_config, ground_truth_mask, synthesize_frame, CartesianGrid, GridGeometry, LabelDomain, ParkingLot,
    PolarGrid, RadarConfig,
};
use openspace_core::numerics::DEFAULT_LOG_EPSILON;
use openspace_core::Tensor;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::container::{read_container, write_container, FrameRecord, Payload, PayloadData, PayloadKind};
use crate::error::{Error, Result};
use crate::manifest::{DatasetManifest, SequenceInfo, Split};

/// Sequences held out for evaluation (the last ones).
pub const EVAL_SEQUENCES: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetOptions {
    pub seed: u64,
    pub n_sequences: usize,
    pub frames_per_sequence: usize,
    pub noise_std: f64,
    pub window: Window,
    pub tdm: bool,
}

impl Default for DatasetOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            n_sequences: 11,
            frames_per_sequence: 32,
            noise_std: 0.01,
            window: Window::Hann,
            tdm: false,
        }
    }
}

impl DatasetOptions {
    pub fn radar_config(&self) -> RadarConfig {
        default_config().with_tdm(self.tdm)
    }
}

/// World seed of sequence `i`; distinct for distinct `i` within one dataset.
pub fn scene_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_mul(0x1_0000).wrapping_add(i as u64)
}

/// All payloads of one simulated frame.
pub fn synthesize_record(
    lot: &ParkingLot,
    frame: u32,
    frame_id: u32,
    sequence_id: u16,
    opts: &DatasetOptions,
) -> Result<FrameRecord> {
    let cfg = opts.radar_config();
    let polar = PolarGrid::from_config(&cfg);
    let cart = CartesianGrid::DEFAULT;
    let scene = lot.scene_at(frame, &cfg);
    let noise_seed = scene.seed ^ 0x6e6f_6973_6500_0000;
    let sca = synthesize_frame(&scene, &cfg, opts.noise_std, noise_seed)?;
    let rda = sca_to_rda(&sca, opts.window, opts.tdm)?;
    let ra = rda_to_ra(&rda, &polar, DEFAULT_LOG_EPSILON)?;
    let rad = rad_input(&rda, &polar, DEFAULT_LOG_EPSILON)?;
    let doa = ra_to_doa(&ra, &cart, &cfg, DEFAULT_LOG_EPSILON.ln() as f32);
    let mask = |g: GridGeometry| {
        let m = ground_truth_mask(&scene, g);
        let (h, w) = m.dims();
        Tensor::new(&[h, w], m.labels)
    };
    let payloads = vec![
        Payload { kind: PayloadKind::Rad, data: PayloadData::F32(rad) },
        Payload { kind: PayloadKind::Ra, data: PayloadData::F32(ra.data) },
        Payload { kind: PayloadKind::Doa, data: PayloadData::F32(doa.data) },
        Payload { kind: PayloadKind::MaskPolar, data: PayloadData::U8(mask(GridGeometry::Polar(polar))?) },
        Payload { kind: PayloadKind::MaskCart, data: PayloadData::U8(mask(GridGeometry::Cartesian(cart))?) },
    ];
    Ok(FrameRecord {
        frame_id,
        sequence_id,
        payloads,
    })
}

/// Input shape `[h, w, c]` and label grid `(h, w)` of a modality/label
/// pairing under the built-in radar configuration.
pub fn pairing_geometry(modality: Modality, labels: LabelDomain) -> ([usize; 3], (usize, usize)) {
    let cfg = default_config();
    let polar = PolarGrid::from_config(&cfg);
    let cart = CartesianGrid::DEFAULT;
    let input = match modality {
        Modality::Rad => [polar.n_range, polar.width, cfg.n_chirps],
        Modality::Ra => [polar.n_range, polar.width, 1],
        Modality::Doa => [cart.rows, cart.cols, 1],
    };
    let label = match labels {
        LabelDomain::Polar => (polar.n_range, polar.width),
        LabelDomain::Cartesian => (cart.rows, cart.cols),
    };
    (input, label)
}

fn input_kind(m: Modality) -> PayloadKind {
    match m {
        Modality::Rad => PayloadKind::Rad,
        Modality::Ra => PayloadKind::Ra,
        Modality::Doa => PayloadKind::Doa,
    }
}

fn mask_kind(d: LabelDomain) -> PayloadKind {
    match d {
        LabelDomain::Polar => PayloadKind::MaskPolar,
        LabelDomain::Cartesian => PayloadKind::MaskCart,
    }
}

/// Simulates every sequence into `dir` (one RSEG file each) and writes the
/// manifest with training-split normalization statistics.
pub fn build_synthetic_dataset(dir: &Path, opts: &DatasetOptions) -> Result<DatasetManifest> {
    if opts.n_sequences < 3 {
        return Err(Error::Config(format!("need at least 3 sequences, got {}", opts.n_sequences)));
    }
    if opts.frames_per_sequence == 0 || opts.n_sequences > u16::MAX as usize {
        return Err(Error::Config("sequence layout out of range".into()));
    }
    std::fs::create_dir_all(dir).map_err(Error::io(dir))?;
    let mut stats: [RunningStats; 3] = Default::default();
    let mut sequences = Vec::with_capacity(opts.n_sequences);
    for i in 0..opts.n_sequences {
        let split = if i + EVAL_SEQUENCES >= opts.n_sequences { Split::Eval } else { Split::Train };
        let seed = scene_seed(opts.seed, i);
        let lot = ParkingLot::random(seed);
        let mut records = Vec::with_capacity(opts.frames_per_sequence);
        for f in 0..opts.frames_per_sequence {
            let frame_id = (i * opts.frames_per_sequence + f) as u32;
            let rec = synthesize_record(&lot, f as u32, frame_id, i as u16, opts)?;
            if split == Split::Train {
                for (k, m) in Modality::ALL.iter().enumerate() {
                    if let Some(PayloadData::F32(t)) = rec.payload(input_kind(*m)) {
                        stats[k].push_slice(t.data());
                    }
                }
            }
            records.push(rec);
        }
        let file = format!("seq_{i:02}.rseg");
        write_container(&records, &dir.join(&file))?;
        sequences.push(SequenceInfo {
            id: i as u16,
            file,
            frames: opts.frames_per_sequence,
            split,
            scene_seed: seed,
        });
    }
    let manifest = DatasetManifest {
        seed: opts.seed,
        noise_std: opts.noise_std,
        window: opts.window,
        tdm: opts.tdm,
        sequences,
        stats: [stats[0].finish()?, stats[1].finish()?, stats[2].finish()?],
    };
    manifest.save(dir)?;
    Ok(manifest)
}

/// One split of the dataset for a single (input, label) pairing, inputs
/// normalized and shaped `[h, w, c]`.
#[derive(Debug, Clone)]
pub struct SplitData {
    pub modality: Modality,
    pub labels: LabelDomain,
    pub inputs: Vec<Tensor<f32>>,
    pub masks: Vec<Vec<u8>>,
    pub frame_ids: Vec<u32>,
    pub sequence_ids: Vec<u16>,
    pub input_shape: [usize; 3],
    pub label_hw: (usize, usize),
}

fn as_hwc(t: Tensor<f32>) -> Result<Tensor<f32>> {
    match t.shape().len() {
        3 => Ok(t),
        2 => {
            let (h, w) = (t.shape()[0], t.shape()[1]);
            Ok(t.reshape(&[h, w, 1])?)
        }
        _ => Err(Error::InvalidRecord(format!("input payload of shape {:?}", t.shape()))),
    }
}

pub fn load_split(
    dir: &Path,
    manifest: &DatasetManifest,
    split: Split,
    modality: Modality,
    labels: LabelDomain,
) -> Result<SplitData> {
    load_split_with(dir, manifest, split, modality, labels, manifest.stats_for(modality))
}

/// Like [`load_split`] with explicit normalization statistics.
pub fn load_split_with(
    dir: &Path,
    manifest: &DatasetManifest,
    split: Split,
    modality: Modality,
    labels: LabelDomain,
    stats: NormStats,
) -> Result<SplitData> {
    if !modality.supports(labels) {
        return Err(Error::Config(format!("{modality} input has no {labels} labels")));
    }
    let mut out = SplitData {
        modality,
        labels,
        inputs: Vec::new(),
        masks: Vec::new(),
        frame_ids: Vec::new(),
        sequence_ids: Vec::new(),
        input_shape: [0; 3],
        label_hw: (0, 0),
    };
    for seq in manifest.sequences_in(split) {
        for rec in read_container(&dir.join(&seq.file))? {
            let Some(PayloadData::F32(x)) = rec.payload(input_kind(modality)) else {
                return Err(Error::MissingModality(modality.to_string()));
            };
            let Some(PayloadData::U8(m)) = rec.payload(mask_kind(labels)) else {
                return Err(Error::MissingModality(format!("{labels} mask")));
            };
            let x = as_hwc(normalize(x, stats)?)?;
            let shape = [x.shape()[0], x.shape()[1], x.shape()[2]];
            let hw = (m.shape()[0], m.shape().get(1).copied().unwrap_or(1));
            if out.inputs.is_empty() {
                out.input_shape = shape;
                out.label_hw = hw;
            } else if shape != out.input_shape || hw != out.label_hw {
                return Err(Error::InvalidRecord(format!("frame {} has inconsistent geometry", rec.frame_id)));
            }
            out.inputs.push(x);
            out.masks.push(m.data().to_vec());
            out.frame_ids.push(rec.frame_id);
            out.sequence_ids.push(rec.sequence_id);
        }
    }
    Ok(out)
}

/// A stacked mini-batch: input `[n, h, w, c]` and labels in NHW order.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub input: Tensor<f32>,
    pub labels: Vec<u8>,
    pub frame_ids: Vec<u32>,
}

impl SplitData {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// Frames in order, or shuffled by `shuffle_seed`.
    pub fn order(&self, shuffle_seed: Option<u64>) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        if let Some(seed) = shuffle_seed {
            idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        }
        idx
    }

    pub fn batch(&self, indices: &[usize]) -> Result<Batch> {
        let [h, w, c] = self.input_shape;
        let mut data = Vec::with_capacity(indices.len() * h * w * c);
        let mut labels = Vec::with_capacity(indices.len() * self.label_hw.0 * self.label_hw.1);
        for &i in indices {
            data.extend_from_slice(self.inputs[i].data());
            labels.extend_from_slice(&self.masks[i]);
        }
        Ok(Batch {
            input: Tensor::new(&[indices.len(), h, w, c], data)?,
            labels,
            frame_ids: indices.iter().map(|&i| self.frame_ids[i]).collect(),
        })
    }

    /// One pass over the split; the final batch may be short.
    pub fn batches(&self, batch_size: usize, shuffle_seed: Option<u64>) -> BatchIter<'_> {
        BatchIter {
            data: self,
            order: self.order(shuffle_seed),
            batch_size: batch_size.max(1),
            at: 0,
        }
    }
}

pub struct BatchIter<'a> {
    data: &'a SplitData,
    order: Vec<usize>,
    batch_size: usize,
    at: usize,
}

impl Iterator for BatchIter<'_> {
    type Item = Batch;

    fn next(&mut self) -> Option<Batch> {
        if self.at >= self.order.len() {
            return None;
        }
        let end = (self.at + self.batch_size).min(self.order.len());
        let b = self.data.batch(&self.order[self.at..end]).expect("geometry checked at load");
        self.at = end;
        Some(b)
    }
}
