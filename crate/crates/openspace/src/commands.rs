//! The operations behind each subcommand. Every function is deterministic
//! given its configuration and inputs; printing is left to the caller.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use openspace_core::eval::{benchmark_fps, hardware_descriptor, reference_mean_iou, ConfusionMatrix, IouReport, TABLE_ROWS};
use openspace_core::models::Arch;
use openspace_core::pipeline::Modality;
use openspace_core::simulate::LabelDomain;

use crate::checkpoint::{load_checkpoint, save_checkpoint};
use crate::config::ExperimentConfig;
use crate::dataset::{build_synthetic_dataset, load_split, pairing_geometry, DatasetOptions, SplitData};
use crate::error::{Error, Result};
use crate::manifest::{DatasetManifest, Split};
use crate::pgm::{masked_prediction, write_pgm};
use crate::train::{train, Model, TrainOptions, TrainReport};

pub const CHECKPOINT_FILE: &str = "checkpoint.rsck";
pub const TRAIN_LOG_FILE: &str = "train.log";
/// Environment variable capping the number of concurrent matrix cells.
pub const THREADS_ENV: &str = "RADAR_OPENSPACE_THREADS";

impl ExperimentConfig {
    pub fn dataset_options(&self) -> DatasetOptions {
        DatasetOptions {
            seed: self.seed,
            n_sequences: self.sequences,
            frames_per_sequence: self.frames_per_sequence,
            window: self.window,
            tdm: self.tdm,
            ..DatasetOptions::default()
        }
    }

    pub fn train_options(&self) -> TrainOptions {
        TrainOptions {
            arch: self.arch,
            steps: self.steps,
            batch_size: self.batch_size,
            lr: self.lr,
            seed: self.seed,
            eval_every: self.eval_every,
        }
    }
}

/// Synthesizes the dataset described by `cfg` into `out`.
pub fn cmd_simulate(cfg: &ExperimentConfig, out: &Path) -> Result<DatasetManifest> {
    cfg.validate()?;
    build_synthetic_dataset(out, &cfg.dataset_options())
}

pub fn manifest_summary(dir: &Path, m: &DatasetManifest) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "dataset={}", dir.display());
    let _ = writeln!(s, "seed={}", m.seed);
    let _ = writeln!(s, "sequences={}", m.sequences.len());
    let _ = writeln!(s, "train_frames={}", m.frame_count(Split::Train));
    let _ = writeln!(s, "eval_frames={}", m.frame_count(Split::Eval));
    for (mo, st) in Modality::ALL.iter().zip(&m.stats) {
        let _ = writeln!(s, "{mo}_mean={:.6} {mo}_std={:.6}", st.mean, st.std);
    }
    s
}

fn load_pair(cfg: &ExperimentConfig) -> Result<(SplitData, SplitData)> {
    let m = DatasetManifest::load(&cfg.dataset)?;
    let tr = load_split(&cfg.dataset, &m, Split::Train, cfg.modality, cfg.label_domain)?;
    let ev = load_split(&cfg.dataset, &m, Split::Eval, cfg.modality, cfg.label_domain)?;
    Ok((tr, ev))
}

/// Trains on already loaded splits; `model` ends up with the best weights.
pub fn train_on(
    cfg: &ExperimentConfig,
    tr: &SplitData,
    ev: &SplitData,
    log: &mut dyn FnMut(&str),
) -> Result<(Model, TrainReport)> {
    cfg.validate()?;
    let mut model = Model::for_data(cfg.arch, tr, cfg.seed)?;
    let report = train(&mut model, tr, ev, &cfg.train_options(), log)?;
    Ok((model, report))
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub report: TrainReport,
    pub checkpoint: PathBuf,
    pub log: PathBuf,
}

/// Trains per `cfg`, writing the best-by-eval checkpoint and the loss log
/// into `out`.
pub fn cmd_train(cfg: &ExperimentConfig, out: &Path, echo: &mut dyn FnMut(&str)) -> Result<TrainOutcome> {
    cfg.validate()?;
    let (tr, ev) = load_pair(cfg)?;
    let mut log = String::new();
    let (model, report) = train_on(cfg, &tr, &ev, &mut |line| {
        log.push_str(line);
        log.push('\n');
        echo(line);
    })?;
    std::fs::create_dir_all(out).map_err(Error::io(out))?;
    let mut full = String::new();
    for (step, loss) in &report.losses {
        let _ = writeln!(full, "step={step} loss={loss:?}");
    }
    full.push_str(&log);
    let log_path = out.join(TRAIN_LOG_FILE);
    std::fs::write(&log_path, full).map_err(Error::io(&log_path))?;
    let ck = model.to_checkpoint(&[
        ("step", report.best_step.to_string()),
        ("eval_miou", format!("{:?}", report.best_miou)),
        ("seed", cfg.seed.to_string()),
    ]);
    let ck_path = out.join(CHECKPOINT_FILE);
    save_checkpoint(&ck_path, &ck)?;
    Ok(TrainOutcome {
        report,
        checkpoint: ck_path,
        log: log_path,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub arch: Arch,
    pub modality: Modality,
    pub labels: LabelDomain,
    pub split: Split,
    pub frames: usize,
    pub confusion: ConfusionMatrix,
    pub iou: IouReport,
}

impl EvalReport {
    pub fn render(&self) -> String {
        format!(
            "arch={} modality={} labels={} split={} frames={} iou_not_open={:.4} iou_open={:.4} mean_iou={:.4}\n",
            self.arch,
            self.modality,
            self.labels,
            self.split.as_str(),
            self.frames,
            self.iou.per_class[0],
            self.iou.per_class[1],
            self.iou.mean
        )
    }
}

/// Evaluates a checkpoint on one split of `dataset`. When `expect_arch` is
/// given it must match the checkpoint. With `dump_masks` one PGM per frame
/// is written, named by frame id.
pub fn cmd_eval(
    checkpoint: &Path,
    dataset: &Path,
    split: Split,
    expect_arch: Option<Arch>,
    dump_masks: Option<&Path>,
) -> Result<EvalReport> {
    let ck = load_checkpoint(checkpoint)?;
    let mut model = Model::from_checkpoint(&ck)?;
    if let Some(a) = expect_arch {
        if a != model.spec.arch {
            return Err(Error::ArchMismatch {
                expected: a.to_string(),
                found: model.spec.arch.to_string(),
            });
        }
    }
    let m = DatasetManifest::load(dataset)?;
    let data = load_split(dataset, &m, split, model.modality, model.labels)?;
    if data.label_hw != model.label_hw || data.input_shape[2] != model.spec.in_channels {
        return Err(Error::CheckpointMismatch("dataset geometry differs from the checkpoint".into()));
    }
    if let Some(dir) = dump_masks {
        std::fs::create_dir_all(dir).map_err(Error::io(dir))?;
    }
    let (h, w) = data.label_hw;
    let mut cm = ConfusionMatrix::default();
    for b in data.batches(8, None) {
        let pred = model.predict(&b.input)?;
        cm += openspace_core::eval::confusion(&pred, &b.labels)?;
        if let Some(dir) = dump_masks {
            for (i, id) in b.frame_ids.iter().enumerate() {
                let r = i * h * w..(i + 1) * h * w;
                let img = masked_prediction(&pred[r.clone()], &b.labels[r]);
                write_pgm(&dir.join(format!("{id:06}.pgm")), &img, h, w)?;
            }
        }
    }
    Ok(EvalReport {
        arch: model.spec.arch,
        modality: model.modality,
        labels: model.labels,
        split,
        frames: data.len(),
        iou: cm.iou()?,
        confusion: cm,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub arch: Arch,
    pub modality: Modality,
    pub params: usize,
    pub median_fps: f64,
    pub stddev_fps: f64,
    pub iters: usize,
}

pub const BENCH_WARMUP: usize = 20;
pub const BENCH_ITERS: usize = 200;

/// Single-frame inference FPS of freshly initialised networks on the
/// modality's native label grid. `arch = None` benchmarks all three.
pub fn cmd_bench(arch: Option<Arch>, modality: Modality, warmup: usize, iters: usize) -> Result<Vec<BenchRow>> {
    let archs: Vec<Arch> = match arch {
        Some(a) => vec![a],
        None => Arch::ALL.to_vec(),
    };
    let labels = modality.native_domain();
    let (input, label_hw) = pairing_geometry(modality, labels);
    archs
        .into_iter()
        .map(|a| {
            let mut m = Model::new(a, modality, labels, input[2], label_hw, 0)?;
            let params = m.param_count();
            let r = benchmark_fps(&mut m.net, &m.store, &[1, input[0], input[1], input[2]], warmup, iters)?;
            Ok(BenchRow {
                arch: a,
                modality,
                params,
                median_fps: r.median_fps,
                stddev_fps: r.stddev_fps,
                iters: r.iters,
            })
        })
        .collect()
}

/// `key=value` lines: one `hardware=` line, then one line per network.
pub fn render_bench(rows: &[BenchRow]) -> String {
    let mut s = format!("hardware={}\n", hardware_descriptor());
    for r in rows {
        let _ = writeln!(
            s,
            "arch={} modality={} params={} median_fps={:.2} stddev_fps={:.2} iters={}",
            r.arch, r.modality, r.params, r.median_fps, r.stddev_fps, r.iters
        );
    }
    s
}

/// The five input/label pairings of the results table, in order.
pub fn matrix_rows() -> [(Modality, LabelDomain); 5] {
    TABLE_ROWS.map(|r| (r.input, r.labels))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixCell {
    pub modality: Modality,
    pub labels: LabelDomain,
    pub arch: Arch,
    pub seed: u64,
    /// Eval-split mean-IoU of the best checkpoint.
    pub miou: f64,
    /// Train-split mean-IoU of the same checkpoint.
    pub train_miou: f64,
    pub report: TrainReport,
    pub log: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixReport {
    pub archs: Vec<Arch>,
    pub seeds: Vec<u64>,
    pub cells: Vec<MatrixCell>,
}

pub fn median(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

impl MatrixReport {
    /// Median eval mean-IoU over seeds for one cell.
    pub fn median(&self, modality: Modality, labels: LabelDomain, arch: Arch) -> f64 {
        let mut v: Vec<f64> = self
            .cells
            .iter()
            .filter(|c| c.modality == modality && c.labels == labels && c.arch == arch)
            .map(|c| c.miou)
            .collect();
        median(&mut v)
    }

    /// One row per pairing; each architecture shows measured median and the
    /// published reference side by side.
    pub fn render(&self) -> String {
        let mut s = String::from("input\tlabels");
        for a in &self.archs {
            let _ = write!(s, "\t{a}\t{a}_ref");
        }
        s.push('\n');
        for (m, l) in matrix_rows() {
            let _ = write!(s, "{}\t{}", m.label(), l.label());
            for &a in &self.archs {
                let r = reference_mean_iou(m, l, a).unwrap_or(f64::NAN);
                let _ = write!(s, "\t{:.4}\t{:.4}", self.median(m, l, a), r);
            }
            s.push('\n');
        }
        s
    }

    pub fn merged_log(&self) -> String {
        let mut s = String::new();
        for c in &self.cells {
            let _ = writeln!(s, "# {} {} {} seed={}", c.modality, c.labels, c.arch, c.seed);
            s.push_str(&c.log);
        }
        s
    }
}

/// Worker count from [`THREADS_ENV`], defaulting to the available cores.
pub fn worker_threads() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Trains and evaluates every pairing × `archs` × `seeds` on the dataset
/// named in `base`. Cells run on up to `threads` workers; each is
/// deterministic on its own, so the report does not depend on scheduling.
pub fn cmd_matrix(base: &ExperimentConfig, archs: &[Arch], seeds: &[u64], threads: usize) -> Result<MatrixReport> {
    let manifest = DatasetManifest::load(&base.dataset)?;
    let mut jobs = Vec::new();
    for (m, l) in matrix_rows() {
        for &a in archs {
            for &seed in seeds {
                jobs.push((m, l, a, seed));
            }
        }
    }
    let mut cells: Vec<Option<Result<MatrixCell>>> = Vec::new();
    cells.resize_with(jobs.len(), || None);
    // splits are loaded once per pairing and shared by its cells
    for (m, l) in matrix_rows() {
        let tr = load_split(&base.dataset, &manifest, Split::Train, m, l)?;
        let ev = load_split(&base.dataset, &manifest, Split::Eval, m, l)?;
        let mine: Vec<usize> = (0..jobs.len()).filter(|&i| jobs[i].0 == m && jobs[i].1 == l).collect();
        for chunk in mine.chunks(threads.max(1)) {
            let done: Vec<(usize, Result<MatrixCell>)> = std::thread::scope(|s| {
                let handles: Vec<_> = chunk
                    .iter()
                    .map(|&i| {
                        let (m, l, a, seed) = jobs[i];
                        let (tr, ev) = (&tr, &ev);
                        s.spawn(move || {
                            let cfg = ExperimentConfig {
                                modality: m,
                                label_domain: l,
                                arch: a,
                                seed,
                                ..base.clone()
                            };
                            let mut log = String::new();
                            let r = train_on(&cfg, tr, ev, &mut |line| {
                                log.push_str(line);
                                log.push('\n');
                            });
                            let cell = r.and_then(|(mut model, report)| {
                                Ok(MatrixCell {
                                    modality: m,
                                    labels: l,
                                    arch: a,
                                    seed,
                                    miou: report.best_miou,
                                    train_miou: model.evaluate(tr, 8)?.mean_iou()?,
                                    report,
                                    log,
                                })
                            });
                            (i, cell)
                        })
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().expect("matrix worker panicked")).collect()
            });
            for (i, r) in done {
                cells[i] = Some(r);
            }
        }
    }
    let cells = cells
        .into_iter()
        .map(|c| c.expect("every job ran"))
        .collect::<Result<Vec<_>>>()?;
    Ok(MatrixReport {
        archs: archs.to_vec(),
        seeds: seeds.to_vec(),
        cells,
    })
}
