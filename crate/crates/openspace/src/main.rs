use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use openspace_core::models::Arch;
use openspace_core::pipeline::Modality;
use radar_openspace::commands::{
    cmd_bench, cmd_eval, cmd_matrix, cmd_simulate, cmd_train, manifest_summary, render_bench, worker_threads,
    BENCH_ITERS, BENCH_WARMUP,
};
use radar_openspace::{ExperimentConfig, Split};

#[derive(Parser, Debug)]
#[command(name = "radar-openspace", version, about = "Radar open-space segmentation: simulate, train, evaluate, benchmark")]
struct Cli {
    /// Plain-text key=value experiment file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Extra `key=value` override; may repeat.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    #[command(flatten)]
    keys: KeyOverrides,

    #[command(subcommand)]
    command: Command,
}

/// One flag per configuration key; applied after the file and `--set`.
#[derive(Args, Debug, Default)]
struct KeyOverrides {
    #[arg(long, global = true)]
    seed: Option<String>,
    #[arg(long, global = true)]
    modality: Option<String>,
    #[arg(long = "label-domain", global = true)]
    label_domain: Option<String>,
    #[arg(long, global = true)]
    arch: Option<String>,
    #[arg(long, global = true)]
    lr: Option<String>,
    #[arg(long, global = true)]
    steps: Option<String>,
    #[arg(long = "batch-size", global = true)]
    batch_size: Option<String>,
    #[arg(long, global = true)]
    dataset: Option<String>,
    #[arg(long, global = true)]
    window: Option<String>,
    #[arg(long, global = true)]
    tdm: Option<String>,
    #[arg(long = "eval-every", global = true)]
    eval_every: Option<String>,
    #[arg(long, global = true)]
    sequences: Option<String>,
    #[arg(long = "frames-per-sequence", global = true)]
    frames_per_sequence: Option<String>,
}

impl KeyOverrides {
    fn pairs(&self) -> Vec<(&'static str, &str)> {
        [
            ("seed", &self.seed),
            ("modality", &self.modality),
            ("label_domain", &self.label_domain),
            ("arch", &self.arch),
            ("lr", &self.lr),
            ("steps", &self.steps),
            ("batch_size", &self.batch_size),
            ("dataset", &self.dataset),
            ("window", &self.window),
            ("tdm", &self.tdm),
            ("eval_every", &self.eval_every),
            ("sequences", &self.sequences),
            ("frames_per_sequence", &self.frames_per_sequence),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_deref().map(|v| (k, v)))
        .collect()
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Synthesize a dataset into --out (default: the configured dataset path).
    Simulate {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train one network; writes checkpoint.rsck and train.log into --out.
    Train {
        #[arg(long, default_value = "run")]
        out: PathBuf,
    },
    /// Evaluate a checkpoint on a dataset split.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value = "eval")]
        split: Split,
        /// Write one PGM per frame into --out.
        #[arg(long)]
        dump_masks: bool,
        #[arg(long, default_value = "masks")]
        out: PathBuf,
    },
    /// Single-frame inference FPS; `--arch all` (default) covers every network.
    Bench {
        #[arg(long, default_value_t = BENCH_WARMUP)]
        warmup: usize,
        #[arg(long, default_value_t = BENCH_ITERS)]
        iters: usize,
    },
    /// Train and evaluate all five input/label pairings.
    Matrix {
        /// Comma-separated architectures.
        #[arg(long, default_value = "fcn_tiny,fcn,deeplabv3p", value_delimiter = ',')]
        archs: Vec<Arch>,
        /// Comma-separated training seeds.
        #[arg(long, default_value = "0,1,2", value_delimiter = ',')]
        seeds: Vec<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            ExperimentConfig::parse(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => ExperimentConfig::default(),
    };
    for kv in &cli.set {
        let Some((k, v)) = kv.split_once('=') else {
            bail!("--set expects KEY=VALUE, got `{kv}`");
        };
        cfg.set(k.trim(), v.trim())?;
    }
    for (k, v) in cli.keys.pairs() {
        // `--arch all` is a bench selector, not a configuration value
        if k == "arch" && v == "all" {
            continue;
        }
        cfg.set(k, v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let cfg = build_config(&cli)?;
    match cli.command {
        Command::Simulate { out } => {
            let dir = out.unwrap_or_else(|| cfg.dataset.clone());
            let m = cmd_simulate(&cfg, &dir)?;
            print!("{}", manifest_summary(&dir, &m));
        }
        Command::Train { out } => {
            let o = cmd_train(&cfg, &out, &mut |line| println!("{line}"))?;
            println!("best_step={} best_eval_miou={:.4}", o.report.best_step, o.report.best_miou);
            println!("theta={:?}", o.report.final_theta);
            println!("checkpoint={}", o.checkpoint.display());
        }
        Command::Eval {
            checkpoint,
            split,
            dump_masks,
            out,
        } => {
            let expect = cli.keys.arch.as_deref().filter(|a| *a != "all").map(|_| cfg.arch);
            let dump = dump_masks.then_some(out.as_path());
            let r = cmd_eval(&checkpoint, &cfg.dataset, split, expect, dump)?;
            print!("{}", r.render());
        }
        Command::Bench { warmup, iters } => {
            let arch = match cli.keys.arch.as_deref() {
                None | Some("all") => None,
                Some(_) => Some(cfg.arch),
            };
            let modality: Modality = cfg.modality;
            print!("{}", render_bench(&cmd_bench(arch, modality, warmup, iters)?));
        }
        Command::Matrix { archs, seeds, out } => {
            let report = cmd_matrix(&cfg, &archs, &seeds, worker_threads())?;
            let table = report.render();
            print!("{table}");
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
                std::fs::write(dir.join("matrix.tsv"), &table)?;
                std::fs::write(dir.join("matrix.log"), report.merged_log())?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
