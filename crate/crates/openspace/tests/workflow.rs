//! End-to-end behaviour of the dataset, training and command layer on a
//! small synthetic dataset.

use std::path::Path;
use std::process::Command;

use openspace_core::eval::confusion;
use openspace_core::models::Arch;
use openspace_core::pipeline::Modality;
use openspace_core::simulate::LabelDomain;
use radar_openspace::commands::{cmd_bench, cmd_eval, cmd_simulate, cmd_train, render_bench};
use radar_openspace::dataset::pairing_geometry;
use radar_openspace::{load_split, DatasetManifest, Error, ExperimentConfig, Split};

const BIN: &str = env!("CARGO_BIN_EXE_radar-openspace");

fn small_config(dir: &Path) -> ExperimentConfig {
    ExperimentConfig {
        dataset: dir.to_path_buf(),
        sequences: 3,
        frames_per_sequence: 6,
        steps: 12,
        eval_every: 6,
        batch_size: 4,
        ..ExperimentConfig::default()
    }
}

fn small_dataset() -> (tempfile::TempDir, ExperimentConfig) {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(&tmp.path().join("data"));
    cmd_simulate(&cfg, &cfg.dataset).unwrap();
    (tmp, cfg)
}

#[test]
fn simulation_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let a = small_config(&tmp.path().join("a"));
    let b = small_config(&tmp.path().join("b"));
    cmd_simulate(&a, &a.dataset).unwrap();
    cmd_simulate(&b, &b.dataset).unwrap();
    for f in ["manifest.txt", "seq_00.rseg", "seq_01.rseg", "seq_02.rseg"] {
        let x = std::fs::read(a.dataset.join(f)).unwrap();
        let y = std::fs::read(b.dataset.join(f)).unwrap();
        assert!(x == y, "{f} differs between identical runs");
    }
}

#[test]
fn splits_load_with_the_expected_geometry() {
    let (_tmp, cfg) = small_dataset();
    let m = DatasetManifest::load(&cfg.dataset).unwrap();
    assert_eq!(m.frame_count(Split::Train), 6);
    assert_eq!(m.frame_count(Split::Eval), 12);
    for (mo, l) in [
        (Modality::Rad, LabelDomain::Polar),
        (Modality::Ra, LabelDomain::Cartesian),
        (Modality::Doa, LabelDomain::Cartesian),
    ] {
        let s = load_split(&cfg.dataset, &m, Split::Eval, mo, l).unwrap();
        assert_eq!((s.input_shape, s.label_hw), pairing_geometry(mo, l));
        let sizes: Vec<usize> = s.batches(5, Some(3)).map(|b| b.frame_ids.len()).collect();
        assert_eq!(sizes, [5, 5, 2]);
    }
    let doa_polar = load_split(&cfg.dataset, &m, Split::Eval, Modality::Doa, LabelDomain::Polar);
    assert!(matches!(doa_polar, Err(Error::Config(_))));
}

#[test]
fn twenty_frames_batch_as_eight_eight_four() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        frames_per_sequence: 10,
        ..small_config(&tmp.path().join("d"))
    };
    cmd_simulate(&cfg, &cfg.dataset).unwrap();
    let m = DatasetManifest::load(&cfg.dataset).unwrap();
    let s = load_split(&cfg.dataset, &m, Split::Eval, Modality::Ra, LabelDomain::Polar).unwrap();
    let sizes: Vec<usize> = s.batches(8, Some(1)).map(|b| b.input.shape()[0]).collect();
    assert_eq!(sizes, [8, 8, 4]);
}

#[test]
fn training_is_deterministic_and_moves_theta() {
    let (tmp, cfg) = small_dataset();
    let a = cmd_train(&cfg, &tmp.path().join("run_a"), &mut |_| {}).unwrap();
    let b = cmd_train(&cfg, &tmp.path().join("run_b"), &mut |_| {}).unwrap();
    let ca = std::fs::read(&a.checkpoint).unwrap();
    let cb = std::fs::read(&b.checkpoint).unwrap();
    assert!(ca == cb, "same seed must give identical checkpoint bytes");
    assert_eq!(a.report.losses, b.report.losses);
    assert!(a.report.final_theta.iter().any(|&t| t != 0.0));
    assert_eq!(a.report.evals.iter().map(|e| e.0).collect::<Vec<_>>(), [6, 12]);
    let log = std::fs::read_to_string(&a.log).unwrap();
    assert!(log.contains("step=12 loss=") && log.contains("eval_miou"));
}

#[test]
fn eval_reports_and_dumps_one_mask_per_frame() {
    let (tmp, cfg) = small_dataset();
    let run = cmd_train(&cfg, &tmp.path().join("run"), &mut |_| {}).unwrap();
    let masks = tmp.path().join("masks");
    let r = cmd_eval(&run.checkpoint, &cfg.dataset, Split::Eval, Some(Arch::FcnTiny), Some(&masks)).unwrap();
    assert_eq!(r.frames, 12);
    assert!((0.0..=1.0).contains(&r.iou.mean));
    let mut names: Vec<String> = std::fs::read_dir(&masks)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    let want: Vec<String> = (6..18).map(|i| format!("{i:06}.pgm")).collect();
    assert_eq!(names, want);
    let img = std::fs::read(masks.join("000006.pgm")).unwrap();
    let (h, w) = pairing_geometry(Modality::Ra, LabelDomain::Polar).1;
    let header = format!("P5\n{w} {h}\n255\n");
    assert!(img.starts_with(header.as_bytes()));
    assert!(img[header.len()..].iter().all(|v| [128, 255].contains(v)));

    let wrong = cmd_eval(&run.checkpoint, &cfg.dataset, Split::Eval, Some(Arch::Fcn), None);
    assert!(matches!(wrong, Err(Error::ArchMismatch { .. })));
}

#[test]
fn ground_truth_as_prediction_scores_one() {
    let (_tmp, cfg) = small_dataset();
    let m = DatasetManifest::load(&cfg.dataset).unwrap();
    let s = load_split(&cfg.dataset, &m, Split::Eval, Modality::Ra, LabelDomain::Polar).unwrap();
    let mut cm = openspace_core::eval::ConfusionMatrix::default();
    for gt in &s.masks {
        cm += confusion(gt, gt).unwrap();
    }
    assert_eq!(cm.mean_iou().unwrap(), 1.0);
}

#[test]
fn bench_output_is_key_value() {
    let rows = cmd_bench(None, Modality::Ra, 1, 2).unwrap();
    let archs: Vec<Arch> = rows.iter().map(|r| r.arch).collect();
    assert_eq!(archs, Arch::ALL);
    let text = render_bench(&rows);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("hardware="));
    for line in lines {
        for field in line.split(' ') {
            let (k, v) = field.split_once('=').expect("key=value");
            assert!(!k.is_empty() && !v.is_empty());
        }
    }
}

#[test]
fn cli_rejects_too_few_sequences() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(BIN)
        .args(["simulate", "--sequences", "2", "--out"])
        .arg(tmp.path().join("d"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("at least 3 sequences"));
}

#[test]
fn cli_reads_config_files_and_overrides() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = tmp.path().join("exp.cfg");
    let data = tmp.path().join("data");
    std::fs::write(
        &cfg_path,
        format!("dataset={}\nsequences=3\nframes_per_sequence=9\n", data.display()),
    )
    .unwrap();
    let out = Command::new(BIN)
        .args(["simulate", "--config"])
        .arg(&cfg_path)
        .args(["--set", "frames_per_sequence=2", "--seed", "5"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("seed=5") && stdout.contains("train_frames=2") && stdout.contains("eval_frames=4"));

    let bad = Command::new(BIN).args(["train", "--modality", "doa", "--label-domain", "polar"]).output().unwrap();
    assert!(!bad.status.success());
}
