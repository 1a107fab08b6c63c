use std::fs;
use std::path::Path;
use std::process::Command;

use csmri_cli::{cmd_barcode, cmd_reconstruct, cmd_rf, cmd_simulate, cmd_train, CliError, ExperimentConfig, ModelSource};
use csmri_io::KvDocument;
use csmri_nn::persist::StateDict;
use csmri_pipeline::TrainedNet;
use csmri_unet::build_network;

fn small(extra: &str) -> ExperimentConfig {
    let text = format!(
        "phantom_count=8\nphantom_rows=32\nphantom_cols=32\nn_coils=2\nsplit=count:6\nepochs=2\n\
         n_scales=2\nbase_channels=4\nlayers_per_stage=2\ninput_height=32\ninput_width=32\n\
         precision=f64\nbarcode_size=8"
    );
    let mut doc = KvDocument::parse(&text).unwrap();
    for (k, v) in KvDocument::parse(extra).unwrap().iter() {
        doc.set(k, v);
    }
    ExperimentConfig::from_kv(&doc).unwrap()
}

fn read(p: impl AsRef<Path>) -> String {
    fs::read_to_string(p).unwrap()
}

#[test]
fn full_mask_labels_are_zero_and_simulation_is_reproducible() {
    let cfg = small("mask_pattern=full");
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    cmd_simulate(&cfg, a.path()).unwrap();
    cmd_simulate(&cfg, b.path()).unwrap();
    let csv = read(a.path().join("dataset/dataset.csv"));
    assert_eq!(csv.lines().count(), 1 + 8 * 2);
    for line in csv.lines().skip(1) {
        let norm: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert!(norm < 1e-10, "{line}");
    }
    assert_eq!(csv, read(b.path().join("dataset/dataset.csv")));
    let p = "dataset/phantoms/p0003c1.ptf";
    assert_eq!(fs::read(a.path().join(p)).unwrap(), fs::read(b.path().join(p)).unwrap());
    // resolved config is written beside the outputs
    let written = ExperimentConfig::load(a.path().join("dataset/config.txt")).unwrap();
    assert_eq!(written, cfg);
}

#[test]
fn mask_csv_has_one_row_per_line() {
    let cfg = small("phantom_count=2\nphantom_rows=256\nphantom_cols=256\ninput_height=256\ninput_width=256\nn_coils=1\nsplit=count:1");
    let out = tempfile::tempdir().unwrap();
    cmd_simulate(&cfg, out.path()).unwrap();
    let mask = read(out.path().join("dataset/mask.csv"));
    assert_eq!(mask.lines().count(), 256);
    let sampled = mask.lines().filter(|l| l.ends_with(",1")).count();
    // 64 uniform rows plus 13 ACS rows (122..=134), three of them multiples of 4
    assert_eq!(sampled, 64 + 13 - 3);
}

#[test]
fn train_needs_a_dataset() {
    let out = tempfile::tempdir().unwrap();
    assert!(matches!(cmd_train(&small(""), out.path()), Err(CliError::MissingDataset(_))));
    cmd_simulate(&small(""), out.path()).unwrap();
    let other = small("phantom_count=9");
    assert!(matches!(cmd_train(&other, out.path()), Err(CliError::Config(_))));
}

#[test]
fn train_curves_reproduce_in_f64_and_resume() {
    let cfg = small("");
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        cmd_simulate(&cfg, d.path()).unwrap();
        cmd_train(&cfg, d.path()).unwrap();
    }
    let curves = read(a.path().join("train/curves.csv"));
    assert_eq!(curves.lines().count(), 1 + cfg.train.epochs);
    assert_eq!(curves, read(b.path().join("train/curves.csv")));
    assert_eq!(read(a.path().join("train/phase_curves.csv")), read(b.path().join("train/phase_curves.csv")));

    // a rerun with the same config reuses the finished stages
    let stamp = fs::metadata(a.path().join("train/magnitude/network.txt")).unwrap().modified().unwrap();
    cmd_train(&cfg, a.path()).unwrap();
    assert_eq!(fs::metadata(a.path().join("train/magnitude/network.txt")).unwrap().modified().unwrap(), stamp);

    let first = cmd_reconstruct(&cfg, a.path(), &ModelSource::Trained(a.path().join("train"))).unwrap();
    let metrics = read(a.path().join("reconstruct/metrics.csv"));
    let second = cmd_reconstruct(&cfg, a.path(), &ModelSource::Trained(a.path().join("train"))).unwrap();
    assert_eq!(first, second);
    assert_eq!(metrics, read(a.path().join("reconstruct/metrics.csv")));
    assert!(metrics.starts_with("id,nmse_zero_fill,nmse_recon\n"));
}

#[test]
fn zero_learning_rate_keeps_initial_parameters() {
    let frozen = small("lr_start=0\nlr_end=0\ntrain_phase=false");
    let out = tempfile::tempdir().unwrap();
    cmd_simulate(&frozen, out.path()).unwrap();
    cmd_train(&frozen, out.path()).unwrap();
    let trained = TrainedNet::<f64>::load(out.path().join("train/magnitude")).unwrap();
    let init = build_network::<f64>(&frozen.spec, frozen.seed).unwrap();
    let (after, before) = (trained.net.export_state(), init.export_state());
    let mut compared = 0;
    for (a, b) in after.iter().zip(&before) {
        assert_eq!(a.name, b.name);
        // running BN statistics still move in training mode
        if !a.name.contains("running") {
            // saved tensors are f32, so compare at that precision
            assert_eq!(a.values, b.values, "{}", a.name);
            compared += 1;
        }
    }
    assert!(compared > 0);
    assert!(!out.path().join("train/phase").exists());
}

#[test]
fn oracle_and_zero_model_reconstructions() {
    let cfg = small("");
    let out = tempfile::tempdir().unwrap();
    cmd_simulate(&cfg, out.path()).unwrap();
    let oracle = cmd_reconstruct(&cfg, out.path(), &ModelSource::Oracle).unwrap();
    assert_eq!(oracle.len(), 2);
    assert!(oracle.iter().all(|r| r.nmse_recon < 1e-8 && r.nmse_zero_fill > 1e-3));
    let zero = cmd_reconstruct(&cfg, out.path(), &ModelSource::Zero).unwrap();
    for r in &zero {
        assert!((r.nmse_recon - r.nmse_zero_fill).abs() <= 1e-12 * r.nmse_zero_fill);
    }
    for r in &zero {
        assert!(out.path().join(format!("reconstruct/images/{}_recon.pgm", r.id)).exists());
    }
    let missing = ModelSource::Trained(out.path().join("nowhere"));
    assert!(matches!(cmd_reconstruct(&cfg, out.path(), &missing), Err(CliError::MissingModel(_))));
}

#[test]
fn barcode_table_schema() {
    let cfg = small("");
    let out = tempfile::tempdir().unwrap();
    cmd_simulate(&cfg, out.path()).unwrap();
    let rows = cmd_barcode(&cfg, out.path()).unwrap();
    let names: Vec<&str> = rows.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["image", "artifact-uniformACS", "artifact-gaussian"]);
    let auc = read(out.path().join("barcode/auc.csv"));
    assert!(auc.starts_with("manifold,points,auc\n"));
    let curve = read(out.path().join("barcode/curve_image.csv"));
    // beta_0 at scale zero is the number of images
    assert_eq!(curve.lines().nth(1).unwrap(), "0,16");
}

#[test]
fn rf_tables() {
    let doc = KvDocument::parse("net_mode=single_scale\nsingle_scale_layers=18").unwrap();
    let csv = cmd_rf(&ExperimentConfig::from_kv(&doc).unwrap(), None).unwrap();
    let last = csv.lines().last().unwrap();
    assert!(last.starts_with("head,37,37,"), "{last}");
    let one = KvDocument::parse("net_mode=single_scale\nsingle_scale_layers=1").unwrap();
    let csv = cmd_rf(&ExperimentConfig::from_kv(&one).unwrap(), None).unwrap();
    assert!(csv.lines().nth(1).unwrap().contains(",3,3,"));
}

#[test]
fn binary_reports_errors_with_nonzero_exit() {
    let bin = env!("CARGO_BIN_EXE_csmri");
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "no_such_key=1\n").unwrap();
    let out = Command::new(bin).args(["rf", "--config"]).arg(&bad).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("unknown key `no_such_key`"), "{err}");
    assert_eq!(err.trim().lines().count(), 1);

    let ok = Command::new(bin).args(["rf", "--out"]).arg(dir.path()).output().unwrap();
    assert!(ok.status.success());
    assert!(String::from_utf8_lossy(&ok.stdout).starts_with("layer,rf_h,rf_w,jump\n"));
    assert!(dir.path().join("rf/config.txt").exists());
}
