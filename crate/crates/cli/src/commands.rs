use std::fs;
use std::path::{Path, PathBuf};

use csmri_homology::{barcode_csv, betti0_curve, curve_csv};
use csmri_io::KvDocument;
use csmri_kspace::{make_mask, ssos, ComplexImage, MaskPattern, SamplingMask};
use csmri_nn::Real;
use csmri_pipeline::{
    auc_table_csv, build_dataset, curves_csv, image_nmse, make_corpus, make_phase_mask, manifold_analysis,
    masked_phase_nmse, metrics_csv, reconstruct, train_magnitude_network, train_phase_network, truth_phase_masks,
    write_pgm, ArtifactModel, CurveRow, DatasetSplit, MetricRow, NetModel, OracleModel, PhantomCoils,
    TrainedNet, ZeroModel,
};
use csmri_unet::{receptive_field, rf_table_csv};

use crate::config::{ExperimentConfig, Precision};
use crate::{CliError, Result};

fn write(path: impl AsRef<Path>, contents: impl AsRef<[u8]>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, contents).map_err(|source| CliError::File { path: path.to_path_buf(), source })
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| CliError::File { path: dir.to_path_buf(), source })
}

/// Create `out/name` and write the resolved config into it.
fn stage_dir(cfg: &ExperimentConfig, out: &Path, name: &str) -> Result<PathBuf> {
    let dir = out.join(name);
    create_dir(&dir)?;
    cfg.to_kv().save(dir.join("config.txt"))?;
    Ok(dir)
}

fn sampling_mask(cfg: &ExperimentConfig, pattern: MaskPattern) -> Result<SamplingMask> {
    Ok(make_mask(pattern, cfg.phantom_rows, cfg.acceleration, cfg.acs_fraction, cfg.seed)?)
}

fn phantom_file(p: usize, c: usize) -> String {
    format!("p{p:04}c{c}.ptf")
}

/// The keys a stored dataset must agree on with the current config.
fn dataset_manifest(cfg: &ExperimentConfig) -> KvDocument {
    let mut m = KvDocument::new();
    m.set("phantom_count", cfg.phantom_count);
    m.set("phantom_rows", cfg.phantom_rows);
    m.set("phantom_cols", cfg.phantom_cols);
    m.set("n_coils", cfg.n_coils);
    m.set("seed", cfg.seed);
    m
}

/// Phantoms, mask and test pairs under `out/dataset`.
pub fn cmd_simulate(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let dir = stage_dir(cfg, out, "dataset")?;
    let corpus = make_corpus(cfg.phantom_count, cfg.phantom_rows, cfg.phantom_cols, cfg.n_coils, cfg.seed)?;
    let phantom_dir = dir.join("phantoms");
    create_dir(&phantom_dir)?;
    for (p, coils) in corpus.iter().enumerate() {
        for (c, img) in coils.iter().enumerate() {
            img.to_ptf().save(phantom_dir.join(phantom_file(p, c)))?;
        }
    }
    let mask = sampling_mask(cfg, cfg.mask_pattern)?;
    write(dir.join("mask.csv"), mask.to_csv())?;
    mask.to_ptf().save(dir.join("mask.ptf"))?;

    // pairs are simulated from the stored (f32) phantoms, as training sees them
    let split = build_dataset(&load_phantoms(cfg, &dir)?, &mask, false, cfg.split, cfg.seed)?;
    let pair_dir = dir.join("pairs");
    create_dir(&pair_dir)?;
    let mut csv = String::from("id,split,label_mag_norm,nmse_zero_fill\n");
    for (side, items) in [("train", &split.train), ("test", &split.test)] {
        for it in items {
            let zf = image_nmse(&it.pair.input_mag, &it.truth.magnitude())?;
            csv.push_str(&format!("{},{side},{},{zf}\n", it.tag(), it.pair.label_mag.norm()));
            if side == "test" {
                it.aliased.to_ptf().save(pair_dir.join(format!("{}_aliased.ptf", it.tag())))?;
                it.pair.label_mag.to_ptf().save(pair_dir.join(format!("{}_label_mag.ptf", it.tag())))?;
                it.pair.label_phase.to_ptf().save(pair_dir.join(format!("{}_label_phase.ptf", it.tag())))?;
            }
        }
    }
    write(dir.join("dataset.csv"), csv)?;
    dataset_manifest(cfg).save(dir.join("manifest.txt"))?;
    log::info!("simulated {} phantoms into {}", cfg.phantom_count, dir.display());
    Ok(())
}

fn load_phantoms(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PhantomCoils>> {
    (0..cfg.phantom_count)
        .map(|p| {
            (0..cfg.n_coils)
                .map(|c| {
                    let t = csmri_io::PtfTensor::load(dir.join("phantoms").join(phantom_file(p, c)))?;
                    Ok(ComplexImage::from_ptf(&t, c)?)
                })
                .collect()
        })
        .collect()
}

/// Stored phantoms, checked against the config they must have come from.
fn open_dataset(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PhantomCoils>> {
    let dir = out.join("dataset");
    let manifest = dir.join("manifest.txt");
    if !manifest.exists() {
        return Err(CliError::MissingDataset(dir));
    }
    let stored = KvDocument::load(&manifest)?;
    let expected = dataset_manifest(cfg);
    for (k, v) in expected.iter() {
        if stored.get(k) != Some(v) {
            return Err(CliError::Config(format!(
                "dataset in {} has {k}={}, config has {v}",
                dir.display(),
                stored.get(k).unwrap_or("<missing>")
            )));
        }
    }
    load_phantoms(cfg, &dir)
}

fn open_split(cfg: &ExperimentConfig, out: &Path, augment: bool) -> Result<DatasetSplit> {
    let phantoms = open_dataset(cfg, out)?;
    let mask = sampling_mask(cfg, cfg.mask_pattern)?;
    Ok(build_dataset(&phantoms, &mask, augment, cfg.split, cfg.seed)?)
}

fn read_curves(path: &Path) -> Option<Vec<CurveRow>> {
    let text = fs::read_to_string(path).ok()?;
    text.lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            Some(CurveRow { epoch: f.first()?.parse().ok()?, train_loss: f.get(1)?.parse().ok()?, test_nmse: f.get(2)?.parse().ok()? })
        })
        .collect()
}

/// A finished stage from an earlier run with the same config, if any.
fn resume<T: Real>(dir: &Path, net: &str, curves: &str, epochs: usize) -> Option<TrainedNet<T>> {
    let curve = read_curves(&dir.join(curves))?;
    if curve.len() != epochs {
        return None;
    }
    let mut trained = TrainedNet::load(dir.join(net)).ok()?;
    trained.curve = curve;
    log::info!("resuming: {net} network already trained in {}", dir.display());
    Some(trained)
}

fn train_impl<T: Real>(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let split = open_split(cfg, out, cfg.augment)?;
    let dir = out.join("train");
    let same_config = KvDocument::load(dir.join("config.txt")).ok() == Some(cfg.to_kv());
    let dir = stage_dir(cfg, out, "train")?;

    let epochs = cfg.train.epochs;
    let previous = if same_config { resume::<T>(&dir, "magnitude", "curves.csv", epochs) } else { None };
    let mag = match previous {
        Some(m) => m,
        None => {
            let m = train_magnitude_network::<T>(&split, &cfg.spec, &cfg.train, cfg.target)?;
            m.save(dir.join("magnitude"))?;
            write(dir.join("curves.csv"), curves_csv(&m.curve))?;
            m
        }
    };
    log::info!("magnitude network final test nmse {:?}", mag.final_nmse());

    if cfg.train_phase {
        let previous = if same_config { resume::<T>(&dir, "phase", "phase_curves.csv", epochs) } else { None };
        if previous.is_none() {
            let train_masks = truth_phase_masks(&split.train, cfg.phase_threshold);
            let test_masks = truth_phase_masks(&split.test, cfg.phase_threshold);
            let ph = train_phase_network::<T>(&split, &train_masks, &test_masks, &cfg.spec, &cfg.train)?;
            ph.save(dir.join("phase"))?;
            write(dir.join("phase_curves.csv"), curves_csv(&ph.curve))?;
            log::info!("phase network final test nmse {:?}", ph.final_nmse());
        }
    } else if dir.join("phase").exists() {
        // a stale phase net would otherwise be picked up by `reconstruct`
        fs::remove_dir_all(dir.join("phase")).map_err(|source| CliError::File { path: dir.join("phase"), source })?;
        let _ = fs::remove_file(dir.join("phase_curves.csv"));
    }
    Ok(())
}

pub fn cmd_train(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    match cfg.precision {
        Precision::F32 => train_impl::<f32>(cfg, out),
        Precision::F64 => train_impl::<f64>(cfg, out),
    }
}

/// Where reconstruction artifacts come from.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSource {
    /// The true artifacts of each test image.
    Oracle,
    /// No artifact: the zero-filled reconstruction.
    Zero,
    /// Networks saved by `train` in this directory.
    Trained(PathBuf),
}

fn reconstruct_impl<T: Real>(cfg: &ExperimentConfig, out: &Path, source: &ModelSource) -> Result<Vec<MetricRow>> {
    let split = open_split(cfg, out, false)?;
    let (mag_net, phase_net) = match source {
        ModelSource::Trained(dir) => {
            if !dir.join("magnitude").join("network.txt").exists() {
                return Err(CliError::MissingModel(dir.clone()));
            }
            let mag = TrainedNet::<T>::load(dir.join("magnitude"))?;
            if mag.net.spec().input_size != (cfg.phantom_rows, cfg.phantom_cols) {
                return Err(CliError::Config(format!(
                    "model input {:?} does not match {}x{} images",
                    mag.net.spec().input_size,
                    cfg.phantom_rows,
                    cfg.phantom_cols
                )));
            }
            let phase = match dir.join("phase").join("network.txt").exists() {
                true => Some(TrainedNet::<T>::load(dir.join("phase"))?),
                false => {
                    log::warn!("no phase network in {}; phase artifacts are taken as zero", dir.display());
                    None
                }
            };
            (Some(mag), phase)
        }
        _ => (None, None),
    };
    let mag_model = mag_net.as_ref().map(NetModel::new).transpose()?;
    let phase_model = phase_net.as_ref().map(NetModel::new).transpose()?;

    let dir = stage_dir(cfg, out, "reconstruct")?;
    let image_dir = dir.join("images");
    create_dir(&image_dir)?;
    let mut rows = Vec::new();
    let mut phase_csv = String::from("id,coil,nmse_phase_zero_fill,nmse_phase_recon\n");
    for group in split.test_groups() {
        let id = format!("p{}", group[0].phantom);
        let aliased: Vec<ComplexImage> = group.iter().map(|it| it.aliased.clone()).collect();
        let truth: Vec<ComplexImage> = group.iter().map(|it| it.truth.clone()).collect();
        let oracle_mag = OracleModel(group.iter().map(|it| it.pair.label_mag.clone()).collect());
        let oracle_phase = OracleModel(group.iter().map(|it| it.pair.label_phase.clone()).collect());
        let (m, p): (&dyn ArtifactModel, &dyn ArtifactModel) = match source {
            ModelSource::Oracle => (&oracle_mag, &oracle_phase),
            ModelSource::Zero => (&ZeroModel, &ZeroModel),
            ModelSource::Trained(_) => (
                mag_model.as_ref().expect("loaded above"),
                match &phase_model {
                    Some(pm) => pm as &dyn ArtifactModel,
                    None => &ZeroModel,
                },
            ),
        };
        let result = reconstruct(m, p, &aliased, Some(&truth), cfg.phase_threshold)?;
        println!("{id}: wall time {:.6} s", result.wall_time);

        let zero_filled = ssos(&aliased)?;
        let reference = ssos(&truth)?;
        rows.push(MetricRow {
            id: id.clone(),
            nmse_zero_fill: image_nmse(&zero_filled, &reference)?,
            nmse_recon: result.nmse_mag.expect("truth given"),
        });
        let phase_recon = result.nmse_phase.as_deref().expect("truth given");
        for (c, it) in group.iter().enumerate() {
            let zf_mask = make_phase_mask(&it.pair.input_mag, cfg.phase_threshold);
            let zf = masked_phase_nmse(&zf_mask.apply(&it.pair.input_phase), &it.truth.phase(), &zf_mask.mask)?;
            phase_csv.push_str(&format!("{id},{c},{zf},{}\n", phase_recon[c]));
        }
        write_pgm(image_dir.join(format!("{id}_recon.pgm")), &result.ssos)?;
        write_pgm(image_dir.join(format!("{id}_zero_fill.pgm")), &zero_filled)?;
        write_pgm(image_dir.join(format!("{id}_truth.pgm")), &reference)?;
        write_pgm(image_dir.join(format!("{id}_recon_phase.pgm")), &result.coils[0].phase())?;
        result.ssos.to_ptf().save(image_dir.join(format!("{id}_recon.ptf")))?;
    }
    write(dir.join("metrics.csv"), metrics_csv(&rows))?;
    write(dir.join("phase_metrics.csv"), phase_csv)?;
    Ok(rows)
}

/// Per-phantom NMSE rows, also written to `out/reconstruct/metrics.csv`.
pub fn cmd_reconstruct(cfg: &ExperimentConfig, out: &Path, source: &ModelSource) -> Result<Vec<MetricRow>> {
    match cfg.precision {
        Precision::F32 => reconstruct_impl::<f32>(cfg, out, source),
        Precision::F64 => reconstruct_impl::<f64>(cfg, out, source),
    }
}

/// `(manifold, auc)` pairs, also written to `out/barcode/auc.csv` next to
/// one barcode and one beta_0 curve CSV per manifold.
pub fn cmd_barcode(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<(String, f64)>> {
    let phantoms = open_dataset(cfg, out)?;
    let uniform = sampling_mask(cfg, MaskPattern::UniformAcs)?;
    let gaussian = sampling_mask(cfg, MaskPattern::GaussianRandom)?;
    let size = (cfg.barcode_size, cfg.barcode_size);
    let rows = manifold_analysis(&phantoms, &[("uniformACS", &uniform), ("gaussian", &gaussian)], size)?;
    let dir = stage_dir(cfg, out, "barcode")?;
    for r in &rows {
        write(dir.join(format!("barcode_{}.csv", r.name)), barcode_csv(&r.barcode))?;
        write(dir.join(format!("curve_{}.csv", r.name)), curve_csv(&betti0_curve(&r.barcode, true)))?;
    }
    write(dir.join("auc.csv"), auc_table_csv(&rows))?;
    Ok(rows.into_iter().map(|r| (r.name, r.auc)).collect())
}

/// The receptive-field CSV of the configured network.
pub fn cmd_rf(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<String> {
    let csv = rf_table_csv(&receptive_field(&cfg.spec)?);
    if let Some(out) = out {
        let dir = stage_dir(cfg, out, "rf")?;
        write(dir.join("rf.csv"), &csv)?;
    }
    Ok(csv)
}
