use std::fmt;
use std::path::Path;
use std::str::FromStr;

use csmri_io::KvDocument;
use csmri_kspace::{wrap_phase, RealImage};
use csmri_nn::persist::{load_state, save_state, StateDict};
use csmri_nn::{Real, SgdMomentum, Tensor};
use csmri_unet::{build_network, predict, train_epoch, Network, NetworkSpec, TrainConfig, TrainSet};

use crate::dataset::{DatasetItem, DatasetSplit};
use crate::error::invalid;
use crate::metrics::{image_nmse, masked_phase_nmse, PhaseMask};
use crate::{PipelineError, Result};

/// What the magnitude network is asked to output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LearningTarget {
    /// The aliasing artifact; the image is recovered by subtraction.
    Artifact,
    /// The clean image itself.
    Image,
}

impl fmt::Display for LearningTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LearningTarget::Artifact => "artifact",
            LearningTarget::Image => "image",
        })
    }
}

impl FromStr for LearningTarget {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "artifact" => Ok(LearningTarget::Artifact),
            "image" => Ok(LearningTarget::Image),
            _ => invalid(format!("unknown learning target `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    pub epoch: usize,
    pub train_loss: f64,
    pub test_nmse: f64,
}

/// A network that went through training (or was loaded from a training
/// run), with its learning curve.
#[derive(Debug, Clone)]
pub struct TrainedNet<T> {
    pub net: Network<T>,
    pub target: LearningTarget,
    pub curve: Vec<CurveRow>,
}

impl<T: Real> TrainedNet<T> {
    pub fn final_nmse(&self) -> Option<f64> {
        self.curve.last().map(|r| r.test_nmse)
    }

    /// Parameters plus a `network.txt` describing the architecture.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        save_state(dir, &self.net.export_state())?;
        let mut doc = KvDocument::new();
        self.net.spec().write_kv(&mut doc);
        doc.set("target", self.target);
        doc.save(dir.join("network.txt"))?;
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let doc = KvDocument::load(dir.join("network.txt"))?;
        let target = doc.require("target")?.parse()?;
        let spec = NetworkSpec::from_kv(&doc)?;
        let mut net = build_network(&spec, 0)?;
        net.import_state(&load_state(dir)?)?;
        Ok(Self { net, target, curve: Vec::new() })
    }
}

pub fn image_to_tensor<T: Real>(img: &RealImage) -> Tensor<T> {
    let (h, w) = img.shape();
    Tensor::from_f64([1, 1, h, w], img.data()).expect("image shape")
}

pub fn tensor_to_image<T: Real>(t: &Tensor<T>) -> RealImage {
    RealImage::new(t.height(), t.width(), t.to_f64()).expect("tensor shape")
}

fn mask_tensor<T: Real>(m: &PhaseMask) -> Tensor<T> {
    image_to_tensor(&m.mask.map(|&b| if b { 1.0 } else { 0.0 }))
}

/// `max(input - artifact, 0)`: magnitudes cannot be negative.
pub fn subtract_magnitude(input: &RealImage, artifact: &RealImage) -> RealImage {
    input.zip_map(artifact, |a, b| (a - b).max(0.0)).expect("same shape")
}

/// Predicted magnitude artifacts of `items` (or clean images, for an image
/// learning net), in inference mode.
pub fn predict_images<T: Real>(net: &Network<T>, inputs: &[&RealImage]) -> Result<Vec<RealImage>> {
    let tensors: Vec<Tensor<T>> = inputs.iter().map(|i| image_to_tensor(i)).collect();
    Ok(predict(net, &tensors, 8)?.iter().map(tensor_to_image).collect())
}

/// Mean per-image NMSE of the magnitude reconstruction against `|truth|`.
pub fn magnitude_test_nmse<T: Real>(net: &Network<T>, items: &[DatasetItem], target: LearningTarget) -> Result<f64> {
    let inputs: Vec<&RealImage> = items.iter().map(|it| &it.pair.input_mag).collect();
    let preds = predict_images(net, &inputs)?;
    let mut total = 0.0;
    for (it, pred) in items.iter().zip(&preds) {
        let recon = match target {
            LearningTarget::Artifact => subtract_magnitude(&it.pair.input_mag, pred),
            LearningTarget::Image => pred.clone(),
        };
        total += image_nmse(&recon, &it.truth.magnitude())?;
    }
    Ok(total / items.len() as f64)
}

pub fn zero_filled_magnitude_nmse(items: &[DatasetItem]) -> Result<f64> {
    let mut total = 0.0;
    for it in items {
        total += image_nmse(&it.pair.input_mag, &it.truth.magnitude())?;
    }
    Ok(total / items.len() as f64)
}

fn run_training<T: Real>(
    set: &TrainSet<T>,
    spec: &NetworkSpec,
    cfg: &TrainConfig,
    mut evaluate: impl FnMut(&Network<T>) -> Result<f64>,
) -> Result<(Network<T>, Vec<CurveRow>)> {
    if set.is_empty() {
        return invalid("no training items");
    }
    let mut net = build_network(spec, cfg.seed)?;
    let mut opt = SgdMomentum::new(cfg.momentum);
    let mut curve = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let train_loss = train_epoch(&mut net, set, &mut opt, cfg.lr(epoch), cfg.batch_size, cfg.epoch_seed(epoch))?;
        let test_nmse = evaluate(&net)?;
        log::info!("epoch {epoch}: loss {train_loss:.6e}, test nmse {test_nmse:.6e}");
        curve.push(CurveRow { epoch, train_loss, test_nmse });
    }
    Ok((net, curve))
}

/// `|aliased| -> label` regression with MSE, curve in test NMSE of the
/// reconstructed magnitude.
pub fn train_magnitude_network<T: Real>(
    split: &DatasetSplit,
    spec: &NetworkSpec,
    cfg: &TrainConfig,
    target: LearningTarget,
) -> Result<TrainedNet<T>> {
    if split.test.is_empty() {
        return invalid("no test items");
    }
    let inputs = split.train.iter().map(|it| image_to_tensor(&it.pair.input_mag)).collect();
    let labels = split
        .train
        .iter()
        .map(|it| match target {
            LearningTarget::Artifact => image_to_tensor(&it.pair.label_mag),
            LearningTarget::Image => image_to_tensor(&it.truth.magnitude()),
        })
        .collect();
    let set = TrainSet::new(inputs, labels)?;
    let (net, curve) = run_training(&set, spec, cfg, |net| magnitude_test_nmse(net, &split.test, target))?;
    Ok(TrainedNet { net, target, curve })
}

/// Identical spec, seed and schedule; only the labels differ.
pub fn compare_learning_targets<T: Real>(
    split: &DatasetSplit,
    spec: &NetworkSpec,
    cfg: &TrainConfig,
) -> Result<(TrainedNet<T>, TrainedNet<T>)> {
    Ok((
        train_magnitude_network(split, spec, cfg, LearningTarget::Artifact)?,
        train_magnitude_network(split, spec, cfg, LearningTarget::Image)?,
    ))
}

/// Masks from the true magnitude of each item.
pub fn truth_phase_masks(items: &[DatasetItem], threshold_fraction: f64) -> Vec<PhaseMask> {
    items.iter().map(|it| crate::make_phase_mask(&it.truth.magnitude(), threshold_fraction)).collect()
}

/// `wrap(input - artifact)` inside the mask, zero outside.
pub fn subtract_phase(input: &RealImage, artifact: &RealImage, mask: &PhaseMask) -> RealImage {
    let raw = input.zip_map(artifact, |a, b| wrap_phase(a - b)).expect("same shape");
    mask.apply(&raw)
}

/// Mean masked phase NMSE of the phase reconstruction.
pub fn phase_test_nmse<T: Real>(net: &Network<T>, items: &[DatasetItem], masks: &[PhaseMask]) -> Result<f64> {
    let inputs: Vec<RealImage> = items.iter().zip(masks).map(|(it, m)| m.apply(&it.pair.input_phase)).collect();
    let preds = predict_images(net, &inputs.iter().collect::<Vec<_>>())?;
    let mut total = 0.0;
    for ((it, m), (input, pred)) in items.iter().zip(masks).zip(inputs.iter().zip(&preds)) {
        total += masked_phase_nmse(&subtract_phase(input, pred, m), &it.truth.phase(), &m.mask)?;
    }
    Ok(total / items.len() as f64)
}

pub fn zero_filled_phase_nmse(items: &[DatasetItem], masks: &[PhaseMask]) -> Result<f64> {
    let mut total = 0.0;
    for (it, m) in items.iter().zip(masks) {
        total += masked_phase_nmse(&m.apply(&it.pair.input_phase), &it.truth.phase(), &m.mask)?;
    }
    Ok(total / items.len() as f64)
}

/// Masked phase-artifact regression: inputs and labels are zeroed outside
/// each item's mask and the loss only counts pixels inside it.
pub fn train_phase_network<T: Real>(
    split: &DatasetSplit,
    train_masks: &[PhaseMask],
    test_masks: &[PhaseMask],
    spec: &NetworkSpec,
    cfg: &TrainConfig,
) -> Result<TrainedNet<T>> {
    if train_masks.len() != split.train.len() || test_masks.len() != split.test.len() {
        return invalid(format!(
            "need one phase mask per item: {} / {} train, {} / {} test",
            train_masks.len(),
            split.train.len(),
            test_masks.len(),
            split.test.len()
        ));
    }
    if split.test.is_empty() {
        return invalid("no test items");
    }
    let pairs = split.train.iter().zip(train_masks);
    let inputs = pairs.clone().map(|(it, m)| image_to_tensor(&m.apply(&it.pair.input_phase))).collect();
    let labels = pairs.clone().map(|(it, m)| image_to_tensor(&m.apply(&it.pair.label_phase))).collect();
    let masks = train_masks.iter().map(mask_tensor).collect();
    let set = TrainSet::new(inputs, labels)?.with_masks(masks)?;
    let (net, curve) = run_training(&set, spec, cfg, |net| phase_test_nmse(net, &split.test, test_masks))?;
    Ok(TrainedNet { net, target: LearningTarget::Artifact, curve })
}
