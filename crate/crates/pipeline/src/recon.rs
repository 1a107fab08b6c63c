use std::time::Instant;

use csmri_kspace::{ssos, ComplexImage, RealImage};
use csmri_nn::Real;

use crate::error::invalid;
use crate::metrics::{image_nmse, make_phase_mask, masked_phase_nmse, PhaseMask};
use crate::training::{predict_images, subtract_magnitude, subtract_phase, LearningTarget, TrainedNet};
use crate::Result;

/// Estimates the artifact of one coil image.
pub trait ArtifactModel: Sync {
    fn predict(&self, coil: usize, input: &RealImage) -> Result<RealImage>;
}

/// A trained artifact network.
pub struct NetModel<'a, T>(&'a TrainedNet<T>);

impl<'a, T: Real> NetModel<'a, T> {
    pub fn new(trained: &'a TrainedNet<T>) -> Result<Self> {
        if trained.target != LearningTarget::Artifact {
            return invalid("reconstruction needs an artifact-learning network");
        }
        Ok(Self(trained))
    }
}

impl<T: Real> ArtifactModel for NetModel<'_, T> {
    fn predict(&self, _coil: usize, input: &RealImage) -> Result<RealImage> {
        Ok(predict_images(&self.0.net, &[input])?.remove(0))
    }
}

/// Predicts no artifact at all.
pub struct ZeroModel;

impl ArtifactModel for ZeroModel {
    fn predict(&self, _coil: usize, input: &RealImage) -> Result<RealImage> {
        Ok(input.map(|_| 0.0))
    }
}

/// Returns known artifacts, one per coil.
pub struct OracleModel(pub Vec<RealImage>);

impl ArtifactModel for OracleModel {
    fn predict(&self, coil: usize, input: &RealImage) -> Result<RealImage> {
        match self.0.get(coil) {
            Some(a) if a.shape() == input.shape() => Ok(a.clone()),
            _ => invalid(format!("oracle has no artifact of shape {:?} for coil {coil}", input.shape())),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReconResult {
    pub coils: Vec<ComplexImage>,
    pub masks: Vec<PhaseMask>,
    pub ssos: RealImage,
    /// SSOS NMSE against the ground truth, when given.
    pub nmse_mag: Option<f64>,
    /// Per-coil phase NMSE inside each coil's mask.
    pub nmse_phase: Option<Vec<f64>>,
    pub wall_time: f64,
}

struct CoilRecon {
    image: ComplexImage,
    mask: PhaseMask,
}

fn reconstruct_coil(
    mag_model: &dyn ArtifactModel,
    phase_model: &dyn ArtifactModel,
    aliased: &ComplexImage,
    threshold: f64,
) -> Result<CoilRecon> {
    let c = aliased.coil_index();
    let input_mag = aliased.magnitude();
    let mag = subtract_magnitude(&input_mag, &mag_model.predict(c, &input_mag)?);
    let mask = make_phase_mask(&mag, threshold);
    let input_phase = mask.apply(&aliased.phase());
    let phase = subtract_phase(&input_phase, &phase_model.predict(c, &input_phase)?, &mask);
    Ok(CoilRecon { image: ComplexImage::from_polar(&mag, &phase, c)?, mask })
}

/// Magnitude and phase artifact subtraction per coil (coils run in
/// parallel), followed by SSOS combination.
pub fn reconstruct(
    mag_model: &dyn ArtifactModel,
    phase_model: &dyn ArtifactModel,
    aliased: &[ComplexImage],
    truth: Option<&[ComplexImage]>,
    threshold: f64,
) -> Result<ReconResult> {
    if aliased.is_empty() {
        return invalid("no coil images");
    }
    if aliased.iter().any(|a| a.shape() != aliased[0].shape()) {
        return invalid("coil images differ in size");
    }
    let start = Instant::now();
    let per_coil: Vec<Result<CoilRecon>> = std::thread::scope(|s| {
        let handles: Vec<_> = aliased
            .iter()
            .map(|a| s.spawn(move || reconstruct_coil(mag_model, phase_model, a, threshold)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("coil worker panicked")).collect()
    });
    let mut coils = Vec::with_capacity(aliased.len());
    let mut masks = Vec::with_capacity(aliased.len());
    for r in per_coil {
        let r = r?;
        coils.push(r.image);
        masks.push(r.mask);
    }
    let combined = ssos(&coils)?;
    let wall_time = start.elapsed().as_secs_f64();

    let (nmse_mag, nmse_phase) = match truth {
        None => (None, None),
        Some(t) => {
            if t.len() != coils.len() {
                return invalid(format!("{} truth coils for {} aliased", t.len(), coils.len()));
            }
            let mag = image_nmse(&combined, &ssos(t)?)?;
            let phase = t
                .iter()
                .zip(&coils)
                .zip(&masks)
                .map(|((tr, rc), m)| masked_phase_nmse(&rc.phase(), &tr.phase(), &m.mask))
                .collect::<Result<Vec<_>>>()?;
            (Some(mag), Some(phase))
        }
    };
    Ok(ReconResult { coils, masks, ssos: combined, nmse_mag, nmse_phase, wall_time })
}
