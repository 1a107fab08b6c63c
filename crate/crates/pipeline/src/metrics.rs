use csmri_kspace::{wrap_phase, Grid2, RealImage};

use crate::error::invalid;
use crate::{PipelineError, Result};

/// `||x - ref||^2 / ||ref||^2`.
pub fn nmse(x: &[f64], reference: &[f64]) -> Result<f64> {
    if x.len() != reference.len() {
        return invalid(format!("nmse: {} vs {} values", x.len(), reference.len()));
    }
    let den: f64 = reference.iter().map(|r| r * r).sum();
    if den == 0.0 {
        return Err(PipelineError::ZeroReference);
    }
    let num: f64 = x.iter().zip(reference).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(num / den)
}

pub fn image_nmse(x: &RealImage, reference: &RealImage) -> Result<f64> {
    if x.shape() != reference.shape() {
        return invalid(format!("nmse: {:?} vs {:?}", x.shape(), reference.shape()));
    }
    nmse(x.data(), reference.data())
}

/// Phase NMSE over the pixels inside `mask`, with the error wrapped into
/// (-pi, pi] so a difference of 2pi counts as zero.
pub fn masked_phase_nmse(phase: &RealImage, reference: &RealImage, mask: &Grid2<bool>) -> Result<f64> {
    if phase.shape() != reference.shape() || mask.shape() != reference.shape() {
        return invalid("masked_phase_nmse: shape mismatch");
    }
    let (mut num, mut den) = (0.0, 0.0);
    for ((&p, &r), &m) in phase.data().iter().zip(reference.data()).zip(mask.data()) {
        if m {
            num += wrap_phase(p - r).powi(2);
            den += r * r;
        }
    }
    if den == 0.0 {
        return Err(PipelineError::ZeroReference);
    }
    Ok(num / den)
}

/// Region of interest for the phase network.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMask {
    pub mask: Grid2<bool>,
    pub threshold_fraction: f64,
}

impl PhaseMask {
    pub fn count(&self) -> usize {
        self.mask.data().iter().filter(|&&m| m).count()
    }

    /// `image` with zeros outside the mask.
    pub fn apply(&self, image: &RealImage) -> RealImage {
        image.zip_map(&self.mask, |&v, &m| if m { v } else { 0.0 }).expect("mask shape")
    }
}

pub const PHASE_THRESHOLD: f64 = 0.05;

/// Pixels whose magnitude reaches `threshold_fraction` of the image maximum.
pub fn make_phase_mask(recon_mag: &RealImage, threshold_fraction: f64) -> PhaseMask {
    let max = recon_mag.data().iter().cloned().fold(0.0, f64::max);
    if max <= 0.0 {
        log::warn!("phase mask of an all-zero magnitude image is empty");
        let mask = recon_mag.map(|_| false);
        return PhaseMask { mask, threshold_fraction };
    }
    let t = threshold_fraction * max;
    PhaseMask { mask: recon_mag.map(|&v| v >= t), threshold_fraction }
}

/// Dice overlap of two boolean masks; 1 when both are empty.
pub fn dice(a: &Grid2<bool>, b: &Grid2<bool>) -> f64 {
    let both = a.data().iter().zip(b.data()).filter(|(x, y)| **x && **y).count();
    let total = a.data().iter().filter(|&&x| x).count() + b.data().iter().filter(|&&x| x).count();
    if total == 0 {
        1.0
    } else {
        2.0 * both as f64 / total as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use csmri_kspace::generate_phantom;

    #[test]
    fn nmse_closed_forms() {
        let r = [1.0, -2.0, 3.0];
        assert_eq!(nmse(&r, &r).unwrap(), 0.0);
        assert_eq!(nmse(&[0.0; 3], &r).unwrap(), 1.0);
        assert_eq!(nmse(&r.map(|v| 2.0 * v), &r).unwrap(), 1.0);
        assert!(matches!(nmse(&r, &[0.0; 3]), Err(PipelineError::ZeroReference)));
        assert!(nmse(&r, &[1.0]).is_err());
    }

    #[test]
    fn phase_nmse_ignores_full_turns_and_outside() {
        let r = RealImage::from_fn(4, 4, |i, j| 0.1 * (i + j) as f64 + 0.1);
        let shifted = r.map(|v| v - 2.0 * std::f64::consts::PI);
        let all = Grid2::filled(4, 4, true);
        assert!(masked_phase_nmse(&shifted, &r, &all).unwrap() < 1e-20);
        let mut m = Grid2::filled(4, 4, false);
        m.set(0, 0, true);
        let mut p = r.clone();
        p.set(3, 3, 9.0);
        assert_eq!(masked_phase_nmse(&p, &r, &m).unwrap(), 0.0);
    }

    #[test]
    fn threshold_extremes() {
        let img = RealImage::from_fn(8, 8, |i, j| ((i * 8 + j) % 13) as f64);
        assert_eq!(make_phase_mask(&img, 0.0).count(), 64);
        let top = make_phase_mask(&img, 1.0);
        assert_eq!(top.count(), img.data().iter().filter(|&&v| v == 12.0).count());
        assert_eq!(make_phase_mask(&RealImage::filled(4, 4, 0.0), 0.05).count(), 0);
    }

    #[test]
    fn mask_of_phantom_matches_support() {
        for seed in 0..5 {
            let p = generate_phantom(64, 64, 1, seed).unwrap();
            let m = make_phase_mask(&p.coils[0].magnitude(), PHASE_THRESHOLD);
            assert!(dice(&m.mask, &p.support) > 0.9);
        }
    }
}
