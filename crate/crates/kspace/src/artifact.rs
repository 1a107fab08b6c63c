use std::f64::consts::PI;

use crate::{ComplexImage, KspaceError, RealImage, Result};

/// Network input/label pair for one coil image.
#[derive(Debug, Clone, PartialEq)]
pub struct ArtifactPair {
    /// `|aliased|`
    pub input_mag: RealImage,
    /// `|aliased| - |truth|`
    pub label_mag: RealImage,
    /// `arg(aliased)` in (-pi, pi]
    pub input_phase: RealImage,
    /// `wrap(arg(aliased) - arg(truth))`
    pub label_phase: RealImage,
}

/// Wrap an angle into (-pi, pi].
pub fn wrap_phase(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y <= -PI {
        y + 2.0 * PI
    } else {
        y
    }
}

pub fn compute_artifact(aliased: &ComplexImage, truth: &ComplexImage) -> Result<ArtifactPair> {
    if aliased.shape() != truth.shape() {
        return Err(KspaceError::ShapeMismatch(aliased.shape(), truth.shape()));
    }
    let input_mag = aliased.magnitude();
    let input_phase = aliased.phase();
    let label_mag = input_mag.zip_map(&truth.magnitude(), |a, t| a - t)?;
    let label_phase = input_phase.zip_map(&truth.phase(), |a, t| wrap_phase(a - t))?;
    Ok(ArtifactPair { input_mag, label_mag, input_phase, label_phase })
}
