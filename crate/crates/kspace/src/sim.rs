use num_complex::Complex64;

use crate::{idft2, ComplexImage, KSpaceGrid, KspaceError, Result, SamplingMask};

/// Keep the sampled phase-encode rows, zero the rest.
pub fn subsample(ks: &KSpaceGrid, mask: &SamplingMask) -> Result<KSpaceGrid> {
    let (rows, cols) = ks.shape();
    if mask.len() != rows {
        return Err(KspaceError::ShapeMismatch((mask.len(), cols), (rows, cols)));
    }
    let mut out = ks.clone();
    let zero = Complex64::new(0.0, 0.0);
    for (r, &keep) in mask.lines().iter().enumerate() {
        if !keep {
            for c in 0..cols {
                out.grid_mut().set(r, c, zero);
            }
        }
    }
    Ok(out)
}

/// Minimum-norm reconstruction of zero-filled Cartesian k-space.
pub fn zero_fill_recon(ks_sub: &KSpaceGrid) -> Result<ComplexImage> {
    idft2(ks_sub)
}
