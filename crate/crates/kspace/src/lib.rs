//! Simulation of undersampled Cartesian MR acquisition.
//!
//! The forward model maps a coil image to DC-centred k-space with a unitary
//! 2D DFT ([`dft2`]), keeps a subset of phase-encode rows ([`subsample`]) and
//! returns to image space by zero filling ([`zero_fill_recon`]). The
//! difference between the aliased and the true image, split into magnitude
//! and phase, is the learning target ([`compute_artifact`]).

mod artifact;
mod augment;
mod error;
mod fft;
mod grid;
mod mask;
mod phantom;
mod sim;

pub use artifact::{compute_artifact, wrap_phase, ArtifactPair};
pub use augment::{augment, Transform, TRANSFORM_COUNT};
pub use error::{KspaceError, Result};
pub use fft::{dft2, idft2};
pub use grid::{ComplexImage, Grid2, KSpaceGrid, RealImage};
pub use mask::{make_mask, MaskPattern, SamplingMask};
pub use phantom::{generate_phantom, make_phantom, ssos, Phantom};
pub use sim::{subsample, zero_fill_recon};
