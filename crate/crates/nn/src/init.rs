use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::{ConvParams, Real, Result};

/// Standard deviation `sqrt(2 / (fan_in + fan_out))` with fans counted over the
/// kernel window.
pub fn xavier_std(kh: usize, kw: usize, n_in: usize, n_out: usize) -> f64 {
    let fan_in = (kh * kw * n_in) as f64;
    let fan_out = (kh * kw * n_out) as f64;
    (2.0 / (fan_in + fan_out)).sqrt()
}

/// Gaussian Xavier initialisation, zero bias, deterministic in `seed`.
pub fn xavier_init<T: Real>(
    kh: usize,
    kw: usize,
    n_in: usize,
    n_out: usize,
    seed: u64,
) -> Result<ConvParams<T>> {
    let mut p = ConvParams::zeros(kh, kw, n_in, n_out)?;
    let normal = Normal::new(0.0, xavier_std(kh, kw, n_in, n_out)).expect("positive std");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for w in &mut p.weights {
        *w = T::of(normal.sample(&mut rng));
    }
    Ok(p)
}
