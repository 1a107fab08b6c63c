//! Central finite-difference gradient verification.
//!
//! The numerical derivative of a scalar function is compared element by
//! element against an analytic gradient. The relative error of one element is
//! `|a - n| / max(|a|, |n|, GRAD_FLOOR)`; the floor keeps elements whose true
//! gradient is essentially zero from turning round-off into huge ratios.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Shape, Tensor};

pub const FD_STEP: f64 = 1e-5;
pub const GRAD_TOL: f64 = 1e-5;
pub const GRAD_FLOOR: f64 = 1e-3;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(GRAD_FLOOR)
}

/// Numerical gradient of `f` at `x` by central differences.
pub fn numeric_gradient(x: &[f64], mut f: impl FnMut(&[f64]) -> f64, h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + h;
            let up = f(&probe);
            probe[i] = orig - h;
            let down = f(&probe);
            probe[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Largest elementwise relative error between `analytic` and the central
/// difference of `f` around `x`.
pub fn check_gradient(x: &[f64], analytic: &[f64], f: impl FnMut(&[f64]) -> f64) -> f64 {
    assert_eq!(x.len(), analytic.len(), "gradient length mismatch");
    numeric_gradient(x, f, FD_STEP)
        .iter()
        .zip(analytic)
        .map(|(&n, &a)| relative_error(a, n))
        .fold(0.0, f64::max)
}

/// Uniform(-1, 1) tensor.
pub fn random_tensor(shape: Shape, seed: u64) -> Tensor<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = shape.iter().product();
    Tensor::new(shape, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).expect("shape")
}

/// Tensor whose values keep at least `gap` distance from each other and from
/// zero, so finite differences of step `FD_STEP` never cross a kink of ReLU
/// or a max-pool argmax.
pub fn separated_tensor(shape: Shape, seed: u64, gap: f64) -> Tensor<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n: usize = shape.iter().product();
    // distinct multiples of `gap`, shuffled, centred around zero but avoiding it
    let mut values: Vec<f64> = (0..n)
        .map(|i| {
            let k = i as f64 - n as f64 / 2.0;
            (k + if k >= 0.0 { 0.5 } else { -0.5 }) * gap
        })
        .collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        values.swap(i, j);
    }
    Tensor::new(shape, values).expect("shape")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detects_correct_and_wrong_gradients() {
        let x = [0.3, -1.2, 2.0];
        let f = |v: &[f64]| v[0] * v[0] + 3.0 * v[1] + v[2].sin();
        let good = [0.6, 3.0, 2.0f64.cos()];
        assert!(check_gradient(&x, &good, f) < 1e-8);
        let bad = [0.6, 3.1, 2.0f64.cos()];
        assert!(check_gradient(&x, &bad, f) > 1e-2);
    }

    #[test]
    fn separated_values_are_distinct_and_nonzero() {
        let t = separated_tensor([1, 1, 4, 4], 3, 0.1);
        let mut v = t.to_f64();
        assert!(v.iter().all(|x| x.abs() >= 0.05 - 1e-12));
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(v.windows(2).all(|w| w[1] - w[0] > 0.099));
    }
}
