//! Randomised multi-coil ellipse phantoms.
//!
//! Each phantom is an outer "skull" ellipse, a darker inner "brain" ellipse
//! and a handful of small random features, shaded by a gentle linear bias
//! field. A smooth quadratic phase map is applied, then one Gaussian
//! sensitivity profile per coil, centred on the image border at evenly
//! spaced angles. A single-coil phantom uses a uniform sensitivity.
//! Coordinates are normalised to [-1, 1] on both axes.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{ComplexImage, Grid2, KspaceError, RealImage, Result};

const COIL_RADIUS: f64 = 1.1;
const COIL_SIGMA: f64 = 0.9;

#[derive(Debug, Clone, Copy)]
struct Ellipse {
    cx: f64,
    cy: f64,
    a: f64,
    b: f64,
    angle: f64,
    value: f64,
}

impl Ellipse {
    fn contains(&self, x: f64, y: f64) -> bool {
        let (s, c) = self.angle.sin_cos();
        let dx = x - self.cx;
        let dy = y - self.cy;
        let u = c * dx + s * dy;
        let v = -s * dx + c * dy;
        (u / self.a).powi(2) + (v / self.b).powi(2) <= 1.0
    }
}

#[derive(Debug, Clone)]
pub struct Phantom {
    pub coils: Vec<ComplexImage>,
    /// Coil-free object magnitude.
    pub magnitude: RealImage,
    /// Coil-free object phase in (-pi, pi).
    pub phase: RealImage,
    pub support: Grid2<bool>,
}

pub fn make_phantom(rows: usize, cols: usize, n_coils: usize, seed: u64) -> Result<Vec<ComplexImage>> {
    Ok(generate_phantom(rows, cols, n_coils, seed)?.coils)
}

pub fn generate_phantom(rows: usize, cols: usize, n_coils: usize, seed: u64) -> Result<Phantom> {
    if n_coils == 0 {
        return Err(KspaceError::BadPhantom("n_coils must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = |lo: f64, hi: f64| rng.random_range(lo..hi);

    let outer = Ellipse {
        cx: u(-0.05, 0.05),
        cy: u(-0.05, 0.05),
        a: u(0.55, 0.75),
        b: u(0.65, 0.85),
        angle: u(-15.0, 15.0).to_radians(),
        value: 1.0,
    };
    let shrink = u(0.85, 0.92);
    let inner = Ellipse { a: outer.a * shrink, b: outer.b * shrink, value: -0.5, ..outer };
    let n_features = 4 + (u(0.0, 5.0) as usize);
    let mut features = Vec::with_capacity(n_features);
    for _ in 0..n_features {
        let r = u(0.0, 0.6);
        let t = u(0.0, 2.0 * PI);
        features.push(Ellipse {
            cx: outer.cx + r * inner.a * t.cos(),
            cy: outer.cy + r * inner.b * t.sin(),
            a: u(0.05, 0.3),
            b: u(0.05, 0.3),
            angle: u(0.0, PI),
            value: u(-0.2, 0.3),
        });
    }
    let bias = (u(-0.15, 0.15), u(-0.15, 0.15));
    let phase_coef: Vec<f64> = (0..6).map(|_| u(-1.0, 1.0)).collect();
    let phase_peak = u(0.3, 0.8) * PI;

    let norm_x = |c: usize| (2.0 * c as f64 + 1.0) / cols as f64 - 1.0;
    let norm_y = |r: usize| (2.0 * r as f64 + 1.0) / rows as f64 - 1.0;

    let support = Grid2::from_fn(rows, cols, |r, c| outer.contains(norm_x(c), norm_y(r)));
    let magnitude = Grid2::from_fn(rows, cols, |r, c| {
        if !*support.get(r, c) {
            return 0.0;
        }
        let (x, y) = (norm_x(c), norm_y(r));
        let mut v = outer.value;
        if inner.contains(x, y) {
            v += inner.value;
            for f in features.iter().filter(|f| f.contains(x, y)) {
                v += f.value;
            }
        }
        (v * (1.0 + bias.0 * x + bias.1 * y)).max(0.05)
    });

    let poly = |x: f64, y: f64| {
        let k = &phase_coef;
        k[0] + k[1] * x + k[2] * y + k[3] * x * y + k[4] * x * x + k[5] * y * y
    };
    let peak = (0..rows)
        .flat_map(|r| (0..cols).map(move |c| (r, c)))
        .filter(|&(r, c)| *support.get(r, c))
        .map(|(r, c)| poly(norm_x(c), norm_y(r)).abs())
        .fold(0.0, f64::max);
    let scale = if peak > 0.0 { phase_peak / peak } else { 0.0 };
    let phase = Grid2::from_fn(rows, cols, |r, c| {
        if *support.get(r, c) {
            scale * poly(norm_x(c), norm_y(r))
        } else {
            0.0
        }
    });

    let mut coils = Vec::with_capacity(n_coils);
    for coil in 0..n_coils {
        let angle = 2.0 * PI * coil as f64 / n_coils as f64 + PI / 4.0;
        let (sx, sy) = (COIL_RADIUS * angle.cos(), COIL_RADIUS * angle.sin());
        let grid = Grid2::from_fn(rows, cols, |r, c| {
            let sens = if n_coils == 1 {
                1.0
            } else {
                let d2 = (norm_x(c) - sx).powi(2) + (norm_y(r) - sy).powi(2);
                (-d2 / (2.0 * COIL_SIGMA * COIL_SIGMA)).exp()
            };
            Complex64::from_polar(magnitude.get(r, c) * sens, *phase.get(r, c))
        });
        coils.push(ComplexImage::new(grid, coil)?);
    }
    Ok(Phantom { coils, magnitude, phase, support })
}

/// Square root of the sum of squared coil magnitudes.
pub fn ssos(coils: &[ComplexImage]) -> Result<RealImage> {
    let first = coils.first().ok_or_else(|| KspaceError::BadPhantom("no coils".into()))?;
    let mut acc = Grid2::filled(first.shape().0, first.shape().1, 0.0);
    for coil in coils {
        acc = acc.zip_map(coil.grid(), |a, v| a + v.norm_sqr())?;
    }
    Ok(acc.map(|v| v.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_phantom() {
        assert_eq!(make_phantom(32, 32, 2, 9).unwrap(), make_phantom(32, 32, 2, 9).unwrap());
        assert_ne!(make_phantom(32, 32, 2, 9).unwrap(), make_phantom(32, 32, 2, 10).unwrap());
    }

    #[test]
    fn ssos_dominates_each_coil_inside_support() {
        let p = generate_phantom(64, 64, 4, 3).unwrap();
        let combined = ssos(&p.coils).unwrap();
        for coil in &p.coils {
            let mag = coil.magnitude();
            for i in 0..64 * 64 {
                if p.support.data()[i] {
                    assert!(combined.data()[i] > mag.data()[i]);
                }
            }
        }
    }

    #[test]
    fn background_is_zero_and_support_is_positive() {
        let p = generate_phantom(64, 64, 3, 11).unwrap();
        for coil in &p.coils {
            for (v, &inside) in coil.grid().data().iter().zip(p.support.data()) {
                if inside {
                    assert!(v.norm() > 0.0);
                } else {
                    assert_eq!(v.norm(), 0.0);
                }
            }
        }
        assert!(p.phase.data().iter().all(|v| v.abs() < PI));
    }

    /// Over seeds 0..100 the measured support fraction spans about
    /// [0.29, 0.48], inside the asserted [0.2, 0.7].
    #[test]
    fn support_fraction_range() {
        let mut lo = 1.0f64;
        let mut hi = 0.0f64;
        for seed in 0..100 {
            let p = generate_phantom(64, 64, 1, seed).unwrap();
            let frac = p.support.data().iter().filter(|&&b| b).count() as f64 / (64.0 * 64.0);
            lo = lo.min(frac);
            hi = hi.max(frac);
        }
        assert!(lo >= 0.2 && hi <= 0.7, "support fraction range [{lo}, {hi}]");
    }

    #[test]
    fn zero_coils_rejected() {
        assert!(make_phantom(16, 16, 0, 0).is_err());
    }
}
