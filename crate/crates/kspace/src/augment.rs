//! Fixed catalog of 32 complex-domain augmentations.
//!
//! `id = 8 * flip + geometry`, where `flip` is
//!
//! | flip | effect                      |
//! |------|-----------------------------|
//! | 0    | none                        |
//! | 1    | horizontal (mirror columns) |
//! | 2    | vertical (mirror rows)      |
//! | 3    | both                        |
//!
//! and `geometry` is one of
//!
//! | geometry | rotation | x-shear |
//! |----------|----------|---------|
//! | 0        | 0°       | 0       |
//! | 1        | +10°     | 0       |
//! | 2        | −10°     | 0       |
//! | 3        | 0°       | +0.1    |
//! | 4        | 0°       | −0.1    |
//! | 5        | +10°     | +0.1    |
//! | 6        | −10°     | −0.1    |
//! | 7        | +10°     | −0.1    |
//!
//! Rotation and shear act about the image centre, shear first. Both use
//! bilinear interpolation on the real and imaginary parts separately with
//! zeros outside the field of view. Flips are exact index permutations and
//! are applied last, so id 0 is the identity and id 8 a pure horizontal flip.
//! A 180° rotation is absent because it equals flip 3.

use num_complex::Complex64;

use crate::{ComplexImage, Grid2, KspaceError, Result};

pub const TRANSFORM_COUNT: usize = 32;

const GEOMETRY: [(f64, f64); 8] = [
    (0.0, 0.0),
    (10.0, 0.0),
    (-10.0, 0.0),
    (0.0, 0.1),
    (0.0, -0.1),
    (10.0, 0.1),
    (-10.0, -0.1),
    (10.0, -0.1),
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transform {
    pub flip_horizontal: bool,
    pub flip_vertical: bool,
    pub rotation_deg: f64,
    pub shear_x: f64,
}

impl Transform {
    pub fn from_id(id: usize) -> Result<Self> {
        if id >= TRANSFORM_COUNT {
            return Err(KspaceError::BadTransform(id));
        }
        let flip = id / 8;
        let (rotation_deg, shear_x) = GEOMETRY[id % 8];
        Ok(Self {
            flip_horizontal: flip & 1 == 1,
            flip_vertical: flip & 2 == 2,
            rotation_deg,
            shear_x,
        })
    }

    pub fn is_rigid_flip(&self) -> bool {
        self.rotation_deg == 0.0 && self.shear_x == 0.0
    }
}

pub fn augment(img: &ComplexImage, transform_id: usize) -> Result<ComplexImage> {
    let t = Transform::from_id(transform_id)?;
    let warped = if t.is_rigid_flip() {
        img.grid().clone()
    } else {
        warp(img.grid(), t.rotation_deg.to_radians(), t.shear_x)
    };
    let (rows, cols) = warped.shape();
    let flipped = Grid2::from_fn(rows, cols, |r, c| {
        let sr = if t.flip_vertical { rows - 1 - r } else { r };
        let sc = if t.flip_horizontal { cols - 1 - c } else { c };
        *warped.get(sr, sc)
    });
    ComplexImage::new(flipped, img.coil_index())
}

fn warp(src: &Grid2<Complex64>, theta: f64, shear: f64) -> Grid2<Complex64> {
    let (rows, cols) = src.shape();
    let cy = (rows as f64 - 1.0) / 2.0;
    let cx = (cols as f64 - 1.0) / 2.0;
    let (s, c) = theta.sin_cos();
    Grid2::from_fn(rows, cols, |r, col| {
        let x = col as f64 - cx;
        let y = r as f64 - cy;
        // inverse rotation, then inverse shear
        let xr = c * x + s * y;
        let yr = -s * x + c * y;
        let xs = xr - shear * yr;
        bilinear(src, yr + cy, xs + cx)
    })
}

fn bilinear(src: &Grid2<Complex64>, y: f64, x: f64) -> Complex64 {
    let (rows, cols) = src.shape();
    let y0 = y.floor();
    let x0 = x.floor();
    let fy = y - y0;
    let fx = x - x0;
    let sample = |yy: f64, xx: f64| -> Complex64 {
        if yy < 0.0 || xx < 0.0 || yy >= rows as f64 || xx >= cols as f64 {
            Complex64::new(0.0, 0.0)
        } else {
            *src.get(yy as usize, xx as usize)
        }
    };
    sample(y0, x0) * ((1.0 - fy) * (1.0 - fx))
        + sample(y0, x0 + 1.0) * ((1.0 - fy) * fx)
        + sample(y0 + 1.0, x0) * (fy * (1.0 - fx))
        + sample(y0 + 1.0, x0 + 1.0) * (fy * fx)
}
