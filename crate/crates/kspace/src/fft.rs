//! Unitary, DC-centred 2D DFT.
//!
//! `dft2(x) = fftshift(fft2(ifftshift(x))) / sqrt(H W)` and `idft2` is its
//! exact inverse. With even side lengths `fftshift == ifftshift`, a circular
//! shift by half the size along each axis.

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

use crate::{ComplexImage, Grid2, KSpaceGrid, Result};

pub fn dft2(img: &ComplexImage) -> Result<KSpaceGrid> {
    img.check_finite()?;
    let out = transform(img.grid(), FftDirection::Forward);
    KSpaceGrid::new(out, img.coil_index())
}

pub fn idft2(ks: &KSpaceGrid) -> Result<ComplexImage> {
    ks.check_finite()?;
    let out = transform(ks.grid(), FftDirection::Inverse);
    ComplexImage::new(out, ks.coil_index())
}

fn transform(input: &Grid2<Complex64>, direction: FftDirection) -> Grid2<Complex64> {
    let (rows, cols) = input.shape();
    let mut buf = half_shift(input.data(), rows, cols);

    let mut planner = FftPlanner::<f64>::new();
    let row_fft = planner.plan_fft(cols, direction);
    for row in buf.chunks_exact_mut(cols) {
        row_fft.process(row);
    }

    let col_fft = planner.plan_fft(rows, direction);
    let mut column = vec![Complex64::new(0.0, 0.0); rows];
    for c in 0..cols {
        for r in 0..rows {
            column[r] = buf[r * cols + c];
        }
        col_fft.process(&mut column);
        for r in 0..rows {
            buf[r * cols + c] = column[r];
        }
    }

    let scale = 1.0 / ((rows * cols) as f64).sqrt();
    for v in &mut buf {
        *v *= scale;
    }
    let shifted = half_shift(&buf, rows, cols);
    Grid2::new(rows, cols, shifted).expect("shape preserved")
}

fn half_shift(data: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    let (hr, hc) = (rows / 2, cols / 2);
    let mut out = vec![Complex64::new(0.0, 0.0); data.len()];
    for r in 0..rows {
        let dst_r = (r + hr) % rows;
        for c in 0..cols {
            out[dst_r * cols + (c + hc) % cols] = data[r * cols + c];
        }
    }
    out
}
