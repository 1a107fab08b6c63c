use csmri_io::{DType, PtfTensor};
use num_complex::Complex64;

use crate::{KspaceError, Result};

/// Row-major 2D array.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

pub type RealImage = Grid2<f64>;

impl<T: Clone> Grid2<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(KspaceError::BufferLength { rows, cols, len: data.len() });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        Self { rows, cols, data: vec![value; rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn map<U: Clone>(&self, f: impl FnMut(&T) -> U) -> Grid2<U> {
        Grid2 { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    pub fn zip_map<U: Clone, V: Clone>(
        &self,
        other: &Grid2<U>,
        mut f: impl FnMut(&T, &U) -> V,
    ) -> Result<Grid2<V>> {
        if self.shape() != other.shape() {
            return Err(KspaceError::ShapeMismatch(self.shape(), other.shape()));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| f(a, b)).collect();
        Ok(Grid2 { rows: self.rows, cols: self.cols, data })
    }
}

impl<T> Grid2<T> {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn get(&self, r: usize, c: usize) -> &T {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }
}

impl Grid2<f64> {
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max(&self) -> f64 {
        self.data.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn to_ptf(&self) -> PtfTensor {
        let values = self.data.iter().map(|&v| v as f32).collect();
        PtfTensor::real(vec![self.rows, self.cols], values).expect("grid shape is consistent")
    }

    pub fn from_ptf(t: &PtfTensor) -> Result<Self> {
        let (rows, cols) = rank2(t, DType::F32Real)?;
        Self::new(rows, cols, t.values.iter().map(|&v| v as f64).collect())
    }
}

impl Grid2<Complex64> {
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn magnitude(&self) -> RealImage {
        self.map(|v| v.norm())
    }

    pub fn phase(&self) -> RealImage {
        self.map(|v| v.arg())
    }

    fn check_finite(&self) -> Result<()> {
        match self.data.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            None => Ok(()),
            Some(i) => Err(KspaceError::NonFinite { row: i / self.cols, col: i % self.cols }),
        }
    }
}

fn rank2(t: &PtfTensor, dtype: DType) -> Result<(usize, usize)> {
    if t.dims.len() != 2 || t.dtype != dtype {
        return Err(KspaceError::Io(csmri_io::IoError::Parse {
            line: 0,
            msg: format!("expected rank-2 {:?} tensor, got {:?} {:?}", dtype, t.dims, t.dtype),
        }));
    }
    Ok((t.dims[0], t.dims[1]))
}

fn complex_to_ptf(g: &Grid2<Complex64>) -> PtfTensor {
    let mut values = Vec::with_capacity(g.data.len() * 2);
    for v in &g.data {
        values.push(v.re as f32);
        values.push(v.im as f32);
    }
    PtfTensor::complex(vec![g.rows, g.cols], values).expect("grid shape is consistent")
}

fn complex_from_ptf(t: &PtfTensor) -> Result<Grid2<Complex64>> {
    let (rows, cols) = rank2(t, DType::F32Complex)?;
    let data = t
        .values
        .chunks_exact(2)
        .map(|p| Complex64::new(p[0] as f64, p[1] as f64))
        .collect();
    Grid2::new(rows, cols, data)
}

fn check_size(rows: usize, cols: usize) -> Result<()> {
    let ok = |n: usize| n >= 8 && n.is_power_of_two();
    if ok(rows) && ok(cols) {
        Ok(())
    } else {
        Err(KspaceError::BadSize { rows, cols })
    }
}

macro_rules! complex_grid_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name {
            grid: Grid2<Complex64>,
            coil_index: usize,
        }

        impl $name {
            /// Validates the power-of-two size (≥ 8 per side) and finiteness.
            pub fn new(grid: Grid2<Complex64>, coil_index: usize) -> Result<Self> {
                check_size(grid.rows(), grid.cols())?;
                grid.check_finite()?;
                Ok(Self { grid, coil_index })
            }

            pub fn zeros(rows: usize, cols: usize, coil_index: usize) -> Result<Self> {
                Self::new(Grid2::filled(rows, cols, Complex64::new(0.0, 0.0)), coil_index)
            }

            pub fn grid(&self) -> &Grid2<Complex64> {
                &self.grid
            }

            /// Mutable access; finiteness is re-checked by the transforms.
            pub fn grid_mut(&mut self) -> &mut Grid2<Complex64> {
                &mut self.grid
            }

            pub fn into_grid(self) -> Grid2<Complex64> {
                self.grid
            }

            pub fn coil_index(&self) -> usize {
                self.coil_index
            }

            pub fn shape(&self) -> (usize, usize) {
                self.grid.shape()
            }

            pub fn norm(&self) -> f64 {
                self.grid.norm()
            }

            pub fn check_finite(&self) -> Result<()> {
                self.grid.check_finite()
            }

            pub fn to_ptf(&self) -> PtfTensor {
                complex_to_ptf(&self.grid)
            }

            pub fn from_ptf(t: &PtfTensor, coil_index: usize) -> Result<Self> {
                Self::new(complex_from_ptf(t)?, coil_index)
            }
        }
    };
}

complex_grid_type!(
    /// Complex coil image in image space.
    ComplexImage
);
complex_grid_type!(
    /// Complex k-space samples with the DC component at `(rows/2, cols/2)`.
    KSpaceGrid
);

impl ComplexImage {
    pub fn magnitude(&self) -> RealImage {
        self.grid.magnitude()
    }

    pub fn phase(&self) -> RealImage {
        self.grid.phase()
    }

    /// Recombine magnitude and phase into a complex image.
    pub fn from_polar(mag: &RealImage, phase: &RealImage, coil_index: usize) -> Result<Self> {
        let grid = mag.zip_map(phase, |&m, &p| Complex64::from_polar(m, p))?;
        Self::new(grid, coil_index)
    }
}
