use csmri_kspace::RealImage;

use crate::{HomologyError, Result};

/// `n` points in `R^d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
    pub label: String,
}

impl PointCloud {
    pub fn new(points: &[Vec<f64>], label: impl Into<String>) -> Result<Self> {
        if points.len() < 2 {
            return Err(HomologyError::TooFewPoints(points.len()));
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(HomologyError::ZeroDimension);
        }
        let mut coords = Vec::with_capacity(points.len() * dim);
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(HomologyError::Ragged { point: i, expected: dim, got: p.len() });
            }
            if !p.iter().all(|v| v.is_finite()) {
                return Err(HomologyError::NonFinite(i));
            }
            coords.extend_from_slice(p);
        }
        Ok(Self { dim, coords, label: label.into() })
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }
}

/// Symmetric `n x n` matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    /// Validate a full row-major matrix.
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(HomologyError::BadMatrix(format!("{} entries for n = {n}", data.len())));
        }
        for i in 0..n {
            if data[i * n + i] != 0.0 {
                return Err(HomologyError::BadMatrix(format!("nonzero diagonal at {i}")));
            }
            for j in 0..i {
                let d = data[i * n + j];
                if !d.is_finite() || d < 0.0 || d != data[j * n + i] {
                    return Err(HomologyError::BadMatrix(format!("entry ({i}, {j})")));
                }
            }
        }
        Ok(Self { n, data })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }
}

pub fn pairwise_distances(pc: &PointCloud) -> DistanceMatrix {
    let n = pc.len();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..i {
            let d = pc.point(i).iter().zip(pc.point(j)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            data[i * n + j] = d;
            data[j * n + i] = d;
        }
    }
    DistanceMatrix { n, data }
}

/// Bilinear resampling on pixel centres with edge clamping. Resizing to the
/// same shape returns the image unchanged; halving averages 2x2 blocks.
pub fn bilinear_resize(img: &RealImage, rows: usize, cols: usize) -> RealImage {
    let (h, w) = img.shape();
    let coord = |i: usize, out: usize, inp: usize| {
        let s = ((i as f64 + 0.5) * inp as f64 / out as f64 - 0.5).clamp(0.0, (inp - 1) as f64);
        let i0 = s.floor() as usize;
        let i1 = (i0 + 1).min(inp - 1);
        (i0, i1, s - i0 as f64)
    };
    RealImage::from_fn(rows, cols, |r, c| {
        let (r0, r1, fr) = coord(r, rows, h);
        let (c0, c1, fc) = coord(c, cols, w);
        let top = (1.0 - fc) * img.get(r0, c0) + fc * img.get(r0, c1);
        let bottom = (1.0 - fc) * img.get(r1, c0) + fc * img.get(r1, c1);
        (1.0 - fr) * top + fr * bottom
    })
}

/// One point per image: the image resized to `size` and flattened.
pub fn image_cloud(images: &[RealImage], size: (usize, usize), label: impl Into<String>) -> Result<PointCloud> {
    let Some(first) = images.first() else {
        return Err(HomologyError::TooFewPoints(0));
    };
    if let Some(bad) = images.iter().find(|i| i.shape() != first.shape()) {
        return Err(HomologyError::ImageSize(format!("{:?} vs {:?}", bad.shape(), first.shape())));
    }
    let points: Vec<Vec<f64>> =
        images.iter().map(|img| bilinear_resize(img, size.0, size.1).into_data()).collect();
    PointCloud::new(&points, label)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_four_five() {
        let pc = PointCloud::new(&[vec![0.0, 0.0], vec![3.0, 4.0], vec![0.0, 0.0]], "t").unwrap();
        let d = pairwise_distances(&pc);
        assert_eq!(d.get(0, 1), 5.0);
        assert_eq!(d.get(1, 0), 5.0);
        assert_eq!(d.get(0, 2), 0.0);
        assert!(DistanceMatrix::new(3, d.data.clone()).is_ok());
    }

    #[test]
    fn invalid_clouds_rejected() {
        assert_eq!(PointCloud::new(&[vec![1.0]], "").unwrap_err(), HomologyError::TooFewPoints(1));
        assert!(PointCloud::new(&[vec![], vec![]], "").is_err());
        assert!(PointCloud::new(&[vec![1.0], vec![1.0, 2.0]], "").is_err());
        assert_eq!(PointCloud::new(&[vec![1.0], vec![f64::NAN]], "").unwrap_err(), HomologyError::NonFinite(1));
        assert!(DistanceMatrix::new(2, vec![0.0, 1.0, 2.0, 0.0]).is_err());
    }

    #[test]
    fn resize_to_same_size_is_identity() {
        let img = RealImage::from_fn(8, 6, |r, c| (r * 7 + c * 3) as f64 * 0.1);
        assert_eq!(bilinear_resize(&img, 8, 6), img);
    }

    #[test]
    fn halving_averages_blocks() {
        let img = RealImage::from_fn(4, 4, |r, c| (r * 4 + c) as f64);
        let small = bilinear_resize(&img, 2, 2);
        assert_eq!(small.data(), &[2.5, 4.5, 10.5, 12.5]);
    }

    #[test]
    fn image_cloud_has_one_point_per_image() {
        let imgs: Vec<_> = (0..5).map(|k| RealImage::filled(16, 16, k as f64)).collect();
        let pc = image_cloud(&imgs, (4, 4), "img").unwrap();
        assert_eq!((pc.len(), pc.dim()), (5, 16));
        assert!(pc.point(3).iter().all(|&v| v == 3.0));
        let mixed = vec![RealImage::filled(16, 16, 0.0), RealImage::filled(8, 8, 0.0)];
        assert!(image_cloud(&mixed, (4, 4), "").is_err());
    }
}
