//! Zero-dimensional Vietoris–Rips persistence of point clouds.
//!
//! Every point is a component born at scale 0. Growing the scale merges
//! components exactly along the edges of a minimum spanning tree, so the
//! finite bars are Kruskal's edge weights; by the elder rule the component
//! with the larger smallest index is the one that dies. A cloud whose bars
//! die early relative to its largest finite death has a small
//! [`complexity_summary`].

mod barcode;
mod cloud;

pub use barcode::{
    barcode_csv, betti0_barcode, betti0_curve, complexity_summary, curve_csv, Bar, Barcode,
};
pub use cloud::{bilinear_resize, image_cloud, pairwise_distances, DistanceMatrix, PointCloud};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum HomologyError {
    #[error("need at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("points must have at least one coordinate")]
    ZeroDimension,
    #[error("point {point} has {got} coordinates, expected {expected}")]
    Ragged { point: usize, expected: usize, got: usize },
    #[error("non-finite value at point {0}")]
    NonFinite(usize),
    #[error("distance matrix is not square and symmetric: {0}")]
    BadMatrix(String),
    #[error("images differ in size: {0}")]
    ImageSize(String),
}

pub type Result<T> = std::result::Result<T, HomologyError>;
