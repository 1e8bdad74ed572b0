//! Cluster-center initialization: BIRCH CF-tree construction with center
//! extraction, plus k-means / k-means++ alternatives and the 20-restart
//! protocol.

use thiserror::Error;

use crate::linalg::Matrix;

mod birch;
mod kmeans;

pub use birch::{
    birch_init, threshold_search, tune_threshold, BirchConfig, CfEntry, CfNode, CfStats, CfTree,
    ThresholdSearch, ThresholdStep,
};
pub use kmeans::{kmeans_init, Seeding};

/// Restart count used whenever k-means seeds or refines centers.
pub const KMEANS_RESTARTS: usize = 20;

/// Initialization errors.
#[derive(Debug, Error)]
pub enum InitError {
    #[error("point has dimension {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("cannot form {needed} clusters: only {available} subclusters available")]
    InsufficientSubclusters { needed: usize, available: usize },
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// K cluster centers with a per-point assignment. Each center is the mean
/// of the points assigned to it.
#[derive(Debug, Clone)]
pub struct Centroids {
    pub centers: Matrix,
    pub assignment: Vec<usize>,
}

impl Centroids {
    pub fn k(&self) -> usize {
        self.centers.rows()
    }
}

/// Squared Euclidean distance between two slices.
pub(crate) fn distance_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest center; ties go to the lowest index.
pub(crate) fn nearest_center(point: &[f64], centers: &Matrix) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for c in 0..centers.rows() {
        let d = distance_sq(point, centers.row(c));
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}
