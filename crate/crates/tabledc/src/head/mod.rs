//! Self-supervised clustering head.
//!
//! Distances between latent points and cluster centers pass through a
//! similarity kernel to give soft assignments; the assignments are
//! normalized, softmaxed into predicted probabilities, and sharpened into a
//! target distribution. Training minimizes a weighted sum of the
//! KL divergence between target and prediction and the autoencoder
//! reconstruction error, backpropagating through both the network and the
//! centers. Distances and kernels are pluggable for ablation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autoencoder::AeError;
use crate::init::InitError;
use crate::linalg::{cholesky, LinAlgError, LowerTriangular, Matrix};

mod assign;
mod distance;
mod train;

pub use assign::{
    clustering_loss, hard_assign, kernel_similarity, kl_divergence, normalize_assignments,
    predicted_distribution, target_distribution, total_loss,
};
pub use distance::distance_matrix;
pub use train::{
    joint_gradients_with_target, joint_loss_with_target, train, train_from_centers,
    train_with_observer, EpochView, JointLosses,
};

/// Clustering-head errors.
#[derive(Debug, Error)]
pub enum HeadError {
    #[error("covariance scale must be positive, got {0}")]
    InvalidDelta(f64),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("{side} {index} is a zero vector; cosine distance undefined")]
    ZeroVector { side: &'static str, index: usize },
    #[error("cluster {column} is dead: soft-assignment column sum {sum:e}")]
    DegenerateColumn { column: usize, sum: f64 },
    #[error("divergence is not finite: prediction underflowed at row {row}, col {col}")]
    NonFiniteDivergence { row: usize, col: usize },
    #[error("non-finite loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("need at least {needed} points for {needed} clusters, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Init(#[from] InitError),
    #[error(transparent)]
    Autoencoder(#[from] AeError),
    #[error(transparent)]
    LinAlg(#[from] LinAlgError),
}

/// Scaled-identity covariance: `delta * I` over the latent dimensions.
#[derive(Debug, Clone, Copy)]
pub struct CovarianceSpec {
    pub delta: f64,
    pub dim: usize,
}

impl CovarianceSpec {
    pub fn new(delta: f64, dim: usize) -> Result<Self, HeadError> {
        if !(delta > 0.0) {
            return Err(HeadError::InvalidDelta(delta));
        }
        Ok(CovarianceSpec { delta, dim })
    }
}

/// Cholesky factor of the scaled-identity covariance, `sqrt(delta) * I`,
/// produced by an actual factorization so the triangular-solve path is the
/// one exercised everywhere.
pub fn covariance_factor(spec: &CovarianceSpec) -> Result<LowerTriangular, HeadError> {
    if !(spec.delta > 0.0) {
        return Err(HeadError::InvalidDelta(spec.delta));
    }
    Ok(cholesky(&Matrix::scaled_identity(spec.dim, spec.delta))?)
}

/// Distance between latent points and centers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distance {
    Mahalanobis,
    Euclidean,
    Cosine,
}

/// Similarity kernel turning distances into raw soft assignments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Kernel {
    /// `1 / (1 + D^2 / gamma^2)` — heavy tails.
    Cauchy { gamma: f64 },
    /// `(1 + D^2 / nu)^(-(nu + 1) / 2)`.
    StudentsT { nu: f64 },
    /// `exp(-D^2 / (2 gamma^2))`.
    Normal { gamma: f64 },
}

impl Kernel {
    pub fn validate(&self) -> Result<(), HeadError> {
        match *self {
            Kernel::Cauchy { gamma } | Kernel::Normal { gamma } => {
                if !(gamma > 0.0) {
                    return Err(HeadError::InvalidConfig(format!(
                        "kernel bandwidth must be positive, got {gamma}"
                    )));
                }
            }
            Kernel::StudentsT { nu } => {
                if !(nu >= 1.0) {
                    return Err(HeadError::InvalidConfig(format!(
                        "degrees of freedom must be >= 1, got {nu}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Center-initialization strategy for the joint phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitMethod {
    Birch,
    KMeans,
    #[serde(rename = "kmeanspp")]
    KMeansPlusPlus,
}

/// The three per-point distributions over clusters.
#[derive(Debug, Clone)]
pub struct AssignmentSet {
    /// Normalized soft assignments.
    pub soft: Matrix,
    /// Softmaxed probabilities, the model's prediction.
    pub predicted: Matrix,
    /// Sharpened target distribution.
    pub target: Matrix,
}

/// Joint-training configuration.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub k: usize,
    /// Weight of the clustering term in the total loss.
    pub alpha: f64,
    /// Covariance scale for the Mahalanobis distance.
    pub delta: f64,
    /// Guard added to soft-assignment row sums before dividing.
    pub epsilon: f64,
    pub epochs: usize,
    pub lr: f64,
    pub distance: Distance,
    pub kernel: Kernel,
    pub init: InitMethod,
    /// When false the centers stay frozen at their initialization.
    pub centers_trainable: bool,
    /// Epochs between target recomputations (1 = every epoch).
    pub target_refresh: usize,
    /// Restarts for any k-means involved in initialization.
    pub restarts: usize,
    /// CF-tree threshold; tuned by grid search when absent.
    pub birch_threshold: Option<f64>,
    pub birch_branching: usize,
    pub birch_leaf_capacity: usize,
}

impl TrainConfig {
    /// Defaults: alpha 0.9, delta 0.01, epsilon 1e-10, Cauchy kernel with
    /// gamma 1, Mahalanobis distance, Birch initialization with tuned
    /// threshold, trainable centers, lr 1e-3.
    pub fn new(k: usize) -> Self {
        TrainConfig {
            k,
            alpha: 0.9,
            delta: 0.01,
            epsilon: 1e-10,
            epochs: 50,
            lr: 1e-3,
            distance: Distance::Mahalanobis,
            kernel: Kernel::Cauchy { gamma: 1.0 },
            init: InitMethod::Birch,
            centers_trainable: true,
            target_refresh: 1,
            restarts: 20,
            birch_threshold: None,
            birch_branching: 50,
            birch_leaf_capacity: 50,
        }
    }

    pub fn validate(&self, n_points: usize) -> Result<(), HeadError> {
        if self.k == 0 {
            return Err(HeadError::InvalidConfig("k must be >= 1".into()));
        }
        if n_points < self.k {
            return Err(HeadError::TooFewPoints {
                needed: self.k,
                got: n_points,
            });
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(HeadError::InvalidConfig(format!(
                "alpha must be in [0, 1], got {}",
                self.alpha
            )));
        }
        if self.epochs == 0 {
            return Err(HeadError::InvalidConfig("epochs must be >= 1".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(HeadError::InvalidConfig("epsilon must be positive".into()));
        }
        if !(self.delta > 0.0) {
            return Err(HeadError::InvalidDelta(self.delta));
        }
        if self.target_refresh == 0 {
            return Err(HeadError::InvalidConfig(
                "target refresh interval must be >= 1".into(),
            ));
        }
        self.kernel.validate()
    }
}

/// Losses recorded for one epoch. `clustering` is the divergence of the
/// prediction from the target and also serves as the `kl_p_m` trajectory;
/// `kl_target_soft` tracks the divergence of the normalized soft
/// assignments from the target.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EpochLosses {
    pub reconstruction: f64,
    pub clustering: f64,
    pub total: f64,
    pub kl_target_soft: f64,
}

/// How the centers were initialized, including the threshold grid search
/// trace when one ran. `method` is `None` when the caller supplied the
/// centers directly.
#[derive(Debug, Clone, Serialize)]
pub struct InitSummary {
    pub method: Option<InitMethod>,
    pub birch_threshold: Option<f64>,
    /// (threshold, leaf entries) pairs probed by the grid search.
    pub threshold_steps: Vec<(f64, usize)>,
    pub seconds: f64,
}

/// Output of the joint training loop.
#[derive(Debug)]
pub struct ClusteringResult {
    pub labels: Vec<usize>,
    pub centers: Matrix,
    pub loss_curve: Vec<EpochLosses>,
    pub assignments: AssignmentSet,
    pub epoch_seconds: Vec<f64>,
    pub init: InitSummary,
}
