//! Deep clustering for tabular embeddings.
//!
//! This crate clusters pre-computed embedding matrices of tables, rows, or
//! columns by jointly training an autoencoder with a self-supervised
//! clustering head: Mahalanobis distances (through a Cholesky factor of a
//! scaled-identity covariance) pass through a heavy-tailed Cauchy kernel
//! into soft assignments, and a KL divergence against a sharpened target
//! distribution refines both the representation and the cluster centers.
//! Centers start from a BIRCH CF-tree; k-means and k-means++ initializers
//! are available for comparison, as are Euclidean/cosine distances and
//! Student's-t/Normal kernels.
//!
//! Start with [`harness::run_pipeline`] for the file-based workflow, or
//! compose the pieces directly:
//!
//! - [`autoencoder::pretrain`] learns the representation;
//! - [`init::birch_init`] / [`init::kmeans_init`] place the initial centers;
//! - [`head::train`] runs the joint optimization;
//! - [`metrics::evaluate`] scores the result against ground truth.
//!
//! The `examples/` directory has one runnable example per capability.
//! Everything is deterministic given a seed: the same inputs reproduce
//! bit-identical labels and loss curves.

// index loops over matrix coordinates are the house style in the numeric
// kernels, and `!(x > 0.0)` validations deliberately reject NaN
#![allow(clippy::needless_range_loop)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod autoencoder;
pub mod harness;
pub mod head;
pub mod init;
pub mod linalg;
pub mod metrics;
pub mod rng;

pub use harness::{run_pipeline, RunConfig, RunReport};
pub use head::{train, ClusteringResult, TrainConfig};
pub use linalg::Matrix;
pub use rng::RngState;
