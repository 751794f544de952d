//! Adaptive contrastive edge representation learning for sparse,
//! heteroscedastic network data.
//!
//! The library estimates a low-rank, row-sparse edge embedding `Q` (one row
//! per network edge) from a matrix of vectorized per-subject networks. The
//! estimator alternates masked contrastive gradient steps with hard
//! thresholding, and adapts a per-edge masking probability to the estimated
//! signal-to-noise ratio of each edge, so that noisy edges are contrasted
//! more aggressively than clean ones.
//!
//! Modules:
//! - [`core`]: datasets, edge indexing, embedding containers, persistence.
//! - [`masking`]: masking parameters, mask sampling, the adaptive update.
//! - [`estimator`]: loss, gradient, hard threshold, and the fitting loop.
//! - [`init`]: centered Gram matrix and spectral / Fantope initializers.
//! - [`spca`]: sparse PCA baseline via row-truncated power iteration.
//! - [`downstream`]: subject embeddings, classification, edge selection,
//!   spectral community detection.
//! - [`simgen`]: seeded synthetic-data generators and train/test splits.
//! - [`metrics`]: evaluation metrics and experiment-record aggregation.
//! - [`cli`]: command-line front end (simulate / fit / tasks / experiment /
//!   tune).

pub mod cli;
pub mod core;
pub mod downstream;
pub mod error;
pub mod estimator;
pub mod init;
mod linalg;
pub mod masking;
pub mod metrics;
pub mod simgen;
pub mod spca;

pub use crate::core::{
    devectorize_edges, load_model, save_model, vectorize_adjacency, EdgeIndexMap, EmbeddingMatrix,
    FitResult, NetworkDataset, SubjectEmbedding, TraceRecord, SCHEMA_VERSION,
};
pub use crate::error::{Error, Result};
pub use crate::estimator::{
    default_init, default_iteration_count, empirical_loss, expected_loss_surrogate, fit,
    hard_threshold, loss_gradient, AcerlConfig, DiagWeight, InitMethod, FANTOPE_DIM_LIMIT,
};
pub use crate::init::{centered_gram, fantope_project, initial_embedding, AdmmParams, CenteredGram};
pub use crate::masking::{
    mask_moment, sample_mask, update_masking_params, MaskDiagonal, MaskingParams, VARIANCE_FLOOR,
};
