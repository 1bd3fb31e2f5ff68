//! Gaussian-process belief over the unknown scalar field.

mod belief;
mod kernel;
pub(crate) mod linalg;
mod spectral;

pub use belief::{GpBelief, Posterior, Projection, JITTER, REFACTOR_EVERY};
pub use kernel::{CompiledKernel, Kernel};
pub use spectral::{argmax_of_sample, spectral_sample, SearchDomain, SpectralSample, DEFAULT_FEATURES};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GpError {
    #[error("kernel matrix is not positive definite even after adding diagonal jitter {jitter:e}")]
    Factorization { jitter: f64 },
    #[error("input has dimension {got}, belief expects {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("noise variance must be positive and finite, got {0}")]
    InvalidNoise(f64),
    #[error("{inputs} inputs but {observations} observations")]
    LengthMismatch { inputs: usize, observations: usize },
    #[error("{features} random features cannot condition on {observations} observations; increase the feature count")]
    TooFewFeatures { features: usize, observations: usize },
    #[error("feasible search domain is empty")]
    EmptyDomain,
    #[error("projection was not computed against an ancestor of this belief")]
    ForeignProjection,
    #[error("no sample locations given")]
    NoLocations,
}
