//! Latent-space property optimization: a Gaussian-process surrogate over
//! latent codes with expected-improvement proposals, batched over a fixed
//! iteration budget.

mod bo;
mod ei;
mod gp;

pub use bo::{bo_latent_maximize, bo_loop, BoConfig, BoOutcome, BoTraceRow};
pub use ei::{expected_improvement, normal_cdf, normal_pdf};
pub use gp::{gp_fit, GpConfig, GpModel};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BayesoptError {
    #[error("kernel matrix is singular even after jitter escalation")]
    SingularKernel,
    #[error("need at least one training point")]
    EmptyTrainingSet,
    #[error("dimension mismatch: point has {got}, model has {want}")]
    DimensionMismatch { got: usize, want: usize },
    #[error(transparent)]
    Jtvae(#[from] crate::jtvae::JtvaeError),
    #[error(transparent)]
    Score(#[from] crate::scoring::ScoreError),
}
