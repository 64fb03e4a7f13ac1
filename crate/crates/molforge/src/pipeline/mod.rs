//! End-to-end orchestration: dataset curation, staged training and
//! generation with checkpoint-based resume, and report emission.

mod config;
mod corpus;
mod ingest;
mod report;
mod run;

pub use config::{Profile, RunConfig};
pub use corpus::{random_walk, toy_corpus, DRUG_SMILES};
pub use ingest::{ingest, CurationOutcome, DatasetRecord};
pub use report::{pareto_csv, pareto_svg, top_k_csv, MethodPool, RankedRow};
pub use run::{clear_stage, load_score_fn, run_ablation, run_all, stage, Artifacts, Stage};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config error: {0}")]
    Config(String),
    #[error("missing column '{0}' in input csv")]
    MissingColumn(String),
    #[error("no rows survived curation")]
    EmptyAfterCuration,
    #[error("stage {stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<dyn std::error::Error + Send + Sync>,
    },
    #[error("io: {0}")]
    Io(String),
}

impl PipelineError {
    pub(crate) fn in_stage(
        stage: &'static str,
        source: impl std::error::Error + Send + Sync + 'static,
    ) -> PipelineError {
        PipelineError::Stage { stage, source: Box::new(source) }
    }
}

impl From<std::io::Error> for PipelineError {
    fn from(e: std::io::Error) -> Self {
        PipelineError::Io(e.to_string())
    }
}

/// Writes a file atomically (temp then rename).
pub(crate) fn write_atomic(path: &std::path::Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)
}
