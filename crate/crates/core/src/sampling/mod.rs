//! Importance and risk stratified sampling of claims for annotation, hidden
//! micro-gold injection, and annotator reliability scoring.

mod draw;
mod injection;
mod quotas;
mod reliability;

pub use draw::{sample_batch, sample_claims, SampledBatch};
pub use injection::{
    microgold_count_for, plan_microgold_injection, split_by_ratio, AnnotatorBatch, AnnotatorItem,
    Assignment, InjectionPlan, DEFAULT_MICROGOLD_SHARE, DEFAULT_SUPPORTED_TO_UNSUPPORTED,
};
pub use quotas::{allocate_quotas, SamplingPlan};
pub use reliability::{score_annotator, ReliabilityReport, ReliabilityScore};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SamplingError {
    #[error("invalid sampling plan: {0}")]
    InvalidPlan(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("quota {quota} for level {level} exceeds the {available} available claims")]
    ImpossibleQuota {
        level: u8,
        quota: usize,
        available: usize,
    },
    #[error("micro-gold pool is short by {supported} supported and {unsupported} unsupported items")]
    InsufficientPool { supported: usize, unsupported: usize },
}
