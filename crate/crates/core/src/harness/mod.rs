//! Document-level claim verification pipeline driven by abstract text-model
//! and search providers, with budget enforcement and token accounting.
//!
//! A run reads the whole report for context, then iterates: plan search
//! queries, retrieve and summarize documents, ask per-document detail
//! questions, and judge whether the evidence suffices. The final verdict
//! cites only documents that were retained.

mod challenger;
mod fixture;
mod pipeline;
mod spec;

use serde::{Deserialize, Serialize};

pub use challenger::PipelineChallenger;
pub use fixture::{FixtureCompletion, FixtureModel, FixtureScript, FixtureSearch};
pub use pipeline::{
    extract_context, extract_section, section_bounds, group_windows, verify_claim, verify_group, ClaimVerdict,
    EvidenceDoc, GroupOutcome, TraceStep, VerificationTrace,
};
pub use spec::ChallengerSpec;

use crate::types::ClaimId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Context,
    Plan,
    Summarize,
    Depth,
    Sufficiency,
    Verdict,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Context => "context",
            Stage::Plan => "plan",
            Stage::Summarize => "summarize",
            Stage::Depth => "depth",
            Stage::Sufficiency => "sufficiency",
            Stage::Verdict => "verdict",
        }
    }
}

/// One text-model call. `key` names the claim or group (`c1+c2`), `step` is
/// the iteration (0 for context extraction), `document` the source a
/// per-document call is about, and `focus` the character span of the claims
/// inside `prompt` when the prompt is the report body.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub stage: Stage,
    pub step: u32,
    pub key: String,
    pub prompt: String,
    pub max_tokens: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub document: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub focus: Option<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Completion {
    pub text: String,
    pub input_tokens: u64,
    pub output_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchHit {
    pub source_id: String,
    pub url: String,
    pub snippet: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{provider}: {message}")]
pub struct ProviderError {
    pub provider: String,
    pub message: String,
}

pub trait TextModel: Sync + Send {
    fn model_id(&self) -> &str;
    fn complete(&self, request: &CompletionRequest) -> Result<Completion, ProviderError>;
}

pub trait SearchEngine: Sync + Send {
    fn provider_id(&self) -> &str;
    fn search(&self, query: &str) -> Result<Vec<SearchHit>, ProviderError>;
}

/// The verifier model, an auxiliary model for document summaries, and search.
#[derive(Clone, Copy)]
pub struct Providers<'a> {
    pub verifier: &'a dyn TextModel,
    pub summarizer: &'a dyn TextModel,
    pub search: &'a dyn SearchEngine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineBudget {
    pub max_steps: u32,
    pub max_queries_per_step: u32,
    pub max_sources: u32,
    pub max_completion_tokens: u32,
}

impl Default for PipelineBudget {
    fn default() -> Self {
        Self {
            max_steps: 2,
            max_queries_per_step: 5,
            max_sources: 40,
            max_completion_tokens: 8192,
        }
    }
}

impl PipelineBudget {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let all = [
            self.max_steps,
            self.max_queries_per_step,
            self.max_sources,
            self.max_completion_tokens,
        ];
        if all.contains(&0) {
            return Err(HarnessError::InvalidBudget(*self));
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("precondition violated: {0}")]
    PreconditionViolation(String),
    #[error("budget limits must all be at least 1: {0:?}")]
    InvalidBudget(PipelineBudget),
    #[error("provider returned {output_tokens} tokens with a limit of {limit}")]
    TokenLimitExceeded { output_tokens: u64, limit: u32 },
    #[error("unusable verdict output for {key}: {message}")]
    MalformedOutput { key: String, message: String },
    #[error("no verdict for {0}")]
    MissingVerdict(ClaimId),
}
