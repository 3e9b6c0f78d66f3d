//! Audit-then-Score rounds: a challenger is run against the current version,
//! its disagreements are adjudicated by auditors, accepted changes produce
//! the next version, and the challenger is scored against that version.

mod audit;
mod engine;
mod evaluate;
mod evolve;
mod maintenance;
mod replay;
pub mod sim;
mod types;

pub use audit::{
    adjudicate, check_panel, combine_votes, requires_error_code, select_disputes, select_indices,
    Auditor,
};
pub use engine::{collect_votes, run_round, DisputeStatus, OpenRound, RoundProgress};
pub use evaluate::{run_evaluation, Challenger, ChallengerError, ChallengerOutput, Evaluation};
pub use evolve::{evolve_and_score, microgold_accuracy, score_predictions, RoundInput, Score};
pub use maintenance::{
    drift_exceeded, maintenance_check, CalibrationMark, MaintenanceAction, ProtocolHistory,
    StopReason, DRIFT_GUARD_PERCENT,
};
pub use replay::{replay_counterfactual, ReplayInput};
pub use types::{
    AuditDecision, AuditFraction, AuditorKind, CastVote, Confidence, Decision, DecisionLogEntry,
    Prediction, Proposal, RoundConfig, RoundReport, StoppingCriteria, Vote,
};

use crate::store::StoreError;

#[derive(Debug, thiserror::Error)]
pub enum AtsError {
    #[error("invalid round configuration: {0}")]
    InvalidConfig(String),
    #[error("protocol violation: {0}")]
    ProtocolViolation(String),
    #[error("insufficient history: {0}")]
    InsufficientHistory(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("conflict: {0}")]
    Conflict(String),
    #[error(transparent)]
    Store(#[from] StoreError),
}
