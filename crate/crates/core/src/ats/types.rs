use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::AtsError;
use crate::types::{ActorId, ClaimId, ErrorCode, Rationale, Verdict};

/// A challenger's disagreement with the incumbent verdict of one claim.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Proposal {
    pub claim_id: ClaimId,
    pub proposed_verdict: Verdict,
    pub proposed_rationale: Rationale,
    pub challenger: ActorId,
    pub incumbent_verdict: Verdict,
    pub incumbent_rationale: Rationale,
}

/// A challenger's output on one claim as recorded for scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Prediction {
    Label(Verdict),
    /// The challenger failed or declined to label a labeled claim.
    Abstain,
}

impl Prediction {
    pub fn verdict(self) -> Option<Verdict> {
        match self {
            Prediction::Label(v) => Some(v),
            Prediction::Abstain => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Prediction::Label(v) => v.as_str(),
            Prediction::Abstain => "abstain",
        }
    }
}

impl fmt::Display for Prediction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Prediction {
    type Err = crate::types::UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("abstain") {
            Ok(Prediction::Abstain)
        } else {
            s.parse().map(Prediction::Label)
        }
    }
}

impl Serialize for Prediction {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Prediction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Decision {
    Accept,
    Reject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditorKind {
    Human,
    Agent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Confidence {
    Certain,
    Confident,
    Uncertain,
}

/// One auditor's judgment on a dispute.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vote {
    pub decision: Decision,
    /// Replaces the challenger's rationale when accepting.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rationale: Option<Rationale>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_code: Option<ErrorCode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<Confidence>,
}

impl Vote {
    pub fn accept() -> Self {
        Self::plain(Decision::Accept)
    }

    pub fn reject() -> Self {
        Self::plain(Decision::Reject)
    }

    fn plain(decision: Decision) -> Self {
        Self {
            decision,
            rationale: None,
            error_code: None,
            confidence: None,
        }
    }

    pub fn with_rationale(mut self, rationale: Rationale) -> Self {
        self.rationale = Some(rationale);
        self
    }

    pub fn with_error_code(mut self, code: ErrorCode) -> Self {
        self.error_code = Some(code);
        self
    }

    pub fn with_confidence(mut self, confidence: Confidence) -> Self {
        self.confidence = Some(confidence);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CastVote {
    pub auditor: ActorId,
    pub kind: AuditorKind,
    pub vote: Vote,
    pub cast_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditDecision {
    pub claim_id: ClaimId,
    pub decision: Decision,
    pub final_verdict: Verdict,
    pub final_rationale: Rationale,
    pub auditor: ActorId,
    pub auditor_kind: AuditorKind,
    pub votes: Vec<CastVote>,
}

impl AuditDecision {
    pub fn confidence(&self) -> Option<Confidence> {
        self.votes.iter().find_map(|v| v.vote.confidence)
    }

    pub fn error_code(&self) -> Option<ErrorCode> {
        self.votes.iter().find_map(|v| v.vote.error_code)
    }
}

/// Fraction of a round's conflicts sent to audit, in (0, 1].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct AuditFraction(f64);

impl AuditFraction {
    pub const FULL: AuditFraction = AuditFraction(1.0);

    pub fn new(p: f64) -> Result<Self, AtsError> {
        if p > 0.0 && p <= 1.0 {
            Ok(Self(p))
        } else {
            Err(AtsError::InvalidConfig(format!("audit fraction must be in (0, 1], got {p}")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    pub fn is_full(self) -> bool {
        self.0 == 1.0
    }
}

impl TryFrom<f64> for AuditFraction {
    type Error = AtsError;

    fn try_from(p: f64) -> Result<Self, Self::Error> {
        Self::new(p)
    }
}

impl From<AuditFraction> for f64 {
    fn from(p: AuditFraction) -> f64 {
        p.0
    }
}

impl Default for AuditFraction {
    fn default() -> Self {
        Self::FULL
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StoppingCriteria {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_rounds: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub microgold_target: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audit_budget: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundConfig {
    #[serde(default)]
    pub audit_fraction: AuditFraction,
    #[serde(default)]
    pub strict_mode: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub stopping: StoppingCriteria,
}

impl Default for RoundConfig {
    fn default() -> Self {
        Self {
            audit_fraction: AuditFraction::FULL,
            strict_mode: false,
            seed: 0,
            stopping: StoppingCriteria::default(),
        }
    }
}

impl RoundConfig {
    pub fn validate(&self) -> Result<(), AtsError> {
        if let Some(t) = self.stopping.microgold_target {
            if !(0.0..=1.0).contains(&t) {
                return Err(AtsError::InvalidConfig(format!(
                    "micro-gold target must be in [0, 1], got {t}"
                )));
            }
        }
        AuditFraction::new(self.audit_fraction.get()).map(|_| ())
    }
}

/// One audited dispute as it appears in a round report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionLogEntry {
    pub claim_id: ClaimId,
    pub incumbent_verdict: Verdict,
    pub proposed_verdict: Verdict,
    pub decision: Decision,
    pub final_verdict: Verdict,
    pub auditor: ActorId,
    pub auditor_kind: AuditorKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<Confidence>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_code: Option<ErrorCode>,
    pub rationale_text: String,
}

impl DecisionLogEntry {
    pub(crate) fn new(p: &Proposal, d: &AuditDecision) -> Self {
        Self {
            claim_id: p.claim_id.clone(),
            incumbent_verdict: p.incumbent_verdict,
            proposed_verdict: p.proposed_verdict,
            decision: d.decision,
            final_verdict: d.final_verdict,
            auditor: d.auditor.clone(),
            auditor_kind: d.auditor_kind,
            confidence: d.confidence(),
            error_code: d.error_code(),
            rationale_text: d.final_rationale.text.clone(),
        }
    }
}

/// Outcome of one committed round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundReport {
    pub round: u64,
    pub base_version: u64,
    pub version: u64,
    pub snapshot_digest: String,
    pub challenger: ActorId,
    pub config: RoundConfig,
    pub predictions: BTreeMap<ClaimId, Prediction>,
    pub conflicts: usize,
    pub audited: usize,
    pub accepted: usize,
    pub accepted_log: Vec<DecisionLogEntry>,
    pub rejected_log: Vec<DecisionLogEntry>,
    /// Disputes selected for audit but explicitly skipped; left unchanged.
    pub skipped: Vec<ClaimId>,
    /// Claims of the new version with a verifiable label.
    pub scoreable: usize,
    /// Binary-collapse accuracy of the predictions against the new version.
    pub score: Option<f64>,
    pub microgold_accuracy: Option<f64>,
    pub cumulative_changes: usize,
    pub cumulative_change_fraction: f64,
    pub committed_at: DateTime<Utc>,
}

impl RoundReport {
    /// Every conflict in the round went to an auditor and got a decision.
    pub fn is_full_audit(&self) -> bool {
        self.audited == self.conflicts && self.skipped.is_empty()
    }
}
