//! Wire forms served to auditors. None of these types carry calibration
//! data or the identity of whoever wrote an existing rationale.

use serde::{Deserialize, Serialize};

use evobench::ats::{DisputeStatus, Proposal};
use evobench::harness::section_bounds;
use evobench::store::{ClaimRecord, ReportDocument};
use evobench::types::{BinaryLabel, ErrorCode, ErrorStage, Rationale, Verdict};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelDefinition {
    pub label: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collapses_to: Option<BinaryLabel>,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorCodeInfo {
    pub code: ErrorCode,
    pub name: String,
    pub stage: ErrorStage,
}

fn describe(v: Verdict) -> &'static str {
    match v {
        Verdict::Supported => "Reliable sources back every factual detail of the sentence.",
        Verdict::Inconclusive => "The available evidence neither settles nor refutes the sentence.",
        Verdict::Contradictory => "Reliable sources conflict with at least one detail of the sentence.",
        Verdict::NoneVerifiable => "The sentence makes no checkable factual statement.",
    }
}

pub fn label_definitions() -> Vec<LabelDefinition> {
    Verdict::ALL
        .iter()
        .map(|&label| LabelDefinition {
            label,
            collapses_to: label.collapse(),
            description: describe(label).into(),
        })
        .collect()
}

pub fn error_codes() -> Vec<ErrorCodeInfo> {
    ErrorCode::ALL
        .iter()
        .map(|&code| ErrorCodeInfo {
            code,
            name: code.name().into(),
            stage: code.stage(),
        })
        .collect()
}

/// Character offsets into the report body.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Excerpt {
    pub text: String,
    /// Where `text` sits in the report.
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Side {
    pub verdict: Verdict,
    pub rationale: String,
    pub evidence_refs: Vec<String>,
}

impl Side {
    fn new(verdict: Verdict, r: &Rationale) -> Self {
        Self {
            verdict,
            rationale: r.text.clone(),
            evidence_refs: r.evidence_refs.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueuePosition {
    /// One-based.
    pub index: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisputeView {
    pub dispute_id: String,
    pub round_id: String,
    pub claim_id: String,
    pub status: DisputeStatus,
    pub claim_text: String,
    pub report_id: String,
    pub excerpt: Excerpt,
    /// The claim sentence, in report offsets.
    pub claim_span: Span,
    pub incumbent: Side,
    pub proposal: Side,
    pub position: QueuePosition,
    pub label_definitions: Vec<LabelDefinition>,
    pub error_codes: Vec<ErrorCodeInfo>,
}

pub struct DisputeContext<'a> {
    pub dispute_id: String,
    pub round_id: &'a str,
    pub status: DisputeStatus,
    pub proposal: &'a Proposal,
    pub claim: &'a ClaimRecord,
    pub report: &'a ReportDocument,
    pub position: QueuePosition,
}

impl DisputeView {
    pub fn build(cx: DisputeContext<'_>) -> Self {
        let span = cx
            .report
            .span(cx.claim.sentence_id)
            .map(|s| Span { start: s.start, end: s.end })
            .unwrap_or(Span { start: 0, end: 0 });
        let (s, e) = section_bounds(&cx.report.body, span.start, span.end);
        Self {
            dispute_id: cx.dispute_id,
            round_id: cx.round_id.to_owned(),
            claim_id: cx.claim.claim_id.to_string(),
            status: cx.status,
            claim_text: cx.claim.text.clone(),
            report_id: cx.report.report_id.to_string(),
            excerpt: Excerpt {
                text: cx.report.slice(s, e).unwrap_or_default().to_owned(),
                span: Span { start: s, end: e },
            },
            claim_span: span,
            incumbent: Side::new(cx.proposal.incumbent_verdict, &cx.proposal.incumbent_rationale),
            proposal: Side::new(cx.proposal.proposed_verdict, &cx.proposal.proposed_rationale),
            position: cx.position,
            label_definitions: label_definitions(),
            error_codes: error_codes(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundState {
    AwaitingAudit,
    Committed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisputeQueue {
    pub round_id: String,
    pub state: RoundState,
    pub total: usize,
    pub remaining: usize,
    /// Open disputes still waiting on the requested actor, in queue order.
    pub disputes: Vec<DisputeView>,
}
