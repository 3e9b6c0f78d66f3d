use std::collections::{BTreeMap, BTreeSet};

use chrono::Utc;
use serde::{Deserialize, Serialize};

use super::{
    check_panel, combine_votes, evolve_and_score, run_evaluation, select_indices, AtsError,
    AuditDecision, Auditor, AuditorKind, CastVote, Challenger, Evaluation, Proposal,
    ProtocolHistory, RoundConfig, RoundInput, RoundReport,
};
use crate::store::BenchmarkStore;
use crate::types::ClaimId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisputeStatus {
    Open,
    Decided,
    Skipped,
}

/// A round between evaluation and commit: the dispute queue with the votes
/// and decisions collected so far. Serializable so a service can persist it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpenRound {
    pub round: u64,
    pub config: RoundConfig,
    evaluation: Evaluation,
    audit_set: Vec<ClaimId>,
    votes: BTreeMap<ClaimId, Vec<CastVote>>,
    decisions: BTreeMap<ClaimId, AuditDecision>,
    skipped: BTreeSet<ClaimId>,
}

impl OpenRound {
    /// Runs the challenger on the head and queues a `p` share of its conflicts.
    pub fn open(
        store: &BenchmarkStore,
        challenger: &dyn Challenger,
        config: RoundConfig,
    ) -> Result<Self, AtsError> {
        config.validate()?;
        let head = store
            .head()
            .ok_or_else(|| AtsError::NotFound("benchmark not initialized".into()))?;
        let evaluation = run_evaluation(store, &head, challenger)?;
        Ok(Self::from_evaluation(evaluation, config))
    }

    pub fn from_evaluation(evaluation: Evaluation, config: RoundConfig) -> Self {
        let audit_set = select_indices(evaluation.proposals.len(), config.audit_fraction, config.seed)
            .into_iter()
            .map(|i| evaluation.proposals[i].claim_id.clone())
            .collect();
        Self {
            round: evaluation.base_version + 1,
            config,
            evaluation,
            audit_set,
            votes: BTreeMap::new(),
            decisions: BTreeMap::new(),
            skipped: BTreeSet::new(),
        }
    }

    pub fn evaluation(&self) -> &Evaluation {
        &self.evaluation
    }

    pub fn conflicts(&self) -> usize {
        self.evaluation.proposals.len()
    }

    /// Disputes selected for audit, in queue order.
    pub fn disputes(&self) -> Vec<&Proposal> {
        self.audit_set.iter().filter_map(|id| self.proposal(id)).collect()
    }

    fn proposal(&self, id: &ClaimId) -> Option<&Proposal> {
        self.evaluation.proposals.iter().find(|p| &p.claim_id == id)
    }

    pub fn dispute(&self, id: &ClaimId) -> Option<&Proposal> {
        self.audit_set.contains(id).then(|| self.proposal(id)).flatten()
    }

    /// Zero-based queue position of a dispute.
    pub fn position(&self, id: &ClaimId) -> Option<usize> {
        self.audit_set.iter().position(|c| c == id)
    }

    pub fn status(&self, id: &ClaimId) -> Option<DisputeStatus> {
        self.dispute(id)?;
        Some(if self.decisions.contains_key(id) {
            DisputeStatus::Decided
        } else if self.skipped.contains(id) {
            DisputeStatus::Skipped
        } else {
            DisputeStatus::Open
        })
    }

    pub fn decision(&self, id: &ClaimId) -> Option<&AuditDecision> {
        self.decisions.get(id)
    }

    pub fn votes(&self, id: &ClaimId) -> &[CastVote] {
        self.votes.get(id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn open_disputes(&self) -> Vec<&Proposal> {
        self.disputes()
            .into_iter()
            .filter(|p| self.status(&p.claim_id) == Some(DisputeStatus::Open))
            .collect()
    }

    pub fn remaining(&self) -> usize {
        self.open_disputes().len()
    }

    pub fn is_complete(&self) -> bool {
        self.remaining() == 0
    }

    fn ensure_open(&self, id: &ClaimId) -> Result<(), AtsError> {
        match self.status(id) {
            None => Err(AtsError::NotFound(format!("dispute {id}"))),
            Some(DisputeStatus::Open) => Ok(()),
            Some(s) => Err(AtsError::Conflict(format!("dispute {id} is already {s:?}").to_lowercase())),
        }
    }

    /// Records a vote. Returns the decision once the dispute is settled:
    /// immediately in single-auditor mode, after both a human and an agent
    /// have voted in strict mode.
    pub fn cast_vote(&mut self, id: &ClaimId, vote: CastVote) -> Result<Option<&AuditDecision>, AtsError> {
        self.ensure_open(id)?;
        let strict = self.config.strict_mode;
        let votes = self.votes.entry(id.clone()).or_default();
        if votes.iter().any(|v| v.auditor == vote.auditor) {
            return Err(AtsError::Conflict(format!("{} already voted on {id}", vote.auditor)));
        }
        votes.push(vote);
        let settled = !strict
            || [AuditorKind::Human, AuditorKind::Agent]
                .iter()
                .all(|k| votes.iter().any(|v| v.kind == *k));
        if !settled {
            return Ok(None);
        }
        let votes = self.votes.remove(id).unwrap_or_default();
        let proposal = self.proposal(id).expect("status checked");
        let decision = combine_votes(proposal, votes, strict)?;
        self.decisions.insert(id.clone(), decision);
        Ok(self.decisions.get(id))
    }

    /// Leaves a dispute unaudited; its incumbent verdict stays.
    pub fn skip(&mut self, id: &ClaimId) -> Result<(), AtsError> {
        self.ensure_open(id)?;
        self.votes.remove(id);
        self.skipped.insert(id.clone());
        Ok(())
    }

    pub fn commit(
        self,
        store: &mut BenchmarkStore,
        history: &mut ProtocolHistory,
    ) -> Result<RoundReport, AtsError> {
        if let Some(p) = self.open_disputes().first() {
            return Err(AtsError::ProtocolViolation(format!(
                "dispute {} is still open",
                p.claim_id
            )));
        }
        let skipped = self
            .audit_set
            .iter()
            .filter(|id| self.skipped.contains(*id))
            .cloned()
            .collect();
        let decisions = self
            .audit_set
            .iter()
            .filter_map(|id| self.decisions.get(id).cloned())
            .collect();
        evolve_and_score(
            store,
            history,
            RoundInput {
                evaluation: self.evaluation,
                config: self.config,
                audit_set: self.audit_set,
                skipped,
                decisions,
            },
        )
    }
}

#[derive(Debug)]
pub enum RoundProgress {
    Committed(Box<RoundReport>),
    /// Some auditor has not answered; the round stays open.
    Awaiting(Box<OpenRound>),
}

impl RoundProgress {
    pub fn committed(self) -> Option<RoundReport> {
        match self {
            RoundProgress::Committed(r) => Some(*r),
            RoundProgress::Awaiting(_) => None,
        }
    }
}

/// Asks each auditor in panel order for a vote on every open dispute.
/// Single-auditor mode consults only the first auditor.
pub fn collect_votes(open: &mut OpenRound, auditors: &[&dyn Auditor]) -> Result<(), AtsError> {
    let kinds: Vec<_> = auditors.iter().map(|a| a.kind()).collect();
    check_panel(&kinds, open.config.strict_mode)?;
    let panel = if open.config.strict_mode { auditors } else { &auditors[..1] };
    let pending: Vec<Proposal> = open.open_disputes().into_iter().cloned().collect();
    for dispute in &pending {
        for a in panel {
            if open.status(&dispute.claim_id) != Some(DisputeStatus::Open) {
                break;
            }
            if open.votes(&dispute.claim_id).iter().any(|v| v.auditor == a.id()) {
                continue;
            }
            if let Some(vote) = a.review(dispute) {
                open.cast_vote(
                    &dispute.claim_id,
                    CastVote {
                        auditor: a.id(),
                        kind: a.kind(),
                        vote,
                        cast_at: Utc::now(),
                    },
                )?;
            }
        }
    }
    Ok(())
}

/// One full round with synchronous auditors: evaluate, select, adjudicate,
/// and commit if every selected dispute got a decision.
pub fn run_round(
    store: &mut BenchmarkStore,
    history: &mut ProtocolHistory,
    challenger: &dyn Challenger,
    auditors: &[&dyn Auditor],
    config: RoundConfig,
) -> Result<RoundProgress, AtsError> {
    let kinds: Vec<_> = auditors.iter().map(|a| a.kind()).collect();
    check_panel(&kinds, config.strict_mode)?;
    let mut open = OpenRound::open(store, challenger, config)?;
    collect_votes(&mut open, auditors)?;
    if open.is_complete() {
        Ok(RoundProgress::Committed(Box::new(open.commit(store, history)?)))
    } else {
        Ok(RoundProgress::Awaiting(Box::new(open)))
    }
}
