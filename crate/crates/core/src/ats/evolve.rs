use std::collections::{BTreeMap, BTreeSet};

use chrono::Utc;
use serde::{Deserialize, Serialize};

use super::{
    AtsError, AuditDecision, Decision, DecisionLogEntry, Evaluation, Prediction, ProtocolHistory,
    RoundConfig, RoundReport,
};
use crate::sampling::score_annotator;
use crate::store::{AcceptedChange, BenchmarkStore};
use crate::types::{ClaimId, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub scoreable: usize,
    pub correct: usize,
    pub accuracy: Option<f64>,
}

/// Binary-collapse accuracy of `predictions` over the claims of `labels`
/// whose label is verifiable. Abstentions and missing predictions are wrong.
pub fn score_predictions(
    predictions: &BTreeMap<ClaimId, Prediction>,
    labels: &BTreeMap<ClaimId, Verdict>,
) -> Score {
    let mut scoreable = 0;
    let mut correct = 0;
    for (id, gold) in labels {
        let Some(gold) = gold.collapse() else { continue };
        scoreable += 1;
        let hit = predictions
            .get(id)
            .and_then(|p| p.verdict())
            .and_then(Verdict::collapse)
            == Some(gold);
        correct += hit as usize;
    }
    Score {
        scoreable,
        correct,
        accuracy: (scoreable > 0).then(|| correct as f64 / scoreable as f64),
    }
}

/// Share of micro-gold claims whose benchmark label collapses to the hidden
/// gold label; `None` without calibration items.
pub fn microgold_accuracy(
    labels: &BTreeMap<ClaimId, Verdict>,
    calibration: &BTreeMap<ClaimId, Verdict>,
) -> Option<f64> {
    score_annotator(labels, calibration).ok().map(|r| r.accuracy())
}

/// Everything a round produced before commit.
#[derive(Debug, Clone)]
pub struct RoundInput {
    pub evaluation: Evaluation,
    pub config: RoundConfig,
    /// Disputes selected for audit, in queue order.
    pub audit_set: Vec<ClaimId>,
    /// Selected disputes that were explicitly left unaudited.
    pub skipped: Vec<ClaimId>,
    pub decisions: Vec<AuditDecision>,
}

/// Applies the accepted decisions to the head, then scores the round's
/// predictions against the resulting version and records the round.
pub fn evolve_and_score(
    store: &mut BenchmarkStore,
    history: &mut ProtocolHistory,
    input: RoundInput,
) -> Result<RoundReport, AtsError> {
    let head = store
        .head()
        .ok_or_else(|| AtsError::NotFound("benchmark not initialized".into()))?;
    let ev = &input.evaluation;
    if head.version() != ev.base_version {
        return Err(AtsError::ProtocolViolation(format!(
            "round evaluated version {} but head is {}",
            ev.base_version,
            head.version()
        )));
    }
    let proposals: BTreeMap<_, _> = ev.proposals.iter().map(|p| (&p.claim_id, p)).collect();
    let audit_set: BTreeSet<_> = input.audit_set.iter().collect();
    if audit_set.len() != input.audit_set.len() {
        return Err(AtsError::ProtocolViolation("audit set lists a dispute twice".into()));
    }
    for id in &input.audit_set {
        if !proposals.contains_key(id) {
            return Err(AtsError::ProtocolViolation(format!("{id} is not a conflict")));
        }
    }
    let skipped: BTreeSet<_> = input.skipped.iter().collect();
    if let Some(id) = skipped.iter().find(|id| !audit_set.contains(*id)) {
        return Err(AtsError::ProtocolViolation(format!("skipped {id} was never selected")));
    }

    let mut by_claim: BTreeMap<&ClaimId, &AuditDecision> = BTreeMap::new();
    for d in &input.decisions {
        if !audit_set.contains(&d.claim_id) || skipped.contains(&d.claim_id) {
            return Err(AtsError::ProtocolViolation(format!(
                "decision on unaudited dispute {}",
                d.claim_id
            )));
        }
        if by_claim.insert(&d.claim_id, d).is_some() {
            return Err(AtsError::ProtocolViolation(format!("two decisions on {}", d.claim_id)));
        }
        let p = proposals[&d.claim_id];
        let expected = match d.decision {
            Decision::Accept => p.proposed_verdict,
            Decision::Reject => p.incumbent_verdict,
        };
        if d.final_verdict != expected {
            return Err(AtsError::ProtocolViolation(format!(
                "decision on {} installs {} instead of {}",
                d.claim_id, d.final_verdict, expected
            )));
        }
    }
    if let Some(open) = input
        .audit_set
        .iter()
        .find(|id| !skipped.contains(id) && !by_claim.contains_key(id))
    {
        return Err(AtsError::ProtocolViolation(format!("dispute {open} is still open")));
    }

    let mut accepted_log = Vec::new();
    let mut rejected_log = Vec::new();
    let mut changes = Vec::new();
    for id in &input.audit_set {
        let Some(d) = by_claim.get(id) else { continue };
        let p = proposals[id];
        let entry = DecisionLogEntry::new(p, d);
        match d.decision {
            Decision::Accept => {
                changes.push(AcceptedChange {
                    claim_id: p.claim_id.clone(),
                    old_verdict: p.incumbent_verdict,
                    new_verdict: d.final_verdict,
                    new_rationale: d.final_rationale.clone(),
                    decided_by: d.auditor.clone(),
                    proposed_by: p.challenger.clone(),
                });
                accepted_log.push(entry);
            }
            Decision::Reject => rejected_log.push(entry),
        }
    }

    let staged = store.stage_changes(changes);
    let round = staged.first().map(|c| c.round).unwrap_or(head.version() + 1);
    let next = store.apply_changeset(staged)?;
    let labels = next.labels();
    let score = score_predictions(&ev.predictions, &labels);
    let cumulative_changes = history.changes_since_calibration() + accepted_log.len();
    let report = RoundReport {
        round,
        base_version: head.version(),
        version: next.version(),
        snapshot_digest: next.snapshot_digest().to_owned(),
        challenger: ev.challenger.clone(),
        config: input.config,
        predictions: ev.predictions.clone(),
        conflicts: ev.proposals.len(),
        audited: by_claim.len(),
        accepted: accepted_log.len(),
        accepted_log,
        rejected_log,
        skipped: input.skipped.clone(),
        scoreable: score.scoreable,
        score: score.accuracy,
        microgold_accuracy: microgold_accuracy(&labels, &store.calibration_labels()),
        cumulative_changes,
        cumulative_change_fraction: cumulative_changes as f64 / next.len().max(1) as f64,
        committed_at: Utc::now(),
    };
    history.push_round(report.clone());
    Ok(report)
}
