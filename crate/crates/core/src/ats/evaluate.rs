use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{AtsError, Prediction, Proposal};
use crate::metrics::TokenLedger;
use crate::store::{BenchmarkStore, BenchmarkVersion, ClaimRecord, ReportDocument};
use crate::types::{ActorId, ClaimId, Rationale, Verdict};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChallengerOutput {
    pub verdict: Verdict,
    pub rationale: Rationale,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[error("challenger failed on {claim_id}: {message}")]
pub struct ChallengerError {
    pub claim_id: ClaimId,
    pub message: String,
}

/// A verifier whose verdicts are checked against the benchmark.
///
/// Implementations are called concurrently for different claims and see
/// neither the incumbent label nor any calibration data.
pub trait Challenger: Sync {
    fn id(&self) -> ActorId;

    fn verify(
        &self,
        claim: &ClaimRecord,
        report: &ReportDocument,
    ) -> Result<ChallengerOutput, ChallengerError>;

    /// Provider usage accumulated so far, drained by the caller.
    fn take_ledger(&self) -> Option<TokenLedger> {
        None
    }
}

/// Predictions on every entry plus the disagreements, in dispute order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub challenger: ActorId,
    pub base_version: u64,
    pub predictions: BTreeMap<ClaimId, Prediction>,
    pub proposals: Vec<Proposal>,
    pub failures: Vec<ChallengerError>,
    /// Token usage reported by the challenger, if it keeps one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ledger: Option<TokenLedger>,
}

/// Runs the challenger over every entry of `version`.
///
/// A failure, or a `NoneVerifiable` answer on a claim whose incumbent is
/// verifiable, is recorded as an abstention and raises no proposal.
/// Proposals are ordered by report ingestion order, then sentence order.
pub fn run_evaluation(
    store: &BenchmarkStore,
    version: &BenchmarkVersion,
    challenger: &dyn Challenger,
) -> Result<Evaluation, AtsError> {
    let mut work = Vec::with_capacity(version.len());
    for entry in version.entries().values() {
        let claim = store
            .claim(&entry.claim_id)
            .ok_or_else(|| AtsError::NotFound(format!("claim {}", entry.claim_id)))?;
        let report = store
            .report(&claim.report_id)
            .ok_or_else(|| AtsError::NotFound(format!("report {}", claim.report_id)))?;
        let position = store.claim_position(&entry.claim_id).unwrap_or((usize::MAX, usize::MAX));
        work.push((position, entry, claim, report));
    }
    let challenger_id = challenger.id();
    let outputs: Vec<_> = work
        .par_iter()
        .map(|(_, _, claim, report)| challenger.verify(claim, report))
        .collect();

    let mut predictions = BTreeMap::new();
    let mut proposals = Vec::new();
    let mut failures = Vec::new();
    for ((position, entry, _, _), out) in work.into_iter().zip(outputs) {
        let incumbent = entry.verdict;
        let prediction = match out {
            Err(e) => {
                failures.push(e);
                Prediction::Abstain
            }
            Ok(o) if o.verdict == Verdict::NoneVerifiable && incumbent != Verdict::NoneVerifiable => {
                Prediction::Abstain
            }
            Ok(o) => {
                if o.verdict != incumbent {
                    proposals.push((
                        position,
                        Proposal {
                            claim_id: entry.claim_id.clone(),
                            proposed_verdict: o.verdict,
                            proposed_rationale: o.rationale,
                            challenger: challenger_id.clone(),
                            incumbent_verdict: incumbent,
                            incumbent_rationale: entry.rationale.clone(),
                        },
                    ));
                }
                Prediction::Label(o.verdict)
            }
        };
        predictions.insert(entry.claim_id.clone(), prediction);
    }
    proposals.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.claim_id.cmp(&b.1.claim_id)));
    Ok(Evaluation {
        challenger: challenger_id,
        base_version: version.version(),
        predictions,
        proposals: proposals.into_iter().map(|(_, p)| p).collect(),
        failures,
        ledger: challenger.take_ledger(),
    })
}
