use std::collections::BTreeMap;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{microgold_accuracy, AtsError, AuditFraction, Decision, ProtocolHistory, RoundReport};
use crate::store::BenchmarkStore;
use crate::types::{round_half_up, ClaimId, Verdict};

/// Recorded rounds plus the starting labels and hidden calibration labels
/// needed to re-run them offline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayInput {
    pub initial_labels: BTreeMap<ClaimId, Verdict>,
    pub calibration: BTreeMap<ClaimId, Verdict>,
    pub rounds: Vec<RoundReport>,
}

impl ReplayInput {
    pub fn from_store(store: &BenchmarkStore, history: &ProtocolHistory) -> Result<Self, AtsError> {
        let v0 = store
            .version(0)
            .ok_or_else(|| AtsError::NotFound("benchmark not initialized".into()))?;
        Ok(Self {
            initial_labels: v0.labels(),
            calibration: store.calibration_labels(),
            rounds: history.rounds.clone(),
        })
    }

    /// Micro-gold accuracy after each recorded round.
    pub fn recorded_trajectory(&self) -> Vec<Option<f64>> {
        self.rounds.iter().map(|r| r.microgold_accuracy).collect()
    }

    pub fn initial_accuracy(&self) -> Option<f64> {
        microgold_accuracy(&self.initial_labels, &self.calibration)
    }
}

type DecisionKey = (ClaimId, Verdict);

fn round_decisions(r: &RoundReport) -> BTreeMap<DecisionKey, Decision> {
    r.accepted_log
        .iter()
        .chain(&r.rejected_log)
        .map(|e| ((e.claim_id.clone(), e.proposed_verdict), e.decision))
        .collect()
}

/// Re-runs the recorded rounds auditing only a `p` share of each round's
/// conflicts, sampled independently per round.
///
/// Conflicts are recomputed from the recorded predictions against the
/// replayed labels, so a conflict left unaudited earlier can resurface. An
/// audited conflict reuses the recorded decision for the same claim and
/// proposed verdict, looked up in the current round first and then in
/// earlier rounds. Returns the micro-gold accuracy after every round.
pub fn replay_counterfactual(
    input: &ReplayInput,
    p: AuditFraction,
    seed: u64,
) -> Result<Vec<f64>, AtsError> {
    if input.calibration.is_empty() {
        return Err(AtsError::InsufficientHistory("no calibration labels to track".into()));
    }
    let decisions: Vec<_> = input.rounds.iter().map(round_decisions).collect();
    let mut state = input.initial_labels.clone();
    let mut trajectory = Vec::with_capacity(input.rounds.len());
    for (i, round) in input.rounds.iter().enumerate() {
        let conflicts: Vec<DecisionKey> = round
            .predictions
            .iter()
            .filter_map(|(id, pred)| {
                let v = pred.verdict()?;
                let current = *state.get(id)?;
                let abstains = v == Verdict::NoneVerifiable && current != Verdict::NoneVerifiable;
                (v != current && !abstains).then(|| (id.clone(), v))
            })
            .collect();
        let k = if p.is_full() {
            conflicts.len()
        } else {
            round_half_up(p.get() * conflicts.len() as f64).min(conflicts.len())
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(round.round);
        let audited = index::sample(&mut rng, conflicts.len(), k);
        let mut updates = Vec::new();
        for j in audited.iter() {
            let key = &conflicts[j];
            let decision = decisions[..=i]
                .iter()
                .rev()
                .find_map(|d| d.get(key))
                .ok_or_else(|| {
                    AtsError::InsufficientHistory(format!(
                        "round {} has no recorded decision for {} -> {}",
                        round.round, key.0, key.1
                    ))
                })?;
            if *decision == Decision::Accept {
                updates.push(key.clone());
            }
        }
        for (id, v) in updates {
            state.insert(id, v);
        }
        trajectory.push(
            microgold_accuracy(&state, &input.calibration).expect("calibration checked non-empty"),
        );
    }
    Ok(trajectory)
}
