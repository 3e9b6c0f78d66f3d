use chrono::Utc;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{AtsError, AuditDecision, AuditFraction, AuditorKind, CastVote, Decision, Proposal, Vote};
use crate::types::{round_half_up, ActorId, BinaryLabel};

/// Indices of the disputes to audit out of `n` conflicts: a uniform sample of
/// `round_half_up(p · n)` without replacement, in ascending order.
pub fn select_indices(n: usize, p: AuditFraction, seed: u64) -> Vec<usize> {
    if p.is_full() {
        return (0..n).collect();
    }
    let k = round_half_up(p.get() * n as f64).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, n, k).into_vec();
    picked.sort_unstable();
    picked
}

pub fn select_disputes(proposals: &[Proposal], p: AuditFraction, seed: u64) -> Vec<&Proposal> {
    select_indices(proposals.len(), p, seed)
        .into_iter()
        .map(|i| &proposals[i])
        .collect()
}

/// Anyone who can rule on a dispute. `None` means the auditor has not
/// answered yet (a human working through a queue).
pub trait Auditor: Sync {
    fn id(&self) -> ActorId;
    fn kind(&self) -> AuditorKind;
    fn review(&self, dispute: &Proposal) -> Option<Vote>;
}

/// Checks that the auditor panel can satisfy the gating mode.
pub fn check_panel(kinds: &[AuditorKind], strict: bool) -> Result<(), AtsError> {
    if kinds.is_empty() {
        return Err(AtsError::InvalidConfig("at least one auditor is required".into()));
    }
    if strict && !(kinds.contains(&AuditorKind::Human) && kinds.contains(&AuditorKind::Agent)) {
        return Err(AtsError::InvalidConfig(
            "strict mode needs both a human and an agent auditor".into(),
        ));
    }
    Ok(())
}

/// An outcome that lands on an unsupported label must name the error type.
pub fn requires_error_code(p: &Proposal, decision: Decision) -> bool {
    let v = match decision {
        Decision::Accept => p.proposed_verdict,
        Decision::Reject => p.incumbent_verdict,
    };
    v.collapse() == Some(BinaryLabel::Unsupported)
}

/// Folds collected votes into a decision. Non-strict: the first vote stands.
/// Strict: accepted only if every vote accepts.
pub fn combine_votes(dispute: &Proposal, votes: Vec<CastVote>, strict: bool) -> Result<AuditDecision, AtsError> {
    let first = votes
        .first()
        .ok_or_else(|| AtsError::ProtocolViolation(format!("no votes on {}", dispute.claim_id)))?;
    let decisive: &[CastVote] = if strict { &votes } else { &votes[..1] };
    let accepted = decisive.iter().all(|v| v.vote.decision == Decision::Accept);
    let (decision, final_verdict, final_rationale) = if accepted {
        let rationale = decisive
            .iter()
            .find_map(|v| v.vote.rationale.clone())
            .unwrap_or_else(|| dispute.proposed_rationale.clone());
        (Decision::Accept, dispute.proposed_verdict, rationale)
    } else {
        (Decision::Reject, dispute.incumbent_verdict, dispute.incumbent_rationale.clone())
    };
    Ok(AuditDecision {
        claim_id: dispute.claim_id.clone(),
        decision,
        final_verdict,
        final_rationale,
        auditor: first.auditor.clone(),
        auditor_kind: first.kind,
        votes: if strict { votes } else { votes.into_iter().take(1).collect() },
    })
}

/// Collects votes from `auditors` in order. Returns `Ok(None)` while a
/// required auditor has not answered.
pub fn adjudicate(
    dispute: &Proposal,
    auditors: &[&dyn Auditor],
    strict: bool,
) -> Result<Option<AuditDecision>, AtsError> {
    let kinds: Vec<_> = auditors.iter().map(|a| a.kind()).collect();
    check_panel(&kinds, strict)?;
    let panel = if strict { auditors } else { &auditors[..1] };
    let mut votes = Vec::with_capacity(panel.len());
    for a in panel {
        let Some(vote) = a.review(dispute) else {
            return Ok(None);
        };
        votes.push(CastVote {
            auditor: a.id(),
            kind: a.kind(),
            vote,
            cast_at: Utc::now(),
        });
    }
    combine_votes(dispute, votes, strict).map(Some)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{Rationale, Verdict};
    use std::collections::BTreeMap;

    struct Fixed(&'static str, AuditorKind, Option<Decision>);

    impl Auditor for Fixed {
        fn id(&self) -> ActorId {
            self.0.into()
        }
        fn kind(&self) -> AuditorKind {
            self.1
        }
        fn review(&self, _: &Proposal) -> Option<Vote> {
            self.2.map(|d| match d {
                Decision::Accept => Vote::accept(),
                Decision::Reject => Vote::reject(),
            })
        }
    }

    fn proposal(from: Verdict, to: Verdict) -> Proposal {
        Proposal {
            claim_id: "c1".into(),
            proposed_verdict: to,
            proposed_rationale: Rationale::new("new", "ch"),
            challenger: "ch".into(),
            incumbent_verdict: from,
            incumbent_rationale: Rationale::new("old", "seed"),
        }
    }

    #[test]
    fn single_auditor_accept() {
        let p = proposal(Verdict::Supported, Verdict::Contradictory);
        let h = Fixed("h", AuditorKind::Human, Some(Decision::Accept));
        let d = adjudicate(&p, &[&h], false).unwrap().unwrap();
        assert_eq!((d.decision, d.final_verdict), (Decision::Accept, Verdict::Contradictory));
        assert_eq!(d.final_rationale.text, "new");
    }

    #[test]
    fn strict_needs_agreement() {
        let p = proposal(Verdict::Supported, Verdict::Contradictory);
        let h = Fixed("h", AuditorKind::Human, Some(Decision::Accept));
        let a_rej = Fixed("a", AuditorKind::Agent, Some(Decision::Reject));
        let a_acc = Fixed("a", AuditorKind::Agent, Some(Decision::Accept));
        let d = adjudicate(&p, &[&h, &a_rej], true).unwrap().unwrap();
        assert_eq!((d.decision, d.final_verdict), (Decision::Reject, Verdict::Supported));
        assert_eq!(d.final_rationale.text, "old");
        let d = adjudicate(&p, &[&h, &a_acc], true).unwrap().unwrap();
        assert_eq!(d.decision, Decision::Accept);
        assert_eq!(d.votes.len(), 2);
        // non-strict ignores the second auditor
        let d = adjudicate(&p, &[&h, &a_rej], false).unwrap().unwrap();
        assert_eq!(d.decision, Decision::Accept);
    }

    #[test]
    fn strict_panel_validation_and_pending() {
        let p = proposal(Verdict::Supported, Verdict::Inconclusive);
        let h1 = Fixed("h1", AuditorKind::Human, Some(Decision::Accept));
        let h2 = Fixed("h2", AuditorKind::Human, Some(Decision::Accept));
        assert!(adjudicate(&p, &[&h1, &h2], true).is_err());
        assert!(adjudicate(&p, &[], false).is_err());
        let waiting = Fixed("h", AuditorKind::Human, None);
        assert_eq!(adjudicate(&p, &[&waiting], false).unwrap(), None);
    }

    #[test]
    fn override_rationale_replaces_challenger_text() {
        let p = proposal(Verdict::Supported, Verdict::Contradictory);
        let vote = CastVote {
            auditor: "h".into(),
            kind: AuditorKind::Human,
            vote: Vote::accept().with_rationale(Rationale::new("expert text", "h")),
            cast_at: Utc::now(),
        };
        let d = combine_votes(&p, vec![vote], false).unwrap();
        assert_eq!(d.final_verdict, Verdict::Contradictory);
        assert_eq!(d.final_rationale.text, "expert text");
    }

    #[test]
    fn selection_sizes() {
        let full = select_indices(8, AuditFraction::FULL, 1);
        assert_eq!(full, (0..8).collect::<Vec<_>>());
        assert_eq!(select_indices(8, AuditFraction::new(0.25).unwrap(), 1).len(), 2);
        assert!(select_indices(0, AuditFraction::new(0.5).unwrap(), 1).is_empty());
        // 0.1 * 4 = 0.4 rounds to zero audits
        assert!(select_indices(4, AuditFraction::new(0.1).unwrap(), 1).is_empty());
        // 0.5 * 5 = 2.5 rounds half-up
        assert_eq!(select_indices(5, AuditFraction::new(0.5).unwrap(), 1).len(), 3);
    }

    #[test]
    fn selection_is_uniform() {
        let p = AuditFraction::new(0.25).unwrap();
        let mut counts = BTreeMap::new();
        let seeds = 10_000;
        for seed in 0..seeds {
            for i in select_indices(8, p, seed) {
                *counts.entry(i).or_insert(0u32) += 1;
            }
        }
        for i in 0..8 {
            let f = counts[&i] as f64 / seeds as f64;
            assert!((f - 0.25).abs() < 0.02, "index {i}: {f}");
        }
    }

    #[test]
    fn error_code_requirement_follows_outcome() {
        let p = proposal(Verdict::Supported, Verdict::Contradictory);
        assert!(requires_error_code(&p, Decision::Accept));
        assert!(!requires_error_code(&p, Decision::Reject));
    }
}
