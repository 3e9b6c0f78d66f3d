//! Deterministic fixtures for exercising rounds offline: a synthetic
//! benchmark with known ground truth, scripted challengers and auditors.

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Auditor, AuditorKind, Challenger, ChallengerError, ChallengerOutput, Decision, Proposal, Vote};
use crate::store::{BenchmarkStore, ClaimRecord, ReportDocument, SeedEntry};
use crate::types::{ActorId, ClaimId, ErrorCode, Importance, MicroGold, Rationale, RiskTag, Verdict};

/// Fixed timestamp for fixture rationales.
pub fn fixture_time() -> DateTime<Utc> {
    DateTime::from_timestamp(1_700_000_000, 0).expect("valid timestamp")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub reports: usize,
    pub claims_per_report: usize,
    pub microgolds: usize,
    pub supported_microgolds: usize,
    /// Micro-golds whose seed label disagrees with the hidden gold label.
    pub wrong_microgolds: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            reports: 5,
            claims_per_report: 10,
            microgolds: 10,
            supported_microgolds: 2,
            wrong_microgolds: 4,
            seed: 7,
        }
    }
}

/// A seeded benchmark together with the ground truth of every claim.
#[derive(Debug)]
pub struct SyntheticBenchmark {
    pub store: BenchmarkStore,
    pub truth: BTreeMap<ClaimId, Verdict>,
    pub microgolds: Vec<ClaimId>,
    pub wrong_microgolds: Vec<ClaimId>,
}

/// The opposite collapsed label, as a concrete verdict.
pub fn flip(v: Verdict) -> Verdict {
    match v {
        Verdict::Supported => Verdict::Contradictory,
        _ => Verdict::Supported,
    }
}

pub fn report_text(report: usize, sentences: usize) -> String {
    (0..sentences)
        .map(|k| format!("Finding {k} of study {report} holds for the sampled cohort."))
        .collect::<Vec<_>>()
        .join(" ")
}

impl SyntheticBenchmark {
    pub fn build(config: SyntheticConfig) -> Self {
        assert!(config.microgolds <= config.reports * config.claims_per_report);
        assert!(config.supported_microgolds <= config.microgolds);
        assert!(config.wrong_microgolds <= config.microgolds);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut store = BenchmarkStore::new();
        let mut claims = Vec::new();
        for r in 0..config.reports {
            let report_id = format!("report-{r:02}");
            let body = report_text(r, config.claims_per_report);
            let doc = store
                .ingest_report(&body, report_id, "synthetic")
                .expect("fixture report segments")
                .clone();
            assert_eq!(doc.sentences.len(), config.claims_per_report);
            for s in &doc.sentences {
                let id = format!("r{r:02}-s{:02}", s.sentence_id);
                let importance = Importance::new(rng.gen_range(1..=5)).expect("in range");
                let risk = if rng.gen_bool(0.3) {
                    RiskTag::FlaggedByEvaluator
                } else {
                    RiskTag::SupportedByEvaluator
                };
                let claim = ClaimRecord::from_report(id, &doc, s.sentence_id, importance, risk)
                    .expect("sentence exists");
                claims.push(claim);
            }
        }

        let mut order: Vec<usize> = (0..claims.len()).collect();
        order.shuffle(&mut rng);
        let mg_idx = &order[..config.microgolds];
        let mut truth = BTreeMap::new();
        let mut microgolds = Vec::new();
        for (k, &i) in mg_idx.iter().enumerate() {
            let gold = if k < config.supported_microgolds {
                MicroGold::supported()
            } else {
                let label = if k % 2 == 0 { Verdict::Contradictory } else { Verdict::Inconclusive };
                MicroGold::adversarial(label, ErrorCode::ALL[k % ErrorCode::ALL.len()])
            };
            truth.insert(claims[i].claim_id.clone(), gold.gold_label);
            microgolds.push(claims[i].claim_id.clone());
            claims[i].microgold = Some(gold);
        }
        for c in &claims {
            truth.entry(c.claim_id.clone()).or_insert_with(|| {
                match rng.gen_range(0..10) {
                    0..=5 => Verdict::Supported,
                    6..=7 => Verdict::Inconclusive,
                    _ => Verdict::Contradictory,
                }
            });
        }
        // wrong ones mix supported and unsupported micro-golds
        let mut wrong_pool = microgolds.clone();
        wrong_pool.rotate_left(config.supported_microgolds.saturating_sub(1));
        let wrong_microgolds: Vec<ClaimId> = wrong_pool[..config.wrong_microgolds].to_vec();

        let seed = claims
            .into_iter()
            .map(|claim| {
                let t = truth[&claim.claim_id];
                let verdict = if wrong_microgolds.contains(&claim.claim_id) { flip(t) } else { t };
                let rationale = Rationale::new(format!("Seed annotation of {}", claim.claim_id), "seed-annotator")
                    .with_evidence([format!("src://{}", claim.claim_id)])
                    .at(fixture_time());
                SeedEntry { claim, verdict, rationale }
            })
            .collect();
        store.init_benchmark(seed).expect("fixture seed is valid");
        Self {
            store,
            truth,
            microgolds,
            wrong_microgolds,
        }
    }
}

fn output(id: &ActorId, claim: &ClaimRecord, verdict: Verdict) -> ChallengerOutput {
    ChallengerOutput {
        verdict,
        rationale: Rationale::new(format!("{id} judges {} as {verdict}", claim.claim_id), id.clone())
            .with_evidence([format!("src://{}", claim.claim_id)])
            .at(fixture_time()),
    }
}

/// Repeats the labels it was built with.
pub struct EchoChallenger {
    pub id: ActorId,
    pub labels: BTreeMap<ClaimId, Verdict>,
}

impl Challenger for EchoChallenger {
    fn id(&self) -> ActorId {
        self.id.clone()
    }

    fn verify(&self, claim: &ClaimRecord, _: &ReportDocument) -> Result<ChallengerOutput, ChallengerError> {
        let v = self.labels.get(&claim.claim_id).ok_or_else(|| ChallengerError {
            claim_id: claim.claim_id.clone(),
            message: "no label".into(),
        })?;
        Ok(output(&self.id, claim, *v))
    }
}

/// Contradicts every label it was built with.
pub struct FlipAllChallenger {
    pub id: ActorId,
    pub labels: BTreeMap<ClaimId, Verdict>,
}

impl Challenger for FlipAllChallenger {
    fn id(&self) -> ActorId {
        self.id.clone()
    }

    fn verify(&self, claim: &ClaimRecord, _: &ReportDocument) -> Result<ChallengerOutput, ChallengerError> {
        let v = self.labels.get(&claim.claim_id).ok_or_else(|| ChallengerError {
            claim_id: claim.claim_id.clone(),
            message: "no label".into(),
        })?;
        Ok(output(&self.id, claim, flip(*v)))
    }
}

/// Returns scripted verdicts, falling back to `fallback` (usually the
/// current labels) and failing on claims in neither.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScriptedChallenger {
    pub id: ActorId,
    pub script: BTreeMap<ClaimId, Verdict>,
    #[serde(default)]
    pub fallback: BTreeMap<ClaimId, Verdict>,
}

impl ScriptedChallenger {
    /// Proposes the true label on `fixes` and a wrong one on `noise`,
    /// agreeing with `labels` everywhere else.
    pub fn coverage(
        id: impl Into<ActorId>,
        truth: &BTreeMap<ClaimId, Verdict>,
        labels: BTreeMap<ClaimId, Verdict>,
        fixes: &[ClaimId],
        noise: &[ClaimId],
    ) -> Self {
        let mut script = BTreeMap::new();
        for c in fixes {
            script.insert(c.clone(), truth[c]);
        }
        for c in noise {
            script.insert(c.clone(), flip(truth[c]));
        }
        Self {
            id: id.into(),
            script,
            fallback: labels,
        }
    }
}

impl Challenger for ScriptedChallenger {
    fn id(&self) -> ActorId {
        self.id.clone()
    }

    fn verify(&self, claim: &ClaimRecord, _: &ReportDocument) -> Result<ChallengerOutput, ChallengerError> {
        let v = self
            .script
            .get(&claim.claim_id)
            .or_else(|| self.fallback.get(&claim.claim_id))
            .ok_or_else(|| ChallengerError {
                claim_id: claim.claim_id.clone(),
                message: "claim not in script".into(),
            })?;
        Ok(output(&self.id, claim, *v))
    }
}

/// Accepts a proposal exactly when it matches the known answer for the claim.
pub struct OracleAuditor {
    pub id: ActorId,
    pub kind: AuditorKind,
    pub truth: BTreeMap<ClaimId, Verdict>,
}

impl OracleAuditor {
    pub fn new(id: impl Into<ActorId>, kind: AuditorKind, truth: BTreeMap<ClaimId, Verdict>) -> Self {
        Self {
            id: id.into(),
            kind,
            truth,
        }
    }
}

impl Auditor for OracleAuditor {
    fn id(&self) -> ActorId {
        self.id.clone()
    }

    fn kind(&self) -> AuditorKind {
        self.kind
    }

    fn review(&self, dispute: &Proposal) -> Option<Vote> {
        Some(if self.truth.get(&dispute.claim_id) == Some(&dispute.proposed_verdict) {
            Vote::accept()
        } else {
            Vote::reject()
        })
    }
}

/// Per-claim decisions with a default; `None` leaves a dispute pending.
pub struct ScriptedAuditor {
    pub id: ActorId,
    pub kind: AuditorKind,
    pub decisions: BTreeMap<ClaimId, Decision>,
    pub default: Option<Decision>,
}

impl Auditor for ScriptedAuditor {
    fn id(&self) -> ActorId {
        self.id.clone()
    }

    fn kind(&self) -> AuditorKind {
        self.kind
    }

    fn review(&self, dispute: &Proposal) -> Option<Vote> {
        let d = self.decisions.get(&dispute.claim_id).copied().or(self.default)?;
        Some(match d {
            Decision::Accept => Vote::accept(),
            Decision::Reject => Vote::reject(),
        })
    }
}
