use std::sync::Mutex;

use super::{verify_claim, PipelineBudget, Providers, SearchEngine, TextModel};
use crate::ats::{Challenger, ChallengerError, ChallengerOutput};
use crate::metrics::TokenLedger;
use crate::store::{ClaimRecord, ReportDocument};
use crate::types::ActorId;

/// Runs the verification pipeline once per claim and accumulates the token
/// usage of successful runs.
pub struct PipelineChallenger {
    id: ActorId,
    verifier: Box<dyn TextModel>,
    summarizer: Box<dyn TextModel>,
    search: Box<dyn SearchEngine>,
    budget: PipelineBudget,
    ledger: Mutex<TokenLedger>,
}

impl PipelineChallenger {
    pub fn new(
        id: impl Into<ActorId>,
        verifier: Box<dyn TextModel>,
        summarizer: Box<dyn TextModel>,
        search: Box<dyn SearchEngine>,
        budget: PipelineBudget,
    ) -> Self {
        Self {
            id: id.into(),
            verifier,
            summarizer,
            search,
            budget,
            ledger: Mutex::new(TokenLedger::new()),
        }
    }

    pub fn budget(&self) -> PipelineBudget {
        self.budget
    }
}

impl Challenger for PipelineChallenger {
    fn id(&self) -> ActorId {
        self.id.clone()
    }

    fn verify(&self, claim: &ClaimRecord, report: &ReportDocument) -> Result<ChallengerOutput, ChallengerError> {
        let providers = Providers {
            verifier: self.verifier.as_ref(),
            summarizer: self.summarizer.as_ref(),
            search: self.search.as_ref(),
        };
        let (verdict, rationale, trace) =
            verify_claim(claim, report, &self.budget, providers).map_err(|e| ChallengerError {
                claim_id: claim.claim_id.clone(),
                message: e.to_string(),
            })?;
        self.ledger.lock().expect("ledger").merge(&trace.ledger);
        Ok(ChallengerOutput { verdict, rationale })
    }

    fn take_ledger(&self) -> Option<TokenLedger> {
        Some(std::mem::take(&mut *self.ledger.lock().expect("ledger")))
    }
}
