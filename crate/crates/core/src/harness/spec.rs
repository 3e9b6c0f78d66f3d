use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{FixtureScript, PipelineBudget, PipelineChallenger};
use crate::ats::sim::{EchoChallenger, FlipAllChallenger, ScriptedChallenger};
use crate::ats::Challenger;
use crate::store::BenchmarkVersion;
use crate::types::{ActorId, ClaimId, Verdict};

/// Serializable description of a challenger, resolved against the version
/// it will be run on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChallengerSpec {
    /// Repeats the current labels; raises no proposals.
    Echo {
        #[serde(default)]
        id: Option<ActorId>,
    },
    /// Contradicts every current label.
    FlipAll {
        #[serde(default)]
        id: Option<ActorId>,
    },
    /// Fixed verdicts per claim; other claims keep their current label
    /// unless `fallback_to_head` is off, in which case they abstain.
    Scripted {
        #[serde(default)]
        id: Option<ActorId>,
        script: BTreeMap<ClaimId, Verdict>,
        #[serde(default = "yes")]
        fallback_to_head: bool,
    },
    /// The verification pipeline over scripted providers.
    Pipeline {
        #[serde(default)]
        id: Option<ActorId>,
        providers: FixtureScript,
        #[serde(default)]
        budget: PipelineBudget,
    },
}

fn yes() -> bool {
    true
}

impl ChallengerSpec {
    pub fn id(&self) -> ActorId {
        let (id, default) = match self {
            ChallengerSpec::Echo { id } => (id, "echo"),
            ChallengerSpec::FlipAll { id } => (id, "flip-all"),
            ChallengerSpec::Scripted { id, .. } => (id, "scripted"),
            ChallengerSpec::Pipeline { id, .. } => (id, "pipeline"),
        };
        id.clone().unwrap_or_else(|| ActorId::new(default))
    }

    pub fn build(&self, head: &BenchmarkVersion) -> Box<dyn Challenger> {
        let id = self.id();
        match self {
            ChallengerSpec::Echo { .. } => Box::new(EchoChallenger {
                id,
                labels: head.labels(),
            }),
            ChallengerSpec::FlipAll { .. } => Box::new(FlipAllChallenger {
                id,
                labels: head.labels(),
            }),
            ChallengerSpec::Scripted {
                script,
                fallback_to_head,
                ..
            } => Box::new(ScriptedChallenger {
                id,
                script: script.clone(),
                fallback: if *fallback_to_head { head.labels() } else { BTreeMap::new() },
            }),
            ChallengerSpec::Pipeline { providers, budget, .. } => Box::new(PipelineChallenger::new(
                id,
                Box::new(providers.verifier()),
                Box::new(providers.summarizer()),
                Box::new(providers.search_engine()),
                *budget,
            )),
        }
    }
}
