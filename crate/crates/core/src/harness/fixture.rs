use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{
    extract_section, Completion, CompletionRequest, ProviderError, SearchEngine, SearchHit, Stage,
    TextModel,
};

/// A canned model response. Unset `step`, `key` and `document` match
/// anything; among matching entries the one with the most fields set wins,
/// and later entries win ties.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureCompletion {
    pub stage: Stage,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub document: Option<String>,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_tokens: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_tokens: Option<u64>,
}

impl FixtureCompletion {
    pub fn new(stage: Stage, text: impl Into<String>) -> Self {
        Self {
            stage,
            step: None,
            key: None,
            document: None,
            text: text.into(),
            input_tokens: None,
            output_tokens: None,
        }
    }

    pub fn step(mut self, step: u32) -> Self {
        self.step = Some(step);
        self
    }

    pub fn key(mut self, key: impl Into<String>) -> Self {
        self.key = Some(key.into());
        self
    }

    pub fn document(mut self, document: impl Into<String>) -> Self {
        self.document = Some(document.into());
        self
    }

    pub fn tokens(mut self, input: u64, output: u64) -> Self {
        self.input_tokens = Some(input);
        self.output_tokens = Some(output);
        self
    }

    fn specificity(&self, r: &CompletionRequest) -> Option<usize> {
        if self.stage != r.stage {
            return None;
        }
        let mut n = 0;
        if let Some(s) = self.step {
            (s == r.step).then_some(())?;
            n += 1;
        }
        if let Some(k) = &self.key {
            (*k == r.key).then_some(())?;
            n += 1;
        }
        if let Some(d) = &self.document {
            (Some(d) == r.document.as_ref()).then_some(())?;
            n += 1;
        }
        Some(n)
    }
}

/// Offline provider script: canned completions for both models and canned
/// search results keyed by exact query text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureScript {
    pub verifier_model: String,
    pub summarizer_model: String,
    pub search_provider: String,
    #[serde(default)]
    pub completions: Vec<FixtureCompletion>,
    #[serde(default)]
    pub search: BTreeMap<String, Vec<SearchHit>>,
}

impl FixtureScript {
    pub fn new(verifier_model: &str, summarizer_model: &str, search_provider: &str) -> Self {
        Self {
            verifier_model: verifier_model.into(),
            summarizer_model: summarizer_model.into(),
            search_provider: search_provider.into(),
            completions: Vec::new(),
            search: BTreeMap::new(),
        }
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(std::io::Error::other)
    }

    pub fn with(mut self, c: FixtureCompletion) -> Self {
        self.completions.push(c);
        self
    }

    pub fn with_hits(mut self, query: impl Into<String>, hits: Vec<SearchHit>) -> Self {
        self.search.insert(query.into(), hits);
        self
    }

    /// The verifier model: every stage except summaries.
    pub fn verifier(&self) -> FixtureModel {
        FixtureModel::new(
            &self.verifier_model,
            self.completions.iter().filter(|c| c.stage != Stage::Summarize).cloned().collect(),
        )
    }

    pub fn summarizer(&self) -> FixtureModel {
        FixtureModel::new(
            &self.summarizer_model,
            self.completions.iter().filter(|c| c.stage == Stage::Summarize).cloned().collect(),
        )
    }

    pub fn search_engine(&self) -> FixtureSearch {
        FixtureSearch::new(&self.search_provider, self.search.clone())
    }
}

fn approx_tokens(text: &str) -> u64 {
    (text.chars().count() as u64).div_ceil(4).max(1)
}

/// Replays scripted completions and records every request it receives.
///
/// Without a matching entry, context extraction echoes the enclosing
/// section, summaries and detail questions come back empty, sufficiency is
/// judged negative, and planning or verdict calls fail.
#[derive(Debug)]
pub struct FixtureModel {
    model_id: String,
    entries: Vec<FixtureCompletion>,
    requests: Mutex<Vec<CompletionRequest>>,
}

impl FixtureModel {
    pub fn new(model_id: &str, entries: Vec<FixtureCompletion>) -> Self {
        Self {
            model_id: model_id.into(),
            entries,
            requests: Mutex::new(Vec::new()),
        }
    }

    pub fn requests(&self) -> Vec<CompletionRequest> {
        self.requests.lock().expect("request log").clone()
    }

    fn lookup(&self, r: &CompletionRequest) -> Option<&FixtureCompletion> {
        let mut best: Option<(usize, &FixtureCompletion)> = None;
        for e in &self.entries {
            if let Some(n) = e.specificity(r) {
                if best.is_none_or(|(b, _)| n >= b) {
                    best = Some((n, e));
                }
            }
        }
        best.map(|(_, e)| e)
    }
}

impl TextModel for FixtureModel {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn complete(&self, r: &CompletionRequest) -> Result<Completion, ProviderError> {
        self.requests.lock().expect("request log").push(r.clone());
        let input_tokens = approx_tokens(&r.prompt);
        let clamp = |t: u64| t.min(r.max_tokens as u64);
        if let Some(e) = self.lookup(r) {
            return Ok(Completion {
                text: e.text.clone(),
                input_tokens: e.input_tokens.unwrap_or(input_tokens),
                output_tokens: e.output_tokens.unwrap_or_else(|| clamp(approx_tokens(&e.text))),
            });
        }
        let text = match r.stage {
            Stage::Context => {
                let (s, e) = r.focus.unwrap_or((0, r.prompt.chars().count()));
                extract_section(&r.prompt, s, e).to_owned()
            }
            Stage::Summarize | Stage::Depth => String::new(),
            Stage::Sufficiency => "no".to_owned(),
            Stage::Plan | Stage::Verdict => {
                return Err(ProviderError {
                    provider: self.model_id.clone(),
                    message: format!("no scripted {} output for {} step {}", r.stage.as_str(), r.key, r.step),
                })
            }
        };
        Ok(Completion {
            output_tokens: clamp(approx_tokens(&text)),
            text,
            input_tokens,
        })
    }
}

/// Canned search results; unknown queries return nothing.
#[derive(Debug)]
pub struct FixtureSearch {
    provider_id: String,
    results: BTreeMap<String, Vec<SearchHit>>,
    queries: Mutex<Vec<String>>,
}

impl FixtureSearch {
    pub fn new(provider_id: &str, results: BTreeMap<String, Vec<SearchHit>>) -> Self {
        Self {
            provider_id: provider_id.into(),
            results,
            queries: Mutex::new(Vec::new()),
        }
    }

    pub fn queries(&self) -> Vec<String> {
        self.queries.lock().expect("query log").clone()
    }
}

impl SearchEngine for FixtureSearch {
    fn provider_id(&self) -> &str {
        &self.provider_id
    }

    fn search(&self, query: &str) -> Result<Vec<SearchHit>, ProviderError> {
        self.queries.lock().expect("query log").push(query.to_owned());
        Ok(self.results.get(query).cloned().unwrap_or_default())
    }
}
