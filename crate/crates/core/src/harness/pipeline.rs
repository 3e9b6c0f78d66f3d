use std::collections::BTreeSet;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{
    Completion, CompletionRequest, HarnessError, PipelineBudget, Providers, Stage, TextModel,
};
use crate::metrics::TokenLedger;
use crate::store::{ClaimRecord, ReportDocument};
use crate::types::{ActorId, ClaimId, Rationale, Verdict};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceDoc {
    pub source_id: String,
    pub url: String,
    /// SHA-256 of the retrieved text.
    pub raw_excerpt_digest: String,
    pub summary: String,
    pub depth_qa: Vec<(String, String)>,
    pub step: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub step: u32,
    pub queries: Vec<String>,
    /// Sources first retained in this step.
    pub retained: Vec<String>,
    pub depth_questions: Vec<String>,
    /// `None` on the last allowed step, where no judgment is requested.
    pub sufficient: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimVerdict {
    pub claim_id: ClaimId,
    pub verdict: Verdict,
    pub rationale: Rationale,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationTrace {
    pub key: String,
    pub claim_ids: Vec<ClaimId>,
    pub context: String,
    pub steps: Vec<TraceStep>,
    pub evidence: Vec<EvidenceDoc>,
    pub verdicts: Vec<ClaimVerdict>,
    pub ledger: TokenLedger,
}

impl VerificationTrace {
    pub fn retained_sources(&self) -> BTreeSet<&str> {
        self.evidence.iter().map(|d| d.source_id.as_str()).collect()
    }
}

fn char_slice(s: &str, start: usize, end: usize) -> &str {
    let byte = |c: usize| s.char_indices().nth(c).map(|(b, _)| b).unwrap_or(s.len());
    &s[byte(start)..byte(end)]
}

fn is_heading(line: &str) -> bool {
    line.trim_start().starts_with('#')
}

/// Character bounds of the section of `body` enclosing the span
/// `start..end`: from the nearest heading at or before the span to the next
/// heading after it, with surrounding whitespace trimmed.
pub fn section_bounds(body: &str, start: usize, end: usize) -> (usize, usize) {
    let mut lines = Vec::new();
    let mut offset = 0;
    for line in body.split_inclusive('\n') {
        lines.push((offset, is_heading(line)));
        offset += line.chars().count();
    }
    let total = offset;
    let mut s = lines
        .iter()
        .filter(|(o, h)| *h && *o <= start)
        .map(|(o, _)| *o)
        .last()
        .unwrap_or(0);
    let mut e = lines
        .iter()
        .find(|(o, h)| *h && *o >= end.max(s + 1))
        .map(|(o, _)| *o)
        .unwrap_or(total);
    let chars: Vec<char> = body.chars().collect();
    while s < e && chars[s].is_whitespace() {
        s += 1;
    }
    while e > s && chars[e - 1].is_whitespace() {
        e -= 1;
    }
    (s, e)
}

/// The text of [`section_bounds`].
pub fn extract_section(body: &str, start: usize, end: usize) -> &str {
    let (s, e) = section_bounds(body, start, end);
    char_slice(body, s, e)
}

fn call(
    model: &dyn TextModel,
    request: CompletionRequest,
    ledger: &mut TokenLedger,
) -> Result<Completion, HarnessError> {
    let c = model.complete(&request)?;
    ledger.record_text(model.model_id(), request.stage.as_str(), c.input_tokens, c.output_tokens);
    if c.output_tokens > request.max_tokens as u64 {
        return Err(HarnessError::TokenLimitExceeded {
            output_tokens: c.output_tokens,
            limit: request.max_tokens,
        });
    }
    Ok(c)
}

fn check_membership(report: &ReportDocument, claims: &[&ClaimRecord]) -> Result<(), HarnessError> {
    if claims.is_empty() {
        return Err(HarnessError::PreconditionViolation("no claims to verify".into()));
    }
    for c in claims {
        if c.report_id != report.report_id || report.sentence_text(c.sentence_id) != Some(c.text.as_str()) {
            return Err(HarnessError::PreconditionViolation(format!(
                "claim {} is not a sentence of report {}",
                c.claim_id, report.report_id
            )));
        }
    }
    Ok(())
}

fn group_key(claims: &[&ClaimRecord]) -> String {
    claims.iter().map(|c| c.claim_id.as_str()).collect::<Vec<_>>().join("+")
}

fn claims_block(claims: &[&ClaimRecord]) -> String {
    claims
        .iter()
        .map(|c| format!("[{}] {}", c.claim_id, c.text))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Stage 0: the model reads the whole report with the claims' span marked.
pub fn extract_context(
    report: &ReportDocument,
    claims: &[&ClaimRecord],
    model: &dyn TextModel,
    budget: &PipelineBudget,
    ledger: &mut TokenLedger,
) -> Result<String, HarnessError> {
    check_membership(report, claims)?;
    let spans: Vec<_> = claims
        .iter()
        .filter_map(|c| report.span(c.sentence_id))
        .collect();
    let focus = (
        spans.iter().map(|s| s.start).min().unwrap_or(0),
        spans.iter().map(|s| s.end).max().unwrap_or(0),
    );
    let c = call(
        model,
        CompletionRequest {
            stage: Stage::Context,
            step: 0,
            key: group_key(claims),
            prompt: report.body.clone(),
            max_tokens: budget.max_completion_tokens,
            document: None,
            focus: Some(focus),
        },
        ledger,
    )?;
    Ok(c.text)
}

fn nonempty_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines().map(str::trim).filter(|l| !l.is_empty())
}

fn parse_depth(text: &str) -> Vec<(String, String)> {
    let mut out = Vec::new();
    let mut question: Option<String> = None;
    for line in nonempty_lines(text) {
        if let Some(q) = line.strip_prefix("Q:") {
            question = Some(q.trim().to_owned());
        } else if let (Some(a), Some(q)) = (line.strip_prefix("A:"), question.take()) {
            out.push((q, a.trim().to_owned()));
        }
    }
    if let Some(q) = question {
        out.push((q, String::new()));
    }
    out
}

fn parse_sufficiency(text: &str) -> (bool, Option<String>) {
    let t = text.trim();
    let lower = t.to_ascii_lowercase();
    let yes = lower.starts_with("yes") || lower.starts_with("sufficient");
    let reason = t
        .split_once(|c: char| c == ':' || c == '\n' || c == '-')
        .map(|(_, r)| r.trim().to_owned())
        .filter(|r| !r.is_empty());
    (yes, reason)
}

#[derive(Deserialize)]
struct VerdictItem {
    claim_id: ClaimId,
    verdict: String,
    #[serde(default)]
    rationale: String,
    #[serde(default)]
    evidence: Vec<String>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum VerdictOutput {
    Wrapped { verdicts: Vec<VerdictItem> },
    List(Vec<VerdictItem>),
    Single(VerdictItem),
}

fn parse_verdicts(key: &str, text: &str) -> Result<Vec<VerdictItem>, HarnessError> {
    let out: VerdictOutput = serde_json::from_str(text.trim()).map_err(|e| HarnessError::MalformedOutput {
        key: key.to_owned(),
        message: e.to_string(),
    })?;
    Ok(match out {
        VerdictOutput::Wrapped { verdicts } => verdicts,
        VerdictOutput::List(v) => v,
        VerdictOutput::Single(v) => vec![v],
    })
}

fn digest(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn evidence_block(evidence: &[EvidenceDoc]) -> String {
    evidence
        .iter()
        .map(|d| {
            let qa: String = d.depth_qa.iter().map(|(q, a)| format!("\n  Q: {q}\n  A: {a}")).collect();
            format!("<{}> {}{}", d.source_id, d.summary, qa)
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn run(
    claims: &[&ClaimRecord],
    report: &ReportDocument,
    budget: &PipelineBudget,
    p: Providers<'_>,
) -> Result<VerificationTrace, HarnessError> {
    budget.validate()?;
    let key = group_key(claims);
    let mut ledger = TokenLedger::new();
    let context = extract_context(report, claims, p.verifier, budget, &mut ledger)?;
    let block = claims_block(claims);
    let request = |stage, step, prompt: String, document: Option<String>| CompletionRequest {
        stage,
        step,
        key: key.clone(),
        prompt,
        max_tokens: budget.max_completion_tokens,
        document,
        focus: None,
    };

    let mut evidence: Vec<EvidenceDoc> = Vec::new();
    let mut seen = BTreeSet::new();
    let mut steps = Vec::new();
    let mut asked: Vec<String> = Vec::new();
    for step in 1..=budget.max_steps {
        let plan = call(
            p.verifier,
            request(
                Stage::Plan,
                step,
                format!("Context:\n{context}\n\nClaims:\n{block}\n\nEarlier queries:\n{}", asked.join("\n")),
                None,
            ),
            &mut ledger,
        )?;
        let mut queries: Vec<String> = Vec::new();
        for q in nonempty_lines(&plan.text) {
            if !queries.iter().any(|x| x == q) && queries.len() < budget.max_queries_per_step as usize {
                queries.push(q.to_owned());
            }
        }

        let first_new = evidence.len();
        for q in &queries {
            ledger.record_search(p.search.provider_id(), "search");
            for hit in p.search.search(q)? {
                if evidence.len() >= budget.max_sources as usize {
                    break;
                }
                if !seen.insert(hit.source_id.clone()) {
                    continue;
                }
                let body = if hit.text.is_empty() { &hit.snippet } else { &hit.text };
                let s = call(
                    p.summarizer,
                    request(Stage::Summarize, step, body.clone(), Some(hit.source_id.clone())),
                    &mut ledger,
                )?;
                let summary = match s.text.trim() {
                    "" => hit.snippet.trim().to_owned(),
                    t => t.to_owned(),
                };
                if summary.is_empty() {
                    continue;
                }
                evidence.push(EvidenceDoc {
                    source_id: hit.source_id,
                    url: hit.url,
                    raw_excerpt_digest: digest(body),
                    summary,
                    depth_qa: Vec::new(),
                    step,
                });
            }
        }

        let mut depth_questions = Vec::new();
        for doc in &mut evidence[first_new..] {
            let d = call(
                p.verifier,
                request(
                    Stage::Depth,
                    step,
                    format!("Claims:\n{block}\n\nSummary of {}:\n{}", doc.source_id, doc.summary),
                    Some(doc.source_id.clone()),
                ),
                &mut ledger,
            )?;
            doc.depth_qa = parse_depth(&d.text);
            depth_questions.extend(doc.depth_qa.iter().map(|(q, _)| q.clone()));
        }

        let (sufficient, reason) = if step < budget.max_steps {
            let s = call(
                p.verifier,
                request(
                    Stage::Sufficiency,
                    step,
                    format!("Claims:\n{block}\n\nEvidence:\n{}", evidence_block(&evidence)),
                    None,
                ),
                &mut ledger,
            )?;
            let (yes, reason) = parse_sufficiency(&s.text);
            (Some(yes), reason)
        } else {
            (None, None)
        };
        asked.extend(queries.iter().cloned());
        steps.push(TraceStep {
            step,
            queries,
            retained: evidence[first_new..].iter().map(|d| d.source_id.clone()).collect(),
            depth_questions,
            sufficient,
            reason,
        });
        if sufficient == Some(true) {
            break;
        }
    }

    let last_step = steps.last().map(|s| s.step).unwrap_or(0);
    let out = call(
        p.verifier,
        request(
            Stage::Verdict,
            last_step,
            format!("Context:\n{context}\n\nClaims:\n{block}\n\nEvidence:\n{}", evidence_block(&evidence)),
            None,
        ),
        &mut ledger,
    )?;
    let items = parse_verdicts(&key, &out.text)?;
    let author = ActorId::new(format!("pipeline:{}", p.verifier.model_id()));
    let mut verdicts = Vec::with_capacity(claims.len());
    for c in claims {
        let item = items
            .iter()
            .find(|i| i.claim_id == c.claim_id)
            .ok_or_else(|| HarnessError::MissingVerdict(c.claim_id.clone()))?;
        let verdict: Verdict = item.verdict.parse().map_err(|e| HarnessError::MalformedOutput {
            key: key.clone(),
            message: format!("{e}"),
        })?;
        let refs = item.evidence.iter().filter(|r| seen.contains(*r) && evidence.iter().any(|d| &d.source_id == *r));
        verdicts.push(ClaimVerdict {
            claim_id: c.claim_id.clone(),
            verdict,
            rationale: Rationale::new(item.rationale.clone(), author.clone()).with_evidence(refs.cloned()),
        });
    }
    Ok(VerificationTrace {
        key,
        claim_ids: claims.iter().map(|c| c.claim_id.clone()).collect(),
        context,
        steps,
        evidence,
        verdicts,
        ledger,
    })
}

/// Verifies one claim with a full pipeline pass.
pub fn verify_claim(
    claim: &ClaimRecord,
    report: &ReportDocument,
    budget: &PipelineBudget,
    providers: Providers<'_>,
) -> Result<(Verdict, Rationale, VerificationTrace), HarnessError> {
    let trace = run(&[claim], report, budget, providers)?;
    let v = trace.verdicts[0].clone();
    Ok((v.verdict, v.rationale, trace))
}

/// Consecutive windows of at most `g` items over `n`.
pub fn group_windows(n: usize, g: usize) -> Vec<Range<usize>> {
    (0..n).step_by(g.max(1)).map(|s| s..(s + g.max(1)).min(n)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupOutcome {
    pub verdicts: Vec<ClaimVerdict>,
    pub traces: Vec<VerificationTrace>,
}

impl GroupOutcome {
    pub fn ledger(&self) -> TokenLedger {
        let mut l = TokenLedger::new();
        for t in &self.traces {
            l.merge(&t.ledger);
        }
        l
    }
}

/// Verifies `claims` in consecutive groups of up to `g`, one pipeline pass
/// per group. With `g = 1` this is `verify_claim` on each claim.
pub fn verify_group(
    claims: &[ClaimRecord],
    report: &ReportDocument,
    g: usize,
    budget: &PipelineBudget,
    providers: Providers<'_>,
) -> Result<GroupOutcome, HarnessError> {
    if g == 0 {
        return Err(HarnessError::PreconditionViolation("group size must be at least 1".into()));
    }
    let mut outcome = GroupOutcome {
        verdicts: Vec::with_capacity(claims.len()),
        traces: Vec::new(),
    };
    for w in group_windows(claims.len(), g) {
        let members: Vec<&ClaimRecord> = claims[w].iter().collect();
        let trace = run(&members, report, budget, providers)?;
        outcome.verdicts.extend(trace.verdicts.iter().cloned());
        outcome.traces.push(trace);
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn section_bounds() {
        let body = "# Intro\nThe World Health Organization (WHO) tracks cases.\n\nMore text here.\n\n\nWHO reported a rise.\n# Methods\nWe sampled.";
        let claim_start = body.find("WHO reported").unwrap();
        let start = body[..claim_start].chars().count();
        let end = start + "WHO reported a rise.".len();
        let s = extract_section(body, start, end);
        assert!(s.starts_with("# Intro"));
        assert!(s.contains("World Health Organization (WHO)"));
        assert!(s.ends_with("WHO reported a rise."));
        assert!(!s.contains("Methods"));
        assert_eq!(extract_section("Only one sentence.", 0, 18), "Only one sentence.");
    }

    #[test]
    fn windows() {
        let sizes: Vec<_> = group_windows(11, 5).into_iter().map(|r| r.len()).collect();
        assert_eq!(sizes, vec![5, 5, 1]);
        assert_eq!(group_windows(10, 10).len(), 1);
        assert_eq!(group_windows(10, 1).len(), 10);
        assert!(group_windows(0, 3).is_empty());
    }

    #[test]
    fn output_parsers() {
        let qa = parse_depth("Q: what year?\nA: 2019\nQ: which cohort?\nA: adults\nQ: dangling");
        assert_eq!(qa.len(), 3);
        assert_eq!(qa[1], ("which cohort?".into(), "adults".into()));
        assert_eq!(parse_sufficiency("yes: all figures confirmed"), (true, Some("all figures confirmed".into())));
        assert!(!parse_sufficiency("No - missing the 2020 figure").0);
        let v = parse_verdicts("k", r#"{"claim_id": "c1", "verdict": "supported"}"#).unwrap();
        assert_eq!(v.len(), 1);
        assert!(parse_verdicts("k", "not json").is_err());
    }
}
