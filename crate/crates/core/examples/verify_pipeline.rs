//! The verification pipeline over scripted providers, one claim and a group.

use evobench::harness::{
    verify_claim, verify_group, FixtureCompletion, FixtureScript, PipelineBudget, Providers, SearchHit, Stage,
};
use evobench::store::{ingest_report, ClaimRecord};
use evobench::types::{Importance, RiskTag};

fn hit(id: &str, text: &str) -> SearchHit {
    SearchHit { source_id: id.into(), url: format!("https://example.org/{id}"), snippet: text.into(), text: text.into() }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let report = ingest_report(
        "# Background\nThe World Health Organization (WHO) tracks malaria.\n\n\
         WHO counted 249 million malaria cases in 2022.\n\n\
         Case counts rose in five countries.",
        "malaria",
        "global-health",
    )?;
    let claims: Vec<ClaimRecord> = report
        .sentences
        .iter()
        .skip(1)
        .map(|s| ClaimRecord::from_report(format!("m{}", s.sentence_id), &report, s.sentence_id, Importance::new(5).unwrap(), RiskTag::FlaggedByEvaluator).unwrap())
        .collect();

    let script = FixtureScript::new("gpt-4.1", "gpt-4.1-mini", "web")
        .with(FixtureCompletion::new(Stage::Plan, "WHO malaria cases 2022\nworld malaria report"))
        .with_hits("WHO malaria cases 2022", vec![hit("wmr", "249 million cases in 2022 across 85 countries.")])
        .with_hits("world malaria report", vec![hit("wmr", "duplicate"), hit("news", "Cases rose in several countries.")])
        .with(FixtureCompletion::new(Stage::Summarize, "Reports 249 million cases in 2022."))
        .with(FixtureCompletion::new(Stage::Sufficiency, "yes: the annual figure is confirmed"))
        .with(FixtureCompletion::new(
            Stage::Verdict,
            serde_json::json!({"verdicts": [
                {"claim_id": "m1", "verdict": "supported", "rationale": "The annual report gives 249 million.", "evidence": ["wmr"]},
                {"claim_id": "m2", "verdict": "inconclusive", "rationale": "Sources do not name the countries.", "evidence": ["news"]},
                {"claim_id": "m3", "verdict": "supported", "rationale": "", "evidence": []}
            ]})
            .to_string(),
        ));
    let (verifier, summarizer, search) = (script.verifier(), script.summarizer(), script.search_engine());
    let providers = Providers { verifier: &verifier, summarizer: &summarizer, search: &search };
    let budget = PipelineBudget::default();

    let (verdict, rationale, trace) = verify_claim(&claims[0], &report, &budget, providers)?;
    println!("{}: {verdict} ({}) citing {:?}", claims[0].claim_id, rationale.text, rationale.evidence_refs);
    println!("  {} steps, {} sources, {} calls", trace.steps.len(), trace.evidence.len(), trace.ledger.calls());

    let grouped = verify_group(&claims, &report, 10, &budget, providers)?;
    for v in &grouped.verdicts {
        println!("{}: {}", v.claim_id, v.verdict);
    }
    println!("grouped run: {} pass, {} calls", grouped.traces.len(), grouped.ledger().calls());
    Ok(())
}
