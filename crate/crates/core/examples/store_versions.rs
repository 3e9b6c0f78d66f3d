//! Seed a benchmark, revise one label, and replay the changelog.

use evobench::store::{AcceptedChange, BenchmarkStore, ClaimRecord, SeedEntry};
use evobench::types::{Importance, Rationale, RiskTag, Verdict};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut store = BenchmarkStore::new();
    let doc = store
        .ingest_report(
            "# Findings\nVaccination coverage reached 92% in 2021. Measles cases fell by half.",
            "vax",
            "public-health",
        )?
        .clone();
    for s in &doc.sentences {
        println!("sentence {} [{}..{}]: {}", s.sentence_id, s.start, s.end, doc.sentence_text(s.sentence_id).unwrap());
    }

    let seed = doc
        .sentences
        .iter()
        .skip(1)
        .map(|s| SeedEntry {
            claim: ClaimRecord::from_report(format!("vax-{}", s.sentence_id), &doc, s.sentence_id, Importance::new(4).unwrap(), RiskTag::FlaggedByEvaluator).unwrap(),
            verdict: Verdict::Supported,
            rationale: Rationale::new("Matches the national immunization report.", "annotator-1"),
        })
        .collect();
    let v0 = store.init_benchmark(seed)?;
    println!("v0 {} entries, digest {}", v0.len(), v0.snapshot_digest());

    let change = AcceptedChange {
        claim_id: "vax-2".into(),
        old_verdict: Verdict::Supported,
        new_verdict: Verdict::Contradictory,
        new_rationale: Rationale::new("Surveillance data show a 30% drop, not half.", "challenger")
            .with_evidence(["https://example.org/surveillance-2021"]),
        decided_by: "auditor-1".into(),
        proposed_by: "challenger".into(),
    };
    let records = store.stage_changes(vec![change]);
    let v1 = store.apply_changeset(records)?;
    println!("v1 digest {}", v1.snapshot_digest());
    for r in store.changelog() {
        println!("seq {} round {}: {} {} -> {}", r.seq, r.round, r.claim_id, r.old_verdict, r.new_verdict);
    }

    store.verify_replay()?;
    let dir = std::env::temp_dir().join("evobench-store-example");
    store.save(&dir)?;
    let reopened = BenchmarkStore::open(&dir)?;
    println!(
        "reopened head v{} matches: {}",
        reopened.head().unwrap().version(),
        reopened.head().unwrap().snapshot_digest() == v1.snapshot_digest()
    );
    Ok(())
}
