use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::{json, Value};

use evobench::ats::sim::{SyntheticBenchmark, SyntheticConfig};
use evobench::harness::{FixtureCompletion, FixtureScript, SearchHit, Stage};
use evobench::store::{write_report_file, SeedEntry};

fn run(args: &[&str]) -> Value {
    let out = Command::new(env!("CARGO_BIN_EXE_evobench")).args(args).output().unwrap();
    assert!(
        out.status.success(),
        "evobench {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn fails(args: &[&str]) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_evobench")).args(args).output().unwrap();
    assert!(!out.status.success(), "evobench {args:?} should fail");
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write(dir: &Path, name: &str, value: &impl serde::Serialize) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_vec_pretty(value).unwrap()).unwrap();
    path
}

fn write_lines<T: serde::Serialize>(dir: &Path, name: &str, items: impl IntoIterator<Item = T>) -> PathBuf {
    let path = dir.join(name);
    let text: String = items
        .into_iter()
        .map(|i| serde_json::to_string(&i).unwrap() + "\n")
        .collect();
    fs::write(&path, text).unwrap();
    path
}

/// Report files and seed annotations of the default synthetic benchmark.
fn synthetic_inputs(dir: &Path) -> (Vec<String>, PathBuf, SyntheticBenchmark) {
    let bench = SyntheticBenchmark::build(SyntheticConfig::default());
    let mut reports = Vec::new();
    for doc in bench.store.reports() {
        let path = dir.join(format!("{}.json", doc.report_id));
        write_report_file(doc, fs::File::create(&path).unwrap()).unwrap();
        reports.push(path.to_string_lossy().into_owned());
    }
    let v0 = bench.store.version(0).unwrap();
    let seed = bench.store.claims().values().map(|c| {
        let e = &v0.entries()[&c.claim_id];
        SeedEntry { claim: c.clone(), verdict: e.verdict, rationale: e.rationale.clone() }
    });
    let seed = write_lines(dir, "seed.jsonl", seed);
    (reports, seed, bench)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn import_round_replay_and_calibrate() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let data = dir.join("data");
    let (reports, seed, bench) = synthetic_inputs(dir);

    let mut args = vec!["import", "--data", s(&data), "--benchmark", "syn", "--seed", s(&seed), "--reports"];
    args.extend(reports.iter().map(String::as_str));
    let imported = run(&args);
    assert_eq!(imported["version"], 0);
    assert_eq!(imported["entries"], 50);
    assert_eq!(
        imported["snapshot_digest"],
        bench.store.head().unwrap().snapshot_digest()
    );
    assert!(fails(&args).contains("exists"));

    let script: serde_json::Map<String, Value> = bench
        .wrong_microgolds
        .iter()
        .map(|c| (c.to_string(), json!(bench.truth[c])))
        .collect();
    let spec = write(dir, "challenger.json", &json!({"kind": "scripted", "id": "fixer", "script": script}));
    let out = dir.join("round1.json");
    let report = run(&[
        "round", "run", "--data", s(&data), "--benchmark", "syn", "--challenger", s(&spec),
        "--audit-fraction", "1", "--seed", "3", "--auditor", "agent:oracle", "--out", s(&out),
    ]);
    assert_eq!(report["round"], 1);
    assert_eq!(report["accepted"], 4);
    assert_eq!(report["microgold_accuracy"], 1.0);
    assert_eq!(serde_json::from_slice::<Value>(&fs::read(&out).unwrap()).unwrap(), report);

    let replay = run(&["round", "replay", "--history", s(&data.join("syn")), "--p", "1"]);
    assert_eq!(replay["trajectory"], json!([1.0]));
    assert_eq!(replay["recorded"], json!([1.0]));
    let half = run(&["round", "replay", "--history", s(&data.join("syn")), "--p", "0.5", "--seeds", "200"]);
    let mean = half["trajectory"][0].as_f64().unwrap();
    assert!((mean - 0.8).abs() < 1e-9, "two of four fixes on every seed: {mean}");

    // 4 changes on 50 entries is 8%, beyond the drift guard
    let cal = run(&["calibrate", "--data", s(&data), "--benchmark", "syn", "--respond-to", "maintenance"]);
    assert_eq!(cal["calibration_recorded"], true);
    assert_eq!(cal["changes_since_calibration"], 0);
    let again = run(&["calibrate", "--data", s(&data), "--benchmark", "syn", "--respond-to", "maintenance"]);
    assert_eq!(again["calibration_recorded"], false);
    assert_eq!(again["action"]["action"], "continue");

    let scores = run(&["score", "--data", s(&data), "--benchmark", "syn"]);
    assert_eq!(scores["version"], 1);
    assert!(scores.get("microgold").is_none());
    let scores = run(&["score", "--data", s(&data), "--benchmark", "syn", "--version", "0", "--microgold"]);
    assert_eq!(scores["microgold"]["accuracy"], 0.6);
}

#[test]
fn human_round_through_the_queue() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let data = dir.join("data");
    let (reports, seed, _) = synthetic_inputs(dir);
    let mut args = vec!["import", "--data", s(&data), "--benchmark", "b", "--seed", s(&seed), "--reports"];
    args.extend(reports.iter().map(String::as_str));
    run(&args);

    let queue = run(&[
        "round", "run", "--data", s(&data), "--benchmark", "b", "--challenger", "flip-all",
        "--audit-fraction", "0.04",
    ]);
    assert_eq!(queue["state"], "awaiting_audit");
    assert_eq!(queue["total"], 2);
    let listed = run(&["round", "disputes", "--data", s(&data), "--round", "b.r1"]);
    assert_eq!(listed, queue);

    for (k, d) in queue["disputes"].as_array().unwrap().iter().enumerate() {
        let did = d["dispute_id"].as_str().unwrap();
        let incumbent_supported = d["incumbent"]["verdict"] == "supported";
        let mut sub = json!({"decision": "REJECT", "confidence": "confident", "idempotency_key": format!("k{k}")});
        if !incumbent_supported {
            sub["error_code"] = json!("G-H1");
        }
        let sub = write(dir, &format!("sub{k}.json"), &sub);
        let ack = run(&["round", "decide", "--data", s(&data), "--dispute", did, "--actor", "ana", "--submission", s(&sub)]);
        assert_eq!(ack["decision"], "REJECT");
        assert_eq!(ack["remaining"], 1 - k);
    }
    let scores = run(&["score", "--data", s(&data), "--benchmark", "b"]);
    assert_eq!(scores["version"], 1);
    assert_eq!(scores["changelog"], json!([]));
}

#[test]
fn sampling_and_injection() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let bench = SyntheticBenchmark::build(SyntheticConfig { reports: 8, ..Default::default() });
    let (gold, real): (Vec<_>, Vec<_>) = bench.store.claims().values().cloned().partition(|c| c.is_microgold());
    let claims = write_lines(dir, "claims.jsonl", &real);
    let pool = write_lines(dir, "pool.jsonl", &gold);
    let plan = write(dir, "plan.json", &json!({
        "n": 12, "proportions": {"5": 0.4, "4": 0.35, "3": 0.2, "2": 0.05, "1": 0.0}, "rho": 3.0, "seed": 1
    }));
    let batch = run(&["sample", "--plan", s(&plan), "--claims", s(&claims), "--seed", "5"]);
    assert_eq!(batch["claim_ids"].as_array().unwrap().len(), 12);
    assert_eq!(batch, run(&["sample", "--plan", s(&plan), "--claims", s(&claims), "--seed", "5"]));
    let batch_file = write(dir, "batch.json", &batch);

    let plan = run(&["inject", "--batch", s(&batch_file), "--pool", s(&pool), "--seed", "2"]);
    let items = plan["assignments"].as_array().unwrap();
    // 12 real items at a 25% share need 4 hidden ones
    assert_eq!(items.len(), 16);
    assert_eq!(items.iter().filter(|a| a["is_microgold"] == true).count(), 4);
}

fn hit(id: &str) -> SearchHit {
    SearchHit {
        source_id: id.into(),
        url: format!("https://example.org/{id}"),
        snippet: format!("snippet {id}"),
        text: format!("text {id}"),
    }
}

#[test]
fn verify_cost_score_and_bootstrap() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let bench = SyntheticBenchmark::build(SyntheticConfig { reports: 1, microgolds: 2, supported_microgolds: 1, wrong_microgolds: 0, ..Default::default() });
    let doc = &bench.store.reports()[0];
    let report = dir.join("report.json");
    write_report_file(doc, fs::File::create(&report).unwrap()).unwrap();
    let claims: Vec<_> = bench.store.claims().values().cloned().collect();
    let ids: Vec<_> = claims.iter().map(|c| c.claim_id.to_string()).collect();
    let claims_file = write_lines(dir, "claims.jsonl", &claims);
    let verdicts: Vec<_> = ids.iter().map(|id| json!({"claim_id": id, "verdict": "supported", "rationale": "ok", "evidence": ["a"]})).collect();
    let script = FixtureScript::new("gpt-4.1", "gpt-4.1-mini", "web")
        .with(FixtureCompletion::new(Stage::Plan, "cohort"))
        .with_hits("cohort", vec![hit("a")])
        .with(FixtureCompletion::new(Stage::Verdict, json!({"verdicts": verdicts}).to_string()));
    let providers = write(dir, "providers.json", &script);
    let budget = write(dir, "budget.json", &json!({"max_steps": 1, "max_queries_per_step": 5, "max_sources": 40, "max_completion_tokens": 8192}));
    let trace = dir.join("trace.json");
    let out = run(&[
        "verify", "--claims", s(&claims_file), "--report", s(&report), "--group", "10",
        "--budget", s(&budget), "--providers", s(&providers), "--trace", s(&trace),
    ]);
    assert_eq!(out["verdicts"].as_array().unwrap().len(), 10);
    let traces: Value = serde_json::from_slice(&fs::read(&trace).unwrap()).unwrap();
    assert_eq!(traces.as_array().unwrap().len(), 1);

    let ledger = write(dir, "ledger.json", &out["ledger"]);
    let cost = run(&["cost", "--ledger", s(&ledger), "--claims", "10"]);
    assert_eq!(cost["estimate"]["claims"], 10);
    assert!(cost["per_claim"].as_str().unwrap().starts_with('$'));
    let prices = write(dir, "prices.json", &json!({"gpt-4.1": {"input_usd_per_million": 2.0, "output_usd_per_million": 8.0}}));
    assert!(fails(&["cost", "--ledger", s(&ledger), "--claims", "10", "--prices", s(&prices)]).contains("gpt-4.1-mini"));

    let preds = write(dir, "preds.json", &json!({"a": "supported", "b": "unsupported", "c": "forced_incorrect"}));
    let gold = write(dir, "gold.json", &json!({"a": "supported", "b": "unsupported", "c": "supported"}));
    let m = run(&["score", "--predictions", s(&preds), "--gold", s(&gold)]);
    assert_eq!(m["correct"], 2);
    assert!(fails(&["score"]).contains("--predictions"));

    let clusters = write(dir, "clusters.json", &json!([
        {"report_id": "r1", "a": [true, true], "b": [true, false]},
        {"report_id": "r2", "a": [true], "b": [false]},
        {"report_id": "r3", "a": [false, true], "b": [false, true]},
    ]));
    let b1 = run(&["bootstrap", "--clusters", s(&clusters), "--replicates", "2000", "--seed", "4"]);
    let b2 = run(&["bootstrap", "--clusters", s(&clusters), "--replicates", "2000", "--seed", "4"]);
    assert_eq!(b1, b2);
    assert_eq!(b1["replicates"], 2000);
}

#[test]
fn ingest_prints_sentence_spans() {
    let tmp = tempfile::tempdir().unwrap();
    let body = tmp.path().join("r.md");
    fs::write(&body, "# Results\nUptake rose to 40%. Costs fell.\n").unwrap();
    let doc = run(&["ingest", "--report", s(&body), "--id", "r1"]);
    assert_eq!(doc["report_id"], "r1");
    // the heading line is a sentence of its own
    assert_eq!(doc["sentences"].as_array().unwrap().len(), 3);
}
