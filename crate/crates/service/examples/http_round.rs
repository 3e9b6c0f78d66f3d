//! Drive the HTTP routes in-process: open a round, work the dispute queue,
//! then read the report, the new version and the scores.

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request};
use axum::Router;
use evobench::ats::sim::{SyntheticBenchmark, SyntheticConfig};
use evobench::ats::AuditorKind;
use evobench_service::{router, AppState, Caller, Role, TokenEntry, Tokens, Workspace};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(app: &Router, method: Method, uri: &str, token: &str, body: Option<Value>) -> Value {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("authorization", format!("Bearer {token}"))
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
        .unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    let json: Value = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
    println!("{status} {uri}");
    json
}

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let bench = SyntheticBenchmark::build(SyntheticConfig { reports: 2, claims_per_report: 3, microgolds: 2, supported_microgolds: 1, wrong_microgolds: 1, ..Default::default() });
    Workspace::open(dir.path())?.create("demo", bench.store)?;

    let entry = |token: &str, actor: &str, role| TokenEntry {
        token: token.into(),
        caller: Caller { actor: actor.into(), role, kind: AuditorKind::Human },
    };
    let tokens = Tokens::new([entry("t-admin", "ops", Role::Admin), entry("t-alice", "alice", Role::Auditor)]);
    let app = router(Arc::new(AppState::new(Workspace::open(dir.path())?, tokens, None)));

    let created = call(&app, Method::POST, "/benchmarks/demo/rounds", "t-admin", Some(json!({"challenger": {"kind": "flip_all"}, "config": {"audit_fraction": 0.5, "seed": 4}}))).await;
    println!("  {} conflicts, {} disputes", created["conflicts"], created["disputes"]);
    let round = created["round_id"].as_str().unwrap().to_owned();

    let queue = call(&app, Method::GET, &format!("/rounds/{round}/disputes"), "t-alice", None).await;
    for (i, d) in queue["disputes"].as_array().unwrap().iter().enumerate() {
        let id = d["dispute_id"].as_str().unwrap();
        println!("  {id}: {} -> {}", d["incumbent"]["verdict"], d["proposal"]["verdict"]);
        // keep supported labels, accept corrections toward supported
        let decision = if d["incumbent"]["verdict"] == "supported" { "REJECT" } else { "ACCEPT" };
        let vote = json!({"decision": decision, "confidence": "certain", "idempotency_key": format!("k{i}")});
        let ack = call(&app, Method::POST, &format!("/disputes/{id}/decision"), "t-alice", Some(vote)).await;
        println!("  remaining {}", ack["remaining"]);
    }

    let report = call(&app, Method::GET, &format!("/rounds/{round}/report"), "t-alice", None).await;
    println!("  version {}, accepted {}", report["version"], report["accepted"]);
    let v1 = call(&app, Method::GET, "/benchmarks/demo/versions/1", "t-alice", None).await;
    println!("  digest {}", v1["snapshot_digest"]);
    let scores = call(&app, Method::GET, "/benchmarks/demo/scores", "t-alice", None).await;
    println!("  {}", serde_json::to_string(&scores)?);
    Ok(())
}
