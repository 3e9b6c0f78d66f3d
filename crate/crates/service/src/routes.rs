use std::sync::{Arc, Mutex, MutexGuard};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use evobench::metrics::PriceTable;
use evobench::types::ActorId;

use crate::auth::{Caller, Role, Tokens};
use crate::workspace::{parse_round_id, CreateRound, DecisionSubmission, SkipRequest, Workspace};
use crate::ServiceError;

/// Key fragment that marks calibration data in any payload.
pub const CALIBRATION_KEY: &str = "microgold";

pub struct AppState {
    pub workspace: Mutex<Workspace>,
    pub tokens: Tokens,
    pub prices: Option<PriceTable>,
}

impl AppState {
    pub fn new(workspace: Workspace, tokens: Tokens, prices: Option<PriceTable>) -> Self {
        Self {
            workspace: Mutex::new(workspace),
            tokens,
            prices,
        }
    }

    fn lock(&self) -> Result<MutexGuard<'_, Workspace>, ServiceError> {
        self.workspace
            .lock()
            .map_err(|_| ServiceError::Internal("workspace lock poisoned".into()))
    }
}

type Shared = Arc<AppState>;

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/benchmarks/{id}/versions/{t}", get(get_version))
        .route("/benchmarks/{id}/rounds", post(create_round))
        .route("/benchmarks/{id}/scores", get(get_scores))
        .route("/rounds/{id}/disputes", get(list_disputes))
        .route("/rounds/{id}/report", get(get_report))
        .route("/disputes/{id}/decision", post(submit_decision))
        .route("/disputes/{id}/skip", post(skip_dispute))
        .with_state(state)
}

fn strip_calibration(v: &mut Value) {
    match v {
        Value::Object(map) => {
            map.retain(|k, _| !k.contains(CALIBRATION_KEY));
            map.values_mut().for_each(strip_calibration);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_calibration),
        _ => {}
    }
}

/// Serializes `body`, removing calibration fields unless the caller may see them.
fn respond(caller: &Caller, status: StatusCode, body: impl Serialize) -> Result<Response, ServiceError> {
    let mut v = serde_json::to_value(body)?;
    if !caller.sees_calibration() {
        strip_calibration(&mut v);
    }
    Ok((status, Json(v)).into_response())
}

fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ServiceError> {
    serde_json::from_slice(body).map_err(|e| {
        if e.is_syntax() || e.is_eof() {
            ServiceError::BadRequest(format!("malformed JSON: {e}"))
        } else {
            ServiceError::Unprocessable(e.to_string())
        }
    })
}

async fn get_version(
    State(st): State<Shared>,
    headers: HeaderMap,
    Path((id, t)): Path<(String, u64)>,
) -> Result<Response, ServiceError> {
    let caller = st.tokens.authenticate(&headers)?;
    let view = st.lock()?.get(&id)?.version_view(t)?;
    respond(&caller, StatusCode::OK, view)
}

async fn create_round(
    State(st): State<Shared>,
    headers: HeaderMap,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Response, ServiceError> {
    let caller = st.tokens.authenticate(&headers)?;
    if caller.role != Role::Admin {
        return Err(ServiceError::Forbidden("admin role required".into()));
    }
    let mut ws = st.lock()?;
    let bench = ws.get_mut(&id)?;
    let req: CreateRound = parse(&body)?;
    let created = bench.create_round(&req, st.prices.as_ref())?;
    respond(&caller, StatusCode::CREATED, created)
}

#[derive(Debug, Deserialize)]
struct DisputesQuery {
    actor: Option<String>,
}

async fn list_disputes(
    State(st): State<Shared>,
    headers: HeaderMap,
    Path(rid): Path<String>,
    Query(q): Query<DisputesQuery>,
) -> Result<Response, ServiceError> {
    let caller = st.tokens.authenticate(&headers)?;
    let actor = match (caller.role, q.actor) {
        (Role::Admin, a) => a.map(ActorId::new),
        (Role::Auditor, Some(a)) if a != caller.actor.as_str() => {
            return Err(ServiceError::Forbidden("auditors can only list their own queue".into()))
        }
        (Role::Auditor, _) => Some(caller.actor.clone()),
        (Role::Calibration, _) => return Err(ServiceError::Forbidden("auditor role required".into())),
    };
    let ws = st.lock()?;
    let (bench, round) = ws.by_round(&rid)?;
    let queue = bench.dispute_queue(round, actor.as_ref())?;
    respond(&caller, StatusCode::OK, queue)
}

async fn submit_decision(
    State(st): State<Shared>,
    headers: HeaderMap,
    Path(did): Path<String>,
    body: Bytes,
) -> Result<Response, ServiceError> {
    let caller = st.tokens.authenticate(&headers)?;
    let mut ws = st.lock()?;
    let bench = ws.by_dispute_mut(&did)?;
    let sub: DecisionSubmission = parse(&body)?;
    let ack = bench.submit(&did, &caller, sub)?;
    respond(&caller, StatusCode::OK, ack)
}

async fn skip_dispute(
    State(st): State<Shared>,
    headers: HeaderMap,
    Path(did): Path<String>,
    body: Bytes,
) -> Result<Response, ServiceError> {
    let caller = st.tokens.authenticate(&headers)?;
    let mut ws = st.lock()?;
    let bench = ws.by_dispute_mut(&did)?;
    let req = if body.iter().all(u8::is_ascii_whitespace) {
        SkipRequest { idempotency_key: None }
    } else {
        parse(&body)?
    };
    let ack = bench.skip(&did, &caller, req)?;
    respond(&caller, StatusCode::OK, ack)
}

async fn get_report(
    State(st): State<Shared>,
    headers: HeaderMap,
    Path(rid): Path<String>,
) -> Result<Response, ServiceError> {
    let caller = st.tokens.authenticate(&headers)?;
    let ws = st.lock()?;
    let (bench, round) = ws.by_round(&rid)?;
    let mut v = serde_json::to_value(bench.round_report(round)?)?;
    if let Value::Object(map) = &mut v {
        map.insert("benchmark_id".into(), bench.id().into());
        map.insert("round_id".into(), rid.clone().into());
    }
    respond(&caller, StatusCode::OK, v)
}

#[derive(Debug, Deserialize)]
struct ScoresQuery {
    version: Option<u64>,
    round: Option<String>,
    microgold: Option<bool>,
}

async fn get_scores(
    State(st): State<Shared>,
    headers: HeaderMap,
    Path(id): Path<String>,
    Query(q): Query<ScoresQuery>,
) -> Result<Response, ServiceError> {
    let caller = st.tokens.authenticate(&headers)?;
    if q.microgold == Some(true) && !caller.sees_calibration() {
        return Err(ServiceError::Forbidden("calibration role required".into()));
    }
    let ws = st.lock()?;
    let bench = ws.get(&id)?;
    let version = match (q.version, q.round) {
        (Some(_), Some(_)) => return Err(ServiceError::BadRequest("give version or round, not both".into())),
        (Some(t), None) => t,
        (None, Some(rid)) => match parse_round_id(&rid) {
            Some((b, r)) if b == id => bench.round_report(r)?.version,
            _ => return Err(ServiceError::NotFound(format!("round {rid}"))),
        },
        (None, None) => bench.store().head().map(|h| h.version()).unwrap_or(0),
    };
    let include = caller.sees_calibration() && q.microgold != Some(false);
    let export = bench.export_scores(version, include)?;
    respond(&caller, StatusCode::OK, export)
}
