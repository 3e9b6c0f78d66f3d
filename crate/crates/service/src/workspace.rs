//! On-disk benchmark state shared by the service and the command line.
//!
//! Layout of one benchmark directory:
//!
//! ```text
//! store/              saved BenchmarkStore
//! history.json        committed round reports and calibrations
//! round.json          the open round, written when it is created
//! decisions.jsonl     votes and skips on the open round, synced before acknowledgment
//! rounds/             archived round.json and decisions.jsonl per committed round
//! ```
//!
//! A restart rebuilds the open round from `round.json` plus
//! `decisions.jsonl`, and finishes a commit that was interrupted.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use evobench::ats::{
    maintenance_check, microgold_accuracy, requires_error_code, score_predictions, AuditDecision,
    Auditor, CastVote, Confidence, Decision, DisputeStatus, MaintenanceAction,
    OpenRound, ProtocolHistory, RoundConfig, RoundReport, Score, Vote,
};
use evobench::harness::ChallengerSpec;
use evobench::metrics::{cost_estimate, CallKind, CostEstimate, PriceTable};
use evobench::sampling::{score_annotator, ReliabilityReport};
use evobench::store::{BenchmarkStore, ChangeRecord, SnapshotEntry};
use evobench::types::{ActorId, ClaimId, ErrorCode, Rationale, Verdict};

use crate::auth::{Caller, Role};
use crate::views::{DisputeContext, DisputeQueue, DisputeView, QueuePosition, RoundState};
use crate::ServiceError;

const STORE_DIR: &str = "store";
const HISTORY_FILE: &str = "history.json";
const ROUND_FILE: &str = "round.json";
const DECISIONS_FILE: &str = "decisions.jsonl";
const ROUNDS_DIR: &str = "rounds";

pub fn round_id(benchmark: &str, round: u64) -> String {
    format!("{benchmark}.r{round}")
}

pub fn parse_round_id(id: &str) -> Option<(&str, u64)> {
    let (b, r) = id.rsplit_once(".r")?;
    Some((b, r.parse().ok()?))
}

pub fn dispute_id(round_id: &str, position: usize) -> String {
    format!("{round_id}.d{position}")
}

pub fn parse_dispute_id(id: &str) -> Option<(&str, usize)> {
    let (r, d) = id.rsplit_once(".d")?;
    parse_round_id(r)?;
    Some((r, d.parse().ok()?))
}

fn valid_benchmark_id(id: &str) -> bool {
    !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

fn write_synced(path: &Path, bytes: &[u8]) -> Result<(), ServiceError> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn read_log(path: &Path) -> Result<Vec<LogRecord>, ServiceError> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for line in BufReader::new(File::open(path)?).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line) {
            Ok(r) => out.push(r),
            // a torn final line was never acknowledged
            Err(_) => break,
        }
    }
    Ok(out)
}

/// Auditor input on one dispute.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionSubmission {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dispute_id: Option<String>,
    pub decision: Decision,
    /// On ACCEPT, replaces the challenger's rationale.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rationale: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub evidence_refs: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_code: Option<ErrorCode>,
    pub confidence: Confidence,
    pub idempotency_key: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub idempotency_key: Option<String>,
}

/// Response to a vote or skip; replayed verbatim for a repeated key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Acknowledgment {
    pub dispute_id: String,
    pub round_id: String,
    pub status: DisputeStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decision: Option<Decision>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_verdict: Option<Verdict>,
    pub remaining: usize,
    pub round_state: RoundState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
enum LogRecord {
    Vote {
        claim_id: ClaimId,
        idempotency_key: String,
        vote: CastVote,
        ack: Acknowledgment,
    },
    Skip {
        claim_id: ClaimId,
        #[serde(default)]
        idempotency_key: Option<String>,
        actor: ActorId,
        ack: Acknowledgment,
    },
}

impl LogRecord {
    fn key_and_ack(&self) -> (Option<&str>, &Acknowledgment) {
        match self {
            LogRecord::Vote { idempotency_key, ack, .. } => (Some(idempotency_key), ack),
            LogRecord::Skip { idempotency_key, ack, .. } => (idempotency_key.as_deref(), ack),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PendingRound {
    round_id: String,
    created_at: DateTime<Utc>,
    /// Actors allowed to decide; anyone with the auditor role when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    assignees: Option<BTreeSet<ActorId>>,
    open: OpenRound,
}

/// Body of `POST /benchmarks/{id}/rounds`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreateRound {
    pub challenger: ChallengerSpec,
    #[serde(default)]
    pub config: RoundConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assignees: Option<BTreeSet<ActorId>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundCreated {
    pub benchmark_id: String,
    pub round_id: String,
    pub round: u64,
    pub base_version: u64,
    pub challenger: ActorId,
    pub state: RoundState,
    pub conflicts: usize,
    pub disputes: usize,
    /// Claims the challenger could not process.
    pub failures: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<CostEstimate>,
    /// Set when the round committed immediately.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub maintenance: Option<MaintenanceAction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VersionView {
    pub benchmark_id: String,
    pub version: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<u64>,
    pub snapshot_digest: String,
    pub entries: Vec<SnapshotEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionScore {
    pub round: u64,
    pub challenger: ActorId,
    /// Version the predictions were made against.
    pub base_version: u64,
    #[serde(flatten)]
    pub score: Score,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSummary {
    pub accuracy: Option<f64>,
    pub reliability: Option<ReliabilityReport>,
    /// Calibration accuracy recorded after each committed round.
    pub trajectory: Vec<(u64, Option<f64>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreExport {
    pub benchmark_id: String,
    pub version: u64,
    pub snapshot_digest: String,
    pub entries: usize,
    /// Every archived prediction set rescored against this version.
    pub scores: Vec<PredictionScore>,
    /// The changes that produced this version.
    pub changelog: Vec<ChangeRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub microgold: Option<CalibrationSummary>,
}

/// One benchmark with its store, history and open round.
#[derive(Debug)]
pub struct Benchmark {
    id: String,
    dir: PathBuf,
    store: BenchmarkStore,
    history: ProtocolHistory,
    pending: Option<PendingRound>,
    /// Idempotency key to the dispute it was used on and its answer.
    acks: HashMap<String, (String, Acknowledgment)>,
}

impl Benchmark {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn store(&self) -> &BenchmarkStore {
        &self.store
    }

    pub fn history(&self) -> &ProtocolHistory {
        &self.history
    }

    pub fn open_round(&self) -> Option<&OpenRound> {
        self.pending.as_ref().map(|p| &p.open)
    }

    pub fn open_round_id(&self) -> Option<&str> {
        self.pending.as_ref().map(|p| p.round_id.as_str())
    }

    fn create(id: &str, dir: PathBuf, store: BenchmarkStore) -> Result<Self, ServiceError> {
        let head = store
            .head()
            .ok_or_else(|| ServiceError::Unprocessable("benchmark has no seed version".into()))?;
        let b = Self {
            id: id.to_owned(),
            history: ProtocolHistory::new(head.len()),
            dir,
            store,
            pending: None,
            acks: HashMap::new(),
        };
        fs::create_dir_all(b.dir.join(ROUNDS_DIR))?;
        b.save_history()?;
        b.store.save(&b.dir.join(STORE_DIR))?;
        Ok(b)
    }

    fn load(id: &str, dir: PathBuf) -> Result<Self, ServiceError> {
        let store = BenchmarkStore::open(&dir.join(STORE_DIR))?;
        let head = store
            .head()
            .ok_or_else(|| ServiceError::Internal(format!("benchmark {id} has no versions")))?;
        let history_path = dir.join(HISTORY_FILE);
        let mut history: ProtocolHistory = if history_path.exists() {
            serde_json::from_slice(&fs::read(&history_path)?)?
        } else {
            ProtocolHistory::new(head.len())
        };
        // history is written before the store; drop rounds the store never got
        history.rounds.retain(|r| r.version <= head.version());

        let mut b = Self {
            id: id.to_owned(),
            dir,
            store,
            history,
            pending: None,
            acks: HashMap::new(),
        };
        fs::create_dir_all(b.dir.join(ROUNDS_DIR))?;
        for entry in fs::read_dir(b.dir.join(ROUNDS_DIR))? {
            let path = entry?.path();
            if path.to_string_lossy().ends_with(DECISIONS_FILE) {
                for rec in read_log(&path)? {
                    b.remember(&rec);
                }
            }
        }

        let round_path = b.dir.join(ROUND_FILE);
        if round_path.exists() {
            let pending: PendingRound = serde_json::from_slice(&fs::read(&round_path)?)?;
            if pending.open.round <= head.version() {
                b.archive(pending.open.round)?;
            } else {
                b.pending = Some(pending);
                for rec in read_log(&b.dir.join(DECISIONS_FILE))? {
                    b.replay(&rec)?;
                    b.remember(&rec);
                }
                if b.open_round().is_some_and(OpenRound::is_complete) {
                    b.commit()?;
                }
            }
        }
        Ok(b)
    }

    fn remember(&mut self, rec: &LogRecord) {
        if let (Some(key), ack) = rec.key_and_ack() {
            self.acks.insert(key.to_owned(), (ack.dispute_id.clone(), ack.clone()));
        }
    }

    fn replay(&mut self, rec: &LogRecord) -> Result<(), ServiceError> {
        let open = &mut self.pending.as_mut().expect("pending round").open;
        match rec {
            LogRecord::Vote { claim_id, vote, .. } => {
                open.cast_vote(claim_id, vote.clone())?;
            }
            LogRecord::Skip { claim_id, .. } => open.skip(claim_id)?,
        }
        Ok(())
    }

    fn save_history(&self) -> Result<(), ServiceError> {
        write_synced(&self.dir.join(HISTORY_FILE), &serde_json::to_vec_pretty(&self.history)?)
    }

    fn archive(&self, round: u64) -> Result<(), ServiceError> {
        let rounds = self.dir.join(ROUNDS_DIR);
        let log = self.dir.join(DECISIONS_FILE);
        if log.exists() {
            fs::rename(&log, rounds.join(format!("r{round}.{DECISIONS_FILE}")))?;
        }
        let open = self.dir.join(ROUND_FILE);
        if open.exists() {
            fs::rename(&open, rounds.join(format!("r{round}.{ROUND_FILE}")))?;
        }
        Ok(())
    }

    fn commit(&mut self) -> Result<RoundReport, ServiceError> {
        let pending = self.pending.take().expect("pending round");
        let round = pending.open.round;
        let report = match pending.open.clone().commit(&mut self.store, &mut self.history) {
            Ok(r) => r,
            Err(e) => {
                self.pending = Some(pending);
                return Err(e.into());
            }
        };
        self.save_history()?;
        self.store.save(&self.dir.join(STORE_DIR))?;
        self.archive(round)?;
        Ok(report)
    }

    pub fn maintenance(&self, config: &RoundConfig) -> MaintenanceAction {
        maintenance_check(&self.history, &config.stopping)
    }

    /// Runs the challenger on the head and queues the selected disputes.
    /// A round without disputes commits at once.
    pub fn create_round(&mut self, req: &CreateRound, prices: Option<&PriceTable>) -> Result<RoundCreated, ServiceError> {
        if let Some(p) = &self.pending {
            return Err(ServiceError::Conflict(format!("round {} is still open", p.round_id)));
        }
        req.config.validate()?;
        let head = self.store.head().expect("loaded benchmark has a head");
        let challenger = req.challenger.build(&head);
        let open = OpenRound::open(&self.store, challenger.as_ref(), req.config.clone())?;
        let cost = match (prices, &open.evaluation().ledger) {
            (Some(prices), Some(ledger)) => ledger
                .records()
                .iter()
                .find(|r| r.kind == CallKind::TextModel)
                .map(|r| cost_estimate(ledger, prices, &r.model, head.len().max(1) as u64))
                .transpose()
                .map_err(|e| ServiceError::Unprocessable(e.to_string()))?,
            _ => None,
        };
        let rid = round_id(&self.id, open.round);
        let mut created = RoundCreated {
            benchmark_id: self.id.clone(),
            round_id: rid.clone(),
            round: open.round,
            base_version: open.evaluation().base_version,
            challenger: open.evaluation().challenger.clone(),
            state: RoundState::AwaitingAudit,
            conflicts: open.conflicts(),
            disputes: open.disputes().len(),
            failures: open.evaluation().failures.len(),
            cost,
            maintenance: None,
        };
        let pending = PendingRound {
            round_id: rid,
            created_at: Utc::now(),
            assignees: req.assignees.clone(),
            open,
        };
        write_synced(&self.dir.join(ROUND_FILE), &serde_json::to_vec(&pending)?)?;
        write_synced(&self.dir.join(DECISIONS_FILE), b"")?;
        let complete = pending.open.is_complete();
        self.pending = Some(pending);
        if complete {
            self.commit()?;
            created.state = RoundState::Committed;
            created.maintenance = Some(self.maintenance(&req.config));
        }
        Ok(created)
    }

    fn committed_round(&self, round: u64) -> Option<&RoundReport> {
        self.history.rounds.iter().find(|r| r.round == round)
    }

    pub fn round_state(&self, round: u64) -> Option<RoundState> {
        if self.pending.as_ref().is_some_and(|p| p.open.round == round) {
            Some(RoundState::AwaitingAudit)
        } else {
            self.committed_round(round).map(|_| RoundState::Committed)
        }
    }

    pub fn round_report(&self, round: u64) -> Result<&RoundReport, ServiceError> {
        match self.round_state(round) {
            None => Err(ServiceError::NotFound(format!("round {}", round_id(&self.id, round)))),
            Some(RoundState::AwaitingAudit) => Err(ServiceError::Conflict(format!(
                "round {} is awaiting audit",
                round_id(&self.id, round)
            ))),
            Some(RoundState::Committed) => Ok(self.committed_round(round).expect("state checked")),
        }
    }

    /// Open disputes of `round` still waiting on `actor` (all open disputes
    /// when `actor` is `None`).
    pub fn dispute_queue(&self, round: u64, actor: Option<&ActorId>) -> Result<DisputeQueue, ServiceError> {
        let rid = round_id(&self.id, round);
        let state = self
            .round_state(round)
            .ok_or_else(|| ServiceError::NotFound(format!("round {rid}")))?;
        let Some(pending) = self.pending.as_ref().filter(|_| state == RoundState::AwaitingAudit) else {
            let r = self.committed_round(round).expect("committed");
            return Ok(DisputeQueue {
                round_id: rid,
                state,
                total: r.audited + r.skipped.len(),
                remaining: 0,
                disputes: Vec::new(),
            });
        };
        let open = &pending.open;
        let assigned = actor.is_none_or(|a| pending.assignees.as_ref().is_none_or(|s| s.contains(a)));
        let disputes = open.disputes();
        let total = disputes.len();
        let mut views = Vec::new();
        for (pos, p) in disputes.into_iter().enumerate() {
            if !assigned || open.status(&p.claim_id) != Some(DisputeStatus::Open) {
                continue;
            }
            if actor.is_some_and(|a| open.votes(&p.claim_id).iter().any(|v| &v.auditor == a)) {
                continue;
            }
            views.push(self.view(&rid, pos, total, p.claim_id.clone())?);
        }
        Ok(DisputeQueue {
            round_id: rid,
            state,
            total,
            remaining: open.remaining(),
            disputes: views,
        })
    }

    fn view(&self, rid: &str, pos: usize, total: usize, claim_id: ClaimId) -> Result<DisputeView, ServiceError> {
        let open = self.open_round().expect("pending round");
        let proposal = open.dispute(&claim_id).expect("queued dispute");
        let claim = self
            .store
            .claim(&claim_id)
            .ok_or_else(|| ServiceError::Internal(format!("claim {claim_id} missing")))?;
        let report = self
            .store
            .report(&claim.report_id)
            .ok_or_else(|| ServiceError::Internal(format!("report {} missing", claim.report_id)))?;
        Ok(DisputeView::build(DisputeContext {
            dispute_id: dispute_id(rid, pos),
            round_id: rid,
            status: open.status(&claim_id).expect("queued dispute"),
            proposal,
            claim,
            report,
            position: QueuePosition { index: pos + 1, total },
        }))
    }

    /// Resolves a dispute id of this benchmark to its round and claim.
    fn locate(&self, did: &str) -> Result<(u64, Option<ClaimId>), ServiceError> {
        let not_found = || ServiceError::NotFound(format!("dispute {did}"));
        let (rid, pos) = parse_dispute_id(did).ok_or_else(not_found)?;
        let (_, round) = parse_round_id(rid).ok_or_else(not_found)?;
        match self.round_state(round) {
            None => Err(not_found()),
            Some(RoundState::Committed) => Ok((round, None)),
            Some(RoundState::AwaitingAudit) => {
                let open = self.open_round().expect("pending");
                let claim = open.disputes().get(pos).map(|p| p.claim_id.clone()).ok_or_else(not_found)?;
                Ok((round, Some(claim)))
            }
        }
    }

    fn replayed(&self, did: &str, key: &str) -> Result<Option<Acknowledgment>, ServiceError> {
        match self.acks.get(key) {
            Some((d, ack)) if d == did => Ok(Some(ack.clone())),
            Some((d, _)) => Err(ServiceError::Conflict(format!("idempotency key already used on {d}"))),
            None => Ok(None),
        }
    }

    fn check_assignment(&self, caller: &Caller) -> Result<(), ServiceError> {
        if !caller.can_audit() {
            return Err(ServiceError::Forbidden("auditor role required".into()));
        }
        let pending = self.pending.as_ref().expect("pending");
        if caller.role != Role::Admin && pending.assignees.as_ref().is_some_and(|s| !s.contains(&caller.actor)) {
            return Err(ServiceError::Forbidden(format!("dispute not assigned to {}", caller.actor)));
        }
        Ok(())
    }

    fn ack(&self, did: &str, claim_id: &ClaimId, open: &OpenRound) -> Acknowledgment {
        let decision: Option<&AuditDecision> = open.decision(claim_id);
        let remaining = open.remaining();
        Acknowledgment {
            dispute_id: did.to_owned(),
            round_id: self.pending.as_ref().expect("pending").round_id.clone(),
            status: open.status(claim_id).expect("queued"),
            decision: decision.map(|d| d.decision),
            final_verdict: decision.map(|d| d.final_verdict),
            remaining,
            round_state: if remaining == 0 { RoundState::Committed } else { RoundState::AwaitingAudit },
        }
    }

    /// Logs `rec` durably, then installs `open` and commits if it is done.
    fn persist(&mut self, rec: LogRecord, open: OpenRound) -> Result<Acknowledgment, ServiceError> {
        let mut f = OpenOptions::new().create(true).append(true).open(self.dir.join(DECISIONS_FILE))?;
        let mut line = serde_json::to_vec(&rec)?;
        line.push(b'\n');
        f.write_all(&line)?;
        f.sync_all()?;
        self.remember(&rec);
        let complete = open.is_complete();
        self.pending.as_mut().expect("pending").open = open;
        if complete {
            self.commit()?;
        }
        Ok(rec.key_and_ack().1.clone())
    }

    pub fn submit(&mut self, did: &str, caller: &Caller, sub: DecisionSubmission) -> Result<Acknowledgment, ServiceError> {
        let (_, claim) = self.locate(did)?;
        if sub.dispute_id.as_ref().is_some_and(|d| d != did) {
            return Err(ServiceError::Unprocessable("dispute_id does not match the path".into()));
        }
        if sub.idempotency_key.trim().is_empty() {
            return Err(ServiceError::Unprocessable("idempotency_key is required".into()));
        }
        if let Some(ack) = self.replayed(did, &sub.idempotency_key)? {
            return Ok(ack);
        }
        let claim = claim.ok_or_else(|| ServiceError::Conflict(format!("round of {did} is committed")))?;
        self.check_assignment(caller)?;
        let open = self.open_round().expect("pending");
        match open.status(&claim) {
            Some(DisputeStatus::Open) => {}
            Some(s) => return Err(ServiceError::Conflict(format!("dispute {did} is {s:?}").to_lowercase())),
            None => return Err(ServiceError::NotFound(format!("dispute {did}"))),
        }
        if open.votes(&claim).iter().any(|v| v.auditor == caller.actor) {
            return Err(ServiceError::Conflict(format!("{} already voted on {did}", caller.actor)));
        }
        let proposal = open.dispute(&claim).expect("open dispute");
        if requires_error_code(proposal, sub.decision) && sub.error_code.is_none() {
            return Err(ServiceError::Unprocessable(
                "error_code is required when the outcome is unsupported".into(),
            ));
        }
        if sub.rationale.is_none() && !sub.evidence_refs.is_empty() {
            return Err(ServiceError::Unprocessable("evidence_refs need a rationale".into()));
        }

        let mut vote = match sub.decision {
            Decision::Accept => Vote::accept(),
            Decision::Reject => Vote::reject(),
        }
        .with_confidence(sub.confidence);
        if let Some(text) = sub.rationale {
            vote = vote.with_rationale(Rationale::new(text, caller.actor.clone()).with_evidence(sub.evidence_refs));
        }
        if let Some(code) = sub.error_code {
            vote = vote.with_error_code(code);
        }
        let cast = CastVote {
            auditor: caller.actor.clone(),
            kind: caller.kind,
            vote,
            cast_at: Utc::now(),
        };
        self.record_vote(did, claim, cast, sub.idempotency_key)
    }

    fn record_vote(&mut self, did: &str, claim: ClaimId, cast: CastVote, key: String) -> Result<Acknowledgment, ServiceError> {
        let mut next = self.open_round().expect("pending").clone();
        next.cast_vote(&claim, cast.clone())?;
        let ack = self.ack(did, &claim, &next);
        self.persist(
            LogRecord::Vote {
                claim_id: claim,
                idempotency_key: key,
                vote: cast,
                ack,
            },
            next,
        )
    }

    /// Leaves a dispute unaudited.
    pub fn skip(&mut self, did: &str, caller: &Caller, req: SkipRequest) -> Result<Acknowledgment, ServiceError> {
        let (_, claim) = self.locate(did)?;
        if let Some(key) = &req.idempotency_key {
            if let Some(ack) = self.replayed(did, key)? {
                return Ok(ack);
            }
        }
        let claim = claim.ok_or_else(|| ServiceError::Conflict(format!("round of {did} is committed")))?;
        self.check_assignment(caller)?;
        let mut next = self.open_round().expect("pending").clone();
        next.skip(&claim)?;
        let ack = self.ack(did, &claim, &next);
        self.persist(
            LogRecord::Skip {
                claim_id: claim,
                idempotency_key: req.idempotency_key,
                actor: caller.actor.clone(),
                ack,
            },
            next,
        )
    }

    /// Puts every open dispute in front of synchronous auditors, in panel
    /// order, logging each vote like a remote submission.
    pub fn apply_auditors(&mut self, auditors: &[&dyn Auditor]) -> Result<usize, ServiceError> {
        let Some(pending) = &self.pending else {
            return Ok(0);
        };
        let strict = pending.open.config.strict_mode;
        let kinds: Vec<_> = auditors.iter().map(|a| a.kind()).collect();
        evobench::ats::check_panel(&kinds, strict)?;
        let panel = if strict { auditors } else { &auditors[..1] };
        let rid = pending.round_id.clone();
        let disputes: Vec<_> = pending.open.disputes().into_iter().cloned().collect();
        let mut cast = 0;
        for (pos, p) in disputes.iter().enumerate() {
            for a in panel {
                let Some(open) = self.open_round() else {
                    return Ok(cast);
                };
                if open.status(&p.claim_id) != Some(DisputeStatus::Open)
                    || open.votes(&p.claim_id).iter().any(|v| v.auditor == a.id())
                {
                    continue;
                }
                let Some(vote) = a.review(p) else { continue };
                let did = dispute_id(&rid, pos);
                let key = format!("{}:{did}", a.id());
                let cast_vote = CastVote {
                    auditor: a.id(),
                    kind: a.kind(),
                    vote,
                    cast_at: Utc::now(),
                };
                self.record_vote(&did, p.claim_id.clone(), cast_vote, key)?;
                cast += 1;
            }
        }
        Ok(cast)
    }

    pub fn version_view(&self, t: u64) -> Result<VersionView, ServiceError> {
        let v = self
            .store
            .version(t)
            .ok_or_else(|| ServiceError::NotFound(format!("version {t} of {}", self.id)))?;
        Ok(VersionView {
            benchmark_id: self.id.clone(),
            version: v.version(),
            parent: v.parent(),
            snapshot_digest: v.snapshot_digest().to_owned(),
            entries: v.entries().values().map(SnapshotEntry::from).collect(),
        })
    }

    pub fn export_scores(&self, t: u64, with_calibration: bool) -> Result<ScoreExport, ServiceError> {
        let v = self
            .store
            .version(t)
            .ok_or_else(|| ServiceError::NotFound(format!("version {t} of {}", self.id)))?;
        let labels = v.labels();
        let scores = self
            .history
            .rounds
            .iter()
            .map(|r| PredictionScore {
                round: r.round,
                challenger: r.challenger.clone(),
                base_version: r.base_version,
                score: score_predictions(&r.predictions, &labels),
            })
            .collect();
        let microgold = with_calibration.then(|| {
            let calibration = self.store.calibration_labels();
            CalibrationSummary {
                accuracy: microgold_accuracy(&labels, &calibration),
                reliability: score_annotator(&labels, &calibration).ok(),
                trajectory: self.history.rounds.iter().map(|r| (r.round, r.microgold_accuracy)).collect(),
            }
        });
        Ok(ScoreExport {
            benchmark_id: self.id.clone(),
            version: v.version(),
            snapshot_digest: v.snapshot_digest().to_owned(),
            entries: v.len(),
            scores,
            changelog: self.store.changes_for_version(t).to_vec(),
            microgold,
        })
    }

    /// Marks an expert recalibration, resetting the drift guard.
    pub fn record_calibration(&mut self, actor: impl Into<ActorId>) -> Result<(), ServiceError> {
        self.history.record_calibration(actor);
        self.save_history()
    }
}

/// All benchmarks under one data directory.
#[derive(Debug)]
pub struct Workspace {
    root: PathBuf,
    benchmarks: BTreeMap<String, Benchmark>,
}

impl Workspace {
    /// Loads every benchmark directory under `root`, creating `root` if needed.
    pub fn open(root: &Path) -> Result<Self, ServiceError> {
        fs::create_dir_all(root)?;
        let mut benchmarks = BTreeMap::new();
        for entry in fs::read_dir(root)? {
            let path = entry?.path();
            let Some(id) = path.file_name().and_then(|n| n.to_str()).map(str::to_owned) else {
                continue;
            };
            if path.join(STORE_DIR).join("head.json").exists() && valid_benchmark_id(&id) {
                benchmarks.insert(id.clone(), Benchmark::load(&id, path)?);
            }
        }
        Ok(Self {
            root: root.to_owned(),
            benchmarks,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Registers a seeded store under a new benchmark id.
    pub fn create(&mut self, id: &str, store: BenchmarkStore) -> Result<&mut Benchmark, ServiceError> {
        if !valid_benchmark_id(id) {
            return Err(ServiceError::Unprocessable(format!(
                "benchmark id {id:?} must be letters, digits, '-' or '_'"
            )));
        }
        if self.benchmarks.contains_key(id) || self.root.join(id).exists() {
            return Err(ServiceError::Conflict(format!("benchmark {id} exists")));
        }
        let b = Benchmark::create(id, self.root.join(id), store)?;
        Ok(self.benchmarks.entry(id.to_owned()).or_insert(b))
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.benchmarks.keys().map(String::as_str)
    }

    pub fn get(&self, id: &str) -> Result<&Benchmark, ServiceError> {
        self.benchmarks
            .get(id)
            .ok_or_else(|| ServiceError::NotFound(format!("benchmark {id}")))
    }

    pub fn get_mut(&mut self, id: &str) -> Result<&mut Benchmark, ServiceError> {
        self.benchmarks
            .get_mut(id)
            .ok_or_else(|| ServiceError::NotFound(format!("benchmark {id}")))
    }

    /// The benchmark owning a round id, and the round number.
    pub fn by_round(&self, rid: &str) -> Result<(&Benchmark, u64), ServiceError> {
        let (b, r) = parse_round_id(rid).ok_or_else(|| ServiceError::NotFound(format!("round {rid}")))?;
        let bench = self
            .benchmarks
            .get(b)
            .ok_or_else(|| ServiceError::NotFound(format!("round {rid}")))?;
        Ok((bench, r))
    }

    pub fn by_dispute_mut(&mut self, did: &str) -> Result<&mut Benchmark, ServiceError> {
        let not_found = || ServiceError::NotFound(format!("dispute {did}"));
        let (rid, _) = parse_dispute_id(did).ok_or_else(not_found)?;
        let (b, _) = parse_round_id(rid).ok_or_else(not_found)?;
        self.benchmarks.get_mut(b).ok_or_else(not_found)
    }
}
