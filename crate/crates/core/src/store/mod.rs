//! Reports, claims, and the versioned consensus with its append-only changelog.
//!
//! All mutation goes through [`BenchmarkStore`], which takes `&mut self`;
//! wrap it in a lock to share it. Versions are handed out as
//! `Arc<BenchmarkVersion>` and never change after creation.

mod files;
mod segment;
mod version;

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use chrono::Utc;
use serde::{Deserialize, Serialize};

pub use files::{
    read_changelog, read_report_file, read_snapshot, write_changelog, write_report_file,
    write_snapshot, Snapshot, SnapshotHeader,
};
pub use segment::{ingest_report, segment};
pub use version::{
    canonical_bytes, digest_snapshot_entries, replay_changelog, replay_versions, BenchmarkEntry,
    BenchmarkVersion, ChangeDecision, ChangeRecord, SnapshotEntry,
};

use crate::types::{
    ActorId, ClaimId, Importance, MicroGold, Rationale, ReportId, RiskTag, Verdict,
};

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("conflict: {0}")]
    Conflict(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("concurrent modification of {claim_id}: change expects {expected}, entry is {found}")]
    ConcurrentModification {
        claim_id: ClaimId,
        expected: Verdict,
        found: Verdict,
    },
    #[error("corrupt log: {0}")]
    CorruptLog(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceSpan {
    pub sentence_id: u32,
    pub start: usize,
    pub end: usize,
}

/// A segmented source report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub report_id: ReportId,
    pub domain: String,
    pub body: String,
    pub sentences: Vec<SentenceSpan>,
}

impl ReportDocument {
    /// Text between character offsets `start..end`.
    pub fn slice(&self, start: usize, end: usize) -> Option<&str> {
        if start > end {
            return None;
        }
        let b0 = char_to_byte(&self.body, start)?;
        let b1 = char_to_byte(&self.body, end)?;
        Some(&self.body[b0..b1])
    }

    pub fn span(&self, sentence_id: u32) -> Option<&SentenceSpan> {
        self.sentences.iter().find(|s| s.sentence_id == sentence_id)
    }

    pub fn sentence_text(&self, sentence_id: u32) -> Option<&str> {
        let span = self.span(sentence_id)?;
        self.slice(span.start, span.end)
    }

    /// Position of a sentence within the report's ordering.
    pub fn sentence_index(&self, sentence_id: u32) -> Option<usize> {
        self.sentences.iter().position(|s| s.sentence_id == sentence_id)
    }

    pub fn char_len(&self) -> usize {
        self.body.chars().count()
    }

    pub fn validate(&self) -> Result<(), StoreError> {
        let len = self.char_len();
        let mut ids = std::collections::HashSet::new();
        let mut prev_end = 0usize;
        for (i, s) in self.sentences.iter().enumerate() {
            if !ids.insert(s.sentence_id) {
                return Err(StoreError::InvalidInput(format!(
                    "duplicate sentence id {} in report {}",
                    s.sentence_id, self.report_id
                )));
            }
            if s.start >= s.end || s.end > len {
                return Err(StoreError::InvalidInput(format!(
                    "sentence {} has invalid span {}..{}",
                    s.sentence_id, s.start, s.end
                )));
            }
            if i > 0 && s.start < prev_end {
                return Err(StoreError::InvalidInput(format!(
                    "sentence {} overlaps or is out of order",
                    s.sentence_id
                )));
            }
            prev_end = s.end;
        }
        Ok(())
    }
}

pub(crate) fn char_to_byte(s: &str, char_idx: usize) -> Option<usize> {
    if char_idx == 0 {
        return Some(0);
    }
    match s.char_indices().nth(char_idx) {
        Some((b, _)) => Some(b),
        None if s.chars().count() == char_idx => Some(s.len()),
        None => None,
    }
}

/// A verbatim report sentence under verification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimRecord {
    pub claim_id: ClaimId,
    pub report_id: ReportId,
    pub sentence_id: u32,
    pub text: String,
    pub importance: Importance,
    pub risk_tag: RiskTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub microgold: Option<MicroGold>,
}

impl ClaimRecord {
    /// Builds a claim whose text is taken from the report sentence.
    pub fn from_report(
        claim_id: impl Into<ClaimId>,
        report: &ReportDocument,
        sentence_id: u32,
        importance: Importance,
        risk_tag: RiskTag,
    ) -> Option<Self> {
        Some(Self {
            claim_id: claim_id.into(),
            report_id: report.report_id.clone(),
            sentence_id,
            text: report.sentence_text(sentence_id)?.to_owned(),
            importance,
            risk_tag,
            microgold: None,
        })
    }

    pub fn with_microgold(mut self, microgold: MicroGold) -> Self {
        self.microgold = Some(microgold);
        self
    }

    pub fn is_microgold(&self) -> bool {
        self.microgold.is_some()
    }
}

/// One seed-benchmark row: a claim with its initial expert verdict.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedEntry {
    pub claim: ClaimRecord,
    pub verdict: Verdict,
    pub rationale: Rationale,
}

/// An accepted revision before it has been assigned a sequence number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AcceptedChange {
    pub claim_id: ClaimId,
    pub old_verdict: Verdict,
    pub new_verdict: Verdict,
    pub new_rationale: Rationale,
    pub decided_by: ActorId,
    pub proposed_by: ActorId,
}

/// Single-writer home of reports, claims, versions and the changelog.
#[derive(Debug, Clone, Default)]
pub struct BenchmarkStore {
    reports: Vec<ReportDocument>,
    report_index: HashMap<ReportId, usize>,
    claims: BTreeMap<ClaimId, ClaimRecord>,
    versions: Vec<Arc<BenchmarkVersion>>,
    changelog: Vec<ChangeRecord>,
}

impl BenchmarkStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Segments and stores a report.
    pub fn ingest_report(
        &mut self,
        body: &str,
        report_id: impl Into<ReportId>,
        domain: impl Into<String>,
    ) -> Result<&ReportDocument, StoreError> {
        let doc = ingest_report(body, report_id, domain)?;
        self.add_report(doc)
    }

    /// Stores an already segmented report (e.g. read from a report file).
    pub fn add_report(&mut self, doc: ReportDocument) -> Result<&ReportDocument, StoreError> {
        doc.validate()?;
        if self.report_index.contains_key(&doc.report_id) {
            return Err(StoreError::Conflict(format!(
                "report {} already ingested",
                doc.report_id
            )));
        }
        self.report_index
            .insert(doc.report_id.clone(), self.reports.len());
        self.reports.push(doc);
        Ok(self.reports.last().expect("just pushed"))
    }

    pub fn report(&self, id: &ReportId) -> Option<&ReportDocument> {
        self.report_index.get(id).map(|&i| &self.reports[i])
    }

    /// Reports in ingestion order.
    pub fn reports(&self) -> &[ReportDocument] {
        &self.reports
    }

    pub fn claim(&self, id: &ClaimId) -> Option<&ClaimRecord> {
        self.claims.get(id)
    }

    pub fn claims(&self) -> &BTreeMap<ClaimId, ClaimRecord> {
        &self.claims
    }

    /// Hidden gold labels of every micro-gold claim.
    pub fn calibration_labels(&self) -> BTreeMap<ClaimId, Verdict> {
        self.claims
            .values()
            .filter_map(|c| c.microgold.as_ref().map(|m| (c.claim_id.clone(), m.gold_label)))
            .collect()
    }

    /// Sort key placing claims in report-ingestion order, then sentence order.
    pub fn claim_position(&self, id: &ClaimId) -> Option<(usize, usize)> {
        let claim = self.claims.get(id)?;
        let r = *self.report_index.get(&claim.report_id)?;
        let s = self.reports[r].sentence_index(claim.sentence_id)?;
        Some((r, s))
    }

    fn check_claim(&self, claim: &ClaimRecord) -> Result<(), StoreError> {
        let report = self
            .report(&claim.report_id)
            .ok_or_else(|| StoreError::NotFound(format!("report {}", claim.report_id)))?;
        let text = report.sentence_text(claim.sentence_id).ok_or_else(|| {
            StoreError::NotFound(format!(
                "sentence {} in report {}",
                claim.sentence_id, claim.report_id
            ))
        })?;
        if text != claim.text {
            return Err(StoreError::InvalidInput(format!(
                "claim {} text does not match its report span",
                claim.claim_id
            )));
        }
        if let Some(mg) = &claim.microgold {
            mg.validate().map_err(|e| {
                StoreError::InvalidInput(format!("claim {}: {e}", claim.claim_id))
            })?;
        }
        Ok(())
    }

    /// Creates version 0 from the seed annotations.
    pub fn init_benchmark(
        &mut self,
        seed: Vec<SeedEntry>,
    ) -> Result<Arc<BenchmarkVersion>, StoreError> {
        if !self.versions.is_empty() {
            return Err(StoreError::Conflict("benchmark already initialized".into()));
        }
        let mut entries = BTreeMap::new();
        let mut claims = BTreeMap::new();
        for row in seed {
            self.check_claim(&row.claim)?;
            if row.verdict != Verdict::NoneVerifiable && row.rationale.text.trim().is_empty() {
                return Err(StoreError::InvalidInput(format!(
                    "claim {} has an empty rationale",
                    row.claim.claim_id
                )));
            }
            let id = row.claim.claim_id.clone();
            if claims.contains_key(&id) {
                return Err(StoreError::Conflict(format!("duplicate claim id {id}")));
            }
            entries.insert(
                id.clone(),
                BenchmarkEntry {
                    claim_id: id.clone(),
                    verdict: row.verdict,
                    rationale: row.rationale,
                    introduced_in: 0,
                },
            );
            claims.insert(id, row.claim);
        }
        self.claims = claims;
        let v0 = Arc::new(BenchmarkVersion::seed(entries));
        self.versions.push(Arc::clone(&v0));
        Ok(v0)
    }

    pub fn is_initialized(&self) -> bool {
        !self.versions.is_empty()
    }

    pub fn head(&self) -> Option<Arc<BenchmarkVersion>> {
        self.versions.last().cloned()
    }

    pub fn version(&self, t: u64) -> Option<Arc<BenchmarkVersion>> {
        self.versions.get(t as usize).cloned()
    }

    pub fn versions(&self) -> &[Arc<BenchmarkVersion>] {
        &self.versions
    }

    pub fn changelog(&self) -> &[ChangeRecord] {
        &self.changelog
    }

    /// Records produced by the round that created version `t`.
    pub fn changes_for_version(&self, t: u64) -> &[ChangeRecord] {
        let start = self.changelog.partition_point(|r| r.round < t);
        let end = self.changelog.partition_point(|r| r.round <= t);
        &self.changelog[start..end]
    }

    /// Assigns sequence numbers and the round to accepted revisions.
    pub fn stage_changes(&self, accepted: Vec<AcceptedChange>) -> Vec<ChangeRecord> {
        let round = self.versions.len() as u64;
        let base = self.changelog.len() as u64;
        let now = Utc::now();
        accepted
            .into_iter()
            .enumerate()
            .map(|(i, c)| ChangeRecord {
                seq: base + 1 + i as u64,
                claim_id: c.claim_id,
                old_verdict: c.old_verdict,
                new_verdict: c.new_verdict,
                new_rationale: c.new_rationale,
                decided_by: c.decided_by,
                proposed_by: c.proposed_by,
                round,
                decision: ChangeDecision::Accept,
                timestamp: now,
            })
            .collect()
    }

    /// Applies a changeset to the head, minting the next version even when empty.
    pub fn apply_changeset(
        &mut self,
        changes: Vec<ChangeRecord>,
    ) -> Result<Arc<BenchmarkVersion>, StoreError> {
        let head = self
            .head()
            .ok_or_else(|| StoreError::NotFound("benchmark not initialized".into()))?;
        for c in &changes {
            if c.verdict_is_noop() {
                return Err(StoreError::InvalidInput(format!(
                    "change {} does not alter the verdict of {}",
                    c.seq, c.claim_id
                )));
            }
            if c.new_verdict != Verdict::NoneVerifiable && c.new_rationale.text.trim().is_empty() {
                return Err(StoreError::InvalidInput(format!(
                    "change {} carries an empty rationale",
                    c.seq
                )));
            }
        }
        let next = Arc::new(head.apply(&changes)?);
        self.changelog.extend(changes);
        self.versions.push(Arc::clone(&next));
        Ok(next)
    }

    /// Re-derives every version from version 0 and the changelog and checks
    /// each digest against the stored one.
    pub fn verify_replay(&self) -> Result<(), StoreError> {
        let Some(seed) = self.versions.first() else {
            return Ok(());
        };
        let head = self.versions.len() as u64 - 1;
        let replayed = replay_versions(seed, &self.changelog, Some(head))?;
        for (stored, fresh) in self.versions.iter().zip(&replayed) {
            if stored.snapshot_digest() != fresh.snapshot_digest() {
                return Err(StoreError::CorruptLog(format!(
                    "version {} digest mismatch on replay",
                    stored.version()
                )));
            }
        }
        Ok(())
    }

    pub(crate) fn restore(
        reports: Vec<ReportDocument>,
        claims: Vec<ClaimRecord>,
        seed: BTreeMap<ClaimId, BenchmarkEntry>,
        changelog: Vec<ChangeRecord>,
        head_version: u64,
    ) -> Result<Self, StoreError> {
        let mut store = Self::new();
        for r in reports {
            store.add_report(r)?;
        }
        for c in claims {
            store.check_claim(&c)?;
            store.claims.insert(c.claim_id.clone(), c);
        }
        let v0 = BenchmarkVersion::seed(seed);
        let versions = replay_versions(&v0, &changelog, Some(head_version))?;
        store.versions = versions.into_iter().map(Arc::new).collect();
        store.changelog = changelog;
        Ok(store)
    }
}

impl ChangeRecord {
    fn verdict_is_noop(&self) -> bool {
        self.old_verdict == self.new_verdict
    }
}
