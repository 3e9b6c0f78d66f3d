use std::collections::{BTreeMap, HashSet};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::StoreError;
use crate::types::{ActorId, ClaimId, Rationale, Verdict};

/// Current consensus for one claim.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkEntry {
    pub claim_id: ClaimId,
    pub verdict: Verdict,
    pub rationale: Rationale,
    pub introduced_in: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChangeDecision {
    #[serde(rename = "ACCEPT")]
    Accept,
}

/// One accepted revision. Rejections never reach the changelog.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeRecord {
    pub seq: u64,
    pub claim_id: ClaimId,
    pub old_verdict: Verdict,
    pub new_verdict: Verdict,
    pub new_rationale: Rationale,
    pub decided_by: ActorId,
    pub proposed_by: ActorId,
    /// Round number; equal to the version the record produces.
    pub round: u64,
    pub decision: ChangeDecision,
    pub timestamp: DateTime<Utc>,
}

/// Immutable benchmark state at one version.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchmarkVersion {
    version: u64,
    parent: Option<u64>,
    entries: BTreeMap<ClaimId, BenchmarkEntry>,
    snapshot_digest: String,
    history_len: u64,
}

/// Line format shared by the canonical digest stream and the snapshot file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub claim_id: ClaimId,
    pub verdict: Verdict,
    pub rationale_text: String,
    pub evidence_refs: Vec<String>,
    pub introduced_in: u64,
}

impl From<&BenchmarkEntry> for SnapshotEntry {
    fn from(e: &BenchmarkEntry) -> Self {
        Self {
            claim_id: e.claim_id.clone(),
            verdict: e.verdict,
            rationale_text: e.rationale.text.clone(),
            evidence_refs: e.rationale.evidence_refs.clone(),
            introduced_in: e.introduced_in,
        }
    }
}

/// Canonical byte stream: one JSON line per entry in claim-id order.
pub fn canonical_bytes<'a>(entries: impl IntoIterator<Item = &'a BenchmarkEntry>) -> Vec<u8> {
    let mut out = Vec::new();
    for entry in entries {
        serde_json::to_writer(&mut out, &SnapshotEntry::from(entry))
            .expect("snapshot entries always serialize");
        out.push(b'\n');
    }
    out
}

pub fn digest_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Digest over snapshot lines; the lines must already be in claim-id order.
pub fn digest_snapshot_entries(entries: &[SnapshotEntry]) -> String {
    let mut out = Vec::new();
    for e in entries {
        serde_json::to_writer(&mut out, e).expect("snapshot entries always serialize");
        out.push(b'\n');
    }
    digest_bytes(&out)
}

impl BenchmarkVersion {
    pub(crate) fn seed(entries: BTreeMap<ClaimId, BenchmarkEntry>) -> Self {
        Self::build(0, None, entries, 0)
    }

    fn build(
        version: u64,
        parent: Option<u64>,
        entries: BTreeMap<ClaimId, BenchmarkEntry>,
        history_len: u64,
    ) -> Self {
        let snapshot_digest = digest_bytes(&canonical_bytes(entries.values()));
        Self {
            version,
            parent,
            entries,
            snapshot_digest,
            history_len,
        }
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn parent(&self) -> Option<u64> {
        self.parent
    }

    pub fn entries(&self) -> &BTreeMap<ClaimId, BenchmarkEntry> {
        &self.entries
    }

    pub fn entry(&self, id: &ClaimId) -> Option<&BenchmarkEntry> {
        self.entries.get(id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn snapshot_digest(&self) -> &str {
        &self.snapshot_digest
    }

    /// Number of change records applied since version 0.
    pub fn history_len(&self) -> u64 {
        self.history_len
    }

    pub fn labels(&self) -> BTreeMap<ClaimId, Verdict> {
        self.entries
            .iter()
            .map(|(id, e)| (id.clone(), e.verdict))
            .collect()
    }

    pub fn canonical_bytes(&self) -> Vec<u8> {
        canonical_bytes(self.entries.values())
    }

    /// Produces the next version. `changes` must continue the sequence numbers
    /// of this version's history and belong to round `version + 1`.
    pub fn apply(&self, changes: &[ChangeRecord]) -> Result<BenchmarkVersion, StoreError> {
        let next = self.version + 1;
        let mut seen = HashSet::new();
        for (offset, change) in changes.iter().enumerate() {
            let expected_seq = self.history_len + 1 + offset as u64;
            if change.seq != expected_seq {
                return Err(StoreError::CorruptLog(format!(
                    "expected seq {expected_seq}, found {}",
                    change.seq
                )));
            }
            if change.round != next {
                return Err(StoreError::CorruptLog(format!(
                    "change {} belongs to round {}, not {next}",
                    change.seq, change.round
                )));
            }
            if !seen.insert(&change.claim_id) {
                return Err(StoreError::Conflict(format!(
                    "claim {} changed twice in one changeset",
                    change.claim_id
                )));
            }
            let current = self
                .entries
                .get(&change.claim_id)
                .ok_or_else(|| StoreError::NotFound(format!("claim {}", change.claim_id)))?;
            if current.verdict != change.old_verdict {
                return Err(StoreError::ConcurrentModification {
                    claim_id: change.claim_id.clone(),
                    expected: change.old_verdict,
                    found: current.verdict,
                });
            }
        }

        let mut entries = self.entries.clone();
        for change in changes {
            let entry = entries
                .get_mut(&change.claim_id)
                .expect("checked above");
            entry.verdict = change.new_verdict;
            entry.rationale = change.new_rationale.clone();
            entry.introduced_in = next;
        }
        Ok(Self::build(
            next,
            Some(self.version),
            entries,
            self.history_len + changes.len() as u64,
        ))
    }
}

/// Rebuilds every version from `seed` through `head_version` (or through the
/// last round mentioned in `records` when `head_version` is `None`).
/// Rounds without records yield versions with unchanged entries.
pub fn replay_versions(
    seed: &BenchmarkVersion,
    records: &[ChangeRecord],
    head_version: Option<u64>,
) -> Result<Vec<BenchmarkVersion>, StoreError> {
    for (offset, record) in records.iter().enumerate() {
        let expected = seed.history_len + 1 + offset as u64;
        if record.seq != expected {
            return Err(StoreError::CorruptLog(format!(
                "gap or reordering: expected seq {expected}, found {}",
                record.seq
            )));
        }
    }
    for pair in records.windows(2) {
        if pair[1].round < pair[0].round {
            return Err(StoreError::CorruptLog(format!(
                "round goes backwards at seq {}",
                pair[1].seq
            )));
        }
    }
    if let Some(first) = records.first() {
        if first.round <= seed.version {
            return Err(StoreError::CorruptLog(format!(
                "seq {} belongs to round {} at or before the seed version {}",
                first.seq, first.round, seed.version
            )));
        }
    }
    let last_round = records.last().map_or(seed.version, |r| r.round);
    let head = head_version.unwrap_or(last_round);
    if head < last_round {
        return Err(StoreError::CorruptLog(format!(
            "changelog reaches round {last_round}, past head version {head}"
        )));
    }

    let mut versions = vec![seed.clone()];
    let mut cursor = 0usize;
    for round in seed.version + 1..=head {
        let start = cursor;
        while cursor < records.len() && records[cursor].round == round {
            cursor += 1;
        }
        let next = versions
            .last()
            .expect("seeded")
            .apply(&records[start..cursor])?;
        versions.push(next);
    }
    Ok(versions)
}

/// Replays `records` on top of `seed` and returns the head.
pub fn replay_changelog(
    records: &[ChangeRecord],
    seed: &BenchmarkVersion,
) -> Result<BenchmarkVersion, StoreError> {
    let mut versions = replay_versions(seed, records, None)?;
    Ok(versions.pop().expect("at least the seed"))
}
