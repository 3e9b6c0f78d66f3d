//! On-disk formats: report JSON, snapshot JSONL, changelog JSONL, and the
//! store directory layout used for persistence.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::version::{digest_snapshot_entries, SnapshotEntry};
use super::{
    BenchmarkEntry, BenchmarkStore, BenchmarkVersion, ChangeRecord, ClaimRecord, ReportDocument,
    StoreError,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub version: u64,
    pub parent: Option<u64>,
    pub snapshot_digest: String,
}

/// A parsed, digest-verified snapshot file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    pub header: SnapshotHeader,
    pub entries: Vec<SnapshotEntry>,
}

pub fn write_report_file(doc: &ReportDocument, w: impl Write) -> Result<(), StoreError> {
    serde_json::to_writer_pretty(w, doc)?;
    Ok(())
}

pub fn read_report_file(r: impl Read) -> Result<ReportDocument, StoreError> {
    let doc: ReportDocument = serde_json::from_reader(r)?;
    doc.validate()?;
    Ok(doc)
}

pub fn write_snapshot(version: &BenchmarkVersion, w: impl Write) -> Result<(), StoreError> {
    let mut w = BufWriter::new(w);
    let header = SnapshotHeader {
        version: version.version(),
        parent: version.parent(),
        snapshot_digest: version.snapshot_digest().to_owned(),
    };
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    w.write_all(&version.canonical_bytes())?;
    w.flush()?;
    Ok(())
}

/// Reads a snapshot and checks sort order and digest.
pub fn read_snapshot(r: impl Read) -> Result<Snapshot, StoreError> {
    let mut lines = BufReader::new(r).lines();
    let header_line = lines
        .next()
        .ok_or_else(|| StoreError::CorruptLog("snapshot file is empty".into()))??;
    let header: SnapshotHeader = serde_json::from_str(&header_line)?;
    let mut entries = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        entries.push(serde_json::from_str::<SnapshotEntry>(&line)?);
    }
    if entries.windows(2).any(|w| w[0].claim_id >= w[1].claim_id) {
        return Err(StoreError::CorruptLog(
            "snapshot entries are not sorted by claim_id".into(),
        ));
    }
    let digest = digest_snapshot_entries(&entries);
    if digest != header.snapshot_digest {
        return Err(StoreError::CorruptLog(format!(
            "snapshot digest mismatch: header {}, content {digest}",
            header.snapshot_digest
        )));
    }
    Ok(Snapshot { header, entries })
}

pub fn write_changelog(records: &[ChangeRecord], w: impl Write) -> Result<(), StoreError> {
    write_jsonl(records, w)
}

pub fn read_changelog(r: impl Read) -> Result<Vec<ChangeRecord>, StoreError> {
    read_jsonl(r)
}

pub(crate) fn write_jsonl<T: Serialize>(items: &[T], w: impl Write) -> Result<(), StoreError> {
    let mut w = BufWriter::new(w);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn read_jsonl<T: for<'de> Deserialize<'de>>(r: impl Read) -> Result<Vec<T>, StoreError> {
    let mut out = Vec::new();
    for line in BufReader::new(r).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
struct HeadFile {
    version: u64,
    snapshot_digest: String,
}

/// Writes `bytes` to `path` through a temporary file and rename.
pub(crate) fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

impl BenchmarkStore {
    /// Persists the store to `dir`:
    /// `reports.jsonl`, `claims.jsonl`, `seed.jsonl`, `changelog.jsonl`,
    /// `snapshots/v{t}.jsonl` and `head.json` (written last).
    pub fn save(&self, dir: &Path) -> Result<(), StoreError> {
        fs::create_dir_all(dir.join("snapshots"))?;
        let mut buf = Vec::new();
        write_jsonl(&self.reports, &mut buf)?;
        atomic_write(&dir.join("reports.jsonl"), &buf)?;

        buf.clear();
        let claims: Vec<&ClaimRecord> = self.claims.values().collect();
        write_jsonl(&claims, &mut buf)?;
        atomic_write(&dir.join("claims.jsonl"), &buf)?;

        if let Some(v0) = self.versions.first() {
            buf.clear();
            let seed: Vec<&BenchmarkEntry> = v0.entries().values().collect();
            write_jsonl(&seed, &mut buf)?;
            atomic_write(&dir.join("seed.jsonl"), &buf)?;
        }

        buf.clear();
        write_changelog(&self.changelog, &mut buf)?;
        atomic_write(&dir.join("changelog.jsonl"), &buf)?;

        for v in &self.versions {
            let path = dir.join("snapshots").join(format!("v{}.jsonl", v.version()));
            if !path.exists() {
                buf.clear();
                write_snapshot(v, &mut buf)?;
                atomic_write(&path, &buf)?;
            }
        }

        if let Some(head) = self.head() {
            let head = HeadFile {
                version: head.version(),
                snapshot_digest: head.snapshot_digest().to_owned(),
            };
            atomic_write(&dir.join("head.json"), &serde_json::to_vec_pretty(&head)?)?;
        }
        Ok(())
    }

    /// Loads a store saved with [`BenchmarkStore::save`], replaying the
    /// changelog and checking the head digest.
    pub fn open(dir: &Path) -> Result<Self, StoreError> {
        let reports: Vec<ReportDocument> = read_jsonl(fs::File::open(dir.join("reports.jsonl"))?)?;
        let claims: Vec<ClaimRecord> = read_jsonl(fs::File::open(dir.join("claims.jsonl"))?)?;
        let head_path = dir.join("head.json");
        if !head_path.exists() {
            let mut store = BenchmarkStore::new();
            for r in reports {
                store.add_report(r)?;
            }
            return Ok(store);
        }
        let head: HeadFile = serde_json::from_slice(&fs::read(head_path)?)?;
        let seed_rows: Vec<BenchmarkEntry> = read_jsonl(fs::File::open(dir.join("seed.jsonl"))?)?;
        let seed: BTreeMap<_, _> = seed_rows
            .into_iter()
            .map(|e| (e.claim_id.clone(), e))
            .collect();
        let changelog = read_changelog(fs::File::open(dir.join("changelog.jsonl"))?)?;
        let store = BenchmarkStore::restore(reports, claims, seed, changelog, head.version)?;
        let replayed = store.head().expect("restored store has a head");
        if replayed.snapshot_digest() != head.snapshot_digest {
            return Err(StoreError::CorruptLog(format!(
                "replayed head digest {} does not match recorded {}",
                replayed.snapshot_digest(),
                head.snapshot_digest
            )));
        }
        Ok(store)
    }
}
