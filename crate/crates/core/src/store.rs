//! Memo of dimension results keyed by `(d, m, n)`.
//!
//! On disk the store is UTF-8 JSON lines: a header line
//! `{"store":"fatpoint-cache","version":1}` followed by one [`CacheEntry`]
//! per line. Appending a line is a valid update; on load a later line for the
//! same spec goes through the same merge rule as [`ResultStore::put`].

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::RwLock;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::calculus::SystemSpec;
use crate::certify::Certificate;
use crate::error::{Error, Result};

pub const STORE_TAG: &str = "fatpoint-cache";
pub const STORE_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "gap")]
pub enum Status {
    NonSpecial,
    ProbablySpecial(u64),
    Unknown,
}

impl Status {
    fn strength(self) -> u8 {
        match self {
            Status::NonSpecial => 2,
            Status::ProbablySpecial(_) => 1,
            Status::Unknown => 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Evidence {
    None,
    Certificate(Certificate),
    Oracle { prime: u64, seed: u64, trials: u32, witness_trial: Option<u32> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub spec: SystemSpec,
    pub status: Status,
    pub evidence: Evidence,
    /// Seconds since the Unix epoch.
    pub created_at: u64,
}

impl CacheEntry {
    pub fn new(spec: SystemSpec, status: Status, evidence: Evidence) -> Self {
        let created_at = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        CacheEntry { spec, status, evidence, created_at }
    }

    fn validate(&self) -> Result<()> {
        let supported = match &self.evidence {
            Evidence::None => false,
            Evidence::Certificate(c) => c.spec == self.spec,
            Evidence::Oracle { witness_trial, .. } => witness_trial.is_some(),
        };
        if self.status == Status::NonSpecial && !supported {
            return Err(Error::MissingEvidence { spec: self.spec });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PutOutcome {
    Inserted,
    Replaced,
    /// The stored entry is at least as strong and was kept.
    Kept,
}

#[derive(Serialize, Deserialize)]
struct Header {
    store: String,
    version: u32,
}

/// A line that could not be turned into an entry.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MalformedLine {
    pub line: usize,
    pub reason: String,
    pub record: String,
}

#[derive(Debug, Default)]
pub struct LoadReport {
    pub store: ResultStore,
    pub malformed: Vec<MalformedLine>,
}

/// Concurrent readers, single writer; `save` snapshots under the read lock.
#[derive(Debug, Default)]
pub struct ResultStore {
    entries: RwLock<BTreeMap<SystemSpec, CacheEntry>>,
}

impl ResultStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, spec: SystemSpec) -> Option<CacheEntry> {
        self.entries.read().unwrap().get(&spec).cloned()
    }

    pub fn len(&self) -> usize {
        self.entries.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Snapshot of all entries in key order.
    pub fn entries(&self) -> Vec<CacheEntry> {
        self.entries.read().unwrap().values().cloned().collect()
    }

    /// Inserts `entry` unless a stored entry is at least as strong
    /// (NonSpecial > ProbablySpecial > Unknown).
    pub fn put(&self, entry: CacheEntry) -> Result<PutOutcome> {
        entry.validate()?;
        let mut map = self.entries.write().unwrap();
        match map.get(&entry.spec) {
            None => {
                map.insert(entry.spec, entry);
                Ok(PutOutcome::Inserted)
            }
            Some(old) if entry.status.strength() > old.status.strength() => {
                map.insert(entry.spec, entry);
                Ok(PutOutcome::Replaced)
            }
            Some(_) => Ok(PutOutcome::Kept),
        }
    }

    /// Writes the whole store to `path` through a temporary file in the same
    /// directory and an atomic rename.
    pub fn save(&self, path: &Path) -> Result<()> {
        let snapshot = self.entries();
        let io = |source| Error::Io { path: path.to_path_buf(), source };
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        let tmp = tempfile::NamedTempFile::new_in(&dir).map_err(io)?;
        {
            let mut w = BufWriter::new(tmp.as_file());
            write_header(&mut w)?;
            for entry in &snapshot {
                serde_json::to_writer(&mut w, entry)?;
                w.write_all(b"\n").map_err(io)?;
            }
            w.flush().map_err(io)?;
        }
        tmp.as_file().sync_all().map_err(io)?;
        tmp.persist(path).map_err(|e| io(e.error))?;
        Ok(())
    }

    /// Reads a store, collecting malformed entry lines instead of failing.
    /// A missing or foreign header is an error.
    pub fn load(path: &Path) -> Result<LoadReport> {
        let io = |source| Error::Io { path: path.to_path_buf(), source };
        let file = File::open(path).map_err(io)?;
        let mut lines = BufReader::new(file).lines();
        let header_line = lines.next().transpose().map_err(io)?.unwrap_or_default();
        let header_ok = serde_json::from_str::<Header>(&header_line)
            .map(|h| h.store == STORE_TAG && h.version == STORE_VERSION)
            .unwrap_or(false);
        if !header_ok {
            return Err(Error::CorruptRecord {
                path: path.to_path_buf(),
                line: 1,
                reason: format!("expected a {STORE_TAG} v{STORE_VERSION} header"),
                record: header_line,
            });
        }
        let report = LoadReport::default();
        let mut malformed = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line.map_err(io)?;
            if line.trim().is_empty() {
                continue;
            }
            let outcome = serde_json::from_str::<CacheEntry>(&line)
                .map_err(|e| e.to_string())
                .and_then(|entry| report.store.put(entry).map_err(|e| e.to_string()));
            if let Err(reason) = outcome {
                malformed.push(MalformedLine { line: i + 2, reason, record: line });
            }
        }
        Ok(LoadReport { malformed, ..report })
    }

    /// Like [`ResultStore::load`] but the first malformed line is an error.
    pub fn load_strict(path: &Path) -> Result<ResultStore> {
        let report = Self::load(path)?;
        match report.malformed.into_iter().next() {
            None => Ok(report.store),
            Some(m) => Err(Error::CorruptRecord { path: path.to_path_buf(), line: m.line, reason: m.reason, record: m.record }),
        }
    }

    /// Appends one entry line, writing the header first if the file is new.
    pub fn append(path: &Path, entry: &CacheEntry) -> Result<()> {
        entry.validate()?;
        let io = |source| Error::Io { path: path.to_path_buf(), source };
        let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
        let file = OpenOptions::new().create(true).append(true).open(path).map_err(io)?;
        let mut w = BufWriter::new(file);
        if fresh {
            write_header(&mut w)?;
        }
        serde_json::to_writer(&mut w, entry)?;
        w.write_all(b"\n").map_err(io)?;
        w.flush().map_err(io)
    }
}

fn write_header(w: &mut impl Write) -> Result<()> {
    serde_json::to_writer(&mut *w, &Header { store: STORE_TAG.to_string(), version: STORE_VERSION })?;
    w.write_all(b"\n").map_err(|source| Error::Io { path: PathBuf::from("<store>"), source })
}
