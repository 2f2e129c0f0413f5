use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::record::{FailureRecord, ReplicaRecord, StoreEntry, SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::gates::GATES_VERSION;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub schema_version: u32,
    pub gates_version: u32,
    pub config_hash: String,
    pub config: ExperimentConfig,
}

impl Sidecar {
    pub fn new(config: &ExperimentConfig) -> Self {
        Sidecar {
            schema_version: SCHEMA_VERSION,
            gates_version: GATES_VERSION,
            config_hash: config.hash(),
            config: config.clone(),
        }
    }

    pub fn read(store: &Path) -> Result<Option<Sidecar>> {
        match fs::read_to_string(sidecar_path(store)) {
            Ok(s) => Ok(Some(serde_json::from_str(&s)?)),
            Err(e) if e.kind() == ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    pub fn write(&self, store: &Path) -> Result<()> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        fs::write(sidecar_path(store), s)?;
        Ok(())
    }
}

/// `<store>.config.json`.
pub fn sidecar_path(store: &Path) -> PathBuf {
    let mut s = store.as_os_str().to_owned();
    s.push(".config.json");
    PathBuf::from(s)
}

/// Complete lines of a store.
#[derive(Debug, Clone, Default)]
pub struct Store {
    pub entries: Vec<StoreEntry>,
    /// Byte length covered by complete lines.
    pub valid_len: u64,
    /// An unterminated trailing line was ignored.
    pub partial_tail: bool,
}

impl Store {
    pub fn replicas(&self) -> impl Iterator<Item = &ReplicaRecord> {
        self.entries.iter().filter_map(|e| match e {
            StoreEntry::Replica(r) => Some(r),
            StoreEntry::Failure(_) => None,
        })
    }

    pub fn failures(&self) -> impl Iterator<Item = &FailureRecord> {
        self.entries.iter().filter_map(|e| match e {
            StoreEntry::Failure(f) => Some(f),
            StoreEntry::Replica(_) => None,
        })
    }

    /// Replica records sorted by `(t, replica_index)`.
    pub fn sorted_replicas(&self) -> Vec<ReplicaRecord> {
        let mut v: Vec<ReplicaRecord> = self.replicas().cloned().collect();
        v.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.replica_index.cmp(&b.replica_index)));
        v
    }

    /// Distinct `t` values of the replica records, ascending.
    pub fn t_values(&self) -> Vec<f64> {
        let mut ts: Vec<f64> = self.replicas().map(|r| r.t).collect();
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        ts
    }
}

/// Reads every complete line. A missing file is an empty store; a trailing
/// line without its newline is treated as an interrupted write and skipped.
pub fn read_store(path: &Path) -> Result<Store> {
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == ErrorKind::NotFound => return Ok(Store::default()),
        Err(e) => return Err(e.into()),
    };
    let mut store = Store::default();
    let mut start = 0usize;
    let mut line_no = 0usize;
    while start < bytes.len() {
        let Some(off) = bytes[start..].iter().position(|&b| b == b'\n') else {
            store.partial_tail = true;
            break;
        };
        line_no += 1;
        let line = &bytes[start..start + off];
        if !line.iter().all(u8::is_ascii_whitespace) {
            let entry: StoreEntry = serde_json::from_slice(line)
                .map_err(|e| Error::Store(format!("{}: line {line_no} is not a valid record: {e}", path.display())))?;
            store.entries.push(entry);
        }
        start += off + 1;
        store.valid_len = start as u64;
    }
    Ok(store)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn failure(i: usize) -> StoreEntry {
        StoreEntry::Failure(FailureRecord {
            schema_version: SCHEMA_VERSION,
            config_hash: "h".into(),
            t: 1.5,
            replica_index: i,
            seed: 7,
            error: "boom".into(),
            ceiling: None,
            all_pruned: false,
        })
    }

    #[test]
    fn partial_tail_is_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.jsonl");
        let mut f = fs::File::create(&p).unwrap();
        let line = serde_json::to_string(&failure(0)).unwrap();
        writeln!(f, "{line}").unwrap();
        write!(f, "{{\"kind\":\"fail").unwrap();
        drop(f);
        let s = read_store(&p).unwrap();
        assert_eq!(s.entries.len(), 1);
        assert!(s.partial_tail);
        assert_eq!(s.valid_len as usize, line.len() + 1);
    }

    #[test]
    fn corrupt_line_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.jsonl");
        fs::write(&p, "not json\n").unwrap();
        assert!(matches!(read_store(&p), Err(Error::Store(_))));
        assert!(read_store(&dir.path().join("missing")).unwrap().entries.is_empty());
    }

    #[test]
    fn sidecar_name() {
        assert_eq!(sidecar_path(Path::new("a/b.jsonl")), PathBuf::from("a/b.jsonl.config.json"));
    }
}
