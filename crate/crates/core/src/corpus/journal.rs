use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{Decision, DocId, LabelRecord, LabelSource};
use crate::error::{Error, Result};

/// One line of the session journal.
///
/// `batch` numbers the submission that carried the label, so a resumed
/// session can replay submissions with their original grouping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JournalEntry {
    pub sequence: u64,
    pub doc_id: DocId,
    pub decision: Decision,
    pub source: LabelSource,
    pub timestamp: DateTime<Utc>,
    #[serde(default)]
    pub batch: u64,
}

impl JournalEntry {
    pub fn from_record(record: &LabelRecord, batch: u64, timestamp: DateTime<Utc>) -> Self {
        JournalEntry {
            sequence: record.sequence,
            doc_id: record.doc_id,
            decision: record.decision,
            source: record.source,
            timestamp,
            batch,
        }
    }
}

/// Append-only JSON-lines log of label events.
#[derive(Debug)]
pub struct Journal {
    path: PathBuf,
    file: File,
}

impl Journal {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        Ok(Journal { path, file })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Writes the entries and syncs them to disk before returning.
    pub fn append(&mut self, entries: &[JournalEntry]) -> Result<()> {
        let mut buf = Vec::new();
        for entry in entries {
            serde_json::to_writer(&mut buf, entry).map_err(|e| Error::Journal(e.to_string()))?;
            buf.push(b'\n');
        }
        self.file
            .write_all(&buf)
            .and_then(|_| self.file.sync_data())
            .map_err(|e| Error::io(&self.path, e))
    }

    /// Reads a journal back. A torn final line (crash mid-append) is dropped;
    /// corruption anywhere else is an error.
    pub fn read(path: impl AsRef<Path>) -> Result<Vec<JournalEntry>> {
        let path = path.as_ref();
        let file = match File::open(path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(Error::io(path, e)),
        };
        let lines: Vec<String> = BufReader::new(file)
            .lines()
            .collect::<std::io::Result<_>>()
            .map_err(|e| Error::io(path, e))?;
        let mut entries = Vec::with_capacity(lines.len());
        let last = lines.len().saturating_sub(1);
        for (i, line) in lines.iter().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<JournalEntry>(line) {
                Ok(e) => entries.push(e),
                Err(_) if i == last => break,
                Err(e) => return Err(Error::Journal(format!("{}:{}: {e}", path.display(), i + 1))),
            }
        }
        Ok(entries)
    }
}
