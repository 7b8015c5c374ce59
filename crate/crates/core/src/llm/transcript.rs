use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One recorded exchange, one line of a `transcripts/*.jsonl` file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub key: String,
    pub template_id: String,
    pub model: String,
    pub temperature: f64,
    pub prompt: String,
    pub response: String,
}

/// Content-addressed responses loaded from a transcript directory.
#[derive(Debug, Default)]
pub struct TranscriptStore {
    dir: Option<PathBuf>,
    record_file: String,
    entries: Mutex<Entries>,
}

/// Entries in load-then-record order, indexed by key.
#[derive(Debug, Default)]
struct Entries {
    index: BTreeMap<String, usize>,
    list: Vec<TranscriptEntry>,
}

impl Entries {
    fn add(&mut self, entry: TranscriptEntry) -> bool {
        if self.index.contains_key(&entry.key) {
            return false;
        }
        self.index.insert(entry.key.clone(), self.list.len());
        self.list.push(entry);
        true
    }
}

impl TranscriptStore {
    pub fn in_memory() -> Self {
        TranscriptStore::default()
    }

    /// Loads every `*.jsonl` in `dir` (which may not exist yet). New
    /// recordings are appended to `record_file` inside it.
    pub fn open(dir: &Path, record_file: &str) -> Result<Self> {
        let mut entries = Entries::default();
        if dir.is_dir() {
            let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
                .map_err(|e| Error::io(dir, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
                .collect();
            files.sort();
            for file in files {
                let f = std::fs::File::open(&file).map_err(|e| Error::io(&file, e))?;
                for (n, line) in BufReader::new(f).lines().enumerate() {
                    let line = line.map_err(|e| Error::io(&file, e))?;
                    if line.trim().is_empty() {
                        continue;
                    }
                    let entry: TranscriptEntry = serde_json::from_str(&line).map_err(|e| Error::Format {
                        path: file.clone(),
                        message: format!("line {}: {e}", n + 1),
                    })?;
                    entries.add(entry);
                }
            }
        }
        Ok(TranscriptStore {
            dir: Some(dir.to_path_buf()),
            record_file: record_file.to_string(),
            entries: Mutex::new(entries),
        })
    }

    pub fn get(&self, key: &str) -> Option<TranscriptEntry> {
        let e = self.entries.lock().unwrap();
        e.index.get(key).map(|&i| e.list[i].clone())
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap().list.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn insert(&self, entry: TranscriptEntry) -> Result<()> {
        let mut entries = self.entries.lock().unwrap();
        if entries.index.contains_key(&entry.key) {
            return Ok(());
        }
        if let Some(dir) = &self.dir {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            let path = dir.join(&self.record_file);
            let mut f = OpenOptions::new()
                .create(true)
                .append(true)
                .open(&path)
                .map_err(|e| Error::io(&path, e))?;
            let line = serde_json::to_string(&entry).expect("entry serializes");
            writeln!(f, "{line}").map_err(|e| Error::io(&path, e))?;
        }
        entries.add(entry);
        Ok(())
    }

    /// Every entry, loaded ones first, then new recordings in order.
    pub fn entries(&self) -> Vec<TranscriptEntry> {
        self.entries.lock().unwrap().list.clone()
    }
}
