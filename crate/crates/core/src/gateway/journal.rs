//! Append-only record of every provider attempt.
//!
//! One JSON line per attempt. A task is finished once it has a completed
//! attempt or a terminal failure; reopening the journal skips finished tasks.

use std::collections::{BTreeMap, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::parse::RawCompletion;
use super::GatewayError;

pub const JOURNAL_FILE: &str = "journal.jsonl";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    RateLimitExhausted,
    ProviderError,
    Auth,
    Transport,
    Malformed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum AttemptOutcome {
    Completed {
        completion: RawCompletion,
    },
    Failed {
        failure: FailureKind,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        status: Option<u16>,
        error: String,
        terminal: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttemptRecord {
    pub task_id: String,
    pub provider: String,
    pub attempt: u32,
    #[serde(flatten)]
    pub outcome: AttemptOutcome,
}

/// A task that exhausted its attempts or hit a non-retryable error.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskFailure {
    pub task_id: String,
    pub provider: String,
    pub failure: FailureKind,
    pub status: Option<u16>,
    pub error: String,
    pub attempts: u32,
}

#[derive(Debug, Clone, Default)]
pub struct JournalState {
    pub completed: BTreeMap<String, RawCompletion>,
    pub failed: BTreeMap<String, TaskFailure>,
    pub attempts: HashMap<String, u32>,
}

impl JournalState {
    pub fn is_finished(&self, task_id: &str) -> bool {
        self.completed.contains_key(task_id) || self.failed.contains_key(task_id)
    }

    pub fn apply(&mut self, record: &AttemptRecord) {
        let count = self.attempts.entry(record.task_id.clone()).or_default();
        *count = (*count).max(record.attempt);
        match &record.outcome {
            AttemptOutcome::Completed { completion } => {
                self.completed
                    .entry(record.task_id.clone())
                    .or_insert_with(|| completion.clone());
            }
            AttemptOutcome::Failed {
                failure,
                status,
                error,
                terminal: true,
            } => {
                self.failed
                    .entry(record.task_id.clone())
                    .or_insert_with(|| TaskFailure {
                        task_id: record.task_id.clone(),
                        provider: record.provider.clone(),
                        failure: *failure,
                        status: *status,
                        error: error.clone(),
                        attempts: record.attempt,
                    });
            }
            AttemptOutcome::Failed { .. } => {}
        }
    }
}

pub struct Journal {
    path: PathBuf,
    file: File,
}

impl Journal {
    /// Opens (creating if needed) the journal in `dir` and replays it.
    ///
    /// A trailing partial line left by an interrupted write is cut off.
    pub fn open(dir: &Path) -> Result<(Journal, JournalState), GatewayError> {
        let path = dir.join(JOURNAL_FILE);
        let io = |e| GatewayError::Journal {
            path: path.clone(),
            source: e,
        };
        std::fs::create_dir_all(dir).map_err(io)?;
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(&path)
            .map_err(io)?;

        let mut text = String::new();
        file.read_to_string(&mut text).map_err(io)?;
        let complete_len = text.rfind('\n').map_or(0, |i| i + 1);
        if complete_len < text.len() {
            file.set_len(complete_len as u64).map_err(io)?;
            file.seek(SeekFrom::End(0)).map_err(io)?;
        }

        let mut state = JournalState::default();
        for (idx, line) in text[..complete_len].lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let record: AttemptRecord =
                serde_json::from_str(line).map_err(|e| GatewayError::JournalCorrupt {
                    path: path.clone(),
                    line: idx + 1,
                    message: e.to_string(),
                })?;
            state.apply(&record);
        }
        Ok((Journal { path, file }, state))
    }

    pub fn append(&mut self, record: &AttemptRecord) -> Result<(), GatewayError> {
        let mut line = serde_json::to_vec(record).expect("record serializes");
        line.push(b'\n');
        self.file
            .write_all(&line)
            .and_then(|_| self.file.flush())
            .map_err(|e| GatewayError::Journal {
                path: self.path.clone(),
                source: e,
            })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

/// Reads all attempt records, in journal order.
pub fn read_attempts(dir: &Path) -> Result<Vec<AttemptRecord>, GatewayError> {
    let path = dir.join(JOURNAL_FILE);
    crate::jsonl::read_jsonl(&path).map_err(|e| GatewayError::JournalCorrupt {
        path,
        line: 0,
        message: e.to_string(),
    })
}
