use std::collections::BTreeSet;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::manifest::Mode;
use super::HarnessError;
use crate::bbc::CounterTable;

/// One search run: a (case, config, seed) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub case: String,
    pub config: String,
    pub seed: u64,
    pub mode: Mode,
    pub outcome: Outcome,
    pub timeline: Vec<TimelinePoint>,
    /// BBC calls, active comparisons, and decisions per objective (unit mode)
    /// or per compared frame (crash mode).
    pub counters: CounterTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line_coverage: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch_coverage: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reproduced: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_fitness: Option<f64>,
    pub evaluations: u64,
    pub generations: u64,
    /// Set when the run itself failed; the other fields are then empty.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Outcome {
    pub fn failed(message: String) -> Outcome {
        Outcome {
            line_coverage: None,
            branch_coverage: None,
            reproduced: None,
            best_fitness: None,
            evaluations: 0,
            generations: 0,
            error: Some(message),
        }
    }
}

/// Coverage (unit mode) or best fitness (crash mode) after a number of
/// evaluations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimelinePoint {
    pub evaluations: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line_coverage: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch_coverage: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_fitness: Option<f64>,
}

impl RunRecord {
    pub fn key(&self) -> CellKey {
        CellKey {
            case: self.case.clone(),
            config: self.config.clone(),
            seed: self.seed,
        }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("records always serialize")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellKey {
    pub case: String,
    pub config: String,
    pub seed: u64,
}

/// Append-only JSON-lines file of records.
#[derive(Debug, Clone)]
pub struct RecordStore {
    path: PathBuf,
}

impl RecordStore {
    pub const FILE_NAME: &'static str = "records.jsonl";

    pub fn in_dir(dir: &Path) -> RecordStore {
        RecordStore {
            path: dir.join(Self::FILE_NAME),
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Every record in the file; a missing file is an empty store. A torn
    /// final line (from an interrupted append) is ignored.
    pub fn load(&self) -> Result<Vec<RunRecord>, HarnessError> {
        let file = match File::open(&self.path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(HarnessError::io(&self.path, e)),
        };
        let lines: Vec<String> = BufReader::new(file)
            .lines()
            .collect::<Result<_, _>>()
            .map_err(|e| HarnessError::io(&self.path, e))?;
        let mut out = Vec::with_capacity(lines.len());
        for (i, line) in lines.iter().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str(line) {
                Ok(r) => out.push(r),
                Err(_) if i + 1 == lines.len() => break,
                Err(e) => {
                    return Err(HarnessError::Records {
                        path: self.path.clone(),
                        line: i + 1,
                        message: e.to_string(),
                    })
                }
            }
        }
        Ok(out)
    }

    pub fn keys(&self) -> Result<BTreeSet<CellKey>, HarnessError> {
        Ok(self.load()?.iter().map(RunRecord::key).collect())
    }

    pub fn append(&self, records: &[RunRecord]) -> Result<(), HarnessError> {
        if records.is_empty() {
            return Ok(());
        }
        if let Some(dir) = self.path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        }
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(|e| HarnessError::io(&self.path, e))?;
        let mut text = String::new();
        for r in records {
            text.push_str(&r.to_line());
            text.push('\n');
        }
        file.write_all(text.as_bytes()).map_err(|e| HarnessError::io(&self.path, e))
    }
}
