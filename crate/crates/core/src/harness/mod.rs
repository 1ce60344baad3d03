//! Repeated experiments over a benchmark manifest, with the statistics and
//! report files used to compare configurations.

pub mod manifest;
pub mod record;
pub mod report;
pub mod runner;
pub mod stats;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use manifest::{BenchmarkCase, ConfigSpec, Direction, Experiment, FitnessName, Manifest, Mode, PreparedCase};
pub use record::{CellKey, Outcome, RecordStore, RunRecord, TimelinePoint};
pub use report::{report, write_report, CaseReport, Comparison, ConfigSummary, StatReport};
pub use runner::{cells, crash_parts, run_cell, run_experiment, run_key, unit_parts, RunOptions};
pub use stats::{mean_sd, odds_ratio, rank_sum_p, vargha_delaney, Magnitude, RankSum, StatsError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("case `{case}`: {message}")]
    Program { case: String, message: String },
    #[error("{path}:{line}: bad record: {message}")]
    Records { path: PathBuf, line: usize, message: String },
}

impl HarnessError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> HarnessError {
        HarnessError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}
