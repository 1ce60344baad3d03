use std::panic::{catch_unwind, AssertUnwindSafe};

use rayon::prelude::*;

use super::manifest::{ConfigSpec, Experiment, PreparedCase};
use super::record::{CellKey, Outcome, RecordStore, RunRecord, TimelinePoint};
use super::HarnessError;
use crate::bbc::CounterTable;
use crate::search::{run_crash_ga, run_dynamosa, CrashResult, UnitResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub repetitions: u64,
    pub base_seed: u64,
    /// Worker threads; 1 runs cells one after another.
    pub jobs: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            repetitions: 1,
            base_seed: 0,
            jobs: 1,
        }
    }
}

/// Every cell of the grid in a fixed order: case, then config, then seed.
pub fn cells(experiment: &Experiment, options: &RunOptions) -> Vec<CellKey> {
    let mut out = Vec::new();
    for case in &experiment.cases {
        for config in &experiment.manifest.configs {
            for seed in options.base_seed..options.base_seed + options.repetitions {
                out.push(CellKey {
                    case: case.case.id.clone(),
                    config: config.id.clone(),
                    seed,
                });
            }
        }
    }
    out
}

type Parts = (Outcome, Vec<TimelinePoint>, CounterTable);

/// Outcome, timeline, and counters of a finished unit search.
pub fn unit_parts(r: &UnitResult) -> Parts {
    let outcome = Outcome {
        line_coverage: Some(r.line_coverage),
        branch_coverage: Some(r.branch_coverage),
        reproduced: None,
        best_fitness: None,
        evaluations: r.evaluations,
        generations: r.generations,
        error: None,
    };
    let timeline = r
        .timeline
        .iter()
        .map(|s| TimelinePoint {
            evaluations: s.evaluations,
            line_coverage: Some(s.line_coverage),
            branch_coverage: Some(s.branch_coverage),
            best_fitness: None,
        })
        .collect();
    (outcome, timeline, r.counters())
}

/// Outcome, timeline, and counters of a finished crash search.
pub fn crash_parts(r: &CrashResult) -> Parts {
    let outcome = Outcome {
        line_coverage: None,
        branch_coverage: None,
        reproduced: Some(r.reproduced),
        best_fitness: Some(r.best_fitness),
        evaluations: r.evaluations,
        generations: r.generations,
        error: None,
    };
    let timeline = r
        .timeline
        .iter()
        .map(|s| TimelinePoint {
            evaluations: s.evaluations,
            line_coverage: None,
            branch_coverage: None,
            best_fitness: Some(s.best_fitness),
        })
        .collect();
    (outcome, timeline, r.counters.clone())
}

/// Runs one cell. A panic inside the search becomes a failed outcome.
pub fn run_cell(experiment: &Experiment, case: &PreparedCase, config: &ConfigSpec, seed: u64) -> RunRecord {
    let search = experiment.search_config(case, config, seed);
    let result = catch_unwind(AssertUnwindSafe(|| match &case.crash {
        None => unit_parts(&run_dynamosa(&case.subject, &search)),
        Some(crash) => crash_parts(&run_crash_ga(&case.subject, crash, case.fitness(), &search)),
    }));
    let (outcome, timeline, counters) = match result {
        Ok(parts) => parts,
        Err(payload) => {
            let message = payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "search panicked".to_string());
            (Outcome::failed(message), Vec::new(), CounterTable::new())
        }
    };
    RunRecord {
        case: case.case.id.clone(),
        config: config.id.clone(),
        seed,
        mode: case.case.mode,
        outcome,
        timeline,
        counters,
    }
}

pub fn run_key(experiment: &Experiment, key: &CellKey) -> Result<RunRecord, HarnessError> {
    let case = experiment
        .case(&key.case)
        .ok_or_else(|| HarnessError::Manifest(format!("no case `{}`", key.case)))?;
    let config = experiment
        .config(&key.config)
        .ok_or_else(|| HarnessError::Manifest(format!("no config `{}`", key.config)))?;
    Ok(run_cell(experiment, case, config, key.seed))
}

/// Runs every cell not already in `store` (when given) and returns the
/// records of the whole grid in cell order. New records are appended in
/// batches, in cell order, so an interrupted experiment resumes where it
/// stopped and the file does not depend on thread scheduling.
pub fn run_experiment(
    experiment: &Experiment,
    options: &RunOptions,
    store: Option<&RecordStore>,
    mut progress: impl FnMut(&RunRecord),
) -> Result<Vec<RunRecord>, HarnessError> {
    if options.repetitions == 0 {
        return Err(HarnessError::Manifest("repetitions must be at least 1".into()));
    }
    let grid = cells(experiment, options);
    let existing = match store {
        Some(s) => s.load()?,
        None => Vec::new(),
    };
    let done: std::collections::BTreeMap<CellKey, RunRecord> =
        existing.into_iter().map(|r| (r.key(), r)).collect();
    let pending: Vec<&CellKey> = grid.iter().filter(|k| !done.contains_key(k)).collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.jobs.max(1))
        .build()
        .map_err(|e| HarnessError::Manifest(format!("cannot start workers: {e}")))?;
    let batch = options.jobs.max(1) * 4;
    let mut fresh = std::collections::BTreeMap::new();
    for chunk in pending.chunks(batch) {
        let records: Vec<RunRecord> = pool.install(|| {
            chunk
                .par_iter()
                .map(|k| run_key(experiment, k))
                .collect::<Result<_, _>>()
        })?;
        if let Some(s) = store {
            s.append(&records)?;
        }
        for r in records {
            progress(&r);
            fresh.insert(r.key(), r);
        }
    }
    Ok(grid
        .iter()
        .map(|k| done.get(k).or_else(|| fresh.get(k)).cloned().expect("every cell ran"))
        .collect())
}
