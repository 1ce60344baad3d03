//! Benchmark manifests: which programs to search, in which mode, under which
//! configurations.
//!
//! ```toml
//! [search]
//! population_size = 50
//!
//! [[config]]
//! id = "base"
//!
//! [[config]]
//! id = "bbc"
//! bbc_usage_rate = 0.5
//!
//! [[case]]
//! id = "ledger"
//! program = "unit/ledger.mini"
//! mode = "unit"
//! budget = 8000
//! ```
//!
//! Paths are relative to the manifest's directory.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::analysis::Subject;
use crate::bbc::{GateConfig, Sleep};
use crate::heuristics::CrashTarget;
use crate::minilang::{parse_stack_trace, DEFAULT_STEP_LIMIT};
use crate::search::{Budget, CrashFitness, SearchConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Unit,
    Crash,
}

/// The outcome an acceptance run expects when comparing the configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// The later configuration should do better.
    Improves,
    /// No difference is expected, typically because both saturate.
    #[default]
    Neutral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitnessName {
    #[serde(rename = "ws")]
    WeightedSum,
    #[serde(rename = "std")]
    StDistance,
}

impl From<FitnessName> for CrashFitness {
    fn from(f: FitnessName) -> Self {
        match f {
            FitnessName::WeightedSum => CrashFitness::WeightedSum,
            FitnessName::StDistance => CrashFitness::StDistance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkCase {
    pub id: String,
    pub program: PathBuf,
    pub mode: Mode,
    #[serde(default)]
    pub trace: Option<PathBuf>,
    /// 1-based frame whose function the tests call; the highest frame some
    /// configuration managed to reproduce in pilot runs.
    #[serde(default)]
    pub target_frame: Option<usize>,
    #[serde(default)]
    pub fitness: Option<FitnessName>,
    /// Fitness evaluations per run; falls back to the search section.
    #[serde(default)]
    pub budget: Option<u64>,
    #[serde(default)]
    pub expect: Direction,
}

/// One column of the configuration grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigSpec {
    pub id: String,
    /// `None` runs without the BBC hook at all.
    #[serde(default)]
    pub bbc_usage_rate: Option<f64>,
    /// Evaluations an objective must have been active before BBC wakes.
    #[serde(default)]
    pub bbc_sleep: u64,
}

/// Search settings shared by every cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSection {
    pub population_size: usize,
    pub budget: u64,
    pub crossover_rate: f64,
    pub mutation_rate: Option<f64>,
    pub max_test_length: usize,
    pub step_limit: u64,
    pub timeline_interval: u64,
}

impl Default for SearchSection {
    fn default() -> Self {
        let d = SearchConfig::default();
        SearchSection {
            population_size: d.population_size,
            budget: 5_000,
            crossover_rate: d.crossover_rate,
            mutation_rate: d.mutation_rate,
            max_test_length: d.max_test_length,
            step_limit: DEFAULT_STEP_LIMIT,
            timeline_interval: d.timeline_interval,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(default)]
    pub search: SearchSection,
    #[serde(rename = "config")]
    pub configs: Vec<ConfigSpec>,
    #[serde(rename = "case")]
    pub cases: Vec<BenchmarkCase>,
}

/// A case with its files loaded and checked.
#[derive(Debug, Clone)]
pub struct PreparedCase {
    pub case: BenchmarkCase,
    pub subject: Subject,
    pub crash: Option<CrashTarget>,
}

impl PreparedCase {
    pub fn fitness(&self) -> CrashFitness {
        self.case.fitness.unwrap_or(FitnessName::StDistance).into()
    }
}

/// A manifest whose every referenced file exists and parses.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub manifest: Manifest,
    pub cases: Vec<PreparedCase>,
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Manifest, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Manifest(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Experiment, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Manifest::parse(&text)?.prepare(base)
    }

    /// Checks the grid and loads every case relative to `base`.
    pub fn prepare(self, base: &Path) -> Result<Experiment, HarnessError> {
        let bad = |m: String| Err(HarnessError::Manifest(m));
        if self.configs.is_empty() || self.cases.is_empty() {
            return bad("a manifest needs at least one config and one case".into());
        }
        let mut ids = BTreeSet::new();
        for c in &self.configs {
            if !ids.insert(&c.id) {
                return bad(format!("duplicate config id `{}`", c.id));
            }
            if let Some(r) = c.bbc_usage_rate {
                if !(0.0..=1.0).contains(&r) {
                    return bad(format!("config `{}`: usage rate {r} is outside [0, 1]", c.id));
                }
            }
        }
        let mut ids = BTreeSet::new();
        let mut cases = Vec::new();
        for case in &self.cases {
            if !ids.insert(&case.id) {
                return bad(format!("duplicate case id `{}`", case.id));
            }
            cases.push(prepare_case(case, base)?);
        }
        let experiment = Experiment { manifest: self, cases };
        for case in &experiment.cases {
            for config in &experiment.manifest.configs {
                experiment
                    .search_config(case, config, 0)
                    .validate()
                    .map_err(|e| HarnessError::Manifest(format!("case `{}`: {e}", case.case.id)))?;
            }
        }
        Ok(experiment)
    }
}

fn prepare_case(case: &BenchmarkCase, base: &Path) -> Result<PreparedCase, HarnessError> {
    let program = base.join(&case.program);
    let source = std::fs::read_to_string(&program).map_err(|e| HarnessError::io(&program, e))?;
    // traces name the file, not the path it was loaded from
    let name = program.file_name().and_then(|n| n.to_str()).unwrap_or("program.mini");
    let subject = Subject::parse(name, &source).map_err(|e| HarnessError::Program {
        case: case.id.clone(),
        message: e.to_string(),
    })?;
    let crash = match case.mode {
        Mode::Unit => {
            if case.trace.is_some() || case.target_frame.is_some() || case.fitness.is_some() {
                return Err(HarnessError::Manifest(format!(
                    "unit case `{}` must not name a trace, target frame, or fitness",
                    case.id
                )));
            }
            None
        }
        Mode::Crash => {
            let (Some(trace), Some(frame)) = (&case.trace, case.target_frame) else {
                return Err(HarnessError::Manifest(format!(
                    "crash case `{}` needs `trace` and `target_frame`",
                    case.id
                )));
            };
            let path = base.join(trace);
            let text = std::fs::read_to_string(&path).map_err(|e| HarnessError::io(&path, e))?;
            let parsed = parse_stack_trace(&text).map_err(|e| HarnessError::Program {
                case: case.id.clone(),
                message: e.to_string(),
            })?;
            let target = CrashTarget::new(&subject, &parsed, frame).map_err(|e| HarnessError::Program {
                case: case.id.clone(),
                message: e.to_string(),
            })?;
            if !subject.program.entry_names.contains(target.target_function()) {
                return Err(HarnessError::Program {
                    case: case.id.clone(),
                    message: format!("target function `{}` is private", target.target_function()),
                });
            }
            Some(target)
        }
    };
    Ok(PreparedCase {
        case: case.clone(),
        subject,
        crash,
    })
}

impl Experiment {
    pub fn config(&self, id: &str) -> Option<&ConfigSpec> {
        self.manifest.configs.iter().find(|c| c.id == id)
    }

    pub fn case(&self, id: &str) -> Option<&PreparedCase> {
        self.cases.iter().find(|c| c.case.id == id)
    }

    pub fn search_config(&self, case: &PreparedCase, config: &ConfigSpec, seed: u64) -> SearchConfig {
        let s = &self.manifest.search;
        SearchConfig {
            population_size: s.population_size,
            budget: Budget::Evaluations(case.case.budget.unwrap_or(s.budget)),
            mutation_rate: s.mutation_rate,
            crossover_rate: s.crossover_rate,
            bbc: config.bbc_usage_rate.map(|usage_rate| GateConfig {
                usage_rate,
                sleep: Sleep::Evaluations(config.bbc_sleep),
            }),
            seed,
            max_test_length: s.max_test_length,
            step_limit: s.step_limit,
            timeline_interval: s.timeline_interval,
        }
    }
}
