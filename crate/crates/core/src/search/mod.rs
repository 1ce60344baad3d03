//! Evolutionary engines: many-objective unit-test generation and
//! single-objective crash reproduction, both with a pluggable tie-breaker.

pub mod archive;
pub mod config;
pub mod crash_ga;
pub mod dynamosa;
pub mod operators;
pub mod pool;
pub mod secondary;
pub mod sort;
pub mod testcase;

pub use archive::Archive;
pub use crash_ga::{run_crash_ga, CrashFitness, CrashResult, FitnessSample};
pub use config::{Budget, SearchConfig};
pub use dynamosa::{run_dynamosa, CoverageSample, DynaMosa, ObjectiveState, ObjectiveStatus, UnitResult};
pub use secondary::{GatedBbc, NoSecondary, SecondaryObjective, TieContext};
pub use testcase::{Arg, TestCase, TestStmt};
