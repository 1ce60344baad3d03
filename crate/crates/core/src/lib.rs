//! Search-based test generation for a small imperative language.
//!
//! The pipeline: [`minilang`] parses and executes programs while recording
//! coverage, [`cfg`] derives per-function control-flow graphs, [`heuristics`]
//! turns traces into fitness values, [`bbc`] compares tests that tie on
//! fitness by how far they got inside basic blocks, [`search`] runs the
//! evolutionary engines, and [`harness`] drives repeated experiments.

pub mod analysis;
pub mod bbc;
pub mod cfg;
pub mod harness;
pub mod heuristics;
pub mod minilang;
pub mod search;

pub use analysis::Subject;
