//! Fitness functions: branch distance, approach level, coverage objectives,
//! and the two crash-reproduction fitness functions.

pub mod approach;
pub mod branch_distance;
pub mod crash;
pub mod objective;

pub use approach::{approach_level, longest_chain, Approach, RESIDUAL, UNEVALUATED};
pub use branch_distance::{alpha, branch_distance};
pub use crash::{frame_lcp, st_distance, weighted_sum, CrashTarget, CrashTargetError};
pub use objective::{all_objectives, line_fitness, objective_fitness, FitnessValue, ObjectiveId};
