//! Basic-block coverage: a tie-breaker that prefers the test which got
//! further inside the blocks between the last shared control dependency and
//! the target, exposing progress that exceptions hide from branch distance.

mod compute;
mod counters;
mod gate;

pub use compute::{common_start, compare_blocks, compute_bbc, effective_blocks, BbcInput, BbcOutcome, BlockCoverage, Scenario};
pub use counters::{counters_report, BbcCounters, CounterTable, CountersSummary, MeanSd};
pub use gate::{ActiveAge, BbcGate, GateConfig, Sleep};
