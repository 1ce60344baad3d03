use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::approach::{approach_level, frontier_raw, Approach, RESIDUAL};
use super::branch_distance::alpha;
use crate::analysis::Subject;
use crate::cfg::{BlockId, Side};
use crate::minilang::ExecutionTrace;

/// A coverage goal: execute a line, or make a predicate take one side.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObjectiveId {
    Line { function: String, line: u32 },
    Branch { function: String, block: BlockId, side: Side },
}

impl ObjectiveId {
    pub fn function(&self) -> &str {
        match self {
            ObjectiveId::Line { function, .. } | ObjectiveId::Branch { function, .. } => function,
        }
    }

    pub fn is_branch(&self) -> bool {
        matches!(self, ObjectiveId::Branch { .. })
    }

    /// The block and line BBC compares progress towards.
    pub fn target(&self, subject: &Subject) -> (BlockId, u32) {
        let cfg = subject.cfg(self.function()).expect("objective refers to a known function");
        match self {
            ObjectiveId::Line { line, .. } => {
                (cfg.block_of_line(*line).expect("objective line is a statement"), *line)
            }
            ObjectiveId::Branch { block, .. } => (*block, cfg.block(*block).last_line()),
        }
    }
}

impl fmt::Display for ObjectiveId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObjectiveId::Line { function, line } => write!(f, "line {function}:{line}"),
            ObjectiveId::Branch {
                function,
                block,
                side,
            } => write!(f, "branch {function}:{block}:{side}"),
        }
    }
}

/// Approach level plus normalized branch distance; ordered lexicographically.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitnessValue {
    pub approach_level: u32,
    pub branch_distance_norm: f64,
}

impl FitnessValue {
    pub const ZERO: FitnessValue = FitnessValue {
        approach_level: 0,
        branch_distance_norm: 0.0,
    };

    pub fn new(approach_level: u32, raw_distance: f64) -> Self {
        FitnessValue {
            approach_level,
            branch_distance_norm: alpha(raw_distance),
        }
    }

    pub fn scalar(&self) -> f64 {
        self.approach_level as f64 + self.branch_distance_norm
    }

    pub fn is_zero(&self) -> bool {
        self.approach_level == 0 && self.branch_distance_norm == 0.0
    }
}

impl Eq for FitnessValue {}

impl PartialOrd for FitnessValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for FitnessValue {
    fn cmp(&self, other: &Self) -> Ordering {
        self.approach_level
            .cmp(&other.approach_level)
            .then(self.branch_distance_norm.total_cmp(&other.branch_distance_norm))
    }
}

/// Fitness of a line target: approach level of its block, plus the distance
/// at the frontier.
pub fn line_fitness(subject: &Subject, function: &str, line: u32, trace: &ExecutionTrace) -> FitnessValue {
    let idx = subject.index_of(function).expect("known function");
    let cfg = &subject.cfgs[idx];
    let cov = trace.function(function);
    if cov.is_some_and(|c| c.covered_lines.contains(&line)) {
        return FitnessValue::ZERO;
    }
    let block = cfg.block_of_line(line).expect("line is a statement");
    if cov.is_some_and(|c| c.entered_block(block)) {
        return FitnessValue::new(0, RESIDUAL);
    }
    let a = approach_level(cfg, &subject.cds[idx], cov, block);
    FitnessValue::new(a.level, raw_at(subject, idx, cov, &a))
}

fn raw_at(
    subject: &Subject,
    idx: usize,
    cov: Option<&crate::minilang::FunctionCoverage>,
    a: &Approach,
) -> f64 {
    match (cov, a.frontier) {
        (Some(cov), Some(f)) => frontier_raw(&subject.cfgs[idx], cov, f),
        (Some(_), None) => RESIDUAL,
        (None, _) => 0.0,
    }
}

pub fn objective_fitness(subject: &Subject, objective: &ObjectiveId, trace: &ExecutionTrace) -> FitnessValue {
    match objective {
        ObjectiveId::Line { function, line } => line_fitness(subject, function, *line, trace),
        ObjectiveId::Branch {
            function,
            block,
            side,
        } => {
            let idx = subject.index_of(function).expect("known function");
            let cfg = &subject.cfgs[idx];
            let cov = trace.function(function);
            let line = cfg.block(*block).last_line();
            if let Some(cov) = cov {
                if cov.distance(line, *side) == Some(0.0) {
                    return FitnessValue::ZERO;
                }
                if cov.entered_block(*block) {
                    return FitnessValue::new(0, frontier_raw(cfg, cov, (*block, *side)));
                }
            }
            let a = approach_level(cfg, &subject.cds[idx], cov, *block);
            FitnessValue::new(a.level + 1, raw_at(subject, idx, cov, &a))
        }
    }
}

/// Every line and every predicate side of every function.
pub fn all_objectives(subject: &Subject) -> Vec<ObjectiveId> {
    let mut out = Vec::new();
    for (f, cfg) in subject.program.functions.iter().zip(&subject.cfgs) {
        for line in f.statement_lines() {
            out.push(ObjectiveId::Line {
                function: f.name.clone(),
                line,
            });
        }
        for b in cfg.statement_blocks() {
            if cfg.is_branching(b.id) {
                for side in [Side::True, Side::False] {
                    out.push(ObjectiveId::Branch {
                        function: f.name.clone(),
                        block: b.id,
                        side,
                    });
                }
            }
        }
    }
    out.sort();
    out
}
