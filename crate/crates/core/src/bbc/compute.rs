use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::analysis::Subject;
use crate::cfg::{shortest_block_distance, BlockId, Cfg, ControlDependency};
use crate::minilang::{ExecutionTrace, FunctionCoverage};

/// Two executions to compare and the statement both are trying to reach.
#[derive(Debug, Clone, Copy)]
pub struct BbcInput<'a> {
    pub trace1: &'a ExecutionTrace,
    pub trace2: &'a ExecutionTrace,
    pub method: &'a str,
    pub line: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Same semi-covered blocks, nested fully covered blocks.
    SameBlock,
    /// One test's progress is contained in the other's fully covered blocks.
    Subsumed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BbcOutcome {
    /// Negative prefers the first test, positive the second, 0 is a tie.
    pub value: i64,
    /// `None` when the tests took divergent paths.
    pub scenario: Option<Scenario>,
    pub dijkstra_queries: usize,
}

impl BbcOutcome {
    pub fn tie() -> Self {
        BbcOutcome {
            value: 0,
            scenario: None,
            dijkstra_queries: 0,
        }
    }
}

/// Fully and semi-covered blocks of one test, restricted to the effective
/// blocks.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BlockCoverage {
    pub full: BTreeSet<BlockId>,
    pub semi: BTreeSet<BlockId>,
}

pub fn compute_bbc(subject: &Subject, input: &BbcInput<'_>) -> BbcOutcome {
    let Some(idx) = subject.index_of(input.method) else {
        return BbcOutcome::tie();
    };
    let cfg = &subject.cfgs[idx];
    let Some(target) = cfg.block_of_line(input.line) else {
        return BbcOutcome::tie();
    };
    compare_blocks(
        cfg,
        &subject.cds[idx],
        input.trace1.function(input.method),
        input.trace2.function(input.method),
        target,
    )
}

/// The comparison on a single function's coverage.
pub fn compare_blocks(
    cfg: &Cfg,
    cd: &ControlDependency,
    cov1: Option<&FunctionCoverage>,
    cov2: Option<&FunctionCoverage>,
    target: BlockId,
) -> BbcOutcome {
    let empty = FunctionCoverage::default();
    let cov1 = cov1.unwrap_or(&empty);
    let cov2 = cov2.unwrap_or(&empty);
    let start = common_start(cfg, cd, cov1, cov2, target);
    let effective = effective_blocks(cfg, start, target);
    let b1 = restrict(cov1, &effective);
    let b2 = restrict(cov2, &effective);

    if b1.semi == b2.semi && (b1.full.is_subset(&b2.full) || b2.full.is_subset(&b1.full)) {
        let mut queries = 0;
        let mut closest: Option<(u32, BlockId)> = None;
        for &b in &b1.semi {
            queries += 1;
            let d = shortest_block_distance(cfg, b, target).unwrap_or(u32::MAX);
            if closest.is_none_or(|c| (d, b) < c) {
                closest = Some((d, b));
            }
        }
        let value = match closest {
            Some((_, b)) => {
                let lines = &cfg.block(b).lines;
                let count = |c: &FunctionCoverage| lines.iter().filter(|l| c.covered_lines.contains(l)).count() as i64;
                count(cov2) - count(cov1)
            }
            None => 0,
        };
        return BbcOutcome {
            value,
            scenario: Some(Scenario::SameBlock),
            dijkstra_queries: queries,
        };
    }

    let two_wins = b1.full.is_subset(&b2.full) && b1.semi.is_subset(&b2.full);
    let one_wins = b2.full.is_subset(&b1.full) && b2.semi.is_subset(&b1.full);
    if two_wins || one_wins {
        return BbcOutcome {
            value: b2.full.len() as i64 - b1.full.len() as i64,
            scenario: Some(Scenario::Subsumed),
            dijkstra_queries: 0,
        };
    }
    BbcOutcome::tie()
}

/// The closest control-dependency ancestor of `target` entered by both
/// tests, or the CFG entry when they share none.
pub fn common_start(
    cfg: &Cfg,
    cd: &ControlDependency,
    cov1: &FunctionCoverage,
    cov2: &FunctionCoverage,
    target: BlockId,
) -> BlockId {
    let both = |b: BlockId| cov1.entered_block(b) && cov2.entered_block(b);
    let mut seen = vec![false; cfg.len()];
    seen[target.index()] = true;
    let mut frontier = vec![target];
    while !frontier.is_empty() {
        let mut found: Option<BlockId> = None;
        let mut next = Vec::new();
        for &b in &frontier {
            for &(c, _) in cd.of(b) {
                if both(c) {
                    found = Some(found.map_or(c, |f| f.min(c)));
                } else if !seen[c.index()] {
                    seen[c.index()] = true;
                    next.push(c);
                }
            }
        }
        if let Some(s) = found {
            return s;
        }
        frontier = next;
    }
    cfg.entry()
}

/// Statement blocks on some path from `start` to `target`, both inclusive.
pub fn effective_blocks(cfg: &Cfg, start: BlockId, target: BlockId) -> BTreeSet<BlockId> {
    cfg.statement_blocks()
        .map(|b| b.id)
        .filter(|&b| cfg.reaches(start, b) && cfg.reaches(b, target))
        .collect()
}

fn restrict(cov: &FunctionCoverage, effective: &BTreeSet<BlockId>) -> BlockCoverage {
    BlockCoverage {
        full: cov.covered_blocks_full.intersection(effective).copied().collect(),
        semi: cov.covered_blocks_semi.intersection(effective).copied().collect(),
    }
}
