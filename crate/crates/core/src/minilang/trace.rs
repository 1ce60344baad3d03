use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::interp::RawTrace;
use super::stacktrace::RuntimeError;
use crate::analysis::Subject;
use crate::cfg::{BlockId, EdgeLabel, Side};

/// Coverage of one function during one run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FunctionCoverage {
    pub covered_lines: BTreeSet<u32>,
    /// Blocks whose every line was executed.
    pub covered_blocks_full: BTreeSet<BlockId>,
    /// Blocks whose first line was executed but whose last line was not.
    pub covered_blocks_semi: BTreeSet<BlockId>,
    /// Minimum branch distance per (predicate line, side); absent when the
    /// predicate was never evaluated.
    #[serde(with = "predicate_map")]
    pub predicate_distances: BTreeMap<(u32, Side), f64>,
    pub taken_edges: BTreeSet<(BlockId, BlockId)>,
}

impl FunctionCoverage {
    pub fn entered_block(&self, block: BlockId) -> bool {
        self.covered_blocks_full.contains(&block) || self.covered_blocks_semi.contains(&block)
    }

    pub fn distance(&self, line: u32, side: Side) -> Option<f64> {
        self.predicate_distances.get(&(line, side)).copied()
    }
}

/// Everything the heuristics need to know about one test execution.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExecutionTrace {
    /// Keyed by function name; a function appears iff it was entered.
    pub functions: BTreeMap<String, FunctionCoverage>,
    pub error: Option<RuntimeError>,
    pub steps_executed: u64,
}

impl ExecutionTrace {
    pub fn function(&self, name: &str) -> Option<&FunctionCoverage> {
        self.functions.get(name)
    }

    pub fn entered(&self, name: &str) -> bool {
        self.functions.contains_key(name)
    }

    pub fn covers_line(&self, function: &str, line: u32) -> bool {
        self.functions
            .get(function)
            .is_some_and(|c| c.covered_lines.contains(&line))
    }

    /// Maps raw interpreter output onto the subject's basic blocks.
    pub fn assemble(raw: RawTrace, subject: &Subject) -> ExecutionTrace {
        let mut functions = BTreeMap::new();
        for (index, cov) in raw.functions.into_iter().enumerate() {
            let Some(cov) = cov else { continue };
            let cfg = &subject.cfgs[index];
            let mut fc = FunctionCoverage {
                covered_lines: cov.lines,
                predicate_distances: cov.predicates,
                ..Default::default()
            };
            for (from, to, _) in cfg.successors(cfg.entry()) {
                fc.taken_edges.insert((from, to));
            }
            for block in cfg.statement_blocks() {
                let first = block.first_line();
                let last = block.last_line();
                if block.lines.iter().all(|l| fc.covered_lines.contains(l)) {
                    fc.covered_blocks_full.insert(block.id);
                } else if fc.covered_lines.contains(&first) {
                    fc.covered_blocks_semi.insert(block.id);
                }
                for (from, to, label) in cfg.successors(block.id) {
                    let taken = match label {
                        EdgeLabel::True => fc.distance(last, Side::True) == Some(0.0),
                        EdgeLabel::False => fc.distance(last, Side::False) == Some(0.0),
                        EdgeLabel::Unconditional => cov.completed.contains(&last),
                    };
                    if taken {
                        fc.taken_edges.insert((from, to));
                    }
                }
            }
            functions.insert(subject.program.functions[index].name.clone(), fc);
        }
        ExecutionTrace {
            functions,
            error: raw.error,
            steps_executed: raw.steps,
        }
    }
}

mod predicate_map {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::cfg::Side;

    #[derive(Serialize, Deserialize)]
    struct Entry {
        line: u32,
        side: Side,
        distance: f64,
    }

    pub fn serialize<S: Serializer>(
        map: &BTreeMap<(u32, Side), f64>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        let entries: Vec<Entry> = map
            .iter()
            .map(|(&(line, side), &distance)| Entry {
                line,
                side,
                distance,
            })
            .collect();
        entries.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<BTreeMap<(u32, Side), f64>, D::Error> {
        let entries = Vec::<Entry>::deserialize(d)?;
        Ok(entries
            .into_iter()
            .map(|e| ((e.line, e.side), e.distance))
            .collect())
    }
}
