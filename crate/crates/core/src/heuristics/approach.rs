use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::branch_distance::alpha;
use crate::cfg::{BlockId, Cfg, ControlDependency, Side};
use crate::minilang::FunctionCoverage;

/// Raw distance when the frontier predicate took the desired side but the
/// block it guards was still not reached (an exception intervened).
pub const RESIDUAL: f64 = 0.5;

/// Raw distance when the frontier block was entered but its predicate was
/// never evaluated.
pub const UNEVALUATED: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Approach {
    pub level: u32,
    /// The closest entered control dependency and the side that leads on.
    pub frontier: Option<(BlockId, Side)>,
}

/// Raw branch distance for making `side` of `block`'s predicate happen.
pub fn frontier_raw(cfg: &Cfg, cov: &FunctionCoverage, (block, side): (BlockId, Side)) -> f64 {
    let line = cfg.block(block).last_line();
    match cov.distance(line, side) {
        Some(0.0) => RESIDUAL,
        Some(d) => d,
        None => UNEVALUATED,
    }
}

/// Counts the uncovered control-dependent blocks between the target and the
/// closest entered control dependency.
///
/// `cov` is `None` when the function was never entered; the level is then
/// one more than the longest dependency chain above the target.
pub fn approach_level(
    cfg: &Cfg,
    cd: &ControlDependency,
    cov: Option<&FunctionCoverage>,
    target: BlockId,
) -> Approach {
    let Some(cov) = cov else {
        return Approach {
            level: longest_chain(cd, target) + 1,
            frontier: None,
        };
    };
    if cov.entered_block(target) {
        return Approach {
            level: 0,
            frontier: None,
        };
    }

    let mut seen = vec![false; cfg.len()];
    seen[target.index()] = true;
    let mut queue = VecDeque::from([(target, 0u32)]);
    let mut deepest = 0;
    let mut best: Option<(u32, f64, (BlockId, Side))> = None;
    while let Some((block, depth)) = queue.pop_front() {
        if best.is_some_and(|(d, _, _)| depth > d) {
            break;
        }
        deepest = deepest.max(depth);
        for &(c, side) in cd.of(block) {
            if cov.entered_block(c) {
                let norm = alpha(frontier_raw(cfg, cov, (c, side)));
                let better = match best {
                    None => true,
                    Some((_, bn, bf)) => norm < bn || (norm == bn && (c, side) < bf),
                };
                if better {
                    best = Some((depth, norm, (c, side)));
                }
            } else if !seen[c.index()] {
                seen[c.index()] = true;
                queue.push_back((c, depth + 1));
            }
        }
    }
    match best {
        Some((level, _, frontier)) => Approach {
            level,
            frontier: Some(frontier),
        },
        None => Approach {
            level: deepest,
            frontier: None,
        },
    }
}

/// Length in edges of the longest simple chain of control dependencies
/// leading up from `target`.
pub fn longest_chain(cd: &ControlDependency, target: BlockId) -> u32 {
    fn walk(cd: &ControlDependency, b: BlockId, on_path: &mut Vec<bool>) -> u32 {
        on_path[b.index()] = true;
        let mut best = 0;
        for &(c, _) in cd.of(b) {
            if !on_path[c.index()] {
                best = best.max(1 + walk(cd, c, on_path));
            }
        }
        on_path[b.index()] = false;
        best
    }
    let mut on_path = vec![false; cd.len()];
    walk(cd, target, &mut on_path)
}
