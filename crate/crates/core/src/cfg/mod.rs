//! Per-function control-flow graphs over basic blocks.
//!
//! Block `0` is the virtual entry and the highest id is the virtual exit;
//! neither carries statement lines. Statement blocks are numbered in order
//! of their first line.

mod build;
mod dominance;
mod paths;
mod random;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use build::build_cfg;
pub use dominance::{control_dependencies, post_dominators, ControlDependency, PostDominators};
pub use paths::shortest_block_distance;
pub use random::random_cfg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BlockId(pub u32);

impl BlockId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for BlockId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "B{}", self.0)
    }
}

/// Outcome of a predicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    True,
    False,
}

impl Side {
    pub fn label(self) -> EdgeLabel {
        match self {
            Side::True => EdgeLabel::True,
            Side::False => EdgeLabel::False,
        }
    }

    pub fn other(self) -> Side {
        match self {
            Side::True => Side::False,
            Side::False => Side::True,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::True => "true",
            Side::False => "false",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeLabel {
    True,
    False,
    Unconditional,
}

impl EdgeLabel {
    pub fn side(self) -> Option<Side> {
        match self {
            EdgeLabel::True => Some(Side::True),
            EdgeLabel::False => Some(Side::False),
            EdgeLabel::Unconditional => None,
        }
    }
}

impl fmt::Display for EdgeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EdgeLabel::True => "true",
            EdgeLabel::False => "false",
            EdgeLabel::Unconditional => "unconditional",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasicBlock {
    pub id: BlockId,
    pub function_name: String,
    /// Sorted statement lines; empty only for the virtual entry and exit.
    pub lines: Vec<u32>,
    pub is_entry: bool,
    pub is_exit: bool,
}

impl BasicBlock {
    pub fn first_line(&self) -> u32 {
        self.lines[0]
    }

    pub fn last_line(&self) -> u32 {
        *self.lines.last().expect("statement block has lines")
    }

    pub fn is_virtual(&self) -> bool {
        self.is_entry || self.is_exit
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Edge {
    pub from: BlockId,
    pub to: BlockId,
    pub label: EdgeLabel,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CfgError {
    #[error("edge endpoint {0} is out of range")]
    BadEndpoint(usize),
    #[error("block {0} is not reachable from entry")]
    Unreachable(BlockId),
    #[error("exit is not reachable from block {0}")]
    NoExit(BlockId),
    #[error("block {0} has an invalid set of outgoing edges")]
    BadFanOut(BlockId),
    #[error("line {0} appears in more than one block")]
    SharedLine(u32),
}

/// A control-flow graph; immutable once built.
#[derive(Debug, Clone)]
pub struct Cfg {
    function_name: String,
    blocks: Vec<BasicBlock>,
    edges: Vec<Edge>,
    succ: Vec<Vec<(BlockId, EdgeLabel)>>,
    pred: Vec<Vec<BlockId>>,
    line_block: BTreeMap<u32, BlockId>,
    /// `reach[a][b]`: some directed path leads from `a` to `b` (reflexive).
    reach: Vec<Vec<bool>>,
}

impl Cfg {
    /// Assembles a graph from statement blocks (ids `1..=n`) and edges over
    /// ids `0..=n+1`, where `0` is entry and `n+1` is exit.
    pub fn from_parts(
        function_name: &str,
        statement_blocks: Vec<Vec<u32>>,
        edges: Vec<(usize, usize, EdgeLabel)>,
    ) -> Result<Cfg, CfgError> {
        let n = statement_blocks.len() + 2;
        let exit = n - 1;
        let mut blocks = Vec::with_capacity(n);
        blocks.push(BasicBlock {
            id: BlockId(0),
            function_name: function_name.to_string(),
            lines: Vec::new(),
            is_entry: true,
            is_exit: false,
        });
        let mut line_block = BTreeMap::new();
        for (i, mut lines) in statement_blocks.into_iter().enumerate() {
            lines.sort_unstable();
            let id = BlockId(i as u32 + 1);
            for &l in &lines {
                if line_block.insert(l, id).is_some() {
                    return Err(CfgError::SharedLine(l));
                }
            }
            blocks.push(BasicBlock {
                id,
                function_name: function_name.to_string(),
                lines,
                is_entry: false,
                is_exit: false,
            });
        }
        blocks.push(BasicBlock {
            id: BlockId(exit as u32),
            function_name: function_name.to_string(),
            lines: Vec::new(),
            is_entry: false,
            is_exit: true,
        });

        let mut edge_list = Vec::with_capacity(edges.len());
        for (from, to, label) in edges {
            if from >= n {
                return Err(CfgError::BadEndpoint(from));
            }
            if to >= n {
                return Err(CfgError::BadEndpoint(to));
            }
            edge_list.push(Edge {
                from: BlockId(from as u32),
                to: BlockId(to as u32),
                label,
            });
        }
        edge_list.sort();
        edge_list.dedup();

        let mut succ = vec![Vec::new(); n];
        let mut pred = vec![Vec::new(); n];
        for e in &edge_list {
            succ[e.from.index()].push((e.to, e.label));
            pred[e.to.index()].push(e.from);
        }
        for p in &mut pred {
            p.sort();
            p.dedup();
        }
        for (i, out) in succ.iter().enumerate() {
            let mut labels: Vec<EdgeLabel> = out.iter().map(|(_, l)| *l).collect();
            labels.sort();
            let ok = if i == exit {
                labels.is_empty()
            } else {
                labels == [EdgeLabel::Unconditional] || labels == [EdgeLabel::True, EdgeLabel::False]
            };
            if !ok {
                return Err(CfgError::BadFanOut(BlockId(i as u32)));
            }
        }

        let reach: Vec<Vec<bool>> = (0..n).map(|s| reachable_from(&succ, s)).collect();
        for i in 0..n {
            if !reach[0][i] {
                return Err(CfgError::Unreachable(BlockId(i as u32)));
            }
            if !reach[i][exit] {
                return Err(CfgError::NoExit(BlockId(i as u32)));
            }
        }

        Ok(Cfg {
            function_name: function_name.to_string(),
            blocks,
            edges: edge_list,
            succ,
            pred,
            line_block,
            reach,
        })
    }

    pub fn function_name(&self) -> &str {
        &self.function_name
    }

    pub fn entry(&self) -> BlockId {
        BlockId(0)
    }

    pub fn exit(&self) -> BlockId {
        BlockId(self.blocks.len() as u32 - 1)
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn blocks(&self) -> &[BasicBlock] {
        &self.blocks
    }

    pub fn block(&self, id: BlockId) -> &BasicBlock {
        &self.blocks[id.index()]
    }

    /// Blocks carrying statements, in first-line order.
    pub fn statement_blocks(&self) -> impl Iterator<Item = &BasicBlock> {
        self.blocks.iter().filter(|b| !b.is_virtual())
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn successors(&self, id: BlockId) -> impl Iterator<Item = (BlockId, BlockId, EdgeLabel)> + '_ {
        self.succ[id.index()].iter().map(move |&(to, l)| (id, to, l))
    }

    pub fn successor(&self, id: BlockId, label: EdgeLabel) -> Option<BlockId> {
        self.succ[id.index()]
            .iter()
            .find(|(_, l)| *l == label)
            .map(|(to, _)| *to)
    }

    pub fn predecessors(&self, id: BlockId) -> &[BlockId] {
        &self.pred[id.index()]
    }

    /// True when the block ends in a predicate (has labelled out-edges).
    pub fn is_branching(&self, id: BlockId) -> bool {
        self.succ[id.index()]
            .iter()
            .any(|(_, l)| *l != EdgeLabel::Unconditional)
    }

    pub fn block_of_line(&self, line: u32) -> Option<BlockId> {
        self.line_block.get(&line).copied()
    }

    pub fn reaches(&self, from: BlockId, to: BlockId) -> bool {
        self.reach[from.index()][to.index()]
    }

    /// One statement block and no predicates.
    pub fn is_branchless(&self) -> bool {
        self.statement_blocks().count() == 1
    }

    /// One line per edge, `B1(3,4) -true-> B2(5)`, sources in first-line order.
    pub fn dump(&self) -> String {
        let describe = |id: BlockId| {
            let b = self.block(id);
            if b.is_entry {
                format!("{id}(entry)")
            } else if b.is_exit {
                format!("{id}(exit)")
            } else {
                let lines: Vec<String> = b.lines.iter().map(|l| l.to_string()).collect();
                format!("{id}({})", lines.join(","))
            }
        };
        let mut out = String::new();
        for e in &self.edges {
            out.push_str(&format!("{} -{}-> {}\n", describe(e.from), e.label, describe(e.to)));
        }
        out
    }
}

fn reachable_from(succ: &[Vec<(BlockId, EdgeLabel)>], start: usize) -> Vec<bool> {
    let mut seen = vec![false; succ.len()];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(n) = stack.pop() {
        for (to, _) in &succ[n] {
            if !seen[to.index()] {
                seen[to.index()] = true;
                stack.push(to.index());
            }
        }
    }
    seen
}
