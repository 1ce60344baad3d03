use std::mem;

use super::{Cfg, EdgeLabel};
use crate::minilang::{Function, Stmt, StmtKind};

const ENTRY: usize = 0;
const EXIT: usize = usize::MAX;

struct Builder {
    /// Index 0 is the entry placeholder.
    blocks: Vec<Vec<u32>>,
    edges: Vec<(usize, usize, EdgeLabel)>,
    current: Option<usize>,
    /// Dangling out-edges that will point at the next block started.
    pending: Vec<(usize, EdgeLabel)>,
}

impl Builder {
    fn start_block(&mut self) -> usize {
        let id = self.blocks.len();
        self.blocks.push(Vec::new());
        for (from, label) in self.pending.drain(..) {
            self.edges.push((from, id, label));
        }
        id
    }

    fn add_line(&mut self, line: u32) -> usize {
        let id = match self.current {
            Some(id) => id,
            None => {
                let id = self.start_block();
                self.current = Some(id);
                id
            }
        };
        self.blocks[id].push(line);
        id
    }

    fn take_exits(&mut self) -> Vec<(usize, EdgeLabel)> {
        match self.current.take() {
            Some(b) => vec![(b, EdgeLabel::Unconditional)],
            None => mem::take(&mut self.pending),
        }
    }

    fn lower(&mut self, body: &[Stmt]) {
        for stmt in body {
            match &stmt.kind {
                StmtKind::Let { .. } | StmtKind::Assign { .. } | StmtKind::Call(_) => {
                    self.add_line(stmt.line);
                }
                StmtKind::Return(_) | StmtKind::Throw(_) => {
                    let b = self.add_line(stmt.line);
                    self.edges.push((b, EXIT, EdgeLabel::Unconditional));
                    self.current = None;
                }
                StmtKind::If {
                    then_body,
                    else_body,
                    ..
                } => {
                    let p = self.add_line(stmt.line);
                    self.current = None;
                    self.pending = vec![(p, EdgeLabel::True)];
                    self.lower(then_body);
                    let mut after = self.take_exits();
                    self.pending = vec![(p, EdgeLabel::False)];
                    self.lower(else_body);
                    after.extend(self.take_exits());
                    self.pending = after;
                }
                StmtKind::While { body, .. } => {
                    if let Some(b) = self.current.take() {
                        self.pending = vec![(b, EdgeLabel::Unconditional)];
                    }
                    let header = self.start_block();
                    self.blocks[header].push(stmt.line);
                    self.pending = vec![(header, EdgeLabel::True)];
                    self.lower(body);
                    for (from, label) in self.take_exits() {
                        self.edges.push((from, header, label));
                    }
                    self.pending = vec![(header, EdgeLabel::False)];
                }
            }
        }
    }
}

/// Builds the CFG of one function: blocks partition the statement lines,
/// `if` and `while` end their block with a true/false edge pair, loops get a
/// back edge, and `return`/`throw` edge to exit.
pub fn build_cfg(function: &Function) -> Cfg {
    let mut b = Builder {
        blocks: vec![Vec::new()],
        edges: Vec::new(),
        current: None,
        pending: vec![(ENTRY, EdgeLabel::Unconditional)],
    };
    b.lower(&function.body);
    for (from, label) in b.take_exits() {
        b.edges.push((from, EXIT, label));
    }

    // renumber statement blocks by first line: entry 0, blocks 1..=n, exit n+1
    let mut order: Vec<usize> = (1..b.blocks.len()).collect();
    order.sort_by_key(|&i| b.blocks[i][0]);
    let n = order.len();
    let mut remap = vec![0usize; b.blocks.len()];
    for (new, &old) in order.iter().enumerate() {
        remap[old] = new + 1;
    }
    let map = |i: usize| if i == EXIT { n + 1 } else { remap[i] };
    let edges = b
        .edges
        .iter()
        .map(|&(from, to, label)| (map(from), map(to), label))
        .collect();
    let blocks = order.iter().map(|&i| b.blocks[i].clone()).collect();
    Cfg::from_parts(&function.name, blocks, edges)
        .expect("parser guarantees a well-formed function body")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfg::BlockId;
    use crate::minilang::parse;

    fn cfg_of(src: &str) -> Cfg {
        let p = parse("t.mini", src).unwrap();
        build_cfg(&p.functions[0])
    }

    #[test]
    fn straight_line_function_is_one_block() {
        let cfg = cfg_of("fn f(a:int) {\n let b = a;\n let c = b;\n return c;\n}");
        assert_eq!(cfg.len(), 3);
        assert_eq!(cfg.edges().len(), 2);
        assert!(cfg.is_branchless());
        assert_eq!(cfg.block(BlockId(1)).lines, vec![2, 3, 4]);
    }

    #[test]
    fn if_else_is_a_diamond() {
        let cfg = cfg_of(
            "fn f(a:int, b:int) {\n if (a < b) {\n  let x = 1;\n } else {\n  let y = 2;\n }\n return 0;\n}",
        );
        assert_eq!(cfg.statement_blocks().count(), 4);
        assert_eq!(
            cfg.dump(),
            "B0(entry) -unconditional-> B1(2)\n\
             B1(2) -true-> B2(3)\n\
             B1(2) -false-> B3(5)\n\
             B2(3) -unconditional-> B4(7)\n\
             B3(5) -unconditional-> B4(7)\n\
             B4(7) -unconditional-> B5(exit)\n"
        );
    }

    #[test]
    fn while_has_back_edge() {
        let cfg = cfg_of("fn f(n:int) {\n let i = 0;\n while (i < n) {\n  i = i + 1;\n }\n return i;\n}");
        let header = cfg.block_of_line(3).unwrap();
        let body = cfg.block_of_line(4).unwrap();
        assert_eq!(cfg.successor(body, EdgeLabel::Unconditional), Some(header));
        assert_eq!(cfg.successor(header, EdgeLabel::True), Some(body));
        assert_eq!(cfg.block(header).lines, vec![3]);
    }

    #[test]
    fn throw_edges_to_exit() {
        let cfg = cfg_of("fn f(a:int) {\n if (a == 0) {\n  throw Bad;\n }\n return a;\n}");
        let t = cfg.block_of_line(3).unwrap();
        assert_eq!(cfg.successor(t, EdgeLabel::Unconditional), Some(cfg.exit()));
    }

    #[test]
    fn empty_branches_and_bodies() {
        let cfg = cfg_of("fn f(a:int) {\n if (a == 0) {\n }\n while (a < 0) {\n }\n return a;\n}");
        let p = cfg.block_of_line(2).unwrap();
        let h = cfg.block_of_line(4).unwrap();
        assert_eq!(cfg.successor(p, EdgeLabel::True), Some(h));
        assert_eq!(cfg.successor(p, EdgeLabel::False), Some(h));
        assert_eq!(cfg.successor(h, EdgeLabel::True), Some(h));
    }
}
