use std::collections::BTreeSet;

use super::{BlockId, Cfg, Side};

/// Post-dominator sets: `sets[x][y]` holds when `y` post-dominates `x`.
#[derive(Debug, Clone)]
pub struct PostDominators {
    sets: Vec<Vec<bool>>,
    ipdom: Vec<Option<BlockId>>,
}

impl PostDominators {
    pub fn post_dominates(&self, y: BlockId, x: BlockId) -> bool {
        self.sets[x.index()][y.index()]
    }

    /// Immediate post-dominator; `None` only for exit.
    pub fn immediate(&self, x: BlockId) -> Option<BlockId> {
        self.ipdom[x.index()]
    }
}

pub fn post_dominators(cfg: &Cfg) -> PostDominators {
    let n = cfg.len();
    let exit = cfg.exit().index();
    let mut sets = vec![vec![true; n]; n];
    sets[exit] = vec![false; n];
    sets[exit][exit] = true;

    let mut changed = true;
    while changed {
        changed = false;
        // reverse id order visits blocks roughly in post-order from exit
        for x in (0..n).rev() {
            if x == exit {
                continue;
            }
            let mut next = vec![true; n];
            for (_, to, _) in cfg.successors(BlockId(x as u32)) {
                for (slot, &v) in next.iter_mut().zip(&sets[to.index()]) {
                    *slot &= v;
                }
            }
            next[x] = true;
            if next != sets[x] {
                sets[x] = next;
                changed = true;
            }
        }
    }

    let size = |y: usize| sets[y].iter().filter(|&&b| b).count();
    let ipdom = (0..n)
        .map(|x| {
            (0..n)
                .filter(|&y| y != x && sets[x][y])
                .max_by_key(|&y| size(y))
                .map(|y| BlockId(y as u32))
        })
        .collect();
    PostDominators { sets, ipdom }
}

/// For each block, the (block, side) pairs it is control dependent on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControlDependency {
    deps: Vec<BTreeSet<(BlockId, Side)>>,
}

impl ControlDependency {
    pub fn of(&self, block: BlockId) -> &BTreeSet<(BlockId, Side)> {
        &self.deps[block.index()]
    }

    pub fn len(&self) -> usize {
        self.deps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deps.iter().all(BTreeSet::is_empty)
    }
}

/// Walks each branch edge `C -s-> S` up the post-dominator tree from `S` to
/// `ipdom(C)`, marking every block on the way as dependent on `(C, s)`.
pub fn control_dependencies(cfg: &Cfg) -> ControlDependency {
    let pdom = post_dominators(cfg);
    let mut deps = vec![BTreeSet::new(); cfg.len()];
    for e in cfg.edges() {
        let Some(side) = e.label.side() else { continue };
        if pdom.post_dominates(e.to, e.from) && e.to != e.from {
            continue;
        }
        let stop = pdom.immediate(e.from);
        let mut runner = Some(e.to);
        while let Some(r) = runner {
            if Some(r) == stop {
                break;
            }
            deps[r.index()].insert((e.from, side));
            runner = pdom.immediate(r);
        }
    }
    ControlDependency { deps }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfg::{build_cfg, random_cfg, EdgeLabel};
    use crate::minilang::parse;
    use proptest::prelude::*;

    /// `y` post-dominates `x` iff `x == y` or exit is unreachable from `x`
    /// once `y` is removed.
    fn brute_pdom(cfg: &Cfg, y: BlockId, x: BlockId) -> bool {
        if x == y {
            return true;
        }
        let mut seen = vec![false; cfg.len()];
        let mut stack = vec![x];
        seen[x.index()] = true;
        while let Some(n) = stack.pop() {
            if n == cfg.exit() {
                return false;
            }
            for (_, to, _) in cfg.successors(n) {
                if to != y && !seen[to.index()] {
                    seen[to.index()] = true;
                    stack.push(to);
                }
            }
        }
        true
    }

    /// Textbook definition: B depends on (C, s) iff B post-dominates the
    /// s-successor of C and B does not strictly post-dominate C.
    fn brute_cd(cfg: &Cfg) -> Vec<BTreeSet<(BlockId, Side)>> {
        let mut out = vec![BTreeSet::new(); cfg.len()];
        for b in cfg.blocks() {
            for c in cfg.blocks() {
                for side in [Side::True, Side::False] {
                    let Some(s) = cfg.successor(c.id, side.label()) else { continue };
                    let strict = b.id != c.id && brute_pdom(cfg, b.id, c.id);
                    if brute_pdom(cfg, b.id, s) && !strict {
                        out[b.id.index()].insert((c.id, side));
                    }
                }
            }
        }
        out
    }

    #[test]
    fn nested_if_dependency() {
        let src = "fn f(a:int) {\n let x = 0;\n if (a > 0) {\n  x = 1;\n  if (a > 5) {\n   x = 2;\n  }\n }\n return x;\n}";
        let p = parse("t.mini", src).unwrap();
        let cfg = build_cfg(&p.functions[0]);
        let cd = control_dependencies(&cfg);
        let outer = cfg.block_of_line(2).unwrap();
        let inner = cfg.block_of_line(4).unwrap();
        let deep = cfg.block_of_line(6).unwrap();
        let ret = cfg.block_of_line(9).unwrap();
        assert!(cd.of(outer).is_empty());
        assert!(cd.of(ret).is_empty());
        assert_eq!(cd.of(inner), &BTreeSet::from([(outer, Side::True)]));
        assert_eq!(cd.of(deep), &BTreeSet::from([(inner, Side::True)]));
    }

    #[test]
    fn loop_header_depends_on_itself() {
        let src = "fn f(n:int) {\n let i = 0;\n while (i < n) {\n  i = i + 1;\n }\n return i;\n}";
        let p = parse("t.mini", src).unwrap();
        let cfg = build_cfg(&p.functions[0]);
        let cd = control_dependencies(&cfg);
        let h = cfg.block_of_line(3).unwrap();
        let body = cfg.block_of_line(4).unwrap();
        assert_eq!(cd.of(body), &BTreeSet::from([(h, Side::True)]));
        assert_eq!(cd.of(h), &BTreeSet::from([(h, Side::True)]));
    }

    #[test]
    fn branchless_has_no_dependencies() {
        let p = parse("t.mini", "fn f(a:int) {\n let b = a + 1;\n return b;\n}").unwrap();
        let cfg = build_cfg(&p.functions[0]);
        assert!(cfg.is_branchless());
        assert!(control_dependencies(&cfg).is_empty());
    }

    #[test]
    fn exit_post_dominates_everything() {
        let cfg = random_cfg(12, 7);
        let pdom = post_dominators(&cfg);
        for b in cfg.blocks() {
            assert!(pdom.post_dominates(cfg.exit(), b.id));
        }
        assert!(cfg.successor(cfg.entry(), EdgeLabel::Unconditional).is_some());
    }

    proptest! {
        #[test]
        fn matches_brute_force_definition(blocks in 1usize..=13, seed in any::<u64>()) {
            let cfg = random_cfg(blocks, seed);
            let pdom = post_dominators(&cfg);
            for x in cfg.blocks() {
                for y in cfg.blocks() {
                    prop_assert_eq!(pdom.post_dominates(y.id, x.id), brute_pdom(&cfg, y.id, x.id));
                }
            }
            let cd = control_dependencies(&cfg);
            let oracle = brute_cd(&cfg);
            for b in cfg.blocks() {
                prop_assert_eq!(cd.of(b.id), &oracle[b.id.index()], "block {}\n{}", b.id, cfg.dump());
            }
        }
    }
}
