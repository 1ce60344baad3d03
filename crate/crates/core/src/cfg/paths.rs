use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::{BlockId, Cfg};

/// Dijkstra over unit-weight edges. `None` when `to` is unreachable.
pub fn shortest_block_distance(cfg: &Cfg, from: BlockId, to: BlockId) -> Option<u32> {
    let mut dist = vec![u32::MAX; cfg.len()];
    let mut heap = BinaryHeap::new();
    dist[from.index()] = 0;
    heap.push(Reverse((0u32, from)));
    while let Some(Reverse((d, node))) = heap.pop() {
        if node == to {
            return Some(d);
        }
        if d > dist[node.index()] {
            continue;
        }
        for (_, next, _) in cfg.successors(node) {
            let nd = d + 1;
            if nd < dist[next.index()] {
                dist[next.index()] = nd;
                heap.push(Reverse((nd, next)));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use std::collections::VecDeque;

    use super::*;
    use crate::cfg::{build_cfg, random_cfg};
    use crate::minilang::parse;
    use proptest::prelude::*;

    fn bfs(cfg: &Cfg, from: BlockId, to: BlockId) -> Option<u32> {
        let mut dist = vec![None; cfg.len()];
        dist[from.index()] = Some(0u32);
        let mut queue = VecDeque::from([from]);
        while let Some(n) = queue.pop_front() {
            let d = dist[n.index()].unwrap();
            for (_, m, _) in cfg.successors(n) {
                if dist[m.index()].is_none() {
                    dist[m.index()] = Some(d + 1);
                    queue.push_back(m);
                }
            }
        }
        dist[to.index()]
    }

    #[test]
    fn entry_to_exit_of_straight_line() {
        let p = parse("t.mini", "fn f(a:int) {\n let b = a;\n let c = b;\n return c;\n}").unwrap();
        let cfg = build_cfg(&p.functions[0]);
        assert_eq!(shortest_block_distance(&cfg, cfg.entry(), cfg.exit()), Some(2));
        assert_eq!(shortest_block_distance(&cfg, cfg.exit(), cfg.entry()), None);
        assert_eq!(shortest_block_distance(&cfg, cfg.entry(), cfg.entry()), Some(0));
    }

    proptest! {
        #[test]
        fn equals_bfs(blocks in 1usize..=13, seed in any::<u64>()) {
            let cfg = random_cfg(blocks, seed);
            for a in cfg.blocks() {
                for b in cfg.blocks() {
                    prop_assert_eq!(shortest_block_distance(&cfg, a.id, b.id), bfs(&cfg, a.id, b.id));
                }
            }
        }
    }
}
