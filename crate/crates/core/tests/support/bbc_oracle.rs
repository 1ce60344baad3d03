//! A second, deliberately naive route to the BBC verdict: set algebra over
//! covered lines, transitive closure by Floyd-Warshall, and control
//! dependence from its path definition.

use std::collections::BTreeSet;

use sbtg_core::cfg::{Cfg, EdgeLabel};
use sbtg_core::minilang::FunctionCoverage;

const INF: u32 = u32::MAX / 4;

pub struct OracleGraph {
    n: usize,
    dist: Vec<Vec<u32>>,
    lines: Vec<Vec<u32>>,
    virtual_block: Vec<bool>,
    /// deps[b] = blocks b is control dependent on (either side).
    deps: Vec<BTreeSet<usize>>,
}

impl OracleGraph {
    pub fn new(cfg: &Cfg) -> Self {
        let n = cfg.len();
        let mut dist = vec![vec![INF; n]; n];
        for e in cfg.edges() {
            dist[e.from.index()][e.to.index()] = 1;
        }
        for (i, row) in dist.iter_mut().enumerate() {
            row[i] = 0;
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let via = dist[i][k] + dist[k][j];
                    if via < dist[i][j] {
                        dist[i][j] = via;
                    }
                }
            }
        }
        let exit = cfg.exit().index();
        // y post-dominates x iff every x->exit path meets y: remove y, test reachability
        let pdom = |y: usize, x: usize| -> bool {
            if x == y {
                return true;
            }
            let mut seen = vec![false; n];
            let mut stack = vec![x];
            seen[x] = true;
            while let Some(v) = stack.pop() {
                if v == exit {
                    return false;
                }
                for e in cfg.edges().iter().filter(|e| e.from.index() == v) {
                    let t = e.to.index();
                    if t != y && !seen[t] {
                        seen[t] = true;
                        stack.push(t);
                    }
                }
            }
            true
        };
        let mut deps = vec![BTreeSet::new(); n];
        for b in 0..n {
            for e in cfg.edges() {
                if e.label == EdgeLabel::Unconditional {
                    continue;
                }
                let c = e.from.index();
                let strict = b != c && pdom(b, c);
                if pdom(b, e.to.index()) && !strict {
                    deps[b].insert(c);
                }
            }
        }
        OracleGraph {
            n,
            dist,
            lines: cfg.blocks().iter().map(|b| b.lines.clone()).collect(),
            virtual_block: cfg.blocks().iter().map(|b| b.is_virtual()).collect(),
            deps,
        }
    }

    fn entered(&self, covered: &BTreeSet<u32>, b: usize) -> bool {
        !self.virtual_block[b] && self.lines[b].iter().any(|l| covered.contains(l))
    }

    /// Closest dependency ancestor executed by both tests, else entry (0).
    fn start(&self, c1: &BTreeSet<u32>, c2: &BTreeSet<u32>, target: usize) -> usize {
        let both = |b: usize| self.entered(c1, b) && self.entered(c2, b);
        let walks = |b: usize| b == target || !both(b);
        // ancestor depth by fixed-point relaxation, walking only through
        // blocks not executed by both tests
        let mut depth = vec![INF; self.n];
        depth[target] = 0;
        let mut changed = true;
        while changed {
            changed = false;
            for b in 0..self.n {
                if depth[b] == INF || !walks(b) {
                    continue;
                }
                for &c in &self.deps[b] {
                    if c != target && depth[b] + 1 < depth[c] {
                        depth[c] = depth[b] + 1;
                        changed = true;
                    }
                }
            }
        }
        let mut best: Option<(u32, usize)> = None;
        for b in 0..self.n {
            if depth[b] == INF || !walks(b) {
                continue;
            }
            for &c in &self.deps[b] {
                if both(c) {
                    let cand = (depth[b] + 1, c);
                    if best.is_none_or(|x| cand < x) {
                        best = Some(cand);
                    }
                }
            }
        }
        best.map_or(0, |(_, c)| c)
    }

    fn fully(&self, covered: &BTreeSet<u32>, b: usize) -> bool {
        self.lines[b].iter().all(|l| covered.contains(l))
    }

    fn semi(&self, covered: &BTreeSet<u32>, b: usize) -> bool {
        covered.contains(&self.lines[b][0]) && !covered.contains(self.lines[b].last().unwrap())
    }

    /// Transcription of the published pseudo-code.
    pub fn bbc(&self, c1: &BTreeSet<u32>, c2: &BTreeSet<u32>, target: usize) -> i64 {
        let s = self.start(c1, c2, target);
        let effective: Vec<usize> = (0..self.n)
            .filter(|&b| !self.virtual_block[b] && self.dist[s][b] < INF && self.dist[b][target] < INF)
            .collect();
        let fcb = |c: &BTreeSet<u32>| -> BTreeSet<usize> { effective.iter().copied().filter(|&b| self.fully(c, b)).collect() };
        let scb = |c: &BTreeSet<u32>| -> BTreeSet<usize> { effective.iter().copied().filter(|&b| self.semi(c, b)).collect() };
        let (fcb1, fcb2, scb1, scb2) = (fcb(c1), fcb(c2), scb(c1), scb(c2));

        if scb1 == scb2 && (fcb1.is_subset(&fcb2) || fcb2.is_subset(&fcb1)) {
            let Some(closest) = scb1.iter().copied().min_by_key(|&b| (self.dist[b][target], b)) else {
                return 0;
            };
            let lines1 = self.lines[closest].iter().filter(|l| c1.contains(l)).count() as i64;
            let lines2 = self.lines[closest].iter().filter(|l| c2.contains(l)).count() as i64;
            return lines2 - lines1;
        }
        if (fcb1.is_subset(&fcb2) && scb1.is_subset(&fcb2)) || (fcb2.is_subset(&fcb1) && scb2.is_subset(&fcb1)) {
            return fcb2.len() as i64 - fcb1.len() as i64;
        }
        0
    }
}

/// Coverage of one function where block `i` had its first `prefix[i]` lines
/// executed.
pub fn coverage_from_prefixes(cfg: &Cfg, prefixes: &[usize]) -> FunctionCoverage {
    let mut cov = FunctionCoverage::default();
    for (b, &k) in cfg.statement_blocks().zip(prefixes) {
        for &l in &b.lines[..k] {
            cov.covered_lines.insert(l);
        }
        if k == b.lines.len() {
            cov.covered_blocks_full.insert(b.id);
        } else if k > 0 {
            cov.covered_blocks_semi.insert(b.id);
        }
    }
    cov
}

/// Every edge assignment over `n` statement blocks: an unconditional edge to
/// any block or exit, or a true/false pair to two distinct targets. Branch
/// labels are irrelevant to the comparison, so each unordered pair appears
/// once.
pub fn all_shapes(n: usize) -> Vec<Vec<(usize, usize, EdgeLabel)>> {
    let exit = n + 1;
    let mut per_block: Vec<Vec<Vec<(usize, usize, EdgeLabel)>>> = Vec::new();
    for b in 1..=n {
        let mut options = Vec::new();
        for t in 1..=exit {
            options.push(vec![(b, t, EdgeLabel::Unconditional)]);
        }
        for t in 1..=exit {
            for f in t + 1..=exit {
                options.push(vec![(b, t, EdgeLabel::True), (b, f, EdgeLabel::False)]);
            }
        }
        per_block.push(options);
    }
    let mut out = Vec::new();
    let mut pick = vec![0usize; n];
    loop {
        let mut edges = vec![(0, 1, EdgeLabel::Unconditional)];
        for (b, &p) in pick.iter().enumerate() {
            edges.extend(per_block[b][p].iter().copied());
        }
        out.push(edges);
        let mut i = 0;
        loop {
            if i == n {
                return out;
            }
            pick[i] += 1;
            if pick[i] < per_block[i].len() {
                break;
            }
            pick[i] = 0;
            i += 1;
        }
    }
}

pub fn block_lines(n: usize, long_block: usize) -> Vec<Vec<u32>> {
    (1..=n)
        .map(|b| {
            let count = if b == long_block { 3 } else { 2 };
            (0..count).map(|k| b as u32 * 10 + k).collect()
        })
        .collect()
}

/// All prefix vectors for the given block lengths.
pub fn all_prefixes(lengths: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &len in lengths {
        let mut next = Vec::with_capacity(out.len() * (len + 1));
        for p in &out {
            for k in 0..=len {
                let mut q = p.clone();
                q.push(k);
                next.push(q);
            }
        }
        out = next;
    }
    out
}

#[derive(Debug, Default)]
pub struct Equivalence {
    pub shapes: usize,
    pub cases: u64,
    pub mismatches: u64,
    pub first_mismatch: Option<String>,
}

/// Compares the implementation with the oracle on every coverage pair of
/// every target block, for every well-formed shape with up to
/// `exhaustive_blocks` statement blocks, plus every `stride`-th shape with
/// one more block.
pub fn check_equivalence(exhaustive_blocks: usize, stride: usize) -> Equivalence {
    use sbtg_core::bbc::compare_blocks;
    use sbtg_core::cfg::{control_dependencies, BlockId};

    let mut report = Equivalence::default();
    let mut plan: Vec<(usize, Vec<(usize, usize, EdgeLabel)>)> = Vec::new();
    for n in 1..=exhaustive_blocks {
        plan.extend(all_shapes(n).into_iter().map(|s| (n, s)));
    }
    if stride > 0 {
        let n = exhaustive_blocks + 1;
        plan.extend(all_shapes(n).into_iter().step_by(stride).map(|s| (n, s)));
    }
    for (n, edges) in plan {
        let mut counted = false;
        for t in 1..=n {
            let Ok(cfg) = Cfg::from_parts("shape", block_lines(n, t), edges.clone()) else {
                break;
            };
            if !counted {
                report.shapes += 1;
                counted = true;
            }
            let cd = control_dependencies(&cfg);
            let oracle = OracleGraph::new(&cfg);
            let lengths: Vec<usize> = cfg.statement_blocks().map(|b| b.lines.len()).collect();
            let prefixes = all_prefixes(&lengths);
            let covs: Vec<_> = prefixes.iter().map(|p| coverage_from_prefixes(&cfg, p)).collect();
            for c1 in &covs {
                for c2 in &covs {
                    report.cases += 1;
                    let got = compare_blocks(&cfg, &cd, Some(c1), Some(c2), BlockId(t as u32));
                    let want = oracle.bbc(&c1.covered_lines, &c2.covered_lines, t);
                    if got.value != want {
                        report.mismatches += 1;
                        if report.first_mismatch.is_none() {
                            report.first_mismatch = Some(format!(
                                "target B{t}, got {} want {}, cov1 {:?}, cov2 {:?}\n{}",
                                got.value, want, c1.covered_lines, c2.covered_lines, cfg.dump()
                            ));
                        }
                    }
                }
            }
        }
    }
    report
}
