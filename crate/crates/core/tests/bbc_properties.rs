mod support;

use proptest::prelude::*;
use sbtg_core::bbc::{
    common_start, compare_blocks, compute_bbc, effective_blocks, ActiveAge, BbcCounters, BbcGate, BbcInput, GateConfig,
    Scenario, Sleep,
};
use sbtg_core::cfg::{control_dependencies, random_cfg, BlockId, Cfg, EdgeLabel};
use sbtg_core::minilang::{execute, Value, DEFAULT_STEP_LIMIT};
use sbtg_core::search::testcase::{Arg, TestCase, TestStmt};
use sbtg_core::Subject;
use support::bbc_oracle::coverage_from_prefixes;

fn prefixes(cfg: &Cfg, bits: u64) -> Vec<usize> {
    cfg.statement_blocks()
        .enumerate()
        .map(|(i, b)| ((bits >> (2 * i)) & 3) as usize % (b.lines.len() + 1))
        .collect()
}

fn chain(n: usize) -> Cfg {
    let lines = (1..=n).map(|b| vec![b as u32 * 10, b as u32 * 10 + 1]).collect();
    let edges = (0..=n).map(|b| (b, b + 1, EdgeLabel::Unconditional)).collect();
    Cfg::from_parts("chain", lines, edges).unwrap()
}

proptest! {
    #[test]
    fn antisymmetric(n in 1usize..=12, seed in any::<u64>(), b1 in any::<u64>(), b2 in any::<u64>()) {
        let cfg = random_cfg(n, seed);
        let cd = control_dependencies(&cfg);
        let c1 = coverage_from_prefixes(&cfg, &prefixes(&cfg, b1));
        let c2 = coverage_from_prefixes(&cfg, &prefixes(&cfg, b2));
        for t in cfg.statement_blocks() {
            let ab = compare_blocks(&cfg, &cd, Some(&c1), Some(&c2), t.id);
            let ba = compare_blocks(&cfg, &cd, Some(&c2), Some(&c1), t.id);
            prop_assert_eq!(ab.value, -ba.value);
            prop_assert_eq!(ab.scenario, ba.scenario);
        }
    }

    #[test]
    fn identical_coverage_ties(n in 1usize..=12, seed in any::<u64>(), bits in any::<u64>()) {
        let cfg = random_cfg(n, seed);
        let cd = control_dependencies(&cfg);
        let c = coverage_from_prefixes(&cfg, &prefixes(&cfg, bits));
        for t in cfg.statement_blocks() {
            prop_assert_eq!(compare_blocks(&cfg, &cd, Some(&c), Some(&c), t.id).value, 0);
        }
    }

    /// The scenario reported is the first guard that holds, and the default
    /// tie is reported only when neither does.
    #[test]
    fn guards_select_exactly_one_branch(n in 1usize..=10, seed in any::<u64>(), b1 in any::<u64>(), b2 in any::<u64>()) {
        let cfg = random_cfg(n, seed);
        let cd = control_dependencies(&cfg);
        let c1 = coverage_from_prefixes(&cfg, &prefixes(&cfg, b1));
        let c2 = coverage_from_prefixes(&cfg, &prefixes(&cfg, b2));
        for t in cfg.statement_blocks() {
            let s = common_start(&cfg, &cd, &c1, &c2, t.id);
            let eff = effective_blocks(&cfg, s, t.id);
            let pick = |set: &std::collections::BTreeSet<BlockId>| -> std::collections::BTreeSet<BlockId> {
                set.intersection(&eff).copied().collect()
            };
            let (f1, f2) = (pick(&c1.covered_blocks_full), pick(&c2.covered_blocks_full));
            let (s1, s2) = (pick(&c1.covered_blocks_semi), pick(&c2.covered_blocks_semi));
            let first = s1 == s2 && (f1.is_subset(&f2) || f2.is_subset(&f1));
            let second = (f1.is_subset(&f2) && s1.is_subset(&f2)) || (f2.is_subset(&f1) && s2.is_subset(&f1));
            let expected = if first {
                Some(Scenario::SameBlock)
            } else if second {
                Some(Scenario::Subsumed)
            } else {
                None
            };
            let out = compare_blocks(&cfg, &cd, Some(&c1), Some(&c2), t.id);
            prop_assert_eq!(out.scenario, expected);
            if expected.is_none() {
                prop_assert_eq!(out.value, 0);
            }
        }
    }

    #[test]
    fn one_shortest_path_query_per_semi_covered_block(n in 1usize..=12, seed in any::<u64>(), b1 in any::<u64>(), b2 in any::<u64>()) {
        let cfg = random_cfg(n, seed);
        let cd = control_dependencies(&cfg);
        let c1 = coverage_from_prefixes(&cfg, &prefixes(&cfg, b1));
        let c2 = coverage_from_prefixes(&cfg, &prefixes(&cfg, b2));
        let bound = c1.covered_blocks_semi.union(&c2.covered_blocks_semi).count();
        for t in cfg.statement_blocks() {
            let out = compare_blocks(&cfg, &cd, Some(&c1), Some(&c2), t.id);
            prop_assert!(out.dijkstra_queries <= bound);
        }
    }
}

#[test]
fn subsumed_progress_on_a_chain() {
    // blocks A..E in sequence; the target is E
    let cfg = chain(5);
    let cd = control_dependencies(&cfg);
    let a_and_b_full = coverage_from_prefixes(&cfg, &[2, 2, 0, 0, 0]);
    let a_full_b_semi = coverage_from_prefixes(&cfg, &[2, 1, 0, 0, 0]);
    let out = compare_blocks(&cfg, &cd, Some(&a_full_b_semi), Some(&a_and_b_full), BlockId(5));
    assert_eq!(out.value, 1);
    assert_eq!(out.scenario, Some(Scenario::Subsumed));
}

#[test]
fn divergent_paths_tie() {
    // entry -> B1 branching to B2 or B3, both joining at B4
    let lines = vec![vec![10], vec![20, 21], vec![30, 31], vec![40]];
    let edges = vec![
        (0, 1, EdgeLabel::Unconditional),
        (1, 2, EdgeLabel::True),
        (1, 3, EdgeLabel::False),
        (2, 4, EdgeLabel::Unconditional),
        (3, 4, EdgeLabel::Unconditional),
        (4, 5, EdgeLabel::Unconditional),
    ];
    let cfg = Cfg::from_parts("diamond", lines, edges).unwrap();
    let cd = control_dependencies(&cfg);
    let left = coverage_from_prefixes(&cfg, &[1, 2, 0, 0]);
    let right = coverage_from_prefixes(&cfg, &[1, 0, 2, 0]);
    let out = compare_blocks(&cfg, &cd, Some(&left), Some(&right), BlockId(4));
    assert_eq!(out.value, 0);
    assert_eq!(out.scenario, None);
}

#[test]
fn unentered_function_compares_from_the_entry() {
    let cfg = chain(2);
    let cd = control_dependencies(&cfg);
    let some = coverage_from_prefixes(&cfg, &[2, 1]);
    assert_eq!(compare_blocks(&cfg, &cd, None, Some(&some), BlockId(2)).value, 1);
    assert_eq!(compare_blocks(&cfg, &cd, None, None, BlockId(2)).value, 0);
}

const SOURCE: &str = "\
fn outer(n: int, s: text) {
  let a = 1;
  if (n > 0) {
    let b = len(s);
    let c = 4 / n;
    return b + c;
  }
  return a;
}
";

fn traces(s: &Subject) -> Vec<sbtg_core::minilang::ExecutionTrace> {
    let mut out = Vec::new();
    for n in [-1, 0, 1, 2] {
        for text in [Value::Null, Value::Text("x".into())] {
            let t = TestCase::new(vec![TestStmt::Invoke {
                function: "outer".into(),
                args: vec![Arg::Lit(Value::Int(n)), Arg::Lit(text)],
            }]);
            out.push(execute(s, &t, DEFAULT_STEP_LIMIT));
        }
    }
    out
}

#[test]
fn gate_with_zero_rate_only_counts_calls() {
    let s = Subject::parse("g.mini", SOURCE).unwrap();
    let ts = traces(&s);
    let mut gate = BbcGate::new(GateConfig { usage_rate: 0.0, sleep: Sleep::Evaluations(0) }, 7);
    let mut counters = BbcCounters::default();
    for a in &ts {
        for b in &ts {
            let input = BbcInput { trace1: a, trace2: b, method: "outer", line: 5 };
            assert_eq!(gate.compare(&s, &input, ActiveAge { evaluations: 100, seconds: 0.0 }, &mut counters), 0);
        }
    }
    assert_eq!(counters.calls as usize, ts.len() * ts.len());
    assert_eq!((counters.active, counters.useful), (0, 0));
}

#[test]
fn gate_at_full_rate_is_transparent() {
    let s = Subject::parse("g.mini", SOURCE).unwrap();
    let ts = traces(&s);
    let mut gate = BbcGate::new(GateConfig { usage_rate: 1.0, sleep: Sleep::Evaluations(0) }, 7);
    let mut counters = BbcCounters::default();
    let mut useful = 0;
    for a in &ts {
        for b in &ts {
            for line in [2, 3, 4, 5, 6, 8] {
                let input = BbcInput { trace1: a, trace2: b, method: "outer", line };
                let want = compute_bbc(&s, &input).value;
                useful += (want != 0) as u64;
                assert_eq!(gate.compare(&s, &input, ActiveAge::default(), &mut counters), want);
            }
        }
    }
    assert!(useful > 0);
    assert_eq!(counters.useful, useful);
    assert!(counters.is_consistent());
}

#[test]
fn gate_sleeps_until_the_objective_is_old_enough() {
    let s = Subject::parse("g.mini", SOURCE).unwrap();
    let ts = traces(&s);
    // n = 1 with a null text stops on the first body line; with text it goes deeper
    let input = BbcInput { trace1: &ts[4], trace2: &ts[5], method: "outer", line: 5 };
    assert_ne!(compute_bbc(&s, &input).value, 0);
    let mut gate = BbcGate::new(GateConfig { usage_rate: 1.0, sleep: Sleep::Evaluations(50) }, 1);
    let mut counters = BbcCounters::default();
    let young = ActiveAge { evaluations: 50, seconds: 0.0 };
    let old = ActiveAge { evaluations: 51, seconds: 0.0 };
    assert_eq!(gate.compare(&s, &input, young, &mut counters), 0);
    assert_ne!(gate.compare(&s, &input, old, &mut counters), 0);
    assert_eq!(counters.calls, 2);
    assert_eq!(counters.active, 1);
}

#[test]
fn half_rate_delegates_about_half_the_time() {
    let s = Subject::parse("g.mini", SOURCE).unwrap();
    let ts = traces(&s);
    let input = BbcInput { trace1: &ts[4], trace2: &ts[5], method: "outer", line: 5 };
    let mut gate = BbcGate::new(GateConfig { usage_rate: 0.5, sleep: Sleep::Evaluations(0) }, 2024);
    let mut counters = BbcCounters::default();
    for _ in 0..1000 {
        gate.compare(&s, &input, ActiveAge::default(), &mut counters);
    }
    // every delegation of this pair is active, so `active` counts delegations
    assert!((450..=550).contains(&counters.active), "{}", counters.active);
}
