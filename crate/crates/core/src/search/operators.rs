//! Variation operators on test cases. Every operator returns a repaired
//! test: arguments resolve to type-correct bindings, no binding is dead, and
//! in crash mode the target function is still invoked.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;

use super::config::SearchConfig;
use super::pool::LiteralPool;
use super::testcase::{Arg, TestCase, TestStmt};
use crate::minilang::{Function, Program, SemType};

/// Probability that a new invocation reuses an existing compatible binding
/// instead of binding a fresh literal.
const REUSE_PROBABILITY: f64 = 0.3;

#[derive(Debug, Clone)]
pub struct Operators<'a> {
    program: &'a Program,
    pool: LiteralPool,
    /// `None` means 1/n for a test of n statements.
    pub mutation_rate: Option<f64>,
    pub crossover_rate: f64,
    pub max_length: usize,
    /// In crash mode, the function every test must call.
    pub required: Option<String>,
}

/// Which statements a mutation touched, by index into the parent.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MutationLog {
    pub touched: BTreeSet<usize>,
    pub inserted: bool,
}

impl<'a> Operators<'a> {
    pub fn new(program: &'a Program, pool: LiteralPool, max_length: usize) -> Self {
        Operators {
            program,
            pool,
            mutation_rate: None,
            crossover_rate: 0.8,
            max_length: max_length.max(2),
            required: None,
        }
    }

    /// Operators with the rates and length limit of `config` and a pool
    /// harvested from the program.
    pub fn configured(program: &'a Program, config: &SearchConfig, required: Option<String>) -> Self {
        let mut ops = Operators::new(program, LiteralPool::harvest(program), config.max_test_length);
        ops.mutation_rate = config.mutation_rate;
        ops.crossover_rate = config.crossover_rate;
        ops.required = required;
        ops
    }

    pub fn with_required(mut self, function: Option<String>) -> Self {
        self.required = function;
        self
    }

    fn entries(&self) -> Vec<&'a Function> {
        self.program.entries().collect()
    }

    /// A random test: one to three invocations, the first of the required
    /// function in crash mode.
    pub fn random_test(&self, rng: &mut impl Rng) -> TestCase {
        let mut test = TestCase::default();
        let calls = rng.gen_range(1..=3);
        for i in 0..calls {
            let f = match (&self.required, i) {
                (Some(name), 0) => self.program.function(name).expect("required function exists"),
                _ => self.pick_entry(rng),
            };
            let at = test.len();
            self.insert_invocation(&mut test, at, f, rng);
        }
        self.repair(test, rng)
    }

    fn pick_entry(&self, rng: &mut impl Rng) -> &'a Function {
        self.entries().choose(rng).expect("program has an entry function")
    }

    /// Inserts a call of `f` at `at`, with its argument bindings placed just
    /// before it.
    fn insert_invocation(&self, test: &mut TestCase, at: usize, f: &Function, rng: &mut impl Rng) {
        let mut fresh = fresh_index(test);
        let mut binds = Vec::new();
        let mut args = Vec::new();
        for p in &f.params {
            let reusable = compatible_vars(&test.statements[..at], p.ty);
            if !reusable.is_empty() && rng.gen_bool(REUSE_PROBABILITY) {
                args.push(Arg::Var(reusable.choose(rng).unwrap().clone()));
            } else {
                let var = format!("v{fresh}");
                fresh += 1;
                binds.push(TestStmt::Bind {
                    var: var.clone(),
                    ty: p.ty,
                    value: self.pool.value(p.ty, rng),
                });
                args.push(Arg::Var(var));
            }
        }
        binds.push(TestStmt::Invoke {
            function: f.name.clone(),
            args,
        });
        test.statements.splice(at..at, binds);
    }

    pub fn mutate(&self, test: &TestCase, rng: &mut impl Rng) -> TestCase {
        self.mutate_logged(test, rng).0
    }

    /// Touches each statement with probability p_m: a binding has its value
    /// perturbed or is dropped, an invocation is dropped, re-targeted, or has
    /// one argument re-bound. Then, with probability p_m, inserts a new call.
    pub fn mutate_logged(&self, test: &TestCase, rng: &mut impl Rng) -> (TestCase, MutationLog) {
        let n = test.len().max(1);
        let p = self.mutation_rate.unwrap_or(1.0 / n as f64);
        let mut log = MutationLog::default();
        if p <= 0.0 {
            return (test.clone(), log);
        }
        let mut out: Vec<Option<TestStmt>> = test.statements.iter().cloned().map(Some).collect();
        for i in 0..out.len() {
            if !rng.gen_bool(p.min(1.0)) {
                continue;
            }
            log.touched.insert(i);
            let stmt = out[i].take().unwrap();
            out[i] = match stmt {
                TestStmt::Bind { var, ty, value } => {
                    if rng.gen_bool(0.9) {
                        let value = self.pool.perturb(&value, ty, rng);
                        Some(TestStmt::Bind { var, ty, value })
                    } else {
                        None
                    }
                }
                TestStmt::Invoke { function, args } => match rng.gen_range(0..3) {
                    0 => None,
                    1 if self.entries().len() > 1 => {
                        let f = self.pick_entry(rng);
                        let args = f.params.iter().map(|_| Arg::Var(String::new())).collect();
                        Some(TestStmt::Invoke {
                            function: f.name.clone(),
                            args,
                        })
                    }
                    _ => {
                        let mut args = args;
                        if !args.is_empty() {
                            let k = rng.gen_range(0..args.len());
                            args[k] = Arg::Var(String::new());
                        }
                        Some(TestStmt::Invoke { function, args })
                    }
                },
            };
        }
        let mut mutant = TestCase::new(out.into_iter().flatten().collect());
        if rng.gen_bool(p.min(1.0)) {
            log.inserted = true;
            let f = self.pick_entry(rng);
            let at = rng.gen_range(0..=mutant.len());
            self.insert_invocation(&mut mutant, at, f, rng);
        }
        (self.repair(mutant, rng), log)
    }

    /// With probability p_c, single-point crossover at the same relative
    /// position in both parents; otherwise copies.
    pub fn crossover(&self, a: &TestCase, b: &TestCase, rng: &mut impl Rng) -> (TestCase, TestCase, bool) {
        if !rng.gen_bool(self.crossover_rate.clamp(0.0, 1.0)) {
            return (a.clone(), b.clone(), false);
        }
        let alpha: f64 = rng.gen();
        let cut_a = (alpha * a.len() as f64).round() as usize;
        let cut_b = (alpha * b.len() as f64).round() as usize;
        let (c1, c2) = self.crossover_at(a, b, cut_a, cut_b, rng);
        (c1, c2, true)
    }

    /// Swaps the suffixes `a[cut_a..]` and `b[cut_b..]`, then repairs.
    pub fn crossover_at(
        &self,
        a: &TestCase,
        b: &TestCase,
        cut_a: usize,
        cut_b: usize,
        rng: &mut impl Rng,
    ) -> (TestCase, TestCase) {
        let join = |x: &[TestStmt], y: &[TestStmt]| TestCase::new(x.iter().chain(y).cloned().collect());
        let c1 = join(&a.statements[..cut_a], &b.statements[cut_b..]);
        let c2 = join(&b.statements[..cut_b], &a.statements[cut_a..]);
        (self.repair(c1, rng), self.repair(c2, rng))
    }

    /// Restores the test invariants; see the module documentation.
    pub fn repair(&self, test: TestCase, rng: &mut impl Rng) -> TestCase {
        let mut test = test;
        test.statements.retain(|s| match s {
            TestStmt::Invoke { function, .. } => self.program.entry_names.contains(function),
            TestStmt::Bind { .. } => true,
        });
        if let Some(name) = &self.required {
            if !test.invokes(name) {
                let f = self.program.function(name).expect("required function exists");
                let at = test.len();
                self.insert_invocation(&mut test, at, f, rng);
            }
        } else if !test.statements.iter().any(|s| matches!(s, TestStmt::Invoke { .. })) {
            let f = self.pick_entry(rng);
            self.insert_invocation(&mut test, 0, f, rng);
        }
        self.bind_arguments(&mut test, rng);
        self.enforce_length(&mut test);
        drop_dead_binds(&mut test);
        test
    }

    /// Gives every argument a type-correct binding, adding fresh ones where
    /// a reference dangles or an arity changed.
    fn bind_arguments(&self, test: &mut TestCase, rng: &mut impl Rng) {
        let mut fresh = fresh_index(test);
        let mut i = 0;
        while i < test.statements.len() {
            let TestStmt::Invoke { function, args } = &test.statements[i] else {
                i += 1;
                continue;
            };
            let f = self.program.function(function).expect("entry function exists");
            let mut args = args.clone();
            args.resize(f.params.len(), Arg::Var(String::new()));
            let mut binds = Vec::new();
            for (arg, p) in args.iter_mut().zip(&f.params) {
                let ok = match arg {
                    Arg::Lit(v) => v.conforms_to(p.ty),
                    Arg::Var(name) => resolves(&test.statements[..i], name, p.ty),
                };
                if !ok {
                    let var = format!("v{fresh}");
                    fresh += 1;
                    binds.push(TestStmt::Bind {
                        var: var.clone(),
                        ty: p.ty,
                        value: self.pool.value(p.ty, rng),
                    });
                    *arg = Arg::Var(var);
                }
            }
            test.statements[i] = TestStmt::Invoke {
                function: f.name.clone(),
                args,
            };
            let added = binds.len();
            test.statements.splice(i..i, binds);
            i += added + 1;
        }
    }

    /// Drops trailing invocations (never the last call of the required
    /// function) until the test fits.
    fn enforce_length(&self, test: &mut TestCase) {
        loop {
            drop_dead_binds(test);
            if test.len() <= self.max_length {
                return;
            }
            let calls: Vec<usize> = test
                .statements
                .iter()
                .enumerate()
                .filter(|(_, s)| matches!(s, TestStmt::Invoke { .. }))
                .map(|(i, _)| i)
                .collect();
            if calls.len() <= 1 {
                return;
            }
            let victim = calls
                .iter()
                .rev()
                .copied()
                .find(|&i| match (&self.required, &test.statements[i]) {
                    (Some(name), TestStmt::Invoke { function, .. }) if function == name => {
                        let others = calls
                            .iter()
                            .filter(|&&j| matches!(&test.statements[j], TestStmt::Invoke { function, .. } if function == name))
                            .count();
                        others > 1
                    }
                    _ => true,
                });
            match victim {
                Some(i) => {
                    test.statements.remove(i);
                }
                None => return,
            }
        }
    }
}

/// Variables whose latest binding before the end of `prefix` conforms to `ty`.
fn compatible_vars(prefix: &[TestStmt], ty: SemType) -> Vec<String> {
    let mut names: Vec<String> = Vec::new();
    for s in prefix {
        if let TestStmt::Bind { var, .. } = s {
            if !names.contains(var) {
                names.push(var.clone());
            }
        }
    }
    names.retain(|n| resolves(prefix, n, ty));
    names
}

fn resolves(prefix: &[TestStmt], name: &str, ty: SemType) -> bool {
    prefix
        .iter()
        .rev()
        .find_map(|s| match s {
            TestStmt::Bind { var, value, .. } if var == name => Some(value.conforms_to(ty)),
            _ => None,
        })
        .unwrap_or(false)
}

fn fresh_index(test: &TestCase) -> usize {
    test.statements
        .iter()
        .filter_map(|s| match s {
            TestStmt::Bind { var, .. } => var.strip_prefix('v').and_then(|n| n.parse::<usize>().ok()),
            _ => None,
        })
        .max()
        .map_or(0, |m| m + 1)
}

/// Removes bindings no later invocation reads.
fn drop_dead_binds(test: &mut TestCase) {
    let mut live = vec![false; test.len()];
    for (i, s) in test.statements.iter().enumerate() {
        if let TestStmt::Invoke { args, .. } = s {
            for a in args {
                if let Arg::Var(name) = a {
                    let source = test.statements[..i]
                        .iter()
                        .rposition(|s| matches!(s, TestStmt::Bind { var, .. } if var == name));
                    if let Some(j) = source {
                        live[j] = true;
                    }
                }
            }
        }
    }
    let mut i = 0;
    test.statements.retain(|s| {
        let keep = matches!(s, TestStmt::Invoke { .. }) || live[i];
        i += 1;
        keep
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minilang::{parse, Value};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const SRC: &str = "\
fn f(a: int, s: text) {
  return a;
}
fn g(x: int[]) {
  return 0;
}
priv fn h(a: int) {
  return a;
}
";

    fn program() -> Program {
        parse("ops.mini", SRC).unwrap()
    }

    fn fixed_test() -> TestCase {
        let bind = |var: &str, ty, value| TestStmt::Bind {
            var: var.into(),
            ty,
            value,
        };
        TestCase::new(vec![
            bind("v0", SemType::Int, Value::Int(1)),
            bind("v1", SemType::Text, Value::Text("a".into())),
            TestStmt::Invoke {
                function: "f".into(),
                args: vec![Arg::Var("v0".into()), Arg::Var("v1".into())],
            },
            bind("v2", SemType::IntArray, Value::IntArray(vec![1, 2])),
            TestStmt::Invoke {
                function: "g".into(),
                args: vec![Arg::Var("v2".into())],
            },
        ])
    }

    #[test]
    fn random_tests_are_valid() {
        let p = program();
        let pool = LiteralPool::harvest(&p);
        let ops = Operators::new(&p, pool, 12);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..500 {
            let t = ops.random_test(&mut rng);
            t.validate(&p).unwrap();
            assert!(t.len() <= 12);
            assert!(!t.invokes("h"));
        }
    }

    #[test]
    fn zero_rate_mutation_is_identity() {
        let p = program();
        let pool = LiteralPool::harvest(&p);
        let mut ops = Operators::new(&p, pool, 12);
        ops.mutation_rate = Some(0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let t = fixed_test();
        for _ in 0..100 {
            assert_eq!(ops.mutate(&t, &mut rng), t);
        }
    }

    #[test]
    fn each_statement_is_touched_at_the_default_rate() {
        let p = program();
        let pool = LiteralPool::harvest(&p);
        let ops = Operators::new(&p, pool, 12);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = fixed_test();
        let trials = 10_000;
        let mut hits = vec![0u32; t.len()];
        for _ in 0..trials {
            let (m, log) = ops.mutate_logged(&t, &mut rng);
            m.validate(&p).unwrap();
            for i in log.touched {
                hits[i] += 1;
            }
        }
        let q = 1.0 / t.len() as f64;
        let sigma = (trials as f64 * q * (1.0 - q)).sqrt();
        for h in hits {
            assert!((h as f64 - trials as f64 * q).abs() <= 3.0 * sigma, "{h}");
        }
    }

    #[test]
    fn crash_mode_keeps_the_target_call() {
        let p = program();
        let pool = LiteralPool::harvest(&p);
        let mut ops = Operators::new(&p, pool, 12).with_required(Some("g".into()));
        ops.mutation_rate = Some(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..500 {
            let m = ops.mutate(&fixed_test(), &mut rng);
            assert!(m.invokes("g"));
            m.validate(&p).unwrap();
        }
        // deleting the only call is repaired
        let only_f = TestCase::new(fixed_test().statements[..3].to_vec());
        assert!(ops.repair(only_f, &mut rng).invokes("g"));
    }

    #[test]
    fn crossover_rates_and_cuts() {
        let p = program();
        let pool = LiteralPool::harvest(&p);
        let mut ops = Operators::new(&p, pool, 12);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = fixed_test();
        let b = ops.random_test(&mut rng);
        let mut applied = 0;
        for _ in 0..1000 {
            let (c1, c2, did) = ops.crossover(&a, &b, &mut rng);
            applied += did as u32;
            c1.validate(&p).unwrap();
            c2.validate(&p).unwrap();
        }
        assert!((760..=840).contains(&applied), "{applied}");

        ops.crossover_rate = 0.0;
        assert_eq!(ops.crossover(&a, &b, &mut rng), (a.clone(), b.clone(), false));

        // cutting both at 0 swaps the parents whole
        let (c1, c2) = ops.crossover_at(&a, &b, 0, 0, &mut rng);
        assert_eq!((c1, c2), (b.clone(), a.clone()));
    }

    #[test]
    fn repair_rebinds_dangling_and_mistyped_arguments() {
        let p = program();
        let pool = LiteralPool::harvest(&p);
        let ops = Operators::new(&p, pool, 12);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let broken = TestCase::new(vec![
            TestStmt::Bind {
                var: "v0".into(),
                ty: SemType::Text,
                value: Value::Text("x".into()),
            },
            TestStmt::Invoke {
                function: "f".into(),
                args: vec![Arg::Var("v0".into()), Arg::Var("nope".into())],
            },
        ]);
        let fixed = ops.repair(broken, &mut rng);
        fixed.validate(&p).unwrap();
        assert_eq!(fixed.len(), 3);
    }
}
