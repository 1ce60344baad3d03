use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::minilang::{Expr, Predicate, Program, SemType, Stmt, StmtKind, Value};

/// Probability that a nullable slot receives `null`.
const NULL_PROBABILITY: f64 = 0.1;
const MAX_ARRAY_LEN: usize = 3;

/// Constants the generator draws from: small integers plus whatever the
/// program mentions.
#[derive(Debug, Clone, PartialEq)]
pub struct LiteralPool {
    pub ints: Vec<i64>,
    pub texts: Vec<String>,
}

impl LiteralPool {
    pub fn harvest(program: &Program) -> Self {
        let mut ints: BTreeSet<i64> = (-2..=10).collect();
        let mut texts: BTreeSet<String> = BTreeSet::from([String::new()]);
        for f in &program.functions {
            walk_body(&f.body, &mut ints, &mut texts);
        }
        LiteralPool {
            ints: ints.into_iter().collect(),
            texts: texts.into_iter().collect(),
        }
    }

    pub fn int(&self, rng: &mut impl Rng) -> i64 {
        *self.ints.choose(rng).expect("int pool is never empty")
    }

    fn text(&self, rng: &mut impl Rng) -> String {
        self.texts.choose(rng).expect("text pool is never empty").clone()
    }

    fn array(&self, rng: &mut impl Rng) -> Vec<i64> {
        let n = rng.gen_range(0..=MAX_ARRAY_LEN);
        (0..n).map(|_| self.int(rng)).collect()
    }

    /// A fresh value that conforms to `ty`.
    pub fn value(&self, ty: SemType, rng: &mut impl Rng) -> Value {
        if ty.nullable() && rng.gen_bool(NULL_PROBABILITY) {
            return Value::Null;
        }
        match ty {
            SemType::Int => Value::Int(self.int(rng)),
            SemType::Bool => Value::Bool(rng.gen()),
            SemType::Text => Value::Text(self.text(rng)),
            SemType::IntArray => Value::IntArray(self.array(rng)),
            SemType::Any => {
                let concrete = [SemType::Int, SemType::Bool, SemType::Text, SemType::IntArray];
                self.value(*concrete.choose(rng).unwrap(), rng)
            }
        }
    }

    /// A small change to `value` that keeps it within `ty`. The result
    /// differs from the input whenever the type has more than one value.
    pub fn perturb(&self, value: &Value, ty: SemType, rng: &mut impl Rng) -> Value {
        for _ in 0..8 {
            let v = self.perturb_once(value, ty, rng);
            if &v != value {
                return v;
            }
        }
        self.value(ty, rng)
    }

    fn perturb_once(&self, value: &Value, ty: SemType, rng: &mut impl Rng) -> Value {
        if ty == SemType::Any && rng.gen_bool(0.2) {
            return self.value(SemType::Any, rng);
        }
        if ty.nullable() && rng.gen_bool(NULL_PROBABILITY) {
            return if value == &Value::Null {
                self.value(ty, rng)
            } else {
                Value::Null
            };
        }
        match value {
            Value::Null => self.value(ty, rng),
            Value::Int(v) => Value::Int(self.nudge(*v, rng)),
            Value::Bool(b) => Value::Bool(!b),
            Value::Text(t) => {
                if rng.gen_bool(0.5) {
                    Value::Text(self.text(rng))
                } else if t.is_empty() || rng.gen() {
                    Value::Text(format!("{t}{}", rng.gen_range('a'..='z')))
                } else {
                    Value::Text(t[..t.len() - t.chars().last().unwrap().len_utf8()].to_string())
                }
            }
            Value::IntArray(items) => {
                let mut items = items.clone();
                match rng.gen_range(0..4) {
                    0 if items.len() < MAX_ARRAY_LEN => {
                        let at = rng.gen_range(0..=items.len());
                        items.insert(at, self.int(rng));
                    }
                    1 if !items.is_empty() => {
                        let at = rng.gen_range(0..items.len());
                        items.remove(at);
                    }
                    _ if !items.is_empty() => {
                        let at = rng.gen_range(0..items.len());
                        items[at] = self.nudge(items[at], rng);
                    }
                    _ => items.push(self.int(rng)),
                }
                Value::IntArray(items)
            }
        }
    }

    /// Either a pool constant or a step of up to 3 away from `v`.
    fn nudge(&self, v: i64, rng: &mut impl Rng) -> i64 {
        if rng.gen_bool(0.5) {
            self.int(rng)
        } else {
            let step = rng.gen_range(1..=3);
            if rng.gen() {
                v.saturating_add(step)
            } else {
                v.saturating_sub(step)
            }
        }
    }
}

fn walk_body(body: &[Stmt], ints: &mut BTreeSet<i64>, texts: &mut BTreeSet<String>) {
    for stmt in body {
        match &stmt.kind {
            StmtKind::Let { value, .. } => walk_expr(value, ints, texts),
            StmtKind::Assign { index, value, .. } => {
                if let Some(i) = index {
                    walk_expr(i, ints, texts);
                }
                walk_expr(value, ints, texts);
            }
            StmtKind::If {
                cond,
                then_body,
                else_body,
            } => {
                walk_predicate(cond, ints, texts);
                walk_body(then_body, ints, texts);
                walk_body(else_body, ints, texts);
            }
            StmtKind::While { cond, body } => {
                walk_predicate(cond, ints, texts);
                walk_body(body, ints, texts);
            }
            StmtKind::Call(e) | StmtKind::Return(Some(e)) => walk_expr(e, ints, texts),
            StmtKind::Return(None) | StmtKind::Throw(_) => {}
        }
    }
}

fn walk_predicate(p: &Predicate, ints: &mut BTreeSet<i64>, texts: &mut BTreeSet<String>) {
    match p {
        Predicate::Compare { lhs, rhs, .. } => {
            walk_expr(lhs, ints, texts);
            walk_expr(rhs, ints, texts);
        }
        Predicate::NullCheck { expr, .. } | Predicate::Flag(expr) => walk_expr(expr, ints, texts),
    }
}

fn walk_expr(e: &Expr, ints: &mut BTreeSet<i64>, texts: &mut BTreeSet<String>) {
    match e {
        Expr::Int(v) => {
            ints.insert(*v);
        }
        Expr::Str(s) => {
            texts.insert(s.clone());
        }
        Expr::Bool(_) | Expr::Null | Expr::Var(_) => {}
        Expr::Array(items) => items.iter().for_each(|i| walk_expr(i, ints, texts)),
        Expr::Index(a, b) | Expr::Binary(_, a, b) => {
            walk_expr(a, ints, texts);
            walk_expr(b, ints, texts);
        }
        Expr::Neg(inner) => {
            // `-5` parses as a negation of a literal
            if let Expr::Int(v) = inner.as_ref() {
                ints.insert(-v);
            } else {
                walk_expr(inner, ints, texts);
            }
        }
        Expr::Call { args, .. } => args.iter().for_each(|a| walk_expr(a, ints, texts)),
        Expr::Builtin(_, inner) | Expr::Cast { expr: inner, .. } => walk_expr(inner, ints, texts),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minilang::parse;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pool() -> LiteralPool {
        let src = "fn f(a:int, s:text) {\n if (a == 42) {\n  return \"hit\";\n }\n return -7;\n}";
        LiteralPool::harvest(&parse("p.mini", src).unwrap())
    }

    #[test]
    fn harvests_program_constants() {
        let p = pool();
        assert!(p.ints.contains(&42) && p.ints.contains(&-7) && p.ints.contains(&-2));
        assert!(p.texts.contains(&"hit".to_string()) && p.texts.contains(&String::new()));
    }

    #[test]
    fn values_conform_and_perturbations_change() {
        let p = pool();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for ty in [SemType::Int, SemType::Bool, SemType::Text, SemType::IntArray, SemType::Any] {
            for _ in 0..200 {
                let v = p.value(ty, &mut rng);
                assert!(v.conforms_to(ty));
                if let Value::IntArray(items) = &v {
                    assert!(items.len() <= MAX_ARRAY_LEN);
                }
                let w = p.perturb(&v, ty, &mut rng);
                assert!(w.conforms_to(ty));
                assert_ne!(v, w);
            }
        }
    }
}
