//! Tree-walking interpreter that records line coverage, predicate outcomes,
//! and the stack at the point a run aborts.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::ast::*;
use super::stacktrace::{ErrorKind, RuntimeError, StackFrame};
use super::value::Value;
use crate::cfg::Side;
use crate::heuristics::branch_distance::{branch_distance, NOT_TAKEN_CONSTANT};
use crate::search::testcase::{Arg, TestCase, TestStmt};

pub const DEFAULT_STEP_LIMIT: u64 = 100_000;
const MAX_CALL_DEPTH: usize = 200;

/// Per-function observations before they are mapped onto basic blocks.
#[derive(Debug, Clone, Default)]
pub struct RawCoverage {
    pub lines: BTreeSet<u32>,
    /// Lines whose statement ran to completion (or explicitly threw).
    pub completed: BTreeSet<u32>,
    /// Minimum distance per (predicate line, side) over all evaluations.
    pub predicates: BTreeMap<(u32, Side), f64>,
}

#[derive(Debug, Clone, Default)]
pub struct RawTrace {
    /// Indexed like `Program::functions`; `None` for functions never entered.
    pub functions: Vec<Option<RawCoverage>>,
    pub error: Option<RuntimeError>,
    pub steps: u64,
}

struct Frame {
    function: usize,
    line: u32,
    vars: HashMap<String, Value>,
}

enum Flow {
    Next,
    Return(Value),
}

type Exec<T> = Result<T, RuntimeError>;

struct Machine<'p> {
    program: &'p Program,
    stack: Vec<Frame>,
    steps: u64,
    step_limit: u64,
    raw: Vec<Option<RawCoverage>>,
}

/// Runs `test` against `program`. Runtime errors end the run and are
/// captured in the returned trace.
pub fn run(program: &Program, test: &TestCase, step_limit: u64) -> RawTrace {
    let mut m = Machine {
        program,
        stack: Vec::new(),
        steps: 0,
        step_limit,
        raw: vec![None; program.functions.len()],
    };
    let mut env: HashMap<&str, Value> = HashMap::new();
    let mut error = None;
    for stmt in &test.statements {
        match stmt {
            TestStmt::Bind { var, value, .. } => {
                env.insert(var.as_str(), value.clone());
            }
            TestStmt::Invoke { function, args } => {
                let Some(index) = program.function_index(function) else {
                    continue;
                };
                let values: Vec<Value> = args
                    .iter()
                    .map(|a| match a {
                        Arg::Lit(v) => v.clone(),
                        Arg::Var(name) => env.get(name.as_str()).cloned().unwrap_or(Value::Null),
                    })
                    .collect();
                if let Err(e) = m.call(index, values) {
                    error = Some(e);
                    break;
                }
            }
        }
    }
    RawTrace {
        functions: m.raw,
        error,
        steps: m.steps,
    }
}

impl<'p> Machine<'p> {
    fn raise(&self, kind: ErrorKind) -> RuntimeError {
        let frames = self
            .stack
            .iter()
            .rev()
            .map(|f| StackFrame::new(self.program.functions[f.function].name.clone(), f.line))
            .collect();
        RuntimeError { kind, frames }
    }

    fn frame(&mut self) -> &mut Frame {
        self.stack.last_mut().expect("no active frame")
    }

    fn coverage(&mut self) -> &mut RawCoverage {
        let idx = self.stack.last().expect("no active frame").function;
        self.raw[idx].get_or_insert_with(RawCoverage::default)
    }

    fn call(&mut self, index: usize, args: Vec<Value>) -> Exec<Value> {
        let function = &self.program.functions[index];
        if args
            .iter()
            .zip(&function.params)
            .any(|(v, p)| !v.conforms_to(p.ty))
            || args.len() != function.params.len()
        {
            if self.stack.is_empty() {
                return Err(RuntimeError {
                    kind: ErrorKind::CastError,
                    frames: vec![StackFrame::new(
                        function.name.clone(),
                        function.declared_line_range.0,
                    )],
                });
            }
            return Err(self.raise(ErrorKind::CastError));
        }
        if self.stack.len() >= MAX_CALL_DEPTH {
            return Err(self.raise(ErrorKind::StackOverflow));
        }
        let vars = function
            .params
            .iter()
            .map(|p| p.name.clone())
            .zip(args)
            .collect();
        self.stack.push(Frame {
            function: index,
            line: function.declared_line_range.0,
            vars,
        });
        self.raw[index].get_or_insert_with(RawCoverage::default);
        let result = self.block(&function.body);
        match result {
            Ok(flow) => {
                self.stack.pop();
                Ok(match flow {
                    Flow::Next => Value::Null,
                    Flow::Return(v) => v,
                })
            }
            // the frame stays in the captured error; unwind it here
            Err(e) => {
                self.stack.pop();
                Err(e)
            }
        }
    }

    fn block(&mut self, body: &'p [Stmt]) -> Exec<Flow> {
        for stmt in body {
            if let Flow::Return(v) = self.statement(stmt)? {
                return Ok(Flow::Return(v));
            }
        }
        Ok(Flow::Next)
    }

    fn tick(&mut self, line: u32) -> Exec<()> {
        self.frame().line = line;
        self.coverage().lines.insert(line);
        self.steps += 1;
        if self.steps > self.step_limit {
            return Err(self.raise(ErrorKind::StepLimitExceeded));
        }
        Ok(())
    }

    fn statement(&mut self, stmt: &'p Stmt) -> Exec<Flow> {
        self.tick(stmt.line)?;
        let flow = match &stmt.kind {
            StmtKind::Let { name, value } => {
                let v = self.eval(value)?;
                self.frame().vars.insert(name.clone(), v);
                Flow::Next
            }
            StmtKind::Assign { name, index, value } => {
                match index {
                    None => {
                        let v = self.eval(value)?;
                        self.frame().vars.insert(name.clone(), v);
                    }
                    Some(index) => {
                        let i = self.eval(index)?;
                        let i = self.as_int(&i)?;
                        let v = self.eval(value)?;
                        let v = self.as_int(&v)?;
                        let current = self.frame().vars.get(name).cloned().unwrap_or(Value::Null);
                        let mut items = match current {
                            Value::IntArray(items) => items,
                            Value::Null => return Err(self.raise(ErrorKind::NullDeref)),
                            _ => return Err(self.raise(ErrorKind::CastError)),
                        };
                        if i < 0 || i as usize >= items.len() {
                            return Err(self.raise(ErrorKind::IndexOutOfBounds));
                        }
                        items[i as usize] = v;
                        self.frame().vars.insert(name.clone(), Value::IntArray(items));
                    }
                }
                Flow::Next
            }
            StmtKind::Call(expr) => {
                self.eval(expr)?;
                Flow::Next
            }
            StmtKind::Return(value) => {
                let v = match value {
                    Some(e) => self.eval(e)?,
                    None => Value::Null,
                };
                self.coverage().completed.insert(stmt.line);
                return Ok(Flow::Return(v));
            }
            StmtKind::Throw(name) => {
                self.coverage().completed.insert(stmt.line);
                return Err(self.raise(ErrorKind::Explicit(name.clone())));
            }
            StmtKind::If {
                cond,
                then_body,
                else_body,
            } => {
                let taken = self.predicate(stmt.line, cond)?;
                return if taken {
                    self.block(then_body)
                } else {
                    self.block(else_body)
                };
            }
            StmtKind::While { cond, body } => {
                let mut first = true;
                loop {
                    if !first {
                        self.tick(stmt.line)?;
                    }
                    first = false;
                    if !self.predicate(stmt.line, cond)? {
                        break;
                    }
                    if let Flow::Return(v) = self.block(body)? {
                        return Ok(Flow::Return(v));
                    }
                }
                return Ok(Flow::Next);
            }
        };
        self.coverage().completed.insert(stmt.line);
        Ok(flow)
    }

    /// Evaluates a branch condition and records the distance to both sides.
    fn predicate(&mut self, line: u32, cond: &'p Predicate) -> Exec<bool> {
        let (taken, d_true, d_false) = match cond {
            Predicate::Compare { op, lhs, rhs } => {
                let a = self.eval(lhs)?;
                let a = self.as_int(&a)?;
                let b = self.eval(rhs)?;
                let b = self.as_int(&b)?;
                (
                    op.holds(a, b),
                    branch_distance(*op, a, b, true),
                    branch_distance(*op, a, b, false),
                )
            }
            Predicate::NullCheck { expr, is_null } => {
                let v = self.eval(expr)?;
                let holds = (v == Value::Null) == *is_null;
                if holds {
                    (true, 0.0, NOT_TAKEN_CONSTANT)
                } else {
                    (false, NOT_TAKEN_CONSTANT, 0.0)
                }
            }
            Predicate::Flag(expr) => {
                let v = self.eval(expr)?;
                let flag = match v {
                    Value::Bool(b) => b as i64,
                    Value::Null => return Err(self.raise(ErrorKind::NullDeref)),
                    _ => return Err(self.raise(ErrorKind::CastError)),
                };
                (
                    flag == 1,
                    branch_distance(RelOp::Eq, flag, 1, true),
                    branch_distance(RelOp::Eq, flag, 1, false),
                )
            }
        };
        let preds = &mut self.coverage().predicates;
        for (side, d) in [(Side::True, d_true), (Side::False, d_false)] {
            preds
                .entry((line, side))
                .and_modify(|old| *old = old.min(d))
                .or_insert(d);
        }
        Ok(taken)
    }

    fn as_int(&self, v: &Value) -> Exec<i64> {
        match v {
            Value::Int(i) => Ok(*i),
            Value::Bool(b) => Ok(*b as i64),
            Value::Null => Err(self.raise(ErrorKind::NullDeref)),
            _ => Err(self.raise(ErrorKind::CastError)),
        }
    }

    fn eval(&mut self, expr: &'p Expr) -> Exec<Value> {
        Ok(match expr {
            Expr::Int(v) => Value::Int(*v),
            Expr::Str(s) => Value::Text(s.clone()),
            Expr::Bool(b) => Value::Bool(*b),
            Expr::Null => Value::Null,
            Expr::Var(name) => self
                .stack
                .last()
                .and_then(|f| f.vars.get(name))
                .cloned()
                .unwrap_or(Value::Null),
            Expr::Array(items) => {
                let mut out = Vec::with_capacity(items.len());
                for item in items {
                    let v = self.eval(item)?;
                    out.push(self.as_int(&v)?);
                }
                Value::IntArray(out)
            }
            Expr::Index(base, index) => {
                let base = self.eval(base)?;
                let i = self.eval(index)?;
                let i = self.as_int(&i)?;
                match base {
                    Value::IntArray(items) => {
                        if i < 0 || i as usize >= items.len() {
                            return Err(self.raise(ErrorKind::IndexOutOfBounds));
                        }
                        Value::Int(items[i as usize])
                    }
                    Value::Null => return Err(self.raise(ErrorKind::NullDeref)),
                    _ => return Err(self.raise(ErrorKind::CastError)),
                }
            }
            Expr::Neg(inner) => {
                let v = self.eval(inner)?;
                Value::Int(self.as_int(&v)?.wrapping_neg())
            }
            Expr::Binary(op, lhs, rhs) => {
                let a = self.eval(lhs)?;
                let b = self.eval(rhs)?;
                match (op, a, b) {
                    (BinOp::Add, Value::Text(x), Value::Text(y)) => Value::Text(x + &y),
                    (_, Value::Null, _) | (_, _, Value::Null) => {
                        return Err(self.raise(ErrorKind::NullDeref))
                    }
                    (op, a, b) => {
                        let x = self.as_int(&a)?;
                        let y = self.as_int(&b)?;
                        Value::Int(match op {
                            BinOp::Add => x.wrapping_add(y),
                            BinOp::Sub => x.wrapping_sub(y),
                            BinOp::Mul => x.wrapping_mul(y),
                            BinOp::Div | BinOp::Rem if y == 0 => {
                                return Err(self.raise(ErrorKind::DivByZero))
                            }
                            BinOp::Div => x.wrapping_div(y),
                            BinOp::Rem => x.wrapping_rem(y),
                        })
                    }
                }
            }
            Expr::Call { name, args } => {
                let mut values = Vec::with_capacity(args.len());
                for a in args {
                    values.push(self.eval(a)?);
                }
                let index = self
                    .program
                    .function_index(name)
                    .expect("calls are resolved at parse time");
                self.call(index, values)?
            }
            Expr::Builtin(Builtin::Len, inner) => match self.eval(inner)? {
                Value::Text(s) => Value::Int(s.chars().count() as i64),
                Value::IntArray(items) => Value::Int(items.len() as i64),
                Value::Null => return Err(self.raise(ErrorKind::NullDeref)),
                _ => return Err(self.raise(ErrorKind::CastError)),
            },
            Expr::Builtin(Builtin::Tag, inner) => Value::Int(self.eval(inner)?.tag()),
            Expr::Cast { ty, expr } => {
                let v = self.eval(expr)?;
                if v.conforms_to(*ty) {
                    v
                } else {
                    return Err(self.raise(ErrorKind::CastError));
                }
            }
        })
    }
}
