use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// A parsed `.mini` module.
#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub source_name: String,
    pub functions: Vec<Function>,
    /// Functions a test may invoke directly (everything not declared `priv`).
    pub entry_names: BTreeSet<String>,
}

impl Program {
    pub fn function(&self, name: &str) -> Option<&Function> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn function_index(&self, name: &str) -> Option<usize> {
        self.functions.iter().position(|f| f.name == name)
    }

    pub fn entries(&self) -> impl Iterator<Item = &Function> {
        self.functions
            .iter()
            .filter(move |f| self.entry_names.contains(&f.name))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Function {
    pub name: String,
    pub params: Vec<Param>,
    pub body: Vec<Stmt>,
    /// Line of the `fn` keyword and line of the closing brace.
    pub declared_line_range: (u32, u32),
    pub private: bool,
}

impl Function {
    /// Every statement line in source order, including nested bodies.
    pub fn statement_lines(&self) -> Vec<u32> {
        let mut lines = Vec::new();
        collect_lines(&self.body, &mut lines);
        lines
    }

    pub fn contains_line(&self, line: u32) -> bool {
        let (lo, hi) = self.declared_line_range;
        (lo..=hi).contains(&line)
    }
}

fn collect_lines(body: &[Stmt], out: &mut Vec<u32>) {
    for stmt in body {
        out.push(stmt.line);
        match &stmt.kind {
            StmtKind::If {
                then_body,
                else_body,
                ..
            } => {
                collect_lines(then_body, out);
                collect_lines(else_body, out);
            }
            StmtKind::While { body, .. } => collect_lines(body, out),
            _ => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub ty: SemType,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SemType {
    Int,
    Bool,
    Text,
    IntArray,
    Any,
}

impl SemType {
    pub fn keyword(self) -> &'static str {
        match self {
            SemType::Int => "int",
            SemType::Bool => "bool",
            SemType::Text => "text",
            SemType::IntArray => "int[]",
            SemType::Any => "any",
        }
    }

    /// Whether `null` inhabits the type.
    pub fn nullable(self) -> bool {
        matches!(self, SemType::Text | SemType::IntArray | SemType::Any)
    }
}

impl fmt::Display for SemType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub line: u32,
    pub kind: StmtKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Let {
        name: String,
        value: Expr,
    },
    Assign {
        name: String,
        index: Option<Expr>,
        value: Expr,
    },
    If {
        cond: Predicate,
        then_body: Vec<Stmt>,
        else_body: Vec<Stmt>,
    },
    While {
        cond: Predicate,
        body: Vec<Stmt>,
    },
    /// A call evaluated for its effects.
    Call(Expr),
    Return(Option<Expr>),
    Throw(String),
}

impl StmtKind {
    pub fn is_terminator(&self) -> bool {
        matches!(self, StmtKind::Return(_) | StmtKind::Throw(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RelOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl RelOp {
    pub fn negate(self) -> RelOp {
        match self {
            RelOp::Eq => RelOp::Ne,
            RelOp::Ne => RelOp::Eq,
            RelOp::Lt => RelOp::Ge,
            RelOp::Ge => RelOp::Lt,
            RelOp::Le => RelOp::Gt,
            RelOp::Gt => RelOp::Le,
        }
    }

    pub fn holds(self, a: i64, b: i64) -> bool {
        match self {
            RelOp::Eq => a == b,
            RelOp::Ne => a != b,
            RelOp::Lt => a < b,
            RelOp::Le => a <= b,
            RelOp::Gt => a > b,
            RelOp::Ge => a >= b,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            RelOp::Eq => "==",
            RelOp::Ne => "!=",
            RelOp::Lt => "<",
            RelOp::Le => "<=",
            RelOp::Gt => ">",
            RelOp::Ge => ">=",
        }
    }
}

/// A single branch condition. There are no `&&`/`||` connectives.
#[derive(Debug, Clone, PartialEq)]
pub enum Predicate {
    Compare { op: RelOp, lhs: Expr, rhs: Expr },
    /// `e == null` (`is_null = true`) or `e != null`.
    NullCheck { expr: Expr, is_null: bool },
    /// A bare boolean operand, `if (flag)`.
    Flag(Expr),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    /// Length of a text or an array.
    Len,
    /// Runtime type tag: 0 null, 1 int, 2 bool, 3 text, 4 int[].
    Tag,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Int(i64),
    Str(String),
    Bool(bool),
    Null,
    Var(String),
    Array(Vec<Expr>),
    Index(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call { name: String, args: Vec<Expr> },
    Builtin(Builtin, Box<Expr>),
    Cast { ty: SemType, expr: Box<Expr> },
}
