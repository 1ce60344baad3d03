//! The mini-language: lexer, parser, and a tracing interpreter.
//!
//! ```text
//! program   := function*
//! function  := ["priv"] "fn" IDENT "(" [param ("," param)*] ")" "{" stmt+ "}"
//! param     := IDENT ":" type
//! type      := "int" | "bool" | "text" | "int[]" | "any"
//! stmt      := "let" IDENT "=" expr ";"
//!            | IDENT ["[" expr "]"] "=" expr ";"
//!            | call ";"
//!            | "if" cond block ["else" (block | if-stmt)]
//!            | "while" cond block
//!            | "return" [expr] ";"
//!            | "throw" IDENT ";"
//! cond      := "(" expr relop expr ")" | "(" expr ")"
//! expr      := literal | IDENT | call | expr binop expr | "-" expr | expr "[" expr "]"
//!            | "[" [expr ("," expr)*] "]" | "cast" "<" type ">" "(" expr ")"
//!            | "len" "(" expr ")" | "tag" "(" expr ")"
//! ```
//!
//! Every statement starts on its own physical line; that line number is the
//! statement's identity in coverage data and stack traces.

mod ast;
pub mod interp;
mod lexer;
mod parser;
pub mod stacktrace;
mod trace;
mod value;

use thiserror::Error;

pub use ast::*;
pub use interp::DEFAULT_STEP_LIMIT;
pub use parser::RESERVED_EXCEPTIONS;
pub use stacktrace::{
    emit_stack_trace, parse_stack_trace, ErrorKind, ParsedTrace, RuntimeError, StackFrame,
    TraceFormatError,
};
pub use trace::{ExecutionTrace, FunctionCoverage};
pub use value::Value;

use crate::analysis::Subject;
use crate::search::testcase::TestCase;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LangError {
    #[error("{line}:{column}: {message}")]
    Parse {
        line: u32,
        column: u32,
        message: String,
    },
    #[error("{line}:{column}: cannot resolve `{name}`")]
    Name { line: u32, column: u32, name: String },
}

pub fn parse(source_name: &str, source: &str) -> Result<Program, LangError> {
    parser::parse(source_name, source)
}

/// Executes `test` and maps the observations onto the subject's CFGs.
/// Deterministic in `(subject, test, step_limit)`.
pub fn execute(subject: &Subject, test: &TestCase, step_limit: u64) -> ExecutionTrace {
    let raw = interp::run(&subject.program, test, step_limit);
    ExecutionTrace::assemble(raw, subject)
}
