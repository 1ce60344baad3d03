//! Runtime errors and the textual stack-trace format.
//!
//! ```text
//! IndexOutOfBounds
//!   at lane (router.mini:23)
//!   at route (router.mini:8)
//! ```
//!
//! The first line is the exception name. Each following line is exactly two
//! spaces, `at `, the function name, ` (`, the source name, `:`, the line and
//! `)`. Frames are listed innermost first.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::parser::RESERVED_EXCEPTIONS;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ErrorKind {
    DivByZero,
    NullDeref,
    IndexOutOfBounds,
    CastError,
    /// Synthetic: the interpreter step budget ran out.
    StepLimitExceeded,
    /// Synthetic: call nesting exceeded the interpreter's depth limit.
    StackOverflow,
    /// Raised by a `throw NAME;` statement.
    Explicit(String),
}

impl ErrorKind {
    pub fn from_name(name: &str) -> ErrorKind {
        match name {
            "DivByZero" => ErrorKind::DivByZero,
            "NullDeref" => ErrorKind::NullDeref,
            "IndexOutOfBounds" => ErrorKind::IndexOutOfBounds,
            "CastError" => ErrorKind::CastError,
            "StepLimitExceeded" => ErrorKind::StepLimitExceeded,
            "StackOverflow" => ErrorKind::StackOverflow,
            other => ErrorKind::Explicit(other.to_string()),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            ErrorKind::DivByZero => "DivByZero",
            ErrorKind::NullDeref => "NullDeref",
            ErrorKind::IndexOutOfBounds => "IndexOutOfBounds",
            ErrorKind::CastError => "CastError",
            ErrorKind::StepLimitExceeded => "StepLimitExceeded",
            ErrorKind::StackOverflow => "StackOverflow",
            ErrorKind::Explicit(name) => name,
        }
    }

    pub fn is_synthetic(&self) -> bool {
        matches!(self, ErrorKind::StepLimitExceeded | ErrorKind::StackOverflow)
    }
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StackFrame {
    pub function_name: String,
    pub line: u32,
}

impl StackFrame {
    pub fn new(function_name: impl Into<String>, line: u32) -> Self {
        StackFrame {
            function_name: function_name.into(),
            line,
        }
    }
}

/// An aborted execution: the exception and the call stack at the raise point.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RuntimeError {
    pub kind: ErrorKind,
    /// Innermost first; never empty.
    pub frames: Vec<StackFrame>,
}

/// A stack trace read back from text. Frames may name functions outside the
/// program (foreign frames); resolution happens when a crash target is built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedTrace {
    pub exception_name: String,
    pub frames: Vec<StackFrame>,
    /// Source name per frame, as written in the trace.
    pub sources: Vec<String>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TraceFormatError {
    #[error("stack trace is empty")]
    Empty,
    #[error("line {line}: invalid exception name `{text}`")]
    BadHeader { line: usize, text: String },
    #[error("line {line}: malformed frame `{text}`")]
    BadFrame { line: usize, text: String },
}

pub fn emit_stack_trace(error: &RuntimeError, source_name: &str) -> String {
    let mut out = String::from(error.kind.name());
    for frame in &error.frames {
        out.push_str(&format!(
            "\n  at {} ({}:{})",
            frame.function_name, source_name, frame.line
        ));
    }
    out
}

pub fn parse_stack_trace(text: &str) -> Result<ParsedTrace, TraceFormatError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or(TraceFormatError::Empty)?;
    if header.trim().is_empty() {
        return Err(TraceFormatError::Empty);
    }
    if !is_identifier(header) {
        return Err(TraceFormatError::BadHeader {
            line: 1,
            text: header.to_string(),
        });
    }
    let mut frames = Vec::new();
    let mut sources = Vec::new();
    for (idx, raw) in lines.enumerate() {
        let line_no = idx + 2;
        if raw.is_empty() && idx > 0 {
            // tolerate a trailing newline only
            continue;
        }
        let bad = || TraceFormatError::BadFrame {
            line: line_no,
            text: raw.to_string(),
        };
        let rest = raw.strip_prefix("  at ").ok_or_else(bad)?;
        let (func, loc) = rest.split_once(" (").ok_or_else(bad)?;
        let loc = loc.strip_suffix(')').ok_or_else(bad)?;
        let (source, line) = loc.rsplit_once(':').ok_or_else(bad)?;
        if !is_identifier(func) || source.is_empty() {
            return Err(bad());
        }
        let line: u32 = line.parse().map_err(|_| bad())?;
        if line == 0 {
            return Err(bad());
        }
        frames.push(StackFrame::new(func, line));
        sources.push(source.to_string());
    }
    if frames.is_empty() {
        return Err(TraceFormatError::BadFrame {
            line: 2,
            text: String::new(),
        });
    }
    Ok(ParsedTrace {
        exception_name: header.to_string(),
        frames,
        sources,
    })
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || c == '_')
}

impl ParsedTrace {
    pub fn kind(&self) -> ErrorKind {
        ErrorKind::from_name(&self.exception_name)
    }

    /// True for names the interpreter itself can raise.
    pub fn is_runtime_exception(&self) -> bool {
        RESERVED_EXCEPTIONS.contains(&self.exception_name.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_three_frame_trace() {
        let t = parse_stack_trace(
            "CastError\n  at fromValue (f.mini:615)\n  at fromMap (f.mini:413)",
        )
        .unwrap();
        assert_eq!(t.exception_name, "CastError");
        assert_eq!(
            t.frames,
            vec![StackFrame::new("fromValue", 615), StackFrame::new("fromMap", 413)]
        );
        assert_eq!(t.kind(), ErrorKind::CastError);
    }

    #[test]
    fn empty_text_is_rejected() {
        assert_eq!(parse_stack_trace(""), Err(TraceFormatError::Empty));
    }

    #[test]
    fn single_frame() {
        let t = parse_stack_trace("Boom\n  at f (a.mini:3)\n").unwrap();
        assert_eq!(t.frames.len(), 1);
        assert_eq!(t.kind(), ErrorKind::Explicit("Boom".into()));
    }

    #[test]
    fn frame_indentation_is_exact() {
        assert!(matches!(
            parse_stack_trace("Boom\n   at f (a.mini:3)"),
            Err(TraceFormatError::BadFrame { line: 2, .. })
        ));
        assert!(matches!(
            parse_stack_trace("Boom\n  at f(a.mini:3)"),
            Err(TraceFormatError::BadFrame { .. })
        ));
        assert!(matches!(
            parse_stack_trace("Boom\n  at f (a.mini:x)"),
            Err(TraceFormatError::BadFrame { .. })
        ));
    }

    #[test]
    fn emit_matches_wire_format() {
        let e = RuntimeError {
            kind: ErrorKind::DivByZero,
            frames: vec![StackFrame::new("div", 2), StackFrame::new("main", 7)],
        };
        assert_eq!(
            emit_stack_trace(&e, "d.mini"),
            "DivByZero\n  at div (d.mini:2)\n  at main (d.mini:7)"
        );
    }
}
