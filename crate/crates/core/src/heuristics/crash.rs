use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::branch_distance::alpha;
use super::objective::line_fitness;
use crate::analysis::Subject;
use crate::minilang::{ExecutionTrace, ParsedTrace, StackFrame};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CrashTargetError {
    #[error("target frame {index} is outside the trace's {len} frames")]
    FrameOutOfRange { index: usize, len: usize },
    #[error("frame {index} names unknown function `{function}`")]
    UnknownFunction { index: usize, function: String },
    #[error("frame {index} points at line {line}, which is not a statement of `{function}`")]
    BadLine {
        index: usize,
        function: String,
        line: u32,
    },
}

/// A crash to reproduce: the given stack trace and the frame whose function
/// acts as the unit under test.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrashTarget {
    /// Innermost first; frames above the target may be foreign.
    pub frames: Vec<StackFrame>,
    pub exception_name: String,
    /// 1-based, counted from the innermost frame.
    pub target_frame_index: usize,
}

impl CrashTarget {
    pub fn new(subject: &Subject, trace: &ParsedTrace, target_frame_index: usize) -> Result<Self, CrashTargetError> {
        if target_frame_index == 0 || target_frame_index > trace.frames.len() {
            return Err(CrashTargetError::FrameOutOfRange {
                index: target_frame_index,
                len: trace.frames.len(),
            });
        }
        for (i, frame) in trace.frames[..target_frame_index].iter().enumerate() {
            let Some(f) = subject.function(&frame.function_name) else {
                return Err(CrashTargetError::UnknownFunction {
                    index: i + 1,
                    function: frame.function_name.clone(),
                });
            };
            if !f.statement_lines().contains(&frame.line) {
                return Err(CrashTargetError::BadLine {
                    index: i + 1,
                    function: frame.function_name.clone(),
                    line: frame.line,
                });
            }
        }
        Ok(CrashTarget {
            frames: trace.frames.clone(),
            exception_name: trace.exception_name.clone(),
            target_frame_index,
        })
    }

    /// Frames from the innermost up to and including the target frame.
    pub fn relevant(&self) -> &[StackFrame] {
        &self.frames[..self.target_frame_index]
    }

    pub fn target_frame(&self) -> &StackFrame {
        &self.frames[self.target_frame_index - 1]
    }

    pub fn target_function(&self) -> &str {
        &self.target_frame().function_name
    }

    /// The observed exception has the given type and its stack matches
    /// exactly up to the target frame.
    pub fn reproduced_by(&self, trace: &ExecutionTrace) -> bool {
        trace.error.as_ref().is_some_and(|e| {
            e.kind.name() == self.exception_name
                && frame_lcp(&self.frames, &e.frames, self.target_frame_index) == self.target_frame_index
        })
    }
}

/// Consecutive exact (function, line) matches, starting at the target frame
/// and moving inward, with both stacks aligned at their innermost frame.
pub fn frame_lcp(given: &[StackFrame], observed: &[StackFrame], target_frame_index: usize) -> usize {
    let k = target_frame_index.min(given.len());
    (0..k)
        .rev()
        .take_while(|&i| observed.get(i) == Some(&given[i]))
        .count()
}

fn frame_mismatch(given: &StackFrame, observed: Option<&StackFrame>) -> f64 {
    match observed {
        Some(o) if o == given => 0.0,
        Some(o) if o.function_name == given.function_name => 0.5,
        _ => 1.0,
    }
}

/// Three-case weighted sum: distance to the target line, then the exception
/// type, then stack similarity. Ranges over `[0, 6]`.
pub fn weighted_sum(subject: &Subject, crash: &CrashTarget, trace: &ExecutionTrace) -> f64 {
    let target = crash.target_frame();
    if !trace.covers_line(&target.function_name, target.line) {
        let d_s = alpha(line_fitness(subject, &target.function_name, target.line, trace).scalar());
        return 3.0 * d_s + 2.0 + 1.0;
    }
    let Some(err) = trace.error.as_ref().filter(|e| e.kind.name() == crash.exception_name) else {
        return 2.0 + 1.0;
    };
    let mismatch: f64 = crash
        .relevant()
        .iter()
        .enumerate()
        .map(|(i, g)| frame_mismatch(g, err.frames.get(i)))
        .sum();
    alpha(mismatch)
}

/// Stack-trace distance: frames still to cover from the target frame inward,
/// refined by the statement distance of the first uncovered one; once all
/// are covered, 1 unless the exception and stack match.
pub fn st_distance(subject: &Subject, crash: &CrashTarget, trace: &ExecutionTrace) -> f64 {
    let k = crash.target_frame_index;
    let frames = crash.relevant();
    let covered = (0..k)
        .rev()
        .take_while(|&i| trace.covers_line(&frames[i].function_name, frames[i].line))
        .count();
    if covered < k {
        let next = &frames[k - 1 - covered];
        let sd = statement_distance(subject, next, trace);
        return (k - covered) as f64 - (1.0 - sd);
    }
    if crash.reproduced_by(trace) {
        0.0
    } else {
        1.0
    }
}

/// Normalized distance to executing a frame's statement, in `[0, 1)`.
pub fn statement_distance(subject: &Subject, frame: &StackFrame, trace: &ExecutionTrace) -> f64 {
    alpha(line_fitness(subject, &frame.function_name, frame.line, trace).scalar())
}

/// The statement crash-mode BBC should compare progress towards: the first
/// uncovered frame under STD, or the target line under the weighted sum
/// while it has not been reached.
pub fn bbc_target<'a>(crash: &'a CrashTarget, trace: &ExecutionTrace, std_mode: bool) -> Option<&'a StackFrame> {
    let frames = crash.relevant();
    if std_mode {
        (0..frames.len())
            .rev()
            .map(|i| &frames[i])
            .find(|f| !trace.covers_line(&f.function_name, f.line))
    } else {
        let t = crash.target_frame();
        (!trace.covers_line(&t.function_name, t.line)).then_some(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(name: &str, line: u32) -> StackFrame {
        StackFrame::new(name, line)
    }

    #[test]
    fn lcp_examples() {
        let given = vec![f("c", 3), f("b", 2), f("a", 1)];
        assert_eq!(frame_lcp(&given, &given, 3), 3);
        assert_eq!(frame_lcp(&given, &[f("x", 9), f("y", 8), f("z", 7)], 3), 0);
        let near = vec![f("c", 4), f("b", 2), f("a", 1)];
        assert_eq!(frame_lcp(&given, &near, 3), 2);
        let off = vec![f("c", 3), f("b", 5), f("a", 1)];
        assert_eq!(frame_lcp(&given, &off, 3), 1);
        assert_eq!(frame_lcp(&given, &given[..2], 3), 0);
    }

    #[test]
    fn per_frame_mismatch_grades() {
        assert_eq!(frame_mismatch(&f("a", 1), Some(&f("a", 1))), 0.0);
        assert_eq!(frame_mismatch(&f("a", 1), Some(&f("a", 2))), 0.5);
        assert_eq!(frame_mismatch(&f("a", 1), Some(&f("b", 1))), 1.0);
        assert_eq!(frame_mismatch(&f("a", 1), None), 1.0);
    }
}
