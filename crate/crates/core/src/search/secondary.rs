use crate::analysis::Subject;
use crate::bbc::{ActiveAge, BbcCounters, BbcGate, BbcInput};
use crate::minilang::ExecutionTrace;

/// What a tie is about: reaching `line` of `function`, for an objective
/// that has been active for `age`.
#[derive(Debug, Clone, Copy)]
pub struct TieContext<'a> {
    pub subject: &'a Subject,
    pub function: &'a str,
    pub line: u32,
    pub age: ActiveAge,
}

/// Ranks two executions whose primary fitness is equal.
pub trait SecondaryObjective {
    /// Negative prefers `a`, positive prefers `b`, 0 is a tie.
    fn compare(
        &mut self,
        ctx: &TieContext<'_>,
        a: &ExecutionTrace,
        b: &ExecutionTrace,
        counters: &mut BbcCounters,
    ) -> i64;
}

/// The baseline: no secondary comparison at all, so ties fall through to
/// test length. The engines are generic over the secondary objective, so
/// with this type the BBC hook is not compiled into the search loop.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoSecondary;

impl SecondaryObjective for NoSecondary {
    fn compare(&mut self, _: &TieContext<'_>, _: &ExecutionTrace, _: &ExecutionTrace, _: &mut BbcCounters) -> i64 {
        0
    }
}

/// BBC behind its sleep and usage-rate gate.
#[derive(Debug, Clone)]
pub struct GatedBbc(pub BbcGate);

impl SecondaryObjective for GatedBbc {
    fn compare(
        &mut self,
        ctx: &TieContext<'_>,
        a: &ExecutionTrace,
        b: &ExecutionTrace,
        counters: &mut BbcCounters,
    ) -> i64 {
        let input = BbcInput {
            trace1: a,
            trace2: b,
            method: ctx.function,
            line: ctx.line,
        };
        self.0.compare(ctx.subject, &input, ctx.age, counters)
    }
}
