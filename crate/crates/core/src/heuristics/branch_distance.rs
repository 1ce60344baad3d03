use crate::minilang::RelOp;

/// Offset added when a relational predicate is violated.
pub const K: f64 = 1.0;

/// Distance charged to a not-taken side of a predicate that has no numeric
/// operands (null checks and boolean flags).
pub const NOT_TAKEN_CONSTANT: f64 = 1.0;

/// Korel/Tracey rule table: 0 iff evaluating `a op b` yields `desired`.
pub fn branch_distance(op: RelOp, a: i64, b: i64, desired: bool) -> f64 {
    let op = if desired { op } else { op.negate() };
    let (a, b) = (a as i128, b as i128);
    let raw: i128 = match op {
        RelOp::Eq => (a - b).abs(),
        RelOp::Ne => {
            if a == b {
                return K;
            }
            0
        }
        RelOp::Lt => {
            if a >= b {
                return (a - b) as f64 + K;
            }
            0
        }
        RelOp::Le => {
            if a > b {
                return (a - b) as f64 + K;
            }
            0
        }
        RelOp::Gt => {
            if a <= b {
                return (b - a) as f64 + K;
            }
            0
        }
        RelOp::Ge => {
            if a < b {
                return (b - a) as f64 + K;
            }
            0
        }
    };
    raw as f64
}

/// Normalization into `[0, 1)`.
pub fn alpha(x: f64) -> f64 {
    x / (x + 1.0)
}
