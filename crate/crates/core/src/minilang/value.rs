use std::fmt;

use serde::{Deserialize, Serialize};

use super::ast::SemType;

/// A runtime value. Values are copied on assignment and on call; there is no aliasing.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Value {
    Null,
    Int(i64),
    Bool(bool),
    Text(String),
    IntArray(Vec<i64>),
}

impl Value {
    /// Numeric code returned by the `tag` builtin.
    pub fn tag(&self) -> i64 {
        match self {
            Value::Null => 0,
            Value::Int(_) => 1,
            Value::Bool(_) => 2,
            Value::Text(_) => 3,
            Value::IntArray(_) => 4,
        }
    }

    pub fn concrete_type(&self) -> Option<SemType> {
        match self {
            Value::Null => None,
            Value::Int(_) => Some(SemType::Int),
            Value::Bool(_) => Some(SemType::Bool),
            Value::Text(_) => Some(SemType::Text),
            Value::IntArray(_) => Some(SemType::IntArray),
        }
    }

    /// Whether the value may be bound to a parameter of type `ty`.
    pub fn conforms_to(&self, ty: SemType) -> bool {
        match (ty, self) {
            (SemType::Any, _) => true,
            (_, Value::Null) => ty.nullable(),
            (ty, v) => v.concrete_type() == Some(ty),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => f.write_str("null"),
            Value::Int(v) => write!(f, "{v}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Text(s) => write!(f, "{s:?}"),
            Value::IntArray(items) => {
                f.write_str("[")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("]")
            }
        }
    }
}
