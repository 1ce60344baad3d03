use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::minilang::{Program, SemType, Value};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arg {
    Var(String),
    Lit(Value),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestStmt {
    /// Binds a literal to a test-local variable. `ty` is the slot type the
    /// binding was generated for; mutation keeps the value within it.
    Bind {
        var: String,
        ty: SemType,
        value: Value,
    },
    Invoke {
        function: String,
        args: Vec<Arg>,
    },
}

/// A generated test: a straight-line sequence of bindings and calls.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TestCase {
    pub statements: Vec<TestStmt>,
}

impl TestCase {
    pub fn new(statements: Vec<TestStmt>) -> Self {
        TestCase { statements }
    }

    pub fn len(&self) -> usize {
        self.statements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }

    pub fn invokes(&self, function: &str) -> bool {
        self.statements
            .iter()
            .any(|s| matches!(s, TestStmt::Invoke { function: f, .. } if f == function))
    }

    /// Checks that every argument resolves to an earlier binding, every
    /// invoked function is an entry point, and argument values conform to
    /// parameter types.
    pub fn validate(&self, program: &Program) -> Result<(), String> {
        let mut bound: Vec<(String, SemType, &Value)> = Vec::new();
        for (i, stmt) in self.statements.iter().enumerate() {
            match stmt {
                TestStmt::Bind { var, ty, value } => {
                    if !value.conforms_to(*ty) {
                        return Err(format!("statement {i}: `{var}` holds {value} which is not {ty}"));
                    }
                    bound.retain(|(v, _, _)| v != var);
                    bound.push((var.clone(), *ty, value));
                }
                TestStmt::Invoke { function, args } => {
                    let f = program
                        .function(function)
                        .ok_or_else(|| format!("statement {i}: unknown function `{function}`"))?;
                    if !program.entry_names.contains(function) {
                        return Err(format!("statement {i}: `{function}` is private"));
                    }
                    if f.params.len() != args.len() {
                        return Err(format!("statement {i}: arity mismatch for `{function}`"));
                    }
                    for (param, arg) in f.params.iter().zip(args) {
                        let value = match arg {
                            Arg::Lit(v) => v,
                            Arg::Var(name) => {
                                match bound.iter().rev().find(|(v, _, _)| v == name) {
                                    Some((_, _, value)) => *value,
                                    None => {
                                        return Err(format!(
                                            "statement {i}: `{name}` is not bound"
                                        ))
                                    }
                                }
                            }
                        };
                        if !value.conforms_to(param.ty) {
                            return Err(format!(
                                "statement {i}: argument for `{}` is not {}",
                                param.name, param.ty
                            ));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Variables bound somewhere in the test.
    pub fn bound_vars(&self) -> HashSet<&str> {
        self.statements
            .iter()
            .filter_map(|s| match s {
                TestStmt::Bind { var, .. } => Some(var.as_str()),
                _ => None,
            })
            .collect()
    }

    /// Renders the test as a mini-language script.
    pub fn to_script(&self, name: &str) -> String {
        let mut out = format!("test {name} {{\n");
        for stmt in &self.statements {
            out.push_str("  ");
            out.push_str(&stmt.to_string());
            out.push('\n');
        }
        out.push_str("}\n");
        out
    }
}

impl fmt::Display for Arg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arg::Var(v) => f.write_str(v),
            Arg::Lit(v) => write!(f, "{v}"),
        }
    }
}

impl fmt::Display for TestStmt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestStmt::Bind { var, ty, value } => write!(f, "let {var}: {ty} = {value};"),
            TestStmt::Invoke { function, args } => {
                write!(f, "{function}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(");")
            }
        }
    }
}
