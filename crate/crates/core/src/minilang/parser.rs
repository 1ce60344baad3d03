use std::collections::{BTreeSet, HashMap, HashSet};

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::LangError;

/// Exception names produced by the runtime; `throw` may not reuse them.
pub const RESERVED_EXCEPTIONS: &[&str] = &[
    "DivByZero",
    "NullDeref",
    "IndexOutOfBounds",
    "CastError",
    "StepLimitExceeded",
    "StackOverflow",
];

const BUILTINS: &[&str] = &["len", "tag"];

pub fn parse(source_name: &str, source: &str) -> Result<Program, LangError> {
    let tokens = tokenize(source)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        scope: HashSet::new(),
        calls: Vec::new(),
        last_line: 0,
    };
    let mut functions: Vec<Function> = Vec::new();
    let mut seen: HashMap<String, u32> = HashMap::new();
    while parser.peek() != &Tok::Eof {
        let (function, line, column) = parser.function()?;
        if BUILTINS.contains(&function.name.as_str()) {
            return Err(LangError::Parse {
                line,
                column,
                message: format!("`{}` is a builtin and cannot be redefined", function.name),
            });
        }
        if let Some(prev) = seen.insert(function.name.clone(), line) {
            return Err(LangError::Parse {
                line,
                column,
                message: format!(
                    "duplicate function `{}` (first defined on line {prev})",
                    function.name
                ),
            });
        }
        functions.push(function);
    }
    if functions.is_empty() {
        return Err(LangError::Parse {
            line: 1,
            column: 1,
            message: "program declares no functions".into(),
        });
    }
    for call in &parser.calls {
        match functions.iter().find(|f| f.name == call.name) {
            None => {
                return Err(LangError::Name {
                    line: call.line,
                    column: call.column,
                    name: call.name.clone(),
                })
            }
            Some(f) if f.params.len() != call.arity => {
                return Err(LangError::Parse {
                    line: call.line,
                    column: call.column,
                    message: format!(
                        "`{}` takes {} argument(s), {} given",
                        call.name,
                        f.params.len(),
                        call.arity
                    ),
                })
            }
            Some(_) => {}
        }
    }
    let entry_names: BTreeSet<String> = functions
        .iter()
        .filter(|f| !f.private)
        .map(|f| f.name.clone())
        .collect();
    Ok(Program {
        source_name: source_name.to_string(),
        functions,
        entry_names,
    })
}

struct PendingCall {
    name: String,
    arity: usize,
    line: u32,
    column: u32,
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    /// Variables visible at the current point of the function being parsed.
    scope: HashSet<String>,
    calls: Vec<PendingCall>,
    /// Line of the previous statement in the current function.
    last_line: u32,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let idx = (self.pos + offset).min(self.tokens.len() - 1);
        &self.tokens[idx].tok
    }

    fn here(&self) -> (u32, u32) {
        let t = &self.tokens[self.pos];
        (t.line, t.column)
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, LangError> {
        let (line, column) = self.here();
        Err(LangError::Parse {
            line,
            column,
            message: message.into(),
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<Token, LangError> {
        if *self.peek() == tok {
            Ok(self.bump())
        } else {
            self.error(format!("expected {what}, found {}", describe(self.peek())))
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, u32, u32), LangError> {
        let (line, column) = self.here();
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.bump();
                Ok((name, line, column))
            }
            other => self.error(format!("expected {what}, found {}", describe(&other))),
        }
    }

    fn function(&mut self) -> Result<(Function, u32, u32), LangError> {
        let (first_line, _) = self.here();
        let private = if *self.peek() == Tok::Priv {
            self.bump();
            true
        } else {
            false
        };
        self.expect(Tok::Fn, "`fn`")?;
        let (name, line, column) = self.ident("function name")?;
        self.expect(Tok::LParen, "`(`")?;
        let mut params: Vec<Param> = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                let (pname, pl, pc) = self.ident("parameter name")?;
                self.expect(Tok::Colon, "`:`")?;
                let ty = self.sem_type()?;
                if params.iter().any(|p| p.name == pname) {
                    return Err(LangError::Parse {
                        line: pl,
                        column: pc,
                        message: format!("duplicate parameter `{pname}`"),
                    });
                }
                params.push(Param { name: pname, ty });
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "`)`")?;
        self.scope = params.iter().map(|p| p.name.clone()).collect();
        self.last_line = first_line.saturating_sub(1);
        self.expect(Tok::LBrace, "`{`")?;
        let body = self.block_body()?;
        let close = self.expect(Tok::RBrace, "`}`")?;
        if body.is_empty() {
            return Err(LangError::Parse {
                line,
                column,
                message: format!("function `{name}` has an empty body"),
            });
        }
        Ok((
            Function {
                name,
                params,
                body,
                declared_line_range: (first_line, close.line),
                private,
            },
            line,
            column,
        ))
    }

    fn sem_type(&mut self) -> Result<SemType, LangError> {
        let (name, line, column) = self.ident("type")?;
        let ty = match name.as_str() {
            "int" => {
                if *self.peek() == Tok::LBracket && *self.peek_at(1) == Tok::RBracket {
                    self.bump();
                    self.bump();
                    SemType::IntArray
                } else {
                    SemType::Int
                }
            }
            "bool" => SemType::Bool,
            "text" => SemType::Text,
            "any" => SemType::Any,
            other => {
                return Err(LangError::Parse {
                    line,
                    column,
                    message: format!("unknown type `{other}`"),
                })
            }
        };
        Ok(ty)
    }

    /// Statements up to (not including) the closing `}`.
    fn block_body(&mut self) -> Result<Vec<Stmt>, LangError> {
        let mut body: Vec<Stmt> = Vec::new();
        while *self.peek() != Tok::RBrace {
            if *self.peek() == Tok::Eof {
                return self.error("unbalanced braces: missing `}`");
            }
            if body.last().is_some_and(always_exits) {
                return self.error("unreachable statement");
            }
            let stmt = self.statement()?;
            body.push(stmt);
        }
        Ok(body)
    }

    fn braced(&mut self) -> Result<Vec<Stmt>, LangError> {
        self.expect(Tok::LBrace, "`{`")?;
        let body = self.block_body()?;
        self.expect(Tok::RBrace, "`}`")?;
        Ok(body)
    }

    fn statement(&mut self) -> Result<Stmt, LangError> {
        let (line, _) = self.here();
        if line <= self.last_line {
            return self.error("each statement must start on its own line");
        }
        self.last_line = line;
        let kind = match self.peek().clone() {
            Tok::Let => {
                self.bump();
                let (name, _, _) = self.ident("variable name")?;
                self.expect(Tok::Assign, "`=`")?;
                let value = self.expr()?;
                self.expect(Tok::Semi, "`;`")?;
                self.scope.insert(name.clone());
                StmtKind::Let { name, value }
            }
            Tok::If => self.if_statement()?,
            Tok::While => {
                self.bump();
                let cond = self.predicate()?;
                let body = self.braced()?;
                StmtKind::While { cond, body }
            }
            Tok::Return => {
                self.bump();
                let value = if *self.peek() == Tok::Semi {
                    None
                } else {
                    Some(self.expr()?)
                };
                self.expect(Tok::Semi, "`;`")?;
                StmtKind::Return(value)
            }
            Tok::Throw => {
                self.bump();
                let (name, l, c) = self.ident("exception name")?;
                if RESERVED_EXCEPTIONS.contains(&name.as_str()) {
                    return Err(LangError::Parse {
                        line: l,
                        column: c,
                        message: format!("`{name}` is reserved for runtime errors"),
                    });
                }
                self.expect(Tok::Semi, "`;`")?;
                StmtKind::Throw(name)
            }
            Tok::Ident(name) => {
                if *self.peek_at(1) == Tok::LParen {
                    let call = self.expr()?;
                    if !matches!(call, Expr::Call { .. }) {
                        return self.error("only calls may be used as statements");
                    }
                    self.expect(Tok::Semi, "`;`")?;
                    StmtKind::Call(call)
                } else {
                    let (_, l, c) = self.ident("variable")?;
                    if !self.scope.contains(&name) {
                        return Err(LangError::Name {
                            line: l,
                            column: c,
                            name,
                        });
                    }
                    let index = if *self.peek() == Tok::LBracket {
                        self.bump();
                        let idx = self.expr()?;
                        self.expect(Tok::RBracket, "`]`")?;
                        Some(idx)
                    } else {
                        None
                    };
                    self.expect(Tok::Assign, "`=`")?;
                    let value = self.expr()?;
                    self.expect(Tok::Semi, "`;`")?;
                    StmtKind::Assign { name, index, value }
                }
            }
            other => return self.error(format!("expected statement, found {}", describe(&other))),
        };
        Ok(Stmt { line, kind })
    }

    fn if_statement(&mut self) -> Result<StmtKind, LangError> {
        self.expect(Tok::If, "`if`")?;
        let cond = self.predicate()?;
        let then_body = self.braced()?;
        let else_body = if *self.peek() == Tok::Else {
            self.bump();
            if *self.peek() == Tok::If {
                let (line, _) = self.here();
                if line <= self.last_line {
                    return self.error("each statement must start on its own line");
                }
                self.last_line = line;
                let nested = self.if_statement()?;
                vec![Stmt { line, kind: nested }]
            } else {
                self.braced()?
            }
        } else {
            Vec::new()
        };
        Ok(StmtKind::If {
            cond,
            then_body,
            else_body,
        })
    }

    fn predicate(&mut self) -> Result<Predicate, LangError> {
        self.expect(Tok::LParen, "`(`")?;
        let lhs = self.expr()?;
        let op = match self.peek() {
            Tok::EqEq => Some(RelOp::Eq),
            Tok::NotEq => Some(RelOp::Ne),
            Tok::Lt => Some(RelOp::Lt),
            Tok::Le => Some(RelOp::Le),
            Tok::Gt => Some(RelOp::Gt),
            Tok::Ge => Some(RelOp::Ge),
            _ => None,
        };
        let pred = match op {
            None => Predicate::Flag(lhs),
            Some(op) => {
                self.bump();
                let rhs = self.expr()?;
                match (op, &lhs, &rhs) {
                    (RelOp::Eq | RelOp::Ne, _, Expr::Null) => Predicate::NullCheck {
                        expr: lhs,
                        is_null: op == RelOp::Eq,
                    },
                    (RelOp::Eq | RelOp::Ne, Expr::Null, _) => Predicate::NullCheck {
                        expr: rhs,
                        is_null: op == RelOp::Eq,
                    },
                    (_, Expr::Null, _) | (_, _, Expr::Null) => {
                        return self.error("`null` may only be compared with == or !=")
                    }
                    _ => Predicate::Compare { op, lhs, rhs },
                }
            }
        };
        if matches!(self.peek(), Tok::EqEq | Tok::NotEq | Tok::Lt | Tok::Le | Tok::Gt | Tok::Ge) {
            return self.error("conditions are a single comparison; nest `if`s instead");
        }
        self.expect(Tok::RParen, "`)`")?;
        Ok(pred)
    }

    fn expr(&mut self) -> Result<Expr, LangError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, LangError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                Tok::Percent => BinOp::Rem,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, LangError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            let inner = self.unary()?;
            return Ok(match inner {
                Expr::Int(v) => Expr::Int(v.wrapping_neg()),
                other => Expr::Neg(Box::new(other)),
            });
        }
        let mut e = self.primary()?;
        while *self.peek() == Tok::LBracket {
            self.bump();
            let idx = self.expr()?;
            self.expect(Tok::RBracket, "`]`")?;
            e = Expr::Index(Box::new(e), Box::new(idx));
        }
        Ok(e)
    }

    fn primary(&mut self) -> Result<Expr, LangError> {
        let (line, column) = self.here();
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr::Int(v))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Expr::Str(s))
            }
            Tok::True => {
                self.bump();
                Ok(Expr::Bool(true))
            }
            Tok::False => {
                self.bump();
                Ok(Expr::Bool(false))
            }
            Tok::Null => {
                self.bump();
                Ok(Expr::Null)
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::LBracket => {
                self.bump();
                let mut items = Vec::new();
                if *self.peek() != Tok::RBracket {
                    loop {
                        items.push(self.expr()?);
                        if *self.peek() == Tok::Comma {
                            self.bump();
                        } else {
                            break;
                        }
                    }
                }
                self.expect(Tok::RBracket, "`]`")?;
                Ok(Expr::Array(items))
            }
            Tok::Cast => {
                self.bump();
                self.expect(Tok::Lt, "`<`")?;
                let ty = self.sem_type()?;
                self.expect(Tok::Gt, "`>`")?;
                self.expect(Tok::LParen, "`(`")?;
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(Expr::Cast {
                    ty,
                    expr: Box::new(e),
                })
            }
            Tok::Ident(name) => {
                self.bump();
                if *self.peek() != Tok::LParen {
                    if !self.scope.contains(&name) {
                        return Err(LangError::Name { line, column, name });
                    }
                    return Ok(Expr::Var(name));
                }
                self.bump();
                let mut args = Vec::new();
                if *self.peek() != Tok::RParen {
                    loop {
                        args.push(self.expr()?);
                        if *self.peek() == Tok::Comma {
                            self.bump();
                        } else {
                            break;
                        }
                    }
                }
                self.expect(Tok::RParen, "`)`")?;
                let builtin = match name.as_str() {
                    "len" => Some(Builtin::Len),
                    "tag" => Some(Builtin::Tag),
                    _ => None,
                };
                if let Some(b) = builtin {
                    if args.len() != 1 {
                        return Err(LangError::Parse {
                            line,
                            column,
                            message: format!("`{name}` takes exactly one argument"),
                        });
                    }
                    return Ok(Expr::Builtin(b, Box::new(args.pop().unwrap())));
                }
                self.calls.push(PendingCall {
                    name: name.clone(),
                    arity: args.len(),
                    line,
                    column,
                });
                Ok(Expr::Call { name, args })
            }
            other => self.error(format!("expected expression, found {}", describe(&other))),
        }
    }
}

/// True when control can never fall through past `stmt`.
fn always_exits(stmt: &Stmt) -> bool {
    match &stmt.kind {
        StmtKind::Return(_) | StmtKind::Throw(_) => true,
        StmtKind::If {
            then_body,
            else_body,
            ..
        } => {
            then_body.last().is_some_and(always_exits) && else_body.last().is_some_and(always_exits)
        }
        _ => false,
    }
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Ident(s) => format!("identifier `{s}`"),
        Tok::Int(v) => format!("integer `{v}`"),
        Tok::Str(_) => "string literal".into(),
        Tok::Eof => "end of input".into(),
        other => format!("{other:?}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_program() {
        let p = parse("m.mini", "fn f(a:int){ return a; }").unwrap();
        assert_eq!(p.functions.len(), 1);
        assert_eq!(p.functions[0].body.len(), 1);
        assert_eq!(p.functions[0].body[0].line, 1);
        assert!(p.entry_names.contains("f"));
    }

    #[test]
    fn unbalanced_brace_reports_line() {
        let src = "fn f(a:int) {\n  if (a < 1) {\n    return 1;\n\n";
        match parse("m.mini", src) {
            Err(LangError::Parse { line, message, .. }) => {
                assert_eq!(line, 5);
                assert!(message.contains("unbalanced"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn undeclared_variable_is_a_name_error() {
        let err = parse("m.mini", "fn f(a:int) {\n  return b;\n}").unwrap_err();
        assert_eq!(
            err,
            LangError::Name {
                line: 2,
                column: 10,
                name: "b".into()
            }
        );
    }

    #[test]
    fn unknown_function_is_a_name_error() {
        let err = parse("m.mini", "fn f(a:int) {\n  g(a);\n}").unwrap_err();
        assert!(matches!(err, LangError::Name { line: 2, .. }));
    }

    #[test]
    fn duplicate_functions_rejected() {
        let err = parse("m.mini", "fn f() {\n return 1;\n}\nfn f() {\n return 2;\n}").unwrap_err();
        assert!(matches!(err, LangError::Parse { line: 4, .. }));
    }

    #[test]
    fn statements_need_their_own_lines() {
        let err = parse("m.mini", "fn f() {\n let a = 1; let b = 2;\n}").unwrap_err();
        assert!(matches!(err, LangError::Parse { line: 2, .. }));
    }

    #[test]
    fn short_circuit_connectives_are_not_part_of_the_language() {
        assert!(parse("m.mini", "fn f(a:int) {\n if (a < 1 < 2) {\n return 1;\n }\n return 0;\n}").is_err());
    }

    #[test]
    fn unreachable_code_rejected() {
        let src = "fn f(a:int) {\n if (a < 1) {\n  return 1;\n } else {\n  throw Oops;\n }\n return 0;\n}";
        assert!(matches!(parse("m.mini", src), Err(LangError::Parse { line: 7, .. })));
    }

    #[test]
    fn reserved_exception_names() {
        assert!(parse("m.mini", "fn f() {\n throw CastError;\n}").is_err());
    }

    #[test]
    fn else_if_nests_in_else_branch() {
        let src = "fn f(a:int) {\n if (a < 1) {\n  return 1;\n } else if (a > 5) {\n  return 2;\n }\n return 3;\n}";
        let p = parse("m.mini", src).unwrap();
        match &p.functions[0].body[0].kind {
            StmtKind::If { else_body, .. } => {
                assert_eq!(else_body.len(), 1);
                assert_eq!(else_body[0].line, 4);
                assert!(matches!(else_body[0].kind, StmtKind::If { .. }));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn null_checks_become_their_own_predicate() {
        let src = "fn f(a:text) {\n if (a != null) {\n  return 1;\n }\n return 0;\n}";
        let p = parse("m.mini", src).unwrap();
        match &p.functions[0].body[0].kind {
            StmtKind::If { cond, .. } => assert_eq!(
                cond,
                &Predicate::NullCheck {
                    expr: Expr::Var("a".into()),
                    is_null: false
                }
            ),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn priv_functions_are_not_entries() {
        let p = parse("m.mini", "priv fn g() {\n return 1;\n}\nfn f() {\n return g();\n}").unwrap();
        assert_eq!(p.entry_names.iter().collect::<Vec<_>>(), vec!["f"]);
        assert_eq!(p.functions[0].declared_line_range, (1, 3));
    }
}
