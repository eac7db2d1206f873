//! Recursive-descent parser with validation folded in, so every diagnostic
//! carries the position of the offending token.

use std::collections::HashSet;

use super::ast::*;
use super::error::{ParseError, ParseErrorKind};
use super::lexer::{tokenize, Tok, Token};

/// Parses and validates a program.
pub fn parse(text: &str) -> Result<SourceProgram, ParseError> {
    let tokens = tokenize(text)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        scopes: vec![Vec::new()],
        functions: Vec::new(),
        reach_labels: HashSet::new(),
        targets: Vec::new(),
        in_function: None,
        calls_allowed: true,
        user_calls: 0,
    };
    let mut inputs: Vec<InputDecl> = Vec::new();
    let mut body = Vec::new();
    while p.peek() != &Tok::Eof {
        match p.peek() {
            Tok::Input => {
                let decl = p.input_decl()?;
                inputs.push(decl);
            }
            Tok::Fn => {
                let f = p.fn_decl()?;
                p.functions.push(f);
            }
            _ => body.push(p.stmt()?),
        }
    }
    Ok(SourceProgram {
        inputs,
        functions: p.functions,
        body,
        targets: p.targets,
    })
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    scopes: Vec<Vec<String>>,
    functions: Vec<FnDecl>,
    reach_labels: HashSet<String>,
    targets: Vec<String>,
    in_function: Option<String>,
    calls_allowed: bool,
    user_calls: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.tokens[self.pos];
        (t.line, t.col)
    }

    fn err<T>(&self, kind: ParseErrorKind) -> PResult<T> {
        let (line, col) = self.here();
        Err(ParseError::new(line, col, kind))
    }

    fn advance(&mut self) -> Tok {
        let t = self.tokens[self.pos].tok.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> PResult<()> {
        if self.eat(&tok) {
            Ok(())
        } else {
            let found = self.peek().describe();
            self.err(ParseErrorKind::Syntax(format!(
                "expected {what}, found {found}"
            )))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.advance();
                Ok(name)
            }
            other => self.err(ParseErrorKind::Syntax(format!(
                "expected identifier, found {}",
                other.describe()
            ))),
        }
    }

    fn is_declared(&self, name: &str) -> bool {
        self.scopes
            .iter()
            .rev()
            .any(|s| s.iter().any(|n| n == name))
    }

    fn signed_number(&mut self) -> PResult<f64> {
        let neg = self.eat(&Tok::Minus);
        match self.peek().clone() {
            Tok::Num(v) => {
                self.advance();
                Ok(if neg { -v } else { v })
            }
            other => self.err(ParseErrorKind::Syntax(format!(
                "expected number, found {}",
                other.describe()
            ))),
        }
    }

    fn input_decl(&mut self) -> PResult<InputDecl> {
        self.expect(Tok::Input, "`input`")?;
        let (line, col) = self.here();
        let name = self.ident()?;
        if self.functions.iter().any(|f| f.name == name) {
            return Err(ParseError::new(
                line,
                col,
                ParseErrorKind::DuplicateDefinition(name),
            ));
        }
        if self.is_declared(&name) {
            return Err(ParseError::new(line, col, ParseErrorKind::Redeclared(name)));
        }
        self.expect(Tok::Colon, "`:`")?;
        let kind = match self.advance() {
            Tok::Real => ScalarKind::Real,
            Tok::Int => ScalarKind::Int,
            other => {
                return self.err(ParseErrorKind::Syntax(format!(
                    "expected `real` or `int`, found {}",
                    other.describe()
                )))
            }
        };
        self.expect(Tok::In, "`in`")?;
        self.expect(Tok::LBracket, "`[`")?;
        let lo = self.signed_number()?;
        self.expect(Tok::Comma, "`,`")?;
        let hi = self.signed_number()?;
        self.expect(Tok::RBracket, "`]`")?;
        self.expect(Tok::Semi, "`;`")?;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(ParseError::new(
                line,
                col,
                ParseErrorKind::UnboundedInput { name, lo, hi },
            ));
        }
        self.scopes[0].push(name.clone());
        Ok(InputDecl { name, kind, lo, hi })
    }

    fn fn_decl(&mut self) -> PResult<FnDecl> {
        self.expect(Tok::Fn, "`fn`")?;
        let (line, col) = self.here();
        let name = self.ident()?;
        if Builtin::from_name(&name).is_some()
            || self.functions.iter().any(|f| f.name == name)
            || self.is_declared(&name)
        {
            return Err(ParseError::new(
                line,
                col,
                ParseErrorKind::DuplicateDefinition(name),
            ));
        }
        self.expect(Tok::LParen, "`(`")?;
        let mut params: Vec<String> = Vec::new();
        if !self.eat(&Tok::RParen) {
            loop {
                let (pl, pc) = self.here();
                let p = self.ident()?;
                if params.contains(&p) {
                    return Err(ParseError::new(pl, pc, ParseErrorKind::Redeclared(p)));
                }
                params.push(p);
                if self.eat(&Tok::RParen) {
                    break;
                }
                self.expect(Tok::Comma, "`,` or `)`")?;
            }
        }
        self.expect(Tok::LBrace, "`{`")?;

        // Helpers see only their own parameters and locals.
        let saved_scopes = std::mem::replace(&mut self.scopes, vec![params.clone()]);
        self.in_function = Some(name.clone());
        let mut body = Vec::new();
        while !matches!(self.peek(), Tok::Return | Tok::Eof | Tok::RBrace) {
            body.push(self.stmt()?);
        }
        self.expect(Tok::Return, "`return` at the end of the function body")?;
        let ret = self.expr()?;
        self.expect(Tok::Semi, "`;`")?;
        self.expect(Tok::RBrace, "`}` after the return statement")?;
        self.in_function = None;
        self.scopes = saved_scopes;
        Ok(FnDecl {
            name,
            params,
            body,
            ret,
        })
    }

    fn block(&mut self) -> PResult<Vec<Stmt>> {
        self.expect(Tok::LBrace, "`{`")?;
        self.scopes.push(Vec::new());
        let mut stmts = Vec::new();
        while !self.eat(&Tok::RBrace) {
            if self.peek() == &Tok::Eof {
                return self.err(ParseErrorKind::Syntax("unclosed `{`".into()));
            }
            if matches!(self.peek(), Tok::Input | Tok::Fn) {
                return self.err(ParseErrorKind::Syntax(
                    "declarations are only allowed at the top level".into(),
                ));
            }
            stmts.push(self.stmt()?);
        }
        self.scopes.pop();
        Ok(stmts)
    }

    /// `let x = e` or `x = e`, without the trailing semicolon.
    fn simple_stmt(&mut self) -> PResult<Stmt> {
        if self.eat(&Tok::Let) {
            let (line, col) = self.here();
            let name = self.ident()?;
            self.expect(Tok::Assign, "`=`")?;
            let e = self.expr()?;
            // declared after the initializer: `let x = x + 1` is use-before-declare
            if self.is_declared(&name) {
                return Err(ParseError::new(line, col, ParseErrorKind::Redeclared(name)));
            }
            self.scopes
                .last_mut()
                .expect("scope stack")
                .push(name.clone());
            Ok(Stmt::Let(name, e))
        } else {
            let (line, col) = self.here();
            let name = self.ident()?;
            if !self.is_declared(&name) {
                return Err(ParseError::new(
                    line,
                    col,
                    ParseErrorKind::UseBeforeDeclare(name),
                ));
            }
            self.expect(Tok::Assign, "`=`")?;
            let e = self.expr()?;
            Ok(Stmt::Assign(name, e))
        }
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        match self.peek() {
            Tok::If => self.if_stmt(),
            Tok::While => {
                self.advance();
                self.expect(Tok::LParen, "`(`")?;
                let cond = self.loop_cond()?;
                self.expect(Tok::RParen, "`)`")?;
                let body = self.block()?;
                Ok(Stmt::While { cond, body })
            }
            Tok::For => {
                self.advance();
                self.expect(Tok::LParen, "`(`")?;
                // the loop variable is scoped to the loop
                self.scopes.push(Vec::new());
                let init = self.simple_stmt()?;
                self.expect(Tok::Semi, "`;`")?;
                let cond = self.loop_cond()?;
                self.expect(Tok::Semi, "`;`")?;
                let step = self.simple_stmt()?;
                if matches!(step, Stmt::Let(..)) {
                    return self.err(ParseErrorKind::Syntax(
                        "for-loop step must be an assignment".into(),
                    ));
                }
                self.expect(Tok::RParen, "`)`")?;
                let body = self.block()?;
                self.scopes.pop();
                Ok(Stmt::For {
                    init: Box::new(init),
                    cond,
                    step: Box::new(step),
                    body,
                })
            }
            Tok::Reach => {
                if self.in_function.is_some() {
                    return self.err(ParseErrorKind::ReachInFunction);
                }
                self.advance();
                self.expect(Tok::LParen, "`(`")?;
                let (line, col) = self.here();
                let label = match self.advance() {
                    Tok::Str(s) => s,
                    other => {
                        return Err(ParseError::new(
                            line,
                            col,
                            ParseErrorKind::Syntax(format!(
                                "expected string label, found {}",
                                other.describe()
                            )),
                        ))
                    }
                };
                if !self.reach_labels.insert(label.clone()) {
                    return Err(ParseError::new(
                        line,
                        col,
                        ParseErrorKind::DuplicateReachLabel(label),
                    ));
                }
                self.targets.push(label.clone());
                self.expect(Tok::RParen, "`)`")?;
                self.expect(Tok::Semi, "`;`")?;
                Ok(Stmt::Reach(label))
            }
            Tok::Return => self.err(ParseErrorKind::Syntax(
                "`return` is only allowed as the last statement of a function".into(),
            )),
            _ => {
                let s = self.simple_stmt()?;
                self.expect(Tok::Semi, "`;`")?;
                Ok(s)
            }
        }
    }

    fn if_stmt(&mut self) -> PResult<Stmt> {
        self.expect(Tok::If, "`if`")?;
        self.expect(Tok::LParen, "`(`")?;
        let (line, col) = self.here();
        let before = self.user_calls;
        let cond = self.cond()?;
        if self.user_calls > before && !matches!(cond, Cond::Cmp(..)) {
            return Err(ParseError::new(
                line,
                col,
                ParseErrorKind::CallPosition("helper".into()),
            ));
        }
        self.expect(Tok::RParen, "`)`")?;
        let then = self.block()?;
        let els = if self.eat(&Tok::Else) {
            if self.peek() == &Tok::If {
                vec![self.if_stmt()?]
            } else {
                self.block()?
            }
        } else {
            Vec::new()
        };
        Ok(Stmt::If { cond, then, els })
    }

    fn loop_cond(&mut self) -> PResult<Cond> {
        let saved = std::mem::replace(&mut self.calls_allowed, false);
        let c = self.cond();
        self.calls_allowed = saved;
        c
    }

    fn cond(&mut self) -> PResult<Cond> {
        let mut lhs = self.cond_and()?;
        while self.eat(&Tok::OrOr) {
            let rhs = self.cond_and()?;
            lhs = Cond::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn cond_and(&mut self) -> PResult<Cond> {
        let mut lhs = self.cond_not()?;
        while self.eat(&Tok::AndAnd) {
            let rhs = self.cond_not()?;
            lhs = Cond::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn cond_not(&mut self) -> PResult<Cond> {
        if self.eat(&Tok::Bang) {
            return Ok(Cond::Not(Box::new(self.cond_not()?)));
        }
        if self.peek() == &Tok::LParen {
            // Either a parenthesized condition or a comparison whose left
            // operand starts with a parenthesis; try the former first.
            let start = self.pos;
            let calls = self.user_calls;
            self.advance();
            if let Ok(c) = self.cond() {
                if self.eat(&Tok::RParen) {
                    return Ok(c);
                }
            }
            self.pos = start;
            self.user_calls = calls;
        }
        self.comparison()
    }

    fn comparison(&mut self) -> PResult<Cond> {
        let lhs = self.expr()?;
        let op = match self.peek() {
            Tok::Lt => CmpOp::Lt,
            Tok::Le => CmpOp::Le,
            Tok::Gt => CmpOp::Gt,
            Tok::Ge => CmpOp::Ge,
            Tok::EqEq => CmpOp::Eq,
            Tok::NotEq => CmpOp::Ne,
            other => {
                let found = other.describe();
                return self.err(ParseErrorKind::Syntax(format!(
                    "expected comparison operator, found {found}"
                )));
            }
        };
        self.advance();
        let rhs = self.expr()?;
        Ok(Cond::Cmp(op, lhs, rhs))
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.eat(&Tok::Minus) {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        let (line, col) = self.here();
        match self.advance() {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if self.eat(&Tok::LParen) {
                    let mut args = Vec::new();
                    if !self.eat(&Tok::RParen) {
                        loop {
                            args.push(self.expr()?);
                            if self.eat(&Tok::RParen) {
                                break;
                            }
                            self.expect(Tok::Comma, "`,` or `)`")?;
                        }
                    }
                    self.check_call(&name, args.len(), line, col)?;
                    Ok(Expr::Call(name, args))
                } else if self.is_declared(&name) {
                    Ok(Expr::Var(name))
                } else {
                    Err(ParseError::new(
                        line,
                        col,
                        ParseErrorKind::UseBeforeDeclare(name),
                    ))
                }
            }
            other => Err(ParseError::new(
                line,
                col,
                ParseErrorKind::Syntax(format!("expected expression, found {}", other.describe())),
            )),
        }
    }

    fn check_call(&mut self, name: &str, got: usize, line: usize, col: usize) -> PResult<()> {
        let at = |kind| Err(ParseError::new(line, col, kind));
        if let Some(b) = Builtin::from_name(name) {
            if b.arity() != got {
                return at(ParseErrorKind::Arity {
                    name: name.to_string(),
                    expected: b.arity(),
                    got,
                });
            }
            return Ok(());
        }
        if self.in_function.as_deref() == Some(name) {
            return at(ParseErrorKind::Recursive(name.to_string()));
        }
        let Some(f) = self.functions.iter().find(|f| f.name == name) else {
            return at(ParseErrorKind::UnknownFunction(name.to_string()));
        };
        if f.params.len() != got {
            return at(ParseErrorKind::Arity {
                name: name.to_string(),
                expected: f.params.len(),
                got,
            });
        }
        if !self.calls_allowed {
            return at(ParseErrorKind::CallPosition(name.to_string()));
        }
        self.user_calls += 1;
        Ok(())
    }
}
