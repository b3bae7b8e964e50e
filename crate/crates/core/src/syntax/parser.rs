//! Recursive-descent parser for the Python subset.

use std::collections::BTreeSet;
use std::rc::Rc;

use num_bigint::BigInt;
use num_traits::Num;
use thiserror::Error;

use super::ast::*;
use super::token::{tokenize, LexError, Token, TokenKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("lex error: {0}")]
    Lex(#[from] LexError),
    #[error("line {line}: syntax error: {message}")]
    Syntax {
        line: u32,
        col: u32,
        message: String,
        expected: Vec<String>,
    },
    #[error("line {line}: unsupported construct: {construct}")]
    Unsupported { construct: String, line: u32 },
}

impl ParseError {
    pub fn line(&self) -> u32 {
        match self {
            ParseError::Lex(e) => e.line(),
            ParseError::Syntax { line, .. } | ParseError::Unsupported { line, .. } => *line,
        }
    }
}

type PResult<T> = Result<T, ParseError>;

const KEYWORDS: &[&str] = &[
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class",
    "continue", "def", "del", "elif", "else", "except", "finally", "for", "from", "global",
    "if", "import", "in", "is", "lambda", "nonlocal", "not", "or", "pass", "raise", "return",
    "try", "while", "with", "yield",
];

fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

/// Parse a complete program.
pub fn parse(text: &str) -> PResult<SyntaxTree> {
    let ts = tokenize(text)?;
    let lines: Vec<String> = text.split('\n').map(str::to_owned).collect();
    let mut p = Parser {
        toks: ts.tokens,
        pos: 0,
        lines: &lines,
    };
    let mut body = Vec::new();
    while !p.at_kind(TokenKind::EndMarker) {
        if p.at_kind(TokenKind::Newline) {
            p.pos += 1;
            continue;
        }
        if p.at_kind(TokenKind::Indent) {
            return Err(p.error("unexpected indent", &[]));
        }
        body.extend(p.statement()?);
    }
    Ok(SyntaxTree {
        body,
        lines,
        comment_lines: ts.comment_lines,
    })
}

/// Parse a standalone expression (used for entry calls and literal answers).
pub fn parse_expression(text: &str) -> PResult<Expr> {
    let ts = tokenize(text.trim())?;
    let lines: Vec<String> = text.split('\n').map(str::to_owned).collect();
    let mut p = Parser {
        toks: ts.tokens,
        pos: 0,
        lines: &lines,
    };
    let e = p.testlist()?;
    while p.at_kind(TokenKind::Newline) {
        p.pos += 1;
    }
    if !p.at_kind(TokenKind::EndMarker) {
        return Err(p.error("unexpected trailing input", &["end of input"]));
    }
    Ok(e)
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    lines: &'a [String],
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Token {
        &self.toks[self.pos.min(self.toks.len() - 1)]
    }

    fn peek_at(&self, n: usize) -> &Token {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)]
    }

    fn prev(&self) -> &Token {
        &self.toks[self.pos.saturating_sub(1)]
    }

    fn at_kind(&self, k: TokenKind) -> bool {
        self.peek().kind == k
    }

    fn at_op(&self, op: &str) -> bool {
        self.peek().is_op(op)
    }

    fn at_kw(&self, kw: &str) -> bool {
        self.peek().is_name(kw)
    }

    fn bump(&mut self) -> Token {
        let t = self.peek().clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if self.at_op(op) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn error(&self, message: &str, expected: &[&str]) -> ParseError {
        let t = self.peek();
        let found = match t.kind {
            TokenKind::Newline => "newline".to_string(),
            TokenKind::Indent => "indent".to_string(),
            TokenKind::Dedent => "dedent".to_string(),
            TokenKind::EndMarker => "end of input".to_string(),
            _ => format!("{:?}", t.text),
        };
        ParseError::Syntax {
            line: t.line,
            col: t.col,
            message: format!("{message} (found {found})"),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn unsupported(&self, construct: &str, line: u32) -> ParseError {
        ParseError::Unsupported {
            construct: construct.to_string(),
            line,
        }
    }

    fn expect_op(&mut self, op: &str) -> PResult<Token> {
        if self.at_op(op) {
            Ok(self.bump())
        } else {
            Err(self.error(&format!("expected {op:?}"), &[op]))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<Token> {
        if self.at_kw(kw) {
            Ok(self.bump())
        } else {
            Err(self.error(&format!("expected {kw:?}"), &[kw]))
        }
    }

    fn expect_name(&mut self) -> PResult<Token> {
        let t = self.peek();
        if t.kind == TokenKind::Name && !is_keyword(&t.text) {
            Ok(self.bump())
        } else {
            Err(self.error("expected identifier", &["identifier"]))
        }
    }

    fn expect_newline(&mut self) -> PResult<()> {
        if self.at_kind(TokenKind::Newline) {
            self.pos += 1;
            Ok(())
        } else if self.at_kind(TokenKind::EndMarker) || self.at_kind(TokenKind::Dedent) {
            Ok(())
        } else {
            Err(self.error("expected end of statement", &["newline", ";"]))
        }
    }

    fn line_text(&self, line: u32) -> String {
        self.lines
            .get(line as usize - 1)
            .cloned()
            .unwrap_or_default()
    }

    fn span_from(&self, start: &Token) -> Span {
        let end = self.prev();
        Span {
            line: start.line,
            col: start.col,
            end_line: end.end_line,
            end_col: end.end_col,
        }
    }

    fn mk_stmt(&self, kind: StmtKind, start: &Token) -> Stmt {
        Stmt {
            kind,
            span: self.span_from(start),
            text: self.line_text(start.line),
        }
    }

    fn mk_expr(&self, kind: ExprKind, start: &Token) -> Expr {
        Expr {
            kind,
            span: self.span_from(start),
        }
    }

    // ---------------------------------------------------------------- statements

    fn statement(&mut self) -> PResult<Vec<Stmt>> {
        let t = self.peek().clone();
        if t.kind == TokenKind::Op && t.text == "@" {
            return Err(self.unsupported("decorator", t.line));
        }
        if t.kind == TokenKind::Name {
            match t.text.as_str() {
                "def" => return Ok(vec![self.funcdef()?]),
                "if" => return Ok(vec![self.if_stmt(false)?]),
                "for" => return Ok(vec![self.for_stmt()?]),
                "while" => return Ok(vec![self.while_stmt()?]),
                "class" => return Err(self.unsupported("class definition", t.line)),
                "try" => return Err(self.unsupported("try statement", t.line)),
                "with" => return Err(self.unsupported("with statement", t.line)),
                "async" => return Err(self.unsupported("async", t.line)),
                "elif" | "else" | "except" | "finally" => {
                    return Err(self.error("unexpected keyword", &["statement"]))
                }
                _ => {}
            }
        }
        self.simple_stmts()
    }

    fn simple_stmts(&mut self) -> PResult<Vec<Stmt>> {
        let mut out = vec![self.simple_stmt()?];
        while self.eat_op(";") {
            if self.at_kind(TokenKind::Newline) || self.at_kind(TokenKind::EndMarker) {
                break;
            }
            out.push(self.simple_stmt()?);
        }
        self.expect_newline()?;
        Ok(out)
    }

    fn simple_stmt(&mut self) -> PResult<Stmt> {
        let start = self.peek().clone();
        if start.kind == TokenKind::Name {
            match start.text.as_str() {
                "pass" => {
                    self.bump();
                    return Ok(self.mk_stmt(StmtKind::Pass, &start));
                }
                "break" => {
                    self.bump();
                    return Ok(self.mk_stmt(StmtKind::Break, &start));
                }
                "continue" => {
                    self.bump();
                    return Ok(self.mk_stmt(StmtKind::Continue, &start));
                }
                "return" => {
                    self.bump();
                    let value = if self.at_stmt_end() {
                        None
                    } else {
                        Some(self.testlist()?)
                    };
                    return Ok(self.mk_stmt(StmtKind::Return(value), &start));
                }
                "assert" => {
                    self.bump();
                    let test = self.test()?;
                    let msg = if self.eat_op(",") {
                        Some(self.test()?)
                    } else {
                        None
                    };
                    return Ok(self.mk_stmt(StmtKind::Assert { test, msg }, &start));
                }
                "del" => {
                    self.bump();
                    let mut targets = vec![self.bitor()?];
                    while self.eat_op(",") {
                        if self.at_stmt_end() {
                            break;
                        }
                        targets.push(self.bitor()?);
                    }
                    for t in &targets {
                        self.check_del_target(t)?;
                    }
                    return Ok(self.mk_stmt(StmtKind::Delete(targets), &start));
                }
                "import" => return Err(self.unsupported("import", start.line)),
                "from" => return self.import_from(),
                "raise" => return Err(self.unsupported("raise statement", start.line)),
                "global" => return Err(self.unsupported("global statement", start.line)),
                "nonlocal" => return Err(self.unsupported("nonlocal statement", start.line)),
                "yield" => return Err(self.unsupported("generator (yield)", start.line)),
                "await" => return Err(self.unsupported("await", start.line)),
                _ => {}
            }
        }

        let first = self.testlist_star()?;
        if self.at_op("=") {
            let mut exprs = vec![first];
            while self.eat_op("=") {
                if self.at_kw("yield") {
                    return Err(self.unsupported("generator (yield)", self.peek().line));
                }
                exprs.push(self.testlist_star()?);
            }
            let value = exprs.pop().unwrap();
            for t in &exprs {
                self.check_target(t)?;
            }
            return Ok(self.mk_stmt(StmtKind::Assign { targets: exprs, value }, &start));
        }
        if let Some(op) = self.aug_op() {
            self.bump();
            match &first.kind {
                ExprKind::Name(_) | ExprKind::Subscript { .. } => {}
                ExprKind::Attribute { .. } => {
                    return Err(self.unsupported("attribute assignment", start.line))
                }
                _ => {
                    return Err(ParseError::Syntax {
                        line: start.line,
                        col: start.col,
                        message: "illegal expression for augmented assignment".into(),
                        expected: vec![],
                    })
                }
            }
            let value = self.testlist()?;
            return Ok(self.mk_stmt(
                StmtKind::AugAssign {
                    target: first,
                    op,
                    value,
                },
                &start,
            ));
        }
        if self.at_op(":") {
            self.bump();
            self.check_target(&first)?;
            let annotation = self.test()?;
            let value = if self.eat_op("=") {
                Some(self.testlist()?)
            } else {
                None
            };
            return Ok(self.mk_stmt(
                StmtKind::AnnAssign {
                    target: first,
                    annotation,
                    value,
                },
                &start,
            ));
        }
        if self.at_op(":=") {
            return Err(self.unsupported("assignment expression (:=)", self.peek().line));
        }
        Ok(self.mk_stmt(StmtKind::Expr(first), &start))
    }

    fn at_stmt_end(&self) -> bool {
        matches!(
            self.peek().kind,
            TokenKind::Newline | TokenKind::EndMarker | TokenKind::Dedent
        ) || self.at_op(";")
    }

    fn aug_op(&self) -> Option<BinOp> {
        let t = self.peek();
        if t.kind != TokenKind::Op {
            return None;
        }
        Some(match t.text.as_str() {
            "+=" => BinOp::Add,
            "-=" => BinOp::Sub,
            "*=" => BinOp::Mul,
            "/=" => BinOp::Div,
            "//=" => BinOp::FloorDiv,
            "%=" => BinOp::Mod,
            "**=" => BinOp::Pow,
            "<<=" => BinOp::LShift,
            ">>=" => BinOp::RShift,
            "|=" => BinOp::BitOr,
            "^=" => BinOp::BitXor,
            "&=" => BinOp::BitAnd,
            _ => return None,
        })
    }

    fn check_target(&self, e: &Expr) -> PResult<()> {
        match &e.kind {
            ExprKind::Name(_) | ExprKind::Subscript { .. } => Ok(()),
            ExprKind::Tuple(xs) | ExprKind::List(xs) => {
                xs.iter().try_for_each(|x| self.check_target(x))
            }
            ExprKind::Attribute { .. } => Err(self.unsupported("attribute assignment", e.span.line)),
            _ => Err(ParseError::Syntax {
                line: e.span.line,
                col: e.span.col,
                message: "cannot assign to expression".into(),
                expected: vec![],
            }),
        }
    }

    fn check_del_target(&self, e: &Expr) -> PResult<()> {
        match &e.kind {
            ExprKind::Name(_) | ExprKind::Subscript { .. } => Ok(()),
            ExprKind::Tuple(xs) | ExprKind::List(xs) => {
                xs.iter().try_for_each(|x| self.check_del_target(x))
            }
            ExprKind::Attribute { .. } => Err(self.unsupported("attribute deletion", e.span.line)),
            _ => Err(ParseError::Syntax {
                line: e.span.line,
                col: e.span.col,
                message: "cannot delete expression".into(),
                expected: vec![],
            }),
        }
    }

    fn import_from(&mut self) -> PResult<Stmt> {
        let start = self.bump();
        let module = self.expect_name()?;
        if module.text != "typing" || self.at_op(".") {
            return Err(self.unsupported("import", start.line));
        }
        self.expect_kw("import")?;
        let paren = self.eat_op("(");
        let mut names = vec![self.expect_name()?.text];
        if self.at_kw("as") {
            return Err(self.unsupported("import alias", start.line));
        }
        while self.eat_op(",") {
            if paren && self.at_op(")") {
                break;
            }
            names.push(self.expect_name()?.text);
        }
        if paren {
            self.expect_op(")")?;
        }
        Ok(self.mk_stmt(
            StmtKind::ImportFrom {
                module: module.text,
                names,
            },
            &start,
        ))
    }

    fn suite(&mut self) -> PResult<Vec<Stmt>> {
        if self.at_kind(TokenKind::Newline) {
            self.bump();
            if !self.at_kind(TokenKind::Indent) {
                return Err(self.error("expected an indented block", &["indent"]));
            }
            self.bump();
            let mut body = Vec::new();
            while !self.at_kind(TokenKind::Dedent) && !self.at_kind(TokenKind::EndMarker) {
                if self.at_kind(TokenKind::Newline) {
                    self.bump();
                    continue;
                }
                body.extend(self.statement()?);
            }
            if self.at_kind(TokenKind::Dedent) {
                self.bump();
            }
            Ok(body)
        } else {
            self.simple_stmts()
        }
    }

    fn funcdef(&mut self) -> PResult<Stmt> {
        let start = self.bump();
        let name = self.expect_name()?.text;
        self.expect_op("(")?;
        let params = self.params(")", true)?;
        self.expect_op(")")?;
        let returns = if self.eat_op("->") {
            Some(self.test()?)
        } else {
            None
        };
        self.expect_op(":")?;
        let header_span = self.span_from(&start);
        let body = self.suite()?;
        let mut locals: BTreeSet<String> = params.iter().map(|p| p.name.clone()).collect();
        collect_locals(&body, &mut locals);
        let def = FunctionDef {
            name,
            params,
            returns,
            body,
            locals,
            span: Span {
                line: start.line,
                col: start.col,
                end_line: self.prev().end_line,
                end_col: self.prev().end_col,
            },
        };
        Ok(Stmt {
            kind: StmtKind::FunctionDef(Rc::new(def)),
            span: header_span,
            text: self.line_text(start.line),
        })
    }

    fn params(&mut self, close: &str, allow_annotations: bool) -> PResult<Vec<Param>> {
        let mut params: Vec<Param> = Vec::new();
        while !self.at_op(close) {
            let t = self.peek().clone();
            if t.is_op("*") || t.is_op("**") {
                return Err(self.unsupported("star-args", t.line));
            }
            if t.is_op("/") {
                return Err(self.unsupported("positional-only parameters", t.line));
            }
            let name = self.expect_name()?;
            let annotation = if allow_annotations && self.eat_op(":") {
                Some(self.test()?)
            } else {
                None
            };
            let default = if self.eat_op("=") {
                Some(self.test()?)
            } else {
                None
            };
            if default.is_none() && params.iter().any(|p| p.default.is_some()) {
                return Err(ParseError::Syntax {
                    line: name.line,
                    col: name.col,
                    message: "non-default argument follows default argument".into(),
                    expected: vec![],
                });
            }
            if params.iter().any(|p| p.name == name.text) {
                return Err(ParseError::Syntax {
                    line: name.line,
                    col: name.col,
                    message: format!("duplicate argument {:?}", name.text),
                    expected: vec![],
                });
            }
            params.push(Param {
                name: name.text.clone(),
                default,
                annotation,
                span: self.span_from(&name),
            });
            if !self.eat_op(",") {
                break;
            }
        }
        Ok(params)
    }

    fn if_stmt(&mut self, is_elif: bool) -> PResult<Stmt> {
        let start = self.bump();
        let test = self.test()?;
        self.expect_op(":")?;
        let header = self.span_from(&start);
        let body = self.suite()?;
        let orelse = if self.at_kw("elif") {
            vec![self.if_stmt(true)?]
        } else if self.at_kw("else") {
            self.bump();
            self.expect_op(":")?;
            self.suite()?
        } else {
            Vec::new()
        };
        Ok(Stmt {
            kind: StmtKind::If {
                test,
                body,
                orelse,
                is_elif,
            },
            span: header,
            text: self.line_text(start.line),
        })
    }

    fn for_stmt(&mut self) -> PResult<Stmt> {
        let start = self.bump();
        let target = self.target_list()?;
        self.check_target(&target)?;
        self.expect_kw("in")?;
        let iter = self.testlist()?;
        self.expect_op(":")?;
        let header = self.span_from(&start);
        let body = self.suite()?;
        let orelse = self.else_clause()?;
        Ok(Stmt {
            kind: StmtKind::For {
                target,
                iter,
                body,
                orelse,
            },
            span: header,
            text: self.line_text(start.line),
        })
    }

    fn while_stmt(&mut self) -> PResult<Stmt> {
        let start = self.bump();
        let test = self.test()?;
        self.expect_op(":")?;
        let header = self.span_from(&start);
        let body = self.suite()?;
        let orelse = self.else_clause()?;
        Ok(Stmt {
            kind: StmtKind::While { test, body, orelse },
            span: header,
            text: self.line_text(start.line),
        })
    }

    fn else_clause(&mut self) -> PResult<Vec<Stmt>> {
        if self.eat_kw("else") {
            self.expect_op(":")?;
            self.suite()
        } else {
            Ok(Vec::new())
        }
    }

    // ---------------------------------------------------------------- expressions

    /// Comma-separated targets for `for` and comprehensions.
    fn target_list(&mut self) -> PResult<Expr> {
        let start = self.peek().clone();
        let first = self.star_guard_bitor()?;
        if !self.at_op(",") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.at_kw("in") || self.at_op("=") {
                break;
            }
            items.push(self.star_guard_bitor()?);
        }
        Ok(self.mk_expr(ExprKind::Tuple(items), &start))
    }

    fn star_guard_bitor(&mut self) -> PResult<Expr> {
        if self.at_op("*") {
            return Err(self.unsupported("star unpacking", self.peek().line));
        }
        self.bitor()
    }

    fn testlist_star(&mut self) -> PResult<Expr> {
        if self.at_op("*") {
            return Err(self.unsupported("star unpacking", self.peek().line));
        }
        self.testlist()
    }

    pub(crate) fn testlist(&mut self) -> PResult<Expr> {
        let start = self.peek().clone();
        let first = self.test()?;
        if !self.at_op(",") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.at_stmt_end()
                || self.at_op("=")
                || self.at_op(")")
                || self.at_op(":")
                || self.aug_op().is_some()
            {
                break;
            }
            if self.at_op("*") {
                return Err(self.unsupported("star unpacking", self.peek().line));
            }
            items.push(self.test()?);
        }
        Ok(self.mk_expr(ExprKind::Tuple(items), &start))
    }

    fn test(&mut self) -> PResult<Expr> {
        if self.at_kw("lambda") {
            return self.lambda();
        }
        let start = self.peek().clone();
        let body = self.or_test()?;
        if self.at_kw("if") {
            self.bump();
            let test = self.or_test()?;
            self.expect_kw("else")?;
            let orelse = self.test()?;
            return Ok(self.mk_expr(
                ExprKind::IfExp {
                    test: Box::new(test),
                    body: Box::new(body),
                    orelse: Box::new(orelse),
                },
                &start,
            ));
        }
        if self.at_op(":=") {
            return Err(self.unsupported("assignment expression (:=)", self.peek().line));
        }
        Ok(body)
    }

    fn test_nocond(&mut self) -> PResult<Expr> {
        if self.at_kw("lambda") {
            return self.lambda();
        }
        self.or_test()
    }

    fn lambda(&mut self) -> PResult<Expr> {
        let start = self.bump();
        let params = self.params(":", false)?;
        if params.iter().any(|p| p.default.is_some()) {
            return Err(self.unsupported("lambda with default", start.line));
        }
        self.expect_op(":")?;
        let body = self.test()?;
        let locals = params.iter().map(|p| p.name.clone()).collect();
        Ok(self.mk_expr(
            ExprKind::Lambda(Rc::new(Lambda {
                params,
                body,
                locals,
            })),
            &start,
        ))
    }

    fn or_test(&mut self) -> PResult<Expr> {
        let start = self.peek().clone();
        let first = self.and_test()?;
        if !self.at_kw("or") {
            return Ok(first);
        }
        let mut values = vec![first];
        while self.eat_kw("or") {
            values.push(self.and_test()?);
        }
        Ok(self.mk_expr(
            ExprKind::BoolOp {
                op: BoolOp::Or,
                values,
            },
            &start,
        ))
    }

    fn and_test(&mut self) -> PResult<Expr> {
        let start = self.peek().clone();
        let first = self.not_test()?;
        if !self.at_kw("and") {
            return Ok(first);
        }
        let mut values = vec![first];
        while self.eat_kw("and") {
            values.push(self.not_test()?);
        }
        Ok(self.mk_expr(
            ExprKind::BoolOp {
                op: BoolOp::And,
                values,
            },
            &start,
        ))
    }

    fn not_test(&mut self) -> PResult<Expr> {
        let start = self.peek().clone();
        if self.eat_kw("not") {
            let operand = self.not_test()?;
            return Ok(self.mk_expr(
                ExprKind::UnaryOp {
                    op: UnaryOp::Not,
                    operand: Box::new(operand),
                },
                &start,
            ));
        }
        self.comparison()
    }

    fn comp_op(&mut self) -> Option<CmpOp> {
        let t = self.peek().clone();
        let op = match (t.kind, t.text.as_str()) {
            (TokenKind::Op, "==") => CmpOp::Eq,
            (TokenKind::Op, "!=") => CmpOp::NotEq,
            (TokenKind::Op, "<") => CmpOp::Lt,
            (TokenKind::Op, "<=") => CmpOp::LtE,
            (TokenKind::Op, ">") => CmpOp::Gt,
            (TokenKind::Op, ">=") => CmpOp::GtE,
            (TokenKind::Name, "in") => CmpOp::In,
            (TokenKind::Name, "not") if self.peek_at(1).is_name("in") => {
                self.bump();
                CmpOp::NotIn
            }
            (TokenKind::Name, "is") => {
                if self.peek_at(1).is_name("not") {
                    self.bump();
                    CmpOp::IsNot
                } else {
                    CmpOp::Is
                }
            }
            _ => return None,
        };
        self.bump();
        Some(op)
    }

    fn comparison(&mut self) -> PResult<Expr> {
        let start = self.peek().clone();
        let left = self.bitor()?;
        let mut ops = Vec::new();
        let mut comparators = Vec::new();
        while let Some(op) = self.comp_op() {
            ops.push(op);
            comparators.push(self.bitor()?);
        }
        if ops.is_empty() {
            return Ok(left);
        }
        Ok(self.mk_expr(
            ExprKind::Compare {
                left: Box::new(left),
                ops,
                comparators,
            },
            &start,
        ))
    }

    fn binary_level(
        &mut self,
        ops: &[(&str, BinOp)],
        next: fn(&mut Self) -> PResult<Expr>,
    ) -> PResult<Expr> {
        let start = self.peek().clone();
        let mut left = next(self)?;
        'outer: loop {
            for (sym, op) in ops {
                if self.at_op(sym) {
                    self.bump();
                    let right = next(self)?;
                    left = self.mk_expr(
                        ExprKind::BinOp {
                            left: Box::new(left),
                            op: *op,
                            right: Box::new(right),
                        },
                        &start,
                    );
                    continue 'outer;
                }
            }
            break;
        }
        Ok(left)
    }

    fn bitor(&mut self) -> PResult<Expr> {
        self.binary_level(&[("|", BinOp::BitOr)], Self::bitxor)
    }

    fn bitxor(&mut self) -> PResult<Expr> {
        self.binary_level(&[("^", BinOp::BitXor)], Self::bitand)
    }

    fn bitand(&mut self) -> PResult<Expr> {
        self.binary_level(&[("&", BinOp::BitAnd)], Self::shift)
    }

    fn shift(&mut self) -> PResult<Expr> {
        self.binary_level(&[("<<", BinOp::LShift), (">>", BinOp::RShift)], Self::arith)
    }

    fn arith(&mut self) -> PResult<Expr> {
        self.binary_level(&[("+", BinOp::Add), ("-", BinOp::Sub)], Self::term)
    }

    fn term(&mut self) -> PResult<Expr> {
        if self.at_op("@") {
            return Err(self.unsupported("matrix multiplication", self.peek().line));
        }
        let e = self.binary_level(
            &[
                ("*", BinOp::Mul),
                ("//", BinOp::FloorDiv),
                ("/", BinOp::Div),
                ("%", BinOp::Mod),
            ],
            Self::factor,
        )?;
        if self.at_op("@") {
            return Err(self.unsupported("matrix multiplication", self.peek().line));
        }
        Ok(e)
    }

    fn factor(&mut self) -> PResult<Expr> {
        let start = self.peek().clone();
        let op = if self.at_op("-") {
            Some(UnaryOp::Neg)
        } else if self.at_op("+") {
            Some(UnaryOp::Pos)
        } else if self.at_op("~") {
            Some(UnaryOp::Invert)
        } else {
            None
        };
        if let Some(op) = op {
            self.bump();
            let operand = self.factor()?;
            return Ok(self.mk_expr(
                ExprKind::UnaryOp {
                    op,
                    operand: Box::new(operand),
                },
                &start,
            ));
        }
        self.power()
    }

    fn power(&mut self) -> PResult<Expr> {
        let start = self.peek().clone();
        if self.at_kw("await") {
            return Err(self.unsupported("await", start.line));
        }
        let base = self.primary()?;
        if self.eat_op("**") {
            let exp = self.factor()?;
            return Ok(self.mk_expr(
                ExprKind::BinOp {
                    left: Box::new(base),
                    op: BinOp::Pow,
                    right: Box::new(exp),
                },
                &start,
            ));
        }
        Ok(base)
    }

    fn primary(&mut self) -> PResult<Expr> {
        let start = self.peek().clone();
        let mut e = self.atom()?;
        loop {
            if self.eat_op("(") {
                let (args, keywords) = self.call_args()?;
                self.expect_op(")")?;
                e = self.mk_expr(
                    ExprKind::Call {
                        func: Box::new(e),
                        args,
                        keywords,
                    },
                    &start,
                );
            } else if self.eat_op("[") {
                let index = self.subscript_list()?;
                self.expect_op("]")?;
                e = self.mk_expr(
                    ExprKind::Subscript {
                        value: Box::new(e),
                        index: Box::new(index),
                    },
                    &start,
                );
            } else if self.eat_op(".") {
                let attr = self.expect_name()?.text;
                e = self.mk_expr(
                    ExprKind::Attribute {
                        value: Box::new(e),
                        attr,
                    },
                    &start,
                );
            } else {
                break;
            }
        }
        Ok(e)
    }

    fn call_args(&mut self) -> PResult<(Vec<Expr>, Vec<Keyword>)> {
        let mut args = Vec::new();
        let mut keywords: Vec<Keyword> = Vec::new();
        while !self.at_op(")") {
            let t = self.peek().clone();
            if t.is_op("*") || t.is_op("**") {
                return Err(self.unsupported("star-args", t.line));
            }
            if t.kind == TokenKind::Name && self.peek_at(1).is_op("=") && !is_keyword(&t.text) {
                self.bump();
                self.bump();
                let value = self.test()?;
                if keywords.iter().any(|k| k.name == t.text) {
                    return Err(ParseError::Syntax {
                        line: t.line,
                        col: t.col,
                        message: format!("keyword argument repeated: {}", t.text),
                        expected: vec![],
                    });
                }
                keywords.push(Keyword {
                    name: t.text,
                    value,
                });
            } else {
                if !keywords.is_empty() {
                    return Err(self.error(
                        "positional argument follows keyword argument",
                        &["keyword argument"],
                    ));
                }
                let arg = self.test()?;
                if self.at_kw("for") {
                    let generators = self.comp_for()?;
                    let span = Span {
                        line: arg.span.line,
                        col: arg.span.col,
                        end_line: self.prev().end_line,
                        end_col: self.prev().end_col,
                    };
                    args.push(Expr {
                        kind: ExprKind::GeneratorExp {
                            elt: Box::new(arg),
                            generators,
                        },
                        span,
                    });
                } else {
                    args.push(arg);
                }
            }
            if !self.eat_op(",") {
                break;
            }
        }
        Ok((args, keywords))
    }

    fn subscript_list(&mut self) -> PResult<Expr> {
        let start = self.peek().clone();
        let first = self.subscript()?;
        if !self.at_op(",") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.at_op("]") {
                break;
            }
            items.push(self.subscript()?);
        }
        Ok(self.mk_expr(ExprKind::Tuple(items), &start))
    }

    fn subscript(&mut self) -> PResult<Expr> {
        let start = self.peek().clone();
        let lower = if self.at_op(":") {
            None
        } else {
            let e = self.test()?;
            if !self.at_op(":") {
                return Ok(e);
            }
            Some(Box::new(e))
        };
        self.expect_op(":")?;
        let upper = if self.at_op(":") || self.at_op("]") || self.at_op(",") {
            None
        } else {
            Some(Box::new(self.test()?))
        };
        let step = if self.eat_op(":") {
            if self.at_op("]") || self.at_op(",") {
                None
            } else {
                Some(Box::new(self.test()?))
            }
        } else {
            None
        };
        Ok(self.mk_expr(ExprKind::Slice { lower, upper, step }, &start))
    }

    fn comp_for(&mut self) -> PResult<Vec<Comprehension>> {
        let mut gens = Vec::new();
        while self.at_kw("for") || self.at_kw("async") {
            if self.at_kw("async") {
                return Err(self.unsupported("async", self.peek().line));
            }
            self.bump();
            let target = self.target_list()?;
            self.check_target(&target)?;
            self.expect_kw("in")?;
            let iter = self.or_test()?;
            let mut ifs = Vec::new();
            while self.eat_kw("if") {
                ifs.push(self.test_nocond()?);
            }
            gens.push(Comprehension { target, iter, ifs });
        }
        Ok(gens)
    }

    fn atom(&mut self) -> PResult<Expr> {
        let t = self.peek().clone();
        match t.kind {
            TokenKind::Name => {
                let kind = match t.text.as_str() {
                    "None" => ExprKind::Constant(Constant::None),
                    "True" => ExprKind::Constant(Constant::Bool(true)),
                    "False" => ExprKind::Constant(Constant::Bool(false)),
                    "yield" => return Err(self.unsupported("generator (yield)", t.line)),
                    "lambda" => return self.lambda(),
                    s if is_keyword(s) => {
                        return Err(self.error("expected expression", &["expression"]))
                    }
                    s => ExprKind::Name(s.to_string()),
                };
                self.bump();
                Ok(self.mk_expr(kind, &t))
            }
            TokenKind::Number => {
                self.bump();
                let c = self.number(&t)?;
                Ok(self.mk_expr(ExprKind::Constant(c), &t))
            }
            TokenKind::String => {
                let mut s = String::new();
                while self.at_kind(TokenKind::String) {
                    let st = self.bump();
                    s.push_str(&self.decode_string(&st)?);
                }
                Ok(self.mk_expr(ExprKind::Constant(Constant::Str(s)), &t))
            }
            TokenKind::Op => match t.text.as_str() {
                "(" => self.paren(),
                "[" => self.list_display(),
                "{" => self.brace_display(),
                "..." => Err(self.unsupported("ellipsis", t.line)),
                "*" => Err(self.unsupported("star unpacking", t.line)),
                _ => Err(self.error("expected expression", &["expression"])),
            },
            _ => Err(self.error("expected expression", &["expression"])),
        }
    }

    fn number(&self, t: &Token) -> PResult<Constant> {
        let text = t.text.replace('_', "");
        let lower = text.to_ascii_lowercase();
        let bad = || ParseError::Syntax {
            line: t.line,
            col: t.col,
            message: format!("invalid number literal {:?}", t.text),
            expected: vec![],
        };
        if lower.ends_with('j') {
            return Err(self.unsupported("complex literal", t.line));
        }
        for (prefix, radix) in [("0x", 16), ("0o", 8), ("0b", 2)] {
            if let Some(digits) = lower.strip_prefix(prefix) {
                return BigInt::from_str_radix(digits, radix)
                    .map(Constant::Int)
                    .map_err(|_| bad());
            }
        }
        if lower.contains('.') || lower.contains('e') {
            return lower.parse::<f64>().map(Constant::Float).map_err(|_| bad());
        }
        if lower.len() > 1 && lower.starts_with('0') && lower.chars().any(|c| c != '0') {
            return Err(bad());
        }
        BigInt::from_str_radix(&lower, 10)
            .map(Constant::Int)
            .map_err(|_| bad())
    }

    fn decode_string(&self, t: &Token) -> PResult<String> {
        let text = &t.text;
        let quote_at = text.find(['\'', '"']).expect("string token has a quote");
        let prefix = text[..quote_at].to_ascii_lowercase();
        if prefix.contains('f') {
            return Err(self.unsupported("f-string", t.line));
        }
        if prefix.contains('b') {
            return Err(self.unsupported("bytes literal", t.line));
        }
        let body = &text[quote_at..];
        let q = if body.starts_with("\"\"\"") || body.starts_with("'''") {
            3
        } else {
            1
        };
        let inner = &body[q..body.len() - q];
        if prefix.contains('r') {
            return Ok(inner.to_string());
        }
        unescape(inner).map_err(|message| ParseError::Syntax {
            line: t.line,
            col: t.col,
            message,
            expected: vec![],
        })
    }

    fn paren(&mut self) -> PResult<Expr> {
        let start = self.bump();
        if self.eat_op(")") {
            return Ok(self.mk_expr(ExprKind::Tuple(Vec::new()), &start));
        }
        if self.at_kw("yield") {
            return Err(self.unsupported("generator (yield)", start.line));
        }
        if self.at_op("*") {
            return Err(self.unsupported("star unpacking", start.line));
        }
        let first = self.test()?;
        if self.at_kw("for") {
            let generators = self.comp_for()?;
            self.expect_op(")")?;
            return Ok(self.mk_expr(
                ExprKind::GeneratorExp {
                    elt: Box::new(first),
                    generators,
                },
                &start,
            ));
        }
        if self.eat_op(")") {
            // Parenthesised expression keeps its inner node.
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.at_op(")") {
                break;
            }
            if self.at_op("*") {
                return Err(self.unsupported("star unpacking", self.peek().line));
            }
            items.push(self.test()?);
        }
        self.expect_op(")")?;
        Ok(self.mk_expr(ExprKind::Tuple(items), &start))
    }

    fn list_display(&mut self) -> PResult<Expr> {
        let start = self.bump();
        if self.eat_op("]") {
            return Ok(self.mk_expr(ExprKind::List(Vec::new()), &start));
        }
        if self.at_op("*") {
            return Err(self.unsupported("star unpacking", start.line));
        }
        let first = self.test()?;
        if self.at_kw("for") {
            let generators = self.comp_for()?;
            self.expect_op("]")?;
            return Ok(self.mk_expr(
                ExprKind::ListComp {
                    elt: Box::new(first),
                    generators,
                },
                &start,
            ));
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.at_op("]") {
                break;
            }
            if self.at_op("*") {
                return Err(self.unsupported("star unpacking", self.peek().line));
            }
            items.push(self.test()?);
        }
        self.expect_op("]")?;
        Ok(self.mk_expr(ExprKind::List(items), &start))
    }

    fn brace_display(&mut self) -> PResult<Expr> {
        let start = self.bump();
        if self.eat_op("}") {
            return Ok(self.mk_expr(ExprKind::Dict(Vec::new()), &start));
        }
        if self.at_op("**") || self.at_op("*") {
            return Err(self.unsupported("star unpacking", start.line));
        }
        let first = self.test()?;
        if self.eat_op(":") {
            let value = self.test()?;
            if self.at_kw("for") {
                let generators = self.comp_for()?;
                self.expect_op("}")?;
                return Ok(self.mk_expr(
                    ExprKind::DictComp {
                        key: Box::new(first),
                        value: Box::new(value),
                        generators,
                    },
                    &start,
                ));
            }
            let mut pairs = vec![(first, value)];
            while self.eat_op(",") {
                if self.at_op("}") {
                    break;
                }
                if self.at_op("**") {
                    return Err(self.unsupported("star unpacking", self.peek().line));
                }
                let k = self.test()?;
                self.expect_op(":")?;
                let v = self.test()?;
                pairs.push((k, v));
            }
            self.expect_op("}")?;
            return Ok(self.mk_expr(ExprKind::Dict(pairs), &start));
        }
        if self.at_kw("for") {
            let generators = self.comp_for()?;
            self.expect_op("}")?;
            return Ok(self.mk_expr(
                ExprKind::SetComp {
                    elt: Box::new(first),
                    generators,
                },
                &start,
            ));
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.at_op("}") {
                break;
            }
            if self.at_op("*") {
                return Err(self.unsupported("star unpacking", self.peek().line));
            }
            items.push(self.test()?);
        }
        self.expect_op("}")?;
        Ok(self.mk_expr(ExprKind::Set(items), &start))
    }
}

/// Collect names bound in a function body (excluding nested function bodies
/// and comprehension scopes).
fn collect_locals(body: &[Stmt], out: &mut BTreeSet<String>) {
    for s in body {
        match &s.kind {
            StmtKind::FunctionDef(def) => {
                out.insert(def.name.clone());
            }
            StmtKind::Assign { targets, .. } => targets.iter().for_each(|t| target_names(t, out)),
            StmtKind::AnnAssign { target, .. } | StmtKind::AugAssign { target, .. } => {
                target_names(target, out)
            }
            StmtKind::For {
                target,
                body,
                orelse,
                ..
            } => {
                target_names(target, out);
                collect_locals(body, out);
                collect_locals(orelse, out);
            }
            StmtKind::If { body, orelse, .. } | StmtKind::While { body, orelse, .. } => {
                collect_locals(body, out);
                collect_locals(orelse, out);
            }
            StmtKind::Delete(targets) => targets.iter().for_each(|t| target_names(t, out)),
            StmtKind::ImportFrom { names, .. } => out.extend(names.iter().cloned()),
            _ => {}
        }
    }
}

fn unescape(s: &str) -> Result<String, String> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars().peekable();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        let Some(e) = chars.next() else {
            out.push('\\');
            break;
        };
        match e {
            '\n' => {}
            '\r' => {
                if chars.peek() == Some(&'\n') {
                    chars.next();
                }
            }
            '\\' => out.push('\\'),
            '\'' => out.push('\''),
            '"' => out.push('"'),
            'a' => out.push('\x07'),
            'b' => out.push('\x08'),
            'f' => out.push('\x0c'),
            'n' => out.push('\n'),
            'r' => out.push('\r'),
            't' => out.push('\t'),
            'v' => out.push('\x0b'),
            '0'..='7' => {
                let mut v = e.to_digit(8).unwrap();
                for _ in 0..2 {
                    match chars.peek() {
                        Some(d) if d.is_digit(8) => {
                            v = v * 8 + d.to_digit(8).unwrap();
                            chars.next();
                        }
                        _ => break,
                    }
                }
                out.push(char::from_u32(v).ok_or("invalid octal escape")?);
            }
            'x' | 'u' | 'U' => {
                let n = match e {
                    'x' => 2,
                    'u' => 4,
                    _ => 8,
                };
                let hex: String = (0..n).filter_map(|_| chars.next()).collect();
                if hex.len() != n || !hex.chars().all(|c| c.is_ascii_hexdigit()) {
                    return Err(format!("truncated \\{e} escape"));
                }
                let v = u32::from_str_radix(&hex, 16).unwrap();
                out.push(char::from_u32(v).ok_or_else(|| format!("invalid \\{e} escape"))?);
            }
            'N' => return Err("named unicode escapes are not supported".into()),
            other => {
                out.push('\\');
                out.push(other);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn function_and_call() {
        let tree = parse("def f(x):\n    return x\nf(1)\n").unwrap();
        assert_eq!(tree.body.len(), 2);
        assert!(matches!(tree.body[0].kind, StmtKind::FunctionDef(_)));
        match &tree.body[1].kind {
            StmtKind::Expr(Expr {
                kind: ExprKind::Call { .. },
                ..
            }) => {}
            other => panic!("expected call statement, got {other:?}"),
        }
    }

    #[test]
    fn import_is_unsupported() {
        let err = parse("import os\n").unwrap_err();
        assert_eq!(
            err,
            ParseError::Unsupported {
                construct: "import".into(),
                line: 1
            }
        );
    }

    #[test]
    fn typing_import_is_accepted() {
        let tree = parse("from typing import List, Tuple\n").unwrap();
        assert!(matches!(tree.body[0].kind, StmtKind::ImportFrom { .. }));
    }

    #[test]
    fn unsupported_constructs_name_the_line() {
        let cases = [
            ("class A:\n    pass\n", "class definition", 1),
            ("x = 1\ntry:\n    pass\nexcept:\n    pass\n", "try statement", 2),
            ("def f():\n    yield 1\n", "generator (yield)", 2),
            ("g = lambda x=1: x\n", "lambda with default", 1),
            ("s = f'{x}'\n", "f-string", 1),
            ("f(*args)\n", "star-args", 1),
            ("a, *b = c\n", "star unpacking", 1),
            ("with open(p) as fh:\n    pass\n", "with statement", 1),
        ];
        for (src, construct, line) in cases {
            match parse(src) {
                Err(ParseError::Unsupported { construct: c, line: l }) => {
                    assert_eq!((c.as_str(), l), (construct, line), "{src}")
                }
                other => panic!("{src}: expected unsupported, got {other:?}"),
            }
        }
    }

    #[test]
    fn syntax_error_reports_expected_tokens() {
        match parse("def f(x)\n    return x\n") {
            Err(ParseError::Syntax { line, expected, .. }) => {
                assert_eq!(line, 1);
                assert_eq!(expected, vec![":".to_string()]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn precedence() {
        let e = parse_expression("-2 ** 2 + 3 * 4").unwrap();
        match e.kind {
            ExprKind::BinOp { op: BinOp::Add, left, .. } => match left.kind {
                ExprKind::UnaryOp { op: UnaryOp::Neg, operand } => {
                    assert!(matches!(operand.kind, ExprKind::BinOp { op: BinOp::Pow, .. }))
                }
                other => panic!("{other:?}"),
            },
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn elif_chain_is_nested() {
        let tree = parse("if a:\n    x = 1\nelif b:\n    x = 2\nelse:\n    x = 3\n").unwrap();
        match &tree.body[0].kind {
            StmtKind::If { orelse, is_elif: false, .. } => {
                assert_eq!(orelse.len(), 1);
                assert!(matches!(orelse[0].kind, StmtKind::If { is_elif: true, .. }));
                assert_eq!(orelse[0].span.line, 3);
                assert_eq!(orelse[0].text, "elif b:");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn statements_carry_verbatim_lines() {
        let src = "def f(s):\n    r = s.strip()  # c\n    return r\n";
        let tree = parse(src).unwrap();
        let mut seen = Vec::new();
        tree.walk_stmts(&mut |s| seen.push((s.span.line, s.text.clone())));
        for (line, text) in seen {
            assert_eq!(tree.line_text(line).unwrap(), text);
        }
    }

    #[test]
    fn string_escapes() {
        let e = parse_expression(r#"'a\tb\x41\u00e9\'' "c""#).unwrap();
        match e.kind {
            ExprKind::Constant(Constant::Str(s)) => assert_eq!(s, "a\tbA\u{e9}'c"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn locals_are_collected() {
        let tree = parse(
            "def f(a):\n    b = 1\n    for i, j in x:\n        c += 1\n    d = [k for k in a]\n",
        )
        .unwrap();
        let f = tree.function("f").unwrap();
        let names: Vec<_> = f.locals.iter().cloned().collect();
        assert_eq!(names, vec!["a", "b", "c", "d", "i", "j"]);
    }

    #[test]
    fn comprehension_forms() {
        for src in [
            "[x * 2 for x in xs if x > 1]",
            "{x for x in xs}",
            "{k: v for k, v in d.items()}",
            "sum(x for x in xs)",
            "(x for x in xs for y in x)",
        ] {
            parse_expression(src).unwrap();
        }
    }

    #[test]
    fn slices() {
        let e = parse_expression("a[::-1]").unwrap();
        match e.kind {
            ExprKind::Subscript { index, .. } => match index.kind {
                ExprKind::Slice { lower: None, upper: None, step: Some(_) } => {}
                other => panic!("{other:?}"),
            },
            other => panic!("{other:?}"),
        }
    }
}
