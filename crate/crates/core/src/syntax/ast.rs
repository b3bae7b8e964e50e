//! Syntax tree for the Python subset.

use std::collections::BTreeSet;
use std::rc::Rc;

use num_bigint::BigInt;

/// Source position of a node. Lines are 1-based, columns 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub line: u32,
    pub col: u32,
    pub end_line: u32,
    pub end_col: u32,
}

#[derive(Debug, Clone)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
    /// Verbatim text of the physical line the statement starts on.
    pub text: String,
}

#[derive(Debug, Clone)]
pub enum StmtKind {
    FunctionDef(Rc<FunctionDef>),
    Assign { targets: Vec<Expr>, value: Expr },
    AnnAssign { target: Expr, annotation: Expr, value: Option<Expr> },
    AugAssign { target: Expr, op: BinOp, value: Expr },
    Expr(Expr),
    Return(Option<Expr>),
    /// `elif` arms are stored as a single nested `If` in `orelse` with `is_elif` set.
    If { test: Expr, body: Vec<Stmt>, orelse: Vec<Stmt>, is_elif: bool },
    For { target: Expr, iter: Expr, body: Vec<Stmt>, orelse: Vec<Stmt> },
    While { test: Expr, body: Vec<Stmt>, orelse: Vec<Stmt> },
    Break,
    Continue,
    Pass,
    Assert { test: Expr, msg: Option<Expr> },
    Delete(Vec<Expr>),
    /// `from typing import ...`; binds nothing at runtime.
    ImportFrom { module: String, names: Vec<String> },
}

impl StmtKind {
    /// Short human name used in diagnostics.
    pub fn name(&self) -> &'static str {
        match self {
            StmtKind::FunctionDef(_) => "function-def",
            StmtKind::Assign { .. } | StmtKind::AnnAssign { .. } => "assignment",
            StmtKind::AugAssign { .. } => "augmented-assignment",
            StmtKind::Expr(_) => "expression-statement",
            StmtKind::Return(_) => "return",
            StmtKind::If { is_elif: true, .. } => "elif",
            StmtKind::If { .. } => "if",
            StmtKind::For { .. } => "for",
            StmtKind::While { .. } => "while",
            StmtKind::Break => "break",
            StmtKind::Continue => "continue",
            StmtKind::Pass => "pass",
            StmtKind::Assert { .. } => "assert",
            StmtKind::Delete(_) => "del",
            StmtKind::ImportFrom { .. } => "import-from",
        }
    }

    /// True for `if`/`elif`/`for`/`while` headers.
    pub fn is_control_header(&self) -> bool {
        matches!(
            self,
            StmtKind::If { .. } | StmtKind::For { .. } | StmtKind::While { .. }
        )
    }
}

#[derive(Debug, Clone)]
pub struct Param {
    pub name: String,
    pub default: Option<Expr>,
    pub annotation: Option<Expr>,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub struct FunctionDef {
    pub name: String,
    pub params: Vec<Param>,
    pub returns: Option<Expr>,
    pub body: Vec<Stmt>,
    /// Names bound anywhere in the body (parameters included). Reading one of
    /// these before assignment is an `UnboundLocalError`.
    pub locals: BTreeSet<String>,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub struct Lambda {
    pub params: Vec<Param>,
    pub body: Expr,
    pub locals: BTreeSet<String>,
}

#[derive(Debug, Clone)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub enum Constant {
    None,
    Bool(bool),
    Int(BigInt),
    Float(f64),
    Str(String),
}

#[derive(Debug, Clone)]
pub enum ExprKind {
    Constant(Constant),
    Name(String),
    List(Vec<Expr>),
    Tuple(Vec<Expr>),
    Set(Vec<Expr>),
    Dict(Vec<(Expr, Expr)>),
    BinOp { left: Box<Expr>, op: BinOp, right: Box<Expr> },
    UnaryOp { op: UnaryOp, operand: Box<Expr> },
    BoolOp { op: BoolOp, values: Vec<Expr> },
    Compare { left: Box<Expr>, ops: Vec<CmpOp>, comparators: Vec<Expr> },
    Call { func: Box<Expr>, args: Vec<Expr>, keywords: Vec<Keyword> },
    Attribute { value: Box<Expr>, attr: String },
    Subscript { value: Box<Expr>, index: Box<Expr> },
    Slice { lower: Option<Box<Expr>>, upper: Option<Box<Expr>>, step: Option<Box<Expr>> },
    IfExp { test: Box<Expr>, body: Box<Expr>, orelse: Box<Expr> },
    Lambda(Rc<Lambda>),
    ListComp { elt: Box<Expr>, generators: Vec<Comprehension> },
    SetComp { elt: Box<Expr>, generators: Vec<Comprehension> },
    DictComp { key: Box<Expr>, value: Box<Expr>, generators: Vec<Comprehension> },
    GeneratorExp { elt: Box<Expr>, generators: Vec<Comprehension> },
}

#[derive(Debug, Clone)]
pub struct Keyword {
    pub name: String,
    pub value: Expr,
}

#[derive(Debug, Clone)]
pub struct Comprehension {
    pub target: Expr,
    pub iter: Expr,
    pub ifs: Vec<Expr>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    FloorDiv,
    Mod,
    Pow,
    LShift,
    RShift,
    BitOr,
    BitXor,
    BitAnd,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::FloorDiv => "//",
            BinOp::Mod => "%",
            BinOp::Pow => "**",
            BinOp::LShift => "<<",
            BinOp::RShift => ">>",
            BinOp::BitOr => "|",
            BinOp::BitXor => "^",
            BinOp::BitAnd => "&",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Not,
    Neg,
    Pos,
    Invert,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoolOp {
    And,
    Or,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    NotEq,
    Lt,
    LtE,
    Gt,
    GtE,
    Is,
    IsNot,
    In,
    NotIn,
}

/// A parsed program together with its physical source lines.
#[derive(Debug, Clone)]
pub struct SyntaxTree {
    pub body: Vec<Stmt>,
    /// Physical lines of the source, 0-indexed here; line `n` is `lines[n - 1]`.
    pub lines: Vec<String>,
    pub comment_lines: BTreeSet<u32>,
}

impl SyntaxTree {
    /// Verbatim text of 1-based line `line`, if it exists.
    pub fn line_text(&self, line: u32) -> Option<&str> {
        line.checked_sub(1)
            .and_then(|i| self.lines.get(i as usize))
            .map(String::as_str)
    }

    pub fn function(&self, name: &str) -> Option<&Rc<FunctionDef>> {
        self.body.iter().find_map(|s| match &s.kind {
            StmtKind::FunctionDef(f) if f.name == name => Some(f),
            _ => None,
        })
    }

    pub fn functions(&self) -> impl Iterator<Item = &Rc<FunctionDef>> {
        self.body.iter().filter_map(|s| match &s.kind {
            StmtKind::FunctionDef(f) => Some(f),
            _ => None,
        })
    }

    /// Depth-first visit of every statement, nested bodies included.
    pub fn walk_stmts<'a>(&'a self, f: &mut dyn FnMut(&'a Stmt)) {
        walk_stmt_list(&self.body, f);
    }
}

pub fn walk_stmt_list<'a>(stmts: &'a [Stmt], f: &mut dyn FnMut(&'a Stmt)) {
    for s in stmts {
        f(s);
        match &s.kind {
            StmtKind::FunctionDef(def) => walk_stmt_list(&def.body, f),
            StmtKind::If { body, orelse, .. }
            | StmtKind::For { body, orelse, .. }
            | StmtKind::While { body, orelse, .. } => {
                walk_stmt_list(body, f);
                walk_stmt_list(orelse, f);
            }
            _ => {}
        }
    }
}

/// Visit every expression directly owned by a statement (not nested bodies).
pub fn stmt_exprs<'a>(s: &'a Stmt, f: &mut dyn FnMut(&'a Expr)) {
    match &s.kind {
        StmtKind::FunctionDef(def) => {
            for p in &def.params {
                if let Some(d) = &p.default {
                    f(d);
                }
                if let Some(a) = &p.annotation {
                    f(a);
                }
            }
            if let Some(r) = &def.returns {
                f(r);
            }
        }
        StmtKind::Assign { targets, value } => {
            targets.iter().for_each(&mut *f);
            f(value);
        }
        StmtKind::AnnAssign { target, annotation, value } => {
            f(target);
            f(annotation);
            if let Some(v) = value {
                f(v);
            }
        }
        StmtKind::AugAssign { target, value, .. } => {
            f(target);
            f(value);
        }
        StmtKind::Expr(e) => f(e),
        StmtKind::Return(Some(e)) => f(e),
        StmtKind::If { test, .. } | StmtKind::While { test, .. } => f(test),
        StmtKind::For { target, iter, .. } => {
            f(target);
            f(iter);
        }
        StmtKind::Assert { test, msg } => {
            f(test);
            if let Some(m) = msg {
                f(m);
            }
        }
        StmtKind::Delete(targets) => targets.iter().for_each(f),
        StmtKind::Return(None)
        | StmtKind::Break
        | StmtKind::Continue
        | StmtKind::Pass
        | StmtKind::ImportFrom { .. } => {}
    }
}

/// Pre-order visit of an expression and all of its sub-expressions.
pub fn walk_expr<'a>(e: &'a Expr, f: &mut dyn FnMut(&'a Expr)) {
    f(e);
    match &e.kind {
        ExprKind::Constant(_) | ExprKind::Name(_) => {}
        ExprKind::List(xs) | ExprKind::Tuple(xs) | ExprKind::Set(xs) => {
            xs.iter().for_each(|x| walk_expr(x, f))
        }
        ExprKind::Dict(pairs) => {
            for (k, v) in pairs {
                walk_expr(k, f);
                walk_expr(v, f);
            }
        }
        ExprKind::BinOp { left, right, .. } => {
            walk_expr(left, f);
            walk_expr(right, f);
        }
        ExprKind::UnaryOp { operand, .. } => walk_expr(operand, f),
        ExprKind::BoolOp { values, .. } => values.iter().for_each(|x| walk_expr(x, f)),
        ExprKind::Compare { left, comparators, .. } => {
            walk_expr(left, f);
            comparators.iter().for_each(|x| walk_expr(x, f));
        }
        ExprKind::Call { func, args, keywords } => {
            walk_expr(func, f);
            args.iter().for_each(|x| walk_expr(x, f));
            keywords.iter().for_each(|k| walk_expr(&k.value, f));
        }
        ExprKind::Attribute { value, .. } => walk_expr(value, f),
        ExprKind::Subscript { value, index } => {
            walk_expr(value, f);
            walk_expr(index, f);
        }
        ExprKind::Slice { lower, upper, step } => {
            for part in [lower, upper, step].into_iter().flatten() {
                walk_expr(part, f);
            }
        }
        ExprKind::IfExp { test, body, orelse } => {
            walk_expr(test, f);
            walk_expr(body, f);
            walk_expr(orelse, f);
        }
        ExprKind::Lambda(l) => {
            for p in &l.params {
                if let Some(d) = &p.default {
                    walk_expr(d, f);
                }
            }
            walk_expr(&l.body, f);
        }
        ExprKind::ListComp { elt, generators }
        | ExprKind::SetComp { elt, generators }
        | ExprKind::GeneratorExp { elt, generators } => {
            walk_comprehensions(generators, f);
            walk_expr(elt, f);
        }
        ExprKind::DictComp { key, value, generators } => {
            walk_comprehensions(generators, f);
            walk_expr(key, f);
            walk_expr(value, f);
        }
    }
}

fn walk_comprehensions<'a>(gens: &'a [Comprehension], f: &mut dyn FnMut(&'a Expr)) {
    for g in gens {
        walk_expr(&g.target, f);
        walk_expr(&g.iter, f);
        g.ifs.iter().for_each(|x| walk_expr(x, f));
    }
}

/// Names bound by an assignment target.
pub fn target_names(target: &Expr, out: &mut BTreeSet<String>) {
    match &target.kind {
        ExprKind::Name(n) => {
            out.insert(n.clone());
        }
        ExprKind::Tuple(xs) | ExprKind::List(xs) => xs.iter().for_each(|x| target_names(x, out)),
        _ => {}
    }
}
