//! Statement execution and expression evaluation.

use std::collections::{BTreeSet, HashMap};
use std::rc::Rc;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};

use crate::syntax::ast::{
    BinOp, BoolOp, CmpOp, Comprehension, Constant, Expr, ExprKind, Stmt, StmtKind,
};
use crate::trace::{StateSnapshot, VarState};

use super::obj::{
    new_scope, shared, Closure, FuncBody, GenDef, GenState, IterState, Obj, PyDict, PySet, Scope,
    ViewKind,
};
use super::ops::{self, exc, type_error, EResult, Exc};
use super::ExecutionLimits;

/// Why evaluation stopped early.
pub(crate) enum Halt {
    /// An exception, with the line of the innermost statement that raised it.
    Exc(Exc, Option<u32>),
    Fuel,
    Output,
}

impl From<Exc> for Halt {
    fn from(e: Exc) -> Halt {
        Halt::Exc(e, None)
    }
}

pub(crate) type RResult<T> = Result<T, Halt>;

pub(crate) fn raise<T>(kind: &'static str, msg: impl Into<String>) -> RResult<T> {
    Err(Halt::Exc(
        Exc {
            kind,
            msg: msg.into(),
        },
        None,
    ))
}

pub(crate) enum Ctl {
    Normal,
    Break,
    Continue,
    Return(Obj),
}

const RECURSION_LIMIT: usize = 1000;
const RED_ZONE: usize = 128 * 1024;
const STACK_SEGMENT: usize = 4 * 1024 * 1024;

pub(crate) struct RawStep {
    pub line: u32,
    pub stmt: String,
    pub state: Option<StateSnapshot>,
}

pub(crate) struct Interp {
    pub limits: ExecutionLimits,
    fuel_used: u64,
    pub stdout: String,
    stdout_chars: usize,
    pub globals: Scope,
    /// Frame whose statements are traced (module, then the entry frame).
    pub traced: Option<Scope>,
    pub record: bool,
    pub steps: Vec<RawStep>,
    pending: Option<usize>,
    /// Line of the last statement started in the traced frame.
    pub traced_line: u32,
    depth: usize,
    next_id: usize,
    gens: HashMap<usize, Rc<GenDef>>,
}

impl Interp {
    pub fn new(limits: ExecutionLimits, record: bool) -> Interp {
        let globals = new_scope(None, None);
        Interp {
            limits,
            fuel_used: 0,
            stdout: String::new(),
            stdout_chars: 0,
            traced: Some(globals.clone()),
            globals,
            record,
            steps: Vec::new(),
            pending: None,
            traced_line: 0,
            depth: 0,
            next_id: 0,
            gens: HashMap::new(),
        }
    }

    /// Charge `n` units of fuel.
    pub fn tick(&mut self, n: u64) -> RResult<()> {
        self.fuel_used = self.fuel_used.saturating_add(n);
        if self.fuel_used > self.limits.fuel {
            return Err(Halt::Fuel);
        }
        Ok(())
    }

    pub fn write_stdout(&mut self, text: &str) -> RResult<()> {
        self.stdout_chars += text.chars().count();
        if self.stdout_chars > self.limits.max_output_chars {
            return Err(Halt::Output);
        }
        self.stdout.push_str(text);
        Ok(())
    }

    fn is_traced(&self, scope: &Scope) -> bool {
        self.traced.as_ref().is_some_and(|t| Rc::ptr_eq(t, scope))
    }

    // ------------------------------------------------------------ tracing

    pub fn begin_step(&mut self, line: u32, stmt: &str) {
        self.traced_line = line;
        if self.record {
            self.pending = Some(self.steps.len());
            self.steps.push(RawStep {
                line,
                stmt: stmt.to_string(),
                state: None,
            });
        }
    }

    /// Fill the pending step's snapshot from `scope`.
    pub fn end_step(&mut self, scope: &Scope) -> RResult<()> {
        if let Some(i) = self.pending.take() {
            let snap = self.snapshot(scope).map_err(|_| Halt::Output)?;
            self.steps[i].state = Some(snap);
        }
        Ok(())
    }

    /// Best-effort snapshot for a step interrupted by an error.
    pub fn close_pending(&mut self) {
        if let (Some(i), Some(scope)) = (self.pending.take(), self.traced.clone()) {
            let snap = self.snapshot(&scope).unwrap_or_default();
            self.steps[i].state = Some(snap);
        }
    }

    pub fn snapshot(&self, scope: &Scope) -> Result<StateSnapshot, super::value::RenderOverflow> {
        let data = scope.borrow();
        let mut vars = Vec::with_capacity(data.vars.len());
        for (name, v) in &data.vars {
            if v.is_callable() {
                continue;
            }
            vars.push(VarState {
                var: name.clone(),
                val: v.repr_capped(self.limits.max_value_render_chars)?,
                ty: v.type_name().to_string(),
            });
        }
        Ok(StateSnapshot(vars))
    }

    // ------------------------------------------------------------ names

    pub fn load(&self, name: &str, scope: &Scope) -> EResult<Obj> {
        let mut cur = Some(scope.clone());
        while let Some(s) = cur {
            let data = s.borrow();
            if let Some(v) = data.vars.get(name) {
                return Ok(v.clone());
            }
            if data.declared.as_ref().is_some_and(|d| d.contains(name)) {
                return exc(
                    "UnboundLocalError",
                    format!("local variable '{name}' referenced before assignment"),
                );
            }
            cur = data.parent.clone();
        }
        if let Some(b) = super::builtins::lookup(name) {
            return Ok(b);
        }
        exc("NameError", format!("name '{name}' is not defined"))
    }

    fn store(&self, name: &str, v: Obj, scope: &Scope) {
        scope.borrow_mut().vars.insert(name.to_string(), v);
    }

    // ------------------------------------------------------------ statements

    pub fn exec_block(&mut self, body: &[Stmt], scope: &Scope) -> RResult<Ctl> {
        for s in body {
            match self.exec_stmt(s, scope)? {
                Ctl::Normal => {}
                other => return Ok(other),
            }
        }
        Ok(Ctl::Normal)
    }

    pub fn exec_stmt(&mut self, stmt: &Stmt, scope: &Scope) -> RResult<Ctl> {
        let line = stmt.span.line;
        self.exec_stmt_inner(stmt, scope).map_err(|h| match h {
            Halt::Exc(e, None) => Halt::Exc(e, Some(line)),
            other => other,
        })
    }

    fn header(&mut self, stmt: &Stmt, traced: bool) -> RResult<()> {
        self.tick(1)?;
        if traced {
            self.begin_step(stmt.span.line, &stmt.text);
        }
        Ok(())
    }

    fn exec_stmt_inner(&mut self, stmt: &Stmt, scope: &Scope) -> RResult<Ctl> {
        let traced = self.is_traced(scope);
        self.header(stmt, traced)?;
        let ctl = match &stmt.kind {
            StmtKind::FunctionDef(def) => {
                let mut defaults = Vec::with_capacity(def.params.len());
                for p in &def.params {
                    defaults.push(match &p.default {
                        Some(d) => Some(self.eval(d, scope)?),
                        None => None,
                    });
                }
                let f = Closure {
                    name: def.name.clone(),
                    params: def.params.iter().map(|p| p.name.clone()).collect(),
                    defaults,
                    body: FuncBody::Def(def.clone()),
                    scope: scope.clone(),
                    locals: Rc::new(def.locals.clone()),
                    id: self.fresh_id(),
                };
                self.store(&def.name, Obj::Func(Rc::new(f)), scope);
                Ctl::Normal
            }
            StmtKind::Assign { targets, value } => {
                let v = self.eval(value, scope)?;
                for t in targets {
                    self.assign(t, v.clone(), scope)?;
                }
                Ctl::Normal
            }
            StmtKind::AnnAssign { target, value, .. } => {
                if let Some(value) = value {
                    let v = self.eval(value, scope)?;
                    self.assign(target, v, scope)?;
                }
                Ctl::Normal
            }
            StmtKind::AugAssign { target, op, value } => {
                self.aug_assign(target, *op, value, scope)?;
                Ctl::Normal
            }
            StmtKind::Expr(e) => {
                self.eval(e, scope)?;
                Ctl::Normal
            }
            StmtKind::Return(e) => {
                let v = match e {
                    Some(e) => self.eval(e, scope)?,
                    None => Obj::None,
                };
                if traced {
                    self.end_step(scope)?;
                }
                return Ok(Ctl::Return(v));
            }
            StmtKind::If { test, body, orelse, .. } => {
                let t = self.eval(test, scope)?.truthy();
                if traced {
                    self.end_step(scope)?;
                }
                return if t {
                    self.exec_block(body, scope)
                } else {
                    self.exec_block(orelse, scope)
                };
            }
            StmtKind::While { test, body, orelse } => {
                loop {
                    let t = self.eval(test, scope)?.truthy();
                    if traced {
                        self.end_step(scope)?;
                    }
                    if !t {
                        return self.exec_block(orelse, scope);
                    }
                    match self.exec_block(body, scope)? {
                        Ctl::Break => return Ok(Ctl::Normal),
                        r @ Ctl::Return(_) => return Ok(r),
                        Ctl::Normal | Ctl::Continue => {}
                    }
                    self.header(stmt, traced)?;
                }
            }
            StmtKind::For { target, iter, body, orelse } => {
                let src = self.eval(iter, scope)?;
                let it = self.make_iter(&src)?;
                loop {
                    match self.next_item(&it)? {
                        Some(x) => {
                            self.assign(target, x, scope)?;
                            if traced {
                                self.end_step(scope)?;
                            }
                        }
                        None => {
                            if traced {
                                self.end_step(scope)?;
                            }
                            return self.exec_block(orelse, scope);
                        }
                    }
                    match self.exec_block(body, scope)? {
                        Ctl::Break => return Ok(Ctl::Normal),
                        r @ Ctl::Return(_) => return Ok(r),
                        Ctl::Normal | Ctl::Continue => {}
                    }
                    self.header(stmt, traced)?;
                }
            }
            StmtKind::Break => Ctl::Break,
            StmtKind::Continue => Ctl::Continue,
            StmtKind::Pass | StmtKind::ImportFrom { .. } => Ctl::Normal,
            StmtKind::Assert { test, msg } => {
                if !self.eval(test, scope)?.truthy() {
                    let m = match msg {
                        Some(m) => self.eval(m, scope)?.to_str(),
                        None => String::new(),
                    };
                    return raise("AssertionError", m);
                }
                Ctl::Normal
            }
            StmtKind::Delete(targets) => {
                for t in targets {
                    self.delete(t, scope)?;
                }
                Ctl::Normal
            }
        };
        if traced {
            self.end_step(scope)?;
        }
        Ok(ctl)
    }

    fn fresh_id(&mut self) -> usize {
        self.next_id += 1;
        self.next_id
    }

    // ------------------------------------------------------------ targets

    pub fn assign(&mut self, target: &Expr, v: Obj, scope: &Scope) -> RResult<()> {
        match &target.kind {
            ExprKind::Name(n) => {
                self.store(n, v, scope);
                Ok(())
            }
            ExprKind::Tuple(elts) | ExprKind::List(elts) => {
                let items = match &v {
                    Obj::List(_) | Obj::Tuple(_) | Obj::Str(_) | Obj::Range(_) | Obj::Set(_)
                    | Obj::Dict(_) | Obj::Iter(_) | Obj::View(..) => self.collect(&v)?,
                    other => {
                        return raise("TypeError", format!(
                            "cannot unpack non-iterable {} object",
                            other.type_name()
                        ))
                    }
                };
                if items.len() > elts.len() {
                    return raise(
                        "ValueError",
                        format!("too many values to unpack (expected {})", elts.len()),
                    );
                }
                if items.len() < elts.len() {
                    return raise(
                        "ValueError",
                        format!(
                            "not enough values to unpack (expected {}, got {})",
                            elts.len(),
                            items.len()
                        ),
                    );
                }
                for (t, x) in elts.iter().zip(items) {
                    self.assign(t, x, scope)?;
                }
                Ok(())
            }
            ExprKind::Subscript { value, index } => {
                let container = self.eval(value, scope)?;
                if let ExprKind::Slice { lower, upper, step } = &index.kind {
                    let (lo, hi, st) = self.slice_parts(lower, upper, step, scope)?;
                    let items = self.collect(&v)?;
                    return Ok(super::index::set_slice(&container, lo, hi, st, items)?);
                }
                let key = self.eval(index, scope)?;
                Ok(super::index::set_item(&container, &key, v)?)
            }
            _ => raise("SyntaxError", "cannot assign to expression"),
        }
    }

    fn delete(&mut self, target: &Expr, scope: &Scope) -> RResult<()> {
        match &target.kind {
            ExprKind::Name(n) => {
                let removed = scope.borrow_mut().vars.remove(n);
                if removed.is_none() {
                    return raise("NameError", format!("name '{n}' is not defined"));
                }
                Ok(())
            }
            ExprKind::Tuple(elts) | ExprKind::List(elts) => {
                for t in elts {
                    self.delete(t, scope)?;
                }
                Ok(())
            }
            ExprKind::Subscript { value, index } => {
                let container = self.eval(value, scope)?;
                if let ExprKind::Slice { lower, upper, step } = &index.kind {
                    let (lo, hi, st) = self.slice_parts(lower, upper, step, scope)?;
                    return Ok(super::index::del_slice(&container, lo, hi, st)?);
                }
                let key = self.eval(index, scope)?;
                Ok(super::index::del_item(&container, &key)?)
            }
            _ => raise("SyntaxError", "cannot delete expression"),
        }
    }

    fn aug_assign(&mut self, target: &Expr, op: BinOp, value: &Expr, scope: &Scope) -> RResult<()> {
        match &target.kind {
            ExprKind::Name(n) => {
                let cur = self.load(n, scope)?;
                let rhs = self.eval(value, scope)?;
                let new = self.inplace(op, cur, rhs)?;
                self.store(n, new, scope);
                Ok(())
            }
            ExprKind::Subscript { value: container, index } => {
                let c = self.eval(container, scope)?;
                if let ExprKind::Slice { lower, upper, step } = &index.kind {
                    let (lo, hi, st) = self.slice_parts(lower, upper, step, scope)?;
                    let cur = super::index::get_slice(&c, lo.clone(), hi.clone(), st.clone())?;
                    let rhs = self.eval(value, scope)?;
                    let new = self.inplace(op, cur, rhs)?;
                    let items = self.collect(&new)?;
                    return Ok(super::index::set_slice(&c, lo, hi, st, items)?);
                }
                let key = self.eval(index, scope)?;
                let cur = super::index::get_item(&c, &key)?;
                let rhs = self.eval(value, scope)?;
                let new = self.inplace(op, cur, rhs)?;
                Ok(super::index::set_item(&c, &key, new)?)
            }
            _ => raise("SyntaxError", "illegal expression for augmented assignment"),
        }
    }

    /// `a op= b`, mutating lists, sets and dicts in place.
    fn inplace(&mut self, op: BinOp, a: Obj, b: Obj) -> RResult<Obj> {
        match (&a, op) {
            (Obj::List(l), BinOp::Add) => {
                let items = self.collect(&b)?;
                l.borrow_mut().extend(items);
                Ok(a)
            }
            (Obj::List(l), BinOp::Mul) => {
                let n = match &b {
                    Obj::Int(_) | Obj::Bool(_) => b.as_i64().unwrap_or(i64::MAX),
                    other => {
                        return raise("TypeError", format!(
                            "can't multiply sequence by non-int of type '{}'",
                            other.type_name()
                        ))
                    }
                };
                let cur = l.borrow().clone();
                let grown = ops::binop(BinOp::Mul, &Obj::list(cur), &Obj::small(n))?;
                if let Obj::List(g) = grown {
                    let g = g.borrow().clone();
                    *l.borrow_mut() = g;
                }
                Ok(a)
            }
            (Obj::Set(s), BinOp::BitOr | BinOp::BitAnd | BinOp::Sub | BinOp::BitXor)
                if matches!(b, Obj::Set(_)) =>
            {
                let Obj::Set(other) = &b else { unreachable!() };
                let other = other.borrow().clone();
                let new = ops::set_algebra(op, &s.borrow(), &other);
                *s.borrow_mut() = new;
                Ok(a)
            }
            (Obj::Dict(d), BinOp::BitOr) => {
                super::methods::dict_update(self, d, &b)?;
                Ok(a)
            }
            _ => Ok(ops::binop(op, &a, &b)?),
        }
    }

    pub fn slice_parts(
        &mut self,
        lower: &Option<Box<Expr>>,
        upper: &Option<Box<Expr>>,
        step: &Option<Box<Expr>>,
        scope: &Scope,
    ) -> RResult<(Option<BigInt>, Option<BigInt>, Option<BigInt>)> {
        let part = |e: &Option<Box<Expr>>, this: &mut Interp| -> RResult<Option<BigInt>> {
            match e {
                None => Ok(None),
                Some(e) => {
                    let v = this.eval(e, scope)?;
                    match v {
                        Obj::None => Ok(None),
                        Obj::Int(_) | Obj::Bool(_) => Ok(v.as_index()),
                        _ => raise("TypeError", 
                            "slice indices must be integers or None or have an __index__ method",
                        ),
                    }
                }
            }
        };
        let lo = part(lower, self)?;
        let hi = part(upper, self)?;
        let st = part(step, self)?;
        Ok((lo, hi, st))
    }

    // ------------------------------------------------------------ expressions

    pub fn eval(&mut self, e: &Expr, scope: &Scope) -> RResult<Obj> {
        stacker::maybe_grow(RED_ZONE, STACK_SEGMENT, || self.eval_inner(e, scope))
    }

    fn eval_inner(&mut self, e: &Expr, scope: &Scope) -> RResult<Obj> {
        Ok(match &e.kind {
            ExprKind::Constant(c) => match c {
                Constant::None => Obj::None,
                Constant::Bool(b) => Obj::Bool(*b),
                Constant::Int(n) => Obj::int(n.clone()),
                Constant::Float(f) => Obj::Float(*f),
                Constant::Str(s) => Obj::str(s.as_str()),
            },
            ExprKind::Name(n) => self.load(n, scope)?,
            ExprKind::List(xs) => Obj::list(self.eval_all(xs, scope)?),
            ExprKind::Tuple(xs) => Obj::tuple(self.eval_all(xs, scope)?),
            ExprKind::Set(xs) => {
                let items = self.eval_all(xs, scope)?;
                let mut s = PySet::default();
                for x in items {
                    let k = hash_of(&x)?;
                    s.map.entry(k).or_insert(x);
                }
                Obj::Set(shared(s))
            }
            ExprKind::Dict(pairs) => {
                let mut d = PyDict::default();
                for (k, v) in pairs {
                    let k = self.eval(k, scope)?;
                    let v = self.eval(v, scope)?;
                    dict_insert(&mut d, k, v)?;
                }
                Obj::Dict(shared(d))
            }
            ExprKind::BinOp { left, op, right } => {
                let a = self.eval(left, scope)?;
                let b = self.eval(right, scope)?;
                ops::binop(*op, &a, &b)?
            }
            ExprKind::UnaryOp { op, operand } => {
                let a = self.eval(operand, scope)?;
                ops::unary(*op, &a)?
            }
            ExprKind::BoolOp { op, values } => {
                let mut last = Obj::None;
                for (i, v) in values.iter().enumerate() {
                    last = self.eval(v, scope)?;
                    let t = last.truthy();
                    let stop = match op {
                        BoolOp::And => !t,
                        BoolOp::Or => t,
                    };
                    if stop || i + 1 == values.len() {
                        break;
                    }
                }
                last
            }
            ExprKind::Compare { left, ops: cmp_ops, comparators } => {
                let mut a = self.eval(left, scope)?;
                for (op, rhs) in cmp_ops.iter().zip(comparators) {
                    let b = self.eval(rhs, scope)?;
                    if !self.compare(*op, &a, &b)? {
                        return Ok(Obj::Bool(false));
                    }
                    a = b;
                }
                Obj::Bool(true)
            }
            ExprKind::Call { func, args, keywords } => {
                if let ExprKind::Attribute { value, attr } = &func.kind {
                    let recv = self.eval(value, scope)?;
                    let argv = self.eval_all(args, scope)?;
                    let kw = self.eval_keywords(keywords, scope)?;
                    if let Obj::Type(t) = recv {
                        let d = super::methods::descriptor(t, attr)?;
                        return self.call(&d, argv, kw);
                    }
                    let name = super::methods::resolve(&recv, attr)?;
                    return super::methods::call_method(self, &recv, name, argv, kw);
                }
                let f = self.eval(func, scope)?;
                let argv = self.eval_all(args, scope)?;
                let kw = self.eval_keywords(keywords, scope)?;
                self.call(&f, argv, kw)?
            }
            ExprKind::Attribute { value, attr } => {
                let recv = self.eval(value, scope)?;
                if let Obj::Type(t) = recv {
                    super::methods::descriptor(t, attr)?
                } else {
                    let name = super::methods::resolve(&recv, attr)?;
                    Obj::Method(Rc::new((recv, name)))
                }
            }
            ExprKind::Subscript { value, index } => {
                let c = self.eval(value, scope)?;
                if let ExprKind::Slice { lower, upper, step } = &index.kind {
                    let (lo, hi, st) = self.slice_parts(lower, upper, step, scope)?;
                    super::index::get_slice(&c, lo, hi, st)?
                } else {
                    let k = self.eval(index, scope)?;
                    super::index::get_item(&c, &k)?
                }
            }
            ExprKind::Slice { .. } => {
                return raise("TypeError", "slice objects are not supported here")
            }
            ExprKind::IfExp { test, body, orelse } => {
                if self.eval(test, scope)?.truthy() {
                    self.eval(body, scope)?
                } else {
                    self.eval(orelse, scope)?
                }
            }
            ExprKind::Lambda(l) => {
                let f = Closure {
                    name: "<lambda>".into(),
                    params: l.params.iter().map(|p| p.name.clone()).collect(),
                    defaults: vec![None; l.params.len()],
                    body: FuncBody::Lambda(l.clone()),
                    scope: scope.clone(),
                    locals: Rc::new(l.locals.clone()),
                    id: self.fresh_id(),
                };
                Obj::Func(Rc::new(f))
            }
            ExprKind::ListComp { elt, generators } => {
                let mut st = self.start_gen(e, elt, None, generators, scope)?;
                let mut out = Vec::new();
                while let Some((x, _)) = self.gen_next(&mut st)? {
                    out.push(x);
                }
                Obj::list(out)
            }
            ExprKind::SetComp { elt, generators } => {
                let mut st = self.start_gen(e, elt, None, generators, scope)?;
                let mut s = PySet::default();
                while let Some((x, _)) = self.gen_next(&mut st)? {
                    let k = hash_of(&x)?;
                    s.map.entry(k).or_insert(x);
                }
                Obj::Set(shared(s))
            }
            ExprKind::DictComp { key, value, generators } => {
                let mut st = self.start_gen(e, key, Some(value), generators, scope)?;
                let mut d = PyDict::default();
                while let Some((k, v)) = self.gen_next(&mut st)? {
                    dict_insert(&mut d, k, v.expect("dict comprehension value"))?;
                }
                Obj::Dict(shared(d))
            }
            ExprKind::GeneratorExp { elt, generators } => {
                let st = self.start_gen(e, elt, None, generators, scope)?;
                Obj::Iter(shared(IterState::Gen(Box::new(st))))
            }
        })
    }

    fn eval_all(&mut self, xs: &[Expr], scope: &Scope) -> RResult<Vec<Obj>> {
        let mut out = Vec::with_capacity(xs.len());
        for x in xs {
            out.push(self.eval(x, scope)?);
        }
        Ok(out)
    }

    fn eval_keywords(
        &mut self,
        kws: &[crate::syntax::ast::Keyword],
        scope: &Scope,
    ) -> RResult<Vec<(String, Obj)>> {
        let mut out = Vec::with_capacity(kws.len());
        for k in kws {
            let v = self.eval(&k.value, scope)?;
            if out.iter().any(|(n, _): &(String, Obj)| *n == k.name) {
                return raise(
                    "SyntaxError",
                    format!("keyword argument repeated: {}", k.name),
                );
            }
            out.push((k.name.clone(), v));
        }
        Ok(out)
    }

    pub fn compare(&mut self, op: CmpOp, a: &Obj, b: &Obj) -> RResult<bool> {
        Ok(match op {
            CmpOp::Eq => ops::py_eq(a, b)?,
            CmpOp::NotEq => !ops::py_eq(a, b)?,
            CmpOp::Is => ops::is_same(a, b),
            CmpOp::IsNot => !ops::is_same(a, b),
            CmpOp::In => self.contains(b, a)?,
            CmpOp::NotIn => !self.contains(b, a)?,
            _ => ops::order(op, a, b)?,
        })
    }

    pub fn contains(&mut self, container: &Obj, item: &Obj) -> RResult<bool> {
        if let Some(r) = ops::contains(container, item)? {
            return Ok(r);
        }
        let Obj::Iter(it) = container else { unreachable!() };
        while let Some(x) = self.next_item(it)? {
            self.tick(1)?;
            if ops::is_same(&x, item) || ops::py_eq(&x, item)? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    // ------------------------------------------------------------ calls

    pub fn call(&mut self, f: &Obj, args: Vec<Obj>, kwargs: Vec<(String, Obj)>) -> RResult<Obj> {
        match f {
            Obj::Func(c) => {
                let c = c.clone();
                let frame = self.bind_frame(&c, args, kwargs)?;
                self.run_frame(&c, &frame)
            }
            Obj::Builtin(name) | Obj::Type(name) => super::builtins::call(self, name, args, kwargs),
            Obj::Method(m) => super::methods::call_method(self, &m.0, m.1, args, kwargs),
            Obj::Descr(ty, name) => {
                let mut args = args;
                if args.is_empty() {
                    return raise("TypeError", format!(
                        "unbound method {ty}.{name}() needs an argument"
                    ));
                }
                let recv = args.remove(0);
                let actual = recv.type_name();
                if actual != *ty {
                    return raise("TypeError", format!(
                        "descriptor '{name}' for '{ty}' objects doesn't apply to a '{actual}' object"
                    ));
                }
                super::methods::call_method(self, &recv, name, args, kwargs)
            }
            other => raise("TypeError", format!(
                "'{}' object is not callable",
                other.type_name()
            )),
        }
    }

    /// New frame for `c` with arguments bound to parameters.
    pub fn bind_frame(
        &mut self,
        c: &Rc<Closure>,
        args: Vec<Obj>,
        kwargs: Vec<(String, Obj)>,
    ) -> RResult<Scope> {
        let fname = &c.name;
        let n = c.params.len();
        if args.len() > n {
            let msg = if n == 1 {
                format!("{fname}() takes 1 positional argument but {} were given", args.len())
            } else {
                format!(
                    "{fname}() takes {n} positional arguments but {} {} given",
                    args.len(),
                    if args.len() == 1 { "was" } else { "were" }
                )
            };
            return raise("TypeError", msg);
        }
        let mut slots: Vec<Option<Obj>> = vec![None; n];
        for (i, a) in args.into_iter().enumerate() {
            slots[i] = Some(a);
        }
        for (k, v) in kwargs {
            let Some(i) = c.params.iter().position(|p| *p == k) else {
                return raise("TypeError", format!(
                    "{fname}() got an unexpected keyword argument '{k}'"
                ));
            };
            if slots[i].is_some() {
                return raise("TypeError", format!(
                    "{fname}() got multiple values for argument '{k}'"
                ));
            }
            slots[i] = Some(v);
        }
        let mut missing = Vec::new();
        for (i, slot) in slots.iter_mut().enumerate().take(n) {
            if slot.is_none() {
                match &c.defaults[i] {
                    Some(d) => *slot = Some(d.clone()),
                    None => missing.push(format!("'{}'", c.params[i])),
                }
            }
        }
        if !missing.is_empty() {
            let list = match missing.len() {
                1 => missing[0].clone(),
                2 => format!("{} and {}", missing[0], missing[1]),
                _ => {
                    let (last, rest) = missing.split_last().unwrap();
                    format!("{}, and {}", rest.join(", "), last)
                }
            };
            return raise("TypeError", format!(
                "{fname}() missing {} required positional argument{}: {list}",
                missing.len(),
                if missing.len() == 1 { "" } else { "s" }
            ));
        }
        let frame = new_scope(Some(c.locals.clone()), Some(c.scope.clone()));
        {
            let mut data = frame.borrow_mut();
            for (p, v) in c.params.iter().zip(slots) {
                data.vars.insert(p.clone(), v.expect("bound"));
            }
        }
        Ok(frame)
    }

    /// Run a bound frame to completion.
    pub fn run_frame(&mut self, c: &Rc<Closure>, frame: &Scope) -> RResult<Obj> {
        if self.depth >= RECURSION_LIMIT {
            return raise("RecursionError", "maximum recursion depth exceeded");
        }
        self.depth += 1;
        let r = stacker::maybe_grow(RED_ZONE, STACK_SEGMENT, || match &c.body {
            FuncBody::Def(d) => match self.exec_block(&d.body, frame) {
                Ok(Ctl::Return(v)) => Ok(v),
                Ok(_) => Ok(Obj::None),
                Err(e) => Err(e),
            },
            FuncBody::Lambda(l) => self.eval(&l.body, frame),
        });
        self.depth -= 1;
        r
    }

    // ------------------------------------------------------------ comprehensions

    fn start_gen(
        &mut self,
        node: &Expr,
        elt: &Expr,
        value: Option<&Expr>,
        generators: &[Comprehension],
        scope: &Scope,
    ) -> RResult<GenState> {
        let key = node as *const Expr as usize;
        let def = match self.gens.get(&key) {
            Some(d) => d.clone(),
            None => {
                let mut locals = BTreeSet::new();
                for g in generators {
                    crate::syntax::ast::target_names(&g.target, &mut locals);
                }
                let d = Rc::new(GenDef {
                    elt: elt.clone(),
                    value: value.cloned(),
                    generators: generators.to_vec(),
                    locals: Rc::new(locals),
                });
                self.gens.insert(key, d.clone());
                d
            }
        };
        // The outermost iterable is evaluated in the enclosing scope.
        let first = self.eval(&def.generators[0].iter, scope)?;
        let it = self.iter_of(&first)?;
        let inner = new_scope(Some(def.locals.clone()), Some(scope.clone()));
        Ok(GenState {
            def,
            scope: inner,
            iters: vec![it],
            done: false,
        })
    }

    /// Next element of a comprehension; the second item is the dict value.
    pub fn gen_next(&mut self, st: &mut GenState) -> RResult<Option<(Obj, Option<Obj>)>> {
        if st.done {
            return Ok(None);
        }
        let def = st.def.clone();
        loop {
            let Some(it) = st.iters.last().cloned() else {
                st.done = true;
                return Ok(None);
            };
            let level = st.iters.len() - 1;
            let item = match self.next_item_obj(&it) {
                Ok(x) => x,
                Err(e) => {
                    st.done = true;
                    return Err(e);
                }
            };
            let Some(x) = item else {
                st.iters.pop();
                continue;
            };
            self.tick(1)?;
            let g = &def.generators[level];
            self.assign(&g.target, x, &st.scope)?;
            let mut keep = true;
            for cond in &g.ifs {
                if !self.eval(cond, &st.scope)?.truthy() {
                    keep = false;
                    break;
                }
            }
            if !keep {
                continue;
            }
            if level + 1 < def.generators.len() {
                let src = self.eval(&def.generators[level + 1].iter, &st.scope)?;
                let it = self.iter_of(&src)?;
                st.iters.push(it);
                continue;
            }
            let k = self.eval(&def.elt, &st.scope)?;
            let v = match &def.value {
                Some(v) => Some(self.eval(v, &st.scope)?),
                None => None,
            };
            return Ok(Some((k, v)));
        }
    }

    fn next_item_obj(&mut self, it: &Obj) -> RResult<Option<Obj>> {
        match it {
            Obj::Iter(s) => self.next_item(s),
            _ => unreachable!("iter_of returns iterators"),
        }
    }

    /// Iterator object for `src`.
    pub fn iter_of(&mut self, src: &Obj) -> RResult<Obj> {
        Ok(Obj::Iter(self.make_iter(src)?))
    }

    pub fn make_iter(&mut self, src: &Obj) -> RResult<super::obj::Shared<IterState>> {
        let st = match src {
            Obj::Iter(it) => return Ok(it.clone()),
            Obj::List(l) => IterState::List {
                list: l.clone(),
                idx: 0,
            },
            Obj::Tuple(t) => IterState::Items {
                items: t.clone(),
                idx: 0,
                ty: "tuple_iterator",
            },
            Obj::Str(s) => IterState::Str {
                s: s.clone(),
                pos: 0,
            },
            Obj::Range(r) => IterState::Range {
                cur: r.start.clone(),
                remaining: r.len(),
                step: r.step.clone(),
                ty: "range_iterator",
            },
            Obj::Set(s) => {
                let items = super::obj::set_sorted(&s.borrow());
                let len = items.len();
                IterState::Set {
                    set: s.clone(),
                    items,
                    idx: 0,
                    len,
                }
            }
            Obj::Dict(d) => IterState::Dict {
                dict: d.clone(),
                idx: 0,
                len: d.borrow().map.len(),
                kind: ViewKind::Keys,
            },
            Obj::View(d, kind) => IterState::Dict {
                dict: d.clone(),
                idx: 0,
                len: d.borrow().map.len(),
                kind: *kind,
            },
            other => {
                return raise("TypeError", format!(
                    "'{}' object is not iterable",
                    other.type_name()
                ))
            }
        };
        Ok(shared(st))
    }

    pub fn next_item(&mut self, it: &super::obj::Shared<IterState>) -> RResult<Option<Obj>> {
        {
            let mut st = it.borrow_mut();
            match &mut *st {
                IterState::List { list, idx } => {
                    let l = list.borrow();
                    if *idx < l.len() {
                        let v = l[*idx].clone();
                        *idx += 1;
                        return Ok(Some(v));
                    }
                    drop(l);
                    *idx = usize::MAX;
                    return Ok(None);
                }
                IterState::RevList { list, idx } => {
                    let l = list.borrow();
                    if *idx >= 0 && (*idx as usize) < l.len() {
                        let v = l[*idx as usize].clone();
                        *idx -= 1;
                        return Ok(Some(v));
                    }
                    drop(l);
                    *idx = -1;
                    return Ok(None);
                }
                IterState::Items { items, idx, .. } => {
                    if *idx < items.len() {
                        let v = items[*idx].clone();
                        *idx += 1;
                        return Ok(Some(v));
                    }
                    return Ok(None);
                }
                IterState::Str { s, pos } => {
                    return Ok(match s[*pos..].chars().next() {
                        Some(c) => {
                            *pos += c.len_utf8();
                            Some(Obj::str(c.to_string()))
                        }
                        None => None,
                    });
                }
                IterState::Range { cur, remaining, step, .. } => {
                    if remaining.is_positive() {
                        let v = cur.clone();
                        *cur += &*step;
                        *remaining -= 1;
                        return Ok(Some(Obj::int(v)));
                    }
                    return Ok(None);
                }
                IterState::Set { set, items, idx, len } => {
                    if set.borrow().map.len() != *len {
                        *len = usize::MAX;
                        return raise("RuntimeError", "Set changed size during iteration");
                    }
                    if *idx < items.len() {
                        let v = items[*idx].clone();
                        *idx += 1;
                        return Ok(Some(v));
                    }
                    return Ok(None);
                }
                IterState::Dict { dict, idx, len, kind } => {
                    let d = dict.borrow();
                    if d.map.len() != *len {
                        drop(d);
                        *len = usize::MAX;
                        return raise(
                            "RuntimeError",
                            "dictionary changed size during iteration",
                        );
                    }
                    let Some((_, (k, v))) = d.map.get_index(*idx) else {
                        return Ok(None);
                    };
                    let out = match kind {
                        ViewKind::Keys => k.clone(),
                        ViewKind::Values => v.clone(),
                        ViewKind::Items => Obj::tuple(vec![k.clone(), v.clone()]),
                    };
                    *idx += 1;
                    return Ok(Some(out));
                }
                IterState::Busy => {
                    return raise("ValueError", "generator already executing")
                }
                _ => {}
            }
        }
        // Stateful iterators that call back into the interpreter.
        let mut st = std::mem::replace(&mut *it.borrow_mut(), IterState::Busy);
        let r = self.advance(&mut st);
        *it.borrow_mut() = st;
        r
    }

    fn advance(&mut self, st: &mut IterState) -> RResult<Option<Obj>> {
        match st {
            IterState::Enumerate { inner, count } => {
                let Some(x) = self.next_item_obj(inner)? else { return Ok(None) };
                let i = count.clone();
                *count += 1;
                Ok(Some(Obj::tuple(vec![Obj::int(i), x])))
            }
            IterState::Zip { inners } => {
                if inners.is_empty() {
                    return Ok(None);
                }
                let mut out = Vec::with_capacity(inners.len());
                for i in inners.iter() {
                    match self.next_item_obj(i)? {
                        Some(x) => out.push(x),
                        None => return Ok(None),
                    }
                }
                Ok(Some(Obj::tuple(out)))
            }
            IterState::Map { func, inners } => {
                let mut args = Vec::with_capacity(inners.len());
                for i in inners.iter() {
                    match self.next_item_obj(i)? {
                        Some(x) => args.push(x),
                        None => return Ok(None),
                    }
                }
                let f = func.clone();
                Ok(Some(self.call(&f, args, Vec::new())?))
            }
            IterState::Filter { func, inner } => loop {
                let Some(x) = self.next_item_obj(inner)? else { return Ok(None) };
                let keep = match &*func {
                    Obj::None => x.truthy(),
                    f => {
                        let f = f.clone();
                        self.call(&f, vec![x.clone()], Vec::new())?.truthy()
                    }
                };
                if keep {
                    return Ok(Some(x));
                }
                self.tick(1)?;
            },
            IterState::Gen(g) => Ok(self.gen_next(g)?.map(|(x, _)| x)),
            _ => unreachable!("simple iterators are handled inline"),
        }
    }

    /// Drain an iterable into a vector, charging one fuel unit per element.
    pub fn collect(&mut self, src: &Obj) -> RResult<Vec<Obj>> {
        let out = match src {
            Obj::List(l) => l.borrow().clone(),
            Obj::Tuple(t) => (**t).clone(),
            Obj::Str(s) => s.chars().map(|c| Obj::str(c.to_string())).collect(),
            Obj::Range(r) => {
                let n = r.len();
                let count = n.to_usize().filter(|&c| c <= ops::MAX_ELEMENTS);
                let Some(count) = count else {
                    return raise("MemoryError", "range too large");
                };
                self.tick(count as u64)?;
                let mut out = Vec::with_capacity(count);
                let mut cur = r.start.clone();
                for _ in 0..count {
                    out.push(Obj::int(cur.clone()));
                    cur += &r.step;
                }
                return Ok(out);
            }
            Obj::Set(s) => super::obj::set_sorted(&s.borrow()),
            Obj::Dict(d) | Obj::View(d, ViewKind::Keys) => {
                d.borrow().map.values().map(|(k, _)| k.clone()).collect()
            }
            Obj::View(d, ViewKind::Values) => {
                d.borrow().map.values().map(|(_, v)| v.clone()).collect()
            }
            Obj::View(d, ViewKind::Items) => d
                .borrow()
                .map
                .values()
                .map(|(k, v)| Obj::tuple(vec![k.clone(), v.clone()]))
                .collect(),
            _ => {
                let it = self.make_iter(src)?;
                let mut out = Vec::new();
                while let Some(x) = self.next_item(&it)? {
                    self.tick(1)?;
                    out.push(x);
                    if out.len() > ops::MAX_ELEMENTS {
                        return raise("MemoryError", "too many elements");
                    }
                }
                return Ok(out);
            }
        };
        self.tick(out.len() as u64)?;
        Ok(out)
    }
}

pub(crate) fn hash_of(x: &Obj) -> EResult<super::value::HashKey> {
    x.hash_key()
        .or_else(|t| type_error(format!("unhashable type: '{t}'")))
}

/// Insert keeping the first key object on overwrite.
pub(crate) fn dict_insert(d: &mut PyDict, k: Obj, v: Obj) -> EResult<()> {
    let h = hash_of(&k)?;
    match d.map.get_mut(&h) {
        Some(slot) => slot.1 = v,
        None => {
            d.map.insert(h, (k, v));
        }
    }
    Ok(())
}

/// Integer index into a sequence of length `len`, with negative wrap-around.
pub(crate) fn seq_index(i: &BigInt, len: usize) -> Option<usize> {
    let i = if i.is_negative() {
        i + BigInt::from(len)
    } else {
        i.clone()
    };
    if i.is_negative() {
        return None;
    }
    i.to_usize().filter(|&u| u < len)
}

