//! Mutable runtime objects.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::rc::Rc;

use indexmap::IndexMap;
use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::syntax::ast::{Comprehension, Expr, FunctionDef, Lambda};

use super::render::{float_repr, str_repr};
use super::value::{HashKey, RenderOverflow, Value};

pub(crate) type Shared<T> = Rc<RefCell<T>>;

pub(crate) fn shared<T>(x: T) -> Shared<T> {
    Rc::new(RefCell::new(x))
}

#[derive(Clone)]
pub(crate) enum Obj {
    None,
    Bool(bool),
    Int(Rc<BigInt>),
    Float(f64),
    Str(Rc<str>),
    List(Shared<Vec<Obj>>),
    Tuple(Rc<Vec<Obj>>),
    Set(Shared<PySet>),
    Dict(Shared<PyDict>),
    Range(Rc<RangeObj>),
    Iter(Shared<IterState>),
    Func(Rc<Closure>),
    /// A free builtin function, by name.
    Builtin(&'static str),
    /// A type object, by name (`int`, `str`, ...).
    Type(&'static str),
    /// Method bound to a receiver: `s.upper`.
    Method(Rc<(Obj, &'static str)>),
    /// Method looked up on a type: `str.upper`.
    Descr(&'static str, &'static str),
    View(Shared<PyDict>, ViewKind),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub(crate) enum ViewKind {
    Keys,
    Values,
    Items,
}

#[derive(Default, Clone)]
pub(crate) struct PyDict {
    pub map: IndexMap<HashKey, (Obj, Obj)>,
}

#[derive(Default, Clone)]
pub(crate) struct PySet {
    pub map: IndexMap<HashKey, Obj>,
}

pub(crate) struct RangeObj {
    pub start: BigInt,
    pub stop: BigInt,
    pub step: BigInt,
}

impl RangeObj {
    pub fn len(&self) -> BigInt {
        let (lo, hi, step) = if self.step.is_positive() {
            (&self.start, &self.stop, self.step.clone())
        } else {
            (&self.stop, &self.start, -&self.step)
        };
        if lo >= hi {
            return BigInt::zero();
        }
        (hi - lo - 1u32) / step + 1u32
    }

    pub fn get(&self, i: &BigInt) -> BigInt {
        &self.start + &self.step * i
    }
}

pub(crate) enum FuncBody {
    Def(Rc<FunctionDef>),
    Lambda(Rc<Lambda>),
}

pub(crate) struct Closure {
    pub name: String,
    pub params: Vec<String>,
    /// Default values aligned with `params`.
    pub defaults: Vec<Option<Obj>>,
    pub body: FuncBody,
    pub scope: Scope,
    pub locals: Rc<BTreeSet<String>>,
    pub id: usize,
}

pub(crate) struct GenDef {
    pub elt: Expr,
    /// Value expression for dict comprehensions.
    pub value: Option<Expr>,
    pub generators: Vec<Comprehension>,
    pub locals: Rc<BTreeSet<String>>,
}

pub(crate) struct GenState {
    pub def: Rc<GenDef>,
    pub scope: Scope,
    pub iters: Vec<Obj>,
    pub done: bool,
}

pub(crate) enum IterState {
    List { list: Shared<Vec<Obj>>, idx: usize },
    RevList { list: Shared<Vec<Obj>>, idx: isize },
    Items { items: Rc<Vec<Obj>>, idx: usize, ty: &'static str },
    Str { s: Rc<str>, pos: usize },
    Range { cur: BigInt, remaining: BigInt, step: BigInt, ty: &'static str },
    Set { set: Shared<PySet>, items: Vec<Obj>, idx: usize, len: usize },
    Dict { dict: Shared<PyDict>, idx: usize, len: usize, kind: ViewKind },
    Enumerate { inner: Obj, count: BigInt },
    Zip { inners: Vec<Obj> },
    Map { func: Obj, inners: Vec<Obj> },
    Filter { func: Obj, inner: Obj },
    Gen(Box<GenState>),
    /// Placeholder while a state is being advanced.
    Busy,
}

impl IterState {
    pub fn type_name(&self) -> &'static str {
        match self {
            IterState::List { .. } => "list_iterator",
            IterState::RevList { .. } => "list_reverseiterator",
            IterState::Items { ty, .. } => ty,
            IterState::Str { .. } => "str_iterator",
            IterState::Range { ty, .. } => ty,
            IterState::Set { .. } => "set_iterator",
            IterState::Dict { kind, .. } => match kind {
                ViewKind::Keys => "dict_keyiterator",
                ViewKind::Values => "dict_valueiterator",
                ViewKind::Items => "dict_itemiterator",
            },
            IterState::Enumerate { .. } => "enumerate",
            IterState::Zip { .. } => "zip",
            IterState::Map { .. } => "map",
            IterState::Filter { .. } => "filter",
            IterState::Gen(_) => "generator",
            IterState::Busy => "generator",
        }
    }
}

pub(crate) struct ScopeData {
    pub vars: BTreeMap<String, Obj>,
    /// Names local to this scope; `None` for the module scope.
    pub declared: Option<Rc<BTreeSet<String>>>,
    pub parent: Option<Scope>,
}

pub(crate) type Scope = Shared<ScopeData>;

pub(crate) fn new_scope(declared: Option<Rc<BTreeSet<String>>>, parent: Option<Scope>) -> Scope {
    shared(ScopeData {
        vars: BTreeMap::new(),
        declared,
        parent,
    })
}

impl Obj {
    pub fn int(n: BigInt) -> Obj {
        Obj::Int(Rc::new(n))
    }

    pub fn small(n: i64) -> Obj {
        Obj::Int(Rc::new(BigInt::from(n)))
    }

    pub fn str(s: impl Into<Rc<str>>) -> Obj {
        Obj::Str(s.into())
    }

    pub fn list(v: Vec<Obj>) -> Obj {
        Obj::List(shared(v))
    }

    pub fn tuple(v: Vec<Obj>) -> Obj {
        Obj::Tuple(Rc::new(v))
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Obj::None => "NoneType",
            Obj::Bool(_) => "bool",
            Obj::Int(_) => "int",
            Obj::Float(_) => "float",
            Obj::Str(_) => "str",
            Obj::List(_) => "list",
            Obj::Tuple(_) => "tuple",
            Obj::Set(_) => "set",
            Obj::Dict(_) => "dict",
            Obj::Range(_) => "range",
            Obj::Iter(it) => it.borrow().type_name(),
            Obj::Func(_) => "function",
            Obj::Builtin(_) | Obj::Method(_) => "builtin_function_or_method",
            Obj::Type(_) => "type",
            Obj::Descr(..) => "method_descriptor",
            Obj::View(_, k) => match k {
                ViewKind::Keys => "dict_keys",
                ViewKind::Values => "dict_values",
                ViewKind::Items => "dict_items",
            },
        }
    }

    pub fn is_callable(&self) -> bool {
        matches!(
            self,
            Obj::Func(_) | Obj::Builtin(_) | Obj::Type(_) | Obj::Method(_) | Obj::Descr(..)
        )
    }

    pub fn truthy(&self) -> bool {
        match self {
            Obj::None => false,
            Obj::Bool(b) => *b,
            Obj::Int(n) => !n.is_zero(),
            Obj::Float(f) => *f != 0.0,
            Obj::Str(s) => !s.is_empty(),
            Obj::List(l) => !l.borrow().is_empty(),
            Obj::Tuple(t) => !t.is_empty(),
            Obj::Set(s) => !s.borrow().map.is_empty(),
            Obj::Dict(d) | Obj::View(d, _) => !d.borrow().map.is_empty(),
            Obj::Range(r) => !r.len().is_zero(),
            _ => true,
        }
    }

    /// Hash identity, or the unhashable type's name.
    pub fn hash_key(&self) -> Result<HashKey, &'static str> {
        Ok(match self {
            Obj::None => HashKey::None,
            Obj::Bool(b) => HashKey::Int(BigInt::from(*b as u8)),
            Obj::Int(n) => HashKey::Int((**n).clone()),
            Obj::Float(f) => HashKey::from_float(*f),
            Obj::Str(s) => HashKey::Str(s.to_string()),
            Obj::Tuple(xs) => HashKey::Tuple(
                xs.iter()
                    .map(Obj::hash_key)
                    .collect::<Result<_, _>>()?,
            ),
            Obj::List(_) => return Err("list"),
            Obj::Set(_) => return Err("set"),
            Obj::Dict(_) => return Err("dict"),
            Obj::View(_, ViewKind::Keys) => return Err("dict_keys"),
            Obj::View(_, ViewKind::Values) => return Err("dict_values"),
            Obj::View(_, ViewKind::Items) => return Err("dict_items"),
            Obj::Range(r) => HashKey::Tuple(vec![
                HashKey::Ident("range".into()),
                HashKey::Int(r.len()),
                HashKey::Int(r.start.clone()),
                HashKey::Int(r.step.clone()),
            ]),
            Obj::Func(f) => HashKey::Ident(format!("function#{}", f.id)),
            Obj::Builtin(n) => HashKey::Ident(format!("builtin:{n}")),
            Obj::Type(n) => HashKey::Ident(format!("type:{n}")),
            Obj::Descr(t, n) => HashKey::Ident(format!("descr:{t}.{n}")),
            Obj::Iter(it) => HashKey::Ident(format!("iter#{:p}", Rc::as_ptr(it))),
            Obj::Method(m) => HashKey::Ident(format!("method#{:p}", Rc::as_ptr(m))),
        })
    }

    /// Identity for `is` and cycle detection.
    pub fn ptr(&self) -> Option<usize> {
        match self {
            Obj::List(l) => Some(Rc::as_ptr(l) as *const u8 as usize),
            Obj::Tuple(t) => Some(Rc::as_ptr(t) as *const u8 as usize),
            Obj::Set(s) => Some(Rc::as_ptr(s) as *const u8 as usize),
            Obj::Dict(d) => Some(Rc::as_ptr(d) as *const u8 as usize),
            Obj::Iter(i) => Some(Rc::as_ptr(i) as *const u8 as usize),
            Obj::Func(f) => Some(Rc::as_ptr(f) as *const u8 as usize),
            Obj::Range(r) => Some(Rc::as_ptr(r) as *const u8 as usize),
            Obj::Method(m) => Some(Rc::as_ptr(m) as *const u8 as usize),
            Obj::View(d, _) => Some(Rc::as_ptr(d) as *const u8 as usize),
            _ => None,
        }
    }

    pub fn as_index(&self) -> Option<BigInt> {
        match self {
            Obj::Int(n) => Some((**n).clone()),
            Obj::Bool(b) => Some(BigInt::from(*b as u8)),
            _ => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        self.as_index().and_then(|n| n.to_i64())
    }

    /// Canonical rendering bounded by `cap` characters.
    pub fn repr_capped(&self, cap: usize) -> Result<String, RenderOverflow> {
        let mut r = Renderer {
            out: String::new(),
            cap,
            stack: Vec::new(),
        };
        r.render(self)?;
        if r.out.chars().count() > cap {
            return Err(RenderOverflow);
        }
        Ok(r.out)
    }

    pub fn repr(&self) -> String {
        self.repr_capped(usize::MAX).expect("unbounded")
    }

    /// `str()` conversion.
    pub fn to_str(&self) -> String {
        match self {
            Obj::Str(s) => s.to_string(),
            _ => self.repr(),
        }
    }

    /// Deep copy into a frozen value.
    pub fn freeze(&self) -> Value {
        let mut stack = Vec::new();
        self.freeze_inner(&mut stack)
    }

    fn freeze_inner(&self, stack: &mut Vec<usize>) -> Value {
        stacker::maybe_grow(64 * 1024, 1024 * 1024, || self.freeze_step(stack))
    }

    fn freeze_step(&self, stack: &mut Vec<usize>) -> Value {
        if let Some(p) = self.ptr() {
            if stack.contains(&p) {
                return Value::Opaque {
                    ty: self.type_name().to_string(),
                    repr: match self {
                        Obj::List(_) => "[...]".into(),
                        Obj::Tuple(_) => "(...)".into(),
                        _ => "{...}".into(),
                    },
                };
            }
        }
        let push = |stack: &mut Vec<usize>| {
            if let Some(p) = self.ptr() {
                stack.push(p);
            }
        };
        let v = match self {
            Obj::None => Value::None,
            Obj::Bool(b) => Value::Bool(*b),
            Obj::Int(n) => Value::Int((**n).clone()),
            Obj::Float(f) => Value::Float(*f),
            Obj::Str(s) => Value::Str(s.to_string()),
            Obj::List(l) => {
                push(stack);
                let items = l.borrow().iter().map(|x| x.freeze_inner(stack)).collect();
                stack.pop();
                Value::List(items)
            }
            Obj::Tuple(t) => {
                push(stack);
                let items = t.iter().map(|x| x.freeze_inner(stack)).collect();
                stack.pop();
                Value::Tuple(items)
            }
            Obj::Set(s) => {
                let mut items: Vec<(String, Value)> = s
                    .borrow()
                    .map
                    .values()
                    .map(|x| (x.repr(), x.freeze()))
                    .collect();
                items.sort_by(|a, b| a.0.cmp(&b.0));
                Value::Set(items.into_iter().map(|(_, v)| v).collect())
            }
            Obj::Dict(d) => {
                push(stack);
                let pairs = d
                    .borrow()
                    .map
                    .values()
                    .map(|(k, v)| (k.freeze_inner(stack), v.freeze_inner(stack)))
                    .collect();
                stack.pop();
                Value::Dict(pairs)
            }
            other => Value::Opaque {
                ty: other.type_name().to_string(),
                repr: other.repr(),
            },
        };
        v
    }

    /// Runtime object for a frozen value.
    pub fn thaw(v: &Value) -> Obj {
        match v {
            Value::None => Obj::None,
            Value::Bool(b) => Obj::Bool(*b),
            Value::Int(n) => Obj::int(n.clone()),
            Value::Float(f) => Obj::Float(*f),
            Value::Str(s) => Obj::str(s.as_str()),
            Value::List(xs) => Obj::list(xs.iter().map(Obj::thaw).collect()),
            Value::Tuple(xs) => Obj::tuple(xs.iter().map(Obj::thaw).collect()),
            Value::Set(xs) => {
                let mut s = PySet::default();
                for x in xs {
                    let o = Obj::thaw(x);
                    let k = o.hash_key().expect("set members are hashable");
                    s.map.entry(k).or_insert(o);
                }
                Obj::Set(shared(s))
            }
            Value::Dict(pairs) => {
                let mut d = PyDict::default();
                for (k, v) in pairs {
                    let ko = Obj::thaw(k);
                    let h = ko.hash_key().expect("dict keys are hashable");
                    d.map.insert(h, (ko, Obj::thaw(v)));
                }
                Obj::Dict(shared(d))
            }
            Value::Opaque { repr, .. } => Obj::str(repr.as_str()),
        }
    }
}

impl std::fmt::Debug for Obj {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.repr_capped(200).unwrap_or_else(|_| "<...>".into()))
    }
}

/// Set members in canonical (rendered-text) order.
pub(crate) fn set_sorted(s: &PySet) -> Vec<Obj> {
    let mut items: Vec<(String, Obj)> = s.map.values().map(|x| (x.repr(), x.clone())).collect();
    items.sort_by(|a, b| a.0.cmp(&b.0));
    items.into_iter().map(|(_, x)| x).collect()
}

struct Renderer {
    out: String,
    cap: usize,
    stack: Vec<usize>,
}

impl Renderer {
    fn check(&self) -> Result<(), RenderOverflow> {
        if self.out.len() > self.cap.saturating_mul(4) {
            Err(RenderOverflow)
        } else {
            Ok(())
        }
    }

    fn seq<'a>(&mut self, items: impl Iterator<Item = &'a Obj>) -> Result<usize, RenderOverflow> {
        let mut n = 0;
        for (i, x) in items.enumerate() {
            if i > 0 {
                self.out.push_str(", ");
            }
            self.render(x)?;
            n += 1;
        }
        Ok(n)
    }

    fn render(&mut self, o: &Obj) -> Result<(), RenderOverflow> {
        stacker::maybe_grow(64 * 1024, 1024 * 1024, || self.render_inner(o))
    }

    fn render_inner(&mut self, o: &Obj) -> Result<(), RenderOverflow> {
        self.check()?;
        if let Some(p) = o.ptr() {
            if self.stack.contains(&p) {
                self.out.push_str(match o {
                    Obj::List(_) => "[...]",
                    Obj::Tuple(_) => "(...)",
                    _ => "{...}",
                });
                return Ok(());
            }
        }
        match o {
            Obj::None => self.out.push_str("None"),
            Obj::Bool(true) => self.out.push_str("True"),
            Obj::Bool(false) => self.out.push_str("False"),
            Obj::Int(n) => self.out.push_str(&n.to_string()),
            Obj::Float(f) => self.out.push_str(&float_repr(*f)),
            Obj::Str(s) => str_repr(s, &mut self.out),
            Obj::List(l) => {
                self.stack.push(o.ptr().unwrap());
                self.out.push('[');
                let items = l.borrow().clone();
                self.seq(items.iter())?;
                self.out.push(']');
                self.stack.pop();
            }
            Obj::Tuple(t) => {
                self.stack.push(o.ptr().unwrap());
                self.out.push('(');
                let n = self.seq(t.iter())?;
                if n == 1 {
                    self.out.push(',');
                }
                self.out.push(')');
                self.stack.pop();
            }
            Obj::Set(s) => {
                let items: Vec<Obj> = s.borrow().map.values().cloned().collect();
                if items.is_empty() {
                    self.out.push_str("set()");
                } else {
                    self.stack.push(o.ptr().unwrap());
                    let mut parts = Vec::with_capacity(items.len());
                    for x in &items {
                        let mut sub = Renderer {
                            out: String::new(),
                            cap: self.cap,
                            stack: std::mem::take(&mut self.stack),
                        };
                        let r = sub.render(x);
                        self.stack = sub.stack;
                        r?;
                        parts.push(sub.out);
                    }
                    parts.sort();
                    self.out.push('{');
                    self.out.push_str(&parts.join(", "));
                    self.out.push('}');
                    self.stack.pop();
                }
            }
            Obj::Dict(d) => {
                self.stack.push(o.ptr().unwrap());
                self.out.push('{');
                let pairs: Vec<(Obj, Obj)> = d.borrow().map.values().cloned().collect();
                for (i, (k, v)) in pairs.iter().enumerate() {
                    if i > 0 {
                        self.out.push_str(", ");
                    }
                    self.render(k)?;
                    self.out.push_str(": ");
                    self.render(v)?;
                }
                self.out.push('}');
                self.stack.pop();
            }
            Obj::Range(r) => {
                if r.step == BigInt::from(1) {
                    self.out.push_str(&format!("range({}, {})", r.start, r.stop));
                } else {
                    self.out
                        .push_str(&format!("range({}, {}, {})", r.start, r.stop, r.step));
                }
            }
            Obj::View(d, kind) => {
                let name = o.type_name();
                self.out.push_str(name);
                self.out.push_str("([");
                let pairs: Vec<(Obj, Obj)> = d.borrow().map.values().cloned().collect();
                for (i, (k, v)) in pairs.iter().enumerate() {
                    if i > 0 {
                        self.out.push_str(", ");
                    }
                    match kind {
                        ViewKind::Keys => self.render(k)?,
                        ViewKind::Values => self.render(v)?,
                        ViewKind::Items => {
                            self.out.push('(');
                            self.render(k)?;
                            self.out.push_str(", ");
                            self.render(v)?;
                            self.out.push(')');
                        }
                    }
                }
                self.out.push_str("])");
            }
            Obj::Iter(it) => {
                let ty = it.borrow().type_name();
                if ty == "generator" {
                    self.out.push_str("<generator object <genexpr>>");
                } else {
                    self.out.push_str(&format!("<{ty} object>"));
                }
            }
            Obj::Func(f) => self.out.push_str(&format!("<function {}>", f.name)),
            Obj::Builtin(n) => self.out.push_str(&format!("<built-in function {n}>")),
            Obj::Type(n) => self.out.push_str(&format!("<class '{n}'>")),
            Obj::Method(m) => self.out.push_str(&format!(
                "<built-in method {} of {} object>",
                m.1,
                m.0.type_name()
            )),
            Obj::Descr(t, n) => {
                self.out
                    .push_str(&format!("<method '{n}' of '{t}' objects>"))
            }
        }
        Ok(())
    }
}
