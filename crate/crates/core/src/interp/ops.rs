//! Operators: arithmetic, comparison, equality and `%` formatting.

use std::cmp::Ordering;
use std::rc::Rc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::syntax::ast::{BinOp, CmpOp, UnaryOp};

use super::num::{big_to_f64, cmp_int_float, float_divmod, float_to_big, int_true_div};
use super::obj::{shared, Obj, PySet, ViewKind};

/// A raised exception: kind (e.g. `ValueError`) and message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Exc {
    pub kind: &'static str,
    pub msg: String,
}

pub(crate) type EResult<T> = Result<T, Exc>;

pub(crate) fn exc<T>(kind: &'static str, msg: impl Into<String>) -> EResult<T> {
    Err(Exc {
        kind,
        msg: msg.into(),
    })
}

pub(crate) fn type_error<T>(msg: impl Into<String>) -> EResult<T> {
    exc("TypeError", msg)
}

/// Largest container a single operation may build.
pub(crate) const MAX_ELEMENTS: usize = 10_000_000;

fn too_big<T>() -> EResult<T> {
    exc("MemoryError", "result too large")
}

enum Num {
    Int(BigInt),
    Float(f64),
}

fn num_of(o: &Obj) -> Option<Num> {
    match o {
        Obj::Bool(b) => Some(Num::Int(BigInt::from(*b as u8))),
        Obj::Int(n) => Some(Num::Int((**n).clone())),
        Obj::Float(f) => Some(Num::Float(*f)),
        _ => None,
    }
}

pub(crate) fn int_to_f64(n: &BigInt) -> EResult<f64> {
    match big_to_f64(n) {
        Some(f) => Ok(f),
        None => exc("OverflowError", "int too large to convert to float"),
    }
}

fn unsupported<T>(op: &str, a: &Obj, b: &Obj) -> EResult<T> {
    type_error(format!(
        "unsupported operand type(s) for {op}: '{}' and '{}'",
        a.type_name(),
        b.type_name()
    ))
}

fn op_label(op: BinOp) -> &'static str {
    match op {
        BinOp::Pow => "** or pow()",
        other => other.symbol(),
    }
}

/// Repetition count for `seq * n`.
fn repeat_count(n: &Obj) -> Option<i64> {
    match n {
        Obj::Bool(b) => Some(*b as i64),
        Obj::Int(i) => Some(i.to_i64().unwrap_or(if i.is_negative() { -1 } else { i64::MAX })),
        _ => None,
    }
}

fn repeat<T: Clone>(items: &[T], n: i64) -> EResult<Vec<T>> {
    if n <= 0 || items.is_empty() {
        return Ok(Vec::new());
    }
    if (items.len() as u128) * (n as u128) > MAX_ELEMENTS as u128 {
        return too_big();
    }
    let mut out = Vec::with_capacity(items.len() * n as usize);
    for _ in 0..n {
        out.extend_from_slice(items);
    }
    Ok(out)
}

pub(crate) fn binop(op: BinOp, a: &Obj, b: &Obj) -> EResult<Obj> {
    if let (Obj::Int(x), Obj::Int(y)) = (a, b) {
        return int_op(op, x, y, a, b);
    }
    match (num_of(a), num_of(b)) {
        (Some(Num::Int(x)), Some(Num::Int(y))) => {
            if let (Obj::Bool(p), Obj::Bool(q)) = (a, b) {
                match op {
                    BinOp::BitAnd => return Ok(Obj::Bool(*p & *q)),
                    BinOp::BitOr => return Ok(Obj::Bool(*p | *q)),
                    BinOp::BitXor => return Ok(Obj::Bool(*p ^ *q)),
                    _ => {}
                }
            }
            return int_op(op, &x, &y, a, b);
        }
        (Some(x), Some(y)) => {
            let fx = match x {
                Num::Int(n) => int_to_f64(&n)?,
                Num::Float(f) => f,
            };
            let fy = match y {
                Num::Int(n) => int_to_f64(&n)?,
                Num::Float(f) => f,
            };
            return float_op(op, fx, fy, a, b);
        }
        _ => {}
    }
    match (op, a, b) {
        (BinOp::Add, Obj::Str(x), Obj::Str(y)) => {
            let mut s = String::with_capacity(x.len() + y.len());
            s.push_str(x);
            s.push_str(y);
            Ok(Obj::str(s))
        }
        (BinOp::Add, Obj::Str(_), _) => type_error(format!(
            "can only concatenate str (not \"{}\") to str",
            b.type_name()
        )),
        (BinOp::Add, Obj::List(x), Obj::List(y)) => {
            let mut v = x.borrow().clone();
            v.extend(y.borrow().iter().cloned());
            Ok(Obj::list(v))
        }
        (BinOp::Add, Obj::List(_), _) => type_error(format!(
            "can only concatenate list (not \"{}\") to list",
            b.type_name()
        )),
        (BinOp::Add, Obj::Tuple(x), Obj::Tuple(y)) => {
            let mut v = (**x).clone();
            v.extend(y.iter().cloned());
            Ok(Obj::tuple(v))
        }
        (BinOp::Add, Obj::Tuple(_), _) => type_error(format!(
            "can only concatenate tuple (not \"{}\") to tuple",
            b.type_name()
        )),
        (BinOp::Mul, Obj::Str(_) | Obj::List(_) | Obj::Tuple(_), n)
        | (BinOp::Mul, n, Obj::Str(_) | Obj::List(_) | Obj::Tuple(_)) => {
            let seq = if matches!(a, Obj::Str(_) | Obj::List(_) | Obj::Tuple(_)) {
                a
            } else {
                b
            };
            let Some(count) = repeat_count(n) else {
                return type_error(format!(
                    "can't multiply sequence by non-int of type '{}'",
                    n.type_name()
                ));
            };
            match seq {
                Obj::Str(s) => {
                    if count <= 0 || s.is_empty() {
                        return Ok(Obj::str(""));
                    }
                    if (s.len() as u128) * (count as u128) > MAX_ELEMENTS as u128 {
                        return too_big();
                    }
                    Ok(Obj::str(s.repeat(count as usize)))
                }
                Obj::List(l) => Ok(Obj::list(repeat(&l.borrow(), count)?)),
                Obj::Tuple(t) => Ok(Obj::tuple(repeat(t, count)?)),
                _ => unreachable!(),
            }
        }
        (BinOp::Mod, Obj::Str(f), args) => Ok(Obj::str(percent_format(f, args)?)),
        (
            BinOp::BitOr | BinOp::BitAnd | BinOp::Sub | BinOp::BitXor,
            Obj::Set(_) | Obj::View(_, ViewKind::Keys),
            Obj::Set(_) | Obj::View(_, ViewKind::Keys),
        ) => {
            let x = as_set(a);
            let y = as_set(b);
            Ok(Obj::Set(shared(set_algebra(op, &x, &y))))
        }
        (BinOp::BitOr, Obj::Dict(x), Obj::Dict(y)) => {
            let mut d = x.borrow().clone();
            for (k, (ko, v)) in y.borrow().map.iter() {
                match d.map.get_mut(k) {
                    Some(slot) => slot.1 = v.clone(),
                    None => {
                        d.map.insert(k.clone(), (ko.clone(), v.clone()));
                    }
                }
            }
            Ok(Obj::Dict(shared(d)))
        }
        _ => unsupported(op_label(op), a, b),
    }
}

fn as_set(o: &Obj) -> PySet {
    match o {
        Obj::Set(s) => s.borrow().clone(),
        Obj::View(d, _) => {
            let mut s = PySet::default();
            for (h, (k, _)) in d.borrow().map.iter() {
                s.map.insert(h.clone(), k.clone());
            }
            s
        }
        _ => PySet::default(),
    }
}

pub(crate) fn set_algebra(op: BinOp, x: &PySet, y: &PySet) -> PySet {
    let mut out = PySet::default();
    match op {
        BinOp::BitOr => {
            out = x.clone();
            for (k, v) in &y.map {
                out.map.entry(k.clone()).or_insert_with(|| v.clone());
            }
        }
        BinOp::BitAnd => {
            for (k, v) in &x.map {
                if y.map.contains_key(k) {
                    out.map.insert(k.clone(), v.clone());
                }
            }
        }
        BinOp::Sub => {
            for (k, v) in &x.map {
                if !y.map.contains_key(k) {
                    out.map.insert(k.clone(), v.clone());
                }
            }
        }
        BinOp::BitXor => {
            for (k, v) in &x.map {
                if !y.map.contains_key(k) {
                    out.map.insert(k.clone(), v.clone());
                }
            }
            for (k, v) in &y.map {
                if !x.map.contains_key(k) {
                    out.map.insert(k.clone(), v.clone());
                }
            }
        }
        _ => unreachable!("not a set operator"),
    }
    out
}

fn int_op(op: BinOp, x: &BigInt, y: &BigInt, a: &Obj, b: &Obj) -> EResult<Obj> {
    let _ = (a, b);
    let r = match op {
        BinOp::Add => x + y,
        BinOp::Sub => x - y,
        BinOp::Mul => {
            if x.bits() + y.bits() > 64_000_000 {
                return too_big();
            }
            x * y
        }
        BinOp::Div => {
            if y.is_zero() {
                return exc("ZeroDivisionError", "division by zero");
            }
            return match int_true_div(x, y) {
                Some(f) => Ok(Obj::Float(f)),
                None => exc("OverflowError", "integer division result too large for a float"),
            };
        }
        BinOp::FloorDiv => {
            if y.is_zero() {
                return exc("ZeroDivisionError", "integer division or modulo by zero");
            }
            x.div_floor(y)
        }
        BinOp::Mod => {
            if y.is_zero() {
                return exc("ZeroDivisionError", "integer division or modulo by zero");
            }
            x.mod_floor(y)
        }
        BinOp::Pow => return int_pow(x, y),
        BinOp::LShift => {
            if y.is_negative() {
                return exc("ValueError", "negative shift count");
            }
            if x.is_zero() {
                return Ok(Obj::small(0));
            }
            match y.to_u64() {
                Some(s) if s + x.bits() <= 64_000_000 => x << s,
                _ => return too_big(),
            }
        }
        BinOp::RShift => {
            if y.is_negative() {
                return exc("ValueError", "negative shift count");
            }
            match y.to_u64() {
                Some(s) if s < x.bits() + 1 => x >> s,
                _ => {
                    if x.is_negative() {
                        BigInt::from(-1)
                    } else {
                        BigInt::zero()
                    }
                }
            }
        }
        BinOp::BitAnd => x & y,
        BinOp::BitOr => x | y,
        BinOp::BitXor => x ^ y,
    };
    Ok(Obj::int(r))
}

fn int_pow(x: &BigInt, y: &BigInt) -> EResult<Obj> {
    if y.is_negative() {
        let fx = int_to_f64(x)?;
        let fy = int_to_f64(y)?;
        return float_pow(fx, fy);
    }
    if x.is_zero() || x.is_one() {
        return Ok(Obj::int(if y.is_zero() { BigInt::one() } else { x.clone() }));
    }
    if *x == BigInt::from(-1) {
        return Ok(Obj::small(if y.is_even() { 1 } else { -1 }));
    }
    let e = match y.to_u64() {
        Some(e) if e.saturating_mul(x.bits()) <= 64_000_000 => e,
        _ => return too_big(),
    };
    Ok(Obj::int(num_traits::pow(x.clone(), e as usize)))
}

fn float_pow(x: f64, y: f64) -> EResult<Obj> {
    if x == 0.0 && y < 0.0 {
        return exc("ZeroDivisionError", "0.0 cannot be raised to a negative power");
    }
    if x < 0.0 && y.is_finite() && y.fract() != 0.0 {
        return exc("ValueError", "complex results are not supported");
    }
    let r = x.powf(y);
    if r.is_infinite() && x.is_finite() && y.is_finite() {
        return exc("OverflowError", "(34, 'Numerical result out of range')");
    }
    Ok(Obj::Float(r))
}

fn float_op(op: BinOp, x: f64, y: f64, a: &Obj, b: &Obj) -> EResult<Obj> {
    Ok(Obj::Float(match op {
        BinOp::Add => x + y,
        BinOp::Sub => x - y,
        BinOp::Mul => x * y,
        BinOp::Div => {
            if y == 0.0 {
                return exc("ZeroDivisionError", "float division by zero");
            }
            x / y
        }
        BinOp::FloorDiv => {
            if y == 0.0 {
                return exc("ZeroDivisionError", "float floor division by zero");
            }
            float_divmod(x, y).0
        }
        BinOp::Mod => {
            if y == 0.0 {
                return exc("ZeroDivisionError", "float modulo");
            }
            float_divmod(x, y).1
        }
        BinOp::Pow => return float_pow(x, y),
        _ => return unsupported(op_label(op), a, b),
    }))
}

pub(crate) fn unary(op: UnaryOp, a: &Obj) -> EResult<Obj> {
    let bad = |sym: &str| -> EResult<Obj> {
        type_error(format!("bad operand type for unary {sym}: '{}'", a.type_name()))
    };
    match op {
        UnaryOp::Not => Ok(Obj::Bool(!a.truthy())),
        UnaryOp::Neg => match a {
            Obj::Int(n) => Ok(Obj::int(-&**n)),
            Obj::Bool(b) => Ok(Obj::small(-(*b as i64))),
            Obj::Float(f) => Ok(Obj::Float(-f)),
            _ => bad("-"),
        },
        UnaryOp::Pos => match a {
            Obj::Int(_) | Obj::Float(_) => Ok(a.clone()),
            Obj::Bool(b) => Ok(Obj::small(*b as i64)),
            _ => bad("+"),
        },
        UnaryOp::Invert => match a {
            Obj::Int(n) => Ok(Obj::int(-&**n - 1)),
            Obj::Bool(b) => Ok(Obj::small(-(*b as i64) - 1)),
            _ => bad("~"),
        },
    }
}

const EQ_DEPTH: usize = 900;

pub(crate) fn py_eq(a: &Obj, b: &Obj) -> EResult<bool> {
    eq_at(a, b, 0)
}

fn eq_at(a: &Obj, b: &Obj, depth: usize) -> EResult<bool> {
    if depth > EQ_DEPTH {
        return exc("RecursionError", "maximum recursion depth exceeded in comparison");
    }
    if let (Some(p), Some(q)) = (a.ptr(), b.ptr()) {
        if p == q && a.type_name() == b.type_name() {
            return Ok(true);
        }
    }
    let seq_eq = |x: &[Obj], y: &[Obj]| -> EResult<bool> {
        if x.len() != y.len() {
            return Ok(false);
        }
        for (p, q) in x.iter().zip(y) {
            if !eq_at(p, q, depth + 1)? {
                return Ok(false);
            }
        }
        Ok(true)
    };
    Ok(match (a, b) {
        (Obj::None, Obj::None) => true,
        (Obj::Str(x), Obj::Str(y)) => x == y,
        (Obj::List(x), Obj::List(y)) => {
            let (x, y) = (x.borrow().clone(), y.borrow().clone());
            seq_eq(&x, &y)?
        }
        (Obj::Tuple(x), Obj::Tuple(y)) => seq_eq(x, y)?,
        (Obj::Set(x), Obj::Set(y)) => {
            let (x, y) = (x.borrow(), y.borrow());
            x.map.len() == y.map.len() && x.map.keys().all(|k| y.map.contains_key(k))
        }
        (Obj::Dict(x), Obj::Dict(y)) => {
            let (x, y) = (x.borrow().clone(), y.borrow().clone());
            if x.map.len() != y.map.len() {
                return Ok(false);
            }
            for (k, (_, v)) in &x.map {
                match y.map.get(k) {
                    Some((_, w)) => {
                        if !eq_at(v, w, depth + 1)? {
                            return Ok(false);
                        }
                    }
                    None => return Ok(false),
                }
            }
            true
        }
        (Obj::Range(x), Obj::Range(y)) => {
            let (lx, ly) = (x.len(), y.len());
            lx == ly
                && (lx.is_zero()
                    || (x.start == y.start && (lx.is_one() || x.step == y.step)))
        }
        (Obj::View(x, ViewKind::Keys), Obj::View(y, ViewKind::Keys)) => {
            let (x, y) = (x.borrow(), y.borrow());
            x.map.len() == y.map.len() && x.map.keys().all(|k| y.map.contains_key(k))
        }
        (Obj::View(x, ViewKind::Keys), Obj::Set(y)) | (Obj::Set(y), Obj::View(x, ViewKind::Keys)) => {
            let (x, y) = (x.borrow(), y.borrow());
            x.map.len() == y.map.len() && x.map.keys().all(|k| y.map.contains_key(k))
        }
        (Obj::Func(x), Obj::Func(y)) => Rc::ptr_eq(x, y),
        (Obj::Builtin(x), Obj::Builtin(y)) => x == y,
        (Obj::Type(x), Obj::Type(y)) => x == y,
        (Obj::Descr(t, n), Obj::Descr(u, m)) => t == u && n == m,
        _ => match (num_of(a), num_of(b)) {
            (Some(x), Some(y)) => num_cmp(&x, &y) == Some(Ordering::Equal),
            _ => false,
        },
    })
}

fn num_cmp(a: &Num, b: &Num) -> Option<Ordering> {
    match (a, b) {
        (Num::Int(x), Num::Int(y)) => Some(x.cmp(y)),
        (Num::Float(x), Num::Float(y)) => x.partial_cmp(y),
        (Num::Int(x), Num::Float(y)) => cmp_int_float(x, *y),
        (Num::Float(x), Num::Int(y)) => cmp_int_float(y, *x).map(Ordering::reverse),
    }
}

fn cmp_symbol(op: CmpOp) -> &'static str {
    match op {
        CmpOp::Lt => "<",
        CmpOp::LtE => "<=",
        CmpOp::Gt => ">",
        CmpOp::GtE => ">=",
        _ => "==",
    }
}

fn apply_ord(op: CmpOp, o: Option<Ordering>) -> bool {
    match o {
        None => false,
        Some(o) => match op {
            CmpOp::Lt => o == Ordering::Less,
            CmpOp::LtE => o != Ordering::Greater,
            CmpOp::Gt => o == Ordering::Greater,
            CmpOp::GtE => o != Ordering::Less,
            _ => unreachable!("ordering operator expected"),
        },
    }
}

/// Rich ordering comparison (`<`, `<=`, `>`, `>=`).
pub(crate) fn order(op: CmpOp, a: &Obj, b: &Obj) -> EResult<bool> {
    order_at(op, a, b, 0)
}

fn order_at(op: CmpOp, a: &Obj, b: &Obj, depth: usize) -> EResult<bool> {
    if depth > EQ_DEPTH {
        return exc("RecursionError", "maximum recursion depth exceeded in comparison");
    }
    if let (Some(x), Some(y)) = (num_of(a), num_of(b)) {
        return Ok(apply_ord(op, num_cmp(&x, &y)));
    }
    let seq = |x: &[Obj], y: &[Obj]| -> EResult<bool> {
        for (p, q) in x.iter().zip(y) {
            if !eq_at(p, q, depth + 1)? {
                return order_at(op, p, q, depth + 1);
            }
        }
        Ok(apply_ord(op, Some(x.len().cmp(&y.len()))))
    };
    match (a, b) {
        (Obj::Str(x), Obj::Str(y)) => Ok(apply_ord(op, Some((**x).cmp(&**y)))),
        (Obj::List(x), Obj::List(y)) => {
            let (x, y) = (x.borrow().clone(), y.borrow().clone());
            seq(&x, &y)
        }
        (Obj::Tuple(x), Obj::Tuple(y)) => seq(x, y),
        (Obj::Set(x), Obj::Set(y)) => {
            let (x, y) = (x.borrow(), y.borrow());
            let sub = |p: &PySet, q: &PySet| p.map.keys().all(|k| q.map.contains_key(k));
            Ok(match op {
                CmpOp::LtE => sub(&x, &y),
                CmpOp::Lt => x.map.len() < y.map.len() && sub(&x, &y),
                CmpOp::GtE => sub(&y, &x),
                CmpOp::Gt => y.map.len() < x.map.len() && sub(&y, &x),
                _ => unreachable!(),
            })
        }
        _ => type_error(format!(
            "'{}' not supported between instances of '{}' and '{}'",
            cmp_symbol(op),
            a.type_name(),
            b.type_name()
        )),
    }
}

/// `a < b` for sorting, `min` and `max`.
pub(crate) fn less(a: &Obj, b: &Obj) -> EResult<bool> {
    order(CmpOp::Lt, a, b)
}

/// `a is b`.
pub(crate) fn is_same(a: &Obj, b: &Obj) -> bool {
    match (a, b) {
        (Obj::None, Obj::None) => true,
        (Obj::Bool(x), Obj::Bool(y)) => x == y,
        (Obj::Int(x), Obj::Int(y)) => {
            Rc::ptr_eq(x, y) || (x == y && **x >= BigInt::from(-5) && **x <= BigInt::from(256))
        }
        (Obj::Float(x), Obj::Float(y)) => x.to_bits() == y.to_bits(),
        (Obj::Str(x), Obj::Str(y)) => Rc::ptr_eq(x, y) || x == y,
        (Obj::Builtin(x), Obj::Builtin(y)) | (Obj::Type(x), Obj::Type(y)) => x == y,
        _ => match (a.ptr(), b.ptr()) {
            (Some(p), Some(q)) => p == q && a.type_name() == b.type_name(),
            _ => false,
        },
    }
}

/// Membership for containers that don't need the interpreter to iterate.
/// Returns `None` for iterators.
pub(crate) fn contains(container: &Obj, item: &Obj) -> EResult<Option<bool>> {
    let unhashable = |t: &str| type_error(format!("unhashable type: '{t}'"));
    Ok(Some(match container {
        Obj::Str(s) => match item {
            Obj::Str(sub) => s.contains(&**sub),
            _ => {
                return type_error(format!(
                    "'in <string>' requires string as left operand, not {}",
                    item.type_name()
                ))
            }
        },
        Obj::List(l) => {
            let items = l.borrow().clone();
            for x in &items {
                if is_same(x, item) || py_eq(x, item)? {
                    return Ok(Some(true));
                }
            }
            false
        }
        Obj::Tuple(t) => {
            for x in t.iter() {
                if is_same(x, item) || py_eq(x, item)? {
                    return Ok(Some(true));
                }
            }
            false
        }
        Obj::Set(s) => match item.hash_key() {
            Ok(k) => s.borrow().map.contains_key(&k),
            Err(t) => return unhashable(t),
        },
        Obj::Dict(d) | Obj::View(d, ViewKind::Keys) => match item.hash_key() {
            Ok(k) => d.borrow().map.contains_key(&k),
            Err(t) => return unhashable(t),
        },
        Obj::View(d, ViewKind::Values) => {
            let vals: Vec<Obj> = d.borrow().map.values().map(|(_, v)| v.clone()).collect();
            for v in &vals {
                if py_eq(v, item)? {
                    return Ok(Some(true));
                }
            }
            false
        }
        Obj::View(d, ViewKind::Items) => {
            let Obj::Tuple(t) = item else { return Ok(Some(false)) };
            if t.len() != 2 {
                return Ok(Some(false));
            }
            let k = match t[0].hash_key() {
                Ok(k) => k,
                Err(t) => return unhashable(t),
            };
            let found = d.borrow().map.get(&k).map(|(_, v)| v.clone());
            match found {
                Some(v) => py_eq(&v, &t[1])?,
                None => false,
            }
        }
        Obj::Range(r) => {
            let n = match item {
                Obj::Int(n) => (**n).clone(),
                Obj::Bool(b) => BigInt::from(*b as u8),
                Obj::Float(f) if f.fract() == 0.0 && f.is_finite() => float_to_big(*f).unwrap(),
                _ => return Ok(Some(false)),
            };
            let off = &n - &r.start;
            let (q, rem) = off.div_mod_floor(&r.step);
            rem.is_zero() && !q.is_negative() && q < r.len()
        }
        Obj::Iter(_) => return Ok(None),
        other => {
            return type_error(format!(
                "argument of type '{}' is not iterable",
                other.type_name()
            ))
        }
    }))
}

// ---------------------------------------------------------------- % format

struct Spec {
    left: bool,
    zero: bool,
    plus: bool,
    space: bool,
    alt: bool,
    width: usize,
    prec: Option<usize>,
}

pub(crate) fn percent_format(fmt: &str, args: &Obj) -> EResult<String> {
    let list: Vec<Obj> = match args {
        Obj::Tuple(t) => (**t).clone(),
        other => vec![other.clone()],
    };
    let mut next = 0usize;
    let mut take = |list: &[Obj]| -> EResult<Obj> {
        let v = list.get(next).cloned();
        next += 1;
        v.map_or_else(|| type_error("not enough arguments for format string"), Ok)
    };
    let mut out = String::new();
    let mut chars = fmt.chars().peekable();
    while let Some(c) = chars.next() {
        if c != '%' {
            out.push(c);
            continue;
        }
        let mut spec = Spec {
            left: false,
            zero: false,
            plus: false,
            space: false,
            alt: false,
            width: 0,
            prec: None,
        };
        if chars.peek() == Some(&'(') {
            return exc("ValueError", "mapping keys in format strings are not supported");
        }
        while let Some(&f) = chars.peek() {
            match f {
                '-' => spec.left = true,
                '0' => spec.zero = true,
                '+' => spec.plus = true,
                ' ' => spec.space = true,
                '#' => spec.alt = true,
                _ => break,
            }
            chars.next();
        }
        if chars.peek() == Some(&'*') {
            chars.next();
            let w = take(&list)?;
            let w = w.as_i64().map_or_else(|| type_error("* wants int"), Ok)?;
            if w < 0 {
                spec.left = true;
            }
            spec.width = w.unsigned_abs() as usize;
        } else {
            while let Some(d) = chars.peek().and_then(|c| c.to_digit(10)) {
                spec.width = spec.width * 10 + d as usize;
                chars.next();
            }
        }
        if chars.peek() == Some(&'.') {
            chars.next();
            let mut p = 0usize;
            if chars.peek() == Some(&'*') {
                chars.next();
                let w = take(&list)?;
                p = w.as_i64().map_or_else(|| type_error("* wants int"), Ok)?.max(0) as usize;
            } else {
                while let Some(d) = chars.peek().and_then(|c| c.to_digit(10)) {
                    p = p * 10 + d as usize;
                    chars.next();
                }
            }
            spec.prec = Some(p);
        }
        let Some(conv) = chars.next() else {
            return exc("ValueError", "incomplete format");
        };
        let (sign_body, numeric): (String, bool) = match conv {
            '%' => {
                out.push('%');
                continue;
            }
            's' | 'r' | 'a' => {
                let v = take(&list)?;
                let mut s = if conv == 's' { v.to_str() } else { v.repr() };
                if let Some(p) = spec.prec {
                    s = s.chars().take(p).collect();
                }
                (s, false)
            }
            'c' => {
                let v = take(&list)?;
                let s = match &v {
                    Obj::Str(s) if s.chars().count() == 1 => s.to_string(),
                    Obj::Int(_) | Obj::Bool(_) => {
                        match v.as_i64().and_then(|n| u32::try_from(n).ok()).and_then(char::from_u32) {
                            Some(c) => c.to_string(),
                            None => return exc("OverflowError", "%c arg not in range(0x110000)"),
                        }
                    }
                    _ => return type_error("%c requires int or char"),
                };
                (s, false)
            }
            'd' | 'i' | 'u' | 'x' | 'X' | 'o' => {
                let v = take(&list)?;
                let n = match &v {
                    Obj::Int(n) => (**n).clone(),
                    Obj::Bool(b) => BigInt::from(*b as u8),
                    Obj::Float(f) if matches!(conv, 'd' | 'i' | 'u') => match float_to_big(*f) {
                        Some(n) => n,
                        None if f.is_nan() => {
                            return exc("ValueError", "cannot convert float NaN to integer")
                        }
                        None => {
                            return exc("OverflowError", "cannot convert float infinity to integer")
                        }
                    },
                    other => {
                        let need = if matches!(conv, 'd' | 'i' | 'u') {
                            "a real number"
                        } else {
                            "an integer"
                        };
                        return type_error(format!(
                            "%{conv} format: {need} is required, not {}",
                            other.type_name()
                        ));
                    }
                };
                let mag = n.magnitude();
                let mut digits = match conv {
                    'x' => mag.to_str_radix(16),
                    'X' => mag.to_str_radix(16).to_uppercase(),
                    'o' => mag.to_str_radix(8),
                    _ => mag.to_string(),
                };
                if let Some(p) = spec.prec {
                    while digits.len() < p {
                        digits.insert(0, '0');
                    }
                }
                if spec.alt {
                    match conv {
                        'x' => digits.insert_str(0, "0x"),
                        'X' => digits.insert_str(0, "0X"),
                        'o' => digits.insert_str(0, "0o"),
                        _ => {}
                    }
                }
                (signed(n.is_negative(), digits, &spec), true)
            }
            'f' | 'F' | 'e' | 'E' | 'g' | 'G' => {
                let v = take(&list)?;
                let f = match &v {
                    Obj::Float(f) => *f,
                    Obj::Int(n) => int_to_f64(n)?,
                    Obj::Bool(b) => *b as u8 as f64,
                    other => {
                        return type_error(format!("must be real number, not {}", other.type_name()))
                    }
                };
                let body = format_float(f.abs(), conv, spec.prec.unwrap_or(6), spec.alt);
                (signed(f.is_sign_negative() && !f.is_nan(), body, &spec), f.is_finite())
            }
            other => {
                return exc(
                    "ValueError",
                    format!("unsupported format character '{other}' (0x{:x})", other as u32),
                )
            }
        };
        pad(&mut out, &sign_body, &spec, numeric);
    }
    if next < list.len() && matches!(args, Obj::Tuple(_)) {
        return type_error("not all arguments converted during string formatting");
    }
    if next == 0 && !matches!(args, Obj::Tuple(_)) {
        let is_mapping = matches!(args, Obj::Dict(_));
        if !is_mapping {
            return type_error("not all arguments converted during string formatting");
        }
    }
    Ok(out)
}

fn signed(neg: bool, body: String, spec: &Spec) -> String {
    if neg {
        format!("-{body}")
    } else if spec.plus {
        format!("+{body}")
    } else if spec.space {
        format!(" {body}")
    } else {
        body
    }
}

fn pad(out: &mut String, body: &str, spec: &Spec, numeric: bool) {
    let len = body.chars().count();
    if len >= spec.width {
        out.push_str(body);
        return;
    }
    let fill = spec.width - len;
    if spec.left {
        out.push_str(body);
        out.extend(std::iter::repeat_n(' ', fill));
    } else if spec.zero && numeric {
        // Zeros go after the sign and any radix prefix.
        let mut split = 0;
        let b = body.as_bytes();
        if !b.is_empty() && matches!(b[0], b'-' | b'+' | b' ') {
            split = 1;
        }
        if body[split..].starts_with("0x") || body[split..].starts_with("0X") || body[split..].starts_with("0o") {
            split += 2;
        }
        out.push_str(&body[..split]);
        out.extend(std::iter::repeat_n('0', fill));
        out.push_str(&body[split..]);
    } else {
        out.extend(std::iter::repeat_n(' ', fill));
        out.push_str(body);
    }
}

/// Fixed, exponent or general formatting of a non-negative float.
pub(crate) fn format_float(x: f64, conv: char, prec: usize, alt: bool) -> String {
    if x.is_nan() {
        return if conv.is_ascii_uppercase() { "NAN" } else { "nan" }.into();
    }
    if x.is_infinite() {
        return if conv.is_ascii_uppercase() { "INF" } else { "inf" }.into();
    }
    match conv {
        'f' | 'F' => {
            let s = format!("{:.*}", prec, x);
            if alt && prec == 0 {
                format!("{s}.")
            } else {
                s
            }
        }
        'e' | 'E' => {
            let s = exp_format(x, prec, alt);
            if conv == 'E' {
                s.to_uppercase()
            } else {
                s
            }
        }
        _ => {
            let p = if prec == 0 { 1 } else { prec };
            let probe = exp_format(x, p - 1, false);
            let exp: i64 = probe.rsplit_once('e').unwrap().1.parse().unwrap();
            let mut s = if exp >= -4 && exp < p as i64 {
                format!("{:.*}", (p as i64 - 1 - exp) as usize, x)
            } else {
                probe
            };
            if !alt {
                let (mant, tail) = match s.find('e') {
                    Some(i) => (s[..i].to_string(), s[i..].to_string()),
                    None => (s.clone(), String::new()),
                };
                let mant = if mant.contains('.') {
                    mant.trim_end_matches('0').trim_end_matches('.').to_string()
                } else {
                    mant
                };
                s = mant + &tail;
            }
            if conv == 'G' {
                s.to_uppercase()
            } else {
                s
            }
        }
    }
}

fn exp_format(x: f64, prec: usize, alt: bool) -> String {
    let s = format!("{:.*e}", prec, x);
    let (mant, exp) = s.split_once('e').unwrap();
    let exp: i64 = exp.parse().unwrap();
    let mut mant = mant.to_string();
    if alt && !mant.contains('.') {
        mant.push('.');
    }
    format!("{mant}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(x: &str) -> Obj {
        Obj::str(x)
    }

    #[test]
    fn arithmetic() {
        let r = binop(BinOp::FloorDiv, &Obj::small(-7), &Obj::small(2)).unwrap();
        assert_eq!(r.repr(), "-4");
        let r = binop(BinOp::Mod, &Obj::small(-7), &Obj::small(2)).unwrap();
        assert_eq!(r.repr(), "1");
        let r = binop(BinOp::Div, &Obj::small(1), &Obj::small(2)).unwrap();
        assert_eq!(r.repr(), "0.5");
        let r = binop(BinOp::Pow, &Obj::small(2), &Obj::small(-1)).unwrap();
        assert_eq!(r.repr(), "0.5");
        let r = binop(BinOp::Add, &Obj::Bool(true), &Obj::Bool(true)).unwrap();
        assert_eq!(r.repr(), "2");
        let r = binop(BinOp::BitAnd, &Obj::Bool(true), &Obj::Bool(false)).unwrap();
        assert_eq!(r.repr(), "False");
        let e = binop(BinOp::Add, &Obj::small(1), &s("a")).unwrap_err();
        assert_eq!(e.msg, "unsupported operand type(s) for +: 'int' and 'str'");
        let e = binop(BinOp::Mod, &Obj::Float(1.0), &Obj::Float(0.0)).unwrap_err();
        assert_eq!((e.kind, e.msg.as_str()), ("ZeroDivisionError", "float modulo"));
    }

    #[test]
    fn sequences() {
        let r = binop(BinOp::Mul, &s("ab"), &Obj::small(3)).unwrap();
        assert_eq!(r.repr(), "'ababab'");
        let r = binop(BinOp::Mul, &Obj::small(-1), &Obj::list(vec![Obj::small(1)])).unwrap();
        assert_eq!(r.repr(), "[]");
        assert!(binop(BinOp::Mul, &s("a"), &Obj::small(100_000_000)).is_err());
    }

    #[test]
    fn comparisons() {
        let a = Obj::tuple(vec![Obj::small(1), s("b")]);
        let b = Obj::tuple(vec![Obj::small(1), s("c")]);
        assert!(order(CmpOp::Lt, &a, &b).unwrap());
        assert!(py_eq(&Obj::small(1), &Obj::Float(1.0)).unwrap());
        assert!(!py_eq(&Obj::list(vec![]), &Obj::tuple(vec![])).unwrap());
        let e = order(CmpOp::Lt, &Obj::small(1), &s("a")).unwrap_err();
        assert_eq!(e.msg, "'<' not supported between instances of 'int' and 'str'");
    }

    #[test]
    fn percent() {
        let f = |fmt: &str, a: Obj| percent_format(fmt, &a).unwrap();
        assert_eq!(f("%d items", Obj::small(3)), "3 items");
        assert_eq!(f("%5.2f|", Obj::Float(1.23456)), " 1.23|");
        assert_eq!(f("%-4s|", s("a")), "a   |");
        assert_eq!(f("%05d", Obj::small(-42)), "-0042");
        assert_eq!(f("%x %o", Obj::tuple(vec![Obj::small(255), Obj::small(8)])), "ff 10");
        assert_eq!(f("%e", Obj::Float(12345.678)), "1.234568e+04");
        assert_eq!(f("%g", Obj::Float(0.0001)), "0.0001");
        assert_eq!(f("%g", Obj::Float(1234567.0)), "1.23457e+06");
        assert_eq!(f("%r", s("x")), "'x'");
        assert_eq!(f("100%%", Obj::tuple(vec![])), "100%");
        assert!(percent_format("%d %d", &Obj::small(1)).is_err());
        assert!(percent_format("%d", &Obj::tuple(vec![Obj::small(1), Obj::small(2)])).is_err());
    }
}
