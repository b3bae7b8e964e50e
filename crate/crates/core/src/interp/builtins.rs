//! Free builtin functions and type constructors.

use std::rc::Rc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::syntax::ast::{BinOp, CmpOp};

use super::exec::{dict_insert, hash_of, raise, Interp, RResult};
use super::num::{div_round_half_even, float_divmod, float_to_big, round_float, round_half_even};
use super::obj::{shared, IterState, Obj, PyDict, PySet, RangeObj};
use super::ops::{self, exc, int_to_f64, type_error, EResult};

/// Builtins that are classes (`<class 'int'>`).
const TYPES: &[&str] = &[
    "int", "float", "str", "bool", "list", "tuple", "set", "dict", "range", "enumerate", "zip",
    "map", "filter", "reversed", "type",
];

/// Builtins that are plain functions (`<built-in function len>`).
const FUNCTIONS: &[&str] = &[
    "len", "sorted", "sum", "min", "max", "abs", "any", "all", "print", "ord", "chr", "round",
    "isinstance", "divmod", "pow", "iter", "next", "repr",
];

/// Names of every builtin the interpreter provides.
pub fn builtin_names() -> impl Iterator<Item = &'static str> {
    TYPES.iter().chain(FUNCTIONS).copied()
}

pub(crate) fn lookup(name: &str) -> Option<Obj> {
    if let Some(t) = TYPES.iter().find(|t| **t == name) {
        return Some(Obj::Type(t));
    }
    FUNCTIONS.iter().find(|f| **f == name).map(|f| Obj::Builtin(f))
}

/// Map positional and keyword arguments onto named slots.
pub(crate) fn bind(
    fname: &str,
    args: Vec<Obj>,
    kwargs: Vec<(String, Obj)>,
    names: &[&str],
    required: usize,
) -> EResult<Vec<Option<Obj>>> {
    let given = args.len() + kwargs.len();
    if args.len() > names.len() {
        return type_error(if required == names.len() {
            format!(
                "{fname}() takes exactly {} argument{} ({given} given)",
                names.len(),
                if names.len() == 1 { "" } else { "s" }
            )
        } else {
            format!("{fname}() takes at most {} arguments ({given} given)", names.len())
        });
    }
    let mut slots: Vec<Option<Obj>> = vec![None; names.len()];
    for (i, a) in args.into_iter().enumerate() {
        slots[i] = Some(a);
    }
    for (k, v) in kwargs {
        match names.iter().position(|n| *n == k) {
            Some(i) if slots[i].is_none() => slots[i] = Some(v),
            Some(_) => {
                return type_error(format!("{fname}() got multiple values for argument '{k}'"))
            }
            None => {
                return type_error(format!("{fname}() got an unexpected keyword argument '{k}'"))
            }
        }
    }
    if let Some(i) = slots[..required].iter().position(Option::is_none) {
        return type_error(if required == 1 && names.len() == 1 {
            format!("{fname}() takes exactly one argument ({given} given)")
        } else {
            format!(
                "{fname}() missing required argument '{}' (pos {})",
                names[i],
                i + 1
            )
        });
    }
    Ok(slots)
}

fn no_kwargs(fname: &str, kwargs: &[(String, Obj)]) -> EResult<()> {
    if kwargs.is_empty() {
        Ok(())
    } else {
        type_error(format!("{fname}() takes no keyword arguments"))
    }
}

pub(crate) fn to_index(o: &Obj) -> EResult<BigInt> {
    o.as_index().map_or_else(
        || {
            type_error(format!(
                "'{}' object cannot be interpreted as an integer",
                o.type_name()
            ))
        },
        Ok,
    )
}

/// Text of `o` for `str()` and `print`, bounded to keep memory in check.
pub(crate) fn str_of(o: &Obj) -> EResult<String> {
    match o {
        Obj::Str(s) => Ok(s.to_string()),
        _ => o
            .repr_capped(ops::MAX_ELEMENTS)
            .or_else(|_| exc("MemoryError", "string too large")),
    }
}

pub(crate) fn repr_of(o: &Obj) -> EResult<String> {
    o.repr_capped(ops::MAX_ELEMENTS)
        .or_else(|_| exc("MemoryError", "string too large"))
}

pub(crate) fn call(
    it: &mut Interp,
    name: &str,
    args: Vec<Obj>,
    kwargs: Vec<(String, Obj)>,
) -> RResult<Obj> {
    match name {
        "len" => {
            no_kwargs(name, &kwargs)?;
            let a = bind(name, args, kwargs, &["obj"], 1)?;
            Ok(len_of(a[0].as_ref().unwrap())?)
        }
        "print" => {
            let mut sep = " ".to_string();
            let mut end = "\n".to_string();
            for (k, v) in &kwargs {
                let target = match k.as_str() {
                    "sep" => &mut sep,
                    "end" => &mut end,
                    other => {
                        return raise(
                            "TypeError",
                            format!("'{other}' is an invalid keyword argument for print()"),
                        )
                    }
                };
                match v {
                    Obj::None => {}
                    Obj::Str(s) => *target = s.to_string(),
                    o => {
                        return raise(
                            "TypeError",
                            format!("{k} must be None or a string, not {}", o.type_name()),
                        )
                    }
                }
            }
            let mut text = String::new();
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    text.push_str(&sep);
                }
                let limit = it.limits.max_output_chars + 1;
                match a {
                    Obj::Str(s) => text.push_str(s),
                    _ => match a.repr_capped(limit) {
                        Ok(s) => text.push_str(&s),
                        Err(_) => return Err(super::exec::Halt::Output),
                    },
                }
                if text.len() > 4 * limit {
                    return Err(super::exec::Halt::Output);
                }
            }
            text.push_str(&end);
            it.write_stdout(&text)?;
            Ok(Obj::None)
        }
        "range" => {
            no_kwargs(name, &kwargs)?;
            let ints = args.iter().map(to_index).collect::<EResult<Vec<_>>>()?;
            let (start, stop, step) = match ints.len() {
                0 => return raise("TypeError", "range expected at least 1 argument, got 0"),
                1 => (BigInt::zero(), ints[0].clone(), BigInt::one()),
                2 => (ints[0].clone(), ints[1].clone(), BigInt::one()),
                3 => (ints[0].clone(), ints[1].clone(), ints[2].clone()),
                n => {
                    return raise(
                        "TypeError",
                        format!("range expected at most 3 arguments, got {n}"),
                    )
                }
            };
            if step.is_zero() {
                return raise("ValueError", "range() arg 3 must not be zero");
            }
            Ok(Obj::Range(Rc::new(RangeObj { start, stop, step })))
        }
        "enumerate" => {
            let a = bind(name, args, kwargs, &["iterable", "start"], 1)?;
            let inner = it.iter_of(a[0].as_ref().unwrap())?;
            let count = match &a[1] {
                Some(s) => to_index(s)?,
                None => BigInt::zero(),
            };
            Ok(Obj::Iter(shared(IterState::Enumerate { inner, count })))
        }
        "zip" => {
            no_kwargs(name, &kwargs)?;
            let inners = args
                .iter()
                .map(|a| it.iter_of(a))
                .collect::<RResult<Vec<_>>>()?;
            Ok(Obj::Iter(shared(IterState::Zip { inners })))
        }
        "map" => {
            no_kwargs(name, &kwargs)?;
            if args.len() < 2 {
                return raise("TypeError", "map() must have at least two arguments.");
            }
            let mut args = args;
            let func = args.remove(0);
            let inners = args
                .iter()
                .map(|a| it.iter_of(a))
                .collect::<RResult<Vec<_>>>()?;
            Ok(Obj::Iter(shared(IterState::Map { func, inners })))
        }
        "filter" => {
            no_kwargs(name, &kwargs)?;
            if args.len() != 2 {
                return raise(
                    "TypeError",
                    format!("filter expected 2 arguments, got {}", args.len()),
                );
            }
            let inner = it.iter_of(&args[1])?;
            Ok(Obj::Iter(shared(IterState::Filter {
                func: args[0].clone(),
                inner,
            })))
        }
        "reversed" => {
            no_kwargs(name, &kwargs)?;
            let a = bind(name, args, kwargs, &["sequence"], 1)?;
            let src = a[0].as_ref().unwrap();
            let st = match src {
                Obj::List(l) => IterState::RevList {
                    list: l.clone(),
                    idx: l.borrow().len() as isize - 1,
                },
                Obj::Tuple(_) | Obj::Str(_) | Obj::Range(_) => {
                    let mut items = it.collect(src)?;
                    items.reverse();
                    IterState::Items {
                        items: Rc::new(items),
                        idx: 0,
                        ty: if matches!(src, Obj::Range(_)) {
                            "range_iterator"
                        } else {
                            "reversed"
                        },
                    }
                }
                Obj::Dict(_) | Obj::View(..) => {
                    let mut items = it.collect(src)?;
                    items.reverse();
                    IterState::Items {
                        items: Rc::new(items),
                        idx: 0,
                        ty: "dict_reversekeyiterator",
                    }
                }
                other => {
                    return raise(
                        "TypeError",
                        format!("'{}' object is not reversible", other.type_name()),
                    )
                }
            };
            Ok(Obj::Iter(shared(st)))
        }
        "sorted" => {
            let a = bind(name, args, kwargs, &["iterable", "key", "reverse"], 1)?;
            let items = it.collect(a[0].as_ref().unwrap())?;
            let key = a[1].clone().filter(|k| !matches!(k, Obj::None));
            let reverse = a[2].as_ref().is_some_and(Obj::truthy);
            Ok(Obj::list(sort_objs(it, items, key, reverse)?))
        }
        "sum" => {
            let a = bind(name, args, kwargs, &["iterable", "start"], 1)?;
            let mut acc = a[1].clone().unwrap_or(Obj::small(0));
            if matches!(acc, Obj::Str(_)) {
                return raise("TypeError", "sum() can't sum strings [use ''.join(seq) instead]");
            }
            let src = it.make_iter(a[0].as_ref().unwrap())?;
            while let Some(x) = it.next_item(&src)? {
                it.tick(1)?;
                acc = ops::binop(BinOp::Add, &acc, &x)?;
            }
            Ok(acc)
        }
        "min" | "max" => min_max(it, name, args, kwargs),
        "abs" => {
            no_kwargs(name, &kwargs)?;
            let a = bind(name, args, kwargs, &["x"], 1)?;
            Ok(match a[0].as_ref().unwrap() {
                Obj::Int(n) => Obj::int(n.abs()),
                Obj::Bool(b) => Obj::small(*b as i64),
                Obj::Float(f) => Obj::Float(f.abs()),
                other => {
                    return raise(
                        "TypeError",
                        format!("bad operand type for abs(): '{}'", other.type_name()),
                    )
                }
            })
        }
        "any" | "all" => {
            no_kwargs(name, &kwargs)?;
            let a = bind(name, args, kwargs, &["iterable"], 1)?;
            let src = it.make_iter(a[0].as_ref().unwrap())?;
            let want = name == "any";
            while let Some(x) = it.next_item(&src)? {
                it.tick(1)?;
                if x.truthy() == want {
                    return Ok(Obj::Bool(want));
                }
            }
            Ok(Obj::Bool(!want))
        }
        "str" => {
            let a = bind(name, args, kwargs, &["object"], 0)?;
            Ok(match &a[0] {
                None => Obj::str(""),
                Some(o @ Obj::Str(_)) => o.clone(),
                Some(o) => Obj::str(str_of(o)?),
            })
        }
        "repr" => {
            let a = bind(name, args, kwargs, &["obj"], 1)?;
            Ok(Obj::str(repr_of(a[0].as_ref().unwrap())?))
        }
        "bool" => {
            let a = bind(name, args, kwargs, &["x"], 0)?;
            Ok(Obj::Bool(a[0].as_ref().is_some_and(Obj::truthy)))
        }
        "int" => {
            let a = bind(name, args, kwargs, &["x", "base"], 0)?;
            Ok(Obj::int(to_int(a[0].as_ref(), a[1].as_ref())?))
        }
        "float" => {
            let a = bind(name, args, kwargs, &["x"], 0)?;
            Ok(Obj::Float(match &a[0] {
                None => 0.0,
                Some(Obj::Float(f)) => *f,
                Some(Obj::Int(n)) => int_to_f64(n)?,
                Some(Obj::Bool(b)) => *b as u8 as f64,
                Some(Obj::Str(s)) => match parse_float(s) {
                    Some(f) => f,
                    None => {
                        return raise(
                            "ValueError",
                            format!("could not convert string to float: {}", repr_of(&a[0].clone().unwrap())?),
                        )
                    }
                },
                Some(o) => {
                    return raise(
                        "TypeError",
                        format!(
                            "float() argument must be a string or a number, not '{}'",
                            o.type_name()
                        ),
                    )
                }
            }))
        }
        "list" => {
            let a = bind(name, args, kwargs, &["iterable"], 0)?;
            Ok(Obj::list(match &a[0] {
                None => Vec::new(),
                Some(o) => it.collect(o)?,
            }))
        }
        "tuple" => {
            let a = bind(name, args, kwargs, &["iterable"], 0)?;
            Ok(match &a[0] {
                None => Obj::tuple(Vec::new()),
                Some(t @ Obj::Tuple(_)) => t.clone(),
                Some(o) => Obj::tuple(it.collect(o)?),
            })
        }
        "set" => {
            let a = bind(name, args, kwargs, &["iterable"], 0)?;
            let mut s = PySet::default();
            if let Some(o) = &a[0] {
                for x in it.collect(o)? {
                    let k = hash_of(&x)?;
                    s.map.entry(k).or_insert(x);
                }
            }
            Ok(Obj::Set(shared(s)))
        }
        "dict" => {
            if args.len() > 1 {
                return raise(
                    "TypeError",
                    format!("dict expected at most 1 argument, got {}", args.len()),
                );
            }
            let d = shared(PyDict::default());
            if let Some(src) = args.first() {
                super::methods::dict_update(it, &d, src)?;
            }
            for (k, v) in kwargs {
                dict_insert(&mut d.borrow_mut(), Obj::str(k), v)?;
            }
            Ok(Obj::Dict(d))
        }
        "ord" => {
            no_kwargs(name, &kwargs)?;
            let a = bind(name, args, kwargs, &["c"], 1)?;
            match a[0].as_ref().unwrap() {
                Obj::Str(s) => {
                    let mut cs = s.chars();
                    match (cs.next(), cs.next()) {
                        (Some(c), None) => Ok(Obj::small(c as i64)),
                        _ => raise(
                            "TypeError",
                            format!(
                                "ord() expected a character, but string of length {} found",
                                s.chars().count()
                            ),
                        ),
                    }
                }
                o => raise(
                    "TypeError",
                    format!(
                        "ord() expected string of length 1, but {} found",
                        o.type_name()
                    ),
                ),
            }
        }
        "chr" => {
            no_kwargs(name, &kwargs)?;
            let a = bind(name, args, kwargs, &["i"], 1)?;
            let n = to_index(a[0].as_ref().unwrap())?;
            match n.to_u32().and_then(char::from_u32) {
                Some(c) => Ok(Obj::str(c.to_string())),
                None => raise("ValueError", "chr() arg not in range(0x110000)"),
            }
        }
        "round" => {
            let a = bind(name, args, kwargs, &["number", "ndigits"], 1)?;
            let x = a[0].as_ref().unwrap();
            let nd = match &a[1] {
                None | Some(Obj::None) => None,
                Some(o) => Some(to_index(o)?),
            };
            Ok(round(x, nd)?)
        }
        "isinstance" => {
            no_kwargs(name, &kwargs)?;
            let a = bind(name, args, kwargs, &["obj", "class_or_tuple"], 2)?;
            let obj = a[0].as_ref().unwrap();
            let classes: Vec<Obj> = match a[1].as_ref().unwrap() {
                Obj::Tuple(t) => (**t).clone(),
                other => vec![other.clone()],
            };
            let actual = obj.type_name();
            let mut hit = false;
            for c in &classes {
                match c {
                    Obj::Type(t) => {
                        if *t == actual || (*t == "int" && actual == "bool") {
                            hit = true;
                        }
                    }
                    _ => {
                        return raise(
                            "TypeError",
                            "isinstance() arg 2 must be a type or tuple of types",
                        )
                    }
                }
            }
            Ok(Obj::Bool(hit))
        }
        "type" => {
            no_kwargs(name, &kwargs)?;
            if args.len() != 1 {
                return raise("TypeError", "type() takes 1 argument");
            }
            Ok(Obj::Type(args[0].type_name()))
        }
        "divmod" => {
            no_kwargs(name, &kwargs)?;
            let a = bind(name, args, kwargs, &["x", "y"], 2)?;
            let (x, y) = (a[0].as_ref().unwrap(), a[1].as_ref().unwrap());
            match (x, y) {
                (Obj::Float(_), _) | (_, Obj::Float(_)) => {
                    let fx = as_float(x, y, "divmod()")?;
                    let fy = as_float(y, x, "divmod()")?;
                    if fy == 0.0 {
                        return raise("ZeroDivisionError", "float divmod()");
                    }
                    let (q, r) = float_divmod(fx, fy);
                    Ok(Obj::tuple(vec![Obj::Float(q), Obj::Float(r)]))
                }
                _ => {
                    let q = ops::binop(BinOp::FloorDiv, x, y)?;
                    let r = ops::binop(BinOp::Mod, x, y)?;
                    Ok(Obj::tuple(vec![q, r]))
                }
            }
        }
        "pow" => {
            let a = bind(name, args, kwargs, &["base", "exp", "mod"], 2)?;
            let (b, e) = (a[0].as_ref().unwrap(), a[1].as_ref().unwrap());
            match &a[2] {
                None | Some(Obj::None) => Ok(ops::binop(BinOp::Pow, b, e)?),
                Some(m) => Ok(Obj::int(mod_pow(b, e, m)?)),
            }
        }
        "iter" => {
            no_kwargs(name, &kwargs)?;
            let a = bind(name, args, kwargs, &["object"], 1)?;
            it.iter_of(a[0].as_ref().unwrap())
        }
        "next" => {
            no_kwargs(name, &kwargs)?;
            let a = bind(name, args, kwargs, &["iterator", "default"], 1)?;
            let Obj::Iter(src) = a[0].as_ref().unwrap() else {
                return raise(
                    "TypeError",
                    format!(
                        "'{}' object is not an iterator",
                        a[0].as_ref().unwrap().type_name()
                    ),
                );
            };
            match it.next_item(src)? {
                Some(x) => Ok(x),
                None => match &a[1] {
                    Some(d) => Ok(d.clone()),
                    None => raise("StopIteration", ""),
                },
            }
        }
        other => raise("TypeError", format!("cannot create '{other}' instances")),
    }
}

fn as_float(x: &Obj, other: &Obj, what: &str) -> EResult<f64> {
    match x {
        Obj::Float(f) => Ok(*f),
        Obj::Int(n) => int_to_f64(n),
        Obj::Bool(b) => Ok(*b as u8 as f64),
        _ => type_error(format!(
            "unsupported operand type(s) for {what}: '{}' and '{}'",
            x.type_name(),
            other.type_name()
        )),
    }
}

pub(crate) fn len_of(o: &Obj) -> EResult<Obj> {
    let n = match o {
        Obj::Str(s) => {
            if s.is_ascii() {
                s.len()
            } else {
                s.chars().count()
            }
        }
        Obj::List(l) => l.borrow().len(),
        Obj::Tuple(t) => t.len(),
        Obj::Set(s) => s.borrow().map.len(),
        Obj::Dict(d) | Obj::View(d, _) => d.borrow().map.len(),
        Obj::Range(r) => {
            let n = r.len();
            return match n.to_i64() {
                Some(n) => Ok(Obj::small(n)),
                None => exc("OverflowError", "Python int too large to convert to C ssize_t"),
            };
        }
        other => {
            return type_error(format!(
                "object of type '{}' has no len()",
                other.type_name()
            ))
        }
    };
    Ok(Obj::small(n as i64))
}

fn min_max(
    it: &mut Interp,
    name: &str,
    args: Vec<Obj>,
    kwargs: Vec<(String, Obj)>,
) -> RResult<Obj> {
    let mut key = None;
    let mut default = None;
    for (k, v) in kwargs {
        match k.as_str() {
            "key" => key = Some(v).filter(|v| !matches!(v, Obj::None)),
            "default" => default = Some(v),
            other => {
                return raise(
                    "TypeError",
                    format!("'{other}' is an invalid keyword argument for {name}()"),
                )
            }
        }
    }
    let items = match args.len() {
        0 => {
            return raise(
                "TypeError",
                format!("{name} expected at least 1 argument, got 0"),
            )
        }
        1 => it.collect(&args[0])?,
        _ => {
            if default.is_some() {
                return raise(
                    "TypeError",
                    format!(
                        "Cannot specify a default for {name}() with multiple positional arguments"
                    ),
                );
            }
            args
        }
    };
    let mut items = items.into_iter();
    let Some(mut best) = items.next() else {
        return match default {
            Some(d) => Ok(d),
            None => raise("ValueError", format!("{name}() arg is an empty sequence")),
        };
    };
    let keyed = |it: &mut Interp, x: &Obj| -> RResult<Obj> {
        match &key {
            Some(f) => it.call(f, vec![x.clone()], Vec::new()),
            None => Ok(x.clone()),
        }
    };
    let mut best_key = keyed(it, &best)?;
    let op = if name == "max" { CmpOp::Gt } else { CmpOp::Lt };
    for x in items {
        let k = keyed(it, &x)?;
        if ops::order(op, &k, &best_key)? {
            best = x;
            best_key = k;
        }
    }
    Ok(best)
}

/// Stable sort with an optional key function, using only `<`.
pub(crate) fn sort_objs(
    it: &mut Interp,
    items: Vec<Obj>,
    key: Option<Obj>,
    reverse: bool,
) -> RResult<Vec<Obj>> {
    let mut pairs: Vec<(Obj, Obj)> = Vec::with_capacity(items.len());
    for x in items {
        let k = match &key {
            Some(f) => it.call(f, vec![x.clone()], Vec::new())?,
            None => x.clone(),
        };
        pairs.push((k, x));
    }
    if reverse {
        pairs.reverse();
    }
    let sorted = merge_sort(pairs)?;
    let mut out: Vec<Obj> = sorted.into_iter().map(|(_, x)| x).collect();
    if reverse {
        out.reverse();
    }
    Ok(out)
}

fn merge_sort(mut v: Vec<(Obj, Obj)>) -> EResult<Vec<(Obj, Obj)>> {
    let n = v.len();
    if n < 2 {
        return Ok(v);
    }
    // Short runs by insertion, then bottom-up merges.
    const RUN: usize = 16;
    for start in (0..n).step_by(RUN) {
        let end = (start + RUN).min(n);
        for i in start + 1..end {
            let mut j = i;
            while j > start && ops::less(&v[j].0, &v[j - 1].0)? {
                v.swap(j, j - 1);
                j -= 1;
            }
        }
    }
    let mut width = RUN;
    while width < n {
        let mut out = Vec::with_capacity(n);
        let mut src = v.into_iter().map(Some).collect::<Vec<_>>();
        let mut lo = 0;
        while lo < n {
            let mid = (lo + width).min(n);
            let hi = (lo + 2 * width).min(n);
            let (mut i, mut j) = (lo, mid);
            while i < mid && j < hi {
                let take_right = {
                    let a = src[i].as_ref().unwrap();
                    let b = src[j].as_ref().unwrap();
                    ops::less(&b.0, &a.0)?
                };
                if take_right {
                    out.push(src[j].take().unwrap());
                    j += 1;
                } else {
                    out.push(src[i].take().unwrap());
                    i += 1;
                }
            }
            while i < mid {
                out.push(src[i].take().unwrap());
                i += 1;
            }
            while j < hi {
                out.push(src[j].take().unwrap());
                j += 1;
            }
            lo = hi;
        }
        v = out;
        width *= 2;
    }
    Ok(v)
}

fn round(x: &Obj, nd: Option<BigInt>) -> EResult<Obj> {
    match x {
        Obj::Float(f) => match nd {
            None => {
                if f.is_nan() {
                    return exc("ValueError", "cannot convert float NaN to integer");
                }
                if f.is_infinite() {
                    return exc("OverflowError", "cannot convert float infinity to integer");
                }
                Ok(Obj::int(float_to_big(round_half_even(*f)).expect("finite")))
            }
            Some(n) => {
                let n = n.to_i64().unwrap_or(if n.is_negative() { -1000 } else { 1000 });
                Ok(Obj::Float(round_float(*f, n)))
            }
        },
        Obj::Int(_) | Obj::Bool(_) => {
            let v = x.as_index().unwrap();
            match nd {
                Some(n) if n.is_negative() => {
                    let p = (-n).to_u32().unwrap_or(u32::MAX);
                    if p > 100_000 {
                        return Ok(Obj::small(0));
                    }
                    let m = num_traits::pow(BigInt::from(10), p as usize);
                    Ok(Obj::int(div_round_half_even(&v, &m) * m))
                }
                _ => Ok(Obj::int(v)),
            }
        }
        other => type_error(format!(
            "type {} doesn't define __round__ method",
            other.type_name()
        )),
    }
}

fn mod_pow(b: &Obj, e: &Obj, m: &Obj) -> EResult<BigInt> {
    let (Some(b), Some(e), Some(m)) = (b.as_index(), e.as_index(), m.as_index()) else {
        return type_error("pow() 3rd argument not allowed unless all arguments are integers");
    };
    if m.is_zero() {
        return exc("ValueError", "pow() 3rd argument cannot be 0");
    }
    let base = if e.is_negative() {
        let g = b.extended_gcd(&m);
        if !g.gcd.abs().is_one() {
            return exc("ValueError", "base is not invertible for the given modulus");
        }
        g.x.mod_floor(&m)
    } else {
        b
    };
    let r = base.modpow(&e.abs(), &m.abs());
    // Result takes the sign of the modulus.
    Ok(if m.is_negative() && !r.is_zero() { r + m } else { r })
}

fn to_int(x: Option<&Obj>, base: Option<&Obj>) -> EResult<BigInt> {
    let Some(x) = x else {
        if base.is_some() {
            return type_error("int() missing string argument");
        }
        return Ok(BigInt::zero());
    };
    if let Some(b) = base {
        let b = to_index(b)?;
        let Obj::Str(s) = x else {
            return type_error("int() can't convert non-string with explicit base");
        };
        let b = b.to_u32().filter(|b| *b == 0 || (2..=36).contains(b));
        let Some(b) = b else {
            return exc("ValueError", "int() base must be >= 2 and <= 36, or 0");
        };
        return parse_int(s, b).map_or_else(
            || {
                exc(
                    "ValueError",
                    format!(
                        "invalid literal for int() with base {b}: {}",
                        super::render::quote_str(s)
                    ),
                )
            },
            Ok,
        );
    }
    match x {
        Obj::Int(n) => Ok((**n).clone()),
        Obj::Bool(b) => Ok(BigInt::from(*b as u8)),
        Obj::Float(f) => {
            if f.is_nan() {
                return exc("ValueError", "cannot convert float NaN to integer");
            }
            float_to_big(*f).map_or_else(
                || exc("OverflowError", "cannot convert float infinity to integer"),
                Ok,
            )
        }
        Obj::Str(s) => parse_int(s, 10).map_or_else(
            || {
                exc(
                    "ValueError",
                    format!(
                        "invalid literal for int() with base 10: {}",
                        super::render::quote_str(s)
                    ),
                )
            },
            Ok,
        ),
        other => type_error(format!(
            "int() argument must be a string, a bytes-like object or a number, not '{}'",
            other.type_name()
        )),
    }
}

/// Strip underscores that sit between two valid characters; `None` if any
/// underscore is misplaced.
fn strip_underscores(s: &str, ok: impl Fn(char) -> bool) -> Option<String> {
    let cs: Vec<char> = s.chars().collect();
    let mut out = String::with_capacity(s.len());
    for (i, &c) in cs.iter().enumerate() {
        if c == '_' {
            let prev = i.checked_sub(1).map(|j| cs[j]);
            let next = cs.get(i + 1).copied();
            if !(prev.is_some_and(&ok) && next.is_some_and(&ok)) {
                return None;
            }
        } else {
            out.push(c);
        }
    }
    Some(out)
}

pub(crate) fn parse_int(s: &str, base: u32) -> Option<BigInt> {
    let t = s.trim();
    let (neg, t) = match t.as_bytes().first() {
        Some(b'-') => (true, &t[1..]),
        Some(b'+') => (false, &t[1..]),
        _ => (false, t),
    };
    let lower = t.to_ascii_lowercase();
    let (radix, digits) = {
        let prefixed = |p: &str, r: u32| -> Option<(u32, &str)> {
            lower
                .starts_with(p)
                .then(|| (r, &t[2..]))
                .filter(|_| base == 0 || base == r)
        };
        if let Some(x) = prefixed("0x", 16).or_else(|| prefixed("0o", 8)).or_else(|| prefixed("0b", 2)) {
            // An underscore may follow the prefix directly.
            (x.0, x.1.strip_prefix('_').unwrap_or(x.1))
        } else if base == 0 {
            if t.len() > 1 && t.starts_with('0') && t.chars().any(|c| c != '0' && c != '_') {
                return None;
            }
            (10, t)
        } else {
            (base, t)
        }
    };
    if digits.is_empty() {
        return None;
    }
    let clean = strip_underscores(digits, |c| c.is_digit(radix))?;
    if clean.is_empty() || !clean.chars().all(|c| c.is_digit(radix)) {
        return None;
    }
    let n = BigInt::parse_bytes(clean.as_bytes(), radix)?;
    Some(if neg { -n } else { n })
}

pub(crate) fn parse_float(s: &str) -> Option<f64> {
    let t = s.trim();
    let (neg, body) = match t.as_bytes().first() {
        Some(b'-') => (true, &t[1..]),
        Some(b'+') => (false, &t[1..]),
        _ => (false, t),
    };
    let lower = body.to_ascii_lowercase();
    let v = match lower.as_str() {
        "inf" | "infinity" => f64::INFINITY,
        "nan" => f64::NAN,
        _ => {
            if !body
                .chars()
                .all(|c| c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '+' | '-' | '_'))
            {
                return None;
            }
            let clean = strip_underscores(body, |c| c.is_ascii_digit())?;
            if clean.starts_with(['+', '-']) {
                return None;
            }
            clean.parse::<f64>().ok()?
        }
    };
    Some(if neg { -v } else { v })
}

/// Members of `o` collected into a set (for set methods taking iterables).
pub(crate) fn set_of(it: &mut Interp, o: &Obj) -> RResult<PySet> {
    if let Obj::Set(s) = o {
        return Ok(s.borrow().clone());
    }
    let mut s = PySet::default();
    for x in it.collect(o)? {
        let k = hash_of(&x)?;
        s.map.entry(k).or_insert(x);
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn int_parsing() {
        assert_eq!(parse_int(" 42 ", 10), Some(BigInt::from(42)));
        assert_eq!(parse_int("-1_000", 10), Some(BigInt::from(-1000)));
        assert_eq!(parse_int("1__0", 10), None);
        assert_eq!(parse_int("0x1f", 16), Some(BigInt::from(31)));
        assert_eq!(parse_int("0x1f", 0), Some(BigInt::from(31)));
        assert_eq!(parse_int("010", 0), None);
        assert_eq!(parse_int("3.5", 10), None);
        assert_eq!(parse_int("", 10), None);
        assert_eq!(parse_int("z", 36), Some(BigInt::from(35)));
    }

    #[test]
    fn float_parsing() {
        assert_eq!(parse_float(" 1.5 "), Some(1.5));
        assert_eq!(parse_float("1_0.5"), Some(10.5));
        assert_eq!(parse_float("-inf"), Some(f64::NEG_INFINITY));
        assert_eq!(parse_float("1e3"), Some(1000.0));
        assert_eq!(parse_float(".5"), Some(0.5));
        assert_eq!(parse_float("abc"), None);
        assert_eq!(parse_float("1_"), None);
        assert_eq!(parse_float("--1"), None);
    }

    #[test]
    fn rounding_builtin() {
        assert_eq!(round(&Obj::Float(2.5), None).unwrap().repr(), "2");
        assert_eq!(round(&Obj::Float(2.675), Some(2.into())).unwrap().repr(), "2.67");
        assert_eq!(round(&Obj::small(1250), Some((-2).into())).unwrap().repr(), "1200");
        assert_eq!(round(&Obj::small(1350), Some((-2).into())).unwrap().repr(), "1400");
    }

    #[test]
    fn modular_pow() {
        let p = |b: i64, e: i64, m: i64| mod_pow(&Obj::small(b), &Obj::small(e), &Obj::small(m)).unwrap();
        assert_eq!(p(3, 4, 5), BigInt::from(1));
        assert_eq!(p(3, -1, 7), BigInt::from(5));
        assert_eq!(p(2, 3, -5), BigInt::from(-2));
    }
}
