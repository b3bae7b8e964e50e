//! Methods of the builtin container and string types.

use std::rc::Rc;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};
use unicode_general_category::{get_general_category, GeneralCategory as Gc};

use crate::syntax::ast::BinOp;
use crate::syntax::constraints::methods_of;

use super::builtins::{bind, set_of, sort_objs, to_index};
use super::exec::{dict_insert, hash_of, raise, Interp, RResult};
use super::obj::{set_sorted, shared, Obj, PyDict, PySet, Shared, ViewKind};
use super::ops::{self, exc, type_error, EResult, MAX_ELEMENTS};

/// Static name of method `attr` on `recv`, or AttributeError.
pub(crate) fn resolve(recv: &Obj, attr: &str) -> EResult<&'static str> {
    let ty = recv.type_name();
    methods_of(ty)
        .and_then(|ms| ms.iter().find(|m| **m == attr).copied())
        .map_or_else(
            || {
                exc(
                    "AttributeError",
                    format!("'{ty}' object has no attribute '{attr}'"),
                )
            },
            Ok,
        )
}

/// Unbound method looked up on a type, e.g. `str.upper`.
pub(crate) fn descriptor(ty: &'static str, attr: &str) -> EResult<Obj> {
    methods_of(ty)
        .and_then(|ms| ms.iter().find(|m| **m == attr).copied())
        .map_or_else(
            || {
                exc(
                    "AttributeError",
                    format!("type object '{ty}' has no attribute '{attr}'"),
                )
            },
            |m| Ok(Obj::Descr(ty, m)),
        )
}

pub(crate) fn call_method(
    it: &mut Interp,
    recv: &Obj,
    name: &str,
    args: Vec<Obj>,
    kwargs: Vec<(String, Obj)>,
) -> RResult<Obj> {
    match recv {
        Obj::Str(s) => {
            // join consumes arbitrary iterables, so materialize them here.
            let args = if name == "join" && args.len() == 1 {
                if !is_iterable(&args[0]) {
                    return raise(
                        "TypeError",
                        "can only join an iterable"
                    );
                }
                vec![Obj::list(it.collect(&args[0])?)]
            } else {
                args
            };
            Ok(str_method(s, name, args, kwargs)?)
        }
        Obj::List(l) => list_method(it, l, name, args, kwargs),
        Obj::Tuple(t) => Ok(seq_search("tuple", t, name, args, kwargs)?),
        Obj::Set(s) => set_method(it, s, name, args, kwargs),
        Obj::Dict(d) => dict_method(it, d, name, args, kwargs),
        other => raise(
            "AttributeError",
            format!("'{}' object has no attribute '{name}'", other.type_name()),
        ),
    }
}

fn is_iterable(o: &Obj) -> bool {
    matches!(
        o,
        Obj::Str(_)
            | Obj::List(_)
            | Obj::Tuple(_)
            | Obj::Set(_)
            | Obj::Dict(_)
            | Obj::Range(_)
            | Obj::Iter(_)
            | Obj::View(..)
    )
}

fn no_args(name: &str, args: &[Obj], kwargs: &[(String, Obj)]) -> EResult<()> {
    if !kwargs.is_empty() {
        return type_error(format!("{name}() takes no keyword arguments"));
    }
    if !args.is_empty() {
        return type_error(format!(
            "{name}() takes no arguments ({} given)",
            args.len()
        ));
    }
    Ok(())
}

fn opt_index(o: &Option<Obj>) -> EResult<Option<BigInt>> {
    match o {
        None | Some(Obj::None) => Ok(None),
        Some(x) => to_index(x).map(Some),
    }
}

fn clamp_i64(n: &BigInt) -> i64 {
    n.to_i64()
        .unwrap_or(if n.is_negative() { i64::MIN / 4 } else { i64::MAX / 4 })
}

/// Start/end bounds for search methods, clamped like the reference runtime.
/// `None` when start lies past the end of the sequence.
fn search_bounds(len: usize, start: Option<BigInt>, end: Option<BigInt>) -> Option<(usize, usize)> {
    let len = len as i64;
    let fix = |v: Option<BigInt>, default: i64| -> i64 {
        match v {
            None => default,
            Some(v) => {
                let mut x = clamp_i64(&v);
                if x < 0 {
                    x = (x + len).max(0);
                }
                x.min(len.max(x))
            }
        }
    };
    let start = fix(start, 0);
    let end = fix(end, len).min(len);
    if start > len {
        return None;
    }
    Some((start as usize, end.max(start) as usize))
}

// ------------------------------------------------------------ str

fn py_space(c: char) -> bool {
    c.is_whitespace() || ('\x1c'..='\x1f').contains(&c)
}

fn is_alpha(c: char) -> bool {
    matches!(
        get_general_category(c),
        Gc::UppercaseLetter
            | Gc::LowercaseLetter
            | Gc::TitlecaseLetter
            | Gc::ModifierLetter
            | Gc::OtherLetter
    )
}

fn is_digit(c: char) -> bool {
    get_general_category(c) == Gc::DecimalNumber
        || matches!(c, '\u{b2}' | '\u{b3}' | '\u{b9}' | '\u{2070}' | '\u{2074}'..='\u{2079}' | '\u{2080}'..='\u{2089}')
}

fn is_numeric(c: char) -> bool {
    is_digit(c) || matches!(get_general_category(c), Gc::LetterNumber | Gc::OtherNumber)
}

fn is_cased(c: char) -> bool {
    c.is_lowercase() || c.is_uppercase() || get_general_category(c) == Gc::TitlecaseLetter
}

fn upper_of(c: char, out: &mut String) {
    out.extend(c.to_uppercase());
}

fn lower_of(c: char, out: &mut String) {
    out.extend(c.to_lowercase());
}

fn char_pos(s: &str, byte: usize) -> usize {
    if s.is_ascii() {
        byte
    } else {
        s[..byte].chars().count()
    }
}

/// Byte offset of char index `i` (clamped to the end).
fn byte_pos(s: &str, i: usize) -> usize {
    if s.is_ascii() {
        i.min(s.len())
    } else {
        s.char_indices().nth(i).map_or(s.len(), |(b, _)| b)
    }
}

fn char_len(s: &str) -> usize {
    if s.is_ascii() {
        s.len()
    } else {
        s.chars().count()
    }
}

fn want_str<'a>(name: &str, o: &'a Obj) -> EResult<&'a str> {
    match o {
        Obj::Str(s) => Ok(s),
        other => type_error(format!(
            "{name} arg must be None or str, not {}",
            other.type_name()
        )),
    }
}

fn must_str<'a>(o: &'a Obj, what: &str) -> EResult<&'a str> {
    match o {
        Obj::Str(s) => Ok(s),
        other => type_error(format!(
            "{what} must be str, not {}",
            other.type_name()
        )),
    }
}

fn strip_set(s: &str, chars: Option<&str>, left: bool, right: bool) -> String {
    let hit = |c: char| match chars {
        None => py_space(c),
        Some(cs) => cs.contains(c),
    };
    let mut t = s;
    if left {
        t = t.trim_start_matches(hit);
    }
    if right {
        t = t.trim_end_matches(hit);
    }
    t.to_string()
}

fn split_ws(s: &str, maxsplit: i64) -> Vec<String> {
    let cs: Vec<char> = s.chars().collect();
    let n = cs.len();
    let mut out = Vec::new();
    let mut i = 0;
    loop {
        while i < n && py_space(cs[i]) {
            i += 1;
        }
        if i == n {
            break;
        }
        if maxsplit >= 0 && out.len() as i64 == maxsplit {
            out.push(cs[i..].iter().collect());
            break;
        }
        let mut j = i;
        while j < n && !py_space(cs[j]) {
            j += 1;
        }
        out.push(cs[i..j].iter().collect());
        i = j;
    }
    out
}

fn rsplit_ws(s: &str, maxsplit: i64) -> Vec<String> {
    let cs: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = cs.len();
    loop {
        while i > 0 && py_space(cs[i - 1]) {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        if maxsplit >= 0 && out.len() as i64 == maxsplit {
            out.push(cs[..i].iter().collect());
            break;
        }
        let mut j = i;
        while j > 0 && !py_space(cs[j - 1]) {
            j -= 1;
        }
        out.push(cs[j..i].iter().collect());
        i = j;
    }
    out.reverse();
    out
}

fn split_lines(s: &str, keepends: bool) -> Vec<String> {
    let cs: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < cs.len() {
        let c = cs[i];
        let brk = matches!(
            c,
            '\n' | '\r' | '\x0b' | '\x0c' | '\x1c' | '\x1d' | '\x1e' | '\u{85}' | '\u{2028}' | '\u{2029}'
        );
        if brk {
            let mut end = i + 1;
            if c == '\r' && cs.get(i + 1) == Some(&'\n') {
                end += 1;
            }
            let stop = if keepends { end } else { i };
            out.push(cs[start..stop].iter().collect());
            start = end;
            i = end;
        } else {
            i += 1;
        }
    }
    if start < cs.len() {
        out.push(cs[start..].iter().collect());
    }
    out
}

fn str_list(v: Vec<String>) -> Obj {
    Obj::list(v.into_iter().map(Obj::str).collect())
}

fn width_of(o: &Obj) -> EResult<usize> {
    let w = to_index(o)?;
    if w.is_negative() {
        return Ok(0);
    }
    match w.to_usize() {
        Some(w) if w <= MAX_ELEMENTS => Ok(w),
        _ => exc("MemoryError", ""),
    }
}

fn fill_char(o: &Option<Obj>) -> EResult<char> {
    match o {
        None => Ok(' '),
        Some(Obj::Str(s)) => {
            let mut cs = s.chars();
            match (cs.next(), cs.next()) {
                (Some(c), None) => Ok(c),
                _ => type_error("The fill character must be exactly one character long"),
            }
        }
        Some(other) => type_error(format!(
            "The fill character must be a unicode character, not {}",
            other.type_name()
        )),
    }
}

/// Search-style string methods: find, rfind, index, rindex, count.
fn str_search(s: &str, name: &str, a: &[Option<Obj>]) -> EResult<Obj> {
    let sub = must_str(a[0].as_ref().unwrap(), "must be str, not")
        .or_else(|_| {
            type_error(format!(
                "must be str, not {}",
                a[0].as_ref().unwrap().type_name()
            ))
        })?;
    let n = char_len(s);
    let bounds = search_bounds(n, opt_index(&a[1])?, opt_index(&a[2])?);
    let not_found = |name: &str| -> EResult<Obj> {
        if name.contains("index") {
            exc("ValueError", "substring not found")
        } else {
            Ok(Obj::small(-1))
        }
    };
    let Some((lo, hi)) = bounds else {
        return if name == "count" {
            Ok(Obj::small(0))
        } else {
            not_found(name)
        };
    };
    let blo = byte_pos(s, lo);
    let bhi = byte_pos(s, hi);
    let hay = &s[blo..bhi];
    match name {
        "count" => {
            if sub.is_empty() {
                return Ok(Obj::small((hi - lo + 1) as i64));
            }
            Ok(Obj::small(hay.matches(sub).count() as i64))
        }
        "find" | "index" => match hay.find(sub) {
            Some(b) => Ok(Obj::small((lo + char_pos(hay, b)) as i64)),
            None => not_found(name),
        },
        _ => match hay.rfind(sub) {
            Some(b) => Ok(Obj::small((lo + char_pos(hay, b)) as i64)),
            None => not_found(name),
        },
    }
}

fn affix_match(s: &str, name: &str, a: &[Option<Obj>]) -> EResult<Obj> {
    let n = char_len(s);
    let pats: Vec<&str> = match a[0].as_ref().unwrap() {
        Obj::Str(p) => vec![p],
        Obj::Tuple(t) => t
            .iter()
            .map(|p| match p {
                Obj::Str(p) => Ok(&**p),
                other => type_error(format!(
                    "tuple for {name} must only contain str, not {}",
                    other.type_name()
                )),
            })
            .collect::<EResult<_>>()?,
        other => {
            return type_error(format!(
                "{name} first arg must be str or a tuple of str, not {}",
                other.type_name()
            ))
        }
    };
    let Some((lo, hi)) = search_bounds(n, opt_index(&a[1])?, opt_index(&a[2])?) else {
        return Ok(Obj::Bool(false));
    };
    let hay = &s[byte_pos(s, lo)..byte_pos(s, hi)];
    let hit = pats.iter().any(|p| {
        if name == "startswith" {
            hay.starts_with(p)
        } else {
            hay.ends_with(p)
        }
    });
    Ok(Obj::Bool(hit))
}

fn str_method(s: &Rc<str>, name: &str, args: Vec<Obj>, kwargs: Vec<(String, Obj)>) -> EResult<Obj> {
    let s: &str = s;
    Ok(match name {
        "strip" | "lstrip" | "rstrip" => {
            let a = bind(name, args, kwargs, &["chars"], 0)?;
            let chars = match &a[0] {
                None | Some(Obj::None) => None,
                Some(o) => Some(want_str(name, o)?),
            };
            Obj::str(strip_set(s, chars, name != "rstrip", name != "lstrip"))
        }
        "split" | "rsplit" => {
            let a = bind(name, args, kwargs, &["sep", "maxsplit"], 0)?;
            let maxsplit = match &a[1] {
                None => -1,
                Some(o) => clamp_i64(&to_index(o)?),
            };
            match &a[0] {
                None | Some(Obj::None) => str_list(if name == "split" {
                    split_ws(s, maxsplit)
                } else {
                    rsplit_ws(s, maxsplit)
                }),
                Some(o) => {
                    let sep = must_str(o, "must be str or None, not").or_else(|_| {
                        type_error(format!("must be str or None, not {}", o.type_name()))
                    })?;
                    if sep.is_empty() {
                        return exc("ValueError", "empty separator");
                    }
                    let parts: Vec<String> = match (name, maxsplit) {
                        ("split", m) if m < 0 => s.split(sep).map(String::from).collect(),
                        ("split", m) => s
                            .splitn(m.saturating_add(1) as usize, sep)
                            .map(String::from)
                            .collect(),
                        (_, m) if m < 0 => {
                            let mut v: Vec<String> = s.rsplit(sep).map(String::from).collect();
                            v.reverse();
                            v
                        }
                        (_, m) => {
                            let mut v: Vec<String> = s
                                .rsplitn(m.saturating_add(1) as usize, sep)
                                .map(String::from)
                                .collect();
                            v.reverse();
                            v
                        }
                    };
                    str_list(parts)
                }
            }
        }
        "join" => {
            let a = bind(name, args, kwargs, &["iterable"], 1)?;
            let items = match a[0].as_ref().unwrap() {
                Obj::List(l) => l.borrow().clone(),
                _ => return type_error("can only join an iterable"),
            };
            let mut out = String::new();
            for (i, x) in items.iter().enumerate() {
                let Obj::Str(t) = x else {
                    return type_error(format!(
                        "sequence item {i}: expected str instance, {} found",
                        x.type_name()
                    ));
                };
                if i > 0 {
                    out.push_str(s);
                }
                out.push_str(t);
                if out.len() > MAX_ELEMENTS * 4 {
                    return exc("MemoryError", "");
                }
            }
            Obj::str(out)
        }
        "upper" | "lower" | "swapcase" | "title" | "capitalize" => {
            no_args(name, &args, &kwargs)?;
            let mut out = String::with_capacity(s.len());
            match name {
                "upper" => s.chars().for_each(|c| upper_of(c, &mut out)),
                "lower" => s.chars().for_each(|c| lower_of(c, &mut out)),
                "swapcase" => s.chars().for_each(|c| {
                    if c.is_uppercase() {
                        lower_of(c, &mut out)
                    } else if c.is_lowercase() {
                        upper_of(c, &mut out)
                    } else {
                        out.push(c)
                    }
                }),
                "title" => {
                    let mut prev_cased = false;
                    for c in s.chars() {
                        if prev_cased {
                            lower_of(c, &mut out);
                        } else {
                            upper_of(c, &mut out);
                        }
                        prev_cased = is_cased(c);
                    }
                }
                _ => {
                    for (i, c) in s.chars().enumerate() {
                        if i == 0 {
                            upper_of(c, &mut out);
                        } else {
                            lower_of(c, &mut out);
                        }
                    }
                }
            }
            Obj::str(out)
        }
        "replace" => {
            let a = bind(name, args, kwargs, &["old", "new", "count"], 2)?;
            let old = must_str(a[0].as_ref().unwrap(), "")
                .or_else(|_| type_error(format!("replace() argument 1 must be str, not {}", a[0].as_ref().unwrap().type_name())))?;
            let new = must_str(a[1].as_ref().unwrap(), "")
                .or_else(|_| type_error(format!("replace() argument 2 must be str, not {}", a[1].as_ref().unwrap().type_name())))?;
            let count = match &a[2] {
                None => -1,
                Some(o) => clamp_i64(&to_index(o)?),
            };
            let hits = if old.is_empty() {
                char_len(s) + 1
            } else {
                s.matches(old).count()
            };
            let hits = if count >= 0 { hits.min(count as usize) } else { hits };
            if s.len() + hits.saturating_mul(new.len()) > MAX_ELEMENTS * 4 {
                return exc("MemoryError", "");
            }
            Obj::str(if count < 0 {
                s.replace(old, new)
            } else {
                s.replacen(old, new, count as usize)
            })
        }
        "find" | "rfind" | "index" | "rindex" | "count" => {
            let a = bind(name, args, kwargs, &["sub", "start", "end"], 1)?;
            str_search(s, name, &a)?
        }
        "startswith" | "endswith" => {
            let a = bind(name, args, kwargs, &["prefix", "start", "end"], 1)?;
            affix_match(s, name, &a)?
        }
        "isalpha" | "isdigit" | "isalnum" | "isspace" => {
            no_args(name, &args, &kwargs)?;
            let test: fn(char) -> bool = match name {
                "isalpha" => is_alpha,
                "isdigit" => is_digit,
                "isalnum" => |c| is_alpha(c) || is_numeric(c),
                _ => py_space,
            };
            Obj::Bool(!s.is_empty() && s.chars().all(test))
        }
        "islower" | "isupper" => {
            no_args(name, &args, &kwargs)?;
            let mut cased = false;
            let mut ok = true;
            for c in s.chars() {
                if !is_cased(c) {
                    continue;
                }
                cased = true;
                let good = if name == "islower" {
                    c.is_lowercase()
                } else {
                    c.is_uppercase()
                };
                if !good {
                    ok = false;
                    break;
                }
            }
            Obj::Bool(cased && ok)
        }
        "zfill" => {
            let a = bind(name, args, kwargs, &["width"], 1)?;
            let w = width_of(a[0].as_ref().unwrap())?;
            let n = char_len(s);
            if n >= w {
                Obj::str(s)
            } else {
                let pad = "0".repeat(w - n);
                let out = match s.chars().next() {
                    Some(c @ ('+' | '-')) => format!("{c}{pad}{}", &s[1..]),
                    _ => format!("{pad}{s}"),
                };
                Obj::str(out)
            }
        }
        "ljust" | "rjust" | "center" => {
            let a = bind(name, args, kwargs, &["width", "fillchar"], 1)?;
            let w = width_of(a[0].as_ref().unwrap())?;
            let fill = fill_char(&a[1])?;
            let n = char_len(s);
            if n >= w {
                Obj::str(s)
            } else {
                let marg = w - n;
                let left = match name {
                    "ljust" => 0,
                    "rjust" => marg,
                    _ => marg / 2 + (marg & w & 1),
                };
                let mut out = String::with_capacity(w);
                out.extend(std::iter::repeat_n(fill, left));
                out.push_str(s);
                out.extend(std::iter::repeat_n(fill, marg - left));
                Obj::str(out)
            }
        }
        "partition" => {
            let a = bind(name, args, kwargs, &["sep"], 1)?;
            let sep = must_str(a[0].as_ref().unwrap(), "")
                .or_else(|_| type_error(format!("must be str, not {}", a[0].as_ref().unwrap().type_name())))?;
            if sep.is_empty() {
                return exc("ValueError", "empty separator");
            }
            let parts = match s.find(sep) {
                Some(b) => [&s[..b], sep, &s[b + sep.len()..]],
                None => [s, "", ""],
            };
            Obj::tuple(parts.iter().map(|p| Obj::str(*p)).collect())
        }
        "removeprefix" | "removesuffix" => {
            let a = bind(name, args, kwargs, &["affix"], 1)?;
            let p = must_str(a[0].as_ref().unwrap(), "")
                .or_else(|_| type_error(format!("{name}() argument must be str, not {}", a[0].as_ref().unwrap().type_name())))?;
            let out = if name == "removeprefix" {
                s.strip_prefix(p)
            } else {
                s.strip_suffix(p)
            };
            Obj::str(out.unwrap_or(s))
        }
        "splitlines" => {
            let a = bind(name, args, kwargs, &["keepends"], 0)?;
            let keep = a[0].as_ref().is_some_and(Obj::truthy);
            str_list(split_lines(s, keep))
        }
        other => {
            return exc(
                "AttributeError",
                format!("'str' object has no attribute '{other}'"),
            )
        }
    })
}

// ------------------------------------------------------------ list and tuple

fn eq_or_same(a: &Obj, b: &Obj) -> EResult<bool> {
    Ok(ops::is_same(a, b) || ops::py_eq(a, b)?)
}

/// `index` and `count`, shared by lists and tuples.
fn seq_search(
    ty: &str,
    items: &[Obj],
    name: &str,
    args: Vec<Obj>,
    kwargs: Vec<(String, Obj)>,
) -> EResult<Obj> {
    match name {
        "count" => {
            if !kwargs.is_empty() {
                return type_error("count() takes no keyword arguments");
            }
            let a = bind(name, args, kwargs, &["value"], 1)?;
            let x = a[0].as_ref().unwrap();
            let mut n = 0;
            for y in items {
                if eq_or_same(y, x)? {
                    n += 1;
                }
            }
            Ok(Obj::small(n))
        }
        "index" => {
            if !kwargs.is_empty() {
                return type_error("index() takes no keyword arguments");
            }
            let a = bind(name, args, kwargs, &["value", "start", "stop"], 1)?;
            let x = a[0].as_ref().unwrap();
            if let Some((lo, hi)) = search_bounds(items.len(), opt_index(&a[1])?, opt_index(&a[2])?) {
                for (i, y) in items.iter().enumerate().take(hi).skip(lo) {
                    if eq_or_same(y, x)? {
                        return Ok(Obj::small(i as i64));
                    }
                }
            }
            if ty == "list" {
                exc("ValueError", format!("{} is not in list", x.repr()))
            } else {
                exc("ValueError", "tuple.index(x): x not in tuple")
            }
        }
        other => exc(
            "AttributeError",
            format!("'{ty}' object has no attribute '{other}'"),
        ),
    }
}

fn list_method(
    it: &mut Interp,
    l: &Shared<Vec<Obj>>,
    name: &str,
    args: Vec<Obj>,
    kwargs: Vec<(String, Obj)>,
) -> RResult<Obj> {
    Ok(match name {
        "append" => {
            let a = bind(name, args, kwargs, &["object"], 1)?;
            let mut l = l.borrow_mut();
            if l.len() >= MAX_ELEMENTS {
                return raise("MemoryError", "");
            }
            l.push(a.into_iter().next().unwrap().unwrap());
            Obj::None
        }
        "extend" => {
            let a = bind(name, args, kwargs, &["iterable"], 1)?;
            let items = it.collect(a[0].as_ref().unwrap())?;
            let mut l = l.borrow_mut();
            if l.len() + items.len() > MAX_ELEMENTS {
                return raise("MemoryError", "");
            }
            l.extend(items);
            Obj::None
        }
        "pop" => {
            let a = bind(name, args, kwargs, &["index"], 0)?;
            let mut l = l.borrow_mut();
            if l.is_empty() {
                return raise("IndexError", "pop from empty list");
            }
            let i = match &a[0] {
                None => BigInt::from(-1),
                Some(o) => to_index(o)?,
            };
            match super::exec::seq_index(&i, l.len()) {
                Some(i) => l.remove(i),
                None => return raise("IndexError", "pop index out of range"),
            }
        }
        "insert" => {
            let a = bind(name, args, kwargs, &["index", "object"], 2)?;
            let i = clamp_i64(&to_index(a[0].as_ref().unwrap())?);
            let mut l = l.borrow_mut();
            if l.len() >= MAX_ELEMENTS {
                return raise("MemoryError", "");
            }
            let n = l.len() as i64;
            let at = if i < 0 { (i + n).max(0) } else { i.min(n) };
            l.insert(at as usize, a[1].clone().unwrap());
            Obj::None
        }
        "remove" => {
            let a = bind(name, args, kwargs, &["value"], 1)?;
            let x = a[0].as_ref().unwrap();
            let snapshot = l.borrow().clone();
            for (i, y) in snapshot.iter().enumerate() {
                if eq_or_same(y, x)? {
                    let mut l = l.borrow_mut();
                    if i < l.len() {
                        l.remove(i);
                    }
                    return Ok(Obj::None);
                }
            }
            return raise("ValueError", "list.remove(x): x not in list");
        }
        "sort" => {
            if !args.is_empty() {
                return raise("TypeError", "sort() takes no positional arguments");
            }
            let a = bind(name, args, kwargs, &["key", "reverse"], 0)?;
            let key = a[0].clone().filter(|k| !matches!(k, Obj::None));
            let reverse = a[1].as_ref().is_some_and(Obj::truthy);
            let items = std::mem::take(&mut *l.borrow_mut());
            match sort_objs(it, items.clone(), key, reverse) {
                Ok(sorted) => *l.borrow_mut() = sorted,
                Err(e) => {
                    *l.borrow_mut() = items;
                    return Err(e);
                }
            }
            Obj::None
        }
        "reverse" => {
            no_args(name, &args, &kwargs)?;
            l.borrow_mut().reverse();
            Obj::None
        }
        "copy" => {
            no_args(name, &args, &kwargs)?;
            Obj::list(l.borrow().clone())
        }
        "clear" => {
            no_args(name, &args, &kwargs)?;
            // Drop outside the borrow: elements may refer back to this list.
            let old = std::mem::take(&mut *l.borrow_mut());
            drop(old);
            Obj::None
        }
        "index" | "count" => {
            let items = l.borrow().clone();
            seq_search("list", &items, name, args, kwargs)?
        }
        other => {
            return raise(
                "AttributeError",
                format!("'list' object has no attribute '{other}'"),
            )
        }
    })
}

// ------------------------------------------------------------ set

fn set_method(
    it: &mut Interp,
    s: &Shared<PySet>,
    name: &str,
    args: Vec<Obj>,
    kwargs: Vec<(String, Obj)>,
) -> RResult<Obj> {
    let multi = |name: &str, kwargs: &[(String, Obj)]| -> EResult<()> {
        if kwargs.is_empty() {
            Ok(())
        } else {
            type_error(format!("{name}() takes no keyword arguments"))
        }
    };
    Ok(match name {
        "add" => {
            let a = bind(name, args, kwargs, &["object"], 1)?;
            let x = a[0].clone().unwrap();
            let k = hash_of(&x)?;
            let mut s = s.borrow_mut();
            if s.map.len() >= MAX_ELEMENTS {
                return raise("MemoryError", "");
            }
            s.map.entry(k).or_insert(x);
            Obj::None
        }
        "remove" | "discard" => {
            let a = bind(name, args, kwargs, &["object"], 1)?;
            let x = a[0].as_ref().unwrap();
            let k = hash_of(x)?;
            let gone = s.borrow_mut().map.shift_remove(&k);
            if gone.is_none() && name == "remove" {
                return raise("KeyError", x.repr());
            }
            Obj::None
        }
        "union" | "intersection" | "difference" | "symmetric_difference" => {
            multi(name, &kwargs)?;
            if name == "symmetric_difference" && args.len() != 1 {
                return raise(
                    "TypeError",
                    format!(
                        "set.symmetric_difference() takes exactly one argument ({} given)",
                        args.len()
                    ),
                );
            }
            let op = match name {
                "union" => BinOp::BitOr,
                "intersection" => BinOp::BitAnd,
                "difference" => BinOp::Sub,
                _ => BinOp::BitXor,
            };
            let mut acc = s.borrow().clone();
            for o in &args {
                let other = set_of(it, o)?;
                acc = ops::set_algebra(op, &acc, &other);
            }
            Obj::Set(shared(acc))
        }
        "update" => {
            multi(name, &kwargs)?;
            for o in &args {
                let other = set_of(it, o)?;
                let mut s = s.borrow_mut();
                for (k, v) in other.map {
                    s.map.entry(k).or_insert(v);
                }
                if s.map.len() > MAX_ELEMENTS {
                    return raise("MemoryError", "");
                }
            }
            Obj::None
        }
        "issubset" | "issuperset" | "isdisjoint" => {
            let a = bind(name, args, kwargs, &["other"], 1)?;
            let other = set_of(it, a[0].as_ref().unwrap())?;
            let me = s.borrow();
            Obj::Bool(match name {
                "issubset" => me.map.keys().all(|k| other.map.contains_key(k)),
                "issuperset" => other.map.keys().all(|k| me.map.contains_key(k)),
                _ => !me.map.keys().any(|k| other.map.contains_key(k)),
            })
        }
        "pop" => {
            no_args(name, &args, &kwargs)?;
            let first = set_sorted(&s.borrow()).into_iter().next();
            match first {
                Some(x) => {
                    let k = hash_of(&x)?;
                    s.borrow_mut().map.shift_remove(&k);
                    x
                }
                None => return raise("KeyError", "'pop from an empty set'"),
            }
        }
        "copy" => {
            no_args(name, &args, &kwargs)?;
            Obj::Set(shared(s.borrow().clone()))
        }
        "clear" => {
            no_args(name, &args, &kwargs)?;
            let old = std::mem::take(&mut *s.borrow_mut());
            drop(old);
            Obj::None
        }
        other => {
            return raise(
                "AttributeError",
                format!("'set' object has no attribute '{other}'"),
            )
        }
    })
}

// ------------------------------------------------------------ dict

/// `d.update(src)` for a mapping or an iterable of pairs.
pub(crate) fn dict_update(it: &mut Interp, d: &Shared<PyDict>, src: &Obj) -> RResult<()> {
    if let Obj::Dict(other) = src {
        let pairs: Vec<(Obj, Obj)> = other.borrow().map.values().cloned().collect();
        let mut d = d.borrow_mut();
        for (k, v) in pairs {
            dict_insert(&mut d, k, v)?;
        }
        return Ok(());
    }
    let items = it.collect(src)?;
    for (i, elem) in items.iter().enumerate() {
        let pair = match elem {
            e if is_iterable(e) => it.collect(e)?,
            _ => {
                return raise(
                    "TypeError",
                    format!("cannot convert dictionary update sequence element #{i} to a sequence"),
                )
            }
        };
        if pair.len() != 2 {
            return raise(
                "ValueError",
                format!(
                    "dictionary update sequence element #{i} has length {}; 2 is required",
                    pair.len()
                ),
            );
        }
        let mut pair = pair.into_iter();
        let (k, v) = (pair.next().unwrap(), pair.next().unwrap());
        dict_insert(&mut d.borrow_mut(), k, v)?;
    }
    Ok(())
}

fn dict_method(
    it: &mut Interp,
    d: &Shared<PyDict>,
    name: &str,
    args: Vec<Obj>,
    kwargs: Vec<(String, Obj)>,
) -> RResult<Obj> {
    Ok(match name {
        "get" => {
            if !kwargs.is_empty() {
                return raise("TypeError", "get() takes no keyword arguments");
            }
            let a = bind(name, args, kwargs, &["key", "default"], 1)?;
            let k = hash_of(a[0].as_ref().unwrap())?;
            let found = d.borrow().map.get(&k).map(|(_, v)| v.clone());
            found.unwrap_or_else(|| a[1].clone().unwrap_or(Obj::None))
        }
        "keys" | "values" | "items" => {
            no_args(name, &args, &kwargs)?;
            let kind = match name {
                "keys" => ViewKind::Keys,
                "values" => ViewKind::Values,
                _ => ViewKind::Items,
            };
            Obj::View(d.clone(), kind)
        }
        "pop" => {
            if !kwargs.is_empty() {
                return raise("TypeError", "pop() takes no keyword arguments");
            }
            let a = bind(name, args, kwargs, &["key", "default"], 1)?;
            let key = a[0].as_ref().unwrap();
            let k = hash_of(key)?;
            let gone = d.borrow_mut().map.shift_remove(&k);
            match (gone, &a[1]) {
                (Some((_, v)), _) => v,
                (None, Some(dflt)) => dflt.clone(),
                (None, None) => return raise("KeyError", key.repr()),
            }
        }
        "update" => {
            if args.len() > 1 {
                return raise(
                    "TypeError",
                    format!("update expected at most 1 argument, got {}", args.len()),
                );
            }
            if let Some(src) = args.first() {
                dict_update(it, d, src)?;
            }
            for (k, v) in kwargs {
                dict_insert(&mut d.borrow_mut(), Obj::str(k), v)?;
            }
            Obj::None
        }
        "setdefault" => {
            if !kwargs.is_empty() {
                return raise("TypeError", "setdefault() takes no keyword arguments");
            }
            let a = bind(name, args, kwargs, &["key", "default"], 1)?;
            let key = a[0].clone().unwrap();
            let k = hash_of(&key)?;
            let mut d = d.borrow_mut();
            if let Some((_, v)) = d.map.get(&k) {
                v.clone()
            } else {
                let v = a[1].clone().unwrap_or(Obj::None);
                d.map.insert(k, (key, v.clone()));
                v
            }
        }
        "copy" => {
            no_args(name, &args, &kwargs)?;
            Obj::Dict(shared(d.borrow().clone()))
        }
        "clear" => {
            no_args(name, &args, &kwargs)?;
            let old = std::mem::take(&mut *d.borrow_mut());
            drop(old);
            Obj::None
        }
        "popitem" => {
            no_args(name, &args, &kwargs)?;
            let last = d.borrow_mut().map.pop();
            match last {
                Some((_, (k, v))) => Obj::tuple(vec![k, v]),
                None => return raise("KeyError", "'popitem(): dictionary is empty'"),
            }
        }
        other => {
            return raise(
                "AttributeError",
                format!("'dict' object has no attribute '{other}'"),
            )
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::constraints::METHOD_TABLE;

    fn s(x: &str) -> Obj {
        Obj::str(x)
    }

    fn call_str(recv: &str, name: &str, args: Vec<Obj>) -> String {
        let Obj::Str(r) = s(recv) else { unreachable!() };
        str_method(&r, name, args, Vec::new()).unwrap().repr()
    }

    #[test]
    fn every_table_method_resolves() {
        let samples = [
            s("x"),
            Obj::list(vec![]),
            Obj::Set(shared(PySet::default())),
            Obj::Dict(shared(PyDict::default())),
            Obj::tuple(vec![]),
        ];
        for (ty, methods) in METHOD_TABLE {
            let recv = samples.iter().find(|o| o.type_name() == *ty).unwrap();
            for m in *methods {
                assert_eq!(resolve(recv, m).unwrap(), *m);
            }
        }
        let e = resolve(&s("x"), "nope").unwrap_err();
        assert_eq!(e.msg, "'str' object has no attribute 'nope'");
    }

    #[test]
    fn string_methods_match_reference() {
        assert_eq!(call_str("  a b  c ", "split", vec![Obj::None, Obj::small(1)]), "['a', 'b  c ']");
        assert_eq!(call_str("  a b  c ", "rsplit", vec![Obj::None, Obj::small(1)]), "['  a b', 'c']");
        assert_eq!(call_str("a,b,,c", "split", vec![s(",")]), "['a', 'b', '', 'c']");
        assert_eq!(call_str("aaa", "rsplit", vec![s("aa")]), "['a', '']");
        assert_eq!(call_str("xxhixx", "strip", vec![s("x")]), "'hi'");
        assert_eq!(call_str("hello world", "title", vec![]), "'Hello World'");
        assert_eq!(call_str("they're", "title", vec![]), "\"They'Re\"");
        assert_eq!(call_str("-42", "zfill", vec![Obj::small(5)]), "'-0042'");
        assert_eq!(call_str("ab", "center", vec![Obj::small(5), s("*")]), "'**ab*'");
        assert_eq!(call_str("abc", "center", vec![Obj::small(6)]), "' abc  '");
        assert_eq!(call_str("abcabc", "rfind", vec![s("b")]), "4");
        assert_eq!(call_str("abc", "find", vec![s(""), Obj::small(5)]), "-1");
        assert_eq!(call_str("abc", "count", vec![s("")]), "4");
        assert_eq!(call_str("a\r\nb\nc", "splitlines", vec![]), "['a', 'b', 'c']");
        assert_eq!(call_str("abc", "replace", vec![s(""), s("-"), Obj::small(2)]), "'-a-bc'");
        assert_eq!(call_str("héllo", "find", vec![s("l")]), "2");
        assert_eq!(call_str("Ab1", "isalnum", vec![]), "True");
        assert_eq!(call_str("", "isalpha", vec![]), "False");
        assert_eq!(call_str("ABC1", "isupper", vec![]), "True");
        assert_eq!(call_str("a-b", "partition", vec![s("-")]), "('a', '-', 'b')");
    }
}
