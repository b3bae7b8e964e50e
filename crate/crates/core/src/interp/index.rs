//! Subscripting and slicing.

use std::rc::Rc;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use super::exec::{dict_insert, hash_of, seq_index};
use super::obj::{Obj, RangeObj};
use super::ops::{exc, type_error, EResult};

/// Resolved slice: start, step and element count.
struct Span {
    start: i64,
    step: i64,
    count: usize,
}

impl Span {
    fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.count).map(move |i| (self.start + self.step * i as i64) as usize)
    }
}

fn clamp(n: &BigInt) -> i64 {
    n.to_i64()
        .unwrap_or(if n.is_negative() { i64::MIN / 4 } else { i64::MAX / 4 })
}

fn adjust(len: usize, lo: Option<BigInt>, hi: Option<BigInt>, st: Option<BigInt>) -> EResult<Span> {
    let len = len as i64;
    let step = match st {
        Some(s) if s.is_zero() => return exc("ValueError", "slice step cannot be zero"),
        Some(s) => clamp(&s),
        None => 1,
    };
    let bound = |v: Option<BigInt>, default_pos: i64, default_neg: i64| -> i64 {
        match v {
            None => {
                if step < 0 {
                    default_neg
                } else {
                    default_pos
                }
            }
            Some(v) => {
                let mut x = clamp(&v);
                if x < 0 {
                    x += len;
                    if x < 0 {
                        x = if step < 0 { -1 } else { 0 };
                    }
                } else if x >= len {
                    x = if step < 0 { len - 1 } else { len };
                }
                x
            }
        }
    };
    let start = bound(lo, 0, len - 1);
    let stop = bound(hi, len, -1);
    let count = if step < 0 {
        if stop < start {
            (start - stop - 1) / (-step) + 1
        } else {
            0
        }
    } else if start < stop {
        (stop - start - 1) / step + 1
    } else {
        0
    };
    Ok(Span {
        start,
        step,
        count: count as usize,
    })
}

pub(crate) fn get_slice(
    c: &Obj,
    lo: Option<BigInt>,
    hi: Option<BigInt>,
    st: Option<BigInt>,
) -> EResult<Obj> {
    match c {
        Obj::List(l) => {
            let l = l.borrow();
            let sp = adjust(l.len(), lo, hi, st)?;
            Ok(Obj::list(sp.indices().map(|i| l[i].clone()).collect()))
        }
        Obj::Tuple(t) => {
            let sp = adjust(t.len(), lo, hi, st)?;
            if sp.start == 0 && sp.step == 1 && sp.count == t.len() {
                return Ok(c.clone());
            }
            Ok(Obj::tuple(sp.indices().map(|i| t[i].clone()).collect()))
        }
        Obj::Str(s) => {
            if s.is_ascii() {
                let b = s.as_bytes();
                let sp = adjust(b.len(), lo, hi, st)?;
                let out: String = sp.indices().map(|i| b[i] as char).collect();
                Ok(Obj::str(out))
            } else {
                let chars: Vec<char> = s.chars().collect();
                let sp = adjust(chars.len(), lo, hi, st)?;
                let out: String = sp.indices().map(|i| chars[i]).collect();
                Ok(Obj::str(out))
            }
        }
        Obj::Range(r) => {
            let len = r.len().to_usize().unwrap_or(usize::MAX / 8);
            let sp = adjust(len, lo, hi, st)?;
            let start = r.get(&BigInt::from(sp.start));
            let step = &r.step * BigInt::from(sp.step);
            let stop = &start + &step * BigInt::from(sp.count);
            Ok(Obj::Range(Rc::new(RangeObj { start, stop, step })))
        }
        other => type_error(format!("'{}' object is not subscriptable", other.type_name())),
    }
}

fn index_of(kind: &str, k: &Obj) -> EResult<BigInt> {
    match k.as_index() {
        Some(i) => Ok(i),
        None if kind == "str" => type_error("string indices must be integers"),
        None => type_error(format!(
            "{kind} indices must be integers or slices, not {}",
            k.type_name()
        )),
    }
}

pub(crate) fn get_item(c: &Obj, k: &Obj) -> EResult<Obj> {
    match c {
        Obj::List(l) => {
            let i = index_of("list", k)?;
            let l = l.borrow();
            match seq_index(&i, l.len()) {
                Some(i) => Ok(l[i].clone()),
                None => exc("IndexError", "list index out of range"),
            }
        }
        Obj::Tuple(t) => {
            let i = index_of("tuple", k)?;
            match seq_index(&i, t.len()) {
                Some(i) => Ok(t[i].clone()),
                None => exc("IndexError", "tuple index out of range"),
            }
        }
        Obj::Str(s) => {
            let i = index_of("str", k)?;
            let ch = if s.is_ascii() {
                seq_index(&i, s.len()).map(|i| (s.as_bytes()[i] as char).to_string())
            } else {
                let n = s.chars().count();
                seq_index(&i, n).and_then(|i| s.chars().nth(i)).map(|c| c.to_string())
            };
            match ch {
                Some(c) => Ok(Obj::str(c)),
                None => exc("IndexError", "string index out of range"),
            }
        }
        Obj::Range(r) => {
            let i = index_of("range", k)?;
            let len = r.len();
            let i = if i.is_negative() { i + &len } else { i };
            if i.is_negative() || i >= len {
                return exc("IndexError", "range object index out of range");
            }
            Ok(Obj::int(r.get(&i)))
        }
        Obj::Dict(d) => {
            let h = hash_of(k)?;
            match d.borrow().map.get(&h) {
                Some((_, v)) => Ok(v.clone()),
                None => exc("KeyError", k.repr()),
            }
        }
        other => type_error(format!("'{}' object is not subscriptable", other.type_name())),
    }
}

pub(crate) fn set_item(c: &Obj, k: &Obj, v: Obj) -> EResult<()> {
    match c {
        Obj::List(l) => {
            let i = index_of("list", k)?;
            let mut l = l.borrow_mut();
            match seq_index(&i, l.len()) {
                Some(i) => {
                    l[i] = v;
                    Ok(())
                }
                None => exc("IndexError", "list assignment index out of range"),
            }
        }
        Obj::Dict(d) => dict_insert(&mut d.borrow_mut(), k.clone(), v),
        other => type_error(format!(
            "'{}' object does not support item assignment",
            other.type_name()
        )),
    }
}

pub(crate) fn del_item(c: &Obj, k: &Obj) -> EResult<()> {
    match c {
        Obj::List(l) => {
            let i = index_of("list", k)?;
            let mut l = l.borrow_mut();
            match seq_index(&i, l.len()) {
                Some(i) => {
                    l.remove(i);
                    Ok(())
                }
                None => exc("IndexError", "list assignment index out of range"),
            }
        }
        Obj::Dict(d) => {
            let h = hash_of(k)?;
            match d.borrow_mut().map.shift_remove(&h) {
                Some(_) => Ok(()),
                None => exc("KeyError", k.repr()),
            }
        }
        other => type_error(format!(
            "'{}' object doesn't support item deletion",
            other.type_name()
        )),
    }
}

pub(crate) fn set_slice(
    c: &Obj,
    lo: Option<BigInt>,
    hi: Option<BigInt>,
    st: Option<BigInt>,
    items: Vec<Obj>,
) -> EResult<()> {
    let Obj::List(l) = c else {
        return type_error(format!(
            "'{}' object does not support item assignment",
            c.type_name()
        ));
    };
    let mut l = l.borrow_mut();
    let plain = st.as_ref().is_none_or(|s| *s == BigInt::from(1));
    let sp = adjust(l.len(), lo, hi, st)?;
    if plain {
        let start = sp.start as usize;
        let end = start + sp.count;
        l.splice(start..end, items);
        return Ok(());
    }
    if items.len() != sp.count {
        return exc(
            "ValueError",
            format!(
                "attempt to assign sequence of size {} to extended slice of size {}",
                items.len(),
                sp.count
            ),
        );
    }
    let idx: Vec<usize> = sp.indices().collect();
    for (i, v) in idx.into_iter().zip(items) {
        l[i] = v;
    }
    Ok(())
}

pub(crate) fn del_slice(
    c: &Obj,
    lo: Option<BigInt>,
    hi: Option<BigInt>,
    st: Option<BigInt>,
) -> EResult<()> {
    let Obj::List(l) = c else {
        return type_error(format!(
            "'{}' object does not support item deletion",
            c.type_name()
        ));
    };
    let mut l = l.borrow_mut();
    let sp = adjust(l.len(), lo, hi, st)?;
    let mut kill: Vec<usize> = sp.indices().collect();
    kill.sort_unstable();
    let mut k = kill.into_iter().peekable();
    let mut i = 0usize;
    l.retain(|_| {
        let drop = k.peek() == Some(&i);
        if drop {
            k.next();
        }
        i += 1;
        !drop
    });
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(v: &[i64]) -> Obj {
        Obj::list(v.iter().map(|&i| Obj::small(i)).collect())
    }

    fn b(i: i64) -> Option<BigInt> {
        Some(BigInt::from(i))
    }

    #[test]
    fn slices_match_reference_rules() {
        let l = ints(&[0, 1, 2, 3, 4]);
        assert_eq!(get_slice(&l, b(1), b(3), None).unwrap().repr(), "[1, 2]");
        assert_eq!(get_slice(&l, None, None, b(-1)).unwrap().repr(), "[4, 3, 2, 1, 0]");
        assert_eq!(get_slice(&l, b(-2), None, None).unwrap().repr(), "[3, 4]");
        assert_eq!(get_slice(&l, b(10), b(-10), b(-2)).unwrap().repr(), "[4, 2, 0]");
        assert_eq!(get_slice(&l, b(3), b(1), None).unwrap().repr(), "[]");
        assert!(get_slice(&l, None, None, b(0)).is_err());
        let s = Obj::str("héllo");
        assert_eq!(get_slice(&s, b(1), b(3), None).unwrap().repr(), "'él'");
        let r = Obj::Range(Rc::new(RangeObj {
            start: 0.into(),
            stop: 10.into(),
            step: 1.into(),
        }));
        assert_eq!(get_slice(&r, None, None, b(2)).unwrap().repr(), "range(0, 10, 2)");
        assert_eq!(get_slice(&r, None, None, b(-1)).unwrap().repr(), "range(9, -1, -1)");
    }

    #[test]
    fn slice_assignment_and_deletion() {
        let l = ints(&[0, 1, 2, 3, 4]);
        set_slice(&l, b(1), b(3), None, vec![Obj::small(9)]).unwrap();
        assert_eq!(l.repr(), "[0, 9, 3, 4]");
        del_slice(&l, None, None, b(2)).unwrap();
        assert_eq!(l.repr(), "[9, 4]");
        assert!(set_slice(&l, None, None, b(2), vec![]).is_err());
    }

    #[test]
    fn item_errors() {
        let l = ints(&[1]);
        assert_eq!(get_item(&l, &Obj::small(-1)).unwrap().repr(), "1");
        let e = get_item(&l, &Obj::small(1)).unwrap_err();
        assert_eq!((e.kind, e.msg.as_str()), ("IndexError", "list index out of range"));
        let e = get_item(&l, &Obj::str("a")).unwrap_err();
        assert_eq!(e.msg, "list indices must be integers or slices, not str");
        let e = get_item(&Obj::small(1), &Obj::small(0)).unwrap_err();
        assert_eq!(e.msg, "'int' object is not subscriptable");
    }
}
