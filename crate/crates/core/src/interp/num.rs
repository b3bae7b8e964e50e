//! Numeric helpers with reference-language rounding semantics.

use std::cmp::Ordering;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Multiply by 2^e without intermediate overflow.
pub fn ldexp(mut x: f64, mut e: i64) -> f64 {
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
        if x.is_infinite() {
            return x;
        }
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
        if x == 0.0 {
            return x;
        }
    }
    x * 2f64.powi(e as i32)
}

/// Correctly rounded (half-even) conversion; `None` on overflow.
pub fn big_to_f64(n: &BigInt) -> Option<f64> {
    let neg = n.sign() == Sign::Minus;
    let mag = n.magnitude();
    let bits = mag.bits();
    let v = if bits <= 53 {
        mag.to_u64().unwrap() as f64
    } else {
        let shift = bits - 54;
        let top = (mag >> shift).to_u64().unwrap();
        let sticky = mag.trailing_zeros().map(|tz| tz < shift).unwrap_or(false);
        let mut m = top >> 1;
        let round = top & 1 == 1;
        if round && (sticky || m & 1 == 1) {
            m += 1;
        }
        let r = ldexp(m as f64, shift as i64 + 1);
        if r.is_infinite() {
            return None;
        }
        r
    };
    Some(if neg { -v } else { v })
}

/// Exact `a / b` rounded to the nearest float. `b` must be non-zero.
pub fn int_true_div(a: &BigInt, b: &BigInt) -> Option<f64> {
    if a.is_zero() {
        return Some(if b.is_negative() { -0.0 } else { 0.0 });
    }
    let neg = a.is_negative() != b.is_negative();
    let (a, b) = (a.magnitude(), b.magnitude());
    if a.bits() <= 53 && b.bits() <= 53 {
        let q = a.to_u64().unwrap() as f64 / b.to_u64().unwrap() as f64;
        return Some(if neg { -q } else { q });
    }
    // Scale so the quotient carries at least 56 significant bits, then fold
    // the remainder into a sticky bit.
    let shift = 56 + b.bits() as i64 - a.bits() as i64;
    let (num, den) = if shift >= 0 {
        (a << shift as u64, b.clone())
    } else {
        (a.clone(), b << (-shift) as u64)
    };
    let (q, r) = num.div_rem(&den);
    let q = (q << 1u32) + if r.is_zero() { 0u32 } else { 1u32 };
    let f = big_to_f64(&BigInt::from(q))?;
    let v = ldexp(f, -shift - 1);
    if v.is_infinite() {
        return None;
    }
    Some(if neg { -v } else { v })
}

/// Compare an integer with a float exactly. `None` when `f` is NaN.
pub fn cmp_int_float(n: &BigInt, f: f64) -> Option<Ordering> {
    if f.is_nan() {
        return None;
    }
    if f.is_infinite() {
        return Some(if f > 0.0 { Ordering::Less } else { Ordering::Greater });
    }
    let fl = f.floor();
    let fi = float_to_big(fl).expect("finite");
    Some(match n.cmp(&fi) {
        Ordering::Equal if fl == f => Ordering::Equal,
        Ordering::Equal => Ordering::Less,
        o => o,
    })
}

/// Exact integer value of an integral finite float.
pub fn float_to_big(f: f64) -> Option<BigInt> {
    if !f.is_finite() {
        return None;
    }
    let f = f.trunc();
    if f.abs() < 9.0e15 {
        return Some(BigInt::from(f as i64));
    }
    let bits = f.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64 - 1075;
    let mant = (bits & ((1u64 << 52) - 1)) | (1u64 << 52);
    let m = BigInt::from(mant);
    let v = if exp >= 0 { m << exp as u64 } else { m >> (-exp) as u64 };
    Some(if f < 0.0 { -v } else { v })
}

/// Exact rational decomposition: `f = num * 2^exp`.
pub fn float_parts(f: f64) -> (BigInt, i64) {
    let bits = f.to_bits();
    let raw_exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, exp) = if raw_exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), raw_exp - 1075)
    };
    let m = BigInt::from(mant);
    (if f.is_sign_negative() { -m } else { m }, exp)
}

/// Round `n / d` (d > 0) to an integer, ties to even.
pub fn div_round_half_even(n: &BigInt, d: &BigInt) -> BigInt {
    let (q, r) = n.div_mod_floor(d);
    let twice: BigInt = &r * BigInt::from(2);
    match twice.cmp(d) {
        Ordering::Less => q,
        Ordering::Greater => q + 1,
        Ordering::Equal => {
            if q.is_odd() {
                q + 1
            } else {
                q
            }
        }
    }
}

/// `round(x, ndigits)` for floats: exact decimal rounding, nearest float result.
pub fn round_float(x: f64, ndigits: i64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    if ndigits > 330 {
        return x;
    }
    if ndigits < -330 {
        return 0.0 * x;
    }
    let (m, e) = float_parts(x);
    let ten = BigInt::from(10);
    // value * 10^nd = m * 2^e * 10^nd  ->  N / D
    let (mut num, mut den) = (m, BigInt::one());
    if e >= 0 {
        num <<= e as u64;
    } else {
        den <<= (-e) as u64;
    }
    if ndigits >= 0 {
        num *= num_traits::pow(ten.clone(), ndigits as usize);
    } else {
        den *= num_traits::pow(ten.clone(), (-ndigits) as usize);
    }
    let k = div_round_half_even(&num, &den);
    let r = if ndigits >= 0 {
        int_true_div(&k, &num_traits::pow(ten, ndigits as usize))
    } else {
        big_to_f64(&(k * num_traits::pow(ten, (-ndigits) as usize)))
    };
    match r {
        Some(v) if v == 0.0 && x < 0.0 => -0.0,
        Some(v) => v,
        None => x.signum() * f64::INFINITY,
    }
}

/// CPython's float floor division and modulo.
pub fn float_divmod(vx: f64, wx: f64) -> (f64, f64) {
    let mut m = vx % wx;
    let mut div = (vx - m) / wx;
    if m != 0.0 {
        if (wx < 0.0) != (m < 0.0) {
            m += wx;
            div -= 1.0;
        }
    } else {
        m = 0f64.copysign(wx);
    }
    let floordiv = if div != 0.0 {
        let mut f = div.floor();
        if div - f > 0.5 {
            f += 1.0;
        }
        f
    } else {
        0f64.copysign(vx / wx)
    };
    (floordiv, m)
}

/// Round half to even at integer precision.
pub fn round_half_even(x: f64) -> f64 {
    let r = x.round();
    if (r - x).abs() == 0.5 {
        2.0 * (x / 2.0).round()
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversion_rounds_half_even() {
        let two53 = BigInt::from(1u64 << 53);
        assert_eq!(big_to_f64(&(&two53 + 1)), Some(9007199254740992.0));
        assert_eq!(big_to_f64(&(&two53 + 3)), Some(9007199254740996.0));
        let huge = BigInt::from(10).pow(400);
        assert_eq!(big_to_f64(&huge), None);
        assert_eq!(big_to_f64(&BigInt::from(-5)), Some(-5.0));
    }

    #[test]
    fn true_division() {
        let a = BigInt::from(10).pow(30);
        let b = BigInt::from(3);
        assert_eq!(int_true_div(&a, &b), Some(3.333333333333333e29));
        assert_eq!(int_true_div(&BigInt::from(1), &BigInt::from(3)), Some(1.0 / 3.0));
        assert_eq!(int_true_div(&BigInt::from(-7), &BigInt::from(2)), Some(-3.5));
    }

    #[test]
    fn int_float_comparison() {
        assert_eq!(cmp_int_float(&BigInt::from(1), 1.0), Some(Ordering::Equal));
        assert_eq!(cmp_int_float(&BigInt::from(1), 1.5), Some(Ordering::Less));
        assert_eq!(cmp_int_float(&BigInt::from(-2), -1.5), Some(Ordering::Less));
        assert_eq!(cmp_int_float(&BigInt::from(2), f64::NAN), None);
        let big = BigInt::from(1u64 << 53) + 1;
        assert_eq!(cmp_int_float(&big, 9007199254740992.0), Some(Ordering::Greater));
    }

    #[test]
    fn rounding() {
        assert_eq!(round_float(2.675, 2), 2.67);
        assert_eq!(round_float(0.125, 2), 0.12);
        assert_eq!(round_float(0.375, 2), 0.38);
        assert_eq!(round_float(1234.5, -2), 1200.0);
        assert_eq!(round_float(-0.4, 0), -0.0);
        assert_eq!(round_half_even(2.5), 2.0);
        assert_eq!(round_half_even(3.5), 4.0);
        assert_eq!(round_half_even(-0.5), -0.0);
    }

    #[test]
    fn float_floor_division() {
        assert_eq!(float_divmod(7.0, 2.0), (3.0, 1.0));
        assert_eq!(float_divmod(-7.0, 2.0), (-4.0, 1.0));
        assert_eq!(float_divmod(7.0, -2.0), (-4.0, -1.0));
    }
}
