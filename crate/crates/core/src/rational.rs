//! Exact rational helpers: parsing, the `"num/den"` wire form, logarithms of
//! big rationals, and rational bounds on square roots.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseRationalError {
    #[error("empty rational literal")]
    Empty,
    #[error("malformed rational literal `{0}`")]
    Malformed(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
}

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses `"a/b"`, `"a"` or a finite decimal such as `"-0.125"`.
pub fn parse_rational(text: &str) -> Result<Rational, ParseRationalError> {
    let s = text.trim();
    if s.is_empty() {
        return Err(ParseRationalError::Empty);
    }
    let bad = || ParseRationalError::Malformed(s.to_string());
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(ParseRationalError::ZeroDenominator(s.to_string()));
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        let negative = whole.starts_with('-');
        let whole_digits = whole.trim_start_matches(['-', '+']);
        if frac.is_empty() && whole_digits.is_empty() {
            return Err(bad());
        }
        if !whole_digits.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let digits = format!("{whole_digits}{frac}");
        let mut num: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().map_err(|_| bad())? };
        if negative {
            num = -num;
        }
        let den = BigInt::from(10u32).pow(frac.len() as u32);
        return Ok(Rational::new(num, den));
    }
    let n: BigInt = s.parse().map_err(|_| bad())?;
    Ok(Rational::from_integer(n))
}

/// Lowest-terms `"num/den"` with a positive denominator; integers keep `/1`.
pub fn format_rational(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// Natural log of a positive big integer, robust beyond the f64 range.
pub fn ln_bigint(n: &BigInt) -> f64 {
    debug_assert!(n.sign() == Sign::Plus);
    let bits = n.bits();
    if bits <= 1000 {
        return n.to_f64().map(f64::ln).unwrap_or(f64::INFINITY);
    }
    let shift = bits - 64;
    let top: BigInt = n >> shift;
    top.to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

/// Natural log of a positive rational.
pub fn ln_rational(q: &Rational) -> f64 {
    assert!(q.is_positive(), "logarithm of a non-positive rational");
    ln_bigint(q.numer()) - ln_bigint(q.denom())
}

pub fn to_f64(q: &Rational) -> f64 {
    match q.to_f64() {
        Some(v) if v.is_finite() => v,
        _ => {
            if q.is_zero() {
                0.0
            } else {
                let sign = if q.is_negative() { -1.0 } else { 1.0 };
                sign * ln_rational(&q.abs()).exp()
            }
        }
    }
}

/// Rational `r` with `0 <= r <= sqrt(q)`; equality whenever `q` is a
/// rational square.
pub fn sqrt_lower(q: &Rational) -> Rational {
    assert!(!q.is_negative(), "square root of a negative rational");
    if q.is_zero() {
        return Rational::zero();
    }
    if let Some(exact) = exact_sqrt(q) {
        return exact;
    }
    let mut guess = float_sqrt_guess(q);
    let shrink = Rational::one() - Rational::new(BigInt::one(), BigInt::one() << 40u32);
    while &(&guess * &guess) > q {
        guess *= &shrink;
    }
    guess
}

/// Rational `r >= sqrt(q)`; equality whenever `q` is a rational square.
pub fn sqrt_upper(q: &Rational) -> Rational {
    assert!(!q.is_negative(), "square root of a negative rational");
    if q.is_zero() {
        return Rational::zero();
    }
    if let Some(exact) = exact_sqrt(q) {
        return exact;
    }
    let mut guess = float_sqrt_guess(q);
    let grow = Rational::one() + Rational::new(BigInt::one(), BigInt::one() << 40u32);
    while &(&guess * &guess) < q {
        guess *= &grow;
    }
    guess
}

fn exact_sqrt(q: &Rational) -> Option<Rational> {
    let n = q.numer().to_biguint()?;
    let d = q.denom().to_biguint()?;
    let rn = n.sqrt();
    let rd = d.sqrt();
    if &rn * &rn == n && &rd * &rd == d {
        Some(Rational::new(BigInt::from(rn), BigInt::from(rd)))
    } else {
        None
    }
}

fn float_sqrt_guess(q: &Rational) -> Rational {
    // Work in log space so tiny and huge values keep full relative precision.
    let half_ln = 0.5 * ln_rational(q);
    let exp2 = (half_ln / std::f64::consts::LN_2).floor();
    let mantissa = (half_ln - exp2 * std::f64::consts::LN_2).exp();
    let m = Rational::from_float(mantissa).expect("finite mantissa");
    let e = exp2 as i64;
    if e >= 0 {
        m * Rational::from_integer(BigInt::one() << (e as u64))
    } else {
        m / Rational::from_integer(BigInt::one() << ((-e) as u64))
    }
}

/// Least integer `m >= 0` with `m*m >= n`.
pub fn ceil_sqrt(n: &BigUint) -> BigUint {
    let r = n.sqrt();
    if &r * &r == *n {
        r
    } else {
        r + 1u32
    }
}

/// Exact `ceil(q * sqrt(d))` for `q >= 0`.
pub fn ceil_times_sqrt(q: &Rational, d: u64) -> BigUint {
    assert!(!q.is_negative());
    // m >= q*sqrt(d)  <=>  (m*den)^2 >= num^2 * d
    let num = q.numer().to_biguint().unwrap();
    let den = q.denom().to_biguint().unwrap();
    let target = &num * &num * BigUint::from(d);
    let den2 = &den * &den;
    // m = ceil(sqrt(target / den2))
    let (quot, rem) = target.div_rem(&den2);
    let mut m = ceil_sqrt(&quot);
    if !rem.is_zero() && &m * &m * &den2 < target {
        m += 1u32;
    }
    while &m * &m * &den2 < target {
        m += 1u32;
    }
    m
}

/// Serde adapter: rationals as `"num/den"` strings.
pub mod serde_rational {
    use super::{format_rational, parse_rational, Rational};
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let text = String::deserialize(d)?;
        parse_rational(&text).map_err(D::Error::custom)
    }
}
