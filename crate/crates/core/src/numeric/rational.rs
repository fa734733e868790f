//! Parsing, formatting and small helpers around [`Rational`].

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Rational;

pub fn q(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn qi(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn qv(pairs: &[(i64, i64)]) -> Vec<Rational> {
    pairs.iter().map(|&(n, d)| q(n, d)).collect()
}

/// Parses `"a/b"`, an integer, or a decimal with a finite expansion
/// (`"0.125"`, `"-3.5"`, `"1e-3"` is rejected).
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not an exact rational: {s:?}"));
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {s:?}")));
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let neg = int.starts_with('-');
        let int_digits = int.trim_start_matches(['-', '+']);
        if !frac.chars().all(|c| c.is_ascii_digit())
            || !int_digits.chars().all(|c| c.is_ascii_digit())
            || (int_digits.is_empty() && frac.is_empty())
        {
            return Err(bad());
        }
        let digits = format!("{int_digits}{frac}");
        let mut n: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().map_err(|_| bad())? };
        if neg {
            n = -n;
        }
        let d = num_traits::pow(BigInt::from(10u32), frac.len());
        return Ok(Rational::new(n, d));
    }
    let n: BigInt = s.parse().map_err(|_| bad())?;
    Ok(Rational::from_integer(n))
}

pub fn parse_rational_list(s: &str) -> Result<Vec<Rational>> {
    s.split(',').map(parse_rational).collect()
}

/// Canonical `"num/den"` (or `"num"` for integers) rendering.
pub fn fmt_q(x: &Rational) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn fmt_qs(xs: &[Rational]) -> Vec<String> {
    xs.iter().map(fmt_q).collect()
}

pub fn ceil_int(x: &Rational) -> BigInt {
    x.ceil().to_integer()
}

pub fn floor_int(x: &Rational) -> BigInt {
    x.floor().to_integer()
}

/// Nearest integer, ties rounded up.
pub fn round_half_up(x: &Rational) -> BigInt {
    (x + q(1, 2)).floor().to_integer()
}

pub fn abs_q(x: &Rational) -> Rational {
    x.abs()
}

pub fn to_f64(x: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    match (x.numer().to_f64(), x.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => {
            // Very large operands: go through logarithms.
            let sign = if x.is_negative() { -1.0 } else { 1.0 };
            sign * (ln_abs_int(x.numer()) - ln_abs_int(x.denom())).exp()
        }
    }
}

/// Natural logarithm of |n| for a non-zero big integer, accurate to ~1e-15 relative.
pub fn ln_abs_int(n: &BigInt) -> f64 {
    use num_traits::ToPrimitive;
    let bits = n.bits();
    if bits <= 1000 {
        return n.abs().to_f64().expect("fits").ln();
    }
    let shift = bits - 64;
    let top = (n.abs() >> shift).to_f64().expect("fits");
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

pub fn ln_q(x: &Rational) -> f64 {
    ln_abs_int(x.numer()) - ln_abs_int(x.denom())
}

/// `base^exp` for an integer exponent (negative allowed for non-zero base).
pub fn pow_q(base: &Rational, exp: i64) -> Rational {
    if exp >= 0 {
        num_traits::pow(base.clone(), exp as usize)
    } else {
        num_traits::pow(base.recip(), exp.unsigned_abs() as usize)
    }
}

pub fn pow_big(base: &Rational, exp: &BigInt) -> Result<Rational> {
    use num_traits::ToPrimitive;
    let e = exp
        .to_i64()
        .filter(|e| e.unsigned_abs() < (1 << 24))
        .ok_or_else(|| Error::Undecided(format!("integer power with exponent {exp}")))?;
    Ok(pow_q(base, e))
}

/// `lcm` of the denominators of a slice of rationals.
pub fn lcm_denoms(xs: &[Rational]) -> BigInt {
    xs.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()))
}

/// A rational vector `p / q` with integer numerators and a positive common denominator.
///
/// Stored unreduced: `(2, 4) / 4` and `(1, 2) / 2` are different pairs even
/// though they name the same point.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RationalVector {
    pub p: Vec<BigInt>,
    pub q: BigInt,
}

impl RationalVector {
    pub fn new(p: Vec<BigInt>, q: BigInt) -> Result<Self> {
        if q < BigInt::one() {
            return Err(Error::InvalidInput(format!("denominator must be >= 1, got {q}")));
        }
        Ok(Self { p, q })
    }

    pub fn dim(&self) -> usize {
        self.p.len()
    }

    pub fn point(&self) -> Vec<Rational> {
        self.p.iter().map(|p| Rational::new(p.clone(), self.q.clone())).collect()
    }

    /// Equality as points of `Q^d` (ignores the representation).
    pub fn same_point(&self, other: &RationalVector) -> bool {
        self.p.len() == other.p.len()
            && self.p.iter().zip(&other.p).all(|(a, b)| a * &other.q == b * &self.q)
    }
}

impl PartialOrd for RationalVector {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for RationalVector {
    /// Canonical enumeration order: by denominator, then numerators lexicographically.
    fn cmp(&self, other: &Self) -> Ordering {
        self.q.cmp(&other.q).then_with(|| self.p.cmp(&other.p))
    }
}

impl std::fmt::Display for RationalVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let ps: Vec<String> = self.p.iter().map(|p| p.to_string()).collect();
        write!(f, "({})/{}", ps.join(","), self.q)
    }
}

/// Serde adapters rendering rationals as exact `"num/den"` strings.
pub mod serde_q {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_q(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }

    pub mod vec {
        use super::*;

        pub fn serialize<S: Serializer>(xs: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
            s.collect_seq(xs.iter().map(fmt_q))
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Rational>, D::Error> {
            let v = Vec::<String>::deserialize(d)?;
            v.iter().map(|s| parse_rational(s).map_err(serde::de::Error::custom)).collect()
        }
    }

    pub mod matrix {
        use super::*;

        pub fn serialize<S: Serializer>(m: &[Vec<Rational>], s: S) -> std::result::Result<S::Ok, S::Error> {
            s.collect_seq(m.iter().map(|row| fmt_qs(row)))
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Vec<Rational>>, D::Error> {
            let v = Vec::<Vec<String>>::deserialize(d)?;
            v.iter()
                .map(|row| row.iter().map(|s| parse_rational(s).map_err(serde::de::Error::custom)).collect())
                .collect()
        }
    }

    /// Big integers as decimal strings.
    pub mod int {
        use super::*;

        pub fn serialize<S: Serializer>(x: &BigInt, s: S) -> std::result::Result<S::Ok, S::Error> {
            s.serialize_str(&x.to_string())
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BigInt, D::Error> {
            let s = String::deserialize(d)?;
            s.trim().parse().map_err(serde::de::Error::custom)
        }
    }

    /// Vectors of big integers as decimal strings.
    pub mod ints {
        use super::*;

        pub fn serialize<S: Serializer>(xs: &[BigInt], s: S) -> std::result::Result<S::Ok, S::Error> {
            s.collect_seq(xs.iter().map(|x| x.to_string()))
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<BigInt>, D::Error> {
            let v = Vec::<String>::deserialize(d)?;
            v.iter().map(|s| s.trim().parse().map_err(serde::de::Error::custom)).collect()
        }
    }

    pub mod opt {
        use super::*;

        pub fn serialize<S: Serializer>(x: &Option<Rational>, s: S) -> std::result::Result<S::Ok, S::Error> {
            match x {
                Some(x) => s.serialize_some(&fmt_q(x)),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Rational>, D::Error> {
            let v = Option::<String>::deserialize(d)?;
            v.map(|s| parse_rational(&s).map_err(serde::de::Error::custom)).transpose()
        }
    }
}
