//! Symbolic products of rational powers, `Π base_j^{e_j}` with integer bases
//! and rational exponents, compared against each other without rounding.
//!
//! Bases are split into primes by trial division (any large cofactor is kept
//! as an opaque base), equal bases are merged and zero exponents dropped, so
//! most exact equalities collapse to the empty product. A comparison first
//! tries a log-domain filter with a rigorous error bound; when the filter is
//! inconclusive the exponents are cleared to integers and the two sides are
//! compared as big integers. If that would exceed [`EXACT_BIT_BUDGET`] the
//! comparison is reported as undecided rather than guessed.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Div, Mul};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::rational::{fmt_q, lcm_denoms, ln_abs_int, parse_rational, to_f64};
use crate::error::{Error, Result};
use crate::Rational;

/// Largest total bit size the exact fallback is allowed to materialize.
pub const EXACT_BIT_BUDGET: u64 = 1 << 25;

/// Largest value [`PowerProduct::to_rational`] will materialize.
pub const RATIONAL_BIT_BUDGET: u64 = 1 << 18;

const TRIAL_LIMIT_SMALL: u64 = 1 << 20;
const TRIAL_LIMIT_BIG: u64 = 1 << 16;

/// Relative error allowance of the floating filter. Each term carries a few
/// ulps from `ln`, the exponent conversion and the product; the sum adds at
/// most one ulp of the running magnitude per term. 1e-13 covers both for any
/// realistic number of terms with a wide margin.
const LOG_FILTER_REL: f64 = 1e-13;

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct PowerProduct {
    factors: BTreeMap<BigInt, Rational>,
}

fn factor_into(n: &BigInt, exp: &Rational, out: &mut BTreeMap<BigInt, Rational>) {
    let mut add = |p: BigInt, e: Rational| {
        let slot = out.entry(p.clone()).or_insert_with(Rational::zero);
        *slot += e;
        if slot.is_zero() {
            out.remove(&p);
        }
    };
    if n.is_one() {
        return;
    }
    if let Some(mut m) = n.to_u64() {
        let mut p = 2u64;
        while p * p <= m && p <= TRIAL_LIMIT_SMALL {
            if m % p == 0 {
                let mut k = 0i64;
                while m % p == 0 {
                    m /= p;
                    k += 1;
                }
                add(BigInt::from(p), exp * Rational::from_integer(k.into()));
            }
            p += if p == 2 { 1 } else { 2 };
        }
        if m > 1 {
            add(BigInt::from(m), exp.clone());
        }
        return;
    }
    let mut m = n.clone();
    let mut p = 2u64;
    while p <= TRIAL_LIMIT_BIG {
        let pb = BigInt::from(p);
        if (&m % &pb).is_zero() {
            let mut k = 0i64;
            while (&m % &pb).is_zero() {
                m /= &pb;
                k += 1;
            }
            add(pb, exp * Rational::from_integer(k.into()));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if !m.is_one() {
        add(m, exp.clone());
    }
}

impl PowerProduct {
    pub fn one() -> Self {
        Self::default()
    }

    /// `x^e` for a positive rational `x`.
    pub fn pow_of(x: &Rational, e: &Rational) -> Result<Self> {
        if !x.is_positive() {
            return Err(Error::InvalidInput(format!("power base must be positive, got {}", fmt_q(x))));
        }
        let mut factors = BTreeMap::new();
        if !e.is_zero() {
            factor_into(x.numer(), e, &mut factors);
            factor_into(x.denom(), &-e, &mut factors);
        }
        Ok(Self { factors })
    }

    pub fn from_rational(x: &Rational) -> Result<Self> {
        Self::pow_of(x, &Rational::one())
    }

    pub fn from_int(n: i64) -> Result<Self> {
        Self::from_rational(&Rational::from_integer(n.into()))
    }

    pub fn is_one(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn factors(&self) -> impl Iterator<Item = (&BigInt, &Rational)> {
        self.factors.iter()
    }

    pub fn powr(&self, e: &Rational) -> Self {
        if e.is_zero() {
            return Self::one();
        }
        Self { factors: self.factors.iter().map(|(b, x)| (b.clone(), x * e)).collect() }
    }

    pub fn powi(&self, e: i64) -> Self {
        self.powr(&Rational::from_integer(e.into()))
    }

    pub fn recip(&self) -> Self {
        self.powr(&-Rational::one())
    }

    pub fn mul_rational(&self, x: &Rational) -> Result<Self> {
        Ok(self * &Self::from_rational(x)?)
    }

    /// Natural logarithm in floating point (approximate).
    pub fn ln_approx(&self) -> f64 {
        self.factors.iter().map(|(b, e)| to_f64(e) * ln_abs_int(b)).sum()
    }

    pub fn approx(&self) -> f64 {
        self.ln_approx().exp()
    }

    /// Exact value if every exponent is an integer and the result has at
    /// most [`RATIONAL_BIT_BUDGET`] bits.
    pub fn to_rational(&self) -> Option<Rational> {
        let mut num = BigInt::one();
        let mut den = BigInt::one();
        let mut bits = 0u64;
        for (b, e) in &self.factors {
            if !e.is_integer() {
                return None;
            }
            let k = e.to_integer();
            let k_abs = k.abs().to_usize()?;
            bits = bits.saturating_add((k_abs as u64).saturating_mul(b.bits()));
            if bits > RATIONAL_BIT_BUDGET {
                return None;
            }
            let p = num_traits::pow(b.clone(), k_abs);
            if k.is_positive() {
                num *= p;
            } else {
                den *= p;
            }
        }
        Some(Rational::new(num, den))
    }

    /// Clears exponents to integers: returns `(L, N, D)` with `self^L = N / D`.
    fn cleared(&self) -> Result<(BigInt, BigInt, BigInt)> {
        let exps: Vec<Rational> = self.factors.values().cloned().collect();
        let l = lcm_denoms(&exps);
        let mut bits = 0u64;
        for (b, e) in &self.factors {
            let k = (e * Rational::from_integer(l.clone())).to_integer();
            let k = k.abs().to_u64().unwrap_or(u64::MAX);
            bits = bits.saturating_add(k.saturating_mul(b.bits()));
        }
        if bits > EXACT_BIT_BUDGET {
            return Err(Error::Undecided(format!("{self} needs ~{bits} bits to compare exactly")));
        }
        let mut num = BigInt::one();
        let mut den = BigInt::one();
        for (b, e) in &self.factors {
            let k = (e * Rational::from_integer(l.clone())).to_integer();
            let p = num_traits::pow(b.clone(), k.abs().to_usize().expect("bounded above"));
            if k.is_positive() {
                num *= p;
            } else {
                den *= p;
            }
        }
        Ok((l, num, den))
    }

    /// Exact ordering of the product against 1.
    pub fn cmp_one(&self) -> Result<Ordering> {
        if self.factors.is_empty() {
            return Ok(Ordering::Equal);
        }
        if self.factors.values().all(|e| e.is_positive()) {
            return Ok(Ordering::Greater);
        }
        if self.factors.values().all(|e| e.is_negative()) {
            return Ok(Ordering::Less);
        }
        let mut sum = 0.0f64;
        let mut mag = 0.0f64;
        for (b, e) in &self.factors {
            let t = to_f64(e) * ln_abs_int(b);
            sum += t;
            mag += t.abs();
        }
        let err = LOG_FILTER_REL * mag * (1.0 + self.factors.len() as f64);
        if sum.is_finite() && mag.is_finite() {
            if sum > err {
                return Ok(Ordering::Greater);
            }
            if sum < -err {
                return Ok(Ordering::Less);
            }
        }
        let (_, num, den) = self.cleared()?;
        Ok(num.cmp(&den))
    }

    pub fn cmp_pp(&self, other: &PowerProduct) -> Result<Ordering> {
        (self / other).cmp_one()
    }

    pub fn cmp_rational(&self, x: &Rational) -> Result<Ordering> {
        if x.is_positive() {
            self.cmp_pp(&Self::from_rational(x)?)
        } else {
            Ok(Ordering::Greater)
        }
    }

    pub fn le(&self, other: &PowerProduct) -> Result<bool> {
        Ok(self.cmp_pp(other)? != Ordering::Greater)
    }

    pub fn lt(&self, other: &PowerProduct) -> Result<bool> {
        Ok(self.cmp_pp(other)? == Ordering::Less)
    }

    /// `⌊self⌋` as an integer.
    pub fn floor(&self) -> Result<BigInt> {
        if let Some(q) = self.to_rational() {
            return Ok(q.floor().to_integer());
        }
        let (l, num, den) = self.cleared()?;
        let l = l.to_u32().ok_or_else(|| Error::Undecided(format!("root of order {l}")))?;
        // floor((N/D)^(1/L)) = floor(floor(N/D)^(1/L)) since m^L <= N/D iff m^L <= floor(N/D).
        Ok(num.div_floor(&den).nth_root(l))
    }

    pub fn ceil(&self) -> Result<BigInt> {
        let f = self.floor()?;
        if self.cmp_rational(&Rational::from_integer(f.clone()))? == Ordering::Equal {
            Ok(f)
        } else {
            Ok(f + 1)
        }
    }

    pub fn to_terms(&self) -> Vec<PowerTerm> {
        self.factors
            .iter()
            .map(|(b, e)| PowerTerm { base: b.to_string(), exp_num: e.numer().to_string(), exp_den: e.denom().to_string() })
            .collect()
    }

    pub fn from_terms(terms: &[PowerTerm]) -> Result<Self> {
        let mut out = Self::one();
        for t in terms {
            let b = parse_rational(&t.base)?;
            let e = parse_rational(&format!("{}/{}", t.exp_num, t.exp_den))?;
            out = &out * &Self::pow_of(&b, &e)?;
        }
        Ok(out)
    }
}

impl Mul for &PowerProduct {
    type Output = PowerProduct;
    fn mul(self, rhs: &PowerProduct) -> PowerProduct {
        let mut factors = self.factors.clone();
        for (b, e) in &rhs.factors {
            let slot = factors.entry(b.clone()).or_insert_with(Rational::zero);
            *slot += e;
            if slot.is_zero() {
                factors.remove(b);
            }
        }
        PowerProduct { factors }
    }
}

impl Div for &PowerProduct {
    type Output = PowerProduct;
    fn div(self, rhs: &PowerProduct) -> PowerProduct {
        self * &rhs.recip()
    }
}

impl Mul for PowerProduct {
    type Output = PowerProduct;
    fn mul(self, rhs: PowerProduct) -> PowerProduct {
        &self * &rhs
    }
}

impl Div for PowerProduct {
    type Output = PowerProduct;
    fn div(self, rhs: PowerProduct) -> PowerProduct {
        &self / &rhs
    }
}

impl fmt::Display for PowerProduct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self.factors.iter().map(|(b, e)| format!("{b}^({})", fmt_q(e))).collect();
        write!(f, "{}", parts.join("*"))
    }
}

impl fmt::Debug for PowerProduct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PowerProduct({self})")
    }
}

/// Serialized form of one factor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PowerTerm {
    pub base: String,
    pub exp_num: String,
    pub exp_den: String,
}

impl Serialize for PowerProduct {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_terms().serialize(s)
    }
}

impl<'de> Deserialize<'de> for PowerProduct {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let terms = Vec::<PowerTerm>::deserialize(d)?;
        Self::from_terms(&terms).map_err(serde::de::Error::custom)
    }
}

/// Smallest integer `N` with `base^N >= target`. `base` must exceed 1.
pub fn ceil_log(target: &PowerProduct, base: &PowerProduct) -> Result<BigInt> {
    search_log(target, base, true)
}

/// Largest integer `N` with `base^N <= target`. `base` must exceed 1.
pub fn floor_log(target: &PowerProduct, base: &PowerProduct) -> Result<BigInt> {
    search_log(target, base, false)
}

fn search_log(target: &PowerProduct, base: &PowerProduct, ceil: bool) -> Result<BigInt> {
    if base.cmp_one()? != Ordering::Greater {
        return Err(Error::InvalidInput(format!("logarithm base {base} must exceed 1")));
    }
    let guess = target.ln_approx() / base.ln_approx();
    if !guess.is_finite() || guess.abs() > 9.0e15 {
        return Err(Error::Undecided(format!("log of {target} in base {base} is out of range")));
    }
    // base^N >= target  <=>  base^N / target >= 1
    let ge = |n: &BigInt| -> Result<bool> {
        let e = Rational::from_integer(n.clone());
        Ok((&base.powr(&e) / target).cmp_one()? != Ordering::Less)
    };
    let le = |n: &BigInt| -> Result<bool> {
        let e = Rational::from_integer(n.clone());
        Ok((&base.powr(&e) / target).cmp_one()? != Ordering::Greater)
    };
    let mut n = BigInt::from(guess.floor() as i64);
    if ceil {
        // walk down while the predecessor still satisfies, then up until satisfied
        while ge(&(&n - 1))? {
            n -= 1;
        }
        while !ge(&n)? {
            n += 1;
        }
    } else {
        while !le(&n)? {
            n -= 1;
        }
        while le(&(&n + 1))? {
            n += 1;
        }
    }
    Ok(n)
}
