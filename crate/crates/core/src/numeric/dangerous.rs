//! Enumeration of the rational points `r/s` that come close to some point of
//! a box, in the sense `|s x_i − r_i| <= t_i(s)` on every axis.
//!
//! Because the box is a product of intervals, "some `x` in the box" splits
//! into independent per-axis conditions: `dist(r_i, s·[lo_i, hi_i]) <= t_i(s)`.
//! Each of these is decided exactly, and the survivors per axis are combined
//! by a cartesian product.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use super::boxes::AxisBox;
use super::quasinorm::check_norm_weights;
use super::rational::{ceil_int, floor_int, fmt_q, to_f64, RationalVector};
use crate::error::{Error, Result};
use crate::Rational;

/// Default cap on elementary candidate tests per enumeration.
pub const DEFAULT_BUDGET: u64 = 100_000_000;

/// Per-axis closeness threshold `t_i(s)`.
pub trait AxisThreshold: Sync {
    /// Decides `dist <= t_i(s)` exactly for a non-negative rational `dist`.
    fn within(&self, s: &BigInt, i: usize, dist: &Rational) -> Result<bool>;
    /// Any rational upper bound on `t_i(s)` valid for all `s >= s_min`.
    fn bound(&self, s_min: &BigInt, i: usize) -> Rational;
}

/// `t_i(s) = (eps/s)^{u_i}`: the ball `‖s x − r‖_u <= eps/s`.
pub struct EpsBall<'a> {
    pub eps: &'a Rational,
    pub u: &'a [Rational],
}

impl AxisThreshold for EpsBall<'_> {
    fn within(&self, s: &BigInt, i: usize, dist: &Rational) -> Result<bool> {
        // dist <= (eps/s)^{a/b}  <=>  dist^b <= (eps/s)^a
        let a = self.u[i].numer().to_usize().unwrap_or(usize::MAX);
        let b = self.u[i].denom().to_usize().unwrap_or(usize::MAX);
        let ratio = self.eps / Rational::from_integer(s.clone());
        Ok(num_traits::pow(dist.clone(), b) <= num_traits::pow(ratio, a))
    }

    fn bound(&self, s_min: &BigInt, _i: usize) -> Rational {
        let ratio = self.eps / Rational::from_integer(s_min.clone());
        ratio.max(Rational::one())
    }
}

/// `t_i(s) = s^{−τ w_i}`: the ball `‖s x − r‖_w <= s^{−τ}`.
pub struct TauBall<'a> {
    pub tau: &'a Rational,
    pub w: &'a [Rational],
}

impl AxisThreshold for TauBall<'_> {
    fn within(&self, s: &BigInt, i: usize, dist: &Rational) -> Result<bool> {
        // dist <= s^{-a/b}  <=>  dist^b * s^a <= 1
        let e = self.tau * &self.w[i];
        let a = e.numer().to_usize().unwrap_or(usize::MAX);
        let b = e.denom().to_usize().unwrap_or(usize::MAX);
        let lhs = num_traits::pow(dist.clone(), b) * Rational::from_integer(num_traits::pow(s.clone(), a));
        Ok(lhs <= Rational::one())
    }

    fn bound(&self, _s_min: &BigInt, _i: usize) -> Rational {
        Rational::one()
    }
}

/// Distance from `r` to the interval `s·[lo, hi]`.
fn interval_dist(r: &BigInt, s: &Rational, lo: &Rational, hi: &Rational) -> Rational {
    let r = Rational::from_integer(r.clone());
    let a = s * lo;
    let b = s * hi;
    if r < a {
        a - r
    } else if r > b {
        r - b
    } else {
        Rational::zero()
    }
}

/// Rough upper bound on the number of candidate tests, for the budget check.
fn estimated_cost<T: AxisThreshold>(e: &AxisBox<Rational>, s_lo: &BigInt, s_hi: &BigInt, thr: &T) -> f64 {
    let count = to_f64(&Rational::from_integer(s_hi - s_lo));
    let s_max = to_f64(&Rational::from_integer(s_hi.clone()));
    let per_s: f64 = (0..e.dim())
        .map(|i| s_max * to_f64(&e.side(i)) + 2.0 * to_f64(&thr.bound(s_lo, i)) + 2.0)
        .product();
    count * per_s.max(1.0)
}

fn candidates_for_s<T: AxisThreshold>(e: &AxisBox<Rational>, s: &BigInt, thr: &T, s_min: &BigInt) -> Result<Vec<RationalVector>> {
    let sq = Rational::from_integer(s.clone());
    let mut per_axis: Vec<Vec<BigInt>> = Vec::with_capacity(e.dim());
    for i in 0..e.dim() {
        let t = thr.bound(s_min, i);
        let first = ceil_int(&(&sq * &e.lo[i] - &t));
        let last = floor_int(&(&sq * &e.hi[i] + &t));
        let mut ok = Vec::new();
        let mut r = first;
        while r <= last {
            let dist = interval_dist(&r, &sq, &e.lo[i], &e.hi[i]);
            if dist.is_zero() || thr.within(s, i, &dist)? {
                ok.push(r.clone());
            }
            r += 1;
        }
        if ok.is_empty() {
            return Ok(Vec::new());
        }
        per_axis.push(ok);
    }
    let mut out = vec![Vec::<BigInt>::new()];
    for axis in &per_axis {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |r| {
                    let mut v = prefix.clone();
                    v.push(r.clone());
                    v
                })
            })
            .collect();
    }
    Ok(out.into_iter().map(|p| RationalVector { p, q: s.clone() }).collect())
}

/// All `r/s` with `s_lo <= s < s_hi` and `|s x_i − r_i| <= t_i(s)` on every
/// axis for some `x` in the closed box `e`, sorted by `(s, r)`.
pub fn enumerate_near<T: AxisThreshold>(
    e: &AxisBox<Rational>,
    s_lo: &BigInt,
    s_hi: &BigInt,
    thr: &T,
    budget: u64,
) -> Result<Vec<RationalVector>> {
    let s_lo = s_lo.max(&BigInt::one()).clone();
    if *s_hi <= s_lo {
        return Ok(Vec::new());
    }
    let cost = estimated_cost(e, &s_lo, s_hi, thr);
    if !(cost <= budget as f64) {
        return Err(Error::ScaleTooLarge { what: "rational enumeration tests", needed: format!("{cost:.3e}"), budget });
    }
    let n = (s_hi - &s_lo).to_u64().expect("bounded by budget");
    let chunks: Vec<Result<Vec<RationalVector>>> = if n >= 64 {
        (0..n)
            .into_par_iter()
            .map(|j| candidates_for_s(e, &(&s_lo + j), thr, &s_lo))
            .collect()
    } else {
        (0..n).map(|j| candidates_for_s(e, &(&s_lo + j), thr, &s_lo)).collect()
    };
    let mut out = Vec::new();
    for c in chunks {
        out.extend(c?);
    }
    Ok(out)
}

/// `{ r/s : s_lo <= s < s_hi, ∃x∈E  |s x_i − r_i| <= (eps/s)^{u_i} ∀i }`.
pub fn dangerous_rationals(
    e: &AxisBox<Rational>,
    s_lo: &BigInt,
    s_hi: &BigInt,
    u: &[Rational],
    eps: &Rational,
) -> Result<Vec<RationalVector>> {
    dangerous_rationals_with_budget(e, s_lo, s_hi, u, eps, DEFAULT_BUDGET)
}

pub fn dangerous_rationals_with_budget(
    e: &AxisBox<Rational>,
    s_lo: &BigInt,
    s_hi: &BigInt,
    u: &[Rational],
    eps: &Rational,
    budget: u64,
) -> Result<Vec<RationalVector>> {
    if u.len() != e.dim() {
        return Err(Error::DimensionMismatch { expected: e.dim(), got: u.len() });
    }
    check_norm_weights(u)?;
    if !eps.is_positive() {
        return Err(Error::InvalidInput(format!("eps must be positive, got {}", fmt_q(eps))));
    }
    if *s_lo < BigInt::one() || s_hi <= s_lo {
        return Err(Error::InvalidInput(format!("denominator range [{s_lo}, {s_hi}) must satisfy 1 <= s_lo < s_hi")));
    }
    enumerate_near(e, s_lo, s_hi, &EpsBall { eps, u }, budget)
}
