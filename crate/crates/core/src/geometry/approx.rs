//! Intermediate approximation: given `x` that avoids `ε/s`-approximation for
//! all `s < M`, find `p/q` with `M <= q <= Mβ` and
//! `|x_i − p_i/q| <= M^{−(1+u_i)} β^{−u_i}`.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::quasinorm::{axis_cmp, check_norm_weights};
use crate::numeric::rational::{ceil_int, floor_int, fmt_q, round_half_up, RationalVector};
use crate::Rational;

/// Default cap on scanned denominators.
pub const DEFAULT_SCAN_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Approximation {
    pub pq: RationalVector,
    /// Denominators checked before the hit.
    pub scanned: u64,
}

fn exps(u: &Rational) -> Result<(usize, usize)> {
    let a = u.numer().to_usize().filter(|&a| a <= 1 << 16);
    let b = u.denom().to_usize().filter(|&b| b <= 1 << 16);
    match (a, b) {
        (Some(a), Some(b)) => Ok((a, b)),
        _ => Err(Error::InvalidInput(format!("weight {} has oversized numerator or denominator", fmt_q(u)))),
    }
}

/// `|t| <= M^{−(1+u)} β^{−u}` with `u = a/b`, i.e. `(|t| M)^b (Mβ)^a <= 1`.
pub fn within_closeness_bound(t: &Rational, m: &Rational, beta: &Rational, u: &Rational) -> Result<bool> {
    let (a, b) = exps(u)?;
    let lhs = num_traits::pow(t.abs() * m, b) * num_traits::pow(m * beta, a);
    Ok(lhs <= Rational::one())
}

/// First `r/s` with `1 <= s < M` and `‖s x − r‖_u < ε/s`, if any.
///
/// The nearest integer to `s x_i` minimizes each axis independently, so it
/// is the only candidate that needs testing for each `s`.
pub fn bad_precondition_witness(x: &[Rational], m: &Rational, u: &[Rational], eps: &Rational) -> Result<Option<RationalVector>> {
    let s_end = ceil_int(m);
    let mut s = BigInt::one();
    while s < s_end {
        let sq = Rational::from_integer(s.clone());
        let thr = eps / &sq;
        let mut p = Vec::with_capacity(x.len());
        let mut all_strict = true;
        for (xi, ui) in x.iter().zip(u) {
            let r = round_half_up(&(&sq * xi));
            let dist = &sq * xi - Rational::from_integer(r.clone());
            if axis_cmp(&dist, ui, &thr)? != std::cmp::Ordering::Less {
                all_strict = false;
                break;
            }
            p.push(r);
        }
        if all_strict {
            return Ok(Some(RationalVector { p, q: s }));
        }
        s += 1;
    }
    Ok(None)
}

/// Replays both conclusions for a candidate `p/q`.
pub fn check_conclusions(x: &[Rational], m: &Rational, beta: &Rational, u: &[Rational], pq: &RationalVector) -> Result<(bool, bool)> {
    let q = Rational::from_integer(pq.q.clone());
    let range_ok = *m <= q && q <= m * beta;
    let mut close_ok = true;
    for i in 0..x.len() {
        let t = &x[i] - Rational::new(pq.p[i].clone(), pq.q.clone());
        close_ok &= within_closeness_bound(&t, m, beta, &u[i])?;
    }
    Ok((range_ok, close_ok))
}

pub fn intermediate_approximation(x: &[Rational], m: &Rational, beta: &Rational, u: &[Rational], eps: &Rational) -> Result<Approximation> {
    intermediate_approximation_with_budget(x, m, beta, u, eps, DEFAULT_SCAN_BUDGET)
}

/// Verifies the precondition by enumeration, then scans `q` upward from
/// `⌈M⌉` with `p_i` the nearest integer to `q x_i`.
pub fn intermediate_approximation_with_budget(
    x: &[Rational],
    m: &Rational,
    beta: &Rational,
    u: &[Rational],
    eps: &Rational,
    budget: u64,
) -> Result<Approximation> {
    if x.len() != u.len() {
        return Err(Error::DimensionMismatch { expected: u.len(), got: x.len() });
    }
    check_norm_weights(u)?;
    let one = Rational::one();
    if *m <= one {
        return Err(Error::InvalidInput(format!("M = {} must exceed 1", fmt_q(m))));
    }
    if !eps.is_positive() || beta * eps <= one {
        return Err(Error::Precondition(format!("beta = {} must exceed 1/eps = {}", fmt_q(beta), fmt_q(&(one / eps)))));
    }
    let q_lo = ceil_int(m);
    let q_hi = floor_int(&(m * beta));
    let span = (&q_hi - &q_lo).to_u64().unwrap_or(u64::MAX);
    if span > budget || m.to_integer().to_u64().map_or(true, |v| v > budget) {
        return Err(Error::ScaleTooLarge { what: "denominator scan steps", needed: format!("{}", &q_hi - &q_lo + 1), budget });
    }
    if let Some(w) = bad_precondition_witness(x, m, u, eps)? {
        return Err(Error::Precondition(format!("x is {}-approximable at {w} with s < M", fmt_q(eps))));
    }
    let mut q = q_lo;
    let mut scanned = 0u64;
    while q <= q_hi {
        scanned += 1;
        let qq = Rational::from_integer(q.clone());
        let p: Vec<BigInt> = x.iter().map(|xi| round_half_up(&(&qq * xi))).collect();
        let pq = RationalVector { p, q: q.clone() };
        if check_conclusions(x, m, beta, u, &pq)?.1 {
            return Ok(Approximation { pq, scanned });
        }
        q += 1;
    }
    Err(Error::NotFound(format!("no p/q with {} <= q <= {} meets the closeness bound", fmt_q(m), fmt_q(&(m * beta)))))
}
