//! Truncated membership scan for `W_w(c, τ)`: all `q <= Q` with
//! `‖q x − p‖_w < c q^{−τ}` for the nearest integer vector `p`.

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use super::power::PowerProduct;
use super::quasinorm::weighted_norm_approx;
use super::rational::{fmt_q, lcm_denoms, round_half_up, serde_q, to_f64};
use crate::error::{Error, Result};
use crate::{Rational, Weights};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanHit {
    pub q: u64,
    #[serde(with = "serde_q::ints")]
    pub p: Vec<BigInt>,
    /// `‖q x − p‖_w q^τ / c`, below 1 for every hit.
    pub ratio_approx: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipScan {
    pub q_max: u64,
    pub hits: Vec<ScanHit>,
    /// Common denominator of `x`: every multiple of it is an exact hit.
    #[serde(with = "serde_q::int")]
    pub period: BigInt,
    pub hits_off_period: usize,
}

/// `|t| < (c q^{−τ})^{w_i}` decided exactly.
fn axis_below(t: &Rational, wi: &Rational, c: &Rational, tau: &Rational, q: u64) -> Result<bool> {
    if t.is_zero() {
        return Ok(true);
    }
    let qq = Rational::from_integer(q.into());
    let rhs = PowerProduct::pow_of(c, wi)? * PowerProduct::pow_of(&qq, &-(tau * wi))?;
    PowerProduct::from_rational(&t.abs())?.lt(&rhs)
}

pub fn scan_approximations(x: &[Rational], w: &Weights, c: &Rational, tau: &Rational, q_max: u64) -> Result<MembershipScan> {
    if x.len() != w.dim() {
        return Err(Error::DimensionMismatch { expected: w.dim(), got: x.len() });
    }
    if !c.is_positive() {
        return Err(Error::InvalidInput(format!("c must be positive, got {}", fmt_q(c))));
    }
    if !tau.is_positive() {
        return Err(Error::InvalidInput(format!("τ must be positive, got {}", fmt_q(tau))));
    }
    if q_max == 0 {
        return Err(Error::InvalidInput("q range must be non-empty".into()));
    }
    let period = lcm_denoms(x);
    let mut hits = Vec::new();
    for q in 1..=q_max {
        let qq = Rational::from_integer(q.into());
        let p: Vec<BigInt> = x.iter().map(|xi| round_half_up(&(&qq * xi))).collect();
        let v: Vec<Rational> = x.iter().zip(&p).map(|(xi, pi)| &qq * xi - Rational::from_integer(pi.clone())).collect();
        let mut ok = true;
        for (vi, wi) in v.iter().zip(w.as_slice()) {
            if !axis_below(vi, wi, c, tau, q)? {
                ok = false;
                break;
            }
        }
        if ok {
            let norm = to_f64(&weighted_norm_approx(&v, w.as_slice(), 12)?);
            hits.push(ScanHit { q, p, ratio_approx: norm * (q as f64).powf(to_f64(tau)) / to_f64(c) });
        }
    }
    let hits_off_period = hits.iter().filter(|h| !(BigInt::from(h.q) % &period).is_zero()).count();
    Ok(MembershipScan { q_max, hits, period, hits_off_period })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rational::{q, qi, qv};

    #[test]
    fn rational_point_hits_every_multiple_of_its_denominator() {
        let w = Weights::new(&qv(&[(1, 2), (1, 2)])).unwrap();
        let x = qv(&[(1, 3), (2, 3)]);
        let s = scan_approximations(&x, &w, &q(1, 100), &qi(2), 12).unwrap();
        let qs: Vec<u64> = s.hits.iter().map(|h| h.q).collect();
        assert_eq!(qs, vec![3, 6, 9, 12]);
        assert_eq!(s.period, 3.into());
        assert_eq!(s.hits_off_period, 0);
        assert_eq!(s.hits[0].p, vec![1.into(), 2.into()]);
    }

    #[test]
    fn strict_inequality_at_the_boundary() {
        // d = 1, w = 1, τ = 1: x = 1/4, q = 1 gives |x| = 1/4 against c.
        let w = Weights::new(&[qi(1)]).unwrap();
        let x = [q(1, 4)];
        let at = scan_approximations(&x, &w, &q(1, 4), &qi(1), 1).unwrap();
        assert!(at.hits.is_empty());
        let above = scan_approximations(&x, &w, &q(26, 100), &qi(1), 1).unwrap();
        assert_eq!(above.hits.len(), 1);
        assert_eq!(above.hits_off_period, 1);
    }

    #[test]
    fn irrational_thresholds_are_exact() {
        // w = (1/3, 2/3): the first axis needs |v| < (c/q^τ)^{1/3}.
        let w = Weights::new(&qv(&[(1, 3), (2, 3)])).unwrap();
        let x = qv(&[(1, 7), (0, 1)]);
        // q = 1: |v_1| = 1/7 < (1/300)^{1/3} ≈ 0.149 but not < (1/400)^{1/3} ≈ 0.136.
        assert_eq!(scan_approximations(&x, &w, &q(1, 300), &qi(1), 1).unwrap().hits.len(), 1);
        assert!(scan_approximations(&x, &w, &q(1, 400), &qi(1), 1).unwrap().hits.is_empty());
    }
}
