//! Coplanarity certificate for the rational points that approximate a small
//! box: under the size hypotheses all of them lie on one affine hyperplane.

use std::cmp::Ordering;

use num_bigint::BigInt;
use crate::error::{Error, Result};
use crate::numeric::dangerous::{enumerate_near, AxisThreshold, EpsBall};
use crate::numeric::plane::{affine_hull, AffinePlane};
use crate::numeric::power::PowerProduct;
use crate::numeric::quasinorm::check_norm_weights;
use crate::numeric::rational::{ceil_int, pow_q, RationalVector};
use crate::{QBox, Rational};

#[derive(Debug, Clone, PartialEq)]
pub struct PlaneFit {
    pub points: Vec<RationalVector>,
    pub rank: usize,
    pub plane: Option<AffinePlane<Rational>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexCertificate {
    pub fit: PlaneFit,
    pub hypothesis_ok: bool,
    pub side_ok: Vec<bool>,
    pub eps_ok: bool,
}

pub(crate) fn factorial(n: usize) -> BigInt {
    (1..=n).map(BigInt::from).product()
}

/// Integer range `[ceil(R^n), ceil(R^{n+1}))`, i.e. all `s` with `R^n <= s < R^{n+1}`.
pub fn scale_range(r: &Rational, n: u32) -> (BigInt, BigInt) {
    let lo = pow_q(r, n as i64);
    let hi = pow_q(r, n as i64 + 1);
    (ceil_int(&lo), ceil_int(&hi))
}

/// All points near `e` for `s ∈ [s_lo, s_hi)` under `thr`, with their affine
/// rank and a hyperplane through them when one exists.
pub fn fit_plane<T: AxisThreshold>(e: &QBox, s_lo: &BigInt, s_hi: &BigInt, thr: &T, budget: u64) -> Result<PlaneFit> {
    let points = enumerate_near(e, s_lo, s_hi, thr, budget)?;
    let coords: Vec<Vec<Rational>> = points.iter().map(|p| p.point()).collect();
    let (rank, plane) = affine_hull(&coords, e.dim())?;
    Ok(PlaneFit { points, rank, plane })
}

/// Checks the size hypotheses for `(E, n, R, u, ε)`:
/// `side_i <= R^{−(1+u_i)(n+1)}/(d+1)!` and `ε < R^{−1}((d+1)!)^{−1/u_1}`.
pub fn simplex_hypothesis(e: &QBox, n: u32, r: &Rational, u: &[Rational], eps: &Rational) -> Result<(Vec<bool>, bool)> {
    let d = e.dim();
    let fact = Rational::from_integer(factorial(d + 1));
    let one = Rational::from_integer(1.into());
    let mut side_ok = Vec::with_capacity(d);
    for (i, ui) in u.iter().enumerate() {
        let exp = -(&one + ui) * Rational::from_integer((n + 1).into());
        let bound = PowerProduct::pow_of(r, &exp)?;
        side_ok.push(bound.cmp_rational(&(e.side(i) * &fact))? != Ordering::Less);
    }
    let eps_bound = &PowerProduct::pow_of(r, &-one.clone())? * &PowerProduct::pow_of(&fact, &-(&one / &u[0]))?;
    let eps_ok = eps_bound.cmp_rational(eps)? == Ordering::Greater;
    Ok((side_ok, eps_ok))
}

/// Enumerates the points `r/s` with `R^n <= s < R^{n+1}` and
/// `‖s x − r‖_u <= ε/s` for some `x ∈ E`, fits an affine hull, and when the
/// size hypotheses hold asserts that the rank is below `d`.
pub fn simplex_certificate(e: &QBox, n: u32, r: &Rational, u: &[Rational], eps: &Rational, budget: u64) -> Result<SimplexCertificate> {
    if u.len() != e.dim() {
        return Err(Error::DimensionMismatch { expected: e.dim(), got: u.len() });
    }
    check_norm_weights(u)?;
    if *r <= Rational::from_integer(1.into()) {
        return Err(Error::InvalidInput("R must exceed 1".into()));
    }
    let (side_ok, eps_ok) = simplex_hypothesis(e, n, r, u, eps)?;
    let hypothesis_ok = eps_ok && side_ok.iter().all(|&b| b);
    let (s_lo, s_hi) = scale_range(r, n);
    let fit = fit_plane(e, &s_lo, &s_hi, &EpsBall { eps, u }, budget)?;
    if hypothesis_ok && fit.rank >= e.dim() {
        return Err(Error::TheoremViolation(format!(
            "{} approximating points of full affine rank under the coplanarity hypotheses",
            fit.points.len()
        )));
    }
    Ok(SimplexCertificate { fit, hypothesis_ok, side_ok, eps_ok })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rational::{q, qi, qv};
    use crate::numeric::DEFAULT_BUDGET;

    #[test]
    fn tiny_eps_gives_no_points() {
        let lo = vec![q(1, 7) + q(1, 1000), q(2, 7) + q(1, 1000)];
        let hi = lo.iter().map(|x| x + q(1, 10_000)).collect();
        let e = QBox::new(lo, hi).unwrap();
        let c = simplex_certificate(&e, 1, &qi(4), &qv(&[(1, 2), (1, 2)]), &q(1, 1_000_000), DEFAULT_BUDGET).unwrap();
        assert!(c.fit.points.is_empty());
        assert_eq!(c.fit.rank, 0);
    }

    #[test]
    fn hypothesis_thresholds() {
        // d = 2, R = 4, n = 1, u = (1/2, 1/2): side bound 4^{-3}/6 = 1/384,
        // eps bound 4^{-1} 6^{-2} = 1/144.
        let u = qv(&[(1, 2), (1, 2)]);
        let e = QBox::new(vec![q(1, 3); 2], vec![q(1, 3) + q(1, 384); 2]).unwrap();
        let (side, eps_ok) = simplex_hypothesis(&e, 1, &qi(4), &u, &q(1, 145)).unwrap();
        assert_eq!(side, vec![true, true]);
        assert!(eps_ok);
        let (_, eps_ok) = simplex_hypothesis(&e, 1, &qi(4), &u, &q(1, 144)).unwrap();
        assert!(!eps_ok);
        let e = QBox::new(vec![q(1, 3); 2], vec![q(1, 3) + q(1, 383); 2]).unwrap();
        let (side, _) = simplex_hypothesis(&e, 1, &qi(4), &u, &q(1, 145)).unwrap();
        assert_eq!(side, vec![false, false]);
    }

    #[test]
    fn huge_eps_can_reach_full_rank() {
        let e = QBox::new(qv(&[(1, 3), (1, 3)]), qv(&[(1, 2), (1, 2)])).unwrap();
        let c = simplex_certificate(&e, 1, &qi(4), &qv(&[(1, 2), (1, 2)]), &qi(2), DEFAULT_BUDGET).unwrap();
        assert!(!c.hypothesis_ok);
        assert_eq!(c.fit.rank, 2);
        assert!(c.fit.plane.is_none());
    }

    #[test]
    fn scale_range_is_half_open() {
        assert_eq!(scale_range(&qi(4), 1), (4.into(), 16.into()));
        assert_eq!(scale_range(&q(3, 2), 2), (3.into(), 4.into()));
    }
}
