//! The weighted quasi-norm `‖x‖_u = max_i |x_i|^{1/u_i}`.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::rational::fmt_q;
use crate::error::{Error, Result};
use crate::Rational;

/// Checks a weight vector for use as quasi-norm exponents: each `u_i` in `(0, 1]`.
pub fn check_norm_weights(u: &[Rational]) -> Result<()> {
    for (i, ui) in u.iter().enumerate() {
        if !ui.is_positive() || *ui > Rational::one() {
            return Err(Error::InvalidInput(format!("weight u_{} = {} is outside (0, 1]", i + 1, fmt_q(ui))));
        }
    }
    Ok(())
}

fn small_exp(e: &BigInt) -> Result<usize> {
    e.to_usize()
        .filter(|&k| k <= 1 << 16)
        .ok_or_else(|| Error::InvalidInput(format!("weight denominator/numerator {e} too large")))
}

/// Orders `|t|^{1/u}` against `c` for a single axis, with `u = a/b`:
/// `|t|^{b/a}` vs `c` is `|t|^b` vs `c^a`.
pub fn axis_cmp(t: &Rational, u: &Rational, c: &Rational) -> Result<Ordering> {
    let a = small_exp(u.numer())?;
    let b = small_exp(u.denom())?;
    let lhs = num_traits::pow(t.abs(), b);
    let rhs = num_traits::pow(c.clone(), a);
    Ok(lhs.cmp(&rhs))
}

/// Exact ordering of `‖x‖_u` against a positive rational `c`.
pub fn weighted_norm_cmp(x: &[Rational], u: &[Rational], c: &Rational) -> Result<Ordering> {
    if x.len() != u.len() {
        return Err(Error::DimensionMismatch { expected: u.len(), got: x.len() });
    }
    check_norm_weights(u)?;
    if !c.is_positive() {
        return Err(Error::InvalidInput(format!("norm bound must be positive, got {}", fmt_q(c))));
    }
    let mut out = Ordering::Less;
    for (xi, ui) in x.iter().zip(u) {
        out = out.max(axis_cmp(xi, ui, c)?);
        if out == Ordering::Greater {
            break;
        }
    }
    Ok(out)
}

/// `‖x‖_u` truncated to `precision` decimal digits.
///
/// The result `t` satisfies `t <= ‖x‖_u < t + 10^{-precision}` exactly, so it
/// never contradicts [`weighted_norm_cmp`] at that resolution.
pub fn weighted_norm_approx(x: &[Rational], u: &[Rational], precision: u32) -> Result<Rational> {
    if x.len() != u.len() {
        return Err(Error::DimensionMismatch { expected: u.len(), got: x.len() });
    }
    check_norm_weights(u)?;
    let scale = num_traits::pow(BigInt::from(10u32), precision as usize);
    let mut best = BigInt::zero();
    for (xi, ui) in x.iter().zip(u) {
        let a = small_exp(ui.numer())?;
        let b = small_exp(ui.denom())?;
        // floor(|x|^{b/a} * 10^P) = floor((|x|^b * 10^{Pa})^{1/a})
        let inner = num_traits::pow(xi.abs(), b) * Rational::from_integer(num_traits::pow(scale.clone(), a));
        let m = inner.floor().to_integer().nth_root(a as u32);
        if m > best {
            best = m;
        }
    }
    Ok(Rational::new(best, scale))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rational::{q, qv};

    #[test]
    fn definition_examples() {
        let u = qv(&[(1, 2), (1, 2)]);
        assert_eq!(weighted_norm_cmp(&qv(&[(0, 1), (0, 1)]), &u, &q(1, 1)).unwrap(), Ordering::Less);
        assert_eq!(weighted_norm_cmp(&qv(&[(1, 4), (1, 2)]), &u, &q(1, 4)).unwrap(), Ordering::Equal);
        assert_eq!(weighted_norm_cmp(&qv(&[(1, 2)]), &qv(&[(1, 1)]), &q(1, 3)).unwrap(), Ordering::Greater);
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(weighted_norm_cmp(&qv(&[(1, 2)]), &qv(&[(3, 2)]), &q(1, 1)).is_err());
        assert!(weighted_norm_cmp(&qv(&[(1, 2)]), &qv(&[(0, 1)]), &q(1, 1)).is_err());
        assert!(weighted_norm_cmp(&qv(&[(1, 2)]), &qv(&[(1, 1)]), &q(0, 1)).is_err());
    }

    #[test]
    fn approx_examples() {
        let v = weighted_norm_approx(&qv(&[(1, 4), (1, 2)]), &qv(&[(1, 2), (1, 2)]), 10).unwrap();
        assert_eq!(v, q(1, 4));
        assert_eq!(weighted_norm_approx(&qv(&[(0, 1)]), &qv(&[(1, 1)]), 5).unwrap(), q(0, 1));
        // max{(1/2)^3, (1/3)^{3/2}} = max{0.125, 0.19245...} = 0.19245008972987...
        let v = weighted_norm_approx(&qv(&[(1, 2), (1, 3)]), &qv(&[(1, 3), (2, 3)]), 12).unwrap();
        let expect = (1.0f64 / 3.0).powf(1.5);
        assert!((crate::numeric::rational::to_f64(&v) - expect).abs() < 1e-12);
    }
}
