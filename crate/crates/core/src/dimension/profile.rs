//! The piecewise-linear function
//! `f(x) = Σ_i min{L_i x, 1} + max{1 − ζ_i L_i x, 0}` on `[0, 1]`, where
//! `L_i = log ρ_i / log ρ_1 = (1+w̃_i)/(1+w̃_1)` and `ζ_i = (1+τw_i)/(1+w̃_i)`,
//! and its exact minimization over the `d` candidate points `1/(ζ_k L_k)`.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::weights::WeightVector;

#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearProfile<T> {
    pub d: usize,
    /// `L_i = (1+w̃_i)/(1+w̃_1)`, ascending, `L_1 = 1`.
    pub log_rho_ratios: Vec<T>,
    /// `ζ_i = (1+τw_i)/(1+w̃_i)`.
    pub zeta: Vec<T>,
    /// Endpoints `1/L_1 ≥ … ≥ 1/L_d ≥ 0` of the intervals `I_h = (1/L_{h+1}, 1/L_h]`.
    pub i_breaks: Vec<T>,
    /// Endpoints `1 = 1/(ζ_0 L_0) ≥ 1/(ζ_1 L_1) ≥ … ≥ 1/(ζ_d L_d) ≥ 0` of
    /// the intervals `J_k`.
    pub j_breaks: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileMin<T> {
    pub value: T,
    /// 1-based index of the first minimizing candidate.
    pub argmin_k: usize,
    pub x_star: T,
    pub candidates: Vec<(T, T)>,
    /// Whether every `m_{h,k}` is non-decreasing in `h`.
    pub slopes_ordered: bool,
}

impl<T: Scalar> PiecewiseLinearProfile<T> {
    pub fn from_weights(w: &WeightVector<T>, tau: &T, wtilde: &[T]) -> Result<Self> {
        let d = w.dim();
        if wtilde.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: wtilde.len() });
        }
        let base = T::one() + wtilde[0].clone();
        let log_rho_ratios: Vec<T> = wtilde.iter().map(|x| (T::one() + x.clone()) / base.clone()).collect();
        let zeta: Vec<T> = (0..d)
            .map(|i| (T::one() + tau.clone() * w.get(i).clone()) / (T::one() + wtilde[i].clone()))
            .collect();
        let i_breaks = log_rho_ratios.iter().map(|l| T::one() / l.clone()).collect();
        let mut j_breaks = vec![T::one()];
        j_breaks.extend((0..d).map(|i| T::one() / (zeta[i].clone() * log_rho_ratios[i].clone())));
        Ok(Self { d, log_rho_ratios, zeta, i_breaks, j_breaks })
    }

    fn check_x(&self, x: &T) -> Result<()> {
        if *x < T::zero() || *x > T::one() {
            return Err(Error::InvalidInput(format!("profile argument {x} outside [0, 1]")));
        }
        Ok(())
    }

    pub fn eval(&self, x: &T) -> Result<T> {
        self.check_x(x)?;
        let mut acc = T::zero();
        for i in 0..self.d {
            let l = self.log_rho_ratios[i].clone() * x.clone();
            acc = acc + T::min_of(l, T::one());
            let z = T::one() - self.zeta[i].clone() * self.log_rho_ratios[i].clone() * x.clone();
            acc = acc + T::max_of(z, T::zero());
        }
        Ok(acc)
    }

    /// Slope `m_{h,k} = Σ_{i≤h} L_i − Σ_{i≤k} ζ_i L_i` (1-based `h`, `k` may be 0).
    pub fn slope(&self, h: usize, k: usize) -> T {
        let a = self.log_rho_ratios[..h].iter().fold(T::zero(), |s, x| s + x.clone());
        let b = (0..k).fold(T::zero(), |s, i| s + self.zeta[i].clone() * self.log_rho_ratios[i].clone());
        a - b
    }

    /// The line `f_{h,k}(x) = k + d − h + m_{h,k} x`.
    pub fn segment(&self, h: usize, k: usize, x: &T) -> T {
        let c = T::from_usize(k + self.d - h).expect("small");
        c + self.slope(h, k) * x.clone()
    }

    /// `(h, k)` with `x ∈ I_h ∩ J_k`, for `x ∈ (0, 1]`.
    pub fn locate(&self, x: &T) -> Result<(usize, usize)> {
        self.check_x(x)?;
        if *x <= T::zero() {
            return Err(Error::InvalidInput("locate needs x > 0".into()));
        }
        let h = (0..self.d).filter(|&i| self.log_rho_ratios[i].clone() * x.clone() <= T::one()).count();
        let k = (0..self.d)
            .filter(|&i| self.zeta[i].clone() * self.log_rho_ratios[i].clone() * x.clone() <= T::one())
            .count();
        Ok((h.max(1), k))
    }

    /// Minimum of `f` over `[0, 1]`, evaluated at the candidate points.
    pub fn minimize(&self) -> ProfileMin<T> {
        let candidates: Vec<(T, T)> = (1..=self.d)
            .map(|k| {
                let x = self.j_breaks[k].clone();
                let v = self.eval(&x).expect("candidate in [0,1]");
                (x, v)
            })
            .collect();
        let mut best = 0;
        for (i, c) in candidates.iter().enumerate() {
            if c.1 < candidates[best].1 {
                best = i;
            }
        }
        let slopes_ordered = (0..=self.d).all(|k| (1..self.d).all(|h| self.slope(h, k) <= self.slope(h + 1, k)));
        ProfileMin {
            value: candidates[best].1.clone(),
            argmin_k: best + 1,
            x_star: candidates[best].0.clone(),
            candidates,
            slopes_ordered,
        }
    }

    /// Largest `|m_{h,k}|`, a Lipschitz constant for `f`.
    pub fn max_abs_slope(&self) -> T {
        let mut m = T::zero();
        for h in 1..=self.d {
            for k in 0..=self.d {
                m = T::max_of(m, self.slope(h, k).abs());
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rational::{q, qi, qv};
    use crate::weights::{auxiliary_weights, rynne_dimension, validate_weights};
    use crate::Rational;

    fn profile(w: &[(i64, i64)], tau: Rational, delta: Rational) -> PiecewiseLinearProfile<Rational> {
        let w = validate_weights(&qv(w)).unwrap();
        let aux = auxiliary_weights(&w, &tau, &delta).unwrap();
        PiecewiseLinearProfile::from_weights(&w, &tau, &aux.wtilde).unwrap()
    }

    #[test]
    fn equal_weights_profile() {
        let p = profile(&[(1, 2), (1, 2)], qi(2), q(1, 10));
        assert_eq!(p.log_rho_ratios, vec![qi(1), qi(1)]);
        assert_eq!(p.zeta, vec![q(4, 3), q(4, 3)]);
        assert_eq!(p.j_breaks[1], q(3, 4));
        assert_eq!(p.eval(&q(3, 4)).unwrap(), q(3, 2));
        assert_eq!(p.eval(&qi(0)).unwrap(), qi(2));
        assert_eq!(p.eval(&qi(1)).unwrap(), qi(2));
        let m = p.minimize();
        assert_eq!((m.value, m.x_star), (q(3, 2), q(3, 4)));
        assert!(m.slopes_ordered);
    }

    #[test]
    fn one_dimensional_closed_form() {
        let tau = qi(3);
        let p = profile(&[(1, 1)], tau.clone(), q(1, 10));
        let m = p.minimize();
        assert_eq!(m.x_star, q(2, 1) / (qi(1) + &tau));
        assert_eq!(m.value, q(2, 1) / (qi(1) + &tau));
        let w = validate_weights(&qv(&[(1, 1)])).unwrap();
        assert_eq!(m.value, rynne_dimension(&w, &tau).unwrap().value);
    }

    #[test]
    fn segments_match_f_where_located() {
        let p = profile(&[(1, 5), (4, 5)], q(3, 2), q(1, 100));
        for j in 1..=50 {
            let x = q(j, 50);
            let (h, k) = p.locate(&x).unwrap();
            assert_eq!(p.segment(h, k, &x), p.eval(&x).unwrap(), "x = {x}");
        }
    }

    #[test]
    fn rejects_outside_unit_interval() {
        let p = profile(&[(1, 2), (1, 2)], qi(2), q(1, 10));
        assert!(p.eval(&q(3, 2)).is_err());
        assert!(p.eval(&q(-1, 2)).is_err());
    }
}
