//! Weight vectors, the classical dimension formula for weighted
//! τ-approximable points, the auxiliary weights `w̃` and the lower bound
//! produced by the Cantor construction.
//!
//! All of this is plain ordered-field arithmetic, so it is written against
//! [`Scalar`] and runs exactly over [`crate::Rational`] or approximately over
//! `f64`.

use crate::error::{Error, Result, WeightError};
use crate::scalar::{sum, Scalar};

/// Ascending positive weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector<T> {
    w: Vec<T>,
}

/// Validates `raw` as a weight vector.
///
/// Components must lie in `(0, 1]`; the upper end is closed so that the
/// one-dimensional vector `(1)` is accepted.
pub fn validate_weights<T: Scalar>(raw: &[T]) -> Result<WeightVector<T>, WeightError> {
    if raw.is_empty() {
        return Err(WeightError::Empty);
    }
    for (i, wi) in raw.iter().enumerate() {
        if *wi <= T::zero() || *wi > T::one() + T::tolerance() {
            return Err(WeightError::OutOfRange { index: i + 1, value: wi.to_string() });
        }
    }
    if let Some(i) = raw.windows(2).position(|p| p[0] > p[1].clone() + T::tolerance()) {
        return Err(WeightError::NotAscending(i + 1));
    }
    let s = sum(raw);
    if !s.near(&T::one()) {
        return Err(WeightError::SumNotOne(s.to_string()));
    }
    Ok(WeightVector { w: raw.to_vec() })
}

impl<T: Scalar> WeightVector<T> {
    pub fn new(raw: &[T]) -> Result<Self, WeightError> {
        validate_weights(raw)
    }

    pub fn as_slice(&self) -> &[T] {
        &self.w
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    pub fn get(&self, i: usize) -> &T {
        &self.w[i]
    }

    /// Equal weights `(1/d, …, 1/d)`.
    pub fn equal(d: usize) -> Self {
        Self { w: vec![T::ratio(1, d as i64); d] }
    }
}

fn check_tau<T: Scalar>(tau: &T) -> Result<()> {
    if *tau <= T::one() {
        return Err(Error::TauNotAboveOne(tau.to_string()));
    }
    Ok(())
}

fn from_usize<T: Scalar>(n: usize) -> T {
    T::from_usize(n).expect("small integer")
}

#[derive(Debug, Clone, PartialEq)]
pub struct DimensionReport<T> {
    pub value: T,
    /// 1-based index of the first minimizing `k`.
    pub argmin_k: usize,
    pub per_k_values: Vec<T>,
}

/// `min_k (d + 1 + Σ_{i≤k} (τw_k − τw_i)) / (1 + τw_k)`.
pub fn rynne_dimension<T: Scalar>(w: &WeightVector<T>, tau: &T) -> Result<DimensionReport<T>> {
    check_tau(tau)?;
    let d = w.dim();
    let tw: Vec<T> = w.w.iter().map(|x| tau.clone() * x.clone()).collect();
    let per_k_values: Vec<T> = (0..d)
        .map(|k| {
            let s = (0..=k).fold(T::zero(), |acc, i| acc + tw[k].clone() - tw[i].clone());
            (from_usize::<T>(d + 1) + s) / (T::one() + tw[k].clone())
        })
        .collect();
    let (argmin, value) = argmin_first(&per_k_values);
    Ok(DimensionReport { value, argmin_k: argmin + 1, per_k_values })
}

fn argmin_first<T: Scalar>(xs: &[T]) -> (usize, T) {
    let mut best = 0;
    for (i, x) in xs.iter().enumerate() {
        if *x < xs[best] {
            best = i;
        }
    }
    (best, xs[best].clone())
}

/// `τw_i − δ(1 + τw_i)`.
fn shifted<T: Scalar>(w: &T, tau: &T, delta: &T) -> T {
    let tw = tau.clone() * w.clone();
    tw.clone() - delta.clone() * (T::one() + tw)
}

/// Every constraint placed on `δ` by the auxiliary-weight construction.
pub fn delta_admissible<T: Scalar>(w: &WeightVector<T>, tau: &T, delta: &T) -> bool {
    let d = w.dim();
    if *delta <= T::zero() {
        return false;
    }
    if *delta >= (tau.clone() - T::one()) / (tau.clone() + from_usize(d)) {
        return false;
    }
    let v: Vec<T> = w.w.iter().map(|x| shifted(x, tau, delta)).collect();
    if v.iter().any(|x| *x <= T::zero()) {
        return false;
    }
    if v.windows(2).any(|p| p[0] > p[1]) {
        return false;
    }
    let inv_d = T::one() / from_usize::<T>(d);
    if tau.clone() * w.w[0].clone() > inv_d && v[0] < inv_d {
        return false;
    }
    true
}

/// Half the largest admissible `δ` found by 40 bisection steps on
/// `(0, (τ−1)/(τ+d))`.
pub fn delta0_bound<T: Scalar>(w: &WeightVector<T>, tau: &T) -> Result<T> {
    check_tau(tau)?;
    let two = T::ratio(2, 1);
    let mut lo = T::zero();
    let mut hi = (tau.clone() - T::one()) / (tau.clone() + from_usize(w.dim()));
    for _ in 0..40 {
        let mid = (lo.clone() + hi.clone()) / two.clone();
        if delta_admissible(w, tau, &mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if lo <= T::zero() {
        return Err(Error::InvalidInput(format!("no admissible delta found for tau = {tau}")));
    }
    Ok(lo / two)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuxiliaryWeights<T> {
    pub wtilde: Vec<T>,
    /// Number of leading coordinates given by `τw_i − δ(1+τw_i)`.
    pub k: usize,
    pub delta: T,
    pub delta0: T,
}

/// The auxiliary weights `w̃` for `(w, τ, δ)`.
///
/// Besides `0 < δ <= δ_0` this requires `δ < τw_1/(1+τw_1)`, which is what
/// keeps `w̃_1` positive.
pub fn auxiliary_weights<T: Scalar>(w: &WeightVector<T>, tau: &T, delta: &T) -> Result<AuxiliaryWeights<T>> {
    check_tau(tau)?;
    let d = w.dim();
    let delta0 = delta0_bound(w, tau)?;
    let tw1 = tau.clone() * w.w[0].clone();
    let positivity = tw1.clone() / (T::one() + tw1.clone());
    if *delta <= T::zero() || *delta > delta0 || *delta >= positivity {
        let bound = if delta0 < positivity { delta0.clone() } else { positivity };
        return Err(Error::DeltaOutOfRange { delta: delta.to_string(), bound: bound.to_string() });
    }
    let v: Vec<T> = w.w.iter().map(|x| shifted(x, tau, delta)).collect();
    let inv_d = T::one() / from_usize::<T>(d);
    let (wtilde, k) = if tw1 > inv_d {
        (vec![inv_d; d], 0)
    } else {
        let expr = |h: usize| {
            let head = v[..h].iter().cloned().fold(T::zero(), |a, b| a + b);
            head + from_usize::<T>(d - h) * v[h].clone()
        };
        let k = (1..d)
            .find(|&h| expr(h) > T::one())
            .ok_or_else(|| Error::TheoremViolation(format!("no split index for w̃ with delta = {delta}")))?;
        let head = v[..k].iter().cloned().fold(T::zero(), |a, b| a + b);
        let x = (T::one() - head) / from_usize::<T>(d - k);
        let mut wt = v[..k].to_vec();
        wt.extend(std::iter::repeat(x).take(d - k));
        (wt, k)
    };
    let aux = AuxiliaryWeights { wtilde, k, delta: delta.clone(), delta0 };
    let violations = check_auxiliary(w, tau, &aux);
    if let Some(v) = violations.first() {
        return Err(Error::TheoremViolation(format!("auxiliary weights violate {v}")));
    }
    Ok(aux)
}

/// Replays the three defining conditions and the ordering of `w̃`; returns
/// the names of any that fail.
pub fn check_auxiliary<T: Scalar>(w: &WeightVector<T>, tau: &T, aux: &AuxiliaryWeights<T>) -> Vec<&'static str> {
    let d = w.dim();
    let k = aux.k;
    let wt = &aux.wtilde;
    let v: Vec<T> = w.w.iter().map(|x| shifted(x, tau, &aux.delta)).collect();
    let mut bad = Vec::new();
    if wt.len() != d || k >= d {
        bad.push("shape");
        return bad;
    }
    if (0..k).any(|i| !wt[i].near(&v[i])) {
        bad.push("tau1");
    }
    let tail_equal = (k + 1..d).all(|i| wt[i].near(&wt[k]));
    let below = wt[k] < v[k].clone() - T::tolerance();
    let above_prev = k == 0 || wt[k - 1] <= wt[k].clone() + T::tolerance();
    if !(tail_equal && below && above_prev) {
        bad.push("tau2");
    }
    if !sum(wt).near(&T::one()) {
        bad.push("tau3");
    }
    if wt.windows(2).any(|p| p[0] > p[1].clone() + T::tolerance()) || wt[0] <= T::zero() {
        bad.push("ascending");
    }
    bad
}

#[derive(Debug, Clone, PartialEq)]
pub struct FinalBound<T> {
    pub value: T,
    /// 1-based minimizing `(h, k)`, first in `h`-major order.
    pub h: usize,
    pub k: usize,
    /// Whether the minimizing `k` exceeds the split index `K` of `w̃`.
    pub k_exceeds_split: bool,
    pub aux: AuxiliaryWeights<T>,
}

/// `Σ_{i≤h} (1+w̃_i)/(1+τw_k) + d − h + k − Σ_{i≤k} (1+τw_i)/(1+τw_k)`, 1-based.
pub fn bound_term<T: Scalar>(w: &WeightVector<T>, tau: &T, wtilde: &[T], h: usize, k: usize) -> T {
    let d = w.dim();
    let den = T::one() + tau.clone() * w.w[k - 1].clone();
    let a = wtilde[..h].iter().fold(T::zero(), |acc, x| acc + (T::one() + x.clone()) / den.clone());
    let b = w.w[..k].iter().fold(T::zero(), |acc, x| acc + (T::one() + tau.clone() * x.clone()) / den.clone());
    a + from_usize::<T>(d) - from_usize::<T>(h) + from_usize::<T>(k) - b
}

/// Minimum of [`bound_term`] over `h, k ∈ 1..=d`.
pub fn final_lower_bound<T: Scalar>(w: &WeightVector<T>, tau: &T, delta: &T) -> Result<FinalBound<T>> {
    let aux = auxiliary_weights(w, tau, delta)?;
    let d = w.dim();
    let mut best: Option<(T, usize, usize)> = None;
    for h in 1..=d {
        for k in 1..=d {
            let v = bound_term(w, tau, &aux.wtilde, h, k);
            if best.as_ref().map_or(true, |(b, _, _)| v < *b) {
                best = Some((v, h, k));
            }
        }
    }
    let (value, h, k) = best.expect("d >= 1");
    Ok(FinalBound { value, h, k, k_exceeds_split: k > aux.k, aux })
}
