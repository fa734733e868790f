//! Parameter schedules: the constants of the construction and the epoch
//! sequences `n_k`, `n_k^{(i)}`, `ε_k`, `c_k`.
//!
//! Faithful mode derives everything from `(w, τ, δ)` and keeps irrational
//! powers symbolic. Toy mode takes user overrides so that a tree can be
//! built at desk scale; anything a toy value breaks shows up in
//! [`verify_schedule`] instead of being enforced.

pub mod verify;

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::simplex::factorial;
use crate::numeric::power::{ceil_log, floor_log, PowerProduct};
use crate::numeric::rational::{fmt_q, qi, serde_q};
use crate::weights::{auxiliary_weights, AuxiliaryWeights};
use crate::{Rational, Weights};

pub use verify::{verify_schedule, Check, ScheduleReport};

/// Bisection steps used to pick the default danger exponent `ε_L7`.
const EPS_L7_STEPS: u32 = 40;
/// How many times faithful mode may double `R` before giving up.
const MAX_R_DOUBLINGS: u32 = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Faithful,
    Toy,
}

/// One epoch `k >= 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Epoch {
    pub k: usize,
    pub n: u64,
    /// `n_k^{(1)} <= … <= n_k^{(d)}`.
    pub ni: Vec<u64>,
    /// `ε_k`.
    pub eps: PowerProduct,
    /// `1 − c_k`, kept symbolic because `ε_{k−1}` may be irrational.
    pub gap: PowerProduct,
    /// `c_k` when it is rational.
    #[serde(with = "serde_q::opt")]
    pub c: Option<Rational>,
}

impl Epoch {
    pub fn top(&self) -> u64 {
        *self.ni.last().expect("d >= 1")
    }
}

/// Constants that depend only on `(w, τ, δ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseConstants {
    pub w: Weights,
    pub tau: Rational,
    pub aux: AuxiliaryWeights<Rational>,
    pub alpha: Rational,
    pub alpha_prime: Rational,
    pub xi0: Rational,
    pub xi: u64,
    /// The factor multiplying `−log_R ε_{k−1}` in the lower bound for `n_k`.
    pub nk_factor: Rational,
    /// Smallest power of two with `R^{1+w̃_1} > 8(d+1)!`.
    pub r_min: Rational,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSchedule {
    pub schema: String,
    pub mode: Mode,
    pub d: usize,
    #[serde(with = "serde_q::vec")]
    pub w: Vec<Rational>,
    #[serde(with = "serde_q")]
    pub tau: Rational,
    #[serde(with = "serde_q")]
    pub delta: Rational,
    #[serde(with = "serde_q::vec")]
    pub wtilde: Vec<Rational>,
    pub split_k: usize,
    #[serde(with = "serde_q")]
    pub r: Rational,
    pub r_doublings: u32,
    pub xi: u64,
    #[serde(with = "serde_q")]
    pub xi0: Rational,
    #[serde(with = "serde_q")]
    pub alpha: Rational,
    #[serde(with = "serde_q")]
    pub alpha_prime: Rational,
    #[serde(with = "serde_q")]
    pub nk_factor: Rational,
    pub eps0: PowerProduct,
    /// Exponent slack in the danger-count threshold.
    #[serde(with = "serde_q")]
    pub eps_l7: Rational,
    pub rho0: Vec<PowerProduct>,
    /// `ρ_i = R^{1+w̃_i}`.
    pub rho_i: Vec<PowerProduct>,
    /// `⌊ρ_i⌋`.
    pub rho_floor: Vec<u64>,
    /// `ρ = Π ⌊ρ_i⌋`.
    #[serde(with = "serde_q::int")]
    pub rho: BigInt,
    pub epochs: Vec<Epoch>,
}

/// Toy-mode overrides. Empty lists and `None` fall back to the formulas,
/// evaluated on whatever has been overridden so far.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ToyOverrides {
    pub r: Option<Rational>,
    pub eps0: Option<Rational>,
    pub rho0: Option<Vec<Rational>>,
    pub xi: Option<u64>,
    pub n: Vec<u64>,
    pub ni: Vec<Vec<u64>>,
    pub eps: Vec<Rational>,
    pub c: Vec<Rational>,
    pub eps_l7: Option<Rational>,
}

pub const SCHEDULE_SCHEMA: &str = "exactapprox.schedule/1";

fn pp(x: &Rational) -> Result<PowerProduct> {
    PowerProduct::from_rational(x)
}

fn to_u64(n: &BigInt, what: &str) -> Result<u64> {
    n.to_u64().ok_or_else(|| Error::InvalidInput(format!("{what} = {n} is not a non-negative 64-bit integer")))
}

pub fn base_constants(w: &Weights, tau: &Rational, delta: &Rational) -> Result<BaseConstants> {
    let aux = auxiliary_weights(w, tau, delta)?;
    let d = w.dim();
    let one = Rational::one();
    let wt = &aux.wtilde;
    let alpha = (0..d).map(|i| tau * w.get(i) / &wt[i]).max().expect("d >= 1");
    let w1 = w.get(0);
    let alpha_prime = (0..d).map(|i| w.get(i) - w1).filter(|x| !x.is_zero()).min().unwrap_or_else(|| one.clone());
    let xi0 = (&one + tau * w.get(d - 1)) / (&one + &wt[0]) + &one;
    let xi = to_u64(&(xi0.floor().to_integer() + 1), "xi")?;
    let zeta1 = (&one + tau * w1) / (&one + &wt[0]);
    let first = (zeta1 * qi(2) + qi(d as i64 + 1))
        / (&alpha_prime * (tau * w1 - &wt[0]) * (&one - &one / (&one + &wt[0])));
    let nk_factor = first.max(qi(4)).max(qi(2) / (tau - &one));
    let bound = qi(8) * Rational::from_integer(factorial(d + 1));
    let mut r_min = qi(2);
    while PowerProduct::pow_of(&r_min, &(&one + &wt[0]))?.cmp_rational(&bound)? != Ordering::Greater {
        r_min *= qi(2);
    }
    Ok(BaseConstants { w: w.clone(), tau: tau.clone(), aux, alpha, alpha_prime, xi0, xi, nk_factor, r_min })
}

/// The epoch formulas, parametrized by everything that toy mode may replace.
struct Assembly<'a> {
    base: &'a BaseConstants,
    r: Rational,
    xi: u64,
    eps0: PowerProduct,
    rho0: Vec<PowerProduct>,
    over: &'a ToyOverrides,
}

impl Assembly<'_> {
    fn rpow(&self, e: &Rational) -> Result<PowerProduct> {
        PowerProduct::pow_of(&self.r, e)
    }

    fn zeta(&self, i: usize) -> Rational {
        let one = Rational::one();
        (&one + &self.base.tau * self.base.w.get(i)) / (&one + &self.base.aux.wtilde[i])
    }

    fn default_gap(eps_prev: &PowerProduct) -> Result<PowerProduct> {
        let twice = eps_prev.mul_rational(&qi(2))?;
        if twice.cmp_rational(&Rational::new(1.into(), 4.into()))? == Ordering::Less {
            Ok(twice)
        } else {
            pp(&Rational::new(1.into(), 8.into()))
        }
    }

    fn epochs(&self, k_max: usize) -> Result<Vec<Epoch>> {
        let d = self.base.w.dim();
        let one = Rational::one();
        let r_pp = pp(&self.r)?;
        let mut out: Vec<Epoch> = Vec::with_capacity(k_max);
        let mut eps_prev = self.eps0.clone();
        let mut top_prev = 0u64;
        for k in 1..=k_max {
            let n = match self.over.n.get(k - 1) {
                Some(&n) => n,
                None => {
                    let by_eps = ceil_log(&eps_prev.powr(&-self.base.nk_factor.clone()), &r_pp)?;
                    let by_sep = BigInt::from(self.xi) * BigInt::from(top_prev) + 1;
                    to_u64(&by_eps.max(by_sep).max(BigInt::one()), "n_k")?
                }
            };
            let ni = match self.over.ni.get(k - 1) {
                Some(v) => {
                    if v.len() != d {
                        return Err(Error::DimensionMismatch { expected: d, got: v.len() });
                    }
                    if v.windows(2).any(|p| p[0] > p[1]) {
                        return Err(Error::InvalidInput(format!("n_{k}^(i) must be ascending in i, got {v:?}")));
                    }
                    v.clone()
                }
                None => {
                    let mut v = Vec::with_capacity(d);
                    for i in 0..d {
                        let z = self.zeta(i);
                        let target = &self.rpow(&(&z * qi(n as i64)))? * &eps_prev.powr(&(-qi(2) * &z));
                        v.push(to_u64(&(floor_log(&target, &r_pp)? + 1), "n_k^(i)")?);
                    }
                    v
                }
            };
            let top = *ni.last().expect("d >= 1");
            let (gap, c) = match self.over.c.get(k - 1) {
                Some(c) => {
                    if !c.is_positive() || *c >= one {
                        return Err(Error::InvalidInput(format!("c_{k} = {} must lie in (0, 1)", fmt_q(c))));
                    }
                    (pp(&(&one - c))?, Some(c.clone()))
                }
                None => {
                    let gap = Self::default_gap(&eps_prev)?;
                    let c = gap.to_rational().map(|g| &one - g);
                    (gap, c)
                }
            };
            let eps = match self.over.eps.get(k - 1) {
                Some(e) => {
                    if !e.is_positive() {
                        return Err(Error::InvalidInput(format!("eps_{k} must be positive")));
                    }
                    pp(e)?
                }
                None => {
                    let w1 = self.base.w.get(0);
                    let two = PowerProduct::pow_of(&qi(2), &-(&one / (w1 * &self.base.aux.wtilde[0])))?;
                    let e = &self.base.alpha * qi(top as i64 + 1) - qi(n as i64);
                    &two * &self.rpow(&-e)?
                }
            };
            out.push(Epoch { k, n, ni, eps: eps.clone(), gap, c });
            eps_prev = eps;
            top_prev = top;
        }
        Ok(out)
    }

    fn finish(&self, mode: Mode, k_max: usize, eps_l7: Option<Rational>, r_doublings: u32) -> Result<ParameterSchedule> {
        let base = self.base;
        let d = base.w.dim();
        let one = Rational::one();
        let rho_i: Vec<PowerProduct> =
            base.aux.wtilde.iter().map(|x| self.rpow(&(&one + x))).collect::<Result<_>>()?;
        let rho_floor: Vec<u64> =
            rho_i.iter().map(|p| p.floor().and_then(|f| to_u64(&f, "floor(rho_i)"))).collect::<Result<_>>()?;
        let rho = rho_floor.iter().map(|&x| BigInt::from(x)).product();
        let mut s = ParameterSchedule {
            schema: SCHEDULE_SCHEMA.into(),
            mode,
            d,
            w: base.w.as_slice().to_vec(),
            tau: base.tau.clone(),
            delta: base.aux.delta.clone(),
            wtilde: base.aux.wtilde.clone(),
            split_k: base.aux.k,
            r: self.r.clone(),
            r_doublings,
            xi: self.xi,
            xi0: base.xi0.clone(),
            alpha: base.alpha.clone(),
            alpha_prime: base.alpha_prime.clone(),
            nk_factor: base.nk_factor.clone(),
            eps0: self.eps0.clone(),
            eps_l7: Rational::zero(),
            rho0: self.rho0.clone(),
            rho_i,
            rho_floor,
            rho,
            epochs: self.epochs(k_max)?,
        };
        s.eps_l7 = match eps_l7 {
            Some(e) => e,
            None => s.default_eps_l7()?.unwrap_or_else(|| Rational::new(1.into(), 2.into())),
        };
        Ok(s)
    }
}

/// Builds a schedule with `k_max` epochs. In toy mode `over.r` is required
/// and `k_max` is raised to cover every overridden epoch.
pub fn build_schedule(
    w: &Weights,
    tau: &Rational,
    delta: &Rational,
    k_max: usize,
    mode: Mode,
    over: &ToyOverrides,
) -> Result<ParameterSchedule> {
    if k_max == 0 && over.n.is_empty() {
        return Err(Error::InvalidInput("a schedule needs at least one epoch".into()));
    }
    let base = base_constants(w, tau, delta)?;
    let d = w.dim();
    let one = Rational::one();
    let fact = Rational::from_integer(factorial(d + 1));
    let formulas = |r: &Rational| -> Result<(PowerProduct, Vec<PowerProduct>)> {
        let wt1 = &base.aux.wtilde[0];
        let eps0 = &PowerProduct::pow_of(r, &(qi(-2) * (&one + &one / wt1)))? * &PowerProduct::pow_of(&fact, &-(&one / wt1))?;
        let rho0 = base
            .aux
            .wtilde
            .iter()
            .map(|x| PowerProduct::pow_of(r, &-(&one + x))?.mul_rational(&(&one / &fact)))
            .collect::<Result<_>>()?;
        Ok((eps0, rho0))
    };
    match mode {
        Mode::Faithful => {
            if *over != ToyOverrides::default() {
                return Err(Error::InvalidInput("faithful mode takes no overrides".into()));
            }
            let mut r = base.r_min.clone();
            for doublings in 0..=MAX_R_DOUBLINGS {
                let (eps0, rho0) = formulas(&r)?;
                let asm = Assembly { base: &base, r: r.clone(), xi: base.xi, eps0, rho0, over };
                let s = asm.finish(mode, k_max, Some(Rational::zero()), doublings)?;
                if let Some(e) = s.default_eps_l7()? {
                    if (1..=k_max).map(|k| s.danger_half_bound(k, &e)).collect::<Result<Vec<_>>>()?.iter().all(|c| c.0) {
                        return Ok(ParameterSchedule { eps_l7: e, ..s });
                    }
                }
                r *= qi(2);
            }
            Err(Error::NotFound(format!("no R up to 2^{MAX_R_DOUBLINGS} times the minimum satisfies the danger-count bounds")))
        }
        Mode::Toy => {
            let r = over.r.clone().ok_or_else(|| Error::InvalidInput("toy mode needs R".into()))?;
            if r <= one {
                return Err(Error::InvalidInput(format!("R = {} must exceed 1", fmt_q(&r))));
            }
            let (mut eps0, mut rho0) = formulas(&r)?;
            if let Some(e) = &over.eps0 {
                if !e.is_positive() {
                    return Err(Error::InvalidInput("eps0 must be positive".into()));
                }
                eps0 = pp(e)?;
            }
            if let Some(v) = &over.rho0 {
                if v.len() != d {
                    return Err(Error::DimensionMismatch { expected: d, got: v.len() });
                }
                if v.iter().any(|x| !x.is_positive() || *x > one) {
                    return Err(Error::InvalidInput("rho0 entries must lie in (0, 1]".into()));
                }
                rho0 = v.iter().map(pp).collect::<Result<_>>()?;
            }
            if over.xi == Some(0) {
                return Err(Error::InvalidInput("xi must be positive".into()));
            }
            let xi = over.xi.unwrap_or(base.xi);
            let k_max = k_max.max(over.n.len()).max(over.ni.len()).max(over.eps.len()).max(over.c.len());
            let asm = Assembly { base: &base, r, xi, eps0, rho0, over };
            asm.finish(mode, k_max, over.eps_l7.clone(), 0)
        }
    }
}

impl ParameterSchedule {
    pub fn weights(&self) -> Weights {
        Weights::new(&self.w).expect("validated at construction")
    }

    pub fn k_max(&self) -> usize {
        self.epochs.len()
    }

    /// Epoch `k` (1-based).
    pub fn epoch(&self, k: usize) -> Result<&Epoch> {
        k.checked_sub(1)
            .and_then(|j| self.epochs.get(j))
            .ok_or_else(|| Error::InvalidInput(format!("epoch {k} is outside 1..={}", self.k_max())))
    }

    /// `n_k^{(d)}`, with `n_0^{(d)} = 0`.
    pub fn top(&self, k: usize) -> Result<u64> {
        if k == 0 {
            return Ok(0);
        }
        Ok(self.epoch(k)?.top())
    }

    /// `ε_k`, with `ε_0` for `k = 0`.
    pub fn eps(&self, k: usize) -> Result<PowerProduct> {
        if k == 0 {
            return Ok(self.eps0.clone());
        }
        Ok(self.epoch(k)?.eps.clone())
    }

    pub fn zeta(&self, i: usize) -> Rational {
        let one = Rational::one();
        (&one + &self.tau * &self.w[i]) / (&one + &self.wtilde[i])
    }

    pub fn rpow(&self, e: &Rational) -> Result<PowerProduct> {
        PowerProduct::pow_of(&self.r, e)
    }

    /// `ρ_0^{(i)} R^{−(1+w̃_i) m}`.
    pub fn side_pp(&self, i: usize, m: u64) -> Result<PowerProduct> {
        Ok(&self.rho0[i] * &self.rpow(&(-(Rational::one() + &self.wtilde[i]) * qi(m as i64)))?)
    }

    /// Exact side for toy geometry; errors if irrational.
    pub fn side(&self, i: usize, m: u64) -> Result<Rational> {
        let p = self.side_pp(i, m)?;
        p.to_rational().ok_or_else(|| Error::Irrational(format!("side length {p} on axis {}", i + 1)))
    }

    pub fn rho0_rational(&self) -> Result<Vec<Rational>> {
        self.rho0
            .iter()
            .map(|p| p.to_rational().ok_or_else(|| Error::Irrational(format!("rho0 = {p}"))))
            .collect()
    }

    /// Largest dyadic `ε` in `(0, 1)` found by bisection that passes the
    /// danger-count bound at every epoch, or `None`.
    pub fn default_eps_l7(&self) -> Result<Option<Rational>> {
        let mut lo = Rational::zero();
        let mut hi = Rational::one();
        let passes = |e: &Rational| -> Result<bool> {
            for k in 1..=self.k_max() {
                // Near the threshold the comparison may be undecidable within
                // budget; only provable passes count.
                match self.danger_count_bound(k, e) {
                    Ok((true, _)) => {}
                    Ok((false, _)) | Err(Error::Undecided(_)) => return Ok(false),
                    Err(err) => return Err(err),
                }
            }
            Ok(true)
        };
        for _ in 0..EPS_L7_STEPS {
            let mid = (&lo + &hi) / qi(2);
            if passes(&mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok((!lo.is_zero()).then_some(lo))
    }

    /// `α_k = ξ n_k^{(d)} − n_k^{(d)} − 1`.
    pub fn alpha_k(&self, k: usize) -> Result<i64> {
        let top = self.top(k)? as i64;
        Ok(self.xi as i64 * top - top - 1)
    }

    /// `ρ^{−α_k(1−ε)} <= 2^{−(3d+1)} ρ_0^{(1)} R^{(τw_1−w̃_1)n_k^{(1)}} R^{−(d+1)α_k}`;
    /// returns `(pass, rhs/lhs)`.
    pub fn danger_count_bound(&self, k: usize, eps: &Rational) -> Result<(bool, PowerProduct)> {
        let one = Rational::one();
        let a = qi(self.alpha_k(k)?);
        let rho = pp(&Rational::from_integer(self.rho.clone()))?;
        let lhs = rho.powr(&(-&a * (&one - eps)));
        let n1 = qi(self.epoch(k)?.ni[0] as i64);
        let rhs = PowerProduct::pow_of(&qi(2), &-qi(3 * self.d as i64 + 1))?
            * self.rho0[0].clone()
            * self.rpow(&((&self.tau * &self.w[0] - &self.wtilde[0]) * n1))?
            * self.rpow(&(-qi(self.d as i64 + 1) * &a))?;
        let margin = &rhs / &lhs;
        Ok((margin.cmp_one()? != Ordering::Less, margin))
    }

    /// `ρ^{−α_k ε/2} <= 1/2`; returns `(pass, (1/2)/lhs)`.
    pub fn danger_half_bound(&self, k: usize, eps: &Rational) -> Result<(bool, PowerProduct)> {
        let a = qi(self.alpha_k(k)?);
        let rho = pp(&Rational::from_integer(self.rho.clone()))?;
        let lhs = rho.powr(&(-a * eps / qi(2)));
        let margin = &pp(&Rational::new(1.into(), 2.into()))? / &lhs;
        Ok((margin.cmp_one()? != Ordering::Less, margin))
    }

    /// The danger-count removal threshold `ρ^{(ξn_k^{(d)} − l)(1 − ε_L7/2)}`.
    pub fn danger_threshold(&self, k: usize, l: u64) -> Result<PowerProduct> {
        let rem = qi(self.xi as i64 * self.top(k)? as i64 - l as i64);
        let rho = pp(&Rational::from_integer(self.rho.clone()))?;
        Ok(rho.powr(&(rem * (Rational::one() - &self.eps_l7 / qi(2)))))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let v: Self = serde_json::from_str(s)?;
        if v.schema != SCHEDULE_SCHEMA {
            return Err(Error::Parse(format!("unknown schedule schema {:?}", v.schema)));
        }
        Ok(v)
    }
}

#[cfg(test)]
mod tests;
