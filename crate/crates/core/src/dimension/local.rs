//! Local-dimension lower bounds for trial boxes in a built tree.
//!
//! For a box `B` of side `ℓ` with `ρ_1^{−(n+1)} ≤ ℓ < ρ_1^{−n}` and
//! `n_B = max{n, n_k^{(d)} + 1}`:
//! `μ(B) ≤ #{E ∈ E_{n_B} : E ∩ B ≠ ∅} / #E_{n_B}` and
//! `log_ℓ μ(B) ≥ log #E_{n_B} / ((n+1) log ρ_1) − log count / (n log ρ_1)`.

use std::io::Write;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::cantor::{level_regime, CantorTree};
use crate::error::{Error, Result};
use crate::numeric::power::{ceil_log, PowerProduct};
use crate::numeric::rational::{fmt_q, ln_q, serde_q, to_f64};
use crate::schedule::ParameterSchedule;
use crate::{QBox, Rational};

use super::profile::PiecewiseLinearProfile;

/// Profile of the schedule's `(w, τ, w̃)`.
pub fn make_profile(s: &ParameterSchedule) -> PiecewiseLinearProfile<Rational> {
    PiecewiseLinearProfile::from_weights(&s.weights(), &s.tau, &s.wtilde).expect("schedule dimensions agree")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalDimRecord {
    pub box_id: usize,
    /// Largest side of the box.
    #[serde(with = "serde_q")]
    pub ell: Rational,
    pub n: u64,
    pub n_b: u64,
    pub k: usize,
    /// Kept boxes of level `n_B` meeting `B`.
    pub count: usize,
    pub level_boxes: usize,
    #[serde(with = "serde_q")]
    pub mu_bound: Rational,
    /// Sum of `μ(E)` over the boxes counted above.
    #[serde(with = "serde_q")]
    pub mass: Rational,
    pub mu_bound_holds: bool,
    /// `log_ℓ` of `mu_bound`; absent when `B` misses the support.
    pub log_ell_mu_approx: Option<f64>,
    pub log_ell_mu_lower_approx: Option<f64>,
    /// `f(n_k / n)`.
    #[serde(with = "serde_q")]
    pub f_main_term: Rational,
    pub residual_approx: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalDimReport {
    pub schema: String,
    pub records: Vec<LocalDimRecord>,
    pub min_log_ell_mu_lower_approx: Option<f64>,
    pub max_abs_residual_approx: Option<f64>,
    pub all_bounds_hold: bool,
}

/// `n` with `ρ_1^{−(n+1)} ≤ ℓ < ρ_1^{−n}`, i.e. `ρ_1^n < 1/ℓ ≤ ρ_1^{n+1}`.
pub fn scale_index(s: &ParameterSchedule, ell: &Rational) -> Result<i64> {
    if *ell <= Rational::from_integer(0.into()) {
        return Err(Error::InvalidInput(format!("box side {} must be positive", fmt_q(ell))));
    }
    let inv = PowerProduct::from_rational(&ell.recip())?;
    let m = ceil_log(&inv, &s.rho_i[0])? - 1;
    i64::try_from(m).map_err(|_| Error::InvalidInput(format!("box side {} out of range", fmt_q(ell))))
}

/// `(n, n_B, k)` for a box of largest side `ell`, or an error when the tree
/// does not resolve that scale.
pub fn resolved_scale(t: &CantorTree, ell: &Rational) -> Result<(u64, u64, usize)> {
    let s = &t.schedule;
    let n = scale_index(s, ell)?;
    if n < 1 {
        return Err(Error::InvalidInput(format!("box side {} exceeds ρ_1^(-1)", fmt_q(ell))));
    }
    let n = n as u64;
    if n > t.depth() {
        return Err(Error::InvalidInput(format!("box side {} needs level {n} beyond depth {}", fmt_q(ell), t.depth())));
    }
    let k = level_regime(s, n)?.k;
    let n_b = if k == 0 { n } else { n.max(s.epoch(k)?.top() + 1) };
    if n_b > t.depth() {
        return Err(Error::InvalidInput(format!("box side {} needs level {n_b} beyond depth {}", fmt_q(ell), t.depth())));
    }
    Ok((n, n_b, k))
}

fn record(t: &CantorTree, prof: &PiecewiseLinearProfile<Rational>, id: usize, b: &QBox) -> Result<LocalDimRecord> {
    let s = &t.schedule;
    let ell = b.sides().into_iter().max().expect("d >= 1");
    let (n, n_b, k) = resolved_scale(t, &ell)?;
    let nk = if k == 0 { 0 } else { s.epoch(k)?.n };
    let level = &t.levels[n_b as usize];
    let hits = &t.meeting(b)[n_b as usize];
    let kept: Vec<usize> = hits.iter().copied().filter(|&j| level[j].kept).collect();
    let level_boxes = t.kept(n_b).count();
    let count = kept.len();
    let mu_bound = Rational::new(BigInt::from(count), BigInt::from(level_boxes));
    let mass: Rational = kept.iter().map(|&j| level[j].mu.clone()).sum();
    let f_main_term = prof.eval(&Rational::new(nk.into(), n.into()))?;
    let (log_mu, lower) = if count == 0 {
        (None, None)
    } else {
        let ln_rho = s.rho_i[0].ln_approx();
        let lower = (level_boxes as f64).ln() / ((n + 1) as f64 * ln_rho) - (count as f64).ln() / (n as f64 * ln_rho);
        (Some(ln_q(&mu_bound) / ln_q(&ell)), Some(lower))
    };
    Ok(LocalDimRecord {
        box_id: id,
        n,
        n_b,
        k,
        count,
        level_boxes,
        mu_bound_holds: mass <= mu_bound,
        mu_bound,
        mass,
        log_ell_mu_approx: log_mu,
        log_ell_mu_lower_approx: lower,
        residual_approx: lower.map(|v| v - to_f64(&f_main_term)),
        f_main_term,
        ell,
    })
}

pub fn local_dimension(t: &CantorTree, trial_boxes: &[QBox]) -> Result<LocalDimReport> {
    use rayon::prelude::*;
    let prof = make_profile(&t.schedule);
    let records = trial_boxes
        .par_iter()
        .enumerate()
        .map(|(i, b)| record(t, &prof, i, b))
        .collect::<Result<Vec<_>>>()?;
    let fold = |f: fn(&LocalDimRecord) -> Option<f64>, pick: fn(f64, f64) -> f64| {
        records.iter().filter_map(f).reduce(pick)
    };
    Ok(LocalDimReport {
        schema: "exactapprox.localdim/1".into(),
        min_log_ell_mu_lower_approx: fold(|r| r.log_ell_mu_lower_approx, f64::min),
        max_abs_residual_approx: fold(|r| r.residual_approx.map(f64::abs), f64::max),
        all_bounds_hold: records.iter().all(|r| r.mu_bound_holds),
        records,
    })
}

impl LocalDimReport {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "box_id,ell,n,n_B,mu_bound,log_ell_mu,f_main_term,residual")?;
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.box_id,
                fmt_q(&r.ell),
                r.n,
                r.n_b,
                fmt_q(&r.mu_bound),
                opt(r.log_ell_mu_lower_approx),
                fmt_q(&r.f_main_term),
                opt(r.residual_approx)
            )?;
        }
        Ok(())
    }
}
