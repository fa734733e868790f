//! Exact replay of every inequality the construction relies on.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_traits::One;
use serde::{Deserialize, Serialize};

use super::{Mode, ParameterSchedule};
use crate::error::Result;
use crate::geometry::simplex::factorial;
use crate::numeric::power::PowerProduct;
use crate::numeric::rational::{fmt_q, qi, to_f64};
use crate::Rational;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// Epoch, 1-based; absent for global checks.
    pub k: Option<usize>,
    /// Axis, 1-based.
    pub axis: Option<usize>,
    /// Level at which the check was evaluated, if it varies.
    pub n: Option<u64>,
    pub pass: bool,
    /// Exact slack: `rhs/lhs` for power comparisons, `rhs − lhs` for integer ones.
    pub margin: String,
    pub margin_log2_approx: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleReport {
    pub mode: Mode,
    pub checks: Vec<Check>,
    pub all_pass: bool,
}

impl ScheduleReport {
    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    /// All global checks and all checks of epoch `k` pass.
    pub fn epoch_ok(&self, k: usize) -> bool {
        self.checks.iter().filter(|c| c.k.is_none() || c.k == Some(k)).all(|c| c.pass)
    }

    pub fn get(&self, name: &str, k: Option<usize>) -> Vec<&Check> {
        self.checks.iter().filter(|c| c.name == name && c.k == k).collect()
    }
}

struct Sink(Vec<Check>);

impl Sink {
    /// `lhs <= rhs` (or `<` when `strict`) for symbolic powers.
    fn power(&mut self, name: &str, k: Option<usize>, axis: Option<usize>, n: Option<u64>, lhs: &PowerProduct, rhs: &PowerProduct, strict: bool) -> Result<()> {
        let margin = rhs / lhs;
        let ord = margin.cmp_one()?;
        let pass = if strict { ord == Ordering::Greater } else { ord != Ordering::Less };
        self.0.push(Check {
            name: name.into(),
            k,
            axis,
            n,
            pass,
            margin: margin.to_string(),
            margin_log2_approx: margin.ln_approx() / std::f64::consts::LN_2,
        });
        Ok(())
    }

    fn rational(&mut self, name: &str, k: Option<usize>, lhs: &Rational, rhs: &Rational, strict: bool) {
        let diff = rhs - lhs;
        let pass = if strict { lhs < rhs } else { lhs <= rhs };
        self.0.push(Check {
            name: name.into(),
            k,
            axis: None,
            n: None,
            pass,
            margin: fmt_q(&diff),
            margin_log2_approx: to_f64(&diff),
        });
    }
}

fn pp(x: &Rational) -> Result<PowerProduct> {
    PowerProduct::from_rational(x)
}

pub fn verify_schedule(s: &ParameterSchedule) -> Result<ScheduleReport> {
    let mut out = Sink(Vec::new());
    let one = Rational::one();
    let d = s.d;
    let tau = &s.tau;
    let w = &s.w;
    let wt = &s.wtilde;

    out.rational("alpha_at_least_one", None, &one, &s.alpha, false);
    out.rational("xi_at_least_xi0", None, &s.xi0, &qi(s.xi as i64), false);
    let bound = qi(8) * Rational::from_integer(factorial(d + 1));
    out.power("r_lower_bound", None, None, None, &pp(&bound)?, &s.rpow(&(&one + &wt[0]))?, true)?;

    for k in 1..=s.k_max() {
        let e = s.epoch(k)?;
        let kk = Some(k);
        let eps_prev = s.eps(k - 1)?;
        let nk = qi(e.n as i64);
        let quarter = Rational::new(1.into(), 4.into());

        out.power("gap_below_quarter", kk, None, None, &e.gap, &pp(&quarter)?, true)?;
        out.power("gap_above_eps", kk, None, None, &eps_prev, &e.gap, true)?;
        out.power("eps_decreasing", kk, None, None, &e.eps, &eps_prev, true)?;
        // R^{n_k} >= ε_{k−1}^{−C}
        out.power("nk_lower_bound", kk, None, None, &eps_prev.powr(&-s.nk_factor.clone()), &s.rpow(&nk)?, false)?;

        let mut chain: Vec<BigInt> = vec![e.n.into()];
        chain.extend(e.ni.iter().map(|&x| BigInt::from(x)));
        let ordered = chain.windows(2).all(|p| p[0] <= p[1]) && e.top() < s.xi * e.top();
        out.0.push(Check {
            name: "index_ordering".into(),
            k: kk,
            axis: None,
            n: None,
            pass: ordered,
            margin: format!("{:?} < {}", chain, s.xi * e.top()),
            margin_log2_approx: 0.0,
        });
        if let Some(next) = s.epochs.get(k) {
            out.rational("next_epoch_separation", kk, &qi((s.xi * e.top()) as i64), &qi(next.n as i64), true);
        }

        // R^{n_k^{(1)}} <= R^{(1+τw_1−w̃_1)n_k} ε_{k−1}^d
        let lhs = s.rpow(&qi(e.ni[0] as i64))?;
        let rhs = &s.rpow(&((&one + tau * &w[0] - &wt[0]) * &nk))? * &eps_prev.powi(d as i64);
        out.power("top_scale_bound", kk, None, None, &lhs, &rhs, false)?;

        for i in 0..d {
            // R^{−(1+w̃_i)n_k^{(i)}} <= (1−c_k) ε_{k−1}^{1+τw_i} R^{−n_k(1+τw_i)}
            let ex = &one + tau * &w[i];
            let lhs = s.rpow(&(-(&one + &wt[i]) * qi(e.ni[i] as i64)))?;
            let rhs = &(&e.gap * &eps_prev.powr(&ex)) * &s.rpow(&(-&nk * &ex))?;
            out.power("gap_scale_bound", kk, Some(i + 1), None, &lhs, &rhs, false)?;
        }

        let top = qi(e.top() as i64);
        let dup = qi(2) * s.zeta(d - 1) * &nk;
        out.rational("top_index_doubling", kk, &top, &dup, false);

        let mut breaks: Vec<u64> = e.ni.clone();
        breaks.push(e.top() + 1);
        breaks.sort_unstable();
        breaks.dedup();
        for &n in &breaks {
            let term = |i: usize| -> Result<PowerProduct> {
                let m = n.max(e.ni[i]);
                Ok(&s.rpow(&(-(&one + tau * &w[i]) * qi(n as i64)))? / &s.side_pp(i, m)?)
            };
            let first = term(0)?;
            for i in 1..d {
                out.power("axis_one_dominates", kk, Some(i + 1), Some(n), &term(i)?, &first, false)?;
            }
        }

        // ρ_0^{(1)} R^{−(1+w̃_1)ξ n_k^{(d)}} < R^{−(1+τw_d)(n_k^{(d)}+1)}
        let lhs = s.side_pp(0, s.xi * e.top())?;
        let rhs = s.rpow(&(-(&one + tau * &w[d - 1]) * (&top + &one)))?;
        out.power("xi_separation", kk, None, None, &lhs, &rhs, true)?;

        let (pass, margin) = s.danger_count_bound(k, &s.eps_l7)?;
        out.0.push(Check {
            name: "danger_count_exponent".into(),
            k: kk,
            axis: None,
            n: None,
            pass,
            margin: margin.to_string(),
            margin_log2_approx: margin.ln_approx() / std::f64::consts::LN_2,
        });
        let (pass, margin) = s.danger_half_bound(k, &s.eps_l7)?;
        out.0.push(Check {
            name: "danger_half_bound".into(),
            k: kk,
            axis: None,
            n: None,
            pass,
            margin: margin.to_string(),
            margin_log2_approx: margin.ln_approx() / std::f64::consts::LN_2,
        });

        for i in 0..d {
            // ε_k^{w̃_i} R^{−n_k w̃_i} <= R^{−τw_i(n_k^{(d)}+1)}
            let lhs = &e.eps.powr(&wt[i]) * &s.rpow(&(-&nk * &wt[i]))?;
            let rhs = s.rpow(&(-(tau * &w[i]) * (&top + &one)))?;
            out.power("epoch_eps_chain", kk, Some(i + 1), None, &lhs, &rhs, false)?;
        }
    }
    let all_pass = out.0.iter().all(|c| c.pass);
    Ok(ScheduleReport { mode: s.mode, checks: out.0, all_pass })
}
