//! Replays of the tree's structural, pointwise and counting properties.
//!
//! Pointwise checks run the per-axis interval form of each inequality over
//! the closed box, so a pass covers every point of the box.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::refine::{danger_cells, intersection};
use super::{level_regime, level_sides, CantorTree, CaseTag};
use crate::error::{Error, Result};
use crate::numeric::dangerous::{enumerate_near, AxisThreshold, EpsBall, TauBall};
use crate::numeric::power::PowerProduct;
use crate::numeric::quasinorm::weighted_norm_cmp;
use crate::numeric::rational::{ceil_int, fmt_q, pow_q, qi, serde_q, RationalVector};
use crate::schedule::{ParameterSchedule, ScheduleReport};
use crate::{QBox, Rational};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureCheck {
    pub name: String,
    pub level: u64,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    pub checks: Vec<StructureCheck>,
    pub all_pass: bool,
}

/// Side lengths, nesting, disjointness, anchor offsets, measure and the
/// danger-region clearance.
pub fn verify_structure(t: &CantorTree) -> Result<StructureReport> {
    let s = &t.schedule;
    let mut checks = Vec::new();
    let mut push = |name: &str, level: u64, bad: Option<String>| {
        checks.push(StructureCheck { name: name.into(), level, pass: bad.is_none(), detail: bad.unwrap_or_default() });
    };
    for (l, level) in t.levels.iter().enumerate() {
        let l64 = l as u64;
        let sides = level_sides(s, l64)?;
        push("side_lengths", l64, level.iter().position(|n| n.to_box().sides() != sides).map(|j| format!("node {j}")));

        let mut total = Rational::zero();
        let mut bad_mu = None;
        for (j, n) in level.iter().enumerate() {
            if n.kept {
                total += &n.mu;
            } else if !n.mu.is_zero() {
                bad_mu = Some(format!("node {j} carries mass but is not kept"));
            }
            if l + 1 < t.levels.len() && n.kept {
                let kids: Vec<&super::CantorNode> = n.children.iter().map(|&c| &t.levels[l + 1][c]).filter(|c| c.kept).collect();
                let share = &n.mu / Rational::from_integer(BigInt::from(kids.len().max(1)));
                if kids.is_empty() || kids.iter().any(|c| c.mu != share) {
                    bad_mu = Some(format!("node {j} does not split its mass equally"));
                }
            }
        }
        if total != Rational::one() {
            bad_mu = Some(format!("mass sums to {}", fmt_q(&total)));
        }
        push("measure", l64, bad_mu);

        if l == 0 {
            continue;
        }
        let parents = &t.levels[l - 1];
        let mut bad_nest = None;
        let mut bad_disjoint = None;
        for (j, p) in parents.iter().enumerate() {
            let pb = p.to_box();
            let kids: Vec<QBox> = p.children.iter().map(|&c| level[c].to_box()).collect();
            if p.children.iter().any(|&c| level[c].parent != Some(j)) || kids.iter().any(|k| !pb.contains_box(k)) {
                bad_nest = Some(format!("parent {j}"));
            }
            for a in 0..kids.len() {
                for b in a + 1..kids.len() {
                    if kids[a].meets_half_open(&kids[b]) {
                        bad_disjoint = Some(format!("children of parent {j}"));
                    }
                }
            }
        }
        push("nested", l64, bad_nest);
        push("disjoint", l64, bad_disjoint);

        let reg = level_regime(s, l64)?;
        if reg.case == CaseTag::Case2 {
            let mut bad = None;
            for (j, n) in level.iter().enumerate() {
                match &n.anchor {
                    None => bad = Some(format!("node {j} has no anchor")),
                    Some(a) => {
                        if !n.to_box().contains_closed(&a.y) || !anchor_offset_exact(s, a)? {
                            bad = Some(format!("node {j}: anchor point misplaced"));
                        }
                    }
                }
            }
            push("anchor_offset", l64, bad);
        }
        if reg.case == CaseTag::Case4 && l64 == s.xi * s.top(reg.k)? {
            let mut bad = None;
            for r in t.danger.iter().filter(|r| r.k == reg.k) {
                for n in level.iter().filter(|n| !n.forced) {
                    let b = n.to_box();
                    if r.boxes.iter().any(|j| b.contains_box(&j.to_box())) {
                        bad = Some(format!("a box of epoch {} holds a marked grid box", r.k));
                    }
                }
            }
            push("danger_cleared", l64, bad);
        }
    }
    let all_pass = checks.iter().all(|c| c.pass);
    Ok(StructureReport { checks, all_pass })
}

/// `|y_i − p_i/q| = c q^{−(1+τw_i)}` exactly.
fn anchor_offset_exact(s: &ParameterSchedule, a: &super::AnchorRecord) -> Result<bool> {
    let q = Rational::from_integer(a.q.clone());
    for i in 0..s.d {
        let off = (&a.y[i] - Rational::new(a.p[i].clone(), a.q.clone())).abs() / &a.c;
        let want = PowerProduct::pow_of(&q, &-(Rational::one() + &s.tau * &s.w[i]))?;
        if off.is_zero() || want.cmp_rational(&off)? != Ordering::Equal {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub node: usize,
    #[serde(with = "serde_q::int")]
    pub s: BigInt,
    #[serde(with = "serde_q::ints")]
    pub r: Vec<BigInt>,
    /// Point of the box closest to `r/s` on every axis.
    #[serde(with = "serde_q::vec")]
    pub x: Vec<Rational>,
    /// The quasi-norm inequality re-evaluated at `x` agrees.
    pub confirmed: bool,
    /// Some sampled point of the box (corners, center, random) also fails.
    pub sample_hit: bool,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyLevel {
    pub property: String,
    pub k: usize,
    pub level: u64,
    /// Construction-certified, or its schedule preconditions hold.
    pub required: bool,
    pub boxes: usize,
    pub failures: usize,
    pub witness: Option<Witness>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointwiseReport {
    pub properties: Vec<PropertyLevel>,
    pub required_pass: bool,
    pub all_pass: bool,
}

impl PointwiseReport {
    pub fn get(&self, property: &str) -> impl Iterator<Item = &PropertyLevel> {
        let p = property.to_string();
        self.properties.iter().filter(move |x| x.property == p)
    }
}

enum Ball {
    Eps(Rational, Vec<Rational>),
    Tau(Rational, Vec<Rational>),
}

impl Ball {
    fn scan(&self, b: &QBox, lo: &BigInt, hi: &BigInt, budget: u64) -> Result<Vec<RationalVector>> {
        match self {
            Ball::Eps(eps, u) => enumerate_near(b, lo, hi, &EpsBall { eps, u }, budget),
            Ball::Tau(tau, w) => enumerate_near(b, lo, hi, &TauBall { tau, w }, budget),
        }
    }

    /// `‖s x − r‖ <= threshold` at a single point.
    fn hits_point(&self, x: &[Rational], r: &RationalVector) -> Result<bool> {
        let sq = Rational::from_integer(r.q.clone());
        let v: Vec<Rational> = x.iter().zip(&r.p).map(|(xi, ri)| &sq * xi - Rational::from_integer(ri.clone())).collect();
        match self {
            Ball::Eps(eps, u) => Ok(weighted_norm_cmp(&v, u, &(eps / &sq))? != Ordering::Greater),
            Ball::Tau(tau, w) => {
                let thr = TauBall { tau, w };
                for (i, vi) in v.iter().enumerate() {
                    if !thr.within(&r.q, i, &vi.abs())? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
        }
    }
}

fn closest_point(b: &QBox, r: &RationalVector) -> Vec<Rational> {
    r.point().iter().enumerate().map(|(i, p)| p.clone().max(b.lo[i].clone()).min(b.hi[i].clone())).collect()
}

fn sample_points(b: &QBox, count: usize, seed: u64) -> Vec<Vec<Rational>> {
    let mut pts = b.corners();
    pts.push(b.center());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..count {
        pts.push((0..b.dim()).map(|i| &b.lo[i] + b.side(i) * Rational::new(rng.gen_range(0..=1024).into(), 1024.into())).collect());
    }
    pts
}

fn range_from(r: &Rational, a: u64) -> BigInt {
    ceil_int(&pow_q(r, a as i64))
}

fn rational_of(p: &PowerProduct) -> Option<Rational> {
    p.to_rational()
}

struct Scanner<'a> {
    t: &'a CantorTree,
    samples: usize,
}

impl Scanner<'_> {
    /// Scans every box of level `l` for near points; returns failures and the first witness.
    fn avoid(&self, l: u64, ball: &Ball, lo: &BigInt, hi: &BigInt, reason: &str) -> Result<(usize, usize, Option<Witness>)> {
        let level = &self.t.levels[l as usize];
        let budget = self.t.options.enum_budget;
        let hits: Vec<Result<Option<RationalVector>>> =
            level.par_iter().map(|n| Ok(ball.scan(&n.to_box(), lo, hi, budget)?.into_iter().next())).collect();
        let mut failures = 0;
        let mut witness = None;
        for (j, h) in hits.into_iter().enumerate() {
            if let Some(r) = h? {
                failures += 1;
                if witness.is_none() {
                    witness = Some(self.witness(j, &level[j].to_box(), ball, r, reason)?);
                }
            }
        }
        Ok((level.len(), failures, witness))
    }

    fn witness(&self, node: usize, b: &QBox, ball: &Ball, r: RationalVector, reason: &str) -> Result<Witness> {
        let x = closest_point(b, &r);
        let confirmed = ball.hits_point(&x, &r)?;
        let mut sample_hit = false;
        for p in sample_points(b, self.samples, node as u64) {
            if ball.hits_point(&p, &r)? {
                sample_hit = true;
                break;
            }
        }
        Ok(Witness { node, s: r.q.clone(), r: r.p.clone(), x, confirmed, sample_hit, reason: reason.into() })
    }
}

/// All pointwise properties on every level they apply to.
pub fn verify_pointwise(t: &CantorTree, report: &ScheduleReport, samples_per_box: usize) -> Result<PointwiseReport> {
    let mut properties = Vec::new();
    for l in 1..=t.depth() {
        properties.extend(verify_pointwise_level(t, report, l, samples_per_box)?);
    }
    let required_pass = properties.iter().filter(|p| p.required).all(|p| p.failures == 0);
    let all_pass = properties.iter().all(|p| p.failures == 0);
    Ok(PointwiseReport { properties, required_pass, all_pass })
}

/// Properties that apply at level `l`:
/// `anchor` at `l = n_k^{(d)}`, `eps0_avoidance` for `n_k^{(d)}+1 < l <= n_{k+1}`,
/// `tau_avoidance` at `l = ξ n_k^{(d)}` and `epoch_avoidance` at `l = n_{k+1}`.
pub fn verify_pointwise_level(t: &CantorTree, report: &ScheduleReport, l: u64, samples_per_box: usize) -> Result<Vec<PropertyLevel>> {
    let s = &t.schedule;
    let sc = Scanner { t, samples: samples_per_box };
    let reg = level_regime(s, l)?;
    let k = reg.k;
    let mut out = Vec::new();
    let r = &s.r;
    let eps0 = rational_of(&s.eps0).ok_or_else(|| Error::Irrational(format!("eps0 = {}", s.eps0)))?;
    let top = s.top(k)?;

    if reg.case != CaseTag::Case2 && reg.case != CaseTag::Case3 && l > top + 1 {
        let lo = range_from(r, top + 1);
        let hi = range_from(r, l);
        let ball = Ball::Eps(eps0.clone(), s.wtilde.clone());
        let (boxes, failures, witness) = sc.avoid(l, &ball, &lo, &hi, "eps0-near point")?;
        out.push(PropertyLevel {
            property: "eps0_avoidance".into(),
            k,
            level: l,
            required: true,
            boxes,
            failures,
            witness,
            note: format!("s in [{lo}, {hi})"),
        });
    }

    if k >= 1 && reg.case == CaseTag::Case4 && l == s.xi * top {
        let ep = s.epoch(k)?;
        let lo = range_from(r, ep.ni[0]);
        let hi = range_from(r, top + 1);
        let ball = Ball::Tau(s.tau.clone(), s.w.clone());
        let (boxes, failures, witness) = sc.avoid(l, &ball, &lo, &hi, "tau-near point")?;
        out.push(PropertyLevel {
            property: "tau_avoidance".into(),
            k,
            level: l,
            required: true,
            boxes,
            failures,
            witness,
            note: format!("s in [{lo}, {hi})"),
        });
    }

    let next_n = if k < s.k_max() { Some(s.epochs[k].n) } else { None };
    if next_n == Some(l) {
        let required = k == 0 || report.epoch_ok(k);
        let prev = if k == 0 { 0 } else { s.epoch(k)?.n };
        let lo = range_from(r, prev);
        let hi = range_from(r, l);
        match rational_of(&s.eps(k)?) {
            Some(eps) => {
                let ball = Ball::Eps(eps, s.wtilde.clone());
                let (boxes, failures, witness) = sc.avoid(l, &ball, &lo, &hi, "epoch-eps-near point")?;
                out.push(PropertyLevel {
                    property: "epoch_avoidance".into(),
                    k,
                    level: l,
                    required,
                    boxes,
                    failures,
                    witness,
                    note: format!("s in [{lo}, {hi})"),
                });
            }
            None => out.push(PropertyLevel {
                property: "epoch_avoidance".into(),
                k,
                level: l,
                required: false,
                boxes: 0,
                failures: 0,
                witness: None,
                note: "skipped: epsilon is irrational".into(),
            }),
        }
    }

    if k >= 1 && reg.case == CaseTag::Case2 && l == top {
        out.push(anchor_property(&sc, report, k, l)?);
    }
    Ok(out)
}

/// `R^{n_k} <= q <= ε_{k−1}^{−1} R^{n_k}`, the two-sided bound on
/// `‖q x − p‖_w` over the whole box, and no other `τ`-near `r/s` with
/// `R^{n_k} <= s < R^{n_k^{(1)}}`.
fn anchor_property(sc: &Scanner, report: &ScheduleReport, k: usize, l: u64) -> Result<PropertyLevel> {
    let t = sc.t;
    let s = &t.schedule;
    let ep = s.epoch(k)?;
    let level = &t.levels[l as usize];
    let rn = s.rpow(&qi(ep.n as i64))?;
    let eps_prev = s.eps(k - 1)?;
    let lo = range_from(&s.r, ep.n);
    let hi = range_from(&s.r, ep.ni[0]);
    let ball = Ball::Tau(s.tau.clone(), s.w.clone());
    let budget = t.options.enum_budget;
    let mut failures = 0;
    let mut witness = None;
    let mut note = String::new();
    for (j, n) in level.iter().enumerate() {
        let a = n.anchor.as_ref().ok_or_else(|| Error::Construction { level: l as usize, node: j, reason: "missing anchor".into() })?;
        let q = Rational::from_integer(a.q.clone());
        let b = n.to_box();
        let range_ok = rn.cmp_rational(&q)? != Ordering::Greater && eps_prev.mul_rational(&q)?.cmp_pp(&rn)? != Ordering::Greater;
        let (upper_ok, lower_ok) = anchor_norm_bounds(s, &b, &a.p, &a.q, &a.c)?;
        let own = RationalVector { p: a.p.clone(), q: a.q.clone() };
        let other = ball.scan(&b, &lo, &hi, budget)?.into_iter().find(|r| r.point() != own.point());
        if range_ok && upper_ok && lower_ok && other.is_none() {
            continue;
        }
        failures += 1;
        if witness.is_none() {
            let reason = match (range_ok, upper_ok, lower_ok) {
                (false, _, _) => "denominator outside its range",
                (_, false, _) => "upper approximation bound fails",
                (_, _, false) => "lower approximation bound fails",
                _ => "second tau-near point",
            };
            note = format!("first failure: {reason}");
            let r = other.unwrap_or(own);
            witness = Some(sc.witness(j, &b, &ball, r, reason)?);
        }
    }
    Ok(PropertyLevel {
        property: "anchor".into(),
        k,
        level: l,
        required: report.epoch_ok(k),
        boxes: level.len(),
        failures,
        witness,
        note,
    })
}

/// Over the closed box: `max_i |q x_i − p_i|^{1/w_i} < q^{−τ}` for all `x`,
/// and some axis `i` with `|q x_i − p_i|^{1/w_i} >= (2c−1)^{1/w_1} q^{−τ}` for all `x`.
pub(crate) fn anchor_norm_bounds(s: &ParameterSchedule, b: &QBox, p: &[BigInt], q: &BigInt, c: &Rational) -> Result<(bool, bool)> {
    let qq = Rational::from_integer(q.clone());
    let qtau = PowerProduct::pow_of(&qq, &-s.tau.clone())?;
    let two_c = qi(2) * c - Rational::one();
    let lower = if two_c.is_positive() { Some(&PowerProduct::pow_of(&two_c, &s.w[0].recip())? * &qtau) } else { None };
    let mut upper_ok = true;
    let mut lower_ok = false;
    for i in 0..s.d {
        let pi = Rational::from_integer(p[i].clone());
        let a = &qq * &b.lo[i] - &pi;
        let z = &qq * &b.hi[i] - &pi;
        let far = a.abs().max(z.abs());
        let near = if !a.is_positive() && !z.is_negative() { Rational::zero() } else { a.abs().min(z.abs()) };
        if !far.is_zero() {
            let lhs = PowerProduct::pow_of(&far, &s.w[i].recip())?;
            upper_ok &= lhs.cmp_pp(&qtau)? == Ordering::Less;
        }
        if let (Some(lb), false) = (&lower, near.is_zero()) {
            let lhs = PowerProduct::pow_of(&near, &s.w[i].recip())?;
            lower_ok |= lhs.cmp_pp(lb)? != Ordering::Less;
        }
    }
    Ok((upper_ok, lower_ok))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountCheck {
    pub name: String,
    pub k: usize,
    pub level: u64,
    pub required: bool,
    pub cases: usize,
    pub failures: usize,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountReport {
    pub checks: Vec<CountCheck>,
    pub required_pass: bool,
    pub all_pass: bool,
}

impl CountReport {
    pub fn get(&self, name: &str) -> impl Iterator<Item = &CountCheck> {
        let n = name.to_string();
        self.checks.iter().filter(move |c| c.name == n)
    }
}

/// Exact lower bound on the children per parent for each regime, or `None`
/// when it is not a rational number.
fn child_lower_bound(s: &ParameterSchedule, l: u64, case: CaseTag, k: usize) -> Result<Option<(Rational, Option<PowerProduct>)>> {
    let rho = Rational::from_integer(s.rho.clone());
    let cut = Rational::new(BigInt::from(1u64 << s.d), BigInt::from(s.rho_floor[0]));
    Ok(match case {
        CaseTag::Root => None,
        CaseTag::Case1 => Some((&rho * (Rational::one() - cut), None)),
        CaseTag::Case2 => Some((Rational::one(), None)),
        CaseTag::Case3 => {
            let ep = s.epoch(k)?;
            let mut prod = Rational::one();
            for i in 0..s.d {
                let e = (Rational::one() + &s.wtilde[i]) * qi((ep.top() + 1 - ep.ni[i]) as i64);
                prod *= Rational::from_integer(s.rpow(&e)?.floor()?);
            }
            Some((prod / qi(2), None))
        }
        CaseTag::Case4 => {
            // ρ(1 − ρ^{−ε/2} − 2^d/⌊ρ_1⌋): the power part is carried separately.
            let _ = l;
            let pw = PowerProduct::from_rational(&rho)?.powr(&(-&s.eps_l7 / qi(2)));
            Some((&rho * (Rational::one() - cut), Some(pw.mul_rational(&rho)?)))
        }
    })
}

/// Per-node child counts, danger-region sizes, and for every trial box the
/// mass bound and the projection-count bound.
pub fn verify_counts(t: &CantorTree, report: &ScheduleReport, trial_boxes: &[QBox]) -> Result<CountReport> {
    let s = &t.schedule;
    let mut checks = Vec::new();
    for l in 1..=t.depth() {
        let reg = level_regime(s, l)?;
        let parents = &t.levels[l as usize - 1];
        let Some((base, power)) = child_lower_bound(s, l, reg.case, reg.k)? else { continue };
        let mut failures = 0;
        let mut min_count = usize::MAX;
        for p in parents {
            let c = Rational::from_integer(BigInt::from(p.children.len()));
            min_count = min_count.min(p.children.len());
            let ok = match &power {
                None => c >= base,
                // c >= base − ρ^{1−ε/2}  <=>  ρ^{1−ε/2} >= base − c
                Some(pw) => {
                    let gap = &base - &c;
                    !gap.is_positive() || pw.cmp_rational(&gap)? != Ordering::Less
                }
            };
            failures += !ok as usize;
        }
        let name = match reg.case {
            CaseTag::Case1 => "case1_children",
            CaseTag::Case2 => "case2_children",
            CaseTag::Case3 => "case3_children",
            _ => "case4_children",
        };
        let required = reg.case == CaseTag::Case2 || report.epoch_ok(reg.k);
        let bound = match &power {
            None => fmt_q(&base),
            Some(pw) => format!("{} - {}", fmt_q(&base), pw),
        };
        checks.push(CountCheck {
            name: name.into(),
            k: reg.k,
            level: l,
            required,
            cases: parents.len(),
            failures,
            detail: format!("min children {}, bound {bound}", if parents.is_empty() { 0 } else { min_count }),
        });
    }

    for k in 1..=s.k_max() {
        let top = s.top(k)?;
        if top >= t.depth() {
            continue;
        }
        let bound = danger_size_bound(s, k)?;
        let regions: Vec<_> = t.danger.iter().filter(|r| r.k == k).collect();
        let failures = regions.iter().filter(|r| Rational::from_integer(BigInt::from(r.boxes.len())) > bound).count();
        checks.push(CountCheck {
            name: "danger_region_size".into(),
            k,
            level: top + 1,
            required: report.epoch_ok(k),
            cases: regions.len(),
            failures,
            detail: format!("max {} marked, bound {}", regions.iter().map(|r| r.boxes.len()).max().unwrap_or(0), fmt_q(&bound)),
        });
    }

    let per_box: Vec<Result<Vec<(u64, bool, bool)>>> = trial_boxes.par_iter().map(|b| trial_box_checks(t, b)).collect();
    let depth = t.depth();
    let mut mass = vec![(0usize, 0usize); depth as usize + 1];
    let mut proj = vec![(0usize, 0usize); depth as usize + 1];
    for r in per_box {
        for (l, mass_ok, proj_ok) in r? {
            mass[l as usize].0 += 1;
            mass[l as usize].1 += !mass_ok as usize;
            proj[l as usize].0 += 1;
            proj[l as usize].1 += !proj_ok as usize;
        }
    }
    for l in 1..=depth {
        let reg = level_regime(s, l)?;
        checks.push(CountCheck {
            name: "mass_bound".into(),
            k: reg.k,
            level: l,
            required: t.options.uniform_branching,
            cases: mass[l as usize].0,
            failures: mass[l as usize].1,
            detail: String::new(),
        });
        if reg.k >= 1 {
            checks.push(CountCheck {
                name: "projection_bound".into(),
                k: reg.k,
                level: l,
                required: true,
                cases: proj[l as usize].0,
                failures: proj[l as usize].1,
                detail: String::new(),
            });
        }
    }
    let required_pass = checks.iter().filter(|c| c.required).all(|c| c.failures == 0);
    let all_pass = checks.iter().all(|c| c.failures == 0);
    Ok(CountReport { checks, required_pass, all_pass })
}

/// `Σ_{n=n^{(1)}}^{n^{(d)}+1} 2^{2d} Π_i R^{−(1+w̃_i)n^{(i)}} / (ρ_0^{(1)} R^{(τw_1−w̃_1)n} R^{−(d+1)ξn^{(d)}})`.
fn danger_size_bound(s: &ParameterSchedule, k: usize) -> Result<Rational> {
    let ep = s.epoch(k)?;
    let top = ep.top();
    let mut vol = PowerProduct::from_int(1 << (2 * s.d))?;
    for i in 0..s.d {
        vol = &vol * &s.rpow(&(-(Rational::one() + &s.wtilde[i]) * qi(ep.ni[i] as i64)))?;
    }
    let mut total = Rational::zero();
    for n in ep.ni[0]..=top + 1 {
        let den = &s.rho0[0] * &s.rpow(&((&s.tau * &s.w[0] - &s.wtilde[0]) * qi(n as i64) - qi((s.d as u64 + 1) as i64 * (s.xi * top) as i64)))?;
        let term = &vol / &den;
        total += term.to_rational().ok_or_else(|| Error::Irrational(format!("danger size term {term}")))?;
    }
    Ok(total)
}

/// For each level: the mass bound over kept boxes and the projection bound
/// over all boxes meeting `b`.
fn trial_box_checks(t: &CantorTree, b: &QBox) -> Result<Vec<(u64, bool, bool)>> {
    let s = &t.schedule;
    let ell = b.side(0);
    let hits = t.meeting(b);
    let mut out = Vec::new();
    for l in 1..=t.depth() {
        let level = &t.levels[l as usize];
        let hit = &hits[l as usize];
        let kept_total = level.iter().filter(|n| n.kept).count();
        let kept_hit: Vec<usize> = hit.iter().copied().filter(|&c| level[c].kept).collect();
        let mass: Rational = kept_hit.iter().map(|&c| level[c].mu.clone()).sum();
        let mass_ok = mass * Rational::from_integer(BigInt::from(kept_total)) <= Rational::from_integer(BigInt::from(kept_hit.len()));
        let proj_ok = match projection_bound(s, l, &ell)? {
            Some(bound) => Rational::from_integer(BigInt::from(hit.len())) <= bound,
            None => true,
        };
        out.push((l, mass_ok, proj_ok));
    }
    Ok(out)
}

/// `Π_i 2 max{ℓ/(ρ_0^{(i)} ρ_i^{−n_k}), 1} h_k^{(i)}(n)`, for levels `n > n_1`.
pub fn projection_bound(s: &ParameterSchedule, n: u64, ell: &Rational) -> Result<Option<Rational>> {
    let reg = level_regime(s, n)?;
    if reg.k == 0 {
        return Ok(None);
    }
    let ep = s.epoch(reg.k)?;
    let one = Rational::one();
    let mut prod = one.clone();
    for i in 0..s.d {
        let side_nk = s.side(i, ep.n)?;
        let mut f = qi(2) * (ell / &side_nk).max(one.clone());
        if n > ep.top() {
            let side_ni = s.side(i, ep.ni[i])?;
            let side_n = s.side(i, n)?;
            let h = (ell / &side_ni).min(one.clone()) * (&side_ni / &side_n).max(&side_ni / ell);
            f *= h;
        }
        prod *= f;
    }
    Ok(Some(prod))
}

/// Cubes of random side and position inside `[0, 1]^d`, with dyadic corners.
pub fn random_trial_boxes(t: &CantorTree, count: usize, seed: u64) -> Vec<QBox> {
    let s = &t.schedule;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let smallest = s.side(0, t.depth()).unwrap_or_else(|_| Rational::new(1.into(), 1024.into()));
    (0..count)
        .map(|_| {
            let m = rng.gen_range(0..=t.depth());
            let base = s.side(0, m).unwrap_or_else(|_| smallest.clone());
            let ell = (base * Rational::new(rng.gen_range(2..=8).into(), 4.into())).min(Rational::new(1.into(), 1.into()));
            let room = Rational::one() - &ell;
            let lo: Vec<Rational> = (0..s.d).map(|_| &room * Rational::new(rng.gen_range(0..=1u64 << 20).into(), (1u64 << 20).into())).collect();
            let hi = lo.iter().map(|x| x + &ell).collect();
            QBox { lo, hi }
        })
        .collect()
}

/// Cubes centred on points drawn from `μ`, of side `ρ_0^{(1)} ρ_1^{−m}`
/// times a factor in `[1/2, 2]` for a random level `m`.
pub fn support_trial_boxes(t: &CantorTree, count: usize, seed: u64) -> Vec<QBox> {
    let s = &t.schedule;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers = t.sample_points(seed ^ 0x5eed, count);
    let smallest = s.side(0, t.depth()).unwrap_or_else(|_| Rational::new(1.into(), 1024.into()));
    centers
        .into_iter()
        .map(|c| {
            let m = rng.gen_range(1..=t.depth().max(1));
            let base = s.side(0, m).unwrap_or_else(|_| smallest.clone());
            let half = base * Rational::new(rng.gen_range(2..=8).into(), 8.into());
            QBox::from_center(&c, &vec![half; s.d]).expect("positive radius")
        })
        .collect()
}

/// Every marked box of `region` meets some cell's neighbourhood inside that cell.
pub fn replay_danger_region(t: &CantorTree, region: &super::DangerRegion) -> Result<bool> {
    let s = &t.schedule;
    let e = t.levels[region.level as usize][region.parent].to_box();
    let cells = danger_cells(s, &e, region.k, t.options.enum_budget)?;
    Ok(region
        .boxes
        .iter()
        .map(|j| j.to_box())
        .all(|j| cells.iter().any(|c| intersection(&j, &c.cell).is_some_and(|ji| c.nbhd.meets(&c.radii, &ji)))))
}
