//! One refinement step per regime.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive};

use super::{level_sides, AnchorRecord, BuildOptions, CantorNode, CaseTag, Regime};
use crate::error::{Error, Result};
use crate::geometry::approx::intermediate_approximation;
use crate::geometry::simplex::{fit_plane, scale_range};
use crate::numeric::dangerous::{enumerate_near, EpsBall, TauBall};
use crate::numeric::plane::plane_meets_box;
use crate::numeric::power::PowerProduct;
use crate::numeric::rational::{ceil_int, floor_int, pow_q, qi, RationalVector};
use crate::numeric::Corner;
use crate::schedule::ParameterSchedule;
use crate::{QBox, QPlane, Rational};

/// Where the near rational points of a cell can sit.
#[derive(Debug, Clone, PartialEq)]
pub enum Neighbourhood {
    Empty,
    Plane(QPlane),
    /// Full affine rank: each point gets its own box.
    Points(Vec<Vec<Rational>>),
}

impl Neighbourhood {
    fn from_fit(points: &[RationalVector], plane: Option<QPlane>) -> Self {
        if points.is_empty() {
            Neighbourhood::Empty
        } else if let Some(p) = plane {
            Neighbourhood::Plane(p)
        } else {
            Neighbourhood::Points(points.iter().map(|p| p.point()).collect())
        }
    }

    /// Does the thickening by `radii` meet the closed box `b`?
    pub fn meets(&self, radii: &[Rational], b: &QBox) -> bool {
        let c = b.center();
        let h: Vec<Rational> = b.half_sides().iter().zip(radii).map(|(h, r)| h + r).collect();
        match self {
            Neighbourhood::Empty => false,
            Neighbourhood::Plane(p) => plane_meets_box(p, &c, &h),
            Neighbourhood::Points(ps) => ps.iter().any(|p| p.iter().zip(&c).zip(&h).all(|((pi, ci), hi)| (pi - ci).abs() <= *hi)),
        }
    }
}

/// A cell of the danger construction: the `τ`-near points for
/// `R^n <= s < R^{n+1}` and the radii of their neighbourhood.
#[derive(Debug, Clone, PartialEq)]
pub struct DangerCell {
    pub n: u64,
    pub cell: QBox,
    pub radii: Vec<Rational>,
    pub nbhd: Neighbourhood,
    pub points: usize,
}

pub(crate) fn intersection(a: &QBox, b: &QBox) -> Option<QBox> {
    let lo: Vec<Rational> = a.lo.iter().zip(&b.lo).map(|(x, y)| x.max(y).clone()).collect();
    let hi: Vec<Rational> = a.hi.iter().zip(&b.hi).map(|(x, y)| x.min(y).clone()).collect();
    lo.iter().zip(&hi).all(|(x, y)| x <= y).then_some(QBox { lo, hi })
}

fn rational(p: &PowerProduct, what: &str) -> Result<Rational> {
    p.to_rational().ok_or_else(|| Error::Irrational(format!("{what} = {p}")))
}

/// Cells `I` of the level-`n_k^{(d)}` box `e` for `n_k^{(1)} <= n <= n_k^{(d)}+1`,
/// each with a hyperplane (or point list) holding its `τ`-near points.
pub fn danger_cells(s: &ParameterSchedule, e: &QBox, k: usize, budget: u64) -> Result<Vec<DangerCell>> {
    let ep = s.epoch(k)?;
    let w = &s.w;
    let mut out = Vec::new();
    for n in ep.ni[0]..=ep.top() + 1 {
        let sides: Vec<Rational> = (0..s.d).map(|i| s.side(i, n.max(ep.ni[i]))).collect::<Result<_>>()?;
        let radii: Vec<Rational> = (0..s.d)
            .map(|i| rational(&s.rpow(&(-(Rational::one() + &s.tau * &w[i]) * qi(n as i64)))?, "neighbourhood radius"))
            .collect::<Result<_>>()?;
        let (full, rem) = e.subdivide(&sides, Corner::Lower)?;
        let (s_lo, s_hi) = scale_range(&s.r, n as u32);
        for cell in full.into_iter().chain(rem) {
            let fit = fit_plane(&cell, &s_lo, &s_hi, &TauBall { tau: &s.tau, w }, budget)?;
            let nbhd = Neighbourhood::from_fit(&fit.points, fit.plane);
            out.push(DangerCell { n, cell, radii: radii.clone(), nbhd, points: fit.points.len() });
        }
    }
    Ok(out)
}

pub(crate) struct RefineOut {
    pub children: Vec<QBox>,
    pub removed_plane: u32,
    pub removed_danger: u32,
    pub point_fallback: bool,
    pub anchor: Option<AnchorRecord>,
    pub marked: Option<Vec<QBox>>,
    pub grid_boxes: usize,
    /// Boxes removed by the danger count, kept only for fault injection.
    pub danger_removed: Vec<QBox>,
    pub forced_box: Option<QBox>,
}

impl RefineOut {
    fn new(children: Vec<QBox>) -> Self {
        RefineOut {
            children,
            removed_plane: 0,
            removed_danger: 0,
            point_fallback: false,
            anchor: None,
            marked: None,
            grid_boxes: 0,
            danger_removed: Vec::new(),
            forced_box: None,
        }
    }
}

/// Per-level quantities shared by every parent.
pub(crate) struct Context<'a> {
    s: &'a ParameterSchedule,
    opts: &'a BuildOptions,
    /// Actual box sides per level.
    sides: Vec<Vec<Rational>>,
    /// `ρ_0^{(i)} R^{−(1+w̃_i) l}` per level, the grid of the subdivision.
    grid: Vec<Vec<Rational>>,
    /// Smallest integer count that triggers danger removal at each level.
    danger_min: Vec<Option<u64>>,
}

impl<'a> Context<'a> {
    pub fn new(s: &'a ParameterSchedule, opts: &'a BuildOptions) -> Result<Self> {
        let depth = opts.depth;
        let sides = (0..=depth).map(|l| level_sides(s, l)).collect::<Result<Vec<_>>>()?;
        let grid = (0..=depth).map(|l| (0..s.d).map(|i| s.side(i, l)).collect::<Result<Vec<_>>>()).collect::<Result<Vec<_>>>()?;
        let mut danger_min = vec![None; depth as usize + 1];
        for l in 1..=depth {
            let reg = super::level_regime(s, l)?;
            if matches!(reg.case, CaseTag::Case3 | CaseTag::Case4) {
                let t = s.danger_threshold(reg.k, l)?.ceil()?;
                danger_min[l as usize] = Some(t.to_u64().unwrap_or(u64::MAX).max(1));
            }
        }
        Ok(Context { s, opts, sides, grid, danger_min })
    }

    /// Most children one parent can have at level `l`.
    pub fn children_bound(&self, l: u64, reg: Regime) -> BigInt {
        if reg.case == CaseTag::Case2 {
            return BigInt::one();
        }
        let (up, grid) = (&self.sides[l as usize - 1], &self.grid[l as usize]);
        up.iter().zip(grid).map(|(a, g)| floor_int(&(a / g))).product()
    }

    pub fn refine(&self, l: u64, reg: Regime, parent: &CantorNode, marked: &[QBox]) -> Result<RefineOut> {
        let e = parent.to_box();
        match reg.case {
            CaseTag::Root => Err(Error::InvalidInput("level 0 has no parent".into())),
            CaseTag::Case1 => {
                let f = self.subdivide(&e, l)?;
                self.remove_plane(&e, l, f)
            }
            CaseTag::Case2 => self.case2(l, reg.k, parent, &e),
            CaseTag::Case3 => {
                let (js, grid_boxes) = self.mark_danger(&e, reg.k)?;
                let f = self.subdivide(&e, l)?;
                let mut out = RefineOut::new(Vec::new());
                self.remove_danger(l, f, &js, &mut out);
                if !self.opts.inject_fault {
                    out.danger_removed.clear();
                }
                out.grid_boxes = grid_boxes;
                out.marked = Some(js);
                Ok(out)
            }
            CaseTag::Case4 => {
                let f = self.subdivide(&e, l)?;
                let mut out = self.remove_plane(&e, l, f)?;
                let kids = std::mem::take(&mut out.children);
                // A re-admitted subtree is exempt from the danger count.
                let inside: Vec<QBox> = if parent.forced { Vec::new() } else { marked.iter().filter(|j| e.contains_box(j)).cloned().collect() };
                self.remove_danger(l, kids, &inside, &mut out);
                if l == self.s.xi * self.s.top(reg.k)? {
                    if let Some(c) = out.children.iter().find(|c| inside.iter().any(|j| c.contains_box(j))) {
                        return Err(Error::TheoremViolation(format!("box {:?} of the danger region survived its last level", c.lo)));
                    }
                }
                if !self.opts.inject_fault {
                    out.danger_removed.clear();
                }
                Ok(out)
            }
        }
    }

    fn subdivide(&self, e: &QBox, l: u64) -> Result<Vec<QBox>> {
        Ok(e.subdivide(&self.grid[l as usize], Corner::Lower)?.0)
    }

    /// Removes children meeting the `ε_0^{w̃_i} R^{−(l−1)(1+w̃_i)}`-thickening of
    /// the plane through the `ε_0`-near points with `R^{l−1} <= s < R^l`.
    fn remove_plane(&self, e: &QBox, l: u64, f: Vec<QBox>) -> Result<RefineOut> {
        let s = self.s;
        let eps0 = rational(&s.eps0, "eps0")?;
        let (s_lo, s_hi) = scale_range(&s.r, (l - 1) as u32);
        let fit = fit_plane(e, &s_lo, &s_hi, &EpsBall { eps: &eps0, u: &s.wtilde }, self.opts.enum_budget)?;
        let fallback = fit.plane.is_none() && !fit.points.is_empty();
        let nbhd = Neighbourhood::from_fit(&fit.points, fit.plane);
        let mut out = RefineOut::new(Vec::new());
        out.point_fallback = fallback;
        if nbhd == Neighbourhood::Empty {
            out.children = f;
            return Ok(out);
        }
        let radii: Vec<Rational> = (0..s.d)
            .map(|i| {
                let t = s.eps0.powr(&s.wtilde[i]) * s.rpow(&(-(Rational::one() + &s.wtilde[i]) * qi(l as i64 - 1)))?;
                rational(&t, "removal thickness")
            })
            .collect::<Result<_>>()?;
        for c in f {
            if nbhd.meets(&radii, &c) {
                out.removed_plane += 1;
            } else {
                out.children.push(c);
            }
        }
        Ok(out)
    }

    /// Drops children holding at least the level's threshold of marked boxes.
    fn remove_danger(&self, l: u64, f: Vec<QBox>, marked: &[QBox], out: &mut RefineOut) {
        let min = self.danger_min[l as usize].expect("danger level");
        for c in f {
            let count = marked.iter().filter(|j| c.contains_box(j)).count() as u64;
            if count >= min {
                out.removed_danger += 1;
                out.danger_removed.push(c);
            } else {
                out.children.push(c);
            }
        }
    }

    /// The J-grid of `e` down to level `ξ n_k^{(d)}`, and the boxes meeting a
    /// cell's neighbourhood inside that cell.
    fn mark_danger(&self, e: &QBox, k: usize) -> Result<(Vec<QBox>, usize)> {
        let s = self.s;
        let top = s.top(k)?;
        let cells = danger_cells(s, e, k, self.opts.enum_budget)?;
        let mut grid = vec![e.clone()];
        for m in top + 1..=s.xi * top {
            let sides: Vec<Rational> = (0..s.d).map(|i| s.side(i, m)).collect::<Result<_>>()?;
            let mut next = Vec::new();
            for b in &grid {
                next.extend(b.subdivide(&sides, Corner::Lower)?.0);
            }
            if next.len() > self.opts.max_boxes {
                return Err(Error::ScaleTooLarge { what: "danger grid boxes", needed: next.len().to_string(), budget: self.opts.max_boxes as u64 });
            }
            grid = next;
        }
        let n = grid.len();
        let marked = grid
            .into_iter()
            .filter(|j| {
                cells.iter().any(|c| match intersection(j, &c.cell) {
                    Some(ji) => c.nbhd.meets(&c.radii, &ji),
                    None => false,
                })
            })
            .collect();
        Ok((marked, n))
    }

    fn case2(&self, l: u64, k: usize, parent: &CantorNode, e: &QBox) -> Result<RefineOut> {
        let s = self.s;
        let anchor = match &parent.anchor {
            Some(a) => a.clone(),
            None => self.new_anchor(k, e)?,
        };
        let child = shrink(e, &anchor.y, &self.sides[l as usize])?;
        let mut out = RefineOut::new(vec![child]);
        debug_assert!(l <= s.top(k)?);
        out.anchor = Some(anchor);
        Ok(out)
    }

    /// `p/q` for the center of `e` with `M = R^{n_k}`, `β = 1/ε_{k−1} + 1`, and the
    /// point `y_i = p_i/q ± c_k q^{−(1+τw_i)}` pushed toward the center.
    fn new_anchor(&self, k: usize, e: &QBox) -> Result<AnchorRecord> {
        let s = self.s;
        let ep = s.epoch(k)?;
        let eps = rational(&s.eps(k - 1)?, "previous epsilon")?;
        let m = pow_q(&s.r, ep.n as i64);
        let beta = eps.recip() + Rational::one();
        let z = e.center();
        let ap = intermediate_approximation(&z, &m, &beta, &s.wtilde, &eps)?;
        let c = ep.c.clone().ok_or_else(|| Error::Irrational(format!("c_{k} = 1 − {}", ep.gap)))?;
        let qq = Rational::from_integer(ap.pq.q.clone());
        let mut y = Vec::with_capacity(s.d);
        for i in 0..s.d {
            let off = &c * rational(&PowerProduct::pow_of(&qq, &-(Rational::one() + &s.tau * &s.w[i]))?, "q^-(1+tau w_i)")?;
            let pi = Rational::new(ap.pq.p[i].clone(), ap.pq.q.clone());
            let toward = if pi <= z[i] { &pi + &off } else { &pi - &off };
            let away = if pi <= z[i] { &pi - &off } else { &pi + &off };
            let inside = |t: &Rational| e.lo[i] <= *t && *t <= e.hi[i];
            y.push(if inside(&toward) {
                toward
            } else if inside(&away) {
                away
            } else {
                return Err(Error::Precondition(format!("anchor point leaves the box on axis {} (q = {})", i + 1, ap.pq.q)));
            });
        }
        Ok(AnchorRecord { k, p: ap.pq.p, q: ap.pq.q, y, c, z })
    }

    /// A `τ`-near point of `b` with `R^{n_k^{(1)}} <= s < R^{n_k^{(d)}+1}`.
    pub fn tau_witness(&self, b: &QBox, k: usize) -> Result<Option<RationalVector>> {
        let s = self.s;
        let ep = s.epoch(k)?;
        let lo = ceil_int(&pow_q(&s.r, ep.ni[0] as i64));
        let hi = ceil_int(&pow_q(&s.r, ep.top() as i64 + 1));
        Ok(enumerate_near(b, &lo, &hi, &TauBall { tau: &s.tau, w: &s.w }, self.opts.enum_budget)?.into_iter().next())
    }
}

/// Sub-box of `e` with the given sides that contains `y`, on the grid
/// anchored at the lower corner; a point on a grid line goes to the lower
/// box, and a point in the leftover strip gets the box flush with the top.
pub(crate) fn shrink(e: &QBox, y: &[Rational], sides: &[Rational]) -> Result<QBox> {
    let mut lo = Vec::with_capacity(y.len());
    for i in 0..y.len() {
        if !(e.lo[i] <= y[i] && y[i] <= e.hi[i]) {
            return Err(Error::InvalidInput("anchor point outside its box".into()));
        }
        let t = (&y[i] - &e.lo[i]) / &sides[i];
        let mut j: BigInt = t.floor().to_integer();
        if t.is_integer() && j.is_positive() {
            j -= 1;
        }
        let mut a = &e.lo[i] + Rational::from_integer(j) * &sides[i];
        if &a + &sides[i] > e.hi[i] {
            a = &e.hi[i] - &sides[i];
        }
        lo.push(a);
    }
    let hi = lo.iter().zip(sides).map(|(a, s)| a + s).collect();
    QBox::new(lo, hi)
}
