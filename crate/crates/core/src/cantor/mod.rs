//! Finite-depth nested box construction whose surviving points are badly
//! approximable below the schedule's thresholds yet approximable at a chosen
//! rate along one denominator per epoch.
//!
//! Levels are grouped into four regimes per epoch `k`:
//! Case 1 for `ξ n_k^{(d)} < l <= n_{k+1}`, Case 2 for `n_k < l <= n_k^{(d)}`,
//! Case 3 at `l = n_k^{(d)}+1` and Case 4 for `n_k^{(d)}+2 <= l <= ξ n_k^{(d)}`.
//! Levels `1..=n_1` are Case 1 of epoch 0.

mod refine;
mod verify;

use std::collections::HashMap;
use std::io::Write;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::rational::{floor_int, fmt_q, serde_q};
use crate::schedule::ParameterSchedule;
use crate::{QBox, Rational};

pub use refine::{danger_cells, DangerCell, Neighbourhood};
pub use verify::{
    projection_bound, random_trial_boxes, replay_danger_region, support_trial_boxes, verify_counts, verify_pointwise, verify_pointwise_level, verify_structure, CountCheck,
    CountReport, PointwiseReport, PropertyLevel, StructureCheck, StructureReport, Witness,
};

pub const TREE_SCHEMA: &str = "exactapprox.tree/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseTag {
    Root,
    Case1,
    Case2,
    Case3,
    Case4,
}

impl CaseTag {
    pub fn label(self) -> &'static str {
        match self {
            CaseTag::Root => "root",
            CaseTag::Case1 => "case1",
            CaseTag::Case2 => "case2",
            CaseTag::Case3 => "case3",
            CaseTag::Case4 => "case4",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Regime {
    /// Epoch the level belongs to; 0 for levels up to `n_1`.
    pub k: usize,
    pub case: CaseTag,
}

/// Regime of level `l`. Levels beyond `n_{k_max+1}` are only defined up to
/// `ξ n_{k_max}^{(d)}`.
pub fn level_regime(s: &ParameterSchedule, l: u64) -> Result<Regime> {
    if l == 0 {
        return Ok(Regime { k: 0, case: CaseTag::Root });
    }
    let k = s.epochs.iter().take_while(|e| e.n < l).count();
    if k == 0 {
        return Ok(Regime { k, case: CaseTag::Case1 });
    }
    let top = s.top(k)?;
    let case = if l <= top {
        CaseTag::Case2
    } else if l == top + 1 {
        CaseTag::Case3
    } else if l <= s.xi * top {
        CaseTag::Case4
    } else if k < s.k_max() {
        CaseTag::Case1
    } else {
        return Err(Error::InvalidInput(format!(
            "level {l} lies beyond the last scheduled epoch (max depth {})",
            s.xi * top
        )));
    };
    Ok(Regime { k, case })
}

/// Deepest level the schedule supports.
pub fn max_depth(s: &ParameterSchedule) -> u64 {
    match s.epochs.last() {
        Some(e) => s.xi * e.top(),
        None => 0,
    }
}

/// Side lengths of every box at level `l`: `ρ_0^{(i)} R^{−(1+w̃_i) m_i}` with
/// `m_i = min(l, n_k^{(i)})` inside Case 2 and `m_i = l` otherwise.
pub fn level_sides(s: &ParameterSchedule, l: u64) -> Result<Vec<Rational>> {
    let reg = level_regime(s, l)?;
    (0..s.d)
        .map(|i| {
            let m = match reg.case {
                CaseTag::Case2 => l.min(s.epoch(reg.k)?.ni[i]),
                _ => l,
            };
            s.side(i, m)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxRecord {
    #[serde(with = "serde_q::vec")]
    pub lo: Vec<Rational>,
    #[serde(with = "serde_q::vec")]
    pub hi: Vec<Rational>,
}

impl BoxRecord {
    pub fn from_box(b: &QBox) -> Self {
        BoxRecord { lo: b.lo.clone(), hi: b.hi.clone() }
    }

    pub fn to_box(&self) -> QBox {
        QBox { lo: self.lo.clone(), hi: self.hi.clone() }
    }
}

/// The rational point a Case 2 chain shrinks onto, and the `p/q` it came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnchorRecord {
    pub k: usize,
    #[serde(with = "serde_q::ints")]
    pub p: Vec<BigInt>,
    #[serde(with = "serde_q::int")]
    pub q: BigInt,
    #[serde(with = "serde_q::vec")]
    pub y: Vec<Rational>,
    #[serde(with = "serde_q")]
    pub c: Rational,
    /// Center of the box the approximation started from.
    #[serde(with = "serde_q::vec")]
    pub z: Vec<Rational>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CantorNode {
    #[serde(flatten)]
    pub bx: BoxRecord,
    pub parent: Option<usize>,
    /// Every child the construction produced, in lower-corner order.
    pub children: Vec<usize>,
    pub removed_plane: u32,
    pub removed_danger: u32,
    /// Removal used point neighbourhoods because the near points spanned full rank.
    pub point_fallback: bool,
    pub anchor: Option<AnchorRecord>,
    /// Index of the level-`n_k^{(d)}` ancestor whose danger region applies.
    pub danger_root: Option<usize>,
    /// Has a descendant at the deepest level.
    pub live: bool,
    /// Carries measure.
    pub kept: bool,
    /// Re-admitted by fault injection.
    pub forced: bool,
    #[serde(with = "serde_q")]
    pub mu: Rational,
}

impl CantorNode {
    pub fn to_box(&self) -> QBox {
        self.bx.to_box()
    }

    fn new(b: &QBox, parent: Option<usize>) -> Self {
        CantorNode {
            bx: BoxRecord::from_box(b),
            parent,
            children: Vec::new(),
            removed_plane: 0,
            removed_danger: 0,
            point_fallback: false,
            anchor: None,
            danger_root: None,
            live: false,
            kept: false,
            forced: false,
            mu: Rational::zero(),
        }
    }
}

/// Boxes of one epoch's danger region, grouped by the level-`n_k^{(d)}` box
/// they subdivide.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DangerRegion {
    pub k: usize,
    pub level: u64,
    pub parent: usize,
    pub boxes: Vec<BoxRecord>,
    /// J-grid size for this parent.
    pub grid_boxes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub level: u64,
    pub k: usize,
    pub case: CaseTag,
    pub boxes: usize,
    pub kept: usize,
    pub removed_plane: u64,
    pub removed_danger: u64,
    /// Nodes of the previous level with no children.
    pub dead_parents: usize,
    pub point_fallbacks: usize,
    #[serde(with = "serde_q::opt")]
    pub min_mu: Option<Rational>,
    #[serde(with = "serde_q::opt")]
    pub max_mu: Option<Rational>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildOptions {
    pub depth: u64,
    /// Trim every kept parent of a level to the same number of kept children,
    /// so `μ` is uniform on each level.
    pub uniform_branching: bool,
    /// Abort when a level exceeds this many boxes.
    pub max_boxes: usize,
    /// Cap on elementary tests per rational enumeration.
    pub enum_budget: u64,
    /// Re-admit the first box the danger-count rule removed that really holds
    /// a `τ`-near point; its subtree skips the danger count from then on.
    pub inject_fault: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            depth: 1,
            uniform_branching: true,
            max_boxes: 1 << 20,
            enum_budget: crate::numeric::DEFAULT_BUDGET,
            inject_fault: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CantorTree {
    pub schema: String,
    pub schedule: ParameterSchedule,
    pub options: BuildOptions,
    pub levels: Vec<Vec<CantorNode>>,
    pub danger: Vec<DangerRegion>,
    pub summary: Vec<LevelSummary>,
}

/// Level-0 boxes: `[0, 1]^d` cut into full boxes of side `ρ_0^{(i)}` from the
/// lower corner.
pub fn init_level0(s: &ParameterSchedule) -> Result<Vec<QBox>> {
    let rho0 = s.rho0_rational()?;
    let (full, _) = QBox::unit(s.d).subdivide(&rho0, crate::numeric::Corner::Lower)?;
    if full.is_empty() {
        return Err(Error::InvalidInput("rho0 exceeds the unit cube".into()));
    }
    Ok(full)
}

/// Builds levels `0..=opts.depth`, then marks live branches, trims for
/// uniform branching if asked, and assigns `μ`.
pub fn build_tree(s: &ParameterSchedule, opts: &BuildOptions) -> Result<CantorTree> {
    if opts.depth > max_depth(s) {
        return Err(Error::InvalidInput(format!("depth {} exceeds the schedule's max depth {}", opts.depth, max_depth(s))));
    }
    for k in 1..=s.k_max() {
        let e = s.epoch(k)?;
        if e.top() <= e.n {
            return Err(Error::InvalidInput(format!("epoch {k}: n_k^(d) = {} must exceed n_k = {}", e.top(), e.n)));
        }
        if k < s.k_max() && s.epochs[k].n <= s.xi * e.top() {
            return Err(Error::InvalidInput(format!("epoch {k}: n_(k+1) must exceed xi n_k^(d) = {}", s.xi * e.top())));
        }
    }
    let ctx = refine::Context::new(s, opts)?;
    let budget = BigInt::from(opts.max_boxes);
    let roots: BigInt = s.rho0_rational()?.iter().map(|r| floor_int(&r.recip())).product();
    if roots > budget {
        return Err(Error::ScaleTooLarge { what: "Cantor level boxes", needed: roots.to_string(), budget: opts.max_boxes as u64 });
    }
    let root: Vec<CantorNode> = init_level0(s)?.iter().map(|b| CantorNode::new(b, None)).collect();
    let mut levels = vec![root];
    let mut danger = Vec::new();
    let mut summary = vec![LevelSummary {
        level: 0,
        k: 0,
        case: CaseTag::Root,
        boxes: levels[0].len(),
        kept: 0,
        removed_plane: 0,
        removed_danger: 0,
        dead_parents: 0,
        point_fallbacks: 0,
        min_mu: None,
        max_mu: None,
    }];
    // Marked J boxes per level-n_k^(d) parent of the current epoch.
    let mut marked: HashMap<usize, Vec<QBox>> = HashMap::new();
    let mut injected = false;

    for l in 1..=opts.depth {
        let reg = level_regime(s, l)?;
        if reg.case == CaseTag::Case3 {
            marked.clear();
        }
        let parents = &levels[l as usize - 1];
        let bound = ctx.children_bound(l, reg) * BigInt::from(parents.len());
        if bound > budget {
            return Err(Error::ScaleTooLarge { what: "Cantor level boxes", needed: bound.to_string(), budget: opts.max_boxes as u64 });
        }
        let outs: Vec<Result<refine::RefineOut>> = parents
            .par_iter()
            .enumerate()
            .map(|(j, p)| {
                let key = if reg.case == CaseTag::Case3 { Some(j) } else { p.danger_root };
                let js = key.and_then(|key| marked.get(&key)).map(|v| v.as_slice()).unwrap_or(&[]);
                ctx.refine(l, reg, p, js).map_err(|e| match e {
                    Error::Construction { .. } => e,
                    other => Error::Construction { level: l as usize, node: j, reason: other.to_string() },
                })
            })
            .collect();
        let mut outs = outs.into_iter().collect::<Result<Vec<_>>>()?;

        if opts.inject_fault && !injected && matches!(reg.case, CaseTag::Case3 | CaseTag::Case4) {
            'search: for out in outs.iter_mut() {
                for cand in std::mem::take(&mut out.danger_removed) {
                    if ctx.tau_witness(&cand, reg.k)?.is_some() {
                        out.removed_danger -= 1;
                        out.children.push(cand.clone());
                        out.children.sort_by(|a, b| a.lo.cmp(&b.lo));
                        out.forced_box = Some(cand);
                        injected = true;
                        break 'search;
                    }
                }
            }
        }

        let mut next = Vec::new();
        let mut sum = LevelSummary {
            level: l,
            k: reg.k,
            case: reg.case,
            boxes: 0,
            kept: 0,
            removed_plane: 0,
            removed_danger: 0,
            dead_parents: 0,
            point_fallbacks: 0,
            min_mu: None,
            max_mu: None,
        };
        for (j, out) in outs.into_iter().enumerate() {
            let parent = &mut levels[l as usize - 1][j];
            parent.removed_plane = out.removed_plane;
            parent.removed_danger = out.removed_danger;
            parent.point_fallback = out.point_fallback;
            sum.removed_plane += out.removed_plane as u64;
            sum.removed_danger += out.removed_danger as u64;
            sum.point_fallbacks += out.point_fallback as usize;
            if out.children.is_empty() {
                sum.dead_parents += 1;
            }
            let droot = match reg.case {
                CaseTag::Case3 => Some(j),
                CaseTag::Case4 => parent.danger_root,
                _ => None,
            };
            if let Some(js) = out.marked {
                danger.push(DangerRegion {
                    k: reg.k,
                    level: l - 1,
                    parent: j,
                    boxes: js.iter().map(BoxRecord::from_box).collect(),
                    grid_boxes: out.grid_boxes,
                });
                marked.insert(j, js);
            }
            for b in &out.children {
                parent.children.push(next.len());
                let mut node = CantorNode::new(b, Some(j));
                node.forced = parent.forced;
                node.anchor = out.anchor.clone();
                node.danger_root = droot;
                next.push(node);
            }
            if let Some(forced) = &out.forced_box {
                let idx = parent.children.iter().copied().find(|&c| next[c].bx.lo == forced.lo).expect("forced child present");
                next[idx].forced = true;
            }
        }
        sum.boxes = next.len();
        if next.len() > opts.max_boxes {
            return Err(Error::ScaleTooLarge { what: "Cantor level boxes", needed: next.len().to_string(), budget: opts.max_boxes as u64 });
        }
        levels.push(next);
        summary.push(sum);
    }

    let mut tree = CantorTree { schema: TREE_SCHEMA.into(), schedule: s.clone(), options: opts.clone(), levels, danger, summary };
    tree.assign_measure()?;
    Ok(tree)
}

impl CantorTree {
    pub fn depth(&self) -> u64 {
        self.levels.len() as u64 - 1
    }

    /// Marks live branches, picks the kept subtree and sets `μ` by equal
    /// splitting among kept children.
    fn assign_measure(&mut self) -> Result<()> {
        let depth = self.levels.len() - 1;
        for n in self.levels[depth].iter_mut() {
            n.live = true;
        }
        for l in (0..depth).rev() {
            let (head, tail) = self.levels.split_at_mut(l + 1);
            for n in head[l].iter_mut() {
                n.live = n.children.iter().any(|&c| tail[0][c].live);
            }
        }
        let roots: Vec<usize> = (0..self.levels[0].len()).filter(|&j| self.levels[0][j].live).collect();
        if roots.is_empty() {
            return Err(Error::Construction { level: depth, node: 0, reason: "every branch died before the final level".into() });
        }
        let m0 = Rational::new(BigInt::one(), BigInt::from(roots.len()));
        for &j in &roots {
            self.levels[0][j].kept = true;
            self.levels[0][j].mu = m0.clone();
        }
        for l in 1..=depth {
            let (head, tail) = self.levels.split_at_mut(l);
            let parents = &head[l - 1];
            let level = &mut tail[0];
            let live_kids = |p: &CantorNode| -> Vec<usize> { p.children.iter().copied().filter(|&c| level[c].live).collect() };
            let quota = if self.options.uniform_branching {
                parents.iter().filter(|p| p.kept).map(|p| live_kids(p).len()).min()
            } else {
                None
            };
            let mut picks: Vec<(usize, Rational)> = Vec::new();
            for p in parents.iter().filter(|p| p.kept) {
                let mut kids = live_kids(p);
                if let Some(qn) = quota {
                    // Keep a forced child so injected faults stay visible.
                    kids.sort_by_key(|&c| !level[c].forced);
                    kids.truncate(qn);
                    kids.sort();
                }
                let share = &p.mu / Rational::from_integer(BigInt::from(kids.len()));
                picks.extend(kids.into_iter().map(|c| (c, share.clone())));
            }
            for (c, mu) in picks {
                level[c].kept = true;
                level[c].mu = mu;
            }
        }
        for (l, sum) in self.summary.iter_mut().enumerate() {
            let kept: Vec<&Rational> = self.levels[l].iter().filter(|n| n.kept).map(|n| &n.mu).collect();
            sum.kept = kept.len();
            sum.min_mu = kept.iter().min().map(|x| (*x).clone());
            sum.max_mu = kept.iter().max().map(|x| (*x).clone());
        }
        Ok(())
    }

    /// Kept boxes of level `l` with their measure.
    pub fn kept(&self, l: u64) -> impl Iterator<Item = (usize, &CantorNode)> {
        self.levels[l as usize].iter().enumerate().filter(|(_, n)| n.kept)
    }

    /// Per level, every constructed box meeting the closed box `b`.
    pub fn meeting(&self, b: &QBox) -> Vec<Vec<usize>> {
        let mut hit: Vec<usize> = (0..self.levels[0].len()).filter(|&j| self.levels[0][j].to_box().meets_closed(b)).collect();
        let mut out = vec![hit.clone()];
        for l in 1..self.levels.len() {
            let (prev, level) = (&self.levels[l - 1], &self.levels[l]);
            hit = hit.iter().flat_map(|&j| prev[j].children.iter().copied()).filter(|&c| level[c].to_box().meets_closed(b)).collect();
            out.push(hit.clone());
        }
        out
    }

    /// Center of a deepest-level kept box drawn with probability `μ(box)`.
    pub fn sample_point(&self, rng: &mut ChaCha8Rng) -> Vec<Rational> {
        let roots: Vec<usize> = self.kept(0).map(|(j, _)| j).collect();
        let mut j = roots[rng.gen_range(0..roots.len())];
        for l in 1..self.levels.len() {
            let kids: Vec<usize> = self.levels[l - 1][j].children.iter().copied().filter(|&c| self.levels[l][c].kept).collect();
            j = kids[rng.gen_range(0..kids.len())];
        }
        self.levels[self.levels.len() - 1][j].to_box().center()
    }

    pub fn sample_points(&self, seed: u64, count: usize) -> Vec<Vec<Rational>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| self.sample_point(&mut rng)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let t: Self = serde_json::from_str(s)?;
        if t.schema != TREE_SCHEMA {
            return Err(Error::Parse(format!("unknown tree schema {:?}", t.schema)));
        }
        Ok(t)
    }

    pub fn write_summary_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "level,k,case,boxes,kept,removed_plane,removed_danger,dead_parents,point_fallbacks,min_mu,max_mu")?;
        for s in &self.summary {
            let mu = |x: &Option<Rational>| x.as_ref().map(fmt_q).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                s.level,
                s.k,
                s.case.label(),
                s.boxes,
                s.kept,
                s.removed_plane,
                s.removed_danger,
                s.dead_parents,
                s.point_fallbacks,
                mu(&s.min_mu),
                mu(&s.max_mu)
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests;
