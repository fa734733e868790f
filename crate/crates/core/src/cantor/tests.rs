use std::sync::OnceLock;

use num_traits::{One, Zero};

use super::refine::shrink;
use super::verify::anchor_norm_bounds;
use super::*;
use crate::numeric::power::PowerProduct;
use crate::numeric::rational::{q, qi, qv};
use crate::schedule::{build_schedule, verify_schedule, Mode, ToyOverrides};
use crate::Weights;

/// d = 2, w = (1/2, 1/2), τ = 2, R = 16/9, so every side and radius is
/// rational, `⌊ρ_i⌋ = 2` and `ρ = 4`. Root boxes of side 1/2, `ε_0 = 1/1600`,
/// one epoch with `n_1 = 2`, `n_1^{(i)} = 3`, `ξ = 2`, then Case 1 at `n_2 = 7`.
pub(crate) fn toy_schedule() -> ParameterSchedule {
    let over = ToyOverrides {
        r: Some(q(16, 9)),
        eps0: Some(q(1, 1600)),
        rho0: Some(vec![q(1, 2), q(1, 2)]),
        xi: Some(2),
        n: vec![2, 7],
        ni: vec![vec![3, 3], vec![14, 14]],
        ..Default::default()
    };
    let w = Weights::new(&qv(&[(1, 2), (1, 2)])).unwrap();
    build_schedule(&w, &qi(2), &q(1, 10), 2, Mode::Toy, &over).unwrap()
}

fn toy_tree() -> &'static CantorTree {
    static TREE: OnceLock<CantorTree> = OnceLock::new();
    TREE.get_or_init(|| build_tree(&toy_schedule(), &BuildOptions { depth: 7, ..Default::default() }).unwrap())
}

#[test]
fn regimes_of_the_toy_schedule() {
    let s = toy_schedule();
    let cases: Vec<CaseTag> = (0..=7).map(|l| level_regime(&s, l).unwrap().case).collect();
    use CaseTag::*;
    assert_eq!(cases, vec![Root, Case1, Case1, Case2, Case3, Case4, Case4, Case1]);
    assert_eq!(level_regime(&s, 5).unwrap().k, 1);
    assert_eq!(level_regime(&s, 2).unwrap().k, 0);
    assert_eq!(max_depth(&s), 28);
}

#[test]
fn level_zero_grid() {
    let mut s = toy_schedule();
    s.rho0 = vec![PowerProduct::from_rational(&q(1, 4)).unwrap(), PowerProduct::from_rational(&q(1, 8)).unwrap()];
    let boxes = init_level0(&s).unwrap();
    assert_eq!(boxes.len(), 32);
    let t = build_tree(&s, &BuildOptions { depth: 0, ..Default::default() }).unwrap();
    assert!(t.levels[0].iter().all(|n| n.mu == q(1, 32)));
}

#[test]
fn shrink_keeps_the_point_inside() {
    let e = QBox::new(vec![qi(0); 2], vec![q(7, 10); 2]).unwrap();
    let side = vec![q(1, 5); 2];
    // On a grid line: the lower box.
    let b = shrink(&e, &[q(2, 5), q(1, 10)], &side).unwrap();
    assert_eq!(b.lo, vec![q(1, 5), qi(0)]);
    // In the leftover strip [3/5, 7/10]: flush with the top face.
    let b = shrink(&e, &[q(13, 20), qi(0)], &side).unwrap();
    assert_eq!(b.lo, vec![q(1, 2), qi(0)]);
    assert!(b.contains_closed(&[q(13, 20), qi(0)]));
    assert!(shrink(&e, &[qi(1), qi(0)], &side).is_err());
}

#[test]
fn neighbourhood_membership() {
    let b = QBox::new(vec![qi(0); 2], vec![q(1, 10); 2]).unwrap();
    let r = vec![q(1, 100); 2];
    // x + y ranges over [−2/100, 22/100] on the thickened box.
    let line = crate::QPlane::new(vec![qi(1), qi(1)], q(23, 100)).unwrap();
    assert!(!Neighbourhood::Plane(line).meets(&r, &b));
    let line = crate::QPlane::new(vec![qi(1), qi(1)], q(22, 100)).unwrap();
    assert!(Neighbourhood::Plane(line).meets(&r, &b));
    assert!(Neighbourhood::Points(vec![vec![q(11, 100), q(1, 20)]]).meets(&r, &b));
    assert!(!Neighbourhood::Points(vec![vec![q(12, 100), q(1, 20)]]).meets(&r, &b));
    assert!(!Neighbourhood::Empty.meets(&r, &b));
}

#[test]
fn toy_structure_and_measure() {
    let t = toy_tree();
    let st = verify_structure(t).unwrap();
    assert!(st.all_pass, "{:?}", st.checks.iter().filter(|c| !c.pass).collect::<Vec<_>>());
    for name in ["side_lengths", "measure", "nested", "disjoint", "anchor_offset", "danger_cleared"] {
        assert!(st.checks.iter().any(|c| c.name == name), "{name} not checked");
    }
    for l in 0..=t.depth() {
        let total: Rational = t.kept(l).map(|(_, n)| n.mu.clone()).sum();
        assert_eq!(total, Rational::one());
    }
    // Case 2 keeps exactly one child per box.
    assert_eq!(t.levels[3].len(), t.levels[2].len());
    assert!(t.levels[2].iter().all(|n| n.children.len() == 1));
    assert!(t.summary.iter().any(|s| s.removed_danger > 0));
    assert!(t.summary.iter().any(|s| s.removed_plane > 0));
}

#[test]
fn toy_pointwise_properties() {
    let t = toy_tree();
    let rep = verify_schedule(&t.schedule).unwrap();
    let pw = verify_pointwise(t, &rep, 2).unwrap();
    assert!(pw.required_pass, "{:?}", pw.properties.iter().filter(|p| p.required && p.failures > 0).collect::<Vec<_>>());
    assert_eq!(pw.get("tau_avoidance").count(), 1);
    assert!(pw.get("eps0_avoidance").count() >= 3);
    // The toy epoch violates its schedule, so the anchor property is only a diagnostic.
    assert!(!rep.epoch_ok(1));
    assert!(pw.get("anchor").all(|p| !p.required));
}

#[test]
fn danger_regions_replay() {
    let t = toy_tree();
    assert!(!t.danger.is_empty());
    for r in t.danger.iter().take(6) {
        assert!(replay_danger_region(t, r).unwrap());
    }
}

#[test]
fn counting_bounds_on_trial_boxes() {
    let t = toy_tree();
    let rep = verify_schedule(&t.schedule).unwrap();
    let mut boxes = random_trial_boxes(t, 40, 3);
    boxes.push(QBox::unit(2));
    boxes.push(t.levels[7][0].to_box());
    let cr = verify_counts(t, &rep, &boxes).unwrap();
    assert!(cr.required_pass, "{:?}", cr.checks.iter().filter(|c| c.required && c.failures > 0).collect::<Vec<_>>());
    assert!(cr.get("projection_bound").all(|c| c.cases == boxes.len()));
    let whole = projection_bound(&t.schedule, 7, &qi(1)).unwrap().unwrap();
    assert!(Rational::from_integer(t.levels[7].len().into()) <= whole);
    assert_eq!(projection_bound(&t.schedule, 2, &qi(1)).unwrap(), None);
}

#[test]
fn injected_fault_is_caught_with_a_witness() {
    let s = toy_schedule();
    let t = build_tree(&s, &BuildOptions { depth: 6, inject_fault: true, ..Default::default() }).unwrap();
    assert!(t.levels.iter().flatten().any(|n| n.forced));
    let rep = verify_schedule(&s).unwrap();
    let props = verify_pointwise_level(&t, &rep, 6, 2).unwrap();
    let p3 = props.iter().find(|p| p.property == "tau_avoidance").unwrap();
    assert!(p3.required);
    assert!(p3.failures >= 1);
    let w = p3.witness.as_ref().unwrap();
    assert!(w.confirmed);
    assert!(t.levels[6][w.node].forced);
    assert!(t.levels[6][w.node].to_box().contains_closed(&w.x));
}

#[test]
fn anchor_bounds_on_a_synthetic_box() {
    let s = toy_schedule();
    // p/q = (1/5, 2/5), q = 5, c = 3/4: the annulus per axis is [1/50, 1/25).
    let p = vec![1.into(), 2.into()];
    let c = q(3, 4);
    let y = [q(1, 5) + q(3, 100), q(2, 5) + q(3, 100)];
    let half = q(1, 200);
    let b = QBox::new(y.iter().map(|v| v - &half).collect(), y.iter().map(|v| v + &half).collect()).unwrap();
    assert_eq!(anchor_norm_bounds(&s, &b, &p, &5.into(), &c).unwrap(), (true, true));
    let wide = QBox::new(y.iter().map(|v| v - q(1, 50)).collect(), y.iter().map(|v| v + q(1, 50)).collect()).unwrap();
    assert_eq!(anchor_norm_bounds(&s, &wide, &p, &5.into(), &c).unwrap(), (false, false));
}

#[test]
fn sampling_follows_the_measure() {
    let s = toy_schedule();
    let t = build_tree(&s, &BuildOptions { depth: 2, uniform_branching: false, ..Default::default() }).unwrap();
    let leaves: Vec<(Vec<Rational>, f64)> =
        t.kept(2).map(|(_, n)| (n.to_box().center(), crate::numeric::rational::to_f64(&n.mu))).collect();
    assert!(leaves.len() > 1);
    let draws = 10_000;
    let pts = t.sample_points(11, draws);
    for (c, mu) in &leaves {
        let hits = pts.iter().filter(|p| *p == c).count() as f64;
        let sd = (draws as f64 * mu * (1.0 - mu)).sqrt();
        assert!((hits - draws as f64 * mu).abs() <= 4.0 * sd + 1.0, "{hits} vs {}", draws as f64 * mu);
    }
    assert_eq!(pts, t.sample_points(11, draws));
}

#[test]
fn tree_json_round_trip_and_csv() {
    let s = toy_schedule();
    let t = build_tree(&s, &BuildOptions { depth: 3, ..Default::default() }).unwrap();
    let back = CantorTree::from_json(&t.to_json().unwrap()).unwrap();
    assert_eq!(back, t);
    let mut csv = Vec::new();
    t.write_summary_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(text.lines().nth(4).unwrap().starts_with("3,1,case2,"));
    assert!(t.levels[3].iter().all(|n| n.anchor.is_some()));
    assert!(t.levels[1].iter().all(|n| n.kept != n.mu.is_zero()));
}

#[test]
fn rejects_depth_beyond_horizon() {
    let s = toy_schedule();
    assert!(build_tree(&s, &BuildOptions { depth: 29, ..Default::default() }).is_err());
    assert!(level_regime(&s, 29).is_err());
}

mod local_dim {
    use super::*;
    use crate::dimension::{local_dimension, make_profile, scale_index};

    fn rho1_ln() -> f64 {
        (64.0f64 / 27.0).ln()
    }

    #[test]
    fn scale_index_brackets_the_side() {
        let s = toy_schedule();
        for (num, den) in [(1, 3), (27, 64), (1, 10), (729, 4096), (1, 1000)] {
            let ell = q(num, den);
            let n = scale_index(&s, &ell).unwrap();
            // ρ_1 = 64/27 exactly, so the bracket can be checked in rationals.
            let rho = q(64, 27);
            let lo = crate::numeric::rational::pow_q(&rho, -(n + 1));
            let hi = crate::numeric::rational::pow_q(&rho, -n);
            assert!(lo <= ell && ell < hi, "{num}/{den} -> {n}");
        }
    }

    #[test]
    fn deepest_box_has_nonnegative_local_exponent() {
        let t = toy_tree();
        let (_, e) = t.kept(7).next().unwrap();
        let rep = local_dimension(t, &[e.to_box()]).unwrap();
        let r = &rep.records[0];
        assert!(r.mu_bound_holds);
        assert!(r.mass >= e.mu);
        assert!(r.log_ell_mu_approx.unwrap() >= 0.0);
    }

    #[test]
    fn lower_bound_replays_with_brute_force_counts() {
        let t = toy_tree();
        // Side (27/64)^4 gives n = 3 in epoch 1, so n_B = n_1^{(2)} + 1 = 4.
        let ell = crate::numeric::rational::pow_q(&q(27, 64), 4);
        let boxes: Vec<QBox> = t
            .kept(5)
            .step_by(3)
            .map(|(_, e)| {
                let c = e.to_box().center();
                QBox::from_center(&c, &[&ell / qi(2), &ell / qi(2)]).unwrap()
            })
            .collect();
        let rep = local_dimension(t, &boxes).unwrap();
        let f = make_profile(&t.schedule).eval(&q(2, 3)).unwrap();
        for (b, r) in boxes.iter().zip(&rep.records) {
            assert_eq!((r.n, r.n_b, r.k), (3, 4, 1));
            let all: Vec<&CantorNode> = t.levels[4].iter().filter(|n| n.kept).collect();
            let count = all.iter().filter(|n| n.to_box().meets_closed(b)).count();
            assert!(count >= 1);
            assert_eq!(r.count, count);
            assert_eq!(r.level_boxes, all.len());
            assert_eq!(r.mu_bound, Rational::new(count.into(), all.len().into()));
            assert!(r.mu_bound_holds);
            let want = (all.len() as f64).ln() / (4.0 * rho1_ln()) - (count as f64).ln() / (3.0 * rho1_ln());
            assert!((r.log_ell_mu_lower_approx.unwrap() - want).abs() < 1e-12);
            assert!(r.log_ell_mu_lower_approx.unwrap() <= r.log_ell_mu_approx.unwrap() + 1e-12);
            assert_eq!(r.f_main_term, f);
            assert!((r.residual_approx.unwrap() - (want - crate::numeric::rational::to_f64(&f))).abs() < 1e-12);
        }
        let mut csv = Vec::new();
        rep.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("box_id,ell,n,n_B,mu_bound,log_ell_mu,f_main_term,residual\n"));
        assert_eq!(text.lines().count(), boxes.len() + 1);
    }

    #[test]
    fn sides_outside_the_resolved_scales_are_rejected() {
        let t = toy_tree();
        assert!(local_dimension(t, &[QBox::unit(2)]).is_err());
        let tiny = QBox::new(vec![qi(0); 2], vec![q(1, 1_000_000); 2]).unwrap();
        assert!(local_dimension(t, &[tiny]).is_err());
    }

    #[test]
    fn random_boxes_report_finite_residuals() {
        let t = toy_tree();
        let boxes: Vec<QBox> = random_trial_boxes(t, 20, 5)
            .into_iter()
            .filter(|b| scale_index(&t.schedule, &b.side(0)).map_or(false, |n| n >= 1))
            .collect();
        let rep = local_dimension(t, &boxes).unwrap();
        assert!(rep.all_bounds_hold);
        assert!(rep.max_abs_residual_approx.map_or(true, f64::is_finite));
    }
}
