use std::cmp::Ordering;

use exactapprox::dimension::PiecewiseLinearProfile;
use exactapprox::numeric::rational::{ceil_int, floor_int, pow_q, q, qi, to_f64};
use exactapprox::numeric::{affine_hull, ceil_log, dangerous_rationals, plane_meets_box, weighted_norm_cmp, AffinePlane, AxisBox, Corner, PowerProduct};
use exactapprox::weights::{auxiliary_weights, check_auxiliary, delta0_bound, final_lower_bound, rynne_dimension};
use exactapprox::{QBox, Rational, Weights};
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use proptest::prelude::*;

fn weights_from(raw: &[u32]) -> Weights {
    let mut v: Vec<i64> = raw.iter().map(|&x| x as i64).collect();
    v.sort_unstable();
    let total: i64 = v.iter().sum();
    Weights::new(&v.iter().map(|&x| q(x, total)).collect::<Vec<_>>()).unwrap()
}

fn weights() -> impl Strategy<Value = Weights> {
    prop::collection::vec(1u32..12, 1..=3).prop_map(|r| weights_from(&r))
}

fn tau() -> impl Strategy<Value = Rational> {
    (11i64..=50).prop_map(|k| q(k, 10))
}

fn small_q() -> impl Strategy<Value = Rational> {
    (-40i64..=40, 1i64..=12).prop_map(|(n, d)| q(n, d))
}

fn unit_q() -> impl Strategy<Value = Rational> {
    (0i64..=60, 1i64..=60).prop_map(|(n, d)| q(n.min(d), d))
}

fn qbox(d: usize) -> impl Strategy<Value = QBox> {
    prop::collection::vec((unit_q(), 1i64..=30, 1i64..=60), d).prop_map(|v| {
        let (lo, hi): (Vec<_>, Vec<_>) = v.into_iter().map(|(a, n, m)| (a.clone(), a + q(n, m))).unzip();
        AxisBox::new(lo, hi).unwrap()
    })
}

/// Delta as a tenth-step fraction of the admissible bound, if admissible.
fn admissible_delta(w: &Weights, tau: &Rational, step: i64) -> Option<Rational> {
    let d0 = delta0_bound(w, tau).ok()?;
    let delta = d0 * q(step, 10);
    auxiliary_weights(w, tau, &delta).ok().map(|_| delta)
}

/// `|s x − r| <= (eps/s)^{a/b}` for some `x` in `[lo, hi]`, by the direct
/// double loop over `r` near `s·mid`.
fn brute_dangerous(e: &QBox, s_lo: i64, s_hi: i64, u: &[Rational], eps: &Rational) -> Vec<(i64, Vec<BigInt>)> {
    let d = e.dim();
    let mut out = Vec::new();
    for s in s_lo..s_hi {
        let sq = qi(s);
        let ratio = eps / &sq;
        let axis: Vec<Vec<BigInt>> = (0..d)
            .map(|i| {
                let mid = (&e.lo[i] + &e.hi[i]) / qi(2);
                let width = (&e.hi[i] - &e.lo[i]) / qi(2);
                let reach = &sq * &width + Rational::one();
                let (a, b) = (floor_int(&(&sq * &mid - &reach)), ceil_int(&(&sq * &mid + &reach)));
                let (a, b) = (a.to_i64().unwrap(), b.to_i64().unwrap());
                (a..=b)
                    .filter(|&r| {
                        let r = qi(r);
                        let (x0, x1) = (&sq * &e.lo[i], &sq * &e.hi[i]);
                        let dist = if r < x0 { x0 - r } else if r > x1 { r - x1 } else { Rational::zero() };
                        let num = u[i].numer().to_usize().unwrap();
                        let den = u[i].denom().to_usize().unwrap();
                        num_traits::pow(dist, den) <= num_traits::pow(ratio.clone(), num)
                    })
                    .map(BigInt::from)
                    .collect()
            })
            .collect();
        let mut combos: Vec<Vec<BigInt>> = vec![vec![]];
        for a in &axis {
            combos = combos.iter().flat_map(|c| a.iter().map(move |r| [c.clone(), vec![r.clone()]].concat())).collect();
        }
        out.extend(combos.into_iter().map(|r| (s, r)));
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quasinorm_is_homogeneous(
        x in prop::collection::vec(small_q(), 2),
        wraw in prop::collection::vec(1u32..6, 2),
        base in (1i64..=5, 1i64..=5),
        c in (1i64..=30, 1i64..=10),
    ) {
        let w = weights_from(&wraw);
        let u = w.as_slice();
        let l: i64 = u.iter().map(|ui| ui.denom().to_i64().unwrap()).fold(1, num_integer::lcm);
        let b = q(base.0, base.1);
        let t = pow_q(&b, l);
        let scaled: Vec<Rational> = x.iter().zip(u).map(|(xi, ui)| pow_q(&b, (ui * qi(l)).to_integer().to_i64().unwrap()) * xi).collect();
        let c = q(c.0, c.1);
        prop_assert_eq!(weighted_norm_cmp(&scaled, u, &(&t * &c)).unwrap(), weighted_norm_cmp(&x, u, &c).unwrap());
    }

    #[test]
    fn dangerous_rationals_match_the_double_loop(
        e in qbox(2),
        wraw in prop::collection::vec(1u32..5, 2),
        s_lo in 1i64..6,
        span in 1i64..12,
        eps in (1i64..=9, 10i64..=40),
    ) {
        let w = weights_from(&wraw);
        let eps = q(eps.0, eps.1);
        let got = dangerous_rationals(&e, &BigInt::from(s_lo), &BigInt::from(s_lo + span), w.as_slice(), &eps).unwrap();
        let got: Vec<(i64, Vec<BigInt>)> = got.into_iter().map(|v| (v.q.to_i64().unwrap(), v.p)).collect();
        prop_assert_eq!(got, brute_dangerous(&e, s_lo, s_lo + span, w.as_slice(), &eps));
    }

    #[test]
    fn affine_rank_ignores_order_and_hull_points(
        pts in prop::collection::vec(prop::collection::vec(small_q(), 3), 1..5),
        mix in small_q(),
        rot in 0usize..5,
    ) {
        let (r0, _) = affine_hull(&pts, 3).unwrap();
        let mut shuffled = pts.clone();
        let k = rot % shuffled.len();
        shuffled.rotate_left(k);
        shuffled.reverse();
        prop_assert_eq!(affine_hull(&shuffled, 3).unwrap().0, r0);
        let a = &pts[0];
        let b = &pts[pts.len() - 1];
        let inside: Vec<Rational> = a.iter().zip(b).map(|(x, y)| x + &mix * (y - x)).collect();
        let mut more = pts.clone();
        more.push(inside);
        prop_assert_eq!(affine_hull(&more, 3).unwrap().0, r0);
    }

    #[test]
    fn hull_plane_contains_every_point(pts in prop::collection::vec(prop::collection::vec(small_q(), 3), 1..4)) {
        let (r, plane) = affine_hull(&pts, 3).unwrap();
        prop_assert!(r <= 2);
        let plane = plane.unwrap();
        prop_assert!(pts.iter().all(|p| plane.contains(p)));
    }

    #[test]
    fn plane_meets_box_iff_corner_signs_differ(
        normal in prop::collection::vec(small_q(), 3),
        offset in small_q(),
        e in qbox(3),
    ) {
        prop_assume!(normal.iter().any(|a| !a.is_zero()));
        let plane = AffinePlane::new(normal, offset).unwrap();
        let signs: Vec<Ordering> = e.corners().iter().map(|c| plane.residual(c).cmp(&Rational::zero())).collect();
        let separated = signs.iter().all(|s| *s == Ordering::Greater) || signs.iter().all(|s| *s == Ordering::Less);
        prop_assert_eq!(plane_meets_box(&plane, &e.center(), &e.half_sides()), !separated);
    }

    #[test]
    fn subdivision_preserves_volume(
        e in qbox(2),
        frac in prop::collection::vec((1i64..=7, 1i64..=7), 2),
        upper in any::<bool>(),
    ) {
        let side: Vec<Rational> = e.sides().iter().zip(&frac).map(|(s, (a, b))| s * q(*a.min(b), *a.max(b)) ).collect();
        let anchor = if upper { Corner::Upper } else { Corner::Lower };
        let (full, rem) = e.subdivide(&side, anchor).unwrap();
        let total = full.iter().chain(&rem).fold(Rational::zero(), |acc, b| acc + b.volume());
        prop_assert_eq!(total, e.volume());
        prop_assert!(full.iter().chain(&rem).all(|b| e.contains_box(b)));
    }

    #[test]
    fn contained_boxes_meet(a in qbox(2), b in qbox(2)) {
        prop_assert_eq!(a.meets_closed(&b), b.meets_closed(&a));
        if a.contains_box(&b) {
            prop_assert!(a.meets_closed(&b));
            prop_assert!(a.contains_closed(&b.center()));
        }
        if a.meets_half_open(&b) {
            prop_assert!(a.meets_closed(&b));
        }
    }

    #[test]
    fn power_comparisons_follow_floats(
        a in (1i64..=50, 1i64..=50), e in (-9i64..=9, 1i64..=6),
        b in (1i64..=50, 1i64..=50), f in (-9i64..=9, 1i64..=6),
    ) {
        let x = PowerProduct::pow_of(&q(a.0, a.1), &q(e.0, e.1)).unwrap();
        let y = PowerProduct::pow_of(&q(b.0, b.1), &q(f.0, f.1)).unwrap();
        let (lx, ly) = (x.ln_approx(), y.ln_approx());
        if (lx - ly).abs() > 1e-9 {
            prop_assert_eq!(x.cmp_pp(&y).unwrap(), lx.partial_cmp(&ly).unwrap());
        }
        prop_assert_eq!(x.cmp_pp(&x).unwrap(), Ordering::Equal);
        prop_assert_eq!((x.clone() * y.clone()).cmp_pp(&(y.clone() * x.clone())).unwrap(), Ordering::Equal);
    }

    #[test]
    fn ceil_log_is_the_least_exponent(t in (2i64..=10_000, 1i64..=7), b in (3i64..=9, 1i64..=2)) {
        let target = PowerProduct::from_rational(&q(t.0, t.1)).unwrap();
        let base = PowerProduct::from_rational(&q(b.0, b.1)).unwrap();
        let n = ceil_log(&target, &base).unwrap().to_i64().unwrap();
        prop_assert!(!base.powi(n).lt(&target).unwrap());
        prop_assert!(base.powi(n - 1).lt(&target).unwrap());
    }

    #[test]
    fn auxiliary_weights_satisfy_their_conditions(w in weights(), tau in tau(), step in 1i64..=10) {
        let Some(delta) = admissible_delta(&w, &tau, step) else { return Ok(()) };
        let aux = auxiliary_weights(&w, &tau, &delta).unwrap();
        prop_assert!(check_auxiliary(&w, &tau, &aux).is_empty());
        prop_assert!(aux.wtilde.windows(2).all(|p| p[0] <= p[1]));
        prop_assert_eq!(aux.wtilde.iter().fold(Rational::zero(), |a, b| a + b), Rational::one());
    }

    #[test]
    fn dimension_decreases_with_tau(w in weights(), t in 11i64..=40, dt in 1i64..=20) {
        let lo = rynne_dimension(&w, &q(t, 10)).unwrap().value;
        let hi = rynne_dimension(&w, &q(t + dt, 10)).unwrap().value;
        prop_assert!(hi <= lo);
    }

    #[test]
    fn equal_weights_dimension_closed_form(d in 1usize..=4, tau in tau()) {
        let dq = qi(d as i64);
        let expect = &dq * (&dq + qi(1)) / (&dq + &tau);
        prop_assert_eq!(rynne_dimension(&Weights::equal(d), &tau).unwrap().value, expect);
    }

    #[test]
    fn profile_segments_and_slopes(w in weights(), tau in tau(), step in 1i64..=10, xs in prop::collection::vec((1i64..=997, 1i64..=997), 8)) {
        let Some(delta) = admissible_delta(&w, &tau, step) else { return Ok(()) };
        let aux = auxiliary_weights(&w, &tau, &delta).unwrap();
        let p = PiecewiseLinearProfile::from_weights(&w, &tau, &aux.wtilde).unwrap();
        let d = w.dim();
        let one = Rational::one();
        let big_l: Vec<Rational> = aux.wtilde.iter().map(|x| (&one + x) / (&one + &aux.wtilde[0])).collect();
        let zeta: Vec<Rational> = (0..d).map(|i| (&one + &tau * w.get(i)) / (&one + &aux.wtilde[i])).collect();
        for k in 0..=d {
            for h in 1..d {
                prop_assert!(p.slope(h, k) <= p.slope(h + 1, k));
            }
        }
        let min = p.minimize();
        for (a, b) in xs {
            let x = q(a.min(b), a.max(b));
            let direct = (0..d).fold(Rational::zero(), |acc, i| {
                let lx = &big_l[i] * &x;
                let z = &one - &zeta[i] * &lx;
                acc + lx.min(one.clone()) + z.max(Rational::zero())
            });
            let (h, k) = p.locate(&x).unwrap();
            prop_assert_eq!(p.segment(h, k, &x), direct.clone());
            prop_assert_eq!(p.eval(&x).unwrap(), direct.clone());
            prop_assert!(min.value <= direct);
        }
    }

    #[test]
    fn profile_minimum_is_the_final_bound(w in weights(), tau in tau(), step in 1i64..=10) {
        let Some(delta) = admissible_delta(&w, &tau, step) else { return Ok(()) };
        let fb = final_lower_bound(&w, &tau, &delta).unwrap();
        let pm = PiecewiseLinearProfile::from_weights(&w, &tau, &fb.aux.wtilde).unwrap().minimize();
        prop_assert_eq!(&pm.value, &fb.value);
        let dim = rynne_dimension(&w, &tau).unwrap().value;
        let tol = &delta * (qi(w.dim() as i64) + &tau);
        prop_assert!((&dim - &fb.value).abs() <= tol);
    }
}

#[test]
fn final_bound_approaches_the_dimension() {
    for raw in [[1u32, 1], [1, 4], [2, 3]] {
        let w = weights_from(&raw);
        let tau = q(3, 2);
        let dim = to_f64(&rynne_dimension(&w, &tau).unwrap().value);
        let d0 = delta0_bound(&w, &tau).unwrap();
        let gaps: Vec<f64> = [1i64, 10, 100, 1000]
            .iter()
            .map(|k| (dim - to_f64(&final_lower_bound(&w, &tau, &(&d0 / qi(*k))).unwrap().value)).abs())
            .collect();
        assert!(gaps.windows(2).all(|g| g[1] <= g[0] + 1e-12), "{gaps:?}");
        assert!(gaps[3] < 1e-2, "{gaps:?}");
    }
}
