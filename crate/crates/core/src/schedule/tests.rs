use num_bigint::BigInt;

use super::*;
use crate::numeric::rational::{q, qv};

fn wv(p: &[(i64, i64)]) -> Weights {
    Weights::new(&qv(p)).unwrap()
}

#[test]
fn base_constants_equal_weights() {
    let b = base_constants(&wv(&[(1, 2), (1, 2)]), &qi(2), &q(1, 10)).unwrap();
    assert_eq!(b.aux.wtilde, qv(&[(1, 2), (1, 2)]));
    assert_eq!(b.alpha, qi(2));
    assert_eq!(b.alpha_prime, qi(1));
    assert_eq!(b.xi0, q(7, 3));
    assert_eq!(b.xi, 3);
    // 16^{3/2} = 64 > 48 > 8^{3/2}
    assert_eq!(b.r_min, qi(16));
}

#[test]
fn integral_xi0_is_bumped() {
    // d = 1, τ = 3: ξ_0 = (1+3)/(1+1) + 1 = 3, so ξ = 4.
    let b = base_constants(&wv(&[(1, 1)]), &qi(3), &q(1, 10)).unwrap();
    assert_eq!(b.xi0, qi(3));
    assert_eq!(b.xi, 4);
}

#[test]
fn rho_for_r16() {
    let over = ToyOverrides { r: Some(qi(16)), n: vec![4], ..Default::default() };
    let s = build_schedule(&wv(&[(1, 2), (1, 2)]), &qi(2), &q(1, 10), 1, Mode::Toy, &over).unwrap();
    assert_eq!(s.rho_floor, vec![64, 64]);
    assert_eq!(s.rho, BigInt::from(4096));
}

#[test]
fn faithful_first_epoch_matches_direct_evaluation() {
    let s = build_schedule(&wv(&[(1, 1)]), &qi(2), &q(1, 10), 1, Mode::Faithful, &ToyOverrides::default()).unwrap();
    // R^2 > 16 gives R = 8 unless doubled; ε_0 = R^{-4}/2, C = 10.
    let r = s.r.to_integer();
    let eps0_inv = num_traits::pow(r.clone(), 4) * 2;
    assert_eq!(s.nk_factor, qi(10));
    let target = num_traits::pow(eps0_inv, 10);
    let mut n = 1u64;
    while num_traits::pow(r.clone(), n as usize) < target {
        n += 1;
    }
    assert_eq!(s.epochs[0].n, n);
    if s.r_doublings == 0 {
        assert_eq!(n, 44);
    }
    let rep = verify_schedule(&s).unwrap();
    assert!(rep.all_pass, "{:?}", rep.failures().collect::<Vec<_>>());
}

#[test]
fn toy_top_indices_follow_formula() {
    let over = ToyOverrides { r: Some(qi(16)), eps0: Some(q(1, 256)), n: vec![4], ..Default::default() };
    let s = build_schedule(&wv(&[(1, 2), (1, 2)]), &qi(2), &q(1, 10), 1, Mode::Toy, &over).unwrap();
    // ⌊(4/3)(4 + 4)⌋ + 1
    let want = (BigInt::from(4 * 32) / BigInt::from(3 * 4)).to_u64().unwrap() + 1;
    assert_eq!(s.epochs[0].ni, vec![want, want]);
    assert_eq!(want, 11);
}

#[test]
fn toy_violation_is_reported() {
    let over = ToyOverrides { r: Some(qi(4)), eps0: Some(q(1, 2)), n: vec![1], ..Default::default() };
    let s = build_schedule(&wv(&[(1, 2), (1, 2)]), &qi(2), &q(1, 10), 1, Mode::Toy, &over).unwrap();
    let rep = verify_schedule(&s).unwrap();
    assert!(!rep.all_pass);
    assert!(!rep.get("nk_lower_bound", Some(1))[0].pass);
    assert!(!rep.epoch_ok(1));
}

#[test]
fn equal_weights_axis_identity_has_unit_margin() {
    let s = build_schedule(&wv(&[(1, 2), (1, 2)]), &qi(2), &q(1, 10), 1, Mode::Faithful, &ToyOverrides::default()).unwrap();
    let rep = verify_schedule(&s).unwrap();
    let dom = rep.get("axis_one_dominates", Some(1));
    assert!(!dom.is_empty());
    assert!(dom.iter().all(|c| c.pass && c.margin == "1"));
    assert!(rep.all_pass, "{:?}", rep.failures().collect::<Vec<_>>());
}

#[test]
fn toy_structural_errors() {
    let w = wv(&[(1, 2), (1, 2)]);
    let bad_ni = ToyOverrides { r: Some(qi(4)), n: vec![2], ni: vec![vec![5, 4]], ..Default::default() };
    assert!(build_schedule(&w, &qi(2), &q(1, 10), 1, Mode::Toy, &bad_ni).is_err());
    let bad_c = ToyOverrides { r: Some(qi(4)), n: vec![2], c: vec![qi(1)], ..Default::default() };
    assert!(build_schedule(&w, &qi(2), &q(1, 10), 1, Mode::Toy, &bad_c).is_err());
    let no_r = ToyOverrides { n: vec![2], ..Default::default() };
    assert!(build_schedule(&w, &qi(2), &q(1, 10), 1, Mode::Toy, &no_r).is_err());
    assert!(build_schedule(&w, &qi(2), &q(1, 2), 1, Mode::Faithful, &ToyOverrides::default()).is_err());
}

#[test]
fn json_round_trip() {
    let s = build_schedule(&wv(&[(1, 3), (2, 3)]), &qi(3), &q(1, 100), 2, Mode::Faithful, &ToyOverrides::default()).unwrap();
    let js = s.to_json().unwrap();
    let back = ParameterSchedule::from_json(&js).unwrap();
    assert_eq!(back, s);
    assert_eq!(back.to_json().unwrap(), js);
}

#[test]
fn faithful_eps_and_gap_monotone() {
    let s = build_schedule(&wv(&[(1, 3), (2, 3)]), &qi(3), &q(1, 100), 3, Mode::Faithful, &ToyOverrides::default()).unwrap();
    for k in 1..s.k_max() {
        assert!(s.epochs[k].eps.lt(&s.epochs[k - 1].eps).unwrap());
        assert!(s.epochs[k].gap.lt(&s.epochs[k - 1].gap).unwrap());
    }
    let rep = verify_schedule(&s).unwrap();
    assert!(rep.all_pass, "{:?}", rep.failures().collect::<Vec<_>>());
}
