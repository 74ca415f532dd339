mod common;

use common::*;
use fhp_core::model::{
    etas_compensator, etas_intensity, etas_loglik, fhp_compensator, fhp_intensity, fhp_loglik,
    FhpLikelihood,
};
use fhp_core::{ml_kernel, ml_survival, Catalog, Event, FhpParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn point_values_against_high_precision() {
    // mpmath, 40 digits
    assert!(rel(ml_kernel(0.3, 0.7, 2.0).unwrap(), 0.700_500_922_820_733_8) < 1e-12);
    assert!(rel(ml_kernel(0.5, 0.7, 1.0).unwrap(), 0.410_640_780_145_230_2) < 1e-12);
    assert!(rel(ml_survival(10.0, 0.7, 1.0).unwrap(), 0.077_362_952_000_355_5) < 1e-10);

    let cat = Catalog::new(vec![Event::new(1.0, 3.5)], 2.5, 0.0, 2.0, "one").unwrap();
    let p = FhpParams::new(0.5, 0.4, 1.2, 0.7, 2.0);
    let lam = fhp_intensity(1.3, &cat, &p, false).unwrap();
    assert!(rel(lam, 1.430_297_987_299_874_6) < 1e-12);
}

#[test]
fn exponential_kernel_reduction() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let cat = random_catalog(&mut rng, 200, 2.5);
        let p = random_fhp(&mut rng, Some(1.0));
        let want = exp_hawkes_loglik(&cat, p.lambda0, p.alpha, p.gamma, p.c);
        let got = fhp_loglik(&cat, &p, false).unwrap();
        assert!((got - want).abs() <= 1e-8, "{got} vs {want}");
        let cached = FhpLikelihood::new(&cat, false).unwrap().eval(&p).unwrap();
        assert!((cached - want).abs() <= 1e-8, "{cached} vs {want}");
    }
}

#[test]
fn compensators_match_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..6 {
        let cat = random_catalog(&mut rng, 40, 3.0);
        let p = random_fhp(&mut rng, None);
        let e = random_etas(&mut rng);
        let t = rng.random_range(cat.events()[0].time..cat.t_end());
        for restricted in [false, true] {
            let want = fhp_compensator_quadrature(&cat, &p, restricted, t);
            let got = fhp_compensator(t, &cat, &p, restricted).unwrap();
            assert!(rel(got, want) <= 1e-6, "{p:?} {restricted}: {got} vs {want}");
        }
        let want = etas_compensator_quadrature(&cat, &e, cat.t_end());
        let got = etas_compensator(cat.t_end(), &cat, &e).unwrap();
        assert!(rel(got, want) <= 1e-6, "{e:?}: {got} vs {want}");
    }
}

#[test]
fn intensity_is_a_left_limit() {
    let cat = Catalog::new(
        vec![Event::new(1.0, 3.0), Event::new(2.0, 4.0)],
        2.5,
        0.0,
        5.0,
        "two",
    )
    .unwrap();
    let p = FhpParams::new(0.2, 0.5, 1.0, 0.8, 1.5);
    let at = fhp_intensity(2.0, &cat, &p, false).unwrap();
    let only_first = 0.2 + 0.5 * (0.5f64).exp() * ml_kernel(1.0, 0.8, 1.5).unwrap();
    assert!(rel(at, only_first) < 1e-14);
    assert!(fhp_intensity(2.0 + 1e-6, &cat, &p, false).unwrap() > 10.0 * at);
    assert_eq!(fhp_intensity(0.5, &cat, &p, false).unwrap(), 0.2);
    assert_eq!(fhp_intensity(2.0, &cat, &p, true).unwrap(), at - 0.2);
    assert!(fhp_intensity(5.5, &cat, &p, false).is_err());
    assert!(fhp_intensity(0.5, &cat, &p, true).is_err());
}

#[test]
fn magnitude_shift_invariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let cat = random_catalog(&mut rng, 150, 2.5);
    let shift = 1.75;
    let moved: Vec<Event> = cat
        .events()
        .iter()
        .map(|e| Event::new(e.time, e.magnitude + shift))
        .collect();
    let cat2 = Catalog::new(moved, 2.5 + shift, cat.t_start(), cat.t_end(), "moved").unwrap();
    let p = random_fhp(&mut rng, None);
    let e = random_etas(&mut rng);
    for restricted in [false, true] {
        let a = fhp_loglik(&cat, &p, restricted).unwrap();
        let b = fhp_loglik(&cat2, &p, restricted).unwrap();
        assert!(rel(a, b) < 1e-12, "{a} vs {b}");
    }
    let a = etas_loglik(&cat, &e).unwrap();
    assert!(rel(a, etas_loglik(&cat2, &e).unwrap()) < 1e-12);
}

#[test]
fn compensators_are_monotone() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let cat = random_catalog(&mut rng, 80, 2.5);
    let p = random_fhp(&mut rng, None);
    let e = random_etas(&mut rng);
    let t1 = cat.events()[0].time;
    let grid: Vec<f64> = (0..=2000)
        .map(|k| t1 + (cat.t_end() - t1) * k as f64 / 2000.0)
        .collect();
    for restricted in [false, true] {
        let v: Vec<f64> = grid
            .iter()
            .map(|&t| fhp_compensator(t, &cat, &p, restricted).unwrap())
            .collect();
        assert!(v.windows(2).all(|w| w[1] >= w[0]));
    }
    assert_eq!(fhp_compensator(t1, &cat, &p, true).unwrap(), 0.0);
    assert_eq!(fhp_compensator(0.0, &cat, &p, false).unwrap(), 0.0);
    let v: Vec<f64> = grid
        .iter()
        .map(|&t| etas_compensator(t, &cat, &e).unwrap())
        .collect();
    assert!(v.windows(2).all(|w| w[1] >= w[0]));
    assert!(etas_intensity(t1 + 1e-3, &cat, &e).unwrap() >= e.mu);
}

#[test]
fn restricted_loglik_is_conditional_on_first_event() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let cat = random_catalog(&mut rng, 60, 2.5);
    let mut p = random_fhp(&mut rng, None);
    let restricted = fhp_loglik(&cat, &p, true).unwrap();
    // λ₀ is ignored in restricted mode
    p.lambda0 = 123.0;
    assert_eq!(fhp_loglik(&cat, &p, true).unwrap(), restricted);
    // brute force: log intensities of events 2..N minus Λ over [t1, tN]
    let ev = cat.events();
    let logs: f64 = ev[1..]
        .iter()
        .map(|e| fhp_intensity(e.time, &cat, &p, true).unwrap().ln())
        .sum();
    let tn = ev.last().unwrap().time;
    let want = logs - fhp_compensator(tn, &cat, &p, true).unwrap();
    assert!(rel(restricted, want) < 1e-12);
}
