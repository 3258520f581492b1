mod common;

use common::*;
use locality::rational::RationalMatrix;
use locality::{sampling, StateSpace};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn random_ss(seed: u64, n: usize, p: usize, m: usize, proper: bool) -> StateSpace {
    let mut r = rng(seed);
    let a = random_stable_a(&mut r, n, 0.3);
    let b = random_matrix(&mut r, n, m);
    let c = random_matrix(&mut r, p, n);
    let d = if proper { random_matrix(&mut r, p, m) } else { DMatrix::zeros(p, m) };
    StateSpace::new(a, b, c, d).unwrap()
}

fn max_gap(g: &StateSpace, h: &StateSpace, seed: u64) -> f64 {
    sampling::points(10, seed)
        .into_iter()
        .map(|s| cmax(&(g.evaluate(s).unwrap() - h.evaluate(s).unwrap())))
        .fold(0.0, f64::max)
}

#[test]
fn series_of_lags_matches_product() {
    let g = StateSpace::new(DMatrix::from_element(1, 1, -1.0), DMatrix::from_element(1, 1, 1.0), DMatrix::from_element(1, 1, 1.0), DMatrix::zeros(1, 1)).unwrap();
    let h = StateSpace::new(DMatrix::from_element(1, 1, -2.0), DMatrix::from_element(1, 1, 1.0), DMatrix::from_element(1, 1, 3.0), DMatrix::zeros(1, 1)).unwrap();
    let gh = StateSpace::series(&g, &h).unwrap();
    // 3 / ((s + 1)(s + 2)) has H2 norm squared 9 / 12
    assert!((gh.h2_norm().unwrap().powi(2) - 0.75).abs() < 1e-12);
    let tf = gh.tf_of();
    let want = entry(&[3.0], &[2.0, 3.0, 1.0]);
    let s = c(0.7, 1.3);
    assert!((tf.get(0, 0).eval(s).unwrap() - want.eval(s).unwrap()).norm() < 1e-12);
}

#[test]
fn minimal_removes_duplicated_modes() {
    let g = random_ss(11, 3, 2, 2, false);
    let doubled = StateSpace::parallel(&g, &g.scale_output(-0.5)).unwrap();
    assert_eq!(doubled.n_states(), 6);
    let m = doubled.minimal(1e-9);
    assert_eq!(m.n_states(), 3);
    assert!(max_gap(&m, &doubled, 1) < 1e-9);
    let zero = StateSpace::parallel(&g, &g.neg()).unwrap().minimal(1e-9);
    assert_eq!(zero.n_states(), 0);
}

#[test]
fn inverse_needs_invertible_feedthrough() {
    let g = random_ss(5, 2, 2, 2, false);
    assert!(g.inverse().is_err());
    let mut r = rng(6);
    let d = DMatrix::identity(2, 2) * 2.0 + random_matrix(&mut r, 2, 2) * 0.3;
    let g = StateSpace::new(g.a().clone(), g.b().clone(), g.c().clone(), d).unwrap();
    let gi = g.inverse().unwrap();
    for s in sampling::points(5, 2) {
        let prod = g.evaluate(s).unwrap() * gi.evaluate(s).unwrap();
        assert!(cmax(&(prod - DMatrix::<Complex64>::identity(2, 2))) < 1e-10);
    }
}

#[test]
fn json_round_trips() {
    let g = random_ss(3, 3, 2, 1, true);
    let back: StateSpace = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
    assert_eq!(back, g);
    let tf = g.tf_of();
    let back: RationalMatrix = serde_json::from_str(&serde_json::to_string(&tf).unwrap()).unwrap();
    assert_eq!(back, tf);
}

proptest! {
    #[test]
    fn tf_of_agrees_with_evaluate(seed in 0u64..10_000, n in 1usize..=8, p in 1usize..=3, m in 1usize..=3, proper in any::<bool>()) {
        let g = random_ss(seed, n, p, m, proper);
        let tf = g.tf_of();
        for s in sampling::points(10, seed) {
            let want = g.evaluate(s).unwrap();
            let got = tf.eval(s).unwrap();
            prop_assert!(cmax(&(&got - &want)) < 1e-8 * (1.0 + cmax(&want)));
        }
    }

    #[test]
    fn h2_scales_with_static_gain(seed in 0u64..10_000, n in 1usize..=6, k in -5.0f64..5.0) {
        let g = random_ss(seed, n, 1, 1, false);
        let scaled = StateSpace::series(&g, &StateSpace::from_static(DMatrix::from_element(1, 1, k))).unwrap();
        let (a, b) = (scaled.h2_norm().unwrap(), k.abs() * g.h2_norm().unwrap());
        prop_assert!((a - b).abs() < 1e-9 * (1.0 + b));
    }

    #[test]
    fn zero_feedback_is_identity(seed in 0u64..10_000, n in 1usize..=6, p in 1usize..=3, m in 1usize..=3) {
        let g = random_ss(seed, n, p, m, true);
        let fb = StateSpace::feedback(&g, &StateSpace::zero(m, p)).unwrap();
        prop_assert!(max_gap(&fb, &g, seed) < 1e-10);
    }

    #[test]
    fn minimal_preserves_transfer(seed in 0u64..10_000, n in 1usize..=6, p in 1usize..=3, m in 1usize..=3) {
        let g = random_ss(seed, n, p, m, true);
        let h = random_ss(seed + 1, n, p, m, false);
        let sum = StateSpace::parallel(&g, &h).unwrap();
        let red = sum.minimal(1e-9);
        prop_assert!(red.n_states() <= sum.n_states());
        prop_assert!(max_gap(&red, &sum, seed) < 1e-7 * (1.0 + max_gap(&sum, &StateSpace::zero(p, m), seed)));
    }
}
