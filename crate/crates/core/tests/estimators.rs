use std::collections::BTreeMap;

use bilinear_spde::estimators::{aitken, exact_combination, exact_estimate, exact_pairwise};
use bilinear_spde::sim::simulate_observations;
use bilinear_spde::{build_builtin, Error};
use proptest::prelude::*;

fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn ones(modes: &[usize]) -> BTreeMap<usize, f64> {
    modes.iter().map(|&k| (k, 1.0)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exact_pair_recovers_theta(
        theta in -3.0f64..6.0,
        horizon in 0.05f64..5.0,
        seed in any::<u64>(),
        k in 1usize..8,
        gap in 1usize..5,
        u0 in prop_oneof![-3.0f64..-0.1, 0.1f64..3.0],
    ) {
        let model = build_builtin("heat-shift", &params(&[("k_max", 20.0)])).unwrap();
        let modes = [k, k + gap];
        let u: BTreeMap<usize, f64> = modes.iter().map(|&m| (m, u0)).collect();
        let obs = simulate_observations(&model, &modes, theta, &u, horizon, seed).unwrap();
        let est = exact_pairwise(&model, k, k + gap, &obs).unwrap();
        prop_assert!((est.theta_hat - theta).abs() <= 1e-10 * theta.abs().max(1.0));
        let combo = exact_combination(&model, &modes).unwrap();
        let general = exact_estimate(&model, &combo, &obs).unwrap();
        prop_assert!((general.theta_hat - est.theta_hat).abs() <= 1e-12 * theta.abs().max(1.0));
    }

    #[test]
    fn combination_weights_are_normalized(start in 1usize..20, seed in any::<u64>()) {
        let model = build_builtin("figure1", &params(&[("J", 4.0), ("k_max", 40.0)])).unwrap();
        let modes: Vec<usize> = (start..start + 5).collect();
        let combo = exact_combination(&model, &modes).unwrap();
        let max = combo.weights.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        prop_assert!((max - 1.0).abs() < 1e-15);
        prop_assert!(combo.weights.iter().find(|c| **c != 0.0).unwrap() > &0.0);
        prop_assert!(combo.max_residual(&model).unwrap() <= 1e-10 * combo.weight_norm());
        let obs = simulate_observations(&model, &modes, 0.9, &ones(&modes), 1.0, seed).unwrap();
        let est = exact_estimate(&model, &combo, &obs).unwrap();
        prop_assert!((est.theta_hat - 0.9).abs() <= 1e-8);
    }

    /// Aitken is exact on a + b q^n and leaves the output length at len - 2.
    #[test]
    fn aitken_on_geometric_sequences(
        a in -5.0f64..5.0,
        b in prop_oneof![-4.0f64..-0.5, 0.5f64..4.0],
        q in prop_oneof![-0.9f64..-0.1, 0.1f64..0.9],
        len in 3usize..15,
    ) {
        let seq: Vec<f64> = (0..len).map(|n| a + b * q.powi(n as i32)).collect();
        let out = aitken(&seq).unwrap();
        prop_assert_eq!(out.len(), len - 2);
        for v in &out {
            let scale = a.abs().max(b.abs());
            if !v.degenerate {
                prop_assert!((v.value - a).abs() <= 1e-9 * scale, "{} vs {}", v.value, a);
            }
        }
    }
}

#[test]
fn too_few_modes_for_the_drivers() {
    let model = build_builtin("figure1", &params(&[("J", 10.0), ("k_max", 50.0)])).unwrap();
    let modes: Vec<usize> = (1..=10).collect();
    match exact_combination(&model, &modes) {
        Err(Error::NoExactCombination(m)) => assert_eq!(m, modes),
        other => panic!("expected NoExactCombination, got {other:?}"),
    }
}

#[test]
fn combination_for_another_model_is_rejected() {
    let heat = build_builtin("heat-1w", &params(&[("k_max", 10.0)])).unwrap();
    let shift = build_builtin("heat-shift", &params(&[("k_max", 10.0)])).unwrap();
    let combo = exact_combination(&heat, &[1, 2]).unwrap();
    let obs = simulate_observations(&shift, &[1, 2], 1.0, &ones(&[1, 2]), 1.0, 0).unwrap();
    assert!(matches!(
        exact_estimate(&shift, &combo, &obs),
        Err(Error::StaleCombination)
    ));
}

#[test]
fn closed_form_noise_has_no_exact_estimator() {
    let model = build_builtin("smoothing-noise", &params(&[("k_max", 10.0)])).unwrap();
    assert!(matches!(
        exact_combination(&model, &[1, 2, 3]),
        Err(Error::NoExplicitLoadings)
    ));
}
