use std::collections::BTreeMap;

use bilinear_spde::build_builtin;
use bilinear_spde::model::{check_parabolicity, Certificate, Verdict, BUILTIN_IDS};
use proptest::prelude::*;

fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn lambda_noise() -> bilinear_spde::SpectralModel {
    build_builtin("lambda-noise", &params(&[("k_max", 1000.0)])).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lambda_noise_passes_above_threshold(theta in 0.51f64..0.99) {
        let report = check_parabolicity(
            &lambda_noise(),
            Certificate { delta: 0.01, c1: 1.0, c2: 2.0 },
            &[theta],
            1000,
            false,
        ).unwrap();
        prop_assert_eq!(report.verdict, Verdict::Satisfied);
    }

    #[test]
    fn lambda_noise_fails_at_or_below_half(theta in 0.01f64..=0.5) {
        let report = check_parabolicity(
            &lambda_noise(),
            Certificate { delta: 0.01, c1: 1.0, c2: 10.0 },
            &[theta],
            1000,
            false,
        ).unwrap();
        prop_assert_eq!(report.verdict, Verdict::Violated);
    }

    /// Loosening the constants never turns a pass into a violation, and
    /// widening the range never removes one.
    #[test]
    fn verdicts_are_monotone(
        theta in 0.05f64..2.0,
        delta in 0.001f64..0.5,
        c2 in 0.5f64..20.0,
        extra in 0.0f64..10.0,
        k in 5usize..400,
    ) {
        let model = lambda_noise();
        let tight = Certificate { delta, c1: 1.0, c2 };
        let loose = Certificate { delta, c1: 1.0 + extra, c2: c2 + extra };
        let a = check_parabolicity(&model, tight, &[theta], k, false).unwrap();
        let b = check_parabolicity(&model, loose, &[theta], k, false).unwrap();
        if a.verdict == Verdict::Satisfied {
            prop_assert_eq!(b.verdict, Verdict::Satisfied);
        }
        let wide = check_parabolicity(&model, tight, &[theta], 2 * k, false).unwrap();
        if a.verdict == Verdict::Violated {
            prop_assert_eq!(wide.verdict, Verdict::Violated);
            prop_assert_eq!(wide.first_violation, a.first_violation);
        }
    }

    #[test]
    fn eta_is_nonnegative(k in 1usize..=200) {
        for id in BUILTIN_IDS {
            let model = build_builtin(id, &params(&[("k_max", 200.0)])).unwrap();
            let eta = model.eta(k);
            prop_assert!(eta >= 0.0 && eta.is_finite(), "{} k={} eta={}", id, k, eta);
            let m = model.total_loading(k);
            prop_assert!((eta - m / model.nu(k).powi(2)).abs() <= 1e-15 * eta.max(1.0));
        }
    }
}

#[test]
fn partial_range_is_inconclusive_when_full_range_required() {
    let model = lambda_noise();
    let c = Certificate {
        delta: 0.25,
        c1: 1.0,
        c2: 2.0,
    };
    let r = check_parabolicity(&model, c, &[0.75], 100, true).unwrap();
    assert_eq!(r.verdict, Verdict::Inconclusive);
    let r = check_parabolicity(&model, c, &[0.75], 1000, true).unwrap();
    assert_eq!(r.verdict, Verdict::Satisfied);
}
