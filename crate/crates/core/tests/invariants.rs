use proptest::prelude::*;
use supgnet::dataset::{tau_from_target, target_from_tau, NormalizationStats};
use supgnet::metrics::nodal_error_of;
use supgnet::mlp::init_model;
use supgnet::stabilization::{mu_from_local_peclet, peclet, tau_theory, upwind_xi};

fn stats() -> NormalizationStats {
    NormalizationStats {
        mean_r: 2.0,
        std_r: 0.82,
        mean_h: 0.06,
        std_h: 0.035,
        mean_log10_pe: 2.9,
        std_log10_pe: 1.2,
    }
}

proptest! {
    #[test]
    fn upwind_is_bounded_and_monotone(t in 1e-6f64..1e3, dt in 1e-3f64..10.0) {
        let a = upwind_xi(t).unwrap();
        let b = upwind_xi(t + dt).unwrap();
        prop_assert!(a > 0.0 && a < 1.0);
        prop_assert!(b >= a);
    }

    #[test]
    fn theoretical_tau_is_positive_and_below_the_advective_limit(
        beta in 0.1f64..5.0,
        h in 1e-3f64..0.5,
        log_pe in -2.0f64..5.0,
        r in 1usize..=3,
    ) {
        let mu = mu_from_local_peclet(beta, h, 10f64.powf(log_pe)).unwrap();
        let tau = tau_theory(beta, h, mu, r).unwrap();
        prop_assert!(tau > 0.0);
        prop_assert!(tau < h / (2.0 * beta * r as f64));
        let pe = peclet(beta, h, 1.0, mu).unwrap();
        prop_assert!((pe.local / 10f64.powf(log_pe) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nodal_error_is_scale_equivariant(
        pairs in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 1..40),
        c in 0.01f64..100.0,
    ) {
        let (u, v): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let e = nodal_error_of(&u, &v).unwrap();
        let su: Vec<f64> = u.iter().map(|x| c * x).collect();
        let sv: Vec<f64> = v.iter().map(|x| c * x).collect();
        let es = nodal_error_of(&su, &sv).unwrap();
        prop_assert!(e >= 0.0);
        prop_assert!((es - c * e).abs() <= 1e-12 * (1.0 + c * e));
    }

    #[test]
    fn feature_normalization_round_trips(
        r in 1usize..=3,
        h in 0.01f64..0.2,
        log_pe in 0.8f64..4.9,
    ) {
        let s = stats();
        let pe = 10f64.powf(log_pe);
        let (r2, h2, pe2) = s.denormalize_features(s.normalize_features(r as f64, h, pe));
        prop_assert!((r2 - r as f64).abs() < 1e-12);
        prop_assert!((h2 - h).abs() < 1e-12);
        prop_assert!((pe2 / pe - 1.0).abs() < 1e-12);
    }

    #[test]
    fn target_transform_round_trips(log_tau in -8.0f64..2.0) {
        let tau = 10f64.powf(log_tau);
        prop_assert!((tau_from_target(target_from_tau(tau)) / tau - 1.0).abs() < 1e-12);
    }

    #[test]
    fn predicted_tau_is_positive(
        seed in 0u64..50,
        r in 1usize..=3,
        h in 0.01f64..0.2,
        log_pe in 0.8f64..4.9,
    ) {
        let mut model = init_model(seed);
        model.set_stats(stats());
        let tau = model.predict_tau(r, h, 10f64.powf(log_pe)).unwrap();
        prop_assert!(tau > 0.0 && tau <= 1.0);
    }
}
