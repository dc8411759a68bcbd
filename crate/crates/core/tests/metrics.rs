use promocast_core::metrics::{evaluate, rmse, rmse_improvement, MetricsError};
use promocast_core::seed::rng_for;
use rand::Rng;

#[test]
fn two_point_example() {
    let r = evaluate(&[1.0, 3.0], &[2.0, 5.0]).unwrap();
    assert!((r.mae - 1.5).abs() <= 1e-12);
    assert!((r.rmse - 2.5f64.sqrt()).abs() <= 1e-12);
    assert!((r.mape.unwrap() - 5.0 / 6.0).abs() <= 1e-12);
    assert!((r.wmape - 0.75).abs() <= 1e-12);
    assert_eq!(r.n, 2);
}

#[test]
fn zero_actual_leaves_mape_undefined() {
    let r = evaluate(&[0.0, 2.0], &[1.0, 2.0]).unwrap();
    assert!(r.mape_undefined());
    assert_eq!(r.mae, 0.5);
    assert_eq!(r.wmape, 0.5);
}

#[test]
fn bad_inputs() {
    assert_eq!(evaluate(&[], &[]), Err(MetricsError::EmptyVectors));
    assert_eq!(
        evaluate(&[1.0], &[1.0, 2.0]),
        Err(MetricsError::LengthMismatch { actual: 1, forecast: 2 })
    );
    assert!(matches!(evaluate(&[1.0, f64::NAN], &[1.0, 2.0]), Err(MetricsError::NonFinite(_))));
}

#[test]
fn rmse_bounds_mae() {
    let mut rng = rng_for(1, "metrics");
    for _ in 0..1000 {
        let n = rng.random_range(1..40);
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..100.0)).collect();
        let f: Vec<f64> = (0..n).map(|_| rng.random_range(-50.0..150.0)).collect();
        let r = evaluate(&a, &f).unwrap();
        assert!(r.rmse >= r.mae - 1e-12, "{r:?}");
        assert_eq!(r.rmse, rmse(&a, &f));
    }
}

#[test]
fn improvement_is_before_minus_after() {
    assert!((rmse_improvement(247.54, 177.15) - 70.39).abs() <= 1e-9);
}

mod props {
    use super::*;
    use proptest::prelude::*;

    fn pairs() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1usize..60).prop_flat_map(|n| {
            (prop::collection::vec(0.5f64..500.0, n), prop::collection::vec(-100.0f64..600.0, n))
        })
    }

    proptest! {
        #[test]
        fn orderings_and_scale((a, f) in pairs(), k in 0.1f64..20.0) {
            let r = evaluate(&a, &f).unwrap();
            prop_assert!(r.rmse >= r.mae - 1e-12);
            prop_assert!(r.mae >= 0.0 && r.wmape >= 0.0);
            let sa: Vec<f64> = a.iter().map(|x| x * k).collect();
            let sf: Vec<f64> = f.iter().map(|x| x * k).collect();
            let s = evaluate(&sa, &sf).unwrap();
            prop_assert!((s.mae - k * r.mae).abs() <= 1e-9 * (1.0 + s.mae));
            prop_assert!((s.wmape - r.wmape).abs() <= 1e-9 * (1.0 + r.wmape));
            prop_assert!((s.mape.unwrap() - r.mape.unwrap()).abs() <= 1e-9 * (1.0 + r.mape.unwrap()));
        }

        #[test]
        fn perfect_forecast_scores_zero(a in prop::collection::vec(0.5f64..500.0, 1..40)) {
            let r = evaluate(&a, &a).unwrap();
            prop_assert_eq!((r.mae, r.rmse, r.mape, r.wmape), (0.0, 0.0, Some(0.0), 0.0));
        }
    }
}
