use promocast_core::dataprep::find_matching_period;
use promocast_core::domain::IndicatorKind;
use promocast_core::indicators::{compute_indicators, ReceiptIndex};
use promocast_core::synth::{generate, GenConfig};

fn small() -> GenConfig {
    GenConfig { n_stores: 2, products_per_group: 2, filler_products: 3, n_years: 2, promotions_per_year: 8, ..GenConfig::default() }
}

#[test]
fn noise_free_data_shows_the_planted_values() {
    let data = generate(&GenConfig { noise: 0.0, ..small() }).unwrap();
    let index = ReceiptIndex::new(&data.receipts);
    for (w, planted) in data.promotions.iter().zip(&data.planted) {
        let v = compute_indicators(w, index.window(w)).unwrap();
        assert!((v.get(IndicatorKind::AvgAmount) - planted.avg_amount).abs() < 1e-9, "{w:?}");
        assert!((v.get(IndicatorKind::AvgNbReceipts) - planted.avg_nb_receipts).abs() < 1e-9);
        assert!((v.get(IndicatorKind::AvgNbClients) - planted.avg_nb_clients).abs() < 1e-9);
    }
}

fn promo_vs_matching(cfg: &GenConfig) -> Vec<(f64, f64)> {
    let data = generate(cfg).unwrap();
    let index = ReceiptIndex::new(&data.receipts);
    data.promotions
        .iter()
        .filter_map(|w| {
            let m = find_matching_period(w, &data.promotions, None)?;
            let a = compute_indicators(w, index.window(w)).ok()?.get(IndicatorKind::AvgAmount);
            let b = compute_indicators(&m, index.window(&m)).ok()?.get(IndicatorKind::AvgAmount);
            Some((a, b))
        })
        .collect()
}

#[test]
fn no_elasticity_means_no_price_effect() {
    let flat = GenConfig {
        noise: 0.0,
        elasticity: 0.0,
        channel_lift: [1.0; 4],
        traffic_lift: 0.0,
        seasonal_amplitude: 0.0,
        ..small()
    };
    let pairs = promo_vs_matching(&flat);
    assert!(pairs.len() > 50);
    assert!(pairs.iter().all(|(a, b)| a == b), "promotion and matching period differ");

    let elastic = GenConfig { elasticity: 3.0, ..flat };
    let pairs = promo_vs_matching(&elastic);
    assert!(pairs.iter().all(|(a, b)| a >= b));
    assert!(pairs.iter().filter(|(a, b)| a > b).count() * 10 > pairs.len() * 9);
}

#[test]
fn same_seed_same_data() {
    let a = generate(&small()).unwrap();
    assert_eq!(a, generate(&small()).unwrap());
    let b = generate(&GenConfig { seed: 43, ..small() }).unwrap();
    assert_ne!(a.receipts, b.receipts);
    assert_eq!(a.promotions.len(), 2 * 6 * 2 * 8);
    assert!(a.receipts.iter().all(|r| r.date >= small().first_day() && r.date <= small().last_day()));
}
