use std::collections::BTreeSet;

use promocast_core::gbt::{Booster, FeatureMatrix, HyperParams};
use promocast_core::hpo::{
    all_orders, build_grids, default_params, optimize, select_orders, GbtObjective, HpoConfig, HpoError, Param,
    ParamGrid, Search, N_ORDERS,
};
use promocast_core::seed::rng_for;
use rand::Rng;

fn targets(n: usize) -> Vec<f64> {
    (0..n).map(|i| (i as f64 * 0.37).sin() * 10.0 + i as f64 * 0.01).collect()
}

/// Separable bowl with its minimum off the grid points.
fn bowl(hp: &HyperParams) -> f64 {
    let centre = [0.3, 0.42, 3.3, 6.1, 87.0, 0.55];
    Param::ALL
        .iter()
        .zip(centre)
        .zip([1.0, 50.0, 1.0, 2.0, 0.01, 7.0])
        .map(|((p, c), w)| w * (p.get(hp) - c).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn exhaustive_min(grid: &ParamGrid) -> f64 {
    // The bowl is separable, so the grid minimum is per-coordinate; scan the
    // full product anyway, one coordinate block at a time.
    let mut best = f64::INFINITY;
    let g = |p| grid.get(p).to_vec();
    for &b in &g(Param::BaseScore) {
        for &e in &g(Param::Eta) {
            for &ga in &g(Param::Gamma) {
                for &m in &g(Param::MaxDepth) {
                    for &n in &g(Param::Nrounds) {
                        for &s in &g(Param::Subsample) {
                            let hp = HyperParams {
                                base_score: b,
                                eta: e,
                                gamma: ga,
                                max_depth: m as u32,
                                nrounds: n as u32,
                                subsample: s,
                            };
                            best = best.min(bowl(&hp));
                        }
                    }
                }
            }
        }
    }
    best
}

#[test]
fn grid_sizes() {
    let grid = build_grids(&targets(500)).unwrap();
    let sizes: Vec<usize> = Param::ALL.iter().map(|&p| grid.get(p).len()).collect();
    assert_eq!(sizes, [11, 11, 11, 5, 11, 10]);
    assert_eq!(grid.pass_len(), 59);
    assert_eq!(grid.pass_len() * N_ORDERS, 42_480);
    assert_eq!(grid.get(Param::Nrounds).last(), Some(&201.0));
    assert_eq!(grid.get(Param::Subsample)[0], 0.0001);
    assert!((grid.get(Param::Subsample)[9] - 0.9001).abs() < 1e-12);

    let flat = build_grids(&[3.0; 10]).unwrap();
    assert_eq!(flat.get(Param::BaseScore), &[3.0]);
    assert_eq!(build_grids(&[]), Err(HpoError::EmptyTargets));
    assert_eq!(default_params(&[1.0, 2.0, 6.0]).unwrap().base_score, 3.0);
}

#[test]
fn orders_are_distinct_and_lexicographic() {
    let all = all_orders();
    assert_eq!(all.len(), 720);
    assert_eq!(all.iter().collect::<BTreeSet<_>>().len(), 720);
    assert!(all.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(all[0], Param::ALL);
    let names: Vec<&str> = all[0].iter().map(|p| p.name()).collect();
    let mut sorted = names.clone();
    sorted.sort_unstable();
    assert_eq!(names, sorted);

    let picked = select_orders(24, 5).unwrap();
    assert_eq!(picked.len(), 24);
    assert!(picked.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(picked, select_orders(24, 5).unwrap());
    assert_ne!(picked, select_orders(24, 6).unwrap());
    assert_eq!(select_orders(5000, 0).unwrap().len(), 720);
    assert_eq!(select_orders(0, 0), Err(HpoError::BudgetZero));
}

#[test]
fn one_pass_trains_59_models() {
    let grid = build_grids(&targets(300)).unwrap();
    let counted = |hp: &HyperParams| bowl(hp);
    let mut search = Search::new(&counted, grid.clone(), false);
    search.sequential_pass(&Param::ALL, HyperParams::defaults(0.0)).unwrap();
    assert_eq!(search.trainings(), 59);
    assert_eq!(search.requests(), 59);
}

#[test]
fn every_order_reaches_the_bowl_minimum() {
    let grid = build_grids(&targets(300)).unwrap();
    let oracle = exhaustive_min(&grid);
    let cfg = HpoConfig { permutation_budget: 720, seed: 0, memoize: true, refine: false };
    let r = optimize(&bowl, grid, HyperParams::defaults(0.0), &cfg).unwrap();
    assert_eq!(r.passes.len(), 720);
    for pass in &r.passes {
        assert!((pass.rmse - oracle).abs() < 1e-12, "{:?}: {} vs {oracle}", pass.order, pass.rmse);
    }
    // The defaults sit off the grid and may score lower still.
    assert!(r.best_validation_rmse <= oracle + 1e-12);
    assert!(r.cache_hits > 0);
    assert_eq!(r.evaluations_total, r.log.len());
}

fn gbt_objective(seed: u64) -> GbtObjective {
    let mut rng = rng_for(seed, "hpo-fixture");
    let n = 200;
    let names: Vec<String> = (0..4).map(|i| format!("x{i}")).collect();
    let xs: Vec<f64> = (0..n * 4).map(|_| rng.random_range(0.0..1.0)).collect();
    let f = |r: &[f64]| 5.0 * r[0] + 3.0 * (r[1] > 0.5) as u8 as f64 - 2.0 * r[2] * r[3];
    let y: Vec<f64> = xs.chunks(4).map(|r| f(r) + rng.random_range(-0.5..0.5)).collect();
    let split = 160;
    let train = FeatureMatrix::new(names.clone(), xs[..split * 4].to_vec()).unwrap();
    let val = FeatureMatrix::new(names, xs[split * 4..].to_vec()).unwrap();
    let booster = Booster::new(&train, &y[..split]).unwrap();
    GbtObjective::new(booster, val, y[split..].to_vec(), vec![(0.0, 1.0); n - split], seed).unwrap()
}

#[test]
fn memoized_search_matches_plain_search() {
    let obj = gbt_objective(1);
    let grid = build_grids(obj.training_targets()).unwrap();
    let defaults = default_params(obj.training_targets()).unwrap();
    let run = |memoize| {
        let cfg = HpoConfig { permutation_budget: 3, seed: 9, memoize, refine: true };
        optimize(&obj, grid.clone(), defaults, &cfg).unwrap()
    };
    let (on, off) = (run(true), run(false));
    assert_eq!(on.passes, off.passes);
    assert_eq!(on.refined, off.refined);
    assert_eq!(on.log, off.log);
    assert_eq!(on.best_params, off.best_params);
    assert!(on.trainings < off.trainings);
    assert_eq!(off.cache_hits, 0);
}

#[test]
fn tuning_never_loses_to_defaults() {
    for seed in [2, 3] {
        let obj = gbt_objective(seed);
        let grid = build_grids(obj.training_targets()).unwrap();
        let defaults = default_params(obj.training_targets()).unwrap();
        for budget in [1, 4] {
            let cfg = HpoConfig { permutation_budget: budget, seed, memoize: true, refine: true };
            let r = optimize(&obj, grid.clone(), defaults, &cfg).unwrap();
            assert_eq!(r.passes.len(), budget);
            assert!(r.best_validation_rmse <= r.default_rmse);
            assert!(r.best_validation_rmse <= r.passes.iter().map(|p| p.rmse).fold(f64::INFINITY, f64::min));
            assert!(r.log.iter().any(|e| e.params == r.best_params && e.rmse == r.best_validation_rmse));
            assert_eq!(r.log[0].params, defaults);
        }
    }
}
