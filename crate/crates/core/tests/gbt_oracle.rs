//! Boosted trees against hand-derived values and an exhaustive split scan.

use promocast_core::gbt::{train, Booster, FeatureMatrix, GbtError, HyperParams, Node, TreeSettings};
use promocast_core::metrics::rmse;
use promocast_core::seed::rng_for;
use rand::Rng;

fn matrix(cols: usize, values: Vec<f64>) -> FeatureMatrix {
    FeatureMatrix::new((0..cols).map(|i| format!("x{i}")).collect(), values).unwrap()
}

fn stump(base: f64, eta: f64, rounds: u32) -> HyperParams {
    HyperParams { nrounds: rounds, base_score: base, eta, gamma: 0.0, max_depth: 1, subsample: 1.0 }
}

#[test]
fn hand_derived_stump() {
    // Two rows at x = 0 with y = 0, two at x = 1 with y = 10.
    let m = matrix(1, vec![0.0, 0.0, 1.0, 1.0]);
    let y = [0.0, 0.0, 10.0, 10.0];
    let (model, trace) = Booster::new(&m, &y).unwrap().fit_traced(&stump(5.0, 1.0, 1), 0).unwrap();
    assert_eq!(trace.len(), 1);
    // G_L = 10, G_R = -10, H = 2 per side, lambda 1.
    assert!((trace[0].gain - 100.0 / 3.0).abs() <= 1e-9);
    assert_eq!(trace[0].threshold, 0.5);
    let nodes = model.trees()[0].nodes();
    let Node::Leaf { weight: left } = nodes[1] else { panic!("left child is not a leaf") };
    let Node::Leaf { weight: right } = nodes[2] else { panic!("right child is not a leaf") };
    assert!((left + 10.0 / 3.0).abs() <= 1e-9);
    assert!((right - 10.0 / 3.0).abs() <= 1e-9);
    assert!((model.predict_row(&[0.0]) - 5.0 / 3.0).abs() <= 1e-9);
    assert!((model.predict_row(&[1.0]) - 25.0 / 3.0).abs() <= 1e-9);
}

#[test]
fn gamma_blocks_weak_splits() {
    let m = matrix(1, vec![0.0, 0.0, 1.0, 1.0]);
    let y = [0.0, 0.0, 10.0, 10.0];
    let hp = HyperParams { gamma: 34.0, ..stump(5.0, 1.0, 3) };
    let model = train(&m, &y, &hp, 0).unwrap();
    assert_eq!(model.n_splits(), 0);
    assert!(model.trees().len() <= 1);
    assert_eq!(model.predict_row(&[1.0]), 5.0);
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
}

/// Every feature, every midpoint between consecutive distinct values, with
/// positive gain.
fn exhaustive_scan(m: &FeatureMatrix, rows: &[usize], grad: &[f64], lambda: f64) -> Vec<Candidate> {
    let g: f64 = rows.iter().map(|&r| grad[r]).sum();
    let h = rows.len() as f64;
    let mut out = Vec::new();
    for f in 0..m.n_features() {
        let mut values: Vec<f64> = rows.iter().map(|&r| m.value(r, f)).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for pair in values.windows(2) {
            let t = promocast_core::gbt::midpoint(pair[0], pair[1]);
            let left: Vec<usize> = rows.iter().copied().filter(|&r| m.value(r, f) < t).collect();
            let gl: f64 = left.iter().map(|&r| grad[r]).sum();
            let hl = left.len() as f64;
            let (gr, hr) = (g - gl, h - hl);
            let gain = 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - g * g / (h + lambda));
            if gain > 1e-9 {
                out.push(Candidate { feature: f, threshold: t, gain });
            }
        }
    }
    out
}

/// Rows reaching each node of a pre-order tree.
fn node_rows(nodes: &[Node], m: &FeatureMatrix) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); nodes.len()];
    for r in 0..m.n_rows() {
        let mut i = 0;
        loop {
            out[i].push(r);
            match nodes[i] {
                Node::Leaf { .. } => break,
                Node::Split { feature, threshold, left, right } => {
                    i = if m.value(r, feature as usize) < threshold { left as usize } else { right as usize };
                }
            }
        }
    }
    out
}

#[test]
fn chosen_splits_match_exhaustive_scan() {
    let mut rng = rng_for(3, "gain-oracle");
    let lambda = TreeSettings::default().lambda;
    let mut splits = 0;
    let mut unique = 0;
    for fixture in 0..20 {
        let n = rng.random_range(8..=50);
        let nf = rng.random_range(1..=4);
        // Few distinct values per feature gives many tied candidates.
        let values: Vec<f64> = (0..n * nf).map(|_| f64::from(rng.random_range(0..6u32)) * 0.5).collect();
        let m = matrix(nf, values);
        let y: Vec<f64> = (0..n).map(|r| m.value(r, 0) * 3.0 + f64::from(rng.random_range(0..10u32))).collect();
        let hp = HyperParams { nrounds: 3, base_score: 2.0, eta: 0.5, gamma: 0.0, max_depth: 3, subsample: 1.0 };
        let (model, trace) = Booster::new(&m, &y).unwrap().fit_traced(&hp, fixture).unwrap();

        let mut pred = vec![hp.base_score; n];
        for (round, tree) in model.trees().iter().enumerate() {
            let grad: Vec<f64> = pred.iter().zip(&y).map(|(p, t)| p - t).collect();
            let rows = node_rows(tree.nodes(), &m);
            for t in trace.iter().filter(|t| t.round == round) {
                let all = exhaustive_scan(&m, &rows[t.node], &grad, lambda);
                let max = all.iter().map(|c| c.gain).fold(f64::MIN, f64::max);
                assert!((t.gain - max).abs() <= 1e-9, "fixture {fixture}: gain {} vs {max}", t.gain);
                // Candidates tied within rounding may go either way; a
                // clear winner must be picked exactly.
                let near: Vec<Candidate> = all.into_iter().filter(|c| max - c.gain <= 1e-9).collect();
                assert!(
                    near.iter().any(|c| (c.feature, c.threshold) == (t.feature, t.threshold)),
                    "fixture {fixture}: chose ({}, {}), best {near:?}",
                    t.feature,
                    t.threshold
                );
                if near.len() == 1 {
                    unique += 1;
                }
                splits += 1;
            }
            // Leaves that did not split: the oracle agrees nothing helps,
            // unless the depth limit stopped them.
            for (i, node) in tree.nodes().iter().enumerate() {
                if matches!(node, Node::Leaf { .. }) && depth_of(tree.nodes(), i) < hp.max_depth as usize {
                    assert!(exhaustive_scan(&m, &rows[i], &grad, lambda).is_empty(), "fixture {fixture}: missed split");
                }
            }
            for (r, p) in pred.iter_mut().enumerate() {
                *p += tree.predict(m.row(r));
            }
        }
    }
    assert!(splits > 60, "only {splits} splits checked");
    assert!(unique > splits / 2, "only {unique} of {splits} splits had a clear winner");
}

fn depth_of(nodes: &[Node], target: usize) -> usize {
    fn walk(nodes: &[Node], i: usize, target: usize, depth: usize) -> Option<usize> {
        if i == target {
            return Some(depth);
        }
        match nodes[i] {
            Node::Leaf { .. } => None,
            Node::Split { left, right, .. } => walk(nodes, left as usize, target, depth + 1)
                .or_else(|| walk(nodes, right as usize, target, depth + 1)),
        }
    }
    walk(nodes, 0, target, 0).unwrap()
}

#[test]
fn training_rmse_never_increases() {
    let mut rng = rng_for(5, "loss-curve");
    let n = 300;
    let x: Vec<f64> = (0..n * 3).map(|_| rng.random_range(-2.0..2.0)).collect();
    let m = matrix(3, x.clone());
    let targets: [fn(&[f64]) -> f64; 3] = [
        |r| 2.0 * r[0] - r[1],
        |r| (r[0] * r[1]).sin() + r[2] * r[2],
        |r| if r[0] > 0.3 { 5.0 } else { -1.0 } + 0.5 * r[2],
    ];
    for (k, f) in targets.iter().enumerate() {
        let y: Vec<f64> = (0..n).map(|i| f(m.row(i)) + rng.random_range(-0.1..0.1)).collect();
        let hp = HyperParams { nrounds: 200, base_score: 0.0, eta: 0.3, gamma: 0.0, max_depth: 3, subsample: 1.0 };
        let mut pred = vec![0.0; n];
        let mut last = rmse(&y, &pred);
        let mut rounds = 0;
        Booster::new(&m, &y)
            .unwrap()
            .fit_with(&hp, 1, &mut |tree| {
                for (i, p) in pred.iter_mut().enumerate() {
                    *p += tree.predict(m.row(i));
                }
                let now = rmse(&y, &pred);
                assert!(now <= last + 1e-12, "target {k}: rmse rose from {last} to {now}");
                last = now;
                rounds += 1;
            })
            .unwrap();
        assert!(rounds > 10, "target {k}: stopped after {rounds} rounds");
    }
}

#[test]
fn same_seed_same_model() {
    let mut rng = rng_for(9, "subsample");
    let m = matrix(2, (0..400).map(|_| rng.random_range(0.0..1.0)).collect());
    let y: Vec<f64> = (0..200).map(|i| m.value(i, 0) * 4.0).collect();
    let hp = HyperParams { subsample: 0.5, ..HyperParams::defaults(2.0) };
    assert_eq!(train(&m, &y, &hp, 4).unwrap(), train(&m, &y, &hp, 4).unwrap());
}

#[test]
fn prediction_names_must_match() {
    let m = matrix(2, vec![0.0, 1.0, 1.0, 0.0]);
    let model = train(&m, &[1.0, 2.0], &HyperParams::defaults(1.5), 0).unwrap();
    let swapped = promocast_core::gbt::FeatureVector { names: vec!["x1".into(), "x0".into()], values: vec![0.0, 1.0] };
    assert!(matches!(model.predict(&swapped), Err(GbtError::FeatureMismatch(_))));
}

fn noisy_fixture(seed: u64, n: usize) -> (FeatureMatrix, Vec<f64>) {
    let mut rng = rng_for(seed, "fixture");
    let m = matrix(3, (0..n * 3).map(|_| rng.random_range(0.0..10.0)).collect());
    let y = (0..n).map(|i| m.value(i, 0) - 0.5 * m.value(i, 2) + rng.random_range(-1.0..1.0)).collect();
    (m, y)
}

#[test]
fn more_gamma_never_more_splits() {
    let (m, y) = noisy_fixture(21, 120);
    let booster = Booster::new(&m, &y).unwrap();
    let mut last = usize::MAX;
    for gamma in [0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0, 1e3, 1e5] {
        let hp = HyperParams { gamma, nrounds: 20, ..HyperParams::defaults(0.0) };
        let splits = booster.fit(&hp, 0).unwrap().n_splits();
        assert!(splits <= last, "gamma {gamma}: {splits} splits after {last}");
        last = splits;
    }
}

#[test]
fn depth_one_grows_stumps() {
    let (m, y) = noisy_fixture(22, 80);
    let model = train(&m, &y, &HyperParams { max_depth: 1, ..HyperParams::defaults(0.0) }, 0).unwrap();
    assert!(model.trees().iter().all(|t| t.n_splits() <= 1 && t.depth() <= 1));
    let deep = train(&m, &y, &HyperParams { max_depth: 3, ..HyperParams::defaults(0.0) }, 0).unwrap();
    assert!(deep.trees().iter().all(|t| t.depth() <= 3));
}

#[test]
fn degenerate_fits() {
    let (m, y) = noisy_fixture(23, 30);
    let none = train(&m, &y, &HyperParams { nrounds: 0, ..HyperParams::defaults(4.5) }, 0).unwrap();
    assert!(none.trees().is_empty());
    assert!(none.predict_matrix(&m).unwrap().iter().all(|&p| p == 4.5));

    let flat = vec![2.0; 30];
    let model = train(&m, &flat, &HyperParams::defaults(2.0), 0).unwrap();
    assert_eq!(model.n_splits(), 0);
    assert!(model.predict_matrix(&m).unwrap().iter().all(|&p| p == 2.0));
    assert!(matches!(promocast_core::gbt::importance(&model), Err(GbtError::NoSplits)));

    assert!(matches!(train(&matrix(1, vec![]), &[], &HyperParams::defaults(0.0), 0), Err(GbtError::EmptyDataset)));
    let bad = matrix(1, vec![f64::NAN]);
    assert!(matches!(train(&bad, &[1.0], &HyperParams::defaults(0.0), 0), Err(GbtError::NonFiniteInput { .. })));
}

#[test]
fn batch_and_row_predictions_agree() {
    let (m, y) = noisy_fixture(24, 60);
    let model = train(&m, &y, &HyperParams { subsample: 0.7, ..HyperParams::defaults(1.0) }, 3).unwrap();
    let batch = model.predict_matrix(&m).unwrap();
    for (r, p) in batch.iter().enumerate() {
        assert_eq!(*p, model.predict_row(m.row(r)));
    }
}

#[test]
fn importance_is_relative_to_top() {
    let (m, y) = noisy_fixture(25, 100);
    let model = train(&m, &y, &HyperParams::defaults(0.0), 0).unwrap();
    let ranked = promocast_core::gbt::importance(&model).unwrap();
    assert_eq!(ranked[0].1, 1.0);
    assert_eq!(ranked[0].0, "x0");
    assert!(ranked.windows(2).all(|w| w[0].1 >= w[1].1));
}
