mod common;

use isle_core::dataset::gen_friedman_popescu;
use isle_core::isle::generate_ensemble;
use isle_core::postproc::equal_weights;
use isle_core::tree::fit_tree;
use isle_core::{Dataset, IsleConfig, Matrix, TreeParams};
use rand::Rng;

/// Classical bagging: one tree per recorded bootstrap multiset, fitted
/// directly to y, predictions averaged.
fn bagged_prediction(d: &Dataset, bags: &[Vec<usize>], params: &TreeParams, x: &Matrix) -> Vec<f64> {
    let mut rng = common::rng(0);
    let trees: Vec<_> = bags.iter().map(|b| fit_tree(d.features(), d.target(), b, params, &mut rng).unwrap()).collect();
    x.iter_rows()
        .map(|r| trees.iter().map(|t| t.predict(r)).sum::<f64>() / trees.len() as f64)
        .collect()
}

#[test]
fn zero_memory_bootstrap_with_equal_weights_is_bagging() {
    for (seed, n_trees) in [(1u64, 32usize), (2, 64), (3, 25)] {
        let d = gen_friedman_popescu(seed, 120);
        let test = gen_friedman_popescu(seed + 100, 40);
        let params = TreeParams { max_depth: 3, ..TreeParams::default() };
        let cfg = IsleConfig { n_trees, seed, tree: params, ..IsleConfig::default() };
        let e = generate_ensemble(&d, &cfg).unwrap();
        for bag in e.in_bag() {
            assert_eq!(bag.len(), d.n());
            assert!(bag.iter().all(|&i| i < d.n()));
        }
        let got = equal_weights(n_trees).unwrap().predict_rows(&e.learner_matrix(test.features()).unwrap()).unwrap();
        let want = bagged_prediction(&d, e.in_bag(), &params, test.features());
        if n_trees.is_power_of_two() {
            // 1/M is exact, so Σ T/M and (Σ T)/M agree bit for bit
            assert_eq!(got, want, "seed {seed}");
        } else {
            assert!(common::max_abs_diff(&got, &want) < 1e-12, "seed {seed}");
        }
    }
}

fn dominated_data(seed: u64, n: usize, p: usize) -> Dataset {
    let mut rng = common::rng(seed);
    let x = Matrix::from_fn(n, p, |_, _| rng.random::<f64>());
    let y = x.iter_rows().map(|r| 10.0 * r[0] + 0.5 * r[1..].iter().sum::<f64>()).collect();
    Dataset::unnamed(x, y).unwrap()
}

#[test]
fn feature_subsampling_varies_candidates_per_node() {
    let d = dominated_data(5, 300, 9);
    let tree = |ff: f64| TreeParams { max_depth: 3, feature_fraction: ff, ..TreeParams::default() };
    let bagged = generate_ensemble(&d, &IsleConfig { n_trees: 100, seed: 5, tree: tree(1.0), ..IsleConfig::default() }).unwrap();
    let root = |t: &isle_core::RegressionTree| t.nodes()[0].split.map(|s| s.condition.feature);
    assert!(bagged.trees().iter().all(|t| root(t) == Some(0)));

    let forest = generate_ensemble(&d, &IsleConfig { n_trees: 100, seed: 5, tree: tree(1.0 / 3.0), ..IsleConfig::default() }).unwrap();
    // a root sees x0 among its 3 of 9 candidates with probability 1/3
    let on_x0 = forest.trees().iter().filter(|t| root(t) == Some(0)).count();
    assert!((15..=55).contains(&on_x0), "{on_x0}");
    // with seven internal nodes drawing candidates independently, some tree
    // must split on more features than a single 3-column draw allows
    let widest = forest.trees().iter().map(|t| t.features_used().len()).max().unwrap();
    assert!(widest > 3, "{widest}");
}

#[test]
fn identical_seed_gives_identical_ensemble() {
    let d = gen_friedman_popescu(8, 100);
    for memory in [0.0, 0.5, 1.0] {
        let cfg = IsleConfig { n_trees: 20, seed: 11, memory, ..IsleConfig::default() };
        assert_eq!(generate_ensemble(&d, &cfg).unwrap(), generate_ensemble(&d, &cfg).unwrap());
        let other = IsleConfig { seed: 12, ..cfg.clone() };
        assert_ne!(generate_ensemble(&d, &cfg).unwrap(), generate_ensemble(&d, &other).unwrap());
    }
}
