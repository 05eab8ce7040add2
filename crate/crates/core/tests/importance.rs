mod common;

use common::*;
use isle_core::dataset::{gen_friedman_popescu_with, train_test_split, SplitSpec};
use isle_core::eval::{evaluate_method, MethodId, MethodSettings, Replication};
use isle_core::importance::*;
use isle_core::isle::generate_ensemble;
use isle_core::postproc::{equal_weights, fit_lasso, fit_pls, lambda_max, WeightModel};
use isle_core::rules::{extract_rules, rule_matrix, Condition, RuleSource};
use isle_core::{IsleConfig, Matrix, Rule, RuleScope, RuleSet, TreeParams};

fn with_weights(w: &[f64]) -> WeightModel {
    let mut m = equal_weights(w.len()).unwrap();
    m.weights = w.to_vec();
    m
}

fn rule(features: &[usize], node: usize) -> Rule {
    let conds = features.iter().map(|&f| Condition { feature: f, lower: f64::NEG_INFINITY, upper: 0.5 });
    Rule::new(conds, RuleSource { tree: 0, node }).unwrap()
}

#[test]
fn tree_importance_examples() {
    // column 0 has population std 0.5, column 1 is constant
    let t = Matrix::from_rows(&[[0.0, 3.0], [1.0, 3.0], [0.0, 3.0], [1.0, 3.0]]).unwrap();
    let i = tree_importance(&with_weights(&[2.0, 5.0]), &t).unwrap();
    assert!((i[0] - 1.0).abs() < 1e-15);
    assert_eq!(i[1], 0.0);
    assert_eq!(tree_importance(&with_weights(&[0.0, 5.0]), &t).unwrap()[0], 0.0);
    assert!(tree_importance(&with_weights(&[1.0]), &t).is_err());
}

#[test]
fn rule_importance_examples() {
    let i = rule_importance(&with_weights(&[2.0, 3.0, -3.0]), &[0.5, 0.0, 1.0]).unwrap();
    assert!((i[0] - 1.0).abs() < 1e-15);
    assert_eq!(&i[1..], &[0.0, 0.0]);
    assert!(rule_importance(&with_weights(&[1.0]), &[1.5]).is_err());
    assert!(rule_importance(&with_weights(&[1.0]), &[-0.1]).is_err());
    let grid: Vec<f64> = (0..=100).map(|k| k as f64 / 100.0).collect();
    let w = with_weights(&vec![1.7; grid.len()]);
    let i = rule_importance(&w, &grid).unwrap();
    let best = (0..i.len()).max_by(|&a, &b| i[a].total_cmp(&i[b])).unwrap();
    assert_eq!(grid[best], 0.5);
}

#[test]
fn variable_importance_examples() {
    let single = RuleSet::from_rules(vec![rule(&[3], 1)]);
    let v = variable_importance(Learners::Rules(&single), &[0.7], 6, false).unwrap();
    assert_eq!(v, vec![0.0, 0.0, 0.0, 0.7, 0.0, 0.0]);

    let shared = RuleSet::from_rules(vec![rule(&[1], 1), rule(&[1, 4], 2)]);
    let v = variable_importance(Learners::Rules(&shared), &[0.2, 0.5], 5, false).unwrap();
    assert!((v[1] - 0.7).abs() < 1e-15);
    assert_eq!(v[4], 0.5);
    assert_eq!(v[0], 0.0);
    let v = variable_importance(Learners::Rules(&shared), &[0.2, 0.5], 5, true).unwrap();
    assert!((v[1] - 0.45).abs() < 1e-15);
    assert_eq!(v[4], 0.25);
    assert!(variable_importance(Learners::Rules(&shared), &[0.2], 5, false).is_err());
}

fn small_problem(seed: u64) -> (isle_core::Dataset, isle_core::Ensemble, RuleSet, Matrix) {
    let (d, _) = gen_friedman_popescu_with(seed, 200, 0.5);
    let cfg = IsleConfig { n_trees: 25, seed, ..IsleConfig::default() };
    let e = generate_ensemble(&d, &cfg).unwrap();
    let rules = extract_rules(&e, RuleScope::AllNodes);
    let r = rule_matrix(&rules, d.features()).unwrap();
    (d, e, rules, r)
}

#[test]
fn tree_basis_credits_split_features() {
    let (d, e, _, _) = small_problem(1);
    let t = e.learner_matrix(d.features()).unwrap();
    let w = fit_pls(&t, d.target(), 5).unwrap();
    let rep = importance_report(&w, Learners::Trees(&e), &t, d.p(), false).unwrap();
    assert_eq!(rep.basis, Basis::Trees);
    for (f, v) in rep.variable_importances.iter().enumerate() {
        let expected: f64 = (0..e.len())
            .filter(|&k| e.trees()[k].features_used().contains(&f))
            .map(|k| rep.learner_importances[k])
            .sum();
        assert!((v - expected).abs() < 1e-12);
    }
    assert!(rep.learner_importances.iter().chain(&rep.variable_importances).all(|&v| v >= 0.0));
}

fn ranking(v: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[b].total_cmp(&v[a]).then(a.cmp(&b)));
    idx
}

#[test]
fn scaling_the_target_scales_importances() {
    let (d, _, rules, r) = small_problem(2);
    let c = 3.5;
    let y2: Vec<f64> = d.target().iter().map(|v| c * v).collect();
    let base = importance_report(&fit_pls(&r, d.target(), 6).unwrap(), Learners::Rules(&rules), &r, d.p(), false).unwrap();
    let scaled = importance_report(&fit_pls(&r, &y2, 6).unwrap(), Learners::Rules(&rules), &r, d.p(), false).unwrap();
    for (a, b) in base.learner_importances.iter().zip(&scaled.learner_importances) {
        assert!((c * a - b).abs() <= 1e-9 * (1.0 + b.abs()));
    }
    assert_eq!(ranking(&base.variable_importances), ranking(&scaled.variable_importances));

    let l = lambda_max(&r, d.target()).unwrap() * 0.1;
    let a = rule_importance(&fit_lasso(&r, d.target(), l).unwrap(), &isle_core::rules::column_support(&r).unwrap()).unwrap();
    let b = rule_importance(&fit_lasso(&r, &y2, c * l).unwrap(), &isle_core::rules::column_support(&r).unwrap()).unwrap();
    let nz: Vec<usize> = (0..a.len()).filter(|&k| a[k] > 1e-9).collect();
    let rank = |v: &[f64]| {
        let mut s = nz.clone();
        s.sort_by(|&x, &y| v[y].total_cmp(&v[x]).then(x.cmp(&y)));
        s
    };
    assert_eq!(rank(&a), rank(&b));
}

#[test]
fn importances_follow_learner_order() {
    let (d, _, rules, r) = small_problem(3);
    let k = rules.len();
    let perm: Vec<usize> = (0..k).rev().collect();
    let rp = Matrix::from_fn(r.rows(), k, |i, j| r.get(i, perm[j]));
    let rules_p = RuleSet::from_rules(perm.iter().map(|&j| rules.rules()[j].clone()).collect());
    assert_eq!(rules_p.len(), k);
    let a = importance_report(&fit_pls(&r, d.target(), 4).unwrap(), Learners::Rules(&rules), &r, d.p(), false).unwrap();
    let b = importance_report(&fit_pls(&rp, d.target(), 4).unwrap(), Learners::Rules(&rules_p), &rp, d.p(), false).unwrap();
    for j in 0..k {
        assert!((b.learner_importances[j] - a.learner_importances[perm[j]]).abs() < 1e-9);
    }
    assert_close_vec(&a.variable_importances, &b.variable_importances, 1e-9);
}

fn assert_close_vec(a: &[f64], b: &[f64], tol: f64) {
    assert!(max_abs_diff(a, b) < tol, "{a:?}\n{b:?}");
}

#[test]
fn noise_inputs_get_little_importance() {
    let seeds = 10;
    let mut shares = Vec::new();
    for seed in 0..seeds {
        let (d, _) = gen_friedman_popescu_with(seed, 1000, 0.0);
        let (train, test) = train_test_split(&d, &SplitSpec::two_to_one(seed)).unwrap();
        let cfg = IsleConfig {
            n_trees: 100,
            seed,
            tree: TreeParams { feature_fraction: 1.0 / 3.0, ..TreeParams::default() },
            ..IsleConfig::default()
        };
        let e = generate_ensemble(&train, &cfg).unwrap();
        let rep = Replication::new(&train, &test, e, RuleScope::AllNodes, 5, seed).unwrap();
        let out = evaluate_method(&rep, MethodId::RPls, &MethodSettings::default()).unwrap();
        let w = out.model.weights().unwrap();
        let report = importance_report(w, Learners::Rules(&rep.rules), &rep.rule_train, d.p(), false).unwrap();
        let total: f64 = report.variable_importances.iter().sum();
        let noise: f64 = report.variable_importances[35..].iter().sum();
        shares.push(noise / total);
    }
    let mean = shares.iter().sum::<f64>() / seeds as f64;
    assert!(mean < 0.2, "noise share {mean} ({shares:?})");
}
