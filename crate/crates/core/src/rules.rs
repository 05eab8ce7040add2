//! Conjunctive rules read off tree paths, and their evaluation to a 0/1
//! matrix.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::isle::Ensemble;
use crate::matrix::Matrix;
use crate::tree::RegressionTree;

/// `lower < x[feature] <= upper`; either bound may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub feature: usize,
    pub lower: f64,
    pub upper: f64,
}

impl Condition {
    #[inline]
    pub fn contains(&self, v: f64) -> bool {
        self.lower < v && v <= self.upper
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RuleSource {
    pub tree: usize,
    pub node: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    conditions: Vec<Condition>,
    source: RuleSource,
}

impl Rule {
    /// Intersects the given conditions per feature; conditions end up sorted
    /// by feature. Fails on an empty interval or an empty condition list.
    pub fn new(conditions: impl IntoIterator<Item = Condition>, source: RuleSource) -> Result<Self> {
        let mut merged: Vec<Condition> = Vec::new();
        for c in conditions {
            match merged.iter_mut().find(|m| m.feature == c.feature) {
                Some(m) => {
                    m.lower = m.lower.max(c.lower);
                    m.upper = m.upper.min(c.upper);
                }
                None => merged.push(c),
            }
        }
        if merged.is_empty() {
            return Err(invalid("a rule needs at least one condition"));
        }
        if let Some(bad) = merged.iter().find(|c| !(c.lower < c.upper)) {
            return Err(invalid(alloc::format!("empty interval on feature {}", bad.feature)));
        }
        merged.sort_by_key(|c| c.feature);
        Ok(Rule { conditions: merged, source })
    }

    pub fn conditions(&self) -> &[Condition] {
        &self.conditions
    }

    pub fn source(&self) -> RuleSource {
        self.source
    }

    #[inline]
    pub fn matches(&self, x: &[f64]) -> bool {
        self.conditions.iter().all(|c| c.contains(x[c.feature]))
    }

    pub fn uses_feature(&self, f: usize) -> bool {
        self.conditions.iter().any(|c| c.feature == f)
    }

    /// Same rule with one more condition intersected in.
    pub fn and(&self, c: Condition) -> Result<Self> {
        Self::new(self.conditions.iter().copied().chain([c]), self.source)
    }

    fn key(&self) -> Vec<(usize, u64, u64)> {
        self.conditions.iter().map(|c| (c.feature, c.lower.to_bits(), c.upper.to_bits())).collect()
    }
}

/// Which tree nodes contribute rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum RuleScope {
    /// Every non-root node.
    #[default]
    AllNodes,
    /// Leaves only.
    TerminalOnly,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RuleSet {
    rules: Vec<Rule>,
}

impl RuleSet {
    /// Keeps the first occurrence of each distinct condition set.
    pub fn from_rules(rules: Vec<Rule>) -> Self {
        let mut seen = BTreeSet::new();
        let rules = rules.into_iter().filter(|r| seen.insert(r.key())).collect();
        RuleSet { rules }
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn deduplicated(&self) -> RuleSet {
        Self::from_rules(self.rules.clone())
    }
}

/// Rule for every selected non-root node of one tree, in node order.
pub fn tree_rules(tree: &RegressionTree, tree_index: usize, scope: RuleScope) -> Vec<Rule> {
    let nodes = tree.nodes();
    (1..nodes.len())
        .filter(|&id| scope == RuleScope::AllNodes || nodes[id].is_leaf())
        .map(|id| {
            let conds = tree.path_to(id).into_iter().map(|(s, left)| {
                let (lower, upper) = if left {
                    (f64::NEG_INFINITY, s.threshold)
                } else {
                    (s.threshold, f64::INFINITY)
                };
                Condition { feature: s.feature, lower, upper }
            });
            Rule::new(conds, RuleSource { tree: tree_index, node: id })
                .expect("tree paths give non-empty intervals")
        })
        .collect()
}

pub fn extract_rules(e: &Ensemble, scope: RuleScope) -> RuleSet {
    let all = e.trees().iter().enumerate().flat_map(|(j, t)| tree_rules(t, j, scope)).collect();
    RuleSet::from_rules(all)
}

fn check_features(rs: &RuleSet, cols: usize) -> Result<()> {
    if let Some(f) = rs.rules.iter().flat_map(|r| r.conditions.iter()).map(|c| c.feature).max() {
        if f >= cols {
            return Err(crate::error::Error::DimensionMismatch { expected: f + 1, got: cols });
        }
    }
    Ok(())
}

/// `out[i, k] = 1` when row `i` satisfies rule `k`.
pub fn rule_matrix(rs: &RuleSet, x: &Matrix) -> Result<Matrix> {
    check_features(rs, x.cols())?;
    let mut out = Matrix::zeros(x.rows(), rs.len());
    for (i, row) in x.iter_rows().enumerate() {
        let dst = out.row_mut(i);
        for (k, r) in rs.rules.iter().enumerate() {
            if r.matches(row) {
                dst[k] = 1.0;
            }
        }
    }
    Ok(out)
}

/// Fraction of rows satisfying each rule.
pub fn rule_support(rs: &RuleSet, x: &Matrix) -> Result<Vec<f64>> {
    if x.rows() == 0 {
        return Err(invalid("support needs at least one row"));
    }
    check_features(rs, x.cols())?;
    let n = x.rows() as f64;
    Ok(rs.rules.iter().map(|r| x.iter_rows().filter(|row| r.matches(row)).count() as f64 / n).collect())
}

/// Support of each column of an existing 0/1 rule matrix.
pub fn column_support(r: &Matrix) -> Result<Vec<f64>> {
    if r.rows() == 0 {
        return Err(invalid("support needs at least one row"));
    }
    let mut s = alloc::vec![0.0; r.cols()];
    for row in r.iter_rows() {
        for (acc, v) in s.iter_mut().zip(row) {
            *acc += v;
        }
    }
    let n = r.rows() as f64;
    s.iter_mut().for_each(|v| *v /= n);
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Dataset;
    use crate::isle::{generate_ensemble, IsleConfig, Sampling, SamplingMode};
    use crate::rng;
    use crate::tree::{fit_tree, Node, Split, SplitCondition, TreeParams};
    use alloc::vec;
    use proptest::prelude::*;
    use rand::Rng;

    fn le(feature: usize, t: f64) -> Condition {
        Condition { feature, lower: f64::NEG_INFINITY, upper: t }
    }

    fn gt(feature: usize, t: f64) -> Condition {
        Condition { feature, lower: t, upper: f64::INFINITY }
    }

    const SRC: RuleSource = RuleSource { tree: 0, node: 1 };

    fn data(n: usize, seed: u64) -> Dataset {
        let mut r = rng::stream(seed, 3);
        let x = Matrix::from_fn(n, 3, |_, _| r.random::<f64>());
        let y = x.iter_rows().map(|v| v[0] * 4.0 + v[1] + r.random::<f64>()).collect();
        Dataset::unnamed(x, y).unwrap()
    }

    fn ensemble(d: &Dataset, depth: usize, trees: usize, fraction: f64) -> Ensemble {
        let cfg = IsleConfig {
            n_trees: trees,
            tree: TreeParams { max_depth: depth, min_leaf: 1, ..TreeParams::default() },
            sampling: Sampling { mode: SamplingMode::Subsample, fraction },
            require_oob: false,
            seed: 11,
            ..IsleConfig::default()
        };
        generate_ensemble(d, &cfg).unwrap()
    }

    #[test]
    fn root_only_trees_give_no_rules() {
        let d = data(20, 1);
        assert!(extract_rules(&ensemble(&d, 0, 4, 0.5), RuleScope::AllNodes).is_empty());
    }

    #[test]
    fn depth_one_gives_complementary_pair() {
        let d = data(20, 2);
        let e = ensemble(&d, 1, 1, 1.0);
        let rs = extract_rules(&e, RuleScope::AllNodes);
        assert_eq!(rs.len(), 2);
        let t = e.trees()[0].nodes()[0].split.unwrap().condition;
        assert_eq!(rs.rules()[0].conditions(), &[le(t.feature, t.threshold)]);
        assert_eq!(rs.rules()[1].conditions(), &[gt(t.feature, t.threshold)]);
        let m = rule_matrix(&rs, d.features()).unwrap();
        for row in m.iter_rows() {
            assert_eq!(row[0] + row[1], 1.0);
        }
        let s = rule_support(&rs, d.features()).unwrap();
        assert!((s[0] + s[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn same_feature_paths_merge() {
        // x0 <= 0.5 -> (x0 <= 0.25 | x0 > 0.25), x0 > 0.5 -> (x0 <= 0.75 | x0 > 0.75)
        let split = |t, l, r| Some(Split { condition: SplitCondition { feature: 0, threshold: t }, left: l, right: r });
        let node = |s, depth, c| Node { split: s, value: 0.0, depth, training_count: c };
        let tree = RegressionTree::from_nodes(
            vec![
                node(split(0.5, 1, 4), 0, 4),
                node(split(0.25, 2, 3), 1, 2),
                node(None, 2, 1),
                node(None, 2, 1),
                node(split(0.75, 5, 6), 1, 2),
                node(None, 2, 1),
                node(None, 2, 1),
            ],
            2,
            1,
        )
        .unwrap();
        let rules = tree_rules(&tree, 0, RuleScope::AllNodes);
        let got: Vec<(f64, f64)> = rules.iter().map(|r| (r.conditions()[0].lower, r.conditions()[0].upper)).collect();
        let inf = f64::INFINITY;
        assert_eq!(
            got,
            [(-inf, 0.5), (-inf, 0.25), (0.25, 0.5), (0.5, inf), (0.5, 0.75), (0.75, inf)]
        );
        assert!(rules.iter().all(|r| r.conditions().len() == 1));
        assert_eq!(RuleSet::from_rules(rules).len(), 6);
        assert_eq!(tree_rules(&tree, 0, RuleScope::TerminalOnly).len(), 4);
    }

    #[test]
    fn dedup_keeps_first_source() {
        let a = Rule::new([le(0, 1.0)], SRC).unwrap();
        let b = Rule::new([le(0, 1.0)], RuleSource { tree: 3, node: 2 }).unwrap();
        let rs = RuleSet::from_rules(vec![a.clone(), b]);
        assert_eq!(rs.len(), 1);
        assert_eq!(rs.rules()[0].source(), SRC);
    }

    #[test]
    fn invalid_rules() {
        assert!(Rule::new([le(0, 1.0), gt(0, 2.0)], SRC).is_err());
        assert!(Rule::new([], SRC).is_err());
    }

    #[test]
    fn empty_ruleset_matrix() {
        let x = Matrix::zeros(5, 2);
        let m = rule_matrix(&RuleSet::default(), &x).unwrap();
        assert_eq!((m.rows(), m.cols()), (5, 0));
    }

    #[test]
    fn hand_built_support() {
        let x = Matrix::from_rows(&[[0.1], [0.5], [0.3], [0.9]]).unwrap();
        let rs = RuleSet::from_rules(vec![Rule::new([le(0, 0.5)], SRC).unwrap(), Rule::new([gt(0, 5.0)], SRC).unwrap()]);
        assert_eq!(rule_support(&rs, &x).unwrap(), vec![0.75, 0.0]);
        assert!(rule_matrix(&rs, &Matrix::zeros(2, 0)).is_err());
        assert_eq!(column_support(&rule_matrix(&rs, &x).unwrap()).unwrap(), vec![0.75, 0.0]);
    }

    #[test]
    fn rule_columns_match_training_counts() {
        let d = data(40, 4);
        let e = ensemble(&d, 3, 3, 1.0);
        let rs = extract_rules(&e, RuleScope::AllNodes);
        let s = rule_support(&rs, d.features()).unwrap();
        for (k, r) in rs.rules().iter().enumerate() {
            let src = r.source();
            let count = e.trees()[src.tree].nodes()[src.node].training_count;
            assert!((s[k] - count as f64 / 40.0).abs() < 1e-15);
        }
    }

    proptest! {
        #[test]
        fn terminal_rules_reconstruct_tree(seed in any::<u64>(), depth in 1usize..5) {
            let d = data(50, seed);
            let rows: Vec<usize> = (0..50).collect();
            let params = TreeParams { max_depth: depth, min_leaf: 2, ..TreeParams::default() };
            let tree = fit_tree(d.features(), d.target(), &rows, &params, &mut rng::stream(seed, 1)).unwrap();
            prop_assume!(tree.nodes().len() > 1);
            let rules = tree_rules(&tree, 0, RuleScope::TerminalOnly);
            let rs = RuleSet { rules };
            let mut r = rng::stream(seed, 2);
            let probe = Matrix::from_fn(60, 3, |_, _| r.random::<f64>() * 1.2 - 0.1);
            let m = rule_matrix(&rs, &probe).unwrap();
            for (i, row) in m.iter_rows().enumerate() {
                prop_assert_eq!(row.iter().sum::<f64>(), 1.0);
                let rebuilt: f64 = rs.rules().iter().zip(row)
                    .map(|(rule, ind)| ind * tree.nodes()[rule.source().node].value)
                    .sum();
                prop_assert_eq!(rebuilt, tree.predict(probe.row(i)));
            }
        }

        #[test]
        fn dedup_idempotent(seed in any::<u64>()) {
            let d = data(30, seed);
            let rs = extract_rules(&ensemble(&d, 2, 8, 0.6), RuleScope::AllNodes);
            prop_assert_eq!(rs.deduplicated(), rs);
        }

        #[test]
        fn extra_condition_never_increases_support(
            seed in any::<u64>(), f in 0usize..3, a in 0.0f64..1.0, w in 0.01f64..1.0
        ) {
            let d = data(40, seed);
            let rs = extract_rules(&ensemble(&d, 2, 3, 0.6), RuleScope::AllNodes);
            let base = rule_support(&rs, d.features()).unwrap();
            for (k, rule) in rs.rules().iter().enumerate() {
                if let Ok(tighter) = rule.and(Condition { feature: f, lower: a - w, upper: a }) {
                    let s = rule_support(&RuleSet::from_rules(vec![tighter]), d.features()).unwrap()[0];
                    prop_assert!(s <= base[k]);
                }
            }
        }
    }
}
