//! One train/test replication: a shared ensemble, its rules, both learner
//! matrices on both portions, and the inner folds used for selection.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::cv::{cv_select, CvOutcome};
use super::methods::{default_grid, fit_method_with, FittedMethod, LearnerProblem, MethodId, MethodSettings, MethodSpec};
use super::metrics::{pearson_corr, rmse, Correlation};
use crate::dataset::{kfold_split, Dataset, FoldAssignment};
use crate::error::{check_len, Result};
use crate::isle::{Ensemble, OobMask};
use crate::matrix::Matrix;
use crate::postproc::Hyperparams;
use crate::rules::{extract_rules, rule_matrix, RuleScope, RuleSet};

#[derive(Debug, Clone)]
pub struct Replication {
    pub ensemble: Ensemble,
    pub rules: RuleSet,
    pub tree_train: Matrix,
    pub tree_test: Matrix,
    pub rule_train: Matrix,
    pub rule_test: Matrix,
    pub y_train: Vec<f64>,
    pub y_test: Vec<f64>,
    pub oob: OobMask,
    pub folds: FoldAssignment,
}

/// Checksums of the matrices every method in a replication consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixChecksums {
    pub tree_train: u64,
    pub tree_test: u64,
    pub rule_train: u64,
    pub rule_test: u64,
}

impl Replication {
    pub fn new(train: &Dataset, test: &Dataset, ensemble: Ensemble, scope: RuleScope, cv_folds: usize, fold_seed: u64) -> Result<Self> {
        check_len(ensemble.n_train(), train.n())?;
        check_len(train.p(), test.p())?;
        let rules = extract_rules(&ensemble, scope);
        Ok(Replication {
            tree_train: ensemble.learner_matrix(train.features())?,
            tree_test: ensemble.learner_matrix(test.features())?,
            rule_train: rule_matrix(&rules, train.features())?,
            rule_test: rule_matrix(&rules, test.features())?,
            y_train: train.target().to_vec(),
            y_test: test.target().to_vec(),
            oob: ensemble.oob_mask(),
            folds: kfold_split(train.n(), cv_folds, fold_seed)?,
            rules,
            ensemble,
        })
    }

    pub fn checksums(&self) -> MatrixChecksums {
        MatrixChecksums {
            tree_train: self.tree_train.checksum(),
            tree_test: self.tree_test.checksum(),
            rule_train: self.rule_train.checksum(),
            rule_test: self.rule_test.checksum(),
        }
    }

    /// Training problem for `id`: the rule matrix for rule-based methods,
    /// otherwise the tree matrix with its out-of-bag mask.
    pub fn train_problem(&self, id: MethodId) -> LearnerProblem<'_> {
        if id.uses_rules() {
            LearnerProblem { b: &self.rule_train, y: &self.y_train, oob: None }
        } else {
            LearnerProblem { b: &self.tree_train, y: &self.y_train, oob: Some(&self.oob) }
        }
    }

    pub fn test_matrix(&self, id: MethodId) -> &Matrix {
        if id.uses_rules() {
            &self.rule_test
        } else {
            &self.tree_test
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodOutcome {
    pub id: MethodId,
    pub accuracy: Correlation,
    pub rmse: f64,
    pub hyper: Hyperparams,
    pub cv: CvOutcome,
    /// Checksum of the training matrix the method consumed.
    pub matrix_checksum: u64,
    pub model: FittedMethod,
    pub predictions: Vec<f64>,
}

/// Selects the hyperparameter by cross-validation on the training portion,
/// refits on all training rows and scores on the test portion.
pub fn evaluate_method(rep: &Replication, id: MethodId, settings: &MethodSettings) -> Result<MethodOutcome> {
    let problem = rep.train_problem(id);
    let grid = default_grid(id, &problem, settings)?;
    let spec = MethodSpec { id, grid };
    let cv = cv_select(&spec, &problem, &rep.folds, settings)?;
    let model = fit_method_with(id, &cv.best, &problem, settings)?;
    let predictions = model.predict_rows(rep.test_matrix(id))?;
    Ok(MethodOutcome {
        id,
        accuracy: pearson_corr(&rep.y_test, &predictions)?,
        rmse: rmse(&rep.y_test, &predictions)?,
        hyper: cv.best,
        matrix_checksum: problem.b.checksum(),
        cv,
        model,
        predictions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{gen_friedman_popescu, train_test_split, SplitSpec};
    use crate::isle::{generate_ensemble, IsleConfig};

    fn replication(seed: u64) -> Replication {
        let d = gen_friedman_popescu(seed, 150);
        let (train, test) = train_test_split(&d, &SplitSpec::two_to_one(seed)).unwrap();
        let cfg = IsleConfig { n_trees: 30, seed, ..IsleConfig::default() };
        let e = generate_ensemble(&train, &cfg).unwrap();
        Replication::new(&train, &test, e, RuleScope::AllNodes, 5, seed).unwrap()
    }

    #[test]
    fn methods_share_matrices_and_score() {
        let rep = replication(4);
        let sums = rep.checksums();
        for id in MethodId::ALL {
            let out = evaluate_method(&rep, id, &MethodSettings::default()).unwrap();
            let expected = if id.uses_rules() { sums.rule_train } else { sums.tree_train };
            assert_eq!(out.matrix_checksum, expected);
            assert!(out.accuracy.value.is_finite(), "{id}");
            assert_eq!(out.predictions.len(), rep.y_test.len());
        }
    }

    #[test]
    fn huge_bandwidth_oob_matches_equal_weights() {
        let rep = replication(9);
        let rf = evaluate_method(&rep, MethodId::Rf, &MethodSettings::default()).unwrap();
        let settings = MethodSettings { oob_bandwidths: Some(alloc::vec![1e12]), ..MethodSettings::default() };
        let w = evaluate_method(&rep, MethodId::WOob, &settings).unwrap();
        assert!((rf.accuracy.value - w.accuracy.value).abs() < 1e-6);
    }

    #[test]
    fn full_keep_fraction_matches_plain_oob() {
        let rep = replication(2);
        let plain = evaluate_method(&rep, MethodId::WOob, &MethodSettings::default()).unwrap();
        let settings = MethodSettings { keep_fraction: 1.0, ..MethodSettings::default() };
        let trimmed = evaluate_method(&rep, MethodId::WtOob, &settings).unwrap();
        assert_eq!(plain.predictions, trimmed.predictions);
        assert_eq!(plain.model, trimmed.model);
    }
}
