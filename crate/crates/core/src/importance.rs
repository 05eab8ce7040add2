//! Learner and input-variable importances from fitted linear weights.

use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, invalid, Result};
use crate::isle::Ensemble;
use crate::math;
use crate::matrix::Matrix;
use crate::postproc::WeightModel;
use crate::rules::RuleSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Basis {
    Trees,
    Rules,
}

/// What the learners are, for attributing their importance to inputs.
#[derive(Debug, Clone, Copy)]
pub enum Learners<'a> {
    Trees(&'a Ensemble),
    Rules(&'a RuleSet),
}

impl Learners<'_> {
    pub fn basis(&self) -> Basis {
        match self {
            Learners::Trees(_) => Basis::Trees,
            Learners::Rules(_) => Basis::Rules,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Learners::Trees(e) => e.len(),
            Learners::Rules(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Features tested by learner `k`, ascending and distinct.
    pub fn features_of(&self, k: usize) -> Vec<usize> {
        match self {
            Learners::Trees(e) => e.trees()[k].features_used(),
            Learners::Rules(r) => r.rules()[k].conditions().iter().map(|c| c.feature).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub learner_importances: Vec<f64>,
    pub variable_importances: Vec<f64>,
    pub basis: Basis,
}

/// `I_k = |w_k| · std(T_k)` with the population standard deviation of each
/// column of the training learner matrix.
pub fn tree_importance(w: &WeightModel, t_train: &Matrix) -> Result<Vec<f64>> {
    check_len(w.len(), t_train.cols())?;
    tree_importance_from_std(w, &column_std(t_train))
}

/// Population standard deviation of every column.
pub fn column_std(m: &Matrix) -> Vec<f64> {
    m.to_columns().iter().map(|c| math::population_std(c)).collect()
}

/// [`tree_importance`] from precomputed column standard deviations.
pub fn tree_importance_from_std(w: &WeightModel, std: &[f64]) -> Result<Vec<f64>> {
    check_len(w.len(), std.len())?;
    if let Some(s) = std.iter().find(|s| !(**s >= 0.0)) {
        return Err(invalid(alloc::format!("standard deviation {s} is not >= 0")));
    }
    Ok(std.iter().zip(&w.weights).map(|(s, wk)| math::abs(*wk) * s).collect())
}

/// `I_k = |w_k| · sqrt(s_k (1 - s_k))`.
pub fn rule_importance(w: &WeightModel, support: &[f64]) -> Result<Vec<f64>> {
    check_len(w.len(), support.len())?;
    if let Some(s) = support.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return Err(invalid(alloc::format!("rule support {s} outside [0,1]")));
    }
    Ok(support.iter().zip(&w.weights).map(|(s, wk)| math::abs(*wk) * math::sqrt(s * (1.0 - s))).collect())
}

/// `V_l = Σ I_k` over learners that test feature `l`. With `shared_credit`
/// each learner's importance is split evenly among the features it tests.
pub fn variable_importance(basis: Learners<'_>, importances: &[f64], p: usize, shared_credit: bool) -> Result<Vec<f64>> {
    check_len(basis.len(), importances.len())?;
    let mut v = vec![0.0; p];
    for (k, imp) in importances.iter().enumerate() {
        let feats = basis.features_of(k);
        if feats.is_empty() {
            continue;
        }
        let share = if shared_credit { imp / feats.len() as f64 } else { *imp };
        for f in feats {
            if f >= p {
                return Err(crate::error::Error::DimensionMismatch { expected: f + 1, got: p });
            }
            v[f] += share;
        }
    }
    Ok(v)
}

/// Learner and variable importances for a fitted model. `b_train` is the
/// training learner matrix (tree outputs or rule indicators).
pub fn importance_report(
    w: &WeightModel,
    basis: Learners<'_>,
    b_train: &Matrix,
    p: usize,
    shared_credit: bool,
) -> Result<ImportanceReport> {
    let learner_importances = match basis {
        Learners::Trees(_) => tree_importance(w, b_train)?,
        Learners::Rules(_) => rule_importance(w, &crate::rules::column_support(b_train)?)?,
    };
    let variable_importances = variable_importance(basis, &learner_importances, p, shared_credit)?;
    Ok(ImportanceReport { learner_importances, variable_importances, basis: basis.basis() })
}
