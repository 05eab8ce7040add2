//! K-fold selection of a post-processor's hyperparameter by mean held-out
//! correlation.

use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::methods::{fit_method_with, LearnerProblem, MethodId, MethodSettings, MethodSpec};
use super::metrics::pearson_corr;
use crate::dataset::FoldAssignment;
use crate::error::{check_len, invalid, Error, Result};
use crate::isle::OobMask;
use crate::math;
use crate::matrix::Matrix;
use crate::postproc::{fit_nw_smoother, lasso_path, oob_model, oob_weights, pls_path, trim_weights, Hyperparams};

/// Grid points whose score differs from the best by at most this are ties.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvPoint {
    pub hyper: Hyperparams,
    /// Mean over folds; degenerate or failed folds count as zero.
    pub mean_corr: f64,
    /// Every fold was degenerate (constant predictions) or failed to fit.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvOutcome {
    pub best: Hyperparams,
    pub best_index: usize,
    pub trace: Vec<CvPoint>,
}

/// Index of the highest mean correlation among non-degenerate points, the
/// earliest winning ties.
pub fn select_best(trace: &[CvPoint]) -> Result<usize> {
    let top = trace
        .iter()
        .filter(|p| !p.degenerate && p.mean_corr.is_finite())
        .map(|p| p.mean_corr)
        .fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return Err(Error::Selection("every grid point was degenerate".into()));
    }
    Ok(trace
        .iter()
        .position(|p| !p.degenerate && p.mean_corr >= top - TIE_TOLERANCE)
        .expect("top is attained"))
}

/// Per-fold score of one grid point.
#[derive(Clone, Copy)]
struct FoldScore {
    corr: f64,
    degenerate: bool,
}

const FAILED: FoldScore = FoldScore { corr: 0.0, degenerate: true };

fn score(y: &[f64], pred: &[f64]) -> FoldScore {
    match pearson_corr(y, pred) {
        Ok(c) if c.value.is_finite() => FoldScore { corr: c.value, degenerate: c.degenerate },
        _ => FAILED,
    }
}

/// Cross-validated score of every grid point, then the selection rule.
pub fn cv_select(
    spec: &MethodSpec,
    problem: &LearnerProblem<'_>,
    folds: &FoldAssignment,
    settings: &MethodSettings,
) -> Result<CvOutcome> {
    if spec.grid.is_empty() {
        return Err(invalid(alloc::format!("empty hyperparameter grid for {}", spec.id)));
    }
    check_len(problem.b.rows(), folds.n())?;
    let mut sums = vec![0.0; spec.grid.len()];
    let mut live = vec![false; spec.grid.len()];
    for f in 0..folds.k() {
        let train = folds.training(f);
        let test = folds.held_out(f);
        let scores = fold_scores(spec, problem, settings, &train, &test);
        for (g, s) in scores.into_iter().enumerate() {
            sums[g] += s.corr;
            live[g] |= !s.degenerate;
        }
    }
    let k = folds.k() as f64;
    let trace: Vec<CvPoint> = spec
        .grid
        .iter()
        .zip(sums.iter().zip(&live))
        .map(|(h, (s, l))| CvPoint { hyper: *h, mean_corr: s / k, degenerate: !l })
        .collect();
    // a single candidate needs no scores to be chosen
    let best_index = if trace.len() == 1 { 0 } else { select_best(&trace)? };
    Ok(CvOutcome { best: trace[best_index].hyper, best_index, trace })
}

fn fold_scores(
    spec: &MethodSpec,
    problem: &LearnerProblem<'_>,
    settings: &MethodSettings,
    train: &[usize],
    test: &[usize],
) -> Vec<FoldScore> {
    let g = spec.grid.len();
    let y_test: Vec<f64> = test.iter().map(|&i| problem.y[i]).collect();
    let sub = || (problem.b.select_rows(train), train.iter().map(|&i| problem.y[i]).collect::<Vec<f64>>());
    let b_test = || problem.b.select_rows(test);
    match spec.id {
        MethodId::RPls | MethodId::TPls => {
            let (b_tr, y_tr) = sub();
            let cap = (b_tr.rows().saturating_sub(1)).min(b_tr.cols());
            let want = spec
                .grid
                .iter()
                .filter_map(|h| match h {
                    Hyperparams::Components(k) => Some(*k),
                    _ => None,
                })
                .max()
                .unwrap_or(0)
                .min(cap);
            let path = match pls_path(&b_tr, &y_tr, want) {
                Ok(p) => p,
                Err(_) => return vec![FAILED; g],
            };
            let bt = b_test();
            spec.grid
                .iter()
                .map(|h| match h {
                    Hyperparams::Components(k) => match path.model(*k).predict_rows(&bt) {
                        Ok(p) => score(&y_test, &p),
                        Err(_) => FAILED,
                    },
                    _ => FAILED,
                })
                .collect()
        }
        MethodId::RLasso | MethodId::TLasso => {
            let lambdas: Option<Vec<f64>> = spec
                .grid
                .iter()
                .map(|h| match h {
                    Hyperparams::Lambda(l) => Some(*l),
                    _ => None,
                })
                .collect();
            let Some(lambdas) = lambdas else { return vec![FAILED; g] };
            let (b_tr, y_tr) = sub();
            let models = match lasso_path(&b_tr, &y_tr, &lambdas) {
                Ok(m) => m,
                Err(_) => return vec![FAILED; g],
            };
            let bt = b_test();
            models
                .iter()
                .map(|m| match m.predict_rows(&bt) {
                    Ok(p) => score(&y_test, &p),
                    Err(_) => FAILED,
                })
                .collect()
        }
        MethodId::WOob | MethodId::WtOob => {
            let Ok(mask) = problem.oob() else { return vec![FAILED; g] };
            spec.grid
                .iter()
                .map(|h| match h {
                    Hyperparams::Oob { bandwidth, kernel, keep_fraction } => {
                        let fitted = oob_weights(problem.b, problem.y, mask, Some(train), *bandwidth, *kernel)
                            .and_then(|w| trim_weights(&oob_model(w, *bandwidth, *kernel), *keep_fraction));
                        match fitted {
                            Ok(m) => score(&y_test, &oob_restricted_predictions(problem.b, mask, &m.weights, test)),
                            Err(_) => FAILED,
                        }
                    }
                    _ => FAILED,
                })
                .collect()
        }
        MethodId::Ksr | MethodId::Kst => {
            let (b_tr, y_tr) = sub();
            let smoother = match fit_nw_smoother(&b_tr, &y_tr, 1.0, settings.kernel) {
                Ok(s) => s,
                Err(_) => return vec![FAILED; g],
            };
            let dists: Vec<Vec<f64>> = match test.iter().map(|&i| smoother.scaled_sq_distances(problem.b.row(i))).collect() {
                Ok(d) => d,
                Err(_) => return vec![FAILED; g],
            };
            spec.grid
                .iter()
                .map(|h| match h {
                    Hyperparams::Bandwidth(bw) if *bw > 0.0 => {
                        let p: Vec<f64> = dists.iter().map(|d| smoother.predict_from_distances(d, *bw)).collect();
                        score(&y_test, &p)
                    }
                    _ => FAILED,
                })
                .collect()
        }
        MethodId::Rf => {
            let (b_tr, y_tr) = sub();
            let tr = LearnerProblem { b: &b_tr, y: &y_tr, oob: None };
            let bt = b_test();
            spec.grid
                .iter()
                .map(|h| match fit_method_with(spec.id, h, &tr, settings).and_then(|m| m.predict_rows(&bt)) {
                    Ok(p) => score(&y_test, &p),
                    Err(_) => FAILED,
                })
                .collect()
        }
    }
}

/// Held-out rows were in-bag for some trees, so each one is predicted from
/// the trees it is out-of-bag for, with the weights renormalized over them.
/// A row that no weighted tree left out falls back to the full weighting.
fn oob_restricted_predictions(b: &Matrix, mask: &OobMask, w: &[f64], rows: &[usize]) -> Vec<f64> {
    rows.iter()
        .map(|&i| {
            let (mut num, mut den) = (0.0, 0.0);
            for (l, wl) in w.iter().enumerate() {
                if *wl != 0.0 && mask.is_oob(i, l) {
                    num += wl * b.get(i, l);
                    den += wl;
                }
            }
            if den > 0.0 {
                num / den
            } else {
                math::dot(w, b.row(i))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::kfold_split;

    fn point(hyper: Hyperparams, mean_corr: f64, degenerate: bool) -> CvPoint {
        CvPoint { hyper, mean_corr, degenerate }
    }

    #[test]
    fn ties_go_to_the_least_complex_point() {
        let trace = [
            point(Hyperparams::Components(1), 0.5, false),
            point(Hyperparams::Components(2), 0.9, false),
            point(Hyperparams::Components(5), 0.9, false),
        ];
        assert_eq!(select_best(&trace).unwrap(), 1);
    }

    #[test]
    fn all_degenerate_is_an_error() {
        let trace = [point(Hyperparams::Lambda(1.0), 0.0, true), point(Hyperparams::Lambda(0.5), 0.0, true)];
        assert!(matches!(select_best(&trace), Err(Error::Selection(_))));
        let trace = [point(Hyperparams::Lambda(1.0), 0.0, true), point(Hyperparams::Lambda(0.5), -0.2, false)];
        assert_eq!(select_best(&trace).unwrap(), 1);
    }

    fn linear_problem(n: usize) -> (Matrix, Vec<f64>) {
        // noiseless y = 2 b0 - b1 + 0.5 b2 on a non-degenerate design
        let b = Matrix::from_fn(n, 3, |i, j| {
            let t = (i * 7 + j * 13) % 17;
            t as f64 + 0.1 * (i as f64) * (j as f64 + 1.0)
        });
        let y = (0..n).map(|i| 2.0 * b.get(i, 0) - b.get(i, 1) + 0.5 * b.get(i, 2)).collect();
        (b, y)
    }

    #[test]
    fn single_point_grid() {
        let (b, y) = linear_problem(30);
        let folds = kfold_split(30, 5, 1).unwrap();
        let p = LearnerProblem::new(&b, &y, None).unwrap();
        let spec = MethodSpec { id: MethodId::Rf, grid: vec![Hyperparams::None] };
        let out = cv_select(&spec, &p, &folds, &MethodSettings::default()).unwrap();
        assert_eq!(out.best, Hyperparams::None);
        assert_eq!(out.trace.len(), 1);
    }

    #[test]
    fn noiseless_linear_selects_full_fit() {
        let (b, y) = linear_problem(40);
        let folds = kfold_split(40, 10, 3).unwrap();
        let p = LearnerProblem::new(&b, &y, None).unwrap();
        let spec = MethodSpec { id: MethodId::TPls, grid: (1..=3).map(Hyperparams::Components).collect() };
        let out = cv_select(&spec, &p, &folds, &MethodSettings::default()).unwrap();
        assert_eq!(out.best, Hyperparams::Components(3));
        assert!(out.trace[2].mean_corr > 1.0 - 1e-9, "{:?}", out.trace);
    }

    #[test]
    fn empty_grid_rejected() {
        let (b, y) = linear_problem(10);
        let folds = kfold_split(10, 2, 0).unwrap();
        let p = LearnerProblem::new(&b, &y, None).unwrap();
        let spec = MethodSpec { id: MethodId::TPls, grid: vec![] };
        assert!(cv_select(&spec, &p, &folds, &MethodSettings::default()).is_err());
    }

    #[test]
    fn constant_target_is_a_selection_error() {
        let (b, _) = linear_problem(20);
        let y = vec![3.0; 20];
        let folds = kfold_split(20, 4, 0).unwrap();
        let p = LearnerProblem::new(&b, &y, None).unwrap();
        let spec = MethodSpec { id: MethodId::TLasso, grid: vec![Hyperparams::Lambda(0.1), Hyperparams::Lambda(0.0)] };
        assert!(matches!(cv_select(&spec, &p, &folds, &MethodSettings::default()), Err(Error::Selection(_))));
    }
}
