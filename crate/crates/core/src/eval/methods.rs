use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, invalid, Error, Result};
use crate::isle::OobMask;
use crate::math;
use crate::matrix::Matrix;
use crate::postproc::{
    equal_weights, fit_lasso, fit_nw_smoother, fit_pls, lambda_max, median_pair_distance, oob_model,
    oob_residual_scale, oob_weights, trim_weights, Hyperparams, Kernel, KernelSmoother, WeightModel,
};

/// The nine compared ensembles: a post-processor applied to either the rule
/// matrix (`r_*`, `ksr`) or the tree output matrix (the rest).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodId {
    RPls,
    TPls,
    RLasso,
    TLasso,
    WOob,
    WtOob,
    Rf,
    Ksr,
    Kst,
}

impl MethodId {
    pub const ALL: [MethodId; 9] = [
        MethodId::RPls,
        MethodId::TPls,
        MethodId::RLasso,
        MethodId::TLasso,
        MethodId::WOob,
        MethodId::WtOob,
        MethodId::Rf,
        MethodId::Ksr,
        MethodId::Kst,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MethodId::RPls => "r_pls",
            MethodId::TPls => "t_pls",
            MethodId::RLasso => "r_lasso",
            MethodId::TLasso => "t_lasso",
            MethodId::WOob => "w_oob",
            MethodId::WtOob => "wt_oob",
            MethodId::Rf => "rf",
            MethodId::Ksr => "ksr",
            MethodId::Kst => "kst",
        }
    }

    /// Whether the method consumes the rule matrix rather than tree outputs.
    pub fn uses_rules(self) -> bool {
        matches!(self, MethodId::RPls | MethodId::RLasso | MethodId::Ksr)
    }
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MethodId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MethodId::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| invalid(alloc::format!("unknown method {s:?}")))
    }
}

/// Grid construction knobs shared by all methods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSettings {
    pub kernel: Kernel,
    /// Fraction of trees kept by `wt_oob`.
    pub keep_fraction: f64,
    pub max_components: usize,
    pub n_lambdas: usize,
    /// Smallest λ on the grid as a fraction of λ_max.
    pub lambda_ratio: f64,
    pub n_bandwidths: usize,
    /// Bandwidth grid spans `[lo, hi] × scale`.
    pub bandwidth_span: (f64, f64),
    /// Explicit bandwidths for `w_oob`/`wt_oob`, replacing the default grid.
    pub oob_bandwidths: Option<Vec<f64>>,
    /// Explicit bandwidths for `ksr`/`kst`.
    pub nw_bandwidths: Option<Vec<f64>>,
}

impl Default for MethodSettings {
    fn default() -> Self {
        MethodSettings {
            kernel: Kernel::Gaussian,
            keep_fraction: 0.6,
            max_components: 30,
            n_lambdas: 20,
            lambda_ratio: 1e-3,
            n_bandwidths: 15,
            bandwidth_span: (0.01, 100.0),
            oob_bandwidths: None,
            nw_bandwidths: None,
        }
    }
}

impl MethodSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.keep_fraction > 0.0 && self.keep_fraction <= 1.0) {
            return Err(invalid("keep_fraction must be in (0,1]"));
        }
        if self.max_components == 0 || self.n_lambdas == 0 || self.n_bandwidths == 0 {
            return Err(invalid("grid sizes must be >= 1"));
        }
        if !(self.lambda_ratio > 0.0 && self.lambda_ratio <= 1.0) {
            return Err(invalid("lambda_ratio must be in (0,1]"));
        }
        let (lo, hi) = self.bandwidth_span;
        if !(lo > 0.0 && hi >= lo) {
            return Err(invalid("bandwidth span must satisfy 0 < lo <= hi"));
        }
        for hs in [&self.oob_bandwidths, &self.nw_bandwidths].into_iter().flatten() {
            if hs.is_empty() || hs.iter().any(|h| !(*h > 0.0)) {
                return Err(invalid("explicit bandwidths must be non-empty and > 0"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSpec {
    pub id: MethodId,
    /// Ordered from least to most complex; ties resolve to the earliest.
    pub grid: Vec<Hyperparams>,
}

/// Learner matrix, targets and (for tree matrices) out-of-bag membership.
#[derive(Debug, Clone, Copy)]
pub struct LearnerProblem<'a> {
    pub b: &'a Matrix,
    pub y: &'a [f64],
    pub oob: Option<&'a OobMask>,
}

impl<'a> LearnerProblem<'a> {
    pub fn new(b: &'a Matrix, y: &'a [f64], oob: Option<&'a OobMask>) -> Result<Self> {
        check_len(b.rows(), y.len())?;
        if let Some(m) = oob {
            check_len(b.rows(), m.rows())?;
            check_len(b.cols(), m.trees())?;
        }
        Ok(LearnerProblem { b, y, oob })
    }

    pub(crate) fn oob(&self) -> Result<&'a OobMask> {
        self.oob.ok_or_else(|| invalid("out-of-bag weighting needs the out-of-bag mask"))
    }
}

fn bandwidth_grid(scale: f64, settings: &MethodSettings) -> Vec<f64> {
    let (lo, hi) = settings.bandwidth_span;
    let scale = if scale > 0.0 && scale.is_finite() { scale } else { 1.0 };
    math::log_grid_descending(hi * scale, lo * scale, settings.n_bandwidths)
}

/// Default hyperparameter grid, least complex first: component counts
/// ascending, λ descending from λ_max, bandwidths descending.
pub fn default_grid(id: MethodId, problem: &LearnerProblem<'_>, settings: &MethodSettings) -> Result<Vec<Hyperparams>> {
    settings.validate()?;
    let (n, q) = (problem.b.rows(), problem.b.cols());
    Ok(match id {
        MethodId::RPls | MethodId::TPls => {
            let hi = settings.max_components.min(n.saturating_sub(1)).min(q);
            if hi == 0 {
                return Err(Error::Degenerate(alloc::format!("no admissible component count for {n}x{q}")));
            }
            (1..=hi).map(Hyperparams::Components).collect()
        }
        MethodId::RLasso | MethodId::TLasso => {
            let top = lambda_max(problem.b, problem.y)?;
            if !(top > 0.0) {
                alloc::vec![Hyperparams::Lambda(0.0)]
            } else {
                math::log_grid_descending(top, top * settings.lambda_ratio, settings.n_lambdas)
                    .into_iter()
                    .map(Hyperparams::Lambda)
                    .collect()
            }
        }
        MethodId::WOob | MethodId::WtOob => {
            let keep_fraction = if id == MethodId::WtOob { settings.keep_fraction } else { 1.0 };
            let hs = match &settings.oob_bandwidths {
                Some(h) => sorted_descending(h),
                None => bandwidth_grid(oob_residual_scale(problem.b, problem.y, problem.oob()?), settings),
            };
            hs.into_iter()
                .map(|bandwidth| Hyperparams::Oob { bandwidth, kernel: settings.kernel, keep_fraction })
                .collect()
        }
        MethodId::Rf => alloc::vec![Hyperparams::None],
        MethodId::Ksr | MethodId::Kst => {
            let hs = match &settings.nw_bandwidths {
                Some(h) => sorted_descending(h),
                None => {
                    let s = fit_nw_smoother(problem.b, problem.y, 1.0, settings.kernel)?;
                    bandwidth_grid(median_pair_distance(&s), settings)
                }
            };
            hs.into_iter().map(Hyperparams::Bandwidth).collect()
        }
    })
}

fn sorted_descending(h: &[f64]) -> Vec<f64> {
    let mut v = h.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// A fitted post-processor of either kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FittedMethod {
    Linear(WeightModel),
    Smoother(KernelSmoother),
}

impl FittedMethod {
    pub fn predict(&self, b_row: &[f64]) -> Result<f64> {
        match self {
            FittedMethod::Linear(w) => w.predict(b_row),
            FittedMethod::Smoother(s) => s.predict(b_row),
        }
    }

    pub fn predict_rows(&self, b: &Matrix) -> Result<Vec<f64>> {
        match self {
            FittedMethod::Linear(w) => w.predict_rows(b),
            FittedMethod::Smoother(s) => b.iter_rows().map(|r| s.predict(r)).collect(),
        }
    }

    pub fn weights(&self) -> Option<&WeightModel> {
        match self {
            FittedMethod::Linear(w) => Some(w),
            FittedMethod::Smoother(_) => None,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            FittedMethod::Linear(_) => "linear",
            FittedMethod::Smoother(_) => "kernel",
        }
    }
}

fn mismatch(id: MethodId, h: &Hyperparams) -> Error {
    invalid(alloc::format!("hyperparameter {h:?} does not apply to {id}"))
}

/// Fits method `id` on the whole problem with the given hyperparameter.
pub fn fit_method(id: MethodId, h: &Hyperparams, problem: &LearnerProblem<'_>) -> Result<FittedMethod> {
    let (b, y) = (problem.b, problem.y);
    Ok(match (id, h) {
        (MethodId::RPls | MethodId::TPls, Hyperparams::Components(k)) => {
            let hi = (b.rows().saturating_sub(1)).min(b.cols());
            FittedMethod::Linear(fit_pls(b, y, (*k).min(hi))?)
        }
        (MethodId::RLasso | MethodId::TLasso, Hyperparams::Lambda(l)) => FittedMethod::Linear(fit_lasso(b, y, *l)?),
        (MethodId::WOob | MethodId::WtOob, Hyperparams::Oob { bandwidth, kernel, keep_fraction }) => {
            let w = oob_weights(b, y, problem.oob()?, None, *bandwidth, *kernel)?;
            let model = oob_model(w, *bandwidth, *kernel);
            FittedMethod::Linear(trim_weights(&model, *keep_fraction)?)
        }
        (MethodId::Rf, Hyperparams::None) => FittedMethod::Linear(equal_weights(b.cols())?),
        (MethodId::Ksr | MethodId::Kst, Hyperparams::Bandwidth(bw)) => {
            FittedMethod::Smoother(fit_nw_smoother(b, y, *bw, Kernel::default())?)
        }
        _ => return Err(mismatch(id, h)),
    })
}

/// Same as [`fit_method`] but with the kernel taken from the settings for
/// the smoothing methods.
pub fn fit_method_with(
    id: MethodId,
    h: &Hyperparams,
    problem: &LearnerProblem<'_>,
    settings: &MethodSettings,
) -> Result<FittedMethod> {
    match (id, h) {
        (MethodId::Ksr | MethodId::Kst, Hyperparams::Bandwidth(bw)) => {
            Ok(FittedMethod::Smoother(fit_nw_smoother(problem.b, problem.y, *bw, settings.kernel)?))
        }
        _ => fit_method(id, h, problem),
    }
}

