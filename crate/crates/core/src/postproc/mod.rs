//! Post-processors mapping a learner matrix `B` (tree outputs or rule
//! indicators, one column per learner) and the target to a prediction rule.
//!
//! Linear schemes produce a [`WeightModel`] `F(b) = w0 + Σ w_q b_q`; the
//! Nadaraya–Watson scheme produces a [`KernelSmoother`].

mod lasso;
mod oob;
mod pcr;
mod pls;
mod smoother;
mod stacking;
mod standardize;

pub use lasso::{fit_lasso, lambda_max, lasso_path};
pub use oob::{fit_oob_weights, oob_model, oob_residual_scale, oob_weights};
pub use pcr::{fit_pcr, pcr_path};
pub use pls::{fit_pls, pls_path, ComponentPath};
pub use smoother::{fit_nw_smoother, median_pair_distance, KernelSmoother};
pub use stacking::{fit_stacking, kkt_violation, nnls};
pub use standardize::Standardizer;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, invalid, Result};
use crate::math;
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MethodTag {
    Pls,
    Pcr,
    Lasso,
    Stack,
    Oob,
    Equal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Hyperparams {
    None,
    Components(usize),
    Lambda(f64),
    /// Nadaraya–Watson bandwidth.
    Bandwidth(f64),
    Oob { bandwidth: f64, kernel: Kernel, keep_fraction: f64 },
}

/// Kernel profile as a function of the squared scaled distance `s = u²/h²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Kernel {
    #[default]
    Gaussian,
    Epanechnikov,
}

impl Kernel {
    #[inline]
    pub fn weight(self, s: f64) -> f64 {
        match self {
            Kernel::Gaussian => math::exp(-0.5 * s),
            Kernel::Epanechnikov => (1.0 - s).max(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightModel {
    pub intercept: f64,
    pub weights: Vec<f64>,
    pub column_means: Vec<f64>,
    pub column_scales: Vec<f64>,
    pub method: MethodTag,
    pub hyperparams: Hyperparams,
}

impl WeightModel {
    /// Model with coefficients `beta` on the standardized active columns,
    /// mapped back to original column units.
    pub(crate) fn from_standardized(
        std: &Standardizer,
        beta_active: &[f64],
        y_mean: f64,
        method: MethodTag,
        hyperparams: Hyperparams,
    ) -> Self {
        let mut weights = vec![0.0; std.len()];
        for (&q, &b) in std.active().iter().zip(beta_active) {
            weights[q] = b / std.scales()[q];
        }
        let intercept = y_mean - math::dot(&weights, std.means());
        WeightModel {
            intercept,
            weights,
            column_means: std.means().to_vec(),
            column_scales: std.scales().to_vec(),
            method,
            hyperparams,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Weights on the standardized scale (`w_q · scale_q`).
    pub fn standardized_weights(&self) -> Vec<f64> {
        self.weights.iter().zip(&self.column_scales).map(|(w, s)| w * s).collect()
    }

    pub fn predict(&self, b_row: &[f64]) -> Result<f64> {
        predict_linear(self, b_row)
    }

    pub fn predict_rows(&self, b: &Matrix) -> Result<Vec<f64>> {
        check_len(self.len(), b.cols())?;
        Ok(b.iter_rows().map(|r| self.intercept + math::dot(&self.weights, r)).collect())
    }
}

/// `w0 + Σ_q w_q b_q`.
pub fn predict_linear(w: &WeightModel, b_row: &[f64]) -> Result<f64> {
    check_len(w.len(), b_row.len())?;
    Ok(w.intercept + math::dot(&w.weights, b_row))
}

/// Intercept 0, every weight `1/Q`: the bagging / random forest average.
pub fn equal_weights(q: usize) -> Result<WeightModel> {
    if q == 0 {
        return Err(invalid("equal weighting needs at least one learner"));
    }
    Ok(WeightModel {
        intercept: 0.0,
        weights: vec![1.0 / q as f64; q],
        column_means: vec![0.0; q],
        column_scales: vec![1.0; q],
        method: MethodTag::Equal,
        hyperparams: Hyperparams::None,
    })
}

/// Keeps the `⌈keep·Q⌉` largest weights by magnitude (ties at the cutoff go
/// to the lower index), zeroes the rest and renormalizes survivors to sum 1.
pub fn trim_weights(w: &WeightModel, keep_fraction: f64) -> Result<WeightModel> {
    if w.method != MethodTag::Oob {
        return Err(invalid(format!("trimming applies to out-of-bag weights, got {:?}", w.method)));
    }
    if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
        return Err(invalid(format!("keep fraction must be in (0,1], got {keep_fraction}")));
    }
    let q = w.len();
    let keep = (math::ceil(keep_fraction * q as f64) as usize).clamp(1, q);
    let mut out = w.clone();
    if let Hyperparams::Oob { keep_fraction: k, .. } = &mut out.hyperparams {
        *k = keep_fraction;
    }
    if keep == q {
        return Ok(out);
    }
    let mut order: Vec<usize> = (0..q).collect();
    order.sort_by(|&a, &b| math::abs(w.weights[b]).total_cmp(&math::abs(w.weights[a])).then(a.cmp(&b)));
    let mut survivors = vec![false; q];
    for &i in &order[..keep] {
        survivors[i] = true;
    }
    let total: f64 = (0..q).filter(|&i| survivors[i]).map(|i| w.weights[i]).sum();
    for i in 0..q {
        out.weights[i] = if survivors[i] { w.weights[i] / total } else { 0.0 };
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oob_model(weights: Vec<f64>) -> WeightModel {
        let q = weights.len();
        WeightModel {
            intercept: 0.0,
            weights,
            column_means: vec![0.0; q],
            column_scales: vec![1.0; q],
            method: MethodTag::Oob,
            hyperparams: Hyperparams::Oob { bandwidth: 1.0, kernel: Kernel::Gaussian, keep_fraction: 1.0 },
        }
    }

    #[test]
    fn trim_identity_and_uniform() {
        let w = oob_model(vec![0.1, 0.2, 0.7]);
        assert_eq!(trim_weights(&w, 1.0).unwrap(), w);
        let u = oob_model(vec![0.1; 10]);
        let t = trim_weights(&u, 0.6).unwrap();
        assert_eq!(t.weights.iter().filter(|&&v| v > 0.0).count(), 6);
        for v in t.weights.iter().filter(|&&v| v > 0.0) {
            assert!((v - 1.0 / 6.0).abs() < 1e-15);
        }
        // ties at the cutoff keep the lower indices
        assert!(t.weights[..6].iter().all(|&v| v > 0.0));
    }

    #[test]
    fn trim_renormalizes_top_two() {
        let t = trim_weights(&oob_model(vec![0.4, 0.3, 0.2, 0.1]), 0.5).unwrap();
        let expected = [4.0 / 7.0, 3.0 / 7.0, 0.0, 0.0];
        for (a, b) in t.weights.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn trim_rejects_other_methods() {
        assert!(trim_weights(&equal_weights(3).unwrap(), 0.5).is_err());
        assert!(trim_weights(&oob_model(vec![1.0]), 0.0).is_err());
    }

    #[test]
    fn linear_prediction() {
        let eq = equal_weights(4).unwrap();
        assert_eq!(eq.predict(&[1.0, 2.0, 3.0, 6.0]).unwrap(), 3.0);
        let mut zero = eq.clone();
        zero.weights = vec![0.0; 4];
        zero.intercept = 1.5;
        assert_eq!(zero.predict(&[9.0, 9.0, 9.0, 9.0]).unwrap(), 1.5);
        assert!(eq.predict(&[1.0]).is_err());
        assert!(equal_weights(0).is_err());
    }

    #[test]
    fn kernels() {
        assert_eq!(Kernel::Gaussian.weight(0.0), 1.0);
        assert!((Kernel::Gaussian.weight(2.0) - libm::exp(-1.0)).abs() < 1e-15);
        assert_eq!(Kernel::Epanechnikov.weight(0.25), 0.75);
        assert_eq!(Kernel::Epanechnikov.weight(2.0), 0.0);
    }
}
