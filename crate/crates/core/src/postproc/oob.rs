//! Learner weights from out-of-bag residuals:
//! `w_l ∝ (1/|OOB(l)|) Σ_{i ∈ OOB(l)} K_h(y_i - T_l(x_i))`.
//!
//! Each learner has its own out-of-bag set, so kernel sums are averaged over
//! that set; with a common set this is the plain kernel sum up to a constant,
//! and as `h → ∞` every learner gets the same weight.

use alloc::vec::Vec;

use super::{Hyperparams, Kernel, MethodTag, WeightModel};
use crate::dataset::Dataset;
use crate::error::{check_len, invalid, Error, Result};
use crate::isle::{Ensemble, OobMask};
use crate::math;
use crate::matrix::Matrix;

/// Normalized weights from a training learner matrix `b` (rows = training
/// rows the mask refers to). Row subsets are honoured through `rows`: only
/// those rows count as out-of-bag evidence.
pub fn oob_weights(b: &Matrix, y: &[f64], mask: &OobMask, rows: Option<&[usize]>, h: f64, kernel: Kernel) -> Result<Vec<f64>> {
    check_len(b.rows(), y.len())?;
    check_len(b.rows(), mask.rows())?;
    check_len(b.cols(), mask.trees())?;
    if !(h > 0.0) {
        return Err(invalid(alloc::format!("bandwidth must be > 0, got {h}")));
    }
    let all: Vec<usize>;
    let rows = match rows {
        Some(r) => r,
        None => {
            all = (0..b.rows()).collect();
            &all
        }
    };
    let m = b.cols();
    let inv_h2 = 1.0 / (h * h);
    let mut out = Vec::with_capacity(m);
    match kernel {
        Kernel::Gaussian => {
            // log mean_i exp(-u_i²/2h²) per tree, then a softmax over trees
            let mut logs = Vec::with_capacity(m);
            for l in 0..m {
                let mut exps: Vec<f64> = Vec::new();
                for &i in rows {
                    if mask.is_oob(i, l) {
                        let u = y[i] - b.get(i, l);
                        exps.push(-0.5 * u * u * inv_h2);
                    }
                }
                if exps.is_empty() {
                    return Err(Error::Degenerate(alloc::format!("tree {l} has no out-of-bag rows")));
                }
                let top = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let s: f64 = exps.iter().map(|e| math::exp(e - top)).sum();
                logs.push(top + math::ln(s / exps.len() as f64));
            }
            let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            out.extend(logs.iter().map(|l| math::exp(l - top)));
        }
        Kernel::Epanechnikov => {
            for l in 0..m {
                let mut count = 0usize;
                let mut s = 0.0;
                for &i in rows {
                    if mask.is_oob(i, l) {
                        count += 1;
                        let u = y[i] - b.get(i, l);
                        s += kernel.weight(u * u * inv_h2);
                    }
                }
                if count == 0 {
                    return Err(Error::Degenerate(alloc::format!("tree {l} has no out-of-bag rows")));
                }
                out.push(s / count as f64);
            }
        }
    }
    let total: f64 = out.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Degenerate("every out-of-bag residual lies outside the kernel support".into()));
    }
    out.iter_mut().for_each(|w| *w /= total);
    Ok(out)
}

pub fn fit_oob_weights(e: &Ensemble, train: &Dataset, h: f64, kernel: Kernel) -> Result<WeightModel> {
    check_len(e.n_train(), train.n())?;
    let b = e.learner_matrix(train.features())?;
    let weights = oob_weights(&b, train.target(), &e.oob_mask(), None, h, kernel)?;
    Ok(oob_model(weights, h, kernel))
}

pub fn oob_model(weights: Vec<f64>, h: f64, kernel: Kernel) -> WeightModel {
    let q = weights.len();
    WeightModel {
        intercept: 0.0,
        weights,
        column_means: alloc::vec![0.0; q],
        column_scales: alloc::vec![1.0; q],
        method: MethodTag::Oob,
        hyperparams: Hyperparams::Oob { bandwidth: h, kernel, keep_fraction: 1.0 },
    }
}

/// Root mean square of all out-of-bag residuals, the natural unit for the
/// bandwidth grid.
pub fn oob_residual_scale(b: &Matrix, y: &[f64], mask: &OobMask) -> f64 {
    let (mut s, mut c) = (0.0, 0usize);
    for i in 0..b.rows() {
        for l in 0..b.cols() {
            if mask.is_oob(i, l) {
                let u = y[i] - b.get(i, l);
                s += u * u;
                c += 1;
            }
        }
    }
    if c == 0 {
        0.0
    } else {
        math::sqrt(s / c as f64)
    }
}
