//! Non-negative least squares without intercept.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use super::{Hyperparams, MethodTag, WeightModel};
use crate::error::{check_len, Result};
use crate::math;
use crate::matrix::Matrix;

const MAX_SWEEPS: usize = 100_000;

/// Largest violation of the optimality conditions of
/// `min ½‖y - Bw‖² s.t. w ≥ 0`, with gradient `g = Bᵀ(Bw - y)`:
/// `|g_q|` where `w_q > 0`, `max(0, -g_q)` where `w_q = 0`.
pub fn kkt_violation(b: &Matrix, y: &[f64], w: &[f64]) -> f64 {
    let cols = b.to_columns();
    let fit: Vec<f64> = b.iter_rows().map(|r| math::dot(r, w)).collect();
    let resid: Vec<f64> = fit.iter().zip(y).map(|(f, v)| f - v).collect();
    cols.iter()
        .zip(w)
        .map(|(c, &wq)| {
            let g = math::dot(c, &resid);
            if wq > 0.0 {
                math::abs(g)
            } else {
                (-g).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

/// Projected coordinate descent (each coordinate minimized then clamped at
/// 0), followed by an exact least-squares solve on the detected support
/// when that solve stays feasible.
pub fn nnls(b: &Matrix, y: &[f64]) -> Result<Vec<f64>> {
    check_len(b.rows(), y.len())?;
    b.require_finite("learner matrix")?;
    let cols = b.to_columns();
    let norms: Vec<f64> = cols.iter().map(|c| math::dot(c, c)).collect();
    let mut w = vec![0.0; cols.len()];
    let mut resid = y.to_vec();
    let scale = norms.iter().map(|v| math::sqrt(*v)).fold(0.0, f64::max).max(1e-300);
    for _ in 0..MAX_SWEEPS {
        let mut max_change: f64 = 0.0;
        for (q, c) in cols.iter().enumerate() {
            if norms[q] == 0.0 {
                continue;
            }
            let new = (w[q] + math::dot(c, &resid) / norms[q]).max(0.0);
            let d = new - w[q];
            if d != 0.0 {
                for (r, ci) in resid.iter_mut().zip(c) {
                    *r -= d * ci;
                }
                w[q] = new;
                max_change = max_change.max(math::abs(d) * math::sqrt(norms[q]));
            }
        }
        if max_change <= 1e-13 * scale {
            break;
        }
    }
    polish(&cols, y, &mut w, b);
    Ok(w)
}

fn polish(cols: &[Vec<f64>], y: &[f64], w: &mut [f64], b: &Matrix) {
    let support: Vec<usize> = (0..w.len()).filter(|&q| w[q] > 0.0).collect();
    if support.is_empty() {
        return;
    }
    let k = support.len();
    let gram = DMatrix::from_fn(k, k, |i, j| math::dot(&cols[support[i]], &cols[support[j]]));
    let rhs = DVector::from_fn(k, |i, _| math::dot(&cols[support[i]], y));
    let Some(sol) = gram.lu().solve(&rhs) else { return };
    if sol.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return;
    }
    let mut candidate = vec![0.0; w.len()];
    for (i, &q) in support.iter().enumerate() {
        candidate[q] = sol[i];
    }
    if kkt_violation(b, y, &candidate) <= kkt_violation(b, y, w) {
        w.copy_from_slice(&candidate);
    }
}

pub fn fit_stacking(b: &Matrix, y: &[f64]) -> Result<WeightModel> {
    let weights = nnls(b, y)?;
    let q = weights.len();
    Ok(WeightModel {
        intercept: 0.0,
        weights,
        column_means: vec![0.0; q],
        column_scales: vec![1.0; q],
        method: MethodTag::Stack,
        hyperparams: Hyperparams::None,
    })
}
