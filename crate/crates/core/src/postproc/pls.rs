//! Partial least squares for a single response: sequential extraction of
//! directions proportional to `Bᵀy` on deflated data.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::standardize::{center, Standardizer};
use super::{Hyperparams, MethodTag, WeightModel};
use crate::error::{check_len, invalid, Result};
use crate::math;
use crate::matrix::Matrix;

/// Standardized-space coefficients after each extracted component. Shared
/// by PLS and PCR.
#[derive(Debug, Clone)]
pub struct ComponentPath {
    std: Standardizer,
    y_mean: f64,
    /// `coefs[k-1]` holds the coefficients of the `k`-component fit.
    coefs: Vec<Vec<f64>>,
    method: MethodTag,
}

impl ComponentPath {
    pub(crate) fn new(std: Standardizer, y_mean: f64, coefs: Vec<Vec<f64>>, method: MethodTag) -> Self {
        ComponentPath { std, y_mean, coefs, method }
    }

    /// Components actually extracted (can stop short of the request when
    /// the data have lower rank or `y` is fully explained).
    pub fn extracted(&self) -> usize {
        self.coefs.len()
    }

    /// Model with `k` components; `k` beyond the extracted count uses all.
    pub fn model(&self, k: usize) -> WeightModel {
        let beta = match k.min(self.coefs.len()) {
            0 => vec![0.0; self.std.active().len()],
            m => self.coefs[m - 1].clone(),
        };
        WeightModel::from_standardized(&self.std, &beta, self.y_mean, self.method, Hyperparams::Components(k))
    }
}

pub(crate) fn check_components(n: usize, q: usize, k: usize) -> Result<()> {
    let hi = (n.saturating_sub(1)).min(q);
    if k == 0 || k > hi {
        return Err(invalid(format!("component count {k} outside 1..={hi}")));
    }
    Ok(())
}

/// PLS fits for every component count up to `max_components`.
pub fn pls_path(b: &Matrix, y: &[f64], max_components: usize) -> Result<ComponentPath> {
    check_len(b.rows(), y.len())?;
    check_components(b.rows(), b.cols(), max_components)?;
    b.require_finite("learner matrix")?;
    let std = Standardizer::fit(b);
    std.require_active()?;
    let mut z = std.active_columns(b);
    let (mut yc, y_mean) = center(y);
    let qa = z.len();
    let n = yc.len();

    let mut loadings: Vec<Vec<f64>> = Vec::new();
    let mut rotations: Vec<Vec<f64>> = Vec::new();
    let mut beta = vec![0.0; qa];
    let mut coefs = Vec::new();
    let mut first_norm = None;
    let mut t = vec![0.0; n];
    for _ in 0..max_components {
        let mut w: Vec<f64> = z.iter().map(|c| math::dot(c, &yc)).collect();
        let norm = math::sqrt(math::dot(&w, &w));
        let reference = *first_norm.get_or_insert(norm);
        if !(norm > 1e-10 * reference) || norm == 0.0 {
            break;
        }
        w.iter_mut().for_each(|v| *v /= norm);
        t.iter_mut().for_each(|v| *v = 0.0);
        for (c, &wj) in z.iter().zip(&w) {
            for (ti, ci) in t.iter_mut().zip(c) {
                *ti += wj * ci;
            }
        }
        let tt = math::dot(&t, &t);
        if !(tt > 1e-14 * n as f64) {
            break;
        }
        let p: Vec<f64> = z.iter().map(|c| math::dot(c, &t) / tt).collect();
        let q = math::dot(&yc, &t) / tt;
        for (c, &pj) in z.iter_mut().zip(&p) {
            for (ci, ti) in c.iter_mut().zip(&t) {
                *ci -= ti * pj;
            }
        }
        for (yi, ti) in yc.iter_mut().zip(&t) {
            *yi -= q * ti;
        }
        // rotation r_a = w_a - Σ_b (p_b·w_a) r_b maps standardized inputs to score a
        let mut r = w.clone();
        for (pb, rb) in loadings.iter().zip(&rotations) {
            let c = math::dot(pb, &w);
            for (ri, rbi) in r.iter_mut().zip(rb) {
                *ri -= c * rbi;
            }
        }
        for (bi, ri) in beta.iter_mut().zip(&r) {
            *bi += q * ri;
        }
        coefs.push(beta.clone());
        loadings.push(p);
        rotations.push(r);
    }
    Ok(ComponentPath::new(std, y_mean, coefs, MethodTag::Pls))
}

pub fn fit_pls(b: &Matrix, y: &[f64], n_components: usize) -> Result<WeightModel> {
    Ok(pls_path(b, y, n_components)?.model(n_components))
}
