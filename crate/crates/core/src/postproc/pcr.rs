//! Principal component regression on standardized learner columns.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, SymmetricEigen};

use super::pls::{check_components, ComponentPath};
use super::standardize::{center, Standardizer};
use super::{MethodTag, WeightModel};
use crate::error::{check_len, Result};
use crate::math;
use crate::matrix::Matrix;

/// PCR fits for every component count up to `max_components`. Directions
/// come from the eigendecomposition of `ZᵀZ`, or of the Gram matrix `ZZᵀ`
/// when there are more columns than rows.
pub fn pcr_path(b: &Matrix, y: &[f64], max_components: usize) -> Result<ComponentPath> {
    check_len(b.rows(), y.len())?;
    check_components(b.rows(), b.cols(), max_components)?;
    b.require_finite("learner matrix")?;
    let std = Standardizer::fit(b);
    std.require_active()?;
    let z = std.active_columns(b);
    let (yc, y_mean) = center(y);
    let (n, qa) = (yc.len(), z.len());

    let (values, directions) = if qa <= n {
        let c = DMatrix::from_fn(qa, qa, |i, j| math::dot(&z[i], &z[j]));
        let eig = SymmetricEigen::new(c);
        let dirs: Vec<Vec<f64>> = (0..qa).map(|a| eig.eigenvectors.column(a).iter().copied().collect()).collect();
        (eig.eigenvalues.iter().copied().collect::<Vec<f64>>(), dirs)
    } else {
        let g = DMatrix::from_fn(n, n, |i, j| z.iter().map(|c| c[i] * c[j]).sum::<f64>());
        let eig = SymmetricEigen::new(g);
        let values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        let dirs = (0..n)
            .map(|a| {
                let u = eig.eigenvectors.column(a);
                let s = math::sqrt(values[a].max(0.0));
                z.iter().map(|c| if s > 0.0 { c.iter().zip(u.iter()).map(|(x, v)| x * v).sum::<f64>() / s } else { 0.0 }).collect()
            })
            .collect();
        (values, dirs)
    };

    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let top = values[order[0]].max(0.0);
    let mut beta = vec![0.0; qa];
    let mut coefs = Vec::new();
    for &a in order.iter().take(max_components) {
        if !(values[a] > 1e-10 * top) {
            break;
        }
        let v = &directions[a];
        let mut score = vec![0.0; n];
        for (c, &vj) in z.iter().zip(v) {
            for (s, ci) in score.iter_mut().zip(c) {
                *s += vj * ci;
            }
        }
        let gamma = math::dot(&score, &yc) / math::dot(&score, &score);
        for (bi, vi) in beta.iter_mut().zip(v) {
            *bi += gamma * vi;
        }
        coefs.push(beta.clone());
    }
    Ok(ComponentPath::new(std, y_mean, coefs, MethodTag::Pcr))
}

pub fn fit_pcr(b: &Matrix, y: &[f64], n_components: usize) -> Result<WeightModel> {
    Ok(pcr_path(b, y, n_components)?.model(n_components))
}
