use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::matrix::Matrix;

/// Column means and population standard deviations. Columns whose spread is
/// negligible are inactive: scale 0, left out of every fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    means: Vec<f64>,
    scales: Vec<f64>,
    active: Vec<usize>,
}

impl Standardizer {
    pub fn fit(b: &Matrix) -> Self {
        let n = b.rows().max(1) as f64;
        let mut means = alloc::vec![0.0; b.cols()];
        for row in b.iter_rows() {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= n);
        let mut ss = alloc::vec![0.0; b.cols()];
        for row in b.iter_rows() {
            for ((s, v), m) in ss.iter_mut().zip(row).zip(&means) {
                *s += (v - m) * (v - m);
            }
        }
        let mut active = Vec::new();
        let scales = ss
            .iter()
            .zip(&means)
            .enumerate()
            .map(|(q, (s, m))| {
                let sd = math::sqrt(s / n);
                if sd > 1e-12 * (1.0 + math::abs(*m)) {
                    active.push(q);
                    sd
                } else {
                    0.0
                }
            })
            .collect();
        Standardizer { means, scales, active }
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub(crate) fn require_active(&self) -> Result<()> {
        if self.active.is_empty() {
            Err(Error::Degenerate("all learner columns have zero variance".into()))
        } else {
            Ok(())
        }
    }

    /// Standardized active columns of `b`, column-major.
    pub fn active_columns(&self, b: &Matrix) -> Vec<Vec<f64>> {
        let mut cols: Vec<Vec<f64>> = self.active.iter().map(|_| Vec::with_capacity(b.rows())).collect();
        for row in b.iter_rows() {
            for (c, &q) in cols.iter_mut().zip(&self.active) {
                c.push((row[q] - self.means[q]) / self.scales[q]);
            }
        }
        cols
    }

    /// One standardized row over all columns; inactive columns become 0.
    pub fn transform_row(&self, row: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for &q in &self.active {
            out[q] = (row[q] - self.means[q]) / self.scales[q];
        }
    }
}

/// Centered target and its mean.
pub(crate) fn center(y: &[f64]) -> (Vec<f64>, f64) {
    let m = math::mean(y);
    (y.iter().map(|v| v - m).collect(), m)
}
