//! Nadaraya–Watson smoothing in the space of learner outputs.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::standardize::Standardizer;
use super::Kernel;
use crate::error::{check_len, invalid, Error, Result};
use crate::matrix::Matrix;

/// Training learner outputs (standardized per column), targets and
/// bandwidth. Squared distances are divided by the number of columns so the
/// bandwidth does not depend on ensemble size:
/// `K_h(u) = k(‖u‖² / (Q h²))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSmoother {
    standardizer: Standardizer,
    train: Matrix,
    targets: Vec<f64>,
    bandwidth: f64,
    kernel: Kernel,
}

pub fn fit_nw_smoother(b: &Matrix, y: &[f64], h: f64, kernel: Kernel) -> Result<KernelSmoother> {
    check_len(b.rows(), y.len())?;
    if b.rows() == 0 {
        return Err(invalid("smoother needs at least one training row"));
    }
    if b.cols() == 0 {
        return Err(Error::Degenerate("smoother needs at least one learner column".into()));
    }
    check_bandwidth(h)?;
    b.require_finite("learner matrix")?;
    let standardizer = Standardizer::fit(b);
    let mut train = Matrix::zeros(b.rows(), b.cols());
    for i in 0..b.rows() {
        standardizer.transform_row(b.row(i), train.row_mut(i));
    }
    Ok(KernelSmoother { standardizer, train, targets: y.to_vec(), bandwidth: h, kernel })
}

fn check_bandwidth(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() || h == f64::INFINITY {
        Ok(())
    } else {
        Err(invalid(alloc::format!("bandwidth must be > 0, got {h}")))
    }
}

impl KernelSmoother {
    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn standardizer(&self) -> &Standardizer {
        &self.standardizer
    }

    pub fn train_matrix(&self) -> &Matrix {
        &self.train
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn with_bandwidth(&self, h: f64) -> Result<Self> {
        check_bandwidth(h)?;
        Ok(KernelSmoother { bandwidth: h, ..self.clone() })
    }

    /// `‖z_i - z(b_row)‖² / Q` for every training row.
    pub fn scaled_sq_distances(&self, b_row: &[f64]) -> Result<Vec<f64>> {
        check_len(self.train.cols(), b_row.len())?;
        let mut z = alloc::vec![0.0; b_row.len()];
        self.standardizer.transform_row(b_row, &mut z);
        let q = self.train.cols() as f64;
        Ok(self
            .train
            .iter_rows()
            .map(|t| t.iter().zip(&z).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / q)
            .collect())
    }

    pub fn predict(&self, b_row: &[f64]) -> Result<f64> {
        let d = self.scaled_sq_distances(b_row)?;
        Ok(self.predict_from_distances(&d, self.bandwidth))
    }

    /// Kernel-weighted mean of the training targets. Gaussian weights are
    /// taken relative to the nearest row, which leaves the ratio unchanged
    /// and keeps at least one weight at 1; when every weight still vanishes
    /// the nearest row's target is returned.
    pub fn predict_from_distances(&self, d: &[f64], h: f64) -> f64 {
        let nearest = d
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |best, (i, &v)| if v < best.1 { (i, v) } else { best });
        let shift = match self.kernel {
            Kernel::Gaussian => nearest.1,
            Kernel::Epanechnikov => 0.0,
        };
        let inv_h2 = 1.0 / (h * h);
        let (mut num, mut den) = (0.0, 0.0);
        for (di, yi) in d.iter().zip(&self.targets) {
            let w = self.kernel.weight((di - shift) * inv_h2);
            num += w * yi;
            den += w;
        }
        if den > 0.0 && num.is_finite() {
            let lo = self.targets.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = self.targets.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (num / den).clamp(lo, hi)
        } else {
            self.targets[nearest.0]
        }
    }
}

/// Median of `sqrt(‖z_i - z_j‖² / Q)` over up to ~2000 distinct row pairs
/// chosen deterministically: the unit of the bandwidth grid.
pub fn median_pair_distance(s: &KernelSmoother) -> f64 {
    let n = s.train.rows();
    if n < 2 {
        return 1.0;
    }
    let q = s.train.cols() as f64;
    let total_pairs = n * (n - 1) / 2;
    let stride = (total_pairs / 2000).max(1);
    let mut ds = Vec::new();
    let mut idx = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            if idx % stride == 0 {
                let sq: f64 = s.train.row(i).iter().zip(s.train.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
                ds.push(libm::sqrt(sq / q));
            }
            idx += 1;
        }
    }
    ds.sort_by(f64::total_cmp);
    let m = ds[ds.len() / 2];
    if m > 0.0 {
        m
    } else {
        1.0
    }
}
