//! L1-penalized least squares by cyclic coordinate descent on standardized
//! columns. The objective is `(1/2n)‖y - w0 - Zβ‖² + λ‖β‖₁` with the
//! intercept unpenalized.

use alloc::vec;
use alloc::vec::Vec;

use super::standardize::{center, Standardizer};
use super::{Hyperparams, MethodTag, WeightModel};
use crate::error::{check_len, invalid, Error, Result};
use crate::math;
use crate::matrix::Matrix;

const TOLERANCE: f64 = 1e-7;
const MAX_SWEEPS: usize = 10_000;

#[inline]
fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

struct Problem {
    std: Standardizer,
    z: Vec<Vec<f64>>,
    y_mean: f64,
    residual: Vec<f64>,
    beta: Vec<f64>,
    gram: Gram,
}

/// Inner products `⟨z_a, z_b⟩/n` among every column that has ever been
/// active, grown as columns join.
#[derive(Default)]
struct Gram {
    cols: Vec<usize>,
    slot: Vec<Option<usize>>,
    rows: Vec<Vec<f64>>,
}

impl Gram {
    fn insert(&mut self, z: &[Vec<f64>], j: usize) -> usize {
        if let Some(a) = self.slot[j] {
            return a;
        }
        let n = z[j].len() as f64;
        let dots: Vec<f64> = self.cols.iter().map(|&k| math::dot(&z[j], &z[k]) / n).collect();
        for (row, d) in self.rows.iter_mut().zip(&dots) {
            row.push(*d);
        }
        let mut row = dots;
        row.push(math::dot(&z[j], &z[j]) / n);
        self.rows.push(row);
        self.cols.push(j);
        self.slot[j] = Some(self.cols.len() - 1);
        self.cols.len() - 1
    }
}

impl Problem {
    fn new(b: &Matrix, y: &[f64]) -> Result<Self> {
        check_len(b.rows(), y.len())?;
        if !b.is_finite() || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("lasso input"));
        }
        if b.rows() == 0 {
            return Err(invalid("lasso needs at least one row"));
        }
        let std = Standardizer::fit(b);
        let z = std.active_columns(b);
        let (residual, y_mean) = center(y);
        let beta = vec![0.0; z.len()];
        let gram = Gram { slot: vec![None; z.len()], ..Gram::default() };
        Ok(Problem { std, z, y_mean, residual, beta, gram })
    }

    /// One pass over every column; returns the largest coefficient change.
    fn full_sweep(&mut self, lambda: f64) -> f64 {
        let n = self.residual.len() as f64;
        let mut max_change: f64 = 0.0;
        for j in 0..self.z.len() {
            let col = &self.z[j];
            let old = self.beta[j];
            let rho = math::dot(col, &self.residual) / n + old;
            let new = soft_threshold(rho, lambda);
            if new != old {
                let d = new - old;
                for (r, c) in self.residual.iter_mut().zip(col) {
                    *r -= d * c;
                }
                self.beta[j] = new;
                max_change = max_change.max(math::abs(d));
            }
        }
        max_change
    }

    /// Sweeps restricted to `active` until converged, tracking the gradient
    /// through the Gram block instead of the residual; the residual is
    /// brought up to date once at the end. Returns the sweeps used.
    fn active_sweeps(&mut self, active: &[usize], lambda: f64, budget: usize) -> usize {
        let slots: Vec<usize> = active.iter().map(|&j| self.gram.insert(&self.z, j)).collect();
        let m = active.len();
        let mut block = Vec::with_capacity(m * m);
        for &a in &slots {
            block.extend(slots.iter().map(|&b| self.gram.rows[a][b]));
        }
        let n = self.residual.len() as f64;
        let mut grad: Vec<f64> = active.iter().map(|&j| math::dot(&self.z[j], &self.residual) / n).collect();
        let start: Vec<f64> = active.iter().map(|&j| self.beta[j]).collect();
        let mut sweeps = 0;
        while sweeps < budget {
            sweeps += 1;
            let mut max_change: f64 = 0.0;
            for (a, &j) in active.iter().enumerate() {
                let old = self.beta[j];
                let new = soft_threshold(grad[a] + old, lambda);
                if new != old {
                    let d = new - old;
                    for (g, c) in grad.iter_mut().zip(&block[a * m..(a + 1) * m]) {
                        *g -= d * c;
                    }
                    self.beta[j] = new;
                    max_change = max_change.max(math::abs(d));
                }
            }
            if max_change < TOLERANCE {
                break;
            }
        }
        for (&j, s) in active.iter().zip(&start) {
            let d = self.beta[j] - s;
            if d != 0.0 {
                for (r, c) in self.residual.iter_mut().zip(&self.z[j]) {
                    *r -= d * c;
                }
            }
        }
        sweeps
    }

    /// Full sweeps alternate with sweeps restricted to the current nonzero
    /// set until a full sweep moves nothing by more than the tolerance.
    fn solve(&mut self, lambda: f64) {
        let q = self.z.len();
        let mut sweeps = 0;
        while sweeps < MAX_SWEEPS {
            sweeps += 1;
            if self.full_sweep(lambda) < TOLERANCE {
                break;
            }
            let active: Vec<usize> = (0..q).filter(|&j| self.beta[j] != 0.0).collect();
            sweeps += self.active_sweeps(&active, lambda, MAX_SWEEPS - sweeps);
        }
    }

    fn model(&self, lambda: f64) -> WeightModel {
        WeightModel::from_standardized(&self.std, &self.beta, self.y_mean, MethodTag::Lasso, Hyperparams::Lambda(lambda))
    }
}

/// Smallest `λ` at which every coefficient is zero:
/// `max_q |⟨z_q, y - ȳ⟩| / n`.
pub fn lambda_max(b: &Matrix, y: &[f64]) -> Result<f64> {
    let p = Problem::new(b, y)?;
    let n = b.rows() as f64;
    Ok(p.z.iter().map(|c| math::abs(math::dot(c, &p.residual)) / n).fold(0.0, f64::max))
}

pub fn fit_lasso(b: &Matrix, y: &[f64], lambda: f64) -> Result<WeightModel> {
    Ok(lasso_path(b, y, &[lambda])?.pop().expect("one model per lambda"))
}

/// Fits each `λ` in order, warm-starting from the previous solution.
pub fn lasso_path(b: &Matrix, y: &[f64], lambdas: &[f64]) -> Result<Vec<WeightModel>> {
    if let Some(l) = lambdas.iter().find(|l| !(**l >= 0.0) || !l.is_finite()) {
        return Err(invalid(alloc::format!("lambda must be finite and >= 0, got {l}")));
    }
    let mut p = Problem::new(b, y)?;
    Ok(lambdas
        .iter()
        .map(|&l| {
            p.solve(l);
            p.model(l)
        })
        .collect())
}
