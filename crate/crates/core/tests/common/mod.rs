//! Independent reference solvers, written without any of the crate's
//! numerical code.
#![allow(dead_code)]

use isle_core::Matrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_matrix(rng: &mut ChaCha8Rng, n: usize, q: usize) -> Matrix {
    Matrix::from_fn(n, q, |_, _| rng.sample(StandardNormal))
}

pub fn normal_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Gaussian elimination with partial pivoting.
pub fn solve(mut a: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Vec<f64> {
    let m = rhs.len();
    for c in 0..m {
        let piv = (c..m).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, piv);
        rhs.swap(c, piv);
        let d = a[c][c];
        assert!(d.abs() > 1e-14, "singular system");
        for r in c + 1..m {
            let f = a[r][c] / d;
            for k in c..m {
                a[r][k] -= f * a[c][k];
            }
            rhs[r] -= f * rhs[c];
        }
    }
    let mut x = vec![0.0; m];
    for r in (0..m).rev() {
        let s: f64 = (r + 1..m).map(|k| a[r][k] * x[k]).sum();
        x[r] = (rhs[r] - s) / a[r][r];
    }
    x
}

/// Least squares with intercept via the normal equations of the design
/// `[1 | B]`. Returns `(intercept, weights)`.
pub fn ols(b: &Matrix, y: &[f64]) -> (f64, Vec<f64>) {
    let (n, q) = (b.rows(), b.cols());
    let row = |i: usize| std::iter::once(1.0).chain(b.row(i).iter().copied()).collect::<Vec<f64>>();
    let mut a = vec![vec![0.0; q + 1]; q + 1];
    let mut rhs = vec![0.0; q + 1];
    for i in 0..n {
        let r = row(i);
        for j in 0..=q {
            rhs[j] += r[j] * y[i];
            for k in 0..=q {
                a[j][k] += r[j] * r[k];
            }
        }
    }
    let x = solve(a, rhs);
    (x[0], x[1..].to_vec())
}

/// Least squares without intercept restricted to the columns in `cols`.
pub fn ls_subset(b: &Matrix, y: &[f64], cols: &[usize]) -> Vec<f64> {
    let m = cols.len();
    let mut a = vec![vec![0.0; m]; m];
    let mut rhs = vec![0.0; m];
    for i in 0..b.rows() {
        for (j, &cj) in cols.iter().enumerate() {
            rhs[j] += b.get(i, cj) * y[i];
            for (k, &ck) in cols.iter().enumerate() {
                a[j][k] += b.get(i, cj) * b.get(i, ck);
            }
        }
    }
    solve(a, rhs)
}

pub fn sse_no_intercept(b: &Matrix, y: &[f64], w: &[f64]) -> f64 {
    (0..b.rows())
        .map(|i| {
            let f: f64 = b.row(i).iter().zip(w).map(|(a, c)| a * c).sum();
            (y[i] - f).powi(2)
        })
        .sum()
}

/// Non-negative least squares by enumerating every support set: each
/// subset's unconstrained solution is kept when non-negative, and the
/// feasible candidate of least squared error wins.
pub fn nnls_enumerate(b: &Matrix, y: &[f64]) -> Vec<f64> {
    let q = b.cols();
    let mut best = (sse_no_intercept(b, y, &vec![0.0; q]), vec![0.0; q]);
    for mask in 1u32..(1 << q) {
        let cols: Vec<usize> = (0..q).filter(|j| mask & (1 << j) != 0).collect();
        let sol = ls_subset(b, y, &cols);
        if sol.iter().any(|&v| v < 0.0) {
            continue;
        }
        let mut w = vec![0.0; q];
        for (&c, v) in cols.iter().zip(sol) {
            w[c] = v;
        }
        let e = sse_no_intercept(b, y, &w);
        if e < best.0 {
            best = (e, w);
        }
    }
    best.1
}

pub fn soft_threshold(v: f64, t: f64) -> f64 {
    v.signum() * (v.abs() - t).max(0.0)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}
