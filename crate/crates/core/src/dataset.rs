//! Data model, synthetic generators and deterministic splitting.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, invalid, Error, Result};
use crate::math;
use crate::matrix::Matrix;
use crate::rng::{self, streams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    features: Matrix,
    target: Vec<f64>,
    column_names: Vec<String>,
}

impl Dataset {
    pub fn new(features: Matrix, target: Vec<f64>, column_names: Vec<String>) -> Result<Self> {
        check_len(features.rows(), target.len())?;
        check_len(features.cols(), column_names.len())?;
        features.require_finite("features")?;
        if target.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("target"));
        }
        Ok(Dataset { features, target, column_names })
    }

    /// Dataset with generated column names `x0, x1, ...`.
    pub fn unnamed(features: Matrix, target: Vec<f64>) -> Result<Self> {
        let names = (0..features.cols()).map(|j| format!("x{j}")).collect();
        Self::new(features, target, names)
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn n(&self) -> usize {
        self.target.len()
    }

    pub fn p(&self) -> usize {
        self.features.cols()
    }

    pub fn select_rows(&self, idx: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select_rows(idx),
            target: idx.iter().map(|&i| self.target[i]).collect(),
            column_names: self.column_names.clone(),
        }
    }
}

/// Number of inputs in the sparse linear simulation.
pub const LINEAR_SPARSE_P: usize = 100;
/// Number of rows in the sparse linear simulation.
pub const LINEAR_SPARSE_N: usize = 150;
/// Noise variance of the sparse linear simulation.
pub const LINEAR_SPARSE_NOISE_VAR: f64 = 0.3;
/// Default row count of the Friedman–Popescu simulation.
pub const FRIEDMAN_POPESCU_N: usize = 1000;
pub const FRIEDMAN_POPESCU_P: usize = 100;

/// 150×100 uniform inputs, 85% of uniform coefficients zeroed, noise with
/// variance 0.3. Returns the dataset and the coefficient vector.
pub fn gen_linear_sparse(seed: u64) -> (Dataset, Vec<f64>) {
    gen_linear_sparse_with(seed, LINEAR_SPARSE_NOISE_VAR)
}

/// [`gen_linear_sparse`] with an explicit noise variance (0 gives `y = Xβ`).
pub fn gen_linear_sparse_with(seed: u64, noise_var: f64) -> (Dataset, Vec<f64>) {
    let (n, p) = (LINEAR_SPARSE_N, LINEAR_SPARSE_P);
    let mut rng = rng::stream(seed, streams::LINEAR_SPARSE);
    let x = Matrix::from_fn(n, p, |_, _| rng.random::<f64>());
    let mut beta: Vec<f64> = (0..p).map(|_| rng.random::<f64>()).collect();
    let mut order: Vec<usize> = (0..p).collect();
    order.shuffle(&mut rng);
    let zeroed = p - (p * 15) / 100;
    for &j in &order[..zeroed] {
        beta[j] = 0.0;
    }
    let sd = math::sqrt(noise_var);
    let y = (0..n)
        .map(|i| {
            let e: f64 = StandardNormal.sample(&mut rng);
            math::dot(x.row(i), &beta) + sd * e
        })
        .collect();
    (Dataset::unnamed(x, y).expect("generator shapes are consistent"), beta)
}

/// Noiseless response of the Friedman–Popescu simulation for one input row
/// (at least 35 entries).
pub fn friedman_popescu_mean(x: &[f64]) -> f64 {
    let product: f64 = x[..5].iter().map(|v| math::exp(-2.0 * v * v)).product();
    10.0 * product + x[5..35].iter().sum::<f64>()
}

/// n×100 uniform inputs with `y = 10 ∏_{j<5} exp(-2x_j²) + Σ_{5≤j<35} x_j + e`,
/// `e ~ N(0, 1)`.
pub fn gen_friedman_popescu(seed: u64, n: usize) -> Dataset {
    gen_friedman_popescu_with(seed, n, 1.0).0
}

/// Returns the dataset and the noiseless responses.
pub fn gen_friedman_popescu_with(seed: u64, n: usize, noise_sd: f64) -> (Dataset, Vec<f64>) {
    let p = FRIEDMAN_POPESCU_P;
    let mut rng = rng::stream(seed, streams::FRIEDMAN_POPESCU);
    let x = Matrix::from_fn(n, p, |_, _| rng.random::<f64>());
    let clean: Vec<f64> = x.iter_rows().map(friedman_popescu_mean).collect();
    let y = clean
        .iter()
        .map(|m| {
            let e: f64 = StandardNormal.sample(&mut rng);
            m + noise_sd * e
        })
        .collect();
    (Dataset::unnamed(x, y).expect("generator shapes are consistent"), clean)
}

/// Balanced k-fold assignment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    fold_of: Vec<usize>,
    k: usize,
    seed: u64,
}

impl FoldAssignment {
    pub fn fold_of(&self) -> &[usize] {
        &self.fold_of
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n(&self) -> usize {
        self.fold_of.len()
    }

    /// Rows in fold `f`, ascending.
    pub fn held_out(&self, f: usize) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.fold_of[i] == f).collect()
    }

    /// Rows outside fold `f`, ascending.
    pub fn training(&self, f: usize) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.fold_of[i] != f).collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.fold_of {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Shuffles `0..n` with the seed and deals rows round-robin into `k` folds,
/// so the first `n mod k` folds get one extra row.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 || k > n {
        return Err(invalid(format!("k-fold needs 2 <= k <= n, got k={k}, n={n}")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng::stream(seed, streams::KFOLD));
    let mut fold_of = vec![0; n];
    for (pos, &row) in perm.iter().enumerate() {
        fold_of[row] = pos % k;
    }
    Ok(FoldAssignment { fold_of, k, seed })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    /// Two-to-one train/test split.
    pub fn two_to_one(seed: u64) -> Self {
        SplitSpec { train_fraction: 2.0 / 3.0, seed }
    }

    /// `(train, test)` row indices, each ascending.
    pub fn indices(&self, n: usize) -> Result<(Vec<usize>, Vec<usize>)> {
        let f = self.train_fraction;
        if !(f > 0.0 && f < 1.0) {
            return Err(invalid(format!("train fraction must be in (0,1), got {f}")));
        }
        let n_train = math::round(n as f64 * f) as usize;
        if n_train == 0 || n_train >= n {
            return Err(invalid(format!("split of {n} rows at {f} leaves an empty side")));
        }
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng::stream(self.seed, streams::TRAIN_TEST));
        let mut train = perm[..n_train].to_vec();
        let mut test = perm[n_train..].to_vec();
        train.sort_unstable();
        test.sort_unstable();
        Ok((train, test))
    }
}

pub fn train_test_split(d: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    let (train, test) = spec.indices(d.n())?;
    Ok((d.select_rows(&train), d.select_rows(&test)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn construct_small() {
        let x = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]).unwrap();
        let d = Dataset::unnamed(x, vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!((d.n(), d.p()), (3, 2));
        assert_eq!(d.column_names(), &["x0", "x1"]);
    }

    #[test]
    fn length_mismatch_rejected() {
        let x = Matrix::zeros(3, 2);
        assert!(Dataset::unnamed(x, vec![1.0]).is_err());
    }

    #[test]
    fn linear_sparse_has_fifteen_nonzero() {
        for seed in 0..20 {
            let (d, beta) = gen_linear_sparse(seed);
            assert_eq!((d.n(), d.p()), (150, 100));
            assert_eq!(beta.iter().filter(|b| **b != 0.0).count(), 15);
        }
    }

    #[test]
    fn linear_sparse_deterministic() {
        assert_eq!(gen_linear_sparse(7), gen_linear_sparse(7));
        assert_ne!(gen_linear_sparse(7).0, gen_linear_sparse(8).0);
    }

    #[test]
    fn linear_sparse_zero_noise_is_exact() {
        let (d, beta) = gen_linear_sparse_with(3, 0.0);
        for i in 0..d.n() {
            assert_eq!(d.target()[i], math::dot(d.features().row(i), &beta));
        }
    }

    #[test]
    fn linear_sparse_signal_ratio_about_two() {
        let seeds = 60;
        let mut total = 0.0;
        for seed in 0..seeds {
            let (d, beta) = gen_linear_sparse_with(seed, 0.0);
            let _ = beta;
            let signal = d.target();
            let m = math::mean(signal);
            let var = signal.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (signal.len() - 1) as f64;
            total += var / LINEAR_SPARSE_NOISE_VAR;
        }
        let ratio = total / seeds as f64;
        assert!((1.2..=3.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn friedman_formula_values() {
        let mut x = vec![0.0; 100];
        assert_eq!(friedman_popescu_mean(&x), 10.0);
        x.iter_mut().for_each(|v| *v = 1.0);
        let expected = 10.0 * libm::exp(-10.0) + 30.0;
        assert!((friedman_popescu_mean(&x) - expected).abs() < 1e-12);
        assert!((expected - 30.000454).abs() < 1e-6);
    }

    #[test]
    fn friedman_zero_noise_and_shape() {
        let (d, clean) = gen_friedman_popescu_with(1, 30, 0.0);
        assert_eq!((d.n(), d.p()), (30, 100));
        assert_eq!(d.target(), clean.as_slice());
        assert_eq!(gen_friedman_popescu(4, FRIEDMAN_POPESCU_N).n(), 1000);
    }

    #[test]
    fn kfold_shapes() {
        assert!(kfold_split(10, 10, 0).unwrap().fold_sizes().iter().all(|&s| s == 1));
        let mut s = kfold_split(11, 10, 0).unwrap().fold_sizes();
        s.sort_unstable();
        assert_eq!(s, [1, 1, 1, 1, 1, 1, 1, 1, 1, 2]);
        let s = kfold_split(506, 10, 0).unwrap().fold_sizes();
        assert_eq!(s.iter().filter(|&&v| v == 51).count(), 6);
        assert_eq!(s.iter().filter(|&&v| v == 50).count(), 4);
        assert!(kfold_split(3, 4, 0).is_err());
        assert!(kfold_split(3, 1, 0).is_err());
    }

    #[test]
    fn split_sizes() {
        let sizes = |n, f| {
            let (a, b) = SplitSpec { train_fraction: f, seed: 1 }.indices(n).unwrap();
            (a.len(), b.len())
        };
        assert_eq!(sizes(150, 2.0 / 3.0), (100, 50));
        assert_eq!(sizes(1000, 2.0 / 3.0), (667, 333));
        assert_eq!(sizes(2, 0.5), (1, 1));
        assert!(SplitSpec { train_fraction: 0.1, seed: 1 }.indices(2).is_err());
        assert!(SplitSpec { train_fraction: 1.0, seed: 1 }.indices(10).is_err());
    }

    proptest! {
        #[test]
        fn kfold_partitions_rows(n in 2usize..200, k in 2usize..12, seed in any::<u64>()) {
            prop_assume!(k <= n);
            let folds = kfold_split(n, k, seed).unwrap();
            let sizes = folds.fold_sizes();
            prop_assert!(sizes.iter().all(|&s| s > 0));
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            let mut all: Vec<usize> = (0..k).flat_map(|f| folds.held_out(f)).collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            prop_assert_eq!(folds, kfold_split(n, k, seed).unwrap());
        }

        #[test]
        fn split_partitions_rows(n in 2usize..300, f in 0.05f64..0.95, seed in any::<u64>()) {
            let spec = SplitSpec { train_fraction: f, seed };
            if let Ok((a, b)) = spec.indices(n) {
                prop_assert_eq!(a.len(), libm::round(n as f64 * f) as usize);
                let mut all = [a, b].concat();
                all.sort_unstable();
                prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            }
        }
    }
}
