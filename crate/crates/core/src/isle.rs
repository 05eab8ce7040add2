//! Ensemble generation: each tree is fit to the current residuals on a
//! resampled index set, scaled by a closed-form line search, and added to the
//! running fit with memory `nu`. `nu = 0` gives bagging / random forests,
//! `nu = 1` plain gradient boosting.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{check_len, invalid, Error, Result};
use crate::math;
use crate::matrix::Matrix;
use crate::rng::{self, streams, ChaCha8Rng};
use crate::tree::{fit_tree, RegressionTree, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SamplingMode {
    /// Draws with replacement.
    Bootstrap,
    /// Draws without replacement.
    Subsample,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sampling {
    pub mode: SamplingMode,
    /// Sample size as a fraction of `n`.
    pub fraction: f64,
}

impl Sampling {
    pub fn sample_size(&self, n: usize) -> usize {
        (math::round(self.fraction * n as f64) as usize).clamp(1, n.max(1))
    }

    pub fn draw<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<usize> {
        let m = self.sample_size(n);
        match self.mode {
            SamplingMode::Bootstrap => (0..m).map(|_| rng.random_range(0..n)).collect(),
            SamplingMode::Subsample => {
                let mut s = rand::seq::index::sample(rng, n, m).into_vec();
                s.sort_unstable();
                s
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsleConfig {
    pub n_trees: usize,
    /// Memory parameter in `[0, 1]`.
    pub memory: f64,
    pub sampling: Sampling,
    pub tree: TreeParams,
    pub seed: u64,
    /// Fail generation when some tree has no out-of-bag rows.
    pub require_oob: bool,
}

impl Default for IsleConfig {
    fn default() -> Self {
        IsleConfig {
            n_trees: 200,
            memory: 0.0,
            sampling: Sampling { mode: SamplingMode::Bootstrap, fraction: 1.0 },
            tree: TreeParams::default(),
            seed: 0,
            require_oob: true,
        }
    }
}

impl IsleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(invalid("ensemble needs at least one tree"));
        }
        if !(0.0..=1.0).contains(&self.memory) {
            return Err(invalid(format!("memory must be in [0,1], got {}", self.memory)));
        }
        let f = self.sampling.fraction;
        if !(f > 0.0 && f <= 1.0) {
            return Err(invalid(format!("sample fraction must be in (0,1], got {f}")));
        }
        self.tree.validate()
    }

    /// Generator of tree `j`.
    pub fn tree_rng(&self, j: usize) -> ChaCha8Rng {
        rng::stream(self.seed, streams::TREE_BASE + j as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    trees: Vec<RegressionTree>,
    coeffs: Vec<f64>,
    in_bag: Vec<Vec<usize>>,
    config: IsleConfig,
    n_train: usize,
}

/// One generated member: the fitted tree, its line-search coefficient and
/// the index multiset it was trained on.
#[derive(Debug, Clone, PartialEq)]
pub struct Member {
    pub tree: RegressionTree,
    pub coeff: f64,
    pub in_bag: Vec<usize>,
}

/// Closed-form squared-loss line search over the sample.
pub fn line_search(residuals: &[f64], outputs: &[f64], sample: &[usize]) -> f64 {
    let (num, den) = sample.iter().fold((0.0, 0.0), |(a, b), &i| {
        (a + residuals[i] * outputs[i], b + outputs[i] * outputs[i])
    });
    if den < 1e-12 {
        1.0
    } else {
        num / den
    }
}

/// Draws the sample for tree `j`, fits it to `residuals` and computes its
/// coefficient. The only source of randomness is `cfg.tree_rng(j)`, so
/// members can be generated in any order when `memory = 0`.
pub fn generate_member(train: &Dataset, residuals: &[f64], cfg: &IsleConfig, j: usize) -> Result<Member> {
    let n = train.n();
    let mut rng = cfg.tree_rng(j);
    let in_bag = cfg.sampling.draw(n, &mut rng);
    if cfg.require_oob && out_of_bag_rows(n, &in_bag).is_empty() {
        return Err(Error::Generation(format!("tree {j} has an empty out-of-bag set")));
    }
    let tree = fit_tree(train.features(), residuals, &in_bag, &cfg.tree, &mut rng)?;
    let outputs: Vec<f64> = train.features().iter_rows().map(|x| tree.predict(x)).collect();
    let coeff = line_search(residuals, &outputs, &in_bag);
    Ok(Member { tree, coeff, in_bag })
}

pub fn generate_ensemble(train: &Dataset, cfg: &IsleConfig) -> Result<Ensemble> {
    cfg.validate()?;
    if train.n() == 0 {
        return Err(invalid("training set is empty"));
    }
    let y = train.target();
    let mut fit = vec![0.0; train.n()];
    let mut residuals = y.to_vec();
    let mut members = Vec::with_capacity(cfg.n_trees);
    for j in 0..cfg.n_trees {
        let m = generate_member(train, &residuals, cfg, j)?;
        if cfg.memory > 0.0 {
            let step = cfg.memory * m.coeff;
            for (i, x) in train.features().iter_rows().enumerate() {
                fit[i] += step * m.tree.predict(x);
                residuals[i] = y[i] - fit[i];
            }
        }
        members.push(m);
    }
    Ensemble::from_members(members, *cfg, train.n())
}

/// Rows of `0..n` that do not occur in `in_bag`.
pub fn out_of_bag_rows(n: usize, in_bag: &[usize]) -> Vec<usize> {
    let mut seen = vec![false; n];
    for &i in in_bag {
        seen[i] = true;
    }
    (0..n).filter(|&i| !seen[i]).collect()
}

impl Ensemble {
    pub fn from_members(members: Vec<Member>, config: IsleConfig, n_train: usize) -> Result<Self> {
        let mut trees = Vec::with_capacity(members.len());
        let mut coeffs = Vec::with_capacity(members.len());
        let mut in_bag = Vec::with_capacity(members.len());
        for m in members {
            trees.push(m.tree);
            coeffs.push(m.coeff);
            in_bag.push(m.in_bag);
        }
        Self::from_parts(trees, coeffs, in_bag, config, n_train)
    }

    pub fn from_parts(
        trees: Vec<RegressionTree>,
        coeffs: Vec<f64>,
        in_bag: Vec<Vec<usize>>,
        config: IsleConfig,
        n_train: usize,
    ) -> Result<Self> {
        if trees.is_empty() {
            return Err(invalid("ensemble has no trees"));
        }
        check_len(trees.len(), coeffs.len())?;
        check_len(trees.len(), in_bag.len())?;
        let p = trees[0].n_features();
        if trees.iter().any(|t| t.n_features() != p) {
            return Err(invalid("trees disagree on the number of features"));
        }
        if in_bag.iter().flatten().any(|&i| i >= n_train) {
            return Err(invalid("in-bag index out of range"));
        }
        Ok(Ensemble { trees, coeffs, in_bag, config, n_train })
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    pub fn trees(&self) -> &[RegressionTree] {
        &self.trees
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn in_bag(&self) -> &[Vec<usize>] {
        &self.in_bag
    }

    pub fn config(&self) -> &IsleConfig {
        &self.config
    }

    pub fn n_train(&self) -> usize {
        self.n_train
    }

    pub fn n_features(&self) -> usize {
        self.trees[0].n_features()
    }

    pub fn out_of_bag(&self, j: usize) -> Vec<usize> {
        out_of_bag_rows(self.n_train, &self.in_bag[j])
    }

    /// `mask[i * M + j]` is true when training row `i` is out of bag for tree `j`.
    pub fn oob_mask(&self) -> OobMask {
        let m = self.len();
        let mut mask = vec![true; self.n_train * m];
        for (j, bag) in self.in_bag.iter().enumerate() {
            for &i in bag {
                mask[i * m + j] = false;
            }
        }
        OobMask { rows: self.n_train, trees: m, mask }
    }

    /// `out[i, j] = T_j(x_i)`.
    pub fn learner_matrix(&self, x: &Matrix) -> Result<Matrix> {
        check_len(self.n_features(), x.cols())?;
        let m = self.len();
        let mut out = Matrix::zeros(x.rows(), m);
        for (i, row) in x.iter_rows().enumerate() {
            let dst = out.row_mut(i);
            for (j, t) in self.trees.iter().enumerate() {
                dst[j] = t.predict(row);
            }
        }
        Ok(out)
    }

    /// `F_M(x) = Σ_j nu·c_j·T_j(x)`.
    pub fn boosted_prediction(&self, x: &[f64]) -> Result<f64> {
        check_len(self.n_features(), x.len())?;
        let nu = self.config.memory;
        Ok(self.trees.iter().zip(&self.coeffs).map(|(t, c)| nu * c * t.predict(x)).sum())
    }
}

/// Out-of-bag membership of training rows against trees.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OobMask {
    rows: usize,
    trees: usize,
    mask: Vec<bool>,
}

impl OobMask {
    pub fn from_fn(rows: usize, trees: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut mask = Vec::with_capacity(rows * trees);
        for i in 0..rows {
            for j in 0..trees {
                mask.push(f(i, j));
            }
        }
        OobMask { rows, trees, mask }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn trees(&self) -> usize {
        self.trees
    }

    #[inline]
    pub fn is_oob(&self, row: usize, tree: usize) -> bool {
        self.mask[row * self.trees + tree]
    }

    pub fn select_rows(&self, idx: &[usize]) -> OobMask {
        OobMask::from_fn(idx.len(), self.trees, |i, j| self.is_oob(idx[i], j))
    }

    pub fn select_trees(&self, idx: &[usize]) -> OobMask {
        OobMask::from_fn(self.rows, idx.len(), |i, j| self.is_oob(i, idx[j]))
    }
}
