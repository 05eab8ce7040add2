//! CART-style regression trees: axis-aligned binary splits, leaf means,
//! squared-error split criterion.

use alloc::format;
use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, invalid, Result};
use crate::math;
use crate::matrix::Matrix;

/// `x[feature] <= threshold` goes left, everything else goes right.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitCondition {
    pub feature: usize,
    pub threshold: f64,
}

impl SplitCondition {
    #[inline]
    pub fn goes_left(&self, x: &[f64]) -> bool {
        x[self.feature] <= self.threshold
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub condition: SplitCondition,
    pub left: usize,
    pub right: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub split: Option<Split>,
    /// Mean of the training targets routed to this node.
    pub value: f64,
    pub depth: usize,
    pub training_count: usize,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        self.split.is_none()
    }
}

/// How the split at each node is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SplitSearch {
    /// Best single split per node, top-down.
    #[default]
    Greedy,
    /// Globally optimal tree of the requested depth by exhaustive recursion.
    /// Cost grows as `(p·n)^depth`; meant for shallow trees on small data.
    /// Requires `feature_fraction = 1`.
    Exhaustive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Fraction of columns offered as split candidates at each node.
    pub feature_fraction: f64,
    pub search: SplitSearch,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams { max_depth: 2, min_leaf: 5, feature_fraction: 1.0, search: SplitSearch::Greedy }
    }
}

impl TreeParams {
    pub fn validate(&self) -> Result<()> {
        if self.min_leaf == 0 {
            return Err(invalid("min_leaf must be >= 1"));
        }
        if !(self.feature_fraction > 0.0 && self.feature_fraction <= 1.0) {
            return Err(invalid(format!("feature_fraction must be in (0,1], got {}", self.feature_fraction)));
        }
        if self.search == SplitSearch::Exhaustive && self.feature_fraction < 1.0 {
            return Err(invalid("exhaustive split search requires feature_fraction = 1"));
        }
        Ok(())
    }

    /// Number of candidate columns per node for `p` inputs.
    pub fn candidates(&self, p: usize) -> usize {
        (math::ceil(self.feature_fraction * p as f64) as usize).clamp(1, p.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    nodes: Vec<Node>,
    max_depth: usize,
    n_features: usize,
}

impl RegressionTree {
    /// Rebuilds a tree from its node table, checking structural invariants:
    /// node 0 is the root, children point forward, depths increase by one,
    /// child counts add up to the parent's.
    pub fn from_nodes(nodes: Vec<Node>, max_depth: usize, n_features: usize) -> Result<Self> {
        if nodes.is_empty() {
            return Err(invalid("tree has no nodes"));
        }
        if nodes[0].depth != 0 {
            return Err(invalid("root depth must be 0"));
        }
        let mut parents = alloc::vec![0usize; nodes.len()];
        for (id, node) in nodes.iter().enumerate() {
            if node.depth > max_depth {
                return Err(invalid(format!("node {id} deeper than max_depth")));
            }
            if let Some(s) = node.split {
                if s.condition.feature >= n_features {
                    return Err(invalid(format!("node {id} splits on feature {}", s.condition.feature)));
                }
                for c in [s.left, s.right] {
                    if c <= id || c >= nodes.len() {
                        return Err(invalid(format!("node {id} has bad child {c}")));
                    }
                    parents[c] += 1;
                    if nodes[c].depth != node.depth + 1 {
                        return Err(invalid(format!("child {c} of {id} has wrong depth")));
                    }
                }
                if nodes[s.left].training_count + nodes[s.right].training_count != node.training_count {
                    return Err(invalid(format!("child counts of node {id} do not sum")));
                }
            }
        }
        if parents[0] != 0 || parents[1..].iter().any(|&c| c != 1) {
            return Err(invalid("node table is not a tree"));
        }
        Ok(RegressionTree { nodes, max_depth, n_features })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn leaf_index(&self, x: &[f64]) -> usize {
        let mut id = 0;
        while let Some(s) = self.nodes[id].split {
            id = if s.condition.goes_left(x) { s.left } else { s.right };
        }
        id
    }

    #[inline]
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.nodes[self.leaf_index(x)].value
    }

    pub fn leaves(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].is_leaf())
    }

    /// Sorted, deduplicated list of features tested anywhere in the tree.
    pub fn features_used(&self) -> Vec<usize> {
        let mut f: Vec<usize> = self.nodes.iter().filter_map(|n| n.split.map(|s| s.condition.feature)).collect();
        f.sort_unstable();
        f.dedup();
        f
    }

    /// Parent of every node (`None` for the root).
    pub fn parents(&self) -> Vec<Option<usize>> {
        let mut parents = alloc::vec![None; self.nodes.len()];
        for (id, n) in self.nodes.iter().enumerate() {
            if let Some(s) = n.split {
                parents[s.left] = Some(id);
                parents[s.right] = Some(id);
            }
        }
        parents
    }

    /// Conditions on the path from the root to `node`, root first, as
    /// `(condition, went_left)`.
    pub fn path_to(&self, node: usize) -> Vec<(SplitCondition, bool)> {
        let parents = self.parents();
        let mut path = Vec::new();
        let mut cur = node;
        while let Some(p) = parents[cur] {
            let s = self.nodes[p].split.expect("parent has a split");
            path.push((s.condition, s.left == cur));
            cur = p;
        }
        path.reverse();
        path
    }
}

/// Fits a regression tree to `y` over the row multiset `rows` of `x`.
pub fn fit_tree<R: Rng + ?Sized>(
    x: &Matrix,
    y: &[f64],
    rows: &[usize],
    params: &TreeParams,
    rng: &mut R,
) -> Result<RegressionTree> {
    check_len(x.rows(), y.len())?;
    params.validate()?;
    if rows.is_empty() {
        return Err(invalid("cannot fit a tree on zero rows"));
    }
    if let Some(&bad) = rows.iter().find(|&&r| r >= x.rows()) {
        return Err(invalid(format!("row index {bad} out of range")));
    }
    let mut builder = Builder { x, y, params, nodes: Vec::new() };
    match params.search {
        SplitSearch::Greedy => {
            builder.grow_greedy(rows.to_vec(), 0, rng);
        }
        SplitSearch::Exhaustive => {
            let plan = builder.best_plan(rows, params.max_depth).1;
            builder.materialize(&plan, rows.to_vec(), 0);
        }
    }
    Ok(RegressionTree { nodes: builder.nodes, max_depth: params.max_depth, n_features: x.cols() })
}

enum Plan {
    Leaf,
    Split { condition: SplitCondition, left: alloc::boxed::Box<Plan>, right: alloc::boxed::Box<Plan> },
}

struct Builder<'a> {
    x: &'a Matrix,
    y: &'a [f64],
    params: &'a TreeParams,
    nodes: Vec<Node>,
}

struct Candidate {
    condition: SplitCondition,
    sse: f64,
}

impl Builder<'_> {
    fn push_node(&mut self, rows: &[usize], depth: usize) -> usize {
        let value = rows.iter().map(|&r| self.y[r]).sum::<f64>() / rows.len() as f64;
        self.nodes.push(Node { split: None, value, depth, training_count: rows.len() });
        self.nodes.len() - 1
    }

    fn constant_target(&self, rows: &[usize]) -> bool {
        let first = self.y[rows[0]];
        rows.iter().all(|&r| self.y[r] == first)
    }

    fn can_split(&self, rows: &[usize], depth_left: usize) -> bool {
        depth_left > 0 && rows.len() >= 2 * self.params.min_leaf && !self.constant_target(rows)
    }

    fn grow_greedy<R: Rng + ?Sized>(&mut self, rows: Vec<usize>, depth: usize, rng: &mut R) -> usize {
        let id = self.push_node(&rows, depth);
        if !self.can_split(&rows, self.params.max_depth - depth.min(self.params.max_depth)) {
            return id;
        }
        let features = self.sample_features(rng);
        let parent_sse = sse(self.y, &rows);
        let Some(best) = self.best_split(&rows, &features) else {
            return id;
        };
        if !(best.sse < parent_sse) {
            return id;
        }
        let (l, r) = partition(self.x, &rows, &best.condition);
        let left = self.grow_greedy(l, depth + 1, rng);
        let right = self.grow_greedy(r, depth + 1, rng);
        self.nodes[id].split = Some(Split { condition: best.condition, left, right });
        id
    }

    fn sample_features<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        let p = self.x.cols();
        let m = self.params.candidates(p);
        if m >= p {
            return (0..p).collect();
        }
        let mut f = rand::seq::index::sample(rng, p, m).into_vec();
        f.sort_unstable();
        f
    }

    /// Lowest children SSE over candidate features (ascending) and midpoint
    /// thresholds (ascending); first strict minimum wins.
    fn best_split(&self, rows: &[usize], features: &[usize]) -> Option<Candidate> {
        let n = rows.len();
        let min_leaf = self.params.min_leaf;
        let centre = rows.iter().map(|&r| self.y[r]).sum::<f64>() / n as f64;
        let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(n);
        let mut best: Option<Candidate> = None;
        for &f in features {
            pairs.clear();
            pairs.extend(rows.iter().map(|&r| (self.x.get(r, f), self.y[r] - centre)));
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            let (total, total_sq) = pairs.iter().fold((0.0, 0.0), |(s, q), &(_, v)| (s + v, q + v * v));
            let (mut s, mut q) = (0.0, 0.0);
            for i in 0..n - 1 {
                let v = pairs[i].1;
                s += v;
                q += v * v;
                let nl = i + 1;
                let nr = n - nl;
                if pairs[i].0 == pairs[i + 1].0 || nl < min_leaf || nr < min_leaf {
                    continue;
                }
                let sr = total - s;
                let split_sse = (q - s * s / nl as f64) + ((total_sq - q) - sr * sr / nr as f64);
                if best.as_ref().is_none_or(|b| split_sse < b.sse) {
                    let threshold = midpoint(pairs[i].0, pairs[i + 1].0);
                    best = Some(Candidate { condition: SplitCondition { feature: f, threshold }, sse: split_sse });
                }
            }
        }
        best
    }

    fn best_plan(&self, rows: &[usize], depth_left: usize) -> (f64, Plan) {
        let leaf_sse = sse(self.y, rows);
        if !self.can_split(rows, depth_left) {
            return (leaf_sse, Plan::Leaf);
        }
        let min_leaf = self.params.min_leaf;
        let mut best = (leaf_sse, Plan::Leaf);
        let mut sorted = rows.to_vec();
        for f in 0..self.x.cols() {
            sorted.sort_by(|&a, &b| self.x.get(a, f).total_cmp(&self.x.get(b, f)));
            for i in 0..sorted.len() - 1 {
                let (a, b) = (self.x.get(sorted[i], f), self.x.get(sorted[i + 1], f));
                let nl = i + 1;
                if a == b || nl < min_leaf || sorted.len() - nl < min_leaf {
                    continue;
                }
                let (l, r) = sorted.split_at(nl);
                let (sl, pl) = self.best_plan(l, depth_left - 1);
                let (sr, pr) = self.best_plan(r, depth_left - 1);
                if sl + sr < best.0 {
                    let condition = SplitCondition { feature: f, threshold: midpoint(a, b) };
                    best = (sl + sr, Plan::Split { condition, left: pl.into(), right: pr.into() });
                }
            }
        }
        best
    }

    fn materialize(&mut self, plan: &Plan, rows: Vec<usize>, depth: usize) -> usize {
        let id = self.push_node(&rows, depth);
        if let Plan::Split { condition, left, right } = plan {
            let (l, r) = partition(self.x, &rows, condition);
            let left = self.materialize(left, l, depth + 1);
            let right = self.materialize(right, r, depth + 1);
            self.nodes[id].split = Some(Split { condition: *condition, left, right });
        }
        id
    }
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    // adjacent floats can round the midpoint up to `b`
    if m < b {
        m
    } else {
        a
    }
}

fn partition(x: &Matrix, rows: &[usize], c: &SplitCondition) -> (Vec<usize>, Vec<usize>) {
    rows.iter().partition(|&&r| c.goes_left(x.row(r)))
}

fn sse(y: &[f64], rows: &[usize]) -> f64 {
    let m = rows.iter().map(|&r| y[r]).sum::<f64>() / rows.len() as f64;
    rows.iter().map(|&r| (y[r] - m) * (y[r] - m)).sum()
}
