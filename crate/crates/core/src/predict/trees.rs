use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::PredictError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_samples_leaf: usize,
    /// Fraction of rows drawn (without replacement) for each tree.
    pub subsample: f64,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self { n_trees: 100, max_depth: 3, learning_rate: 0.1, min_samples_leaf: 5, subsample: 0.8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Node {
    Leaf(f64),
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf(v) => return v,
                Node::Split { feature, threshold, left, right } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    r: &'a [f64],
    max_depth: usize,
    min_leaf: usize,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn leaf(&mut self, rows: &[usize]) -> usize {
        let mean = rows.iter().map(|&i| self.r[i]).sum::<f64>() / rows.len() as f64;
        self.nodes.push(Node::Leaf(mean));
        self.nodes.len() - 1
    }

    /// Best (feature, threshold, gain) by squared-error reduction.
    fn best_split(&self, rows: &[usize]) -> Option<(usize, f64)> {
        let n = rows.len();
        let total: f64 = rows.iter().map(|&i| self.r[i]).sum();
        let base = total * total / n as f64;
        let mut best: Option<(usize, f64, f64)> = None;
        let mut order = rows.to_vec();
        for f in 0..self.x[rows[0]].len() {
            order.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]).then(a.cmp(&b)));
            let mut left = 0.0;
            for k in 0..n - 1 {
                left += self.r[order[k]];
                let (nl, nr) = (k + 1, n - k - 1);
                if nl < self.min_leaf || nr < self.min_leaf {
                    continue;
                }
                let (a, b) = (self.x[order[k]][f], self.x[order[k + 1]][f]);
                if a == b {
                    continue;
                }
                let right = total - left;
                let gain = left * left / nl as f64 + right * right / nr as f64 - base;
                if gain > 1e-12 && best.is_none_or(|(_, _, g)| gain > g) {
                    best = Some((f, 0.5 * (a + b), gain));
                }
            }
        }
        best.map(|(f, t, _)| (f, t))
    }

    fn grow(&mut self, rows: &[usize], depth: usize) -> usize {
        if depth >= self.max_depth || rows.len() < 2 * self.min_leaf {
            return self.leaf(rows);
        }
        let Some((feature, threshold)) = self.best_split(rows) else {
            return self.leaf(rows);
        };
        let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| self.x[i][feature] <= threshold);
        let index = self.nodes.len();
        self.nodes.push(Node::Leaf(0.0));
        let left = self.grow(&l, depth + 1);
        let right = self.grow(&r, depth + 1);
        self.nodes[index] = Node::Split { feature, threshold, left, right };
        index
    }
}

/// Stagewise additive regression trees on squared error, fitted to the
/// residual of a fixed per-sample offset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeEnsembleModel {
    pub n_features: usize,
    pub learning_rate: f64,
    /// Constant first stage, added to the offset.
    pub init: f64,
    trees: Vec<Tree>,
}

impl TreeEnsembleModel {
    pub fn fit(x: &[Vec<f64>], y: &[f64], offset: &[f64], params: &TreeParams, seed: u64) -> Result<Self, PredictError> {
        let n = x.len();
        if n < 2 || y.len() != n || offset.len() != n {
            return Err(PredictError::TooFewSamples { needed: 2, got: n.min(y.len()).min(offset.len()) });
        }
        if !(params.learning_rate > 0.0 && params.subsample > 0.0 && params.subsample <= 1.0 && params.min_samples_leaf >= 1) {
            return Err(PredictError::InvalidSpec("learning_rate > 0, 0 < subsample <= 1, min_samples_leaf >= 1".into()));
        }
        let p = x[0].len();
        if let Some(bad) = x.iter().find(|r| r.len() != p) {
            return Err(PredictError::DimensionMismatch { expected: p, got: bad.len() });
        }
        let mut residual: Vec<f64> = y.iter().zip(offset).map(|(a, b)| a - b).collect();
        let init = residual.iter().sum::<f64>() / n as f64;
        residual.iter_mut().for_each(|r| *r -= init);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = ((params.subsample * n as f64).round() as usize).clamp(1, n);
        let mut trees = Vec::with_capacity(params.n_trees);
        for _ in 0..params.n_trees {
            let mut rows: Vec<usize> = if m == n { (0..n).collect() } else { sample(&mut rng, n, m).into_vec() };
            rows.sort_unstable();
            let mut b = Builder { x, r: &residual, max_depth: params.max_depth, min_leaf: params.min_samples_leaf, nodes: Vec::new() };
            b.grow(&rows, 0);
            let tree = Tree { nodes: b.nodes };
            for (i, r) in residual.iter_mut().enumerate() {
                *r -= params.learning_rate * tree.predict(&x[i]);
            }
            trees.push(tree);
        }
        Ok(Self { n_features: p, learning_rate: params.learning_rate, init, trees })
    }

    /// Correction to add to the offset.
    pub fn predict(&self, x: &[f64]) -> Result<f64, PredictError> {
        if x.len() != self.n_features {
            return Err(PredictError::DimensionMismatch { expected: self.n_features, got: x.len() });
        }
        Ok(self.init + self.learning_rate * self.trees.iter().map(|t| t.predict(x)).sum::<f64>())
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }
}
