//! Random decision forest over feature vectors: unpruned trees grown on
//! bootstrap resamples, each split chosen from a random feature subset by
//! Gini impurity, prediction by majority vote.
//!
//! Training is deterministic under a fixed seed, also when trees are grown
//! in parallel: every tree draws from its own stream derived from
//! (rng_seed, tree index). All split tie-breaks are total orders.

use rand::seq::index::sample as index_sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureSubset {
    /// ceil(sqrt(D)) candidate features per split.
    Sqrt,
    Count(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub features_per_split: FeatureSubset,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub rng_seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 500,
            features_per_split: FeatureSubset::Sqrt,
            max_depth: None,
            min_samples_leaf: 1,
            rng_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node<F> {
    Split { feature: usize, threshold: F, left: usize, right: usize },
    /// Per-class sample counts of the training points reaching the leaf,
    /// indexed like `class_labels`.
    Leaf { counts: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree<F> {
    pub nodes: Vec<Node<F>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel<F> {
    pub trees: Vec<Tree<F>>,
    /// Distinct class labels seen in training, ascending.
    pub class_labels: Vec<usize>,
    pub params: ForestParams,
    pub feature_dimension: usize,
}

pub fn train_forest<F: Real>(
    x: &[Vec<F>],
    y: &[usize],
    params: &ForestParams,
) -> Result<ForestModel<F>> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: y.len() });
    }
    if x.len() < 2 {
        return Err(Error::DegenerateData(format!("{} training samples", x.len())));
    }
    let mut class_labels: Vec<usize> = y.to_vec();
    class_labels.sort_unstable();
    class_labels.dedup();
    if class_labels.len() < 2 {
        return Err(Error::DegenerateData("single class in training data".into()));
    }
    let dim = x[0].len();
    for row in x {
        if row.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: row.len() });
        }
    }
    let class_index: Vec<usize> =
        y.iter().map(|l| class_labels.binary_search(l).unwrap()).collect();
    let n_candidates = match params.features_per_split {
        FeatureSubset::Sqrt => (dim as f64).sqrt().ceil() as usize,
        FeatureSubset::Count(c) => c.min(dim),
    }
    .max(1);

    let trees: Vec<Tree<F>> = (0..params.n_trees)
        .into_par_iter()
        .map(|tree_index| {
            let mut rng = tree_rng(params.rng_seed, tree_index);
            let n = x.len();
            let bootstrap: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            let mut builder = TreeBuilder {
                x,
                class_index: &class_index,
                n_classes: class_labels.len(),
                n_candidates,
                params,
                nodes: Vec::new(),
            };
            builder.grow(bootstrap, 0, &mut rng);
            Tree { nodes: builder.nodes }
        })
        .collect();

    Ok(ForestModel { trees, class_labels, params: *params, feature_dimension: dim })
}

fn tree_rng(master_seed: u64, tree_index: usize) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    seed[..8].copy_from_slice(&master_seed.to_le_bytes());
    seed[8..16].copy_from_slice(&(tree_index as u64).to_le_bytes());
    ChaCha8Rng::from_seed(seed)
}

struct TreeBuilder<'a, F> {
    x: &'a [Vec<F>],
    class_index: &'a [usize],
    n_classes: usize,
    n_candidates: usize,
    params: &'a ForestParams,
    nodes: Vec<Node<F>>,
}

impl<F: Real> TreeBuilder<'_, F> {
    /// Grows the subtree over `indices`, returns its root node id.
    fn grow(&mut self, indices: Vec<usize>, depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let counts = self.count(&indices);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_capped = self.params.max_depth.map_or(false, |d| depth >= d);
        if pure || depth_capped || indices.len() < 2 * self.params.min_samples_leaf {
            return self.leaf(counts);
        }
        match self.best_split(&indices, rng) {
            None => self.leaf(counts),
            Some((feature, threshold)) => {
                let (left_set, right_set): (Vec<usize>, Vec<usize>) =
                    indices.into_iter().partition(|&i| self.x[i][feature] <= threshold);
                let id = self.nodes.len();
                self.nodes.push(Node::Split { feature, threshold, left: 0, right: 0 });
                let left = self.grow(left_set, depth + 1, rng);
                let right = self.grow(right_set, depth + 1, rng);
                if let Node::Split { left: l, right: r, .. } = &mut self.nodes[id] {
                    *l = left;
                    *r = right;
                }
                id
            }
        }
    }

    fn leaf(&mut self, counts: Vec<usize>) -> usize {
        self.nodes.push(Node::Leaf { counts });
        self.nodes.len() - 1
    }

    fn count(&self, indices: &[usize]) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_classes];
        for &i in indices {
            counts[self.class_index[i]] += 1;
        }
        counts
    }

    /// Minimum weighted-Gini split over the random candidate features.
    /// Ties resolve to the lowest feature index, then lowest threshold.
    fn best_split(&self, indices: &[usize], rng: &mut ChaCha8Rng) -> Option<(usize, F)> {
        let dim = self.x[0].len();
        let mut candidates: Vec<usize> =
            index_sample(rng, dim, self.n_candidates.min(dim)).into_vec();
        candidates.sort_unstable();

        let n = indices.len();
        let min_leaf = self.params.min_samples_leaf;
        let total = self.count(indices);
        let mut best: Option<(f64, usize, F)> = None;
        let mut sorted: Vec<(F, usize)> = Vec::with_capacity(n);
        for &feature in &candidates {
            sorted.clear();
            sorted.extend(indices.iter().map(|&i| (self.x[i][feature], self.class_index[i])));
            sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

            let mut left = vec![0usize; self.n_classes];
            let mut right = total.clone();
            for split_at in 1..n {
                let (v, c) = sorted[split_at - 1];
                left[c] += 1;
                right[c] -= 1;
                let next = sorted[split_at].0;
                if next <= v {
                    continue; // no threshold separates equal values
                }
                if split_at < min_leaf || n - split_at < min_leaf {
                    continue;
                }
                let score = weighted_gini(&left, split_at, &right, n - split_at);
                let threshold = (v + next) / F::from_u8(2).unwrap();
                let better = match &best {
                    None => true,
                    Some((s, f, t)) => {
                        score < *s
                            || (score == *s
                                && (feature < *f || (feature == *f && threshold < *t)))
                    }
                };
                if better {
                    best = Some((score, feature, threshold));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}

fn weighted_gini(left: &[usize], nl: usize, right: &[usize], nr: usize) -> f64 {
    let gini = |counts: &[usize], n: usize| {
        let n = n as f64;
        1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
    };
    let n = (nl + nr) as f64;
    (nl as f64 / n) * gini(left, nl) + (nr as f64 / n) * gini(right, nr)
}

impl<F: Real> ForestModel<F> {
    fn leaf_counts<'a>(&'a self, tree: &'a Tree<F>, x: &[F]) -> &'a [usize] {
        let mut node = 0usize;
        loop {
            match &tree.nodes[node] {
                Node::Split { feature, threshold, left, right } => {
                    node = if x[*feature] <= *threshold { *left } else { *right };
                }
                Node::Leaf { counts } => return counts,
            }
        }
    }

    /// Majority vote over all trees; vote ties break to the smallest label.
    pub fn predict(&self, x: &[F]) -> Result<usize> {
        let proba = self.predict_proba(x)?;
        let mut best = 0usize;
        for (i, p) in proba.iter().enumerate() {
            if *p > proba[best] {
                best = i;
            }
        }
        Ok(self.class_labels[best])
    }

    /// Per-class fractions of tree votes, in `class_labels` order.
    pub fn predict_proba(&self, x: &[F]) -> Result<Vec<f64>> {
        if x.len() != self.feature_dimension {
            return Err(Error::DimensionMismatch {
                expected: self.feature_dimension,
                got: x.len(),
            });
        }
        let mut votes = vec![0usize; self.class_labels.len()];
        for tree in &self.trees {
            let counts = self.leaf_counts(tree, x);
            let mut winner = 0usize;
            for (i, c) in counts.iter().enumerate() {
                if *c > counts[winner] {
                    winner = i;
                }
            }
            votes[winner] += 1;
        }
        let total = self.trees.len() as f64;
        Ok(votes.into_iter().map(|v| v as f64 / total).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn separable(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for _ in 0..n {
            let class = rng.gen_bool(0.5);
            let center = if class { 1.5 } else { -1.5 };
            x.push(vec![center + rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]);
            y.push(if class { 2 } else { 1 });
        }
        (x, y)
    }

    #[test]
    fn separable_data_high_accuracy() {
        let params = ForestParams { n_trees: 100, ..Default::default() };
        let (x, y) = separable(200, 1);
        let (xt, yt) = separable(100, 2);
        let m = train_forest(&x, &y, &params).unwrap();
        let correct = xt
            .iter()
            .zip(&yt)
            .filter(|(v, &label)| m.predict(v).unwrap() == label)
            .count();
        assert!(correct >= 99, "accuracy {correct}/100");
    }

    #[test]
    fn degenerate_data_rejected() {
        let x = vec![vec![0.0], vec![1.0]];
        assert!(matches!(
            train_forest(&x, &[1, 1], &ForestParams::default()),
            Err(Error::DegenerateData(_))
        ));
        assert!(matches!(
            train_forest::<f64>(&[], &[], &ForestParams::default()),
            Err(Error::DegenerateData(_))
        ));
    }

    #[test]
    fn deterministic_under_seed_and_parallelism() {
        let (x, y) = separable(120, 3);
        let params = ForestParams { n_trees: 50, rng_seed: 42, ..Default::default() };
        let a = train_forest(&x, &y, &params).unwrap();
        let b = train_forest(&x, &y, &params).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn proba_sums_to_one_and_matches_predict() {
        let (x, y) = separable(150, 4);
        let params = ForestParams { n_trees: 61, ..Default::default() };
        let m = train_forest(&x, &y, &params).unwrap();
        for v in x.iter().take(20) {
            let p = m.predict_proba(v).unwrap();
            let sum: f64 = p.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            let argmax = p
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap().then(b.0.cmp(&a.0)))
                .unwrap()
                .0;
            assert_eq!(m.predict(v).unwrap(), m.class_labels[argmax]);
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let (x, y) = separable(50, 5);
        let m = train_forest(&x, &y, &ForestParams { n_trees: 5, ..Default::default() }).unwrap();
        assert!(matches!(m.predict(&[0.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn vote_tie_breaks_to_smallest_label() {
        // Two single-point pure "trees" voting for classes 2 and 5.
        let model = ForestModel {
            trees: vec![
                Tree { nodes: vec![Node::Leaf { counts: vec![1, 0] }] },
                Tree { nodes: vec![Node::Leaf { counts: vec![0, 1] }] },
            ],
            class_labels: vec![2, 5],
            params: ForestParams::default(),
            feature_dimension: 1,
        };
        assert_eq!(model.predict(&[0.0f64]).unwrap(), 2);
    }
}
