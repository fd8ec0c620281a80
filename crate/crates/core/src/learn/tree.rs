//! CART classification trees (Gini) and bagged random forests.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{seeded_rng, Dataset};
use crate::par;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        /// Fraction of positive training samples reaching this leaf.
        p: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: u32,
        right: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0usize;
        loop {
            match &self.nodes[i] {
                TreeNode::Leaf { p } => return *p,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if x[*feature] <= *threshold { *left } else { *right } as usize;
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, i: usize) -> usize {
            match &t.nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + go(t, *left as usize).max(go(t, *right as usize)),
            }
        }
        go(self, 0)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TreeParams {
    /// Features examined per split (non-constant ones count).
    pub max_features: usize,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

struct Builder<'a> {
    data: &'a Dataset,
    params: TreeParams,
    rng: ChaCha8Rng,
    nodes: Vec<TreeNode>,
    features: Vec<usize>,
    scratch: Vec<(f64, bool)>,
}

fn gini(pos: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    2.0 * p * (1.0 - p)
}

struct SplitChoice {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

impl Builder<'_> {
    fn leaf(&mut self, idx: &[usize]) -> u32 {
        let pos = idx.iter().filter(|&&i| self.data.y[i]).count();
        self.nodes.push(TreeNode::Leaf {
            p: pos as f64 / idx.len() as f64,
        });
        (self.nodes.len() - 1) as u32
    }

    /// Best threshold on one feature, or `None` when the feature is constant
    /// within the node.
    fn best_on_feature(&mut self, idx: &[usize], f: usize) -> Option<SplitChoice> {
        self.scratch.clear();
        self.scratch.extend(idx.iter().map(|&i| (self.data.x[i][f], self.data.y[i])));
        self.scratch.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n = self.scratch.len();
        if self.scratch[0].0 == self.scratch[n - 1].0 {
            return None;
        }
        let total_pos = self.scratch.iter().filter(|s| s.1).count();
        let mut left_pos = 0;
        let mut best: Option<SplitChoice> = None;
        for i in 0..n - 1 {
            if self.scratch[i].1 {
                left_pos += 1;
            }
            let (a, b) = (self.scratch[i].0, self.scratch[i + 1].0);
            if a == b {
                continue;
            }
            let nl = i + 1;
            let nr = n - nl;
            let impurity = nl as f64 * gini(left_pos, nl) + nr as f64 * gini(total_pos - left_pos, nr);
            if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                let mid = a + (b - a) / 2.0;
                let threshold = if mid < b { mid } else { a };
                best = Some(SplitChoice {
                    feature: f,
                    threshold,
                    impurity,
                });
            }
        }
        best
    }

    fn build(&mut self, idx: &mut [usize], depth: usize) -> u32 {
        let n = idx.len();
        let pos = idx.iter().filter(|&&i| self.data.y[i]).count();
        let depth_reached = self.params.max_depth.is_some_and(|d| depth >= d);
        if pos == 0 || pos == n || n < self.params.min_samples_split.max(2) || depth_reached {
            return self.leaf(idx);
        }
        let mut features = std::mem::take(&mut self.features);
        features.shuffle(&mut self.rng);
        let mut visited = 0;
        let mut best: Option<SplitChoice> = None;
        for &f in &features {
            if visited >= self.params.max_features {
                break;
            }
            if let Some(c) = self.best_on_feature(idx, f) {
                visited += 1;
                if best.as_ref().is_none_or(|b| c.impurity < b.impurity) {
                    best = Some(c);
                }
            }
        }
        self.features = features;
        let Some(split) = best else {
            return self.leaf(idx);
        };

        // partition: <= threshold goes left
        let mut mid = 0;
        for i in 0..n {
            if self.data.x[idx[i]][split.feature] <= split.threshold {
                idx.swap(i, mid);
                mid += 1;
            }
        }
        let me = self.nodes.len();
        self.nodes.push(TreeNode::Leaf { p: 0.0 });
        let (l, r) = idx.split_at_mut(mid);
        let left = self.build(l, depth + 1);
        let right = self.build(r, depth + 1);
        self.nodes[me] = TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        me as u32
    }
}

pub fn fit_tree(data: &Dataset, sample: &mut [usize], params: TreeParams, rng: ChaCha8Rng) -> Tree {
    let mut b = Builder {
        data,
        params,
        rng,
        nodes: Vec::new(),
        features: (0..data.n_features()).collect(),
        scratch: Vec::with_capacity(sample.len()),
    };
    b.build(sample, 0);
    Tree { nodes: b.nodes }
}

/// Bootstrap-aggregated trees; tree `t` draws from RNG stream `t` of `seed`.
pub fn fit_forest(data: &Dataset, n_trees: usize, params: TreeParams, seed: u64) -> Vec<Tree> {
    par::map_range(n_trees, |t| {
        let mut rng = seeded_rng(seed, t as u64);
        let n = data.len();
        let mut sample: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
        fit_tree(data, &mut sample, params, rng)
    })
}

/// Fraction of trees voting positive.
pub fn forest_vote(trees: &[Tree], x: &[f64]) -> f64 {
    let votes = trees.iter().filter(|t| t.predict(x) > 0.5).count();
    votes as f64 / trees.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(rows: &[(&[f64], bool)]) -> Dataset {
        Dataset {
            x: rows.iter().map(|r| r.0.to_vec()).collect(),
            y: rows.iter().map(|r| r.1).collect(),
        }
    }

    const FULL: TreeParams = TreeParams {
        max_features: usize::MAX,
        max_depth: None,
        min_samples_split: 2,
    };

    #[test]
    fn memorizes_separable_points() {
        let d = data(&[(&[0.0, 1.0], false), (&[1.0, 0.0], false), (&[2.0, 3.0], true), (&[3.0, 2.0], true)]);
        let mut idx: Vec<usize> = (0..4).collect();
        let t = fit_tree(&d, &mut idx, FULL, seeded_rng(1, 0));
        for (x, y) in d.x.iter().zip(&d.y) {
            assert_eq!(t.predict(x) > 0.5, *y);
        }
        assert_eq!(t.depth(), 1);
    }

    #[test]
    fn duplicate_points_with_mixed_labels_become_mixed_leaf() {
        let d = data(&[(&[1.0], true), (&[1.0], false), (&[1.0], true)]);
        let mut idx: Vec<usize> = (0..3).collect();
        let t = fit_tree(&d, &mut idx, FULL, seeded_rng(1, 0));
        assert_eq!(t.nodes.len(), 1);
        assert!((t.predict(&[1.0]) - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn max_depth_is_respected() {
        let rows: Vec<(Vec<f64>, bool)> = (0..64).map(|i| (vec![i as f64], i % 2 == 0)).collect();
        let d = Dataset {
            x: rows.iter().map(|r| r.0.clone()).collect(),
            y: rows.iter().map(|r| r.1).collect(),
        };
        let mut idx: Vec<usize> = (0..64).collect();
        let t = fit_tree(&d, &mut idx, TreeParams { max_depth: Some(3), ..FULL }, seeded_rng(0, 0));
        assert!(t.depth() <= 3);
    }

    #[test]
    fn forest_is_deterministic_and_votes_fraction() {
        let d = data(&[(&[1.0], true), (&[1.0], true), (&[0.0], false), (&[0.0], false)]);
        let p = TreeParams { max_features: 1, ..FULL };
        let a = fit_forest(&d, 20, p, 9);
        let b = fit_forest(&d, 20, p, 9);
        assert_eq!(a, b);
        let v = forest_vote(&a, &[1.0]);
        assert!((0.0..=1.0).contains(&v));
        assert_eq!(v * 20.0, (v * 20.0).round());
    }
}
