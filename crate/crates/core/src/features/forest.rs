//! Per-label random forests of CART trees with Gini splits.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::logistic::{check_labels, check_matrix};
use super::FeatureError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestConfig {
    pub trees: usize,
    /// `None` grows trees until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// Candidate dimensions per split; `None` means `floor(sqrt(d))`.
    pub features_per_split: Option<usize>,
    /// Draw a bootstrap sample per tree; off trains every tree on all rows.
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            trees: 200,
            max_depth: None,
            min_leaf: 1,
            features_per_split: None,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl ForestConfig {
    pub fn validate(&self) -> Result<(), FeatureError> {
        if self.trees == 0 {
            return Err(FeatureError::Config("a forest needs at least one tree".into()));
        }
        if self.min_leaf == 0 {
            return Err(FeatureError::Config("min_leaf must be at least 1".into()));
        }
        if self.features_per_split == Some(0) {
            return Err(FeatureError::Config("features_per_split must be at least 1".into()));
        }
        Ok(())
    }

    fn candidates(&self, dims: usize) -> usize {
        self.features_per_split
            .unwrap_or_else(|| (dims as f64).sqrt().floor() as usize)
            .clamp(1, dims)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Leaf {
        positive: bool,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Binary tree stored as a node arena; node 0 is the root. Rows with
/// `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, row: &[f64]) -> bool {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { positive } => return positive,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, left).max(go(nodes, right)),
            }
        }
        go(&self.nodes, 0)
    }
}

fn gini(pos: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    2.0 * p * (1.0 - p)
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [bool],
    cfg: &'a ForestConfig,
    candidates: usize,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

impl Builder<'_> {
    fn best_split(&self, rows: &[usize], rng: &mut ChaCha8Rng) -> Option<BestSplit> {
        let dims = self.x[0].len();
        let n = rows.len();
        let total_pos = rows.iter().filter(|&&r| self.y[r]).count();
        let mut best: Option<BestSplit> = None;
        let mut order = rows.to_vec();
        let mut features: Vec<usize> = sample(rng, dims, self.candidates).into_vec();
        features.sort_unstable();
        for f in features {
            order.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]).then(a.cmp(&b)));
            let mut left_pos = 0;
            for i in 1..n {
                if self.y[order[i - 1]] {
                    left_pos += 1;
                }
                let (lo, hi) = (self.x[order[i - 1]][f], self.x[order[i]][f]);
                if lo == hi || i < self.cfg.min_leaf || n - i < self.cfg.min_leaf {
                    continue;
                }
                let impurity =
                    (i as f64 * gini(left_pos, i) + (n - i) as f64 * gini(total_pos - left_pos, n - i)) / n as f64;
                if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                    let mut threshold = lo + (hi - lo) / 2.0;
                    if threshold >= hi {
                        threshold = lo;
                    }
                    best = Some(BestSplit {
                        feature: f,
                        threshold,
                        impurity,
                    });
                }
            }
        }
        best.filter(|b| b.impurity < gini(total_pos, n))
    }

    fn grow(&self, rows: Vec<usize>, rng: &mut ChaCha8Rng) -> Tree {
        let mut nodes = vec![Node::Leaf { positive: false }];
        let mut stack = vec![(0usize, rows, 0usize)];
        while let Some((id, rows, depth)) = stack.pop() {
            let pos = rows.iter().filter(|&&r| self.y[r]).count();
            let pure = pos == 0 || pos == rows.len();
            let depth_ok = self.cfg.max_depth.is_none_or(|d| depth < d);
            let split = if !pure && depth_ok && rows.len() >= 2 * self.cfg.min_leaf {
                self.best_split(&rows, rng)
            } else {
                None
            };
            match split {
                None => {
                    nodes[id] = Node::Leaf {
                        positive: 2 * pos >= rows.len(),
                    }
                }
                Some(s) => {
                    let (l, r): (Vec<usize>, Vec<usize>) =
                        rows.iter().partition(|&&i| self.x[i][s.feature] <= s.threshold);
                    let left = nodes.len();
                    nodes.push(Node::Leaf { positive: false });
                    nodes.push(Node::Leaf { positive: false });
                    nodes[id] = Node::Split {
                        feature: s.feature,
                        threshold: s.threshold,
                        left,
                        right: left + 1,
                    };
                    // right pushed first so the left subtree is grown first
                    stack.push((left + 1, r, depth + 1));
                    stack.push((left, l, depth + 1));
                }
            }
        }
        Tree { nodes }
    }
}

/// RNG for one tree: seeded with `seed + tree`, with the label as the stream
/// so different labels draw independent samples.
fn tree_rng(seed: u64, tree: usize, label: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(tree as u64));
    rng.set_stream(label as u64);
    rng
}

pub fn train_tree(
    features: &[Vec<f64>],
    targets: &[bool],
    cfg: &ForestConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Tree, FeatureError> {
    cfg.validate()?;
    let dims = check_matrix(features)?;
    if targets.len() != features.len() {
        return Err(FeatureError::Shape(format!(
            "{} targets for {} rows",
            targets.len(),
            features.len()
        )));
    }
    let n = features.len();
    let rows: Vec<usize> = if cfg.bootstrap {
        (0..n).map(|_| rng.gen_range(0..n)).collect()
    } else {
        (0..n).collect()
    };
    let builder = Builder {
        x: features,
        y: targets,
        cfg,
        candidates: cfg.candidates(dims),
    };
    Ok(builder.grow(rows, rng))
}

/// One forest per label.
#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    pub dims: usize,
    pub labels: Vec<Vec<Tree>>,
}

impl Forest {
    /// Fraction of trees voting positive, per label.
    pub fn score_row(&self, row: &[f64]) -> Result<Vec<f64>, FeatureError> {
        if row.len() != self.dims {
            return Err(FeatureError::Shape(format!(
                "feature row has {} dims, forest expects {}",
                row.len(),
                self.dims
            )));
        }
        Ok(self
            .labels
            .iter()
            .map(|trees| trees.iter().filter(|t| t.predict(row)).count() as f64 / trees.len() as f64)
            .collect())
    }
}

pub fn forest_train(features: &[Vec<f64>], labels: &[Vec<u8>], cfg: &ForestConfig) -> Result<Forest, FeatureError> {
    cfg.validate()?;
    let dims = check_matrix(features)?;
    let num_labels = check_labels(labels, features.len())?;
    let forests = (0..num_labels)
        .map(|l| {
            let targets: Vec<bool> = labels.iter().map(|y| y[l] == 1).collect();
            (0..cfg.trees)
                .into_par_iter()
                .map(|t| train_tree(features, &targets, cfg, &mut tree_rng(cfg.seed, t, l)))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Forest { dims, labels: forests })
}

pub fn forest_predict(forest: &Forest, features: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, FeatureError> {
    features.iter().map(|r| forest.score_row(r)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_stump() -> ForestConfig {
        ForestConfig {
            trees: 1,
            max_depth: Some(1),
            features_per_split: Some(2),
            bootstrap: false,
            ..ForestConfig::default()
        }
    }

    #[test]
    fn stump_reproduces_threshold_rule() {
        let features: Vec<Vec<f64>> = (0..10).map(|i| vec![(i * 7 % 3) as f64, i as f64]).collect();
        let labels: Vec<Vec<u8>> = (0..10).map(|i| vec![u8::from(i >= 6)]).collect();
        let forest = forest_train(&features, &labels, &single_stump()).unwrap();
        let tree = &forest.labels[0][0];
        assert_eq!(tree.depth(), 1);
        match tree.nodes[0] {
            Node::Split { feature, threshold, .. } => {
                assert_eq!(feature, 1);
                assert_eq!(threshold, 5.5);
            }
            _ => panic!("expected a split"),
        }
        let scores = forest_predict(&forest, &features).unwrap();
        for (s, y) in scores.iter().zip(&labels) {
            assert_eq!(s[0], y[0] as f64);
        }
    }

    #[test]
    fn pure_labels_predict_constant() {
        let features: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let labels = vec![vec![1, 0]; 8];
        let forest = forest_train(
            &features,
            &labels,
            &ForestConfig {
                trees: 5,
                ..Default::default()
            },
        )
        .unwrap();
        for s in forest_predict(&forest, &[vec![-3.0, 100.0], vec![4.5, 0.0]]).unwrap() {
            assert_eq!(s, vec![1.0, 0.0]);
        }
    }

    #[test]
    fn seeded_training_is_reproducible() {
        let features: Vec<Vec<f64>> = (0..30)
            .map(|i| vec![(i % 5) as f64, (i % 7) as f64, i as f64])
            .collect();
        let labels: Vec<Vec<u8>> = (0..30)
            .map(|i| vec![u8::from(i % 5 > 2), u8::from(i % 2 == 0)])
            .collect();
        let cfg = ForestConfig {
            trees: 10,
            seed: 9,
            ..Default::default()
        };
        assert_eq!(
            forest_train(&features, &labels, &cfg).unwrap(),
            forest_train(&features, &labels, &cfg).unwrap()
        );
    }

    #[test]
    fn invalid_config_rejected() {
        let cfg = ForestConfig {
            trees: 0,
            ..Default::default()
        };
        assert!(forest_train(&[vec![1.0]], &[vec![1]], &cfg).is_err());
    }
}
