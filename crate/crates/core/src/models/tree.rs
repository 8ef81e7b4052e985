//! CART decision trees: Gini impurity for classification, squared-error
//! reduction for regression.
//!
//! Candidate thresholds are midpoints between consecutive distinct values
//! and rows with `x <= threshold` go left. Among equally good splits the
//! lowest feature index wins, then the lowest threshold. An impure node is
//! split whenever a legal split exists, even one with zero gain, so that
//! patterns like XOR can be separated at depth 2.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TreeMode {
    Classification,
    Regression,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Candidate features drawn per node; `None` uses all of them.
    pub max_features: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: 6,
            min_samples_leaf: 1,
            max_features: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// Class-1 probability for classification trees, the fitted value for
    /// regression trees.
    Leaf { value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub mode: TreeMode,
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    /// Index into `nodes` of the leaf reached by `row`.
    pub fn leaf_index(&self, row: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { .. } => return i,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn predict_value(&self, row: &[f64]) -> f64 {
        match self.nodes[self.leaf_index(row)] {
            Node::Leaf { value } => value,
            Node::Split { .. } => unreachable!("leaf_index returns a leaf"),
        }
    }

    /// Class 1 when the leaf probability is at least one half.
    pub fn predict_class(&self, row: &[f64]) -> u8 {
        u8::from(self.predict_value(row) >= 0.5)
    }

    pub(crate) fn set_leaf_value(&mut self, leaf: usize, value: f64) {
        if let Node::Leaf { value: v } = &mut self.nodes[leaf] {
            *v = value;
        }
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

/// Fits a tree on every row of `x`. For classification `targets` must be
/// 0.0 or 1.0.
pub fn train_tree(x: &[Vec<f64>], targets: &[f64], params: &TreeParams, mode: TreeMode) -> DecisionTree {
    let rows: Vec<usize> = (0..x.len()).collect();
    // never drawn from: all features are candidates
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let params = TreeParams {
        max_features: None,
        ..*params
    };
    TreeBuilder::new(x, targets, &params, mode, &mut rng).build(rows).0
}

pub(crate) struct TreeBuilder<'a, R> {
    x: &'a [Vec<f64>],
    targets: &'a [f64],
    params: &'a TreeParams,
    mode: TreeMode,
    rng: &'a mut R,
    nodes: Vec<Node>,
    /// Rows (possibly repeated) that ended in each leaf, by node index.
    leaf_rows: Vec<(usize, Vec<usize>)>,
}

struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

impl<'a, R: Rng> TreeBuilder<'a, R> {
    pub(crate) fn new(
        x: &'a [Vec<f64>],
        targets: &'a [f64],
        params: &'a TreeParams,
        mode: TreeMode,
        rng: &'a mut R,
    ) -> Self {
        Self {
            x,
            targets,
            params,
            mode,
            rng,
            nodes: Vec::new(),
            leaf_rows: Vec::new(),
        }
    }

    /// Grows the tree over `rows` (indices into `x`, repeats allowed) and
    /// returns it with the training rows of each leaf.
    pub(crate) fn build(mut self, rows: Vec<usize>) -> (DecisionTree, Vec<(usize, Vec<usize>)>) {
        if rows.is_empty() {
            self.nodes.push(Node::Leaf { value: 0.0 });
        } else {
            self.grow(rows, 0);
        }
        (
            DecisionTree {
                mode: self.mode,
                nodes: self.nodes,
            },
            self.leaf_rows,
        )
    }

    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        let mean = rows.iter().map(|&i| self.targets[i]).sum::<f64>() / rows.len() as f64;
        self.nodes.push(Node::Leaf { value: mean });

        let first = self.targets[rows[0]];
        let pure = rows.iter().all(|&i| self.targets[i] == first);
        let min_leaf = self.params.min_samples_leaf.max(1);
        if pure || depth >= self.params.max_depth || rows.len() < 2 * min_leaf {
            self.leaf_rows.push((id, rows));
            return id;
        }

        let Some(best) = self.best_split(&rows, min_leaf) else {
            self.leaf_rows.push((id, rows));
            return id;
        };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&i| self.x[i][best.feature] <= best.threshold);
        let left = self.grow(left_rows, depth + 1);
        let right = self.grow(right_rows, depth + 1);
        self.nodes[id] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        id
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let d = self.x[0].len();
        match self.params.max_features {
            Some(m) if m < d => {
                let mut f = index::sample(self.rng, d, m.max(1)).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..d).collect(),
        }
    }

    /// Weighted child impurity (times node size) for a prefix of `count`
    /// rows with target sum `sum` and squared sum `sq`.
    fn impurity(&self, count: f64, sum: f64, sq: f64) -> f64 {
        match self.mode {
            TreeMode::Classification => {
                let p = sum / count;
                count * 2.0 * p * (1.0 - p)
            }
            TreeMode::Regression => sq - sum * sum / count,
        }
    }

    fn best_split(&mut self, rows: &[usize], min_leaf: usize) -> Option<Candidate> {
        let n = rows.len();
        let total_sum: f64 = rows.iter().map(|&i| self.targets[i]).sum();
        let total_sq: f64 = rows.iter().map(|&i| self.targets[i].powi(2)).sum();
        let parent = self.impurity(n as f64, total_sum, total_sq);

        let mut best: Option<Candidate> = None;
        let mut sorted = rows.to_vec();
        for f in self.candidate_features() {
            sorted.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]));
            let (mut sum, mut sq) = (0.0, 0.0);
            for k in 1..n {
                let t = self.targets[sorted[k - 1]];
                sum += t;
                sq += t * t;
                let (lo, hi) = (self.x[sorted[k - 1]][f], self.x[sorted[k]][f]);
                if lo == hi || k < min_leaf || n - k < min_leaf {
                    continue;
                }
                let children = self.impurity(k as f64, sum, sq)
                    + self.impurity((n - k) as f64, total_sum - sum, total_sq - sq);
                let gain = parent - children;
                if best.as_ref().is_none_or(|b| gain > b.gain) {
                    let mut threshold = lo + (hi - lo) / 2.0;
                    if threshold >= hi {
                        threshold = lo;
                    }
                    best = Some(Candidate {
                        gain,
                        feature: f,
                        threshold,
                    });
                }
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn accuracy(tree: &DecisionTree, x: &[Vec<f64>], y: &[f64]) -> f64 {
        let hits = x
            .iter()
            .zip(y)
            .filter(|(r, &t)| f64::from(tree.predict_class(r)) == t)
            .count();
        hits as f64 / x.len() as f64
    }

    #[test]
    fn pure_input_is_single_leaf() {
        let x = vec![vec![1.0], vec![2.0], vec![3.0]];
        let t = train_tree(&x, &[1.0, 1.0, 1.0], &TreeParams::default(), TreeMode::Classification);
        assert_eq!(t.nodes, vec![Node::Leaf { value: 1.0 }]);
    }

    #[test]
    fn xor_at_depth_two() {
        let x = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]];
        let y = [0.0, 1.0, 1.0, 0.0];
        let params = TreeParams { max_depth: 2, ..Default::default() };
        let t = train_tree(&x, &y, &params, TreeMode::Classification);
        assert_eq!(accuracy(&t, &x, &y), 1.0);
        // zero-gain root: tie-break picks feature 0 at the midpoint
        assert_eq!(t.nodes[0], Node::Split { feature: 0, threshold: 0.5, left: 1, right: 4 });
    }

    #[test]
    fn depth_zero_is_majority_leaf() {
        let x = vec![vec![0.0], vec![1.0], vec![2.0]];
        let params = TreeParams { max_depth: 0, ..Default::default() };
        let t = train_tree(&x, &[1.0, 0.0, 1.0], &params, TreeMode::Classification);
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(t.predict_class(&[5.0]), 1);
    }

    #[test]
    fn min_samples_leaf_is_respected() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect();
        let params = TreeParams { max_depth: 5, min_samples_leaf: 3, max_features: None };
        let rows: Vec<usize> = (0..10).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (_, leaves) = TreeBuilder::new(&x, &y, &params, TreeMode::Classification, &mut rng).build(rows);
        assert!(leaves.iter().all(|(_, r)| r.len() >= 3));
    }

    #[test]
    fn regression_fits_step() {
        let x: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64]).collect();
        let y = [1.0, 1.0, 1.0, 1.0, 5.0, 5.0, 5.0, 5.0];
        let params = TreeParams { max_depth: 1, ..Default::default() };
        let t = train_tree(&x, &y, &params, TreeMode::Regression);
        assert_eq!(t.nodes[0], Node::Split { feature: 0, threshold: 3.5, left: 1, right: 2 });
        assert_eq!(t.predict_value(&[0.0]), 1.0);
        assert_eq!(t.predict_value(&[9.0]), 5.0);
    }

    #[test]
    fn ties_prefer_lowest_feature() {
        // both features separate the classes perfectly
        let x = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
        let t = train_tree(&x, &[0.0, 1.0], &TreeParams::default(), TreeMode::Classification);
        assert!(matches!(t.nodes[0], Node::Split { feature: 0, .. }));
        assert_eq!(t.depth(), 1);
        assert_eq!(t.leaf_count(), 2);
    }

    #[test]
    fn adjacent_floats_split_correctly() {
        let a = 1.0f64;
        let b = f64::from_bits(a.to_bits() + 1);
        let x = vec![vec![a], vec![b]];
        let t = train_tree(&x, &[0.0, 1.0], &TreeParams::default(), TreeMode::Classification);
        assert_eq!(t.predict_class(&[a]), 0);
        assert_eq!(t.predict_class(&[b]), 1);
    }
}
