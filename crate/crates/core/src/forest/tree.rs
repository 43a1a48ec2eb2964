use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Flat node record. Leaves have `feature == -1` and no children.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub feature: i64,
    pub threshold: f64,
    pub left: i64,
    pub right: i64,
    /// Training rows per class that reached this leaf (empty for splits).
    pub leaf_counts: Vec<u32>,
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        self.feature < 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<TreeNode>,
}

pub(crate) struct GrowParams {
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    pub max_features: usize,
    pub n_classes: usize,
}

struct Split {
    impurity: f64,
    feature: usize,
    threshold: f64,
}

impl Split {
    /// Lower impurity wins; ties go to the lower feature, then the lower threshold.
    fn better_than(&self, other: &Split) -> bool {
        (self.impurity, self.feature, self.threshold) < (other.impurity, other.feature, other.threshold)
    }
}

impl DecisionTree {
    /// Grows a tree on `samples` (row indices, repeats allowed).
    pub(crate) fn grow<R: Rng + ?Sized>(
        x: &[Vec<f64>],
        y: &[usize],
        samples: Vec<usize>,
        params: &GrowParams,
        rng: &mut R,
    ) -> DecisionTree {
        let n_features = x.first().map_or(0, Vec::len);
        let mut nodes: Vec<TreeNode> = Vec::new();
        // (node index, samples, depth)
        let mut stack = vec![(0usize, samples, 0usize)];
        nodes.push(leaf(&[], y, params.n_classes));
        while let Some((id, idx, depth)) = stack.pop() {
            let counts = class_counts(&idx, y, params.n_classes);
            let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
            let depth_ok = params.max_depth.is_none_or(|d| depth < d);
            let split = if !pure && depth_ok && idx.len() >= 2 * params.min_leaf {
                best_split(x, y, &idx, n_features, params, rng)
            } else {
                None
            };
            let Some(split) = split else {
                nodes[id] = leaf(&idx, y, params.n_classes);
                continue;
            };
            let (left, right): (Vec<usize>, Vec<usize>) =
                idx.iter().partition(|&&i| x[i][split.feature] <= split.threshold);
            let (l, r) = (nodes.len(), nodes.len() + 1);
            nodes.push(leaf(&[], y, params.n_classes));
            nodes.push(leaf(&[], y, params.n_classes));
            nodes[id] = TreeNode {
                feature: split.feature as i64,
                threshold: split.threshold,
                left: l as i64,
                right: r as i64,
                leaf_counts: Vec::new(),
            };
            stack.push((r, right, depth + 1));
            stack.push((l, left, depth + 1));
        }
        DecisionTree { nodes }
    }

    pub fn leaf_for(&self, row: &[f64]) -> &TreeNode {
        let mut node = &self.nodes[0];
        while !node.is_leaf() {
            let next = if row[node.feature as usize] <= node.threshold {
                node.left
            } else {
                node.right
            };
            node = &self.nodes[next as usize];
        }
        node
    }

    /// Class frequencies at the leaf reached by `row`.
    pub fn predict_proba(&self, row: &[f64]) -> Vec<f64> {
        let counts = &self.leaf_for(row).leaf_counts;
        let total: u32 = counts.iter().sum();
        counts.iter().map(|&c| c as f64 / total as f64).collect()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], i: usize) -> usize {
            let n = &nodes[i];
            if n.is_leaf() {
                0
            } else {
                1 + walk(nodes, n.left as usize).max(walk(nodes, n.right as usize))
            }
        }
        walk(&self.nodes, 0)
    }
}

fn class_counts(idx: &[usize], y: &[usize], n_classes: usize) -> Vec<u32> {
    let mut counts = vec![0u32; n_classes];
    for &i in idx {
        counts[y[i]] += 1;
    }
    counts
}

fn leaf(idx: &[usize], y: &[usize], n_classes: usize) -> TreeNode {
    TreeNode {
        feature: -1,
        threshold: 0.0,
        left: -1,
        right: -1,
        leaf_counts: class_counts(idx, y, n_classes),
    }
}

fn gini_sum(counts: &[u32], n: u32) -> f64 {
    // n * gini = n - sum(c^2)/n
    let n = n as f64;
    n - counts.iter().map(|&c| (c as f64) * (c as f64)).sum::<f64>() / n
}

/// Best split over a random feature order. Features are visited until
/// `max_features` non-constant ones have been examined and a valid split
/// exists.
fn best_split<R: Rng + ?Sized>(
    x: &[Vec<f64>],
    y: &[usize],
    idx: &[usize],
    n_features: usize,
    params: &GrowParams,
    rng: &mut R,
) -> Option<Split> {
    let mut order: Vec<usize> = (0..n_features).collect();
    order.shuffle(rng);
    let n = idx.len();
    let mut best: Option<Split> = None;
    let mut examined = 0;
    let mut sorted: Vec<(f64, usize)> = Vec::with_capacity(n);
    for &f in &order {
        if examined >= params.max_features && best.is_some() {
            break;
        }
        sorted.clear();
        sorted.extend(idx.iter().map(|&i| (x[i][f], y[i])));
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        if sorted[0].0 == sorted[n - 1].0 {
            continue;
        }
        examined += 1;
        let mut left = vec![0u32; params.n_classes];
        let mut right = class_counts(idx, y, params.n_classes);
        for k in 0..n - 1 {
            let c = sorted[k].1;
            left[c] += 1;
            right[c] -= 1;
            let (lo, hi) = (sorted[k].0, sorted[k + 1].0);
            let n_left = k + 1;
            if lo == hi || n_left < params.min_leaf || n - n_left < params.min_leaf {
                continue;
            }
            let impurity = (gini_sum(&left, n_left as u32) + gini_sum(&right, (n - n_left) as u32)) / n as f64;
            let mut threshold = lo + (hi - lo) / 2.0;
            if threshold >= hi {
                threshold = lo;
            }
            let cand = Split {
                impurity,
                feature: f,
                threshold,
            };
            if best.as_ref().is_none_or(|b| cand.better_than(b)) {
                best = Some(cand);
            }
        }
    }
    best
}
