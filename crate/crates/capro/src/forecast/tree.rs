//! Leaf-wise regression tree used as the boosting base learner.
//!
//! Growth repeatedly splits the leaf with the largest squared-error
//! reduction until `num_leaves` is reached or no leaf at depth below
//! `max_depth` has a positive-gain split. Split search is exhaustive over
//! the unique values of each feature.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegressionTree {
    nodes: Vec<Node>,
}

struct Candidate {
    node: usize,
    rows: Vec<usize>,
    depth: u32,
    best: Option<BestSplit>,
}

struct BestSplit {
    gain: f64,
    feature: usize,
    threshold: f64,
}

const MIN_GAIN: f64 = 1e-12;

impl RegressionTree {
    /// Fit to `targets` over the rows of `features` (row-major). The tree
    /// has at most `num_leaves` leaves and depth at most `max_depth`.
    pub fn fit(features: &[Vec<f64>], targets: &[f64], max_depth: u32, num_leaves: u32) -> Self {
        assert_eq!(features.len(), targets.len());
        assert!(!features.is_empty());
        let all_rows: Vec<usize> = (0..targets.len()).collect();
        let mut nodes = vec![Node::Leaf { value: mean(targets, &all_rows) }];
        let mut candidates = vec![Candidate {
            node: 0,
            best: best_split(features, targets, &all_rows),
            rows: all_rows,
            depth: 0,
        }];
        let mut leaves = 1u32;
        while leaves < num_leaves {
            // leaf with the largest squared-error reduction; ties keep the
            // earliest-created node for determinism
            let pick = candidates
                .iter()
                .enumerate()
                .filter(|(_, c)| c.depth < max_depth && c.best.is_some())
                .max_by(|(ia, a), (ib, b)| {
                    let (ga, gb) = (a.best.as_ref().unwrap().gain, b.best.as_ref().unwrap().gain);
                    ga.total_cmp(&gb).then(ib.cmp(ia))
                })
                .map(|(i, _)| i);
            let Some(idx) = pick else { break };
            let cand = candidates.swap_remove(idx);
            let best = cand.best.unwrap();
            let (mut left_rows, mut right_rows) = (Vec::new(), Vec::new());
            for &r in &cand.rows {
                if features[r][best.feature] <= best.threshold {
                    left_rows.push(r);
                } else {
                    right_rows.push(r);
                }
            }
            let left = nodes.len();
            let right = nodes.len() + 1;
            nodes.push(Node::Leaf { value: mean(targets, &left_rows) });
            nodes.push(Node::Leaf { value: mean(targets, &right_rows) });
            nodes[cand.node] = Node::Split {
                feature: best.feature,
                threshold: best.threshold,
                left,
                right,
            };
            for (node, rows) in [(left, left_rows), (right, right_rows)] {
                candidates.push(Candidate {
                    node,
                    best: best_split(features, targets, &rows),
                    rows,
                    depth: cand.depth + 1,
                });
            }
            leaves += 1;
        }
        RegressionTree { nodes }
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return *value,
                Node::Split { feature, threshold, left, right } => {
                    i = if row[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn num_leaves(&self) -> u32 {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count() as u32
    }

    pub fn depth(&self) -> u32 {
        self.depth_from(0)
    }

    fn depth_from(&self, i: usize) -> u32 {
        match &self.nodes[i] {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + self.depth_from(*left).max(self.depth_from(*right)),
        }
    }
}

fn mean(targets: &[f64], rows: &[usize]) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    rows.iter().map(|&r| targets[r]).sum::<f64>() / rows.len() as f64
}

/// Exhaustive best split over unique values of every feature. Returns None
/// when no split reduces squared error. Ties keep the lowest feature index,
/// then the lowest threshold.
fn best_split(features: &[Vec<f64>], targets: &[f64], rows: &[usize]) -> Option<BestSplit> {
    if rows.len() < 2 {
        return None;
    }
    let n_features = features[rows[0]].len();
    let total_sum: f64 = rows.iter().map(|&r| targets[r]).sum();
    let total_sq: f64 = rows.iter().map(|&r| targets[r] * targets[r]).sum();
    let parent_sse = total_sq - total_sum * total_sum / rows.len() as f64;
    let mut best: Option<BestSplit> = None;
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(rows.len());
    for feature in 0..n_features {
        pairs.clear();
        pairs.extend(rows.iter().map(|&r| (features[r][feature], targets[r])));
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut left_sum = 0.0;
        let mut left_sq = 0.0;
        for i in 0..pairs.len() - 1 {
            left_sum += pairs[i].1;
            left_sq += pairs[i].1 * pairs[i].1;
            if pairs[i].0 == pairs[i + 1].0 {
                continue;
            }
            let nl = (i + 1) as f64;
            let nr = (pairs.len() - i - 1) as f64;
            let right_sum = total_sum - left_sum;
            let right_sq = total_sq - left_sq;
            let sse = (left_sq - left_sum * left_sum / nl) + (right_sq - right_sum * right_sum / nr);
            let gain = parent_sse - sse;
            if gain > MIN_GAIN && best.as_ref().map_or(true, |b| gain > b.gain) {
                best = Some(BestSplit {
                    gain,
                    feature,
                    threshold: (pairs[i].0 + pairs[i + 1].0) / 2.0,
                });
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_target_single_leaf() {
        let features: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let targets = vec![5.0; 10];
        let tree = RegressionTree::fit(&features, &targets, 6, 31);
        assert_eq!(tree.num_leaves(), 1);
        assert_eq!(tree.predict(&[3.0]), 5.0);
    }

    #[test]
    fn step_function_recovered_at_depth_one() {
        // feature < 0.5 -> 0, else -> 10; exhaustive split search oracle
        let features: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 / 19.0]).collect();
        let targets: Vec<f64> = features.iter().map(|f| if f[0] < 0.5 { 0.0 } else { 10.0 }).collect();
        let tree = RegressionTree::fit(&features, &targets, 1, 2);
        assert_eq!(tree.num_leaves(), 2);
        assert_eq!(tree.predict(&[0.2]), 0.0);
        assert_eq!(tree.predict(&[0.8]), 10.0);
    }

    #[test]
    fn respects_leaf_and_depth_bounds() {
        let features: Vec<Vec<f64>> = (0..200).map(|i| vec![(i % 17) as f64, (i % 13) as f64]).collect();
        let targets: Vec<f64> = (0..200).map(|i| ((i * 31) % 97) as f64).collect();
        for (depth, leaves) in [(2u32, 4u32), (3, 7), (6, 31)] {
            let tree = RegressionTree::fit(&features, &targets, depth, leaves);
            assert!(tree.num_leaves() <= leaves);
            assert!(tree.depth() <= depth);
        }
    }

    #[test]
    fn identical_features_differing_targets_predict_mean() {
        let features = vec![vec![1.0]; 4];
        let targets = vec![0.0, 2.0, 4.0, 6.0];
        let tree = RegressionTree::fit(&features, &targets, 6, 31);
        assert_eq!(tree.num_leaves(), 1);
        assert_eq!(tree.predict(&[1.0]), 3.0);
    }
}
