//! CART regression tree with weighted squared-error splits.
//!
//! Rows go left when `x[feature] <= threshold`, and the threshold is the
//! largest left-side training value. Split selection therefore depends only
//! on the rank order of each feature, so strictly increasing rescaling of a
//! column (applied to training and query rows alike) leaves predictions unchanged.

use super::Predictor;
use crate::matrix::Matrix;

/// A split node's feature and its impurity reduction
/// (parent weighted SSE minus the children's).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf {
        value: f64,
    },
    Internal {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        gain: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    nodes: Vec<Node>,
    n_features: usize,
}

impl RegressionTree {
    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn splits(&self) -> Vec<Split> {
        self.nodes
            .iter()
            .filter_map(|n| match *n {
                Node::Internal { feature, gain, .. } => Some(Split { feature, gain }),
                Node::Leaf { .. } => None,
            })
            .collect()
    }

    pub fn raw_importance(&self) -> Vec<f64> {
        let mut imp = vec![0.0; self.n_features];
        for s in self.splits() {
            imp[s.feature] += s.gain;
        }
        imp
    }
}

impl Predictor for RegressionTree {
    fn predict_one(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { value } => return value,
                Node::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => at = if x[feature] <= threshold { left } else { right },
            }
        }
    }
}

/// Row indices sorted by each feature (ties by row index).
#[derive(Debug, Clone)]
pub(crate) struct Presorted {
    per_feature: Vec<Vec<u32>>,
}

impl Presorted {
    pub(crate) fn new(x: &Matrix) -> Self {
        let per_feature = (0..x.ncols())
            .map(|f| {
                let mut idx: Vec<u32> = (0..x.nrows() as u32).collect();
                idx.sort_by(|&a, &b| {
                    x.get(a as usize, f)
                        .total_cmp(&x.get(b as usize, f))
                        .then(a.cmp(&b))
                });
                idx
            })
            .collect();
        Presorted { per_feature }
    }

    /// Rows ordered by the first feature.
    pub(crate) fn canonical_order(&self) -> &[u32] {
        self.per_feature.first().map_or(&[], Vec::as_slice)
    }
}

struct Grower<'a> {
    x: &'a Matrix,
    target: &'a [f64],
    w: &'a [f64],
    max_depth: usize,
    nodes: Vec<Node>,
    goes_left: Vec<bool>,
}

impl Grower<'_> {
    fn grow(&mut self, lists: Vec<Vec<u32>>, depth: usize) -> usize {
        let (mut tw, mut ts) = (0.0, 0.0);
        for &r in &lists[0] {
            let r = r as usize;
            tw += self.w[r];
            ts += self.w[r] * self.target[r];
        }
        let value = if tw > 0.0 { ts / tw } else { 0.0 };
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { value });
        if depth >= self.max_depth || lists[0].len() < 2 || !(tw > 0.0) {
            return id;
        }
        let (mut sse, mut scale) = (0.0, 0.0);
        for &r in &lists[0] {
            let r = r as usize;
            sse += self.w[r] * (self.target[r] - value).powi(2);
            scale += self.w[r] * self.target[r].powi(2);
        }
        if sse <= 1e-20 * scale {
            return id;
        }

        let mut best: Option<(usize, f64, f64)> = None;
        for (f, list) in lists.iter().enumerate() {
            let (mut wl, mut sl) = (0.0, 0.0);
            for p in 0..list.len() - 1 {
                let r = list[p] as usize;
                wl += self.w[r];
                sl += self.w[r] * self.target[r];
                let xv = self.x.get(r, f);
                if xv == self.x.get(list[p + 1] as usize, f) {
                    continue;
                }
                let wr = tw - wl;
                if !(wl > 0.0 && wr > 0.0) {
                    continue;
                }
                let diff = sl / wl - (ts - sl) / wr;
                let gain = wl * wr / tw * diff * diff;
                if best.is_none_or(|b| gain > b.2) {
                    best = Some((f, xv, gain));
                }
            }
        }
        let Some((feature, threshold, gain)) = best else {
            return id;
        };
        if !(gain > 1e-12 * sse) {
            return id;
        }

        for &r in &lists[0] {
            self.goes_left[r as usize] = self.x.get(r as usize, feature) <= threshold;
        }
        let mut left_lists = Vec::with_capacity(lists.len());
        let mut right_lists = Vec::with_capacity(lists.len());
        for list in &lists {
            let (l, r): (Vec<u32>, Vec<u32>) =
                list.iter().partition(|&&r| self.goes_left[r as usize]);
            left_lists.push(l);
            right_lists.push(r);
        }
        drop(lists);
        let left = self.grow(left_lists, depth + 1);
        let right = self.grow(right_lists, depth + 1);
        self.nodes[id] = Node::Internal {
            feature,
            threshold,
            left,
            right,
            gain,
        };
        id
    }
}

/// Grows a tree over the rows selected by `mask` (all rows when `None`).
pub(crate) fn grow_tree(
    x: &Matrix,
    sorted: &Presorted,
    mask: Option<&[bool]>,
    target: &[f64],
    w: &[f64],
    max_depth: usize,
) -> RegressionTree {
    let lists: Vec<Vec<u32>> = sorted
        .per_feature
        .iter()
        .map(|l| match mask {
            Some(m) => l.iter().copied().filter(|&r| m[r as usize]).collect(),
            None => l.clone(),
        })
        .collect();
    let mut g = Grower {
        x,
        target,
        w,
        max_depth,
        nodes: Vec::new(),
        goes_left: vec![false; x.nrows()],
    };
    if lists.is_empty() || lists[0].is_empty() {
        return RegressionTree {
            nodes: vec![Node::Leaf { value: 0.0 }],
            n_features: x.ncols(),
        };
    }
    g.grow(lists, 0);
    RegressionTree {
        nodes: g.nodes,
        n_features: x.ncols(),
    }
}

/// Fits a depth-limited regression tree.
pub fn fit_tree(x: &Matrix, y: &[f64], w: &[f64], max_depth: usize) -> RegressionTree {
    let sorted = Presorted::new(x);
    grow_tree(x, &sorted, None, y, w, max_depth)
}
