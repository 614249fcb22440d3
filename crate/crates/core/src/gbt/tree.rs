//! Exact greedy growth of one second-order regression tree.
//!
//! Rows are presorted once per feature. Each depth level is grown with one
//! pass over every feature's sorted order, accumulating gradient statistics
//! for all open nodes of that level at once.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::GbtConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum TreeNode {
    /// Rows with `x[feature] < threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        gain: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf { weight: f64 },
}

impl TreeNode {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { weight } => return *weight,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => node = if x[*feature] < *threshold { left } else { right },
            }
        }
    }

    /// Visits every internal node as `(feature, threshold, gain)`.
    pub fn for_each_split(&self, f: &mut impl FnMut(usize, f64, f64)) {
        if let TreeNode::Split {
            feature,
            threshold,
            gain,
            left,
            right,
        } = self
        {
            f(*feature, *threshold, *gain);
            left.for_each_split(f);
            right.for_each_split(f);
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

/// Closed-form split gain of the regularized second-order objective.
pub fn split_gain(gl: f64, hl: f64, gr: f64, hr: f64, lambda: f64, gamma: f64) -> f64 {
    let score = |g: f64, h: f64| g * g / (h + lambda);
    0.5 * (score(gl, hl) + score(gr, hr) - score(gl + gr, hl + hr)) - gamma
}

/// Whether `gain` strictly beats `best`. Gains within a relative 1e-12 count
/// as ties, so rounding in the running sums cannot reorder equal splits.
pub fn gain_beats(gain: f64, best: f64) -> bool {
    gain > best + 1e-12 * gain.abs().max(best.abs())
}

/// Optimal leaf weight `-G / (H + lambda)` before shrinkage.
pub fn leaf_weight(g: f64, h: f64, lambda: f64) -> f64 {
    if h + lambda > 0.0 {
        -g / (h + lambda)
    } else {
        0.0
    }
}

/// Column-major features with per-feature row orders.
pub(crate) struct Presorted {
    pub n_rows: usize,
    /// `sorted[f]` holds `(value, row)` ascending by value, then row.
    sorted: Vec<Vec<(f64, u32)>>,
    columns: Vec<Vec<f64>>,
}

impl Presorted {
    pub fn new(values: &ndarray::Array2<f64>) -> Self {
        let columns: Vec<Vec<f64>> = values.columns().into_iter().map(|c| c.to_vec()).collect();
        let sorted = columns
            .iter()
            .map(|col| {
                let mut s: Vec<(f64, u32)> =
                    col.iter().enumerate().map(|(i, &v)| (v, i as u32)).collect();
                s.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                s
            })
            .collect();
        Presorted {
            n_rows: values.nrows(),
            sorted,
            columns,
        }
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    gain: f64,
    threshold: f64,
    gl: f64,
    hl: f64,
}

enum BuildNode {
    Open { g: f64, h: f64 },
    Leaf { weight: f64 },
    Split {
        feature: usize,
        threshold: f64,
        gain: f64,
        left: usize,
        right: usize,
    },
}

const NO_SLOT: u32 = u32::MAX;

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m > a && m <= b {
        m
    } else {
        b
    }
}

/// Best split of every open slot along one feature. Ties keep the lowest
/// threshold.
#[allow(clippy::too_many_arguments)]
fn scan_feature(
    sorted: &[(f64, u32)],
    node_slot: &[u32],
    in_sample: &[bool],
    grad: &[f64],
    hess: &[f64],
    totals: &[(f64, f64)],
    cfg: &GbtConfig,
) -> Vec<Option<Candidate>> {
    let n_slots = totals.len();
    let mut gl = vec![0.0; n_slots];
    let mut hl = vec![0.0; n_slots];
    let mut last: Vec<Option<f64>> = vec![None; n_slots];
    let mut best: Vec<Option<Candidate>> = vec![None; n_slots];
    for &(v, r) in sorted {
        let r = r as usize;
        if !in_sample[r] {
            continue;
        }
        let slot = node_slot[r];
        if slot == NO_SLOT {
            continue;
        }
        let s = slot as usize;
        if let Some(prev) = last[s] {
            if v > prev {
                let (g, h) = totals[s];
                let (gr, hr) = (g - gl[s], h - hl[s]);
                if hl[s] >= cfg.min_child_weight
                    && hr >= cfg.min_child_weight
                    && hl[s] + cfg.lambda > 0.0
                    && hr + cfg.lambda > 0.0
                {
                    let gain = split_gain(gl[s], hl[s], gr, hr, cfg.lambda, cfg.gamma);
                    if best[s].is_none_or(|b| gain_beats(gain, b.gain)) {
                        best[s] = Some(Candidate {
                            gain,
                            threshold: midpoint(prev, v),
                            gl: gl[s],
                            hl: hl[s],
                        });
                    }
                }
            }
        }
        gl[s] += grad[r];
        hl[s] += hess[r];
        last[s] = Some(v);
    }
    best
}

pub(crate) struct GrownTree {
    pub root: TreeNode,
    /// Shrunken leaf weight reached by every row (sampled or not).
    pub row_output: Vec<f64>,
}

/// Grows one tree on rows flagged in `in_sample`. Leaf weights are scaled by
/// the learning rate.
pub(crate) fn grow_tree(
    data: &Presorted,
    grad: &[f64],
    hess: &[f64],
    in_sample: &[bool],
    cfg: &GbtConfig,
) -> GrownTree {
    let n = data.n_rows;
    let (g0, h0) = (0..n)
        .filter(|&r| in_sample[r])
        .fold((0.0, 0.0), |(g, h), r| (g + grad[r], h + hess[r]));
    let mut nodes = vec![BuildNode::Open { g: g0, h: h0 }];
    let mut node_of = vec![0u32; n];
    let mut open: Vec<usize> = vec![0];

    for _depth in 0..cfg.max_depth {
        if open.is_empty() {
            break;
        }
        let mut slot_of_node = vec![NO_SLOT; nodes.len()];
        for (slot, &id) in open.iter().enumerate() {
            slot_of_node[id] = slot as u32;
        }
        let node_slot: Vec<u32> = node_of.iter().map(|&nd| slot_of_node[nd as usize]).collect();
        let totals: Vec<(f64, f64)> = open
            .iter()
            .map(|&id| match nodes[id] {
                BuildNode::Open { g, h } => (g, h),
                _ => unreachable!("open list holds open nodes"),
            })
            .collect();

        let per_feature: Vec<Vec<Option<Candidate>>> = data
            .sorted
            .par_iter()
            .map(|sorted| scan_feature(sorted, &node_slot, in_sample, grad, hess, &totals, cfg))
            .collect();

        // Lowest feature index wins ties.
        let mut chosen: Vec<Option<(usize, Candidate)>> = vec![None; open.len()];
        for (f, cands) in per_feature.iter().enumerate() {
            for (s, c) in cands.iter().enumerate() {
                if let Some(c) = c {
                    if c.gain > 0.0 && chosen[s].is_none_or(|(_, b)| gain_beats(c.gain, b.gain)) {
                        chosen[s] = Some((f, *c));
                    }
                }
            }
        }

        let mut next_open = Vec::new();
        let mut split_of_node: Vec<Option<(usize, f64, usize, usize)>> = vec![None; nodes.len()];
        for (s, &id) in open.iter().enumerate() {
            let (g, h) = totals[s];
            match chosen[s] {
                Some((feature, c)) => {
                    let left = nodes.len();
                    nodes.push(BuildNode::Open { g: c.gl, h: c.hl });
                    let right = nodes.len();
                    nodes.push(BuildNode::Open {
                        g: g - c.gl,
                        h: h - c.hl,
                    });
                    nodes[id] = BuildNode::Split {
                        feature,
                        threshold: c.threshold,
                        gain: c.gain,
                        left,
                        right,
                    };
                    split_of_node[id] = Some((feature, c.threshold, left, right));
                    next_open.push(left);
                    next_open.push(right);
                }
                None => {
                    nodes[id] = BuildNode::Leaf {
                        weight: leaf_weight(g, h, cfg.lambda) * cfg.learning_rate,
                    }
                }
            }
        }
        for (r, nd) in node_of.iter_mut().enumerate() {
            if let Some((feature, threshold, left, right)) = split_of_node[*nd as usize] {
                *nd = if data.columns[feature][r] < threshold {
                    left as u32
                } else {
                    right as u32
                };
            }
        }
        open = next_open;
    }
    for node in nodes.iter_mut() {
        if let BuildNode::Open { g, h } = *node {
            *node = BuildNode::Leaf {
                weight: leaf_weight(g, h, cfg.lambda) * cfg.learning_rate,
            };
        }
    }

    let row_output = node_of
        .iter()
        .map(|&nd| match nodes[nd as usize] {
            BuildNode::Leaf { weight } => weight,
            _ => unreachable!("rows end in leaves"),
        })
        .collect();
    GrownTree {
        root: nest(&nodes, 0),
        row_output,
    }
}

fn nest(nodes: &[BuildNode], id: usize) -> TreeNode {
    match nodes[id] {
        BuildNode::Leaf { weight } => TreeNode::Leaf { weight },
        BuildNode::Split {
            feature,
            threshold,
            gain,
            left,
            right,
        } => TreeNode::Split {
            feature,
            threshold,
            gain,
            left: Box::new(nest(nodes, left)),
            right: Box::new(nest(nodes, right)),
        },
        BuildNode::Open { .. } => unreachable!("open nodes are closed before nesting"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn cfg(depth: usize) -> GbtConfig {
        GbtConfig {
            max_depth: depth,
            learning_rate: 1.0,
            min_child_weight: 0.0,
            ..GbtConfig::default()
        }
    }

    /// Exhaustive search over every midpoint of one feature.
    fn brute_best(xs: &[f64], g: &[f64], h: &[f64], c: &GbtConfig) -> Option<(f64, f64)> {
        let mut vals: Vec<f64> = xs.to_vec();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        let mut best: Option<(f64, f64)> = None;
        for w in vals.windows(2) {
            let t = midpoint(w[0], w[1]);
            let (mut gl, mut hl, mut gr, mut hr) = (0.0, 0.0, 0.0, 0.0);
            for i in 0..xs.len() {
                if xs[i] < t {
                    gl += g[i];
                    hl += h[i];
                } else {
                    gr += g[i];
                    hr += h[i];
                }
            }
            if hl < c.min_child_weight || hr < c.min_child_weight {
                continue;
            }
            let gain = split_gain(gl, hl, gr, hr, c.lambda, c.gamma);
            if gain > 0.0 && best.is_none_or(|(bg, _)| gain_beats(gain, bg)) {
                best = Some((gain, t));
            }
        }
        best
    }

    #[test]
    fn first_split_matches_enumeration_on_four_points() {
        let xs = [0.3, 1.7, -2.0, 0.9];
        let g = [0.4, -0.6, 0.5, -0.2];
        let h = [0.24, 0.24, 0.25, 0.16];
        let data = Presorted::new(&Array2::from_shape_vec((4, 1), xs.to_vec()).unwrap());
        let c = cfg(1);
        let grown = grow_tree(&data, &g, &h, &[true; 4], &c);
        let (gain, t) = brute_best(&xs, &g, &h, &c).unwrap();
        match grown.root {
            TreeNode::Split { feature, threshold, gain: got, .. } => {
                assert_eq!(feature, 0);
                assert_eq!(threshold, t);
                assert!((got - gain).abs() < 1e-12);
            }
            TreeNode::Leaf { .. } => panic!("expected a split"),
        }
    }

    #[test]
    fn gain_equals_objective_reduction() {
        // Structure score of a leaf at its optimal weight.
        let obj = |g: f64, h: f64, lambda: f64, gamma: f64| {
            let w = -g / (h + lambda);
            g * w + 0.5 * (h + lambda) * w * w + gamma
        };
        let (gl, hl, gr, hr, lambda, gamma) = (1.3, 0.7, -2.1, 1.9, 1.0, 0.25);
        let reduction = obj(gl + gr, hl + hr, lambda, gamma)
            - obj(gl, hl, lambda, gamma)
            - obj(gr, hr, lambda, gamma);
        assert!((reduction - split_gain(gl, hl, gr, hr, lambda, gamma)).abs() < 1e-12);
    }

    #[test]
    fn constant_feature_yields_leaf() {
        let data = Presorted::new(&Array2::from_elem((5, 1), 2.0));
        let grown = grow_tree(&data, &[1.0; 5], &[1.0; 5], &[true; 5], &cfg(3));
        assert!(matches!(grown.root, TreeNode::Leaf { .. }));
        let w = leaf_weight(5.0, 5.0, 1.0);
        assert!(grown.row_output.iter().all(|&o| o == w));
    }

    #[test]
    fn midpoint_stays_above_lower_value() {
        let a = 1.0f64;
        let b = f64::from_bits(a.to_bits() + 1);
        let m = midpoint(a, b);
        assert!(a < m && m <= b);
    }
    proptest::proptest! {
        #[test]
        fn first_split_matches_enumeration_on_small_sets(
            rows in proptest::collection::vec((-4i32..5, -1.0f64..1.0, 0.05f64..1.0), 2..=8),
            lambda in 0.0f64..2.0,
        ) {
            let xs: Vec<f64> = rows.iter().map(|r| f64::from(r.0) * 0.5).collect();
            let g: Vec<f64> = rows.iter().map(|r| r.1).collect();
            let h: Vec<f64> = rows.iter().map(|r| r.2).collect();
            let c = GbtConfig { lambda, ..cfg(1) };
            let n = xs.len();
            let data = Presorted::new(&Array2::from_shape_vec((n, 1), xs.clone()).unwrap());
            let grown = grow_tree(&data, &g, &h, &vec![true; n], &c);
            match (brute_best(&xs, &g, &h, &c), grown.root) {
                (None, TreeNode::Leaf { .. }) => {}
                (Some((gain, t)), TreeNode::Split { feature, threshold, gain: got, .. }) => {
                    proptest::prop_assert_eq!(feature, 0);
                    proptest::prop_assert_eq!(threshold, t);
                    proptest::prop_assert!((got - gain).abs() < 1e-12);
                }
                (want, got) => proptest::prop_assert!(false, "oracle {:?}, tree {:?}", want, got),
            }
        }
    }
}
