//! Isolation Forest anomaly scoring.
//!
//! Each tree isolates a random subsample of `psi` rows by recursively
//! picking a feature (among those with nonzero spread at the node) and a split
//! value drawn uniformly between the feature's minimum and maximum. A point's
//! score is `s = 2^(−E[h(x)] / c(psi))`, where `h` is its path length and `c`
//! the average unsuccessful-search length of a binary search tree.
//!
//! The decision value reported per row is `0.5 − s`: negative values are more
//! anomalous than the `s = 0.5` reference.

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::FeatureMatrix;
use crate::seed;

const FOREST_FORMAT: &str = "nidsgan.isoforest";
const FOREST_VERSION: u32 = 1;
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Average path length of an unsuccessful search among `n` keys.
pub fn c(n: usize) -> Result<f64> {
    match n {
        0 => Err(Error::invalid("c(n) is defined for n >= 1")),
        1 => Ok(0.0),
        2 => Ok(1.0),
        _ => {
            let nf = n as f64;
            Ok(2.0 * harmonic(n - 1) - 2.0 * (nf - 1.0) / nf)
        }
    }
}

/// `H(i)`: exact sum up to 1000 terms, `ln i + γ` above.
fn harmonic(i: usize) -> f64 {
    if i <= 1000 {
        (1..=i).map(|k| 1.0 / k as f64).sum()
    } else {
        (i as f64).ln() + EULER_GAMMA
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum IsoNode {
    /// Rows with `x[feature] < value` go left.
    Internal {
        feature: usize,
        value: f64,
        left: usize,
        right: usize,
    },
    External { size: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsoTree {
    /// Arena; the root is node 0.
    pub nodes: Vec<IsoNode>,
    pub height_limit: usize,
}

impl IsoTree {
    fn build(rows: &[Vec<f64>], height_limit: usize, rng: &mut impl Rng) -> IsoTree {
        let mut tree = IsoTree {
            nodes: Vec::new(),
            height_limit,
        };
        let idx: Vec<usize> = (0..rows.len()).collect();
        tree.grow(rows, idx, 0, rng);
        tree
    }

    fn grow(&mut self, rows: &[Vec<f64>], idx: Vec<usize>, depth: usize, rng: &mut impl Rng) -> usize {
        let id = self.nodes.len();
        self.nodes.push(IsoNode::External { size: idx.len() });
        if idx.len() <= 1 || depth >= self.height_limit {
            return id;
        }
        let n_features = rows[idx[0]].len();
        let spreads: Vec<(usize, f64, f64)> = (0..n_features)
            .filter_map(|f| {
                let (lo, hi) = idx.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                    (lo.min(rows[i][f]), hi.max(rows[i][f]))
                });
                (hi > lo).then_some((f, lo, hi))
            })
            .collect();
        if spreads.is_empty() {
            return id;
        }
        let (feature, lo, hi) = spreads[rng.random_range(0..spreads.len())];
        let value = loop {
            let v = rng.random_range(lo..hi);
            if v > lo {
                break v;
            }
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx.into_iter().partition(|&i| rows[i][feature] < value);
        let left = self.grow(rows, l, depth + 1, rng);
        let right = self.grow(rows, r, depth + 1, rng);
        self.nodes[id] = IsoNode::Internal {
            feature,
            value,
            left,
            right,
        };
        id
    }

    pub fn depth(&self) -> usize {
        fn go(t: &IsoTree, id: usize) -> usize {
            match t.nodes[id] {
                IsoNode::External { .. } => 0,
                IsoNode::Internal { left, right, .. } => 1 + go(t, left).max(go(t, right)),
            }
        }
        go(self, 0)
    }
}

/// Edges from the root to `x`'s external node plus `c(size)` for that node.
pub fn path_length(tree: &IsoTree, x: &[f64]) -> f64 {
    let mut id = 0;
    let mut edges = 0.0;
    loop {
        match tree.nodes[id] {
            IsoNode::Internal {
                feature,
                value,
                left,
                right,
            } => {
                id = if x[feature] < value { left } else { right };
                edges += 1.0;
            }
            IsoNode::External { size } => {
                return edges + if size > 1 { c(size).expect("size >= 2") } else { 0.0 };
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsoForest {
    pub format: String,
    pub version: u32,
    pub trees: Vec<IsoTree>,
    pub psi: usize,
    pub n_features: usize,
    pub seed: u64,
}

impl IsoForest {
    pub fn t(&self) -> usize {
        self.trees.len()
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_features {
            return Err(Error::LayoutMismatch {
                expected: self.n_features,
                actual: x.len(),
            });
        }
        Ok(())
    }

    pub fn mean_path_length(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        let total: f64 = self.trees.iter().map(|t| path_length(t, x)).sum();
        Ok(total / self.trees.len() as f64)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: IsoForest = serde_json::from_str(text)?;
        if f.format != FOREST_FORMAT || f.version != FOREST_VERSION {
            return Err(Error::invalid(format!(
                "unsupported forest document {} v{}",
                f.format, f.version
            )));
        }
        Ok(f)
    }
}

/// Default subsample size: 256, or every row when there are fewer.
pub fn default_psi(rows: usize) -> usize {
    rows.min(256)
}

/// Builds `t` trees, each from its own seeded subsample of `psi` rows. Tree
/// `i` draws from a seed derived from `(seed, i)`, so trees can be built in
/// any order.
pub fn fit(x: &FeatureMatrix, t: usize, psi: usize, seed: u64) -> Result<IsoForest> {
    if t == 0 {
        return Err(Error::invalid("isolation forest needs at least one tree"));
    }
    if psi < 2 {
        return Err(Error::invalid("subsample size must be at least 2"));
    }
    if psi > x.n_rows() {
        return Err(Error::invalid(format!(
            "subsample size {psi} exceeds {} rows",
            x.n_rows()
        )));
    }
    let height_limit = (psi as f64).log2().ceil() as usize;
    let trees = (0..t)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed::rng(seed::derive(seed, i as u64));
            let picked = sample(&mut rng, x.n_rows(), psi);
            let rows: Vec<Vec<f64>> = picked.iter().map(|r| x.values.row(r).to_vec()).collect();
            IsoTree::build(&rows, height_limit, &mut rng)
        })
        .collect();
    Ok(IsoForest {
        format: FOREST_FORMAT.into(),
        version: FOREST_VERSION,
        trees,
        psi,
        n_features: x.n_features(),
        seed,
    })
}

/// `2^(−mean_path / c(psi))`.
pub fn score_from_path(mean_path: f64, psi: usize) -> f64 {
    let cn = c(psi).expect("psi >= 2");
    2f64.powf(-mean_path / cn)
}

pub fn score(f: &IsoForest, x: &[f64]) -> Result<f64> {
    Ok(score_from_path(f.mean_path_length(x)?, f.psi))
}

pub fn decision_value(score: f64) -> f64 {
    0.5 - score
}

pub fn score_matrix(f: &IsoForest, x: &FeatureMatrix) -> Result<Vec<f64>> {
    if x.n_features() != f.n_features {
        return Err(Error::LayoutMismatch {
            expected: f.n_features,
            actual: x.n_features(),
        });
    }
    x.values
        .outer_iter()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|row| score(f, row.as_slice().expect("standard layout")))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassAnomaly {
    pub class: String,
    pub rows: usize,
    pub mean_score: f64,
    pub mean_decision: f64,
}

/// Per-class mean score and mean decision value, most anomalous class
/// (highest mean score) first. Classes without rows are omitted.
pub fn class_anomaly_ranking(f: &IsoForest, x: &FeatureMatrix) -> Result<Vec<ClassAnomaly>> {
    let scores = score_matrix(f, x)?;
    let k = x.n_classes();
    let mut sums = vec![0.0; k];
    let mut counts = vec![0usize; k];
    for (s, &cls) in scores.iter().zip(&x.class_ids) {
        sums[cls] += s;
        counts[cls] += 1;
    }
    let mut ranking: Vec<(usize, ClassAnomaly)> = (0..k)
        .filter(|&cls| counts[cls] > 0)
        .map(|cls| {
            let mean = sums[cls] / counts[cls] as f64;
            (
                cls,
                ClassAnomaly {
                    class: x.class_names[cls].clone(),
                    rows: counts[cls],
                    mean_score: mean,
                    mean_decision: decision_value(mean),
                },
            )
        })
        .collect();
    ranking.sort_by(|a, b| b.1.mean_score.total_cmp(&a.1.mean_score).then(a.0.cmp(&b.0)));
    Ok(ranking.into_iter().map(|(_, r)| r).collect())
}

pub fn ranking_csv(ranking: &[ClassAnomaly]) -> String {
    let mut s = String::from("class,mean_score,mean_decision\n");
    for r in ranking {
        s.push_str(&format!("{},{},{}\n", r.class, r.mean_score, r.mean_decision));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn matrix(values: Vec<f64>, cols: usize, classes: Vec<usize>, names: &[&str]) -> FeatureMatrix {
        let rows = values.len() / cols;
        FeatureMatrix::new(
            Array2::from_shape_vec((rows, cols), values).unwrap(),
            (0..cols).map(|i| format!("f{i}")).collect(),
            classes,
            names.iter().map(|s| s.to_string()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn c_boundaries_and_formula() {
        assert_eq!(c(1).unwrap(), 0.0);
        assert_eq!(c(2).unwrap(), 1.0);
        assert!(c(0).is_err());
        // Independent evaluation: harmonic sum accumulated in reverse.
        let h255: f64 = (1..=255).rev().map(|k| 1.0 / k as f64).sum();
        let expected = 2.0 * h255 - 2.0 * 255.0 / 256.0;
        assert!((c(256).unwrap() - expected).abs() < 1e-12);
        assert!((c(256).unwrap() - 10.248_689_925_634_562).abs() < 1e-9);
    }

    #[test]
    fn score_identities() {
        let cn = c(256).unwrap();
        assert_eq!(score_from_path(cn, 256), 0.5);
        assert!((score_from_path(1e-12, 256) - 1.0).abs() < 1e-12);
        assert!(score_from_path(3.0, 256) > score_from_path(4.0, 256));
    }

    #[test]
    fn identical_rows_give_single_external_node() {
        let x = matrix(vec![1.0, 2.0, 1.0, 2.0], 2, vec![0, 0], &["a"]);
        let f = fit(&x, 10, 2, 3).unwrap();
        for t in &f.trees {
            assert_eq!(t.nodes, vec![IsoNode::External { size: 2 }]);
            assert_eq!(path_length(t, &[1.0, 2.0]), c(2).unwrap());
        }
    }

    #[test]
    fn two_distinct_rows_have_depth_one() {
        let x = matrix(vec![0.0, 0.0, 1.0, 3.0], 2, vec![0, 0], &["a"]);
        let f = fit(&x, 20, 2, 11).unwrap();
        for t in &f.trees {
            assert_eq!(t.depth(), 1);
            assert_eq!(path_length(t, &[0.0, 0.0]), 1.0);
            assert_eq!(path_length(t, &[1.0, 3.0]), 1.0);
        }
    }

    #[test]
    fn tree_count_and_determinism() {
        let vals: Vec<f64> = (0..600).map(|i| ((i * 37) % 101) as f64).collect();
        let x = matrix(vals, 2, vec![0; 300], &["a"]);
        let f = fit(&x, 100, 256, 5).unwrap();
        assert_eq!(f.t(), 100);
        assert_eq!(f, fit(&x, 100, 256, 5).unwrap());
        assert_ne!(f, fit(&x, 100, 256, 6).unwrap());
    }

    #[test]
    fn psi_larger_than_rows_rejected() {
        let x = matrix(vec![0.0, 1.0, 2.0], 1, vec![0, 0, 0], &["a"]);
        assert!(fit(&x, 5, 4, 0).is_err());
        assert!(fit(&x, 5, 1, 0).is_err());
    }

    #[test]
    fn split_values_lie_strictly_inside_range() {
        let vals: Vec<f64> = (0..64).map(|i| (i as f64).sin()).collect();
        let x = matrix(vals, 1, vec![0; 64], &["a"]);
        let f = fit(&x, 30, 32, 2).unwrap();
        for t in &f.trees {
            for n in &t.nodes {
                if let IsoNode::Internal { value, .. } = n {
                    assert!(*value > -1.0 && *value < 1.0);
                }
            }
        }
    }

    #[test]
    fn layout_mismatch() {
        let x = matrix(vec![0.0, 1.0, 2.0], 1, vec![0, 0, 0], &["a"]);
        let f = fit(&x, 5, 2, 0).unwrap();
        assert!(score(&f, &[0.0, 1.0]).is_err());
    }
    /// Exact expected path length of `x` for 1-D points: the split value is
    /// uniform on `(min, max)`, so each gap is chosen with probability
    /// proportional to its width.
    fn enumerated_path(points: &[f64], x: f64, depth: usize, limit: usize) -> f64 {
        let n = points.len();
        if n <= 1 {
            return 0.0;
        }
        if depth >= limit {
            return c(n).unwrap();
        }
        let mut sorted = points.to_vec();
        sorted.sort_by(f64::total_cmp);
        let span = sorted[n - 1] - sorted[0];
        let mut expected = 1.0;
        for k in 0..n - 1 {
            let p = (sorted[k + 1] - sorted[k]) / span;
            let side: Vec<f64> = if x <= sorted[k] {
                sorted[..=k].to_vec()
            } else {
                sorted[k + 1..].to_vec()
            };
            expected += p * enumerated_path(&side, x, depth + 1, limit);
        }
        expected
    }

    #[test]
    fn four_point_path_lengths_match_enumeration() {
        let pts = [0.0, 1.0, 1.5, 6.0];
        let x = matrix(pts.to_vec(), 1, vec![0; 4], &["a"]);
        let f = fit(&x, 4000, 4, 17).unwrap();
        for &p in &pts {
            let oracle = enumerated_path(&pts, p, 0, 2);
            let mc = f.mean_path_length(&[p]).unwrap();
            assert!((mc - oracle).abs() / oracle < 0.02, "x={p}: forest {mc}, oracle {oracle}");
        }
    }

    #[test]
    fn planted_outlier_ranks_first() {
        use rand_distr::{Distribution, Normal};
        for s in 0..5u64 {
            let mut rng = seed::rng(100 + s);
            let noise = Normal::new(0.0, 1.0).unwrap();
            let mut vals: Vec<f64> = (0..2 * 300).map(|_| noise.sample(&mut rng)).collect();
            vals.extend([7.0, -7.0]);
            let x = matrix(vals, 2, vec![0; 301], &["a"]);
            let f = fit(&x, 100, 256, s).unwrap();
            let scores = score_matrix(&f, &x).unwrap();
            let top = (0..scores.len()).max_by(|&a, &b| scores[a].total_cmp(&scores[b])).unwrap();
            assert_eq!(top, 300, "seed {s}");
            assert!(scores[300] > 0.6);
        }
    }
}
