//! Multiclass gradient-boosted regression trees.
//!
//! Every boosting round fits one tree per class to the softmax
//! cross-entropy's gradient `g = p - y` and hessian `h = p (1 - p)`. Splits
//! maximize the regularized second-order gain
//!
//! ```text
//! gain = ½ [G_L²/(H_L+λ) + G_R²/(H_R+λ) − (G_L+G_R)²/(H_L+H_R+λ)] − γ
//! ```
//!
//! and leaves take the weight `−η G/(H+λ)`. Split search is exact over the
//! sorted distinct values of each feature; equal gains resolve to the lowest
//! feature index, then the lowest threshold.

pub mod loss;
mod tree;
mod tune;

use ndarray::Array2;
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::FeatureMatrix;
use crate::seed;

pub use tree::{gain_beats, leaf_weight, split_gain, TreeNode};
pub use tune::{tune, TrialRecord, TuneSpace};

const ENSEMBLE_FORMAT: &str = "nidsgan.ensemble";
const ENSEMBLE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GbtConfig {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    /// Minimum hessian sum in each child of a split.
    pub min_child_weight: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub subsample: f64,
    pub seed: u64,
}

impl Default for GbtConfig {
    fn default() -> Self {
        GbtConfig {
            n_rounds: 160,
            learning_rate: 0.3,
            max_depth: 6,
            min_child_weight: 1.0,
            lambda: 1.0,
            gamma: 0.0,
            subsample: 1.0,
            seed: 0,
        }
    }
}

impl GbtConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::invalid(format!("gbt: {what}")));
        if self.n_rounds == 0 {
            return bad("n_rounds must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad("learning_rate must be in (0, 1]");
        }
        if self.max_depth == 0 {
            return bad("max_depth must be positive");
        }
        if !(self.min_child_weight >= 0.0 && self.lambda >= 0.0 && self.gamma >= 0.0) {
            return bad("min_child_weight, lambda and gamma must be nonnegative");
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return bad("subsample must be in (0, 1]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassTree {
    pub class: usize,
    pub root: TreeNode,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureGain {
    pub total_gain: f64,
    pub splits: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedEnsemble {
    pub format: String,
    pub version: u32,
    pub feature_names: Vec<String>,
    pub class_names: Vec<String>,
    pub base_score: f64,
    pub config: GbtConfig,
    /// Boosting order: round-major, class-minor.
    pub trees: Vec<ClassTree>,
    pub gain_by_feature: Vec<FeatureGain>,
    /// Mean training cross-entropy after each round.
    pub loss_trace: Vec<f64>,
}

impl BoostedEnsemble {
    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn n_rounds(&self) -> usize {
        self.trees.len() / self.n_classes().max(1)
    }

    /// Raw per-class scores for one feature row.
    pub fn raw_scores(&self, x: &[f64]) -> Vec<f64> {
        let mut scores = vec![self.base_score; self.n_classes()];
        for t in &self.trees {
            scores[t.class] += t.root.predict(x);
        }
        scores
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: BoostedEnsemble = serde_json::from_str(text)?;
        if m.format != ENSEMBLE_FORMAT || m.version != ENSEMBLE_VERSION {
            return Err(Error::invalid(format!(
                "unsupported ensemble document {} v{}",
                m.format, m.version
            )));
        }
        Ok(m)
    }
}

fn mean_loss(scores: &[f64], labels: &[usize], k: usize) -> f64 {
    let total: f64 = labels
        .iter()
        .enumerate()
        .map(|(i, &y)| loss::softmax_loss(&scores[i * k..(i + 1) * k], y))
        .sum();
    total / labels.len() as f64
}

/// Trains the ensemble on every row of `x`.
pub fn train(x: &FeatureMatrix, cfg: &GbtConfig) -> Result<BoostedEnsemble> {
    cfg.validate()?;
    let n = x.n_rows();
    if n == 0 {
        return Err(Error::invalid("empty training set"));
    }
    let k = x.n_classes();
    let present = x.class_counts().iter().filter(|&&c| c > 0).count();
    if k < 2 || present < 2 {
        return Err(Error::invalid(
            "training data must contain at least two classes",
        ));
    }
    let data = tree::Presorted::new(&x.values);
    let labels = &x.class_ids;
    let base_score = 0.0;
    let mut scores = vec![base_score; n * k];
    let mut rng = seed::rng(cfg.seed);
    let mut trees = Vec::with_capacity(cfg.n_rounds * k);
    let mut gain_by_feature = vec![FeatureGain::default(); data.n_features()];
    let mut loss_trace = Vec::with_capacity(cfg.n_rounds);
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut in_sample = vec![true; n];

    for _round in 0..cfg.n_rounds {
        if cfg.subsample < 1.0 {
            let m = ((n as f64 * cfg.subsample).round() as usize).clamp(1, n);
            in_sample.iter_mut().for_each(|s| *s = false);
            for i in sample(&mut rng, n, m) {
                in_sample[i] = true;
            }
        }
        let probs: Vec<Vec<f64>> = (0..n)
            .map(|i| loss::softmax(&scores[i * k..(i + 1) * k]))
            .collect();
        let mut increments = Vec::with_capacity(k);
        for class in 0..k {
            for i in 0..n {
                let p = probs[i][class];
                grad[i] = p - if labels[i] == class { 1.0 } else { 0.0 };
                hess[i] = p * (1.0 - p);
            }
            let grown = tree::grow_tree(&data, &grad, &hess, &in_sample, cfg);
            grown.root.for_each_split(&mut |f, _, gain| {
                gain_by_feature[f].total_gain += gain;
                gain_by_feature[f].splits += 1;
            });
            trees.push(ClassTree {
                class,
                root: grown.root,
            });
            increments.push(grown.row_output);
        }
        for (class, inc) in increments.iter().enumerate() {
            for i in 0..n {
                scores[i * k + class] += inc[i];
            }
        }
        loss_trace.push(mean_loss(&scores, labels, k));
    }

    Ok(BoostedEnsemble {
        format: ENSEMBLE_FORMAT.into(),
        version: ENSEMBLE_VERSION,
        feature_names: x.feature_names.clone(),
        class_names: x.class_names.clone(),
        base_score,
        config: cfg.clone(),
        trees,
        gain_by_feature,
        loss_trace,
    })
}

fn check_layout(m: &BoostedEnsemble, x: &FeatureMatrix) -> Result<()> {
    if x.n_features() != m.n_features() {
        return Err(Error::LayoutMismatch {
            expected: m.n_features(),
            actual: x.n_features(),
        });
    }
    if x.feature_names != m.feature_names {
        return Err(Error::Schema("feature names differ from training layout".into()));
    }
    Ok(())
}

/// Softmax of `base_score + Σ trees` per row.
pub fn predict_proba(m: &BoostedEnsemble, x: &FeatureMatrix) -> Result<Array2<f64>> {
    check_layout(m, x)?;
    let k = m.n_classes();
    let mut out = Array2::zeros((x.n_rows(), k));
    for (i, row) in x.values.outer_iter().enumerate() {
        let row = row.to_vec();
        let p = loss::softmax(&m.raw_scores(&row));
        out.row_mut(i).assign(&ndarray::Array1::from(p));
    }
    Ok(out)
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub fn predict(m: &BoostedEnsemble, x: &FeatureMatrix) -> Result<Vec<usize>> {
    let p = predict_proba(m, x)?;
    Ok(p.outer_iter()
        .map(|row| argmax(row.as_slice().expect("standard layout")))
        .collect())
}

/// Features ranked by mean split gain; features never split are absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub ranked: Vec<(String, f64)>,
}

impl FeatureImportance {
    pub fn top(&self, k: usize) -> &[(String, f64)] {
        &self.ranked[..k.min(self.ranked.len())]
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("feature,mean_gain\n");
        for (name, gain) in &self.ranked {
            s.push_str(&format!("{name},{gain}\n"));
        }
        s
    }
}

pub fn feature_importance(m: &BoostedEnsemble) -> FeatureImportance {
    let mut ranked: Vec<(usize, f64)> = m
        .gain_by_feature
        .iter()
        .enumerate()
        .filter(|(_, g)| g.splits > 0)
        .map(|(f, g)| (f, g.total_gain / g.splits as f64))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    FeatureImportance {
        ranked: ranked
            .into_iter()
            .map(|(f, g)| (m.feature_names[f].clone(), g))
            .collect(),
    }
}

/// Fraction of predictions equal to the truth.
pub fn accuracy(pred: &[usize], truth: &[usize]) -> f64 {
    if pred.is_empty() {
        return 0.0;
    }
    let correct = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    correct as f64 / pred.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> FeatureMatrix {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for _ in 0..50 {
            xs.extend([0.0, 1.0]);
            ys.extend([0, 1]);
        }
        FeatureMatrix::new(
            Array2::from_shape_vec((100, 1), xs).unwrap(),
            vec!["x".into()],
            ys,
            vec!["A".into(), "B".into()],
        )
        .unwrap()
    }

    fn toy_cfg(rounds: usize) -> GbtConfig {
        GbtConfig {
            n_rounds: rounds,
            max_depth: 1,
            ..GbtConfig::default()
        }
    }

    #[test]
    fn separable_toy_is_learned() {
        let x = toy();
        let m = train(&x, &toy_cfg(10)).unwrap();
        let pred = predict(&m, &x).unwrap();
        assert_eq!(pred, x.class_ids);
        assert_eq!(accuracy(&pred, &x.class_ids), 1.0);
        let p = predict_proba(&m, &x).unwrap();
        for (i, &y) in x.class_ids.iter().enumerate() {
            assert!(p[[i, y]] > 0.9);
        }
        assert_eq!(m.trees.len(), 20);
    }

    #[test]
    fn single_class_rejected() {
        let mut x = toy();
        x.class_ids.iter_mut().for_each(|c| *c = 0);
        assert!(train(&x, &toy_cfg(3)).is_err());
    }

    #[test]
    fn empty_rejected() {
        let x = toy().select_rows(&[]);
        assert!(train(&x, &toy_cfg(3)).is_err());
    }

    #[test]
    fn zero_rounds_is_uniform() {
        let x = toy();
        let mut m = train(&x, &toy_cfg(1)).unwrap();
        m.trees.clear();
        let p = predict_proba(&m, &x).unwrap();
        assert!(p.iter().all(|&v| (v - 0.5).abs() < 1e-15));
    }

    #[test]
    fn argmax_tie_goes_low() {
        assert_eq!(argmax(&[0.2, 0.5, 0.3]), 1);
        assert_eq!(argmax(&[0.5, 0.5]), 0);
    }

    #[test]
    fn importance_from_single_split() {
        let x = toy();
        let m = train(&x, &GbtConfig { n_rounds: 1, max_depth: 1, ..GbtConfig::default() }).unwrap();
        let imp = feature_importance(&m);
        let mut gains = Vec::new();
        for t in &m.trees {
            t.root.for_each_split(&mut |_, _, g| gains.push(g));
        }
        assert_eq!(imp.ranked.len(), 1);
        let mean = gains.iter().sum::<f64>() / gains.len() as f64;
        assert!((imp.ranked[0].1 - mean).abs() < 1e-12);
    }

    #[test]
    fn gain_table_matches_tree_gains() {
        let x = toy();
        let m = train(&x, &toy_cfg(5)).unwrap();
        let mut total = 0.0;
        let mut count = 0;
        for t in &m.trees {
            t.root.for_each_split(&mut |_, _, g| {
                total += g;
                count += 1;
            });
        }
        let table: f64 = m.gain_by_feature.iter().map(|g| g.total_gain).sum();
        assert!((table - total).abs() < 1e-9);
        assert_eq!(m.gain_by_feature.iter().map(|g| g.splits).sum::<usize>(), count);
    }

    #[test]
    fn layout_mismatch_rejected() {
        let x = toy();
        let m = train(&x, &toy_cfg(2)).unwrap();
        let wide = FeatureMatrix::new(
            Array2::zeros((1, 2)),
            vec!["x".into(), "y".into()],
            vec![0],
            x.class_names.clone(),
        )
        .unwrap();
        assert!(matches!(predict(&m, &wide), Err(Error::LayoutMismatch { .. })));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let x = toy();
        let m = train(&x, &toy_cfg(3)).unwrap();
        let text = m.to_json().unwrap();
        let back = BoostedEnsemble::from_json(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_json().unwrap(), text);
    }
    fn noisy(seed_value: u64, scale: f64) -> FeatureMatrix {
        use rand::Rng;
        let mut rng = seed::rng(seed_value);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for _ in 0..120 {
            let a: f64 = rng.random_range(-1.0..1.0);
            let b: f64 = rng.random_range(-1.0..1.0);
            let flip = rng.random_bool(0.1);
            let y = if (a + b > 0.3) ^ flip { 2 } else if a > 0.0 { 1 } else { 0 };
            xs.extend([a * scale, b]);
            ys.push(y);
        }
        FeatureMatrix::new(
            Array2::from_shape_vec((120, 2), xs).unwrap(),
            vec!["a".into(), "b".into()],
            ys,
            vec!["x".into(), "y".into(), "z".into()],
        )
        .unwrap()
    }

    #[test]
    fn training_loss_never_increases() {
        for s in 0..3 {
            let m = train(&noisy(s, 1.0), &GbtConfig { n_rounds: 30, max_depth: 3, ..GbtConfig::default() }).unwrap();
            assert_eq!(m.loss_trace.len(), 30);
            for w in m.loss_trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-12, "{} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn positive_feature_scaling_keeps_predictions() {
        let cfg = GbtConfig { n_rounds: 15, max_depth: 4, ..GbtConfig::default() };
        let base = noisy(4, 1.0);
        let scaled = noisy(4, 1000.0);
        let a = predict(&train(&base, &cfg).unwrap(), &base).unwrap();
        let b = predict(&train(&scaled, &cfg).unwrap(), &scaled).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn same_seed_same_model_with_subsampling() {
        let cfg = GbtConfig { n_rounds: 8, subsample: 0.7, seed: 9, ..GbtConfig::default() };
        let x = noisy(1, 1.0);
        assert_eq!(train(&x, &cfg).unwrap().to_json().unwrap(), train(&x, &cfg).unwrap().to_json().unwrap());
    }
}
