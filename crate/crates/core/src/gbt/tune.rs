use rand::seq::IndexedRandom;
use serde::{Deserialize, Serialize};

use super::{accuracy, predict, train, GbtConfig};
use crate::error::{Error, Result};
use crate::preprocess::FeatureMatrix;
use crate::seed;

/// Candidate values per hyperparameter. An empty list keeps the base
/// configuration's value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuneSpace {
    pub n_rounds: Vec<usize>,
    pub learning_rate: Vec<f64>,
    pub max_depth: Vec<usize>,
    pub min_child_weight: Vec<f64>,
    pub lambda: Vec<f64>,
    pub gamma: Vec<f64>,
    pub subsample: Vec<f64>,
}

impl TuneSpace {
    pub fn is_empty(&self) -> bool {
        self.n_rounds.is_empty()
            && self.learning_rate.is_empty()
            && self.max_depth.is_empty()
            && self.min_child_weight.is_empty()
            && self.lambda.is_empty()
            && self.gamma.is_empty()
            && self.subsample.is_empty()
    }

    /// A space holding exactly one configuration.
    pub fn single(cfg: &GbtConfig) -> Self {
        TuneSpace {
            n_rounds: vec![cfg.n_rounds],
            learning_rate: vec![cfg.learning_rate],
            max_depth: vec![cfg.max_depth],
            min_child_weight: vec![cfg.min_child_weight],
            lambda: vec![cfg.lambda],
            gamma: vec![cfg.gamma],
            subsample: vec![cfg.subsample],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub config: GbtConfig,
    pub val_accuracy: f64,
}

impl TrialRecord {
    pub fn csv_header() -> &'static str {
        "trial,n_rounds,learning_rate,max_depth,min_child_weight,lambda,gamma,subsample,val_accuracy"
    }

    pub fn csv_row(&self) -> String {
        let c = &self.config;
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.trial,
            c.n_rounds,
            c.learning_rate,
            c.max_depth,
            c.min_child_weight,
            c.lambda,
            c.gamma,
            c.subsample,
            self.val_accuracy
        )
    }

    pub fn to_csv(trials: &[TrialRecord]) -> String {
        let mut s = format!("{}\n", Self::csv_header());
        for t in trials {
            s.push_str(&t.csv_row());
            s.push('\n');
        }
        s
    }
}

/// Seeded random search. Each trial draws every listed hyperparameter
/// uniformly from its candidates, trains on `train_set` and scores accuracy on
/// `val`. The first trial reaching the best accuracy wins.
pub fn tune(
    train_set: &FeatureMatrix,
    val: &FeatureMatrix,
    budget: usize,
    space: &TuneSpace,
    base: &GbtConfig,
    seed: u64,
) -> Result<(GbtConfig, Vec<TrialRecord>)> {
    if budget == 0 {
        return Err(Error::invalid("tuning budget must be at least 1"));
    }
    if space.is_empty() {
        return Err(Error::invalid("tuning space is empty"));
    }
    let mut rng = seed::rng(seed);
    let mut trials = Vec::with_capacity(budget);
    let mut best: Option<(f64, GbtConfig)> = None;
    for trial in 0..budget {
        let mut cfg = base.clone();
        if let Some(v) = space.n_rounds.choose(&mut rng) {
            cfg.n_rounds = *v;
        }
        if let Some(v) = space.learning_rate.choose(&mut rng) {
            cfg.learning_rate = *v;
        }
        if let Some(v) = space.max_depth.choose(&mut rng) {
            cfg.max_depth = *v;
        }
        if let Some(v) = space.min_child_weight.choose(&mut rng) {
            cfg.min_child_weight = *v;
        }
        if let Some(v) = space.lambda.choose(&mut rng) {
            cfg.lambda = *v;
        }
        if let Some(v) = space.gamma.choose(&mut rng) {
            cfg.gamma = *v;
        }
        if let Some(v) = space.subsample.choose(&mut rng) {
            cfg.subsample = *v;
        }
        let model = train(train_set, &cfg)?;
        let acc = accuracy(&predict(&model, val)?, &val.class_ids);
        if best.as_ref().is_none_or(|(b, _)| acc > *b) {
            best = Some((acc, cfg.clone()));
        }
        trials.push(TrialRecord {
            trial,
            config: cfg,
            val_accuracy: acc,
        });
    }
    let (_, cfg) = best.expect("budget >= 1");
    Ok((cfg, trials))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn toy() -> FeatureMatrix {
        let xs: Vec<f64> = (0..40).map(|i| (i % 2) as f64).collect();
        let ys: Vec<usize> = (0..40).map(|i| i % 2).collect();
        FeatureMatrix::new(
            Array2::from_shape_vec((40, 1), xs).unwrap(),
            vec!["x".into()],
            ys,
            vec!["A".into(), "B".into()],
        )
        .unwrap()
    }

    fn base() -> GbtConfig {
        GbtConfig {
            n_rounds: 5,
            max_depth: 2,
            ..GbtConfig::default()
        }
    }

    #[test]
    fn budget_one_returns_the_sample() {
        let x = toy();
        let space = TuneSpace {
            max_depth: vec![1, 2, 3],
            ..TuneSpace::default()
        };
        let (cfg, log) = tune(&x, &x, 1, &space, &base(), 4).unwrap();
        assert_eq!(log.len(), 1);
        assert_eq!(log[0].config, cfg);
    }

    #[test]
    fn single_point_space_returns_it() {
        let x = toy();
        let (cfg, _) = tune(&x, &x, 3, &TuneSpace::single(&base()), &base(), 4).unwrap();
        assert_eq!(cfg, base());
    }

    #[test]
    fn separable_toy_reaches_full_val_accuracy() {
        let x = toy();
        let space = TuneSpace {
            learning_rate: vec![0.1, 0.3, 1.0],
            max_depth: vec![1, 3],
            ..TuneSpace::default()
        };
        let (_, log) = tune(&x, &x, 4, &space, &base(), 9).unwrap();
        assert!(log.iter().all(|t| t.val_accuracy == 1.0));
    }

    #[test]
    fn empty_space_rejected() {
        let x = toy();
        assert!(tune(&x, &x, 2, &TuneSpace::default(), &base(), 0).is_err());
    }

    #[test]
    fn trial_csv_has_header_and_rows() {
        let x = toy();
        let (_, log) = tune(&x, &x, 2, &TuneSpace::single(&base()), &base(), 0).unwrap();
        let csv = TrialRecord::to_csv(&log);
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.starts_with("trial,"));
    }
}
