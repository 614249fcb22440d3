use std::collections::BTreeMap;

use ndarray::{Array2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{synthesize, train_gan_scaled, GanConfig, TrainTrace};
use crate::error::{Error, Result};
use crate::preprocess::{FeatureMatrix, FeatureRole};
use crate::seed;

/// Affine map of every feature column into `[0, 1]`.
///
/// One-hot columns are left alone, ordinal codes are divided by
/// `levels − 1`, and continuous columns use the fitted min and max.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnScaler {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl ColumnScaler {
    pub fn fit(x: &FeatureMatrix, roles: &[FeatureRole]) -> Result<Self> {
        if roles.len() != x.n_features() {
            return Err(Error::LayoutMismatch {
                expected: x.n_features(),
                actual: roles.len(),
            });
        }
        let mut lo = Vec::with_capacity(roles.len());
        let mut hi = Vec::with_capacity(roles.len());
        for (j, role) in roles.iter().enumerate() {
            let (a, b) = match *role {
                FeatureRole::OneHot { .. } => (0.0, 1.0),
                FeatureRole::Ordinal { levels } => (0.0, levels.saturating_sub(1) as f64),
                FeatureRole::Continuous => {
                    let col = x.values.column(j);
                    let a = col.iter().copied().fold(f64::INFINITY, f64::min);
                    let b = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    if a.is_finite() {
                        (a, b)
                    } else {
                        (0.0, 0.0)
                    }
                }
            };
            lo.push(a);
            hi.push(b);
        }
        Ok(ColumnScaler { lo, hi })
    }

    /// Values outside the fitted range are clipped to the unit interval.
    pub fn scale(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut out = x.clone();
        for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            let span = self.hi[j] - self.lo[j];
            col.mapv_inplace(|v| {
                if span > 0.0 {
                    ((v - self.lo[j]) / span).clamp(0.0, 1.0)
                } else {
                    0.0
                }
            });
        }
        out
    }

    pub fn unscale(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut out = x.clone();
        for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            let span = self.hi[j] - self.lo[j];
            col.mapv_inplace(|v| self.lo[j] + v * span);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassAugmentation {
    pub class: String,
    pub real_rows: usize,
    pub target: usize,
    pub synthetic_rows: usize,
    pub trace: TrainTrace,
    /// Synthesized rows in the encoded (unscaled) feature space.
    pub synthetic: FeatureMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Augmentation {
    /// Original training rows followed by every class's synthetic rows.
    pub matrix: FeatureMatrix,
    pub classes: Vec<ClassAugmentation>,
}

/// Raises every class other than `majority` to the largest count among
/// those classes.
pub fn default_targets(train: &FeatureMatrix, majority: &str) -> BTreeMap<String, usize> {
    let counts = train.class_counts();
    let top = train
        .class_names
        .iter()
        .zip(&counts)
        .filter(|(n, _)| n.as_str() != majority)
        .map(|(_, &c)| c)
        .max()
        .unwrap_or(0);
    train
        .class_names
        .iter()
        .zip(&counts)
        .filter(|(n, &c)| n.as_str() != majority && c > 0)
        .map(|(n, _)| (n.clone(), top))
        .collect()
}

fn class_seed(master: u64, class: &str) -> u64 {
    master ^ seed::hash_name(class)
}

/// Trains one GAN per class whose count is below its target and appends
/// `target − count` synthetic rows for it.
///
/// A class with fewer rows than the batch size trains with a batch of all
/// its rows. Classes are processed in name order and in parallel; results do
/// not depend on the thread count.
pub fn augment(
    train: &FeatureMatrix,
    targets: &BTreeMap<String, usize>,
    cfg: &GanConfig,
    roles: &[FeatureRole],
) -> Result<Augmentation> {
    cfg.validate()?;
    let scaler = ColumnScaler::fit(train, roles)?;
    let counts = train.class_counts();
    let mut jobs = Vec::new();
    for (name, &target) in targets {
        let id = train
            .class_id(name)
            .ok_or_else(|| Error::invalid(format!("augmentation target for unknown class {name}")))?;
        if counts[id] == 0 {
            return Err(Error::invalid(format!("augmentation target for absent class {name}")));
        }
        if counts[id] < 2 && target > counts[id] {
            return Err(Error::invalid(format!("class {name} has too few rows to train a gan")));
        }
        jobs.push((name.clone(), id, target));
    }

    let results: Vec<Result<ClassAugmentation>> = jobs
        .par_iter()
        .map(|(name, id, target)| {
            let rows = train.rows_of_class(*id);
            let real = rows.len();
            let need = target.saturating_sub(real);
            let mut trace = TrainTrace::default();
            let values = if need == 0 {
                Array2::zeros((0, train.n_features()))
            } else {
                let scaled = scaler.scale(&train.values.select(Axis(0), &rows));
                let base = class_seed(cfg.seed, name);
                let class_cfg = GanConfig {
                    batch_size: cfg.batch_size.min(real),
                    seed: seed::derive(base, 0),
                    ..cfg.clone()
                };
                let model = train_gan_scaled(&scaled, &class_cfg)?;
                trace = model.trace.clone();
                scaler.unscale(&synthesize(&model, need, seed::derive(base, 1), roles)?)
            };
            let synthetic = FeatureMatrix::new(
                values,
                train.feature_names.clone(),
                vec![*id; need],
                train.class_names.clone(),
            )?;
            Ok(ClassAugmentation {
                class: name.clone(),
                real_rows: real,
                target: *target,
                synthetic_rows: need,
                trace,
                synthetic,
            })
        })
        .collect();

    let mut matrix = train.clone();
    let mut classes = Vec::with_capacity(results.len());
    for r in results {
        let c = r?;
        matrix.append(&c.synthetic)?;
        classes.push(c);
    }
    Ok(Augmentation { matrix, classes })
}
