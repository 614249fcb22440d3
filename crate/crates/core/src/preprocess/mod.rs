//! Reversible column encoders and stratified splitting.

mod encoder;
mod split;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use encoder::{
    fit_encoders, inverse_transform, transform, Directive, EncoderPlan, FeatureRole, FittedColumn,
    FittedEncoder, OutputColumn,
};
pub use split::{stratified_split, stratified_split_ids, SplitIndices, SplitRatios};

/// Dense encoded features with integer class ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub values: Array2<f64>,
    pub feature_names: Vec<String>,
    pub class_ids: Vec<usize>,
    pub class_names: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(
        values: Array2<f64>,
        feature_names: Vec<String>,
        class_ids: Vec<usize>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        if values.ncols() != feature_names.len() {
            return Err(Error::LayoutMismatch {
                expected: feature_names.len(),
                actual: values.ncols(),
            });
        }
        if values.nrows() != class_ids.len() {
            return Err(Error::invalid(format!(
                "{} rows but {} class ids",
                values.nrows(),
                class_ids.len()
            )));
        }
        if let Some(&bad) = class_ids.iter().find(|&&c| c >= class_names.len()) {
            return Err(Error::invalid(format!(
                "class id {bad} out of range for {} classes",
                class_names.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("feature matrix contains NaN or Inf"));
        }
        Ok(FeatureMatrix {
            values,
            feature_names,
            class_ids,
            class_names,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.values.ncols()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_id(&self, name: &str) -> Option<usize> {
        self.class_names.iter().position(|c| c == name)
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|c| c == name)
    }

    pub fn select_rows(&self, indices: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            values: self.values.select(Axis(0), indices),
            feature_names: self.feature_names.clone(),
            class_ids: indices.iter().map(|&i| self.class_ids[i]).collect(),
            class_names: self.class_names.clone(),
        }
    }

    pub fn rows_of_class(&self, class: usize) -> Vec<usize> {
        (0..self.n_rows())
            .filter(|&i| self.class_ids[i] == class)
            .collect()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &c in &self.class_ids {
            counts[c] += 1;
        }
        counts
    }

    /// Appends `other`'s rows; layouts and class lists must agree.
    pub fn append(&mut self, other: &FeatureMatrix) -> Result<()> {
        if other.feature_names != self.feature_names || other.class_names != self.class_names {
            return Err(Error::LayoutMismatch {
                expected: self.n_features(),
                actual: other.n_features(),
            });
        }
        self.values
            .append(Axis(0), other.values.view())
            .map_err(|e| Error::invalid(e.to_string()))?;
        self.class_ids.extend_from_slice(&other.class_ids);
        Ok(())
    }
}
