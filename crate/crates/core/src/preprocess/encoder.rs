use std::collections::{BTreeMap, BTreeSet};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::FeatureMatrix;
use crate::error::{Error, Result};
use crate::ingest::{Cell, ColumnKind, Schema, TabularDataset};

const ENCODER_FORMAT: &str = "nidsgan.encoder";
const ENCODER_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Directive {
    OneHot,
    Ordinal,
    MinMax,
    Passthrough,
}

/// One directive per schema column, in schema order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderPlan {
    pub directives: Vec<Directive>,
}

impl EncoderPlan {
    /// Categorical columns named in `onehot` are one-hot encoded, other
    /// categorical columns (and the label) are ordinal, continuous columns
    /// are min-max scaled.
    pub fn with_onehot(schema: &Schema, onehot: &[&str]) -> Self {
        let directives = schema
            .columns()
            .iter()
            .map(|c| match c.kind {
                ColumnKind::Categorical if onehot.contains(&c.name.as_str()) => Directive::OneHot,
                ColumnKind::Categorical | ColumnKind::Label => Directive::Ordinal,
                ColumnKind::Continuous => Directive::MinMax,
            })
            .collect();
        EncoderPlan { directives }
    }

    /// `protocol_type` one-hot; `service` and `flag` ordinal.
    pub fn nslkdd(schema: &Schema) -> Self {
        EncoderPlan::with_onehot(schema, &["protocol_type"])
    }

    pub fn with_overrides(
        mut self,
        schema: &Schema,
        overrides: &BTreeMap<String, Directive>,
    ) -> Result<Self> {
        for (name, d) in overrides {
            let pos = schema.position(name)?;
            self.directives[pos] = *d;
        }
        Ok(self)
    }

    /// Same plan with every min-max column left unscaled.
    pub fn unscaled(&self) -> Self {
        EncoderPlan {
            directives: self
                .directives
                .iter()
                .map(|d| match d {
                    Directive::MinMax => Directive::Passthrough,
                    d => *d,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FittedColumn {
    OneHot { name: String, vocab: Vec<String> },
    Ordinal { name: String, vocab: Vec<String> },
    MinMax { name: String, min: f64, max: f64 },
    Passthrough { name: String },
    Label { name: String, vocab: Vec<String> },
}

/// Where a source column lands in the encoded matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputColumn {
    pub name: String,
    pub source: usize,
    pub offset: usize,
    pub width: usize,
}

/// How an encoded feature column should be treated by generative models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureRole {
    Continuous,
    /// Member of a one-hot block spanning `start..start + width`.
    OneHot { start: usize, width: usize },
    /// Integer code in `0..levels`.
    Ordinal { levels: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedEncoder {
    pub format: String,
    pub version: u32,
    pub schema: Schema,
    pub columns: Vec<FittedColumn>,
    pub layout: Vec<OutputColumn>,
}

impl FittedEncoder {
    pub fn feature_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for (col, out) in self.columns.iter().zip(&self.layout) {
            match col {
                FittedColumn::OneHot { name, vocab } => {
                    names.extend(vocab.iter().map(|v| format!("{name}={v}")))
                }
                FittedColumn::Label { .. } => {}
                _ => names.push(out.name.clone()),
            }
        }
        names
    }

    pub fn n_features(&self) -> usize {
        self.layout.iter().map(|o| o.width).sum()
    }

    pub fn class_names(&self) -> &[String] {
        self.columns
            .iter()
            .find_map(|c| match c {
                FittedColumn::Label { vocab, .. } => Some(vocab.as_slice()),
                _ => None,
            })
            .expect("encoder has a label column")
    }

    pub fn feature_roles(&self) -> Vec<FeatureRole> {
        let mut roles = Vec::with_capacity(self.n_features());
        for (col, out) in self.columns.iter().zip(&self.layout) {
            match col {
                FittedColumn::OneHot { vocab, .. } => roles.extend(
                    std::iter::repeat_n(
                        FeatureRole::OneHot {
                            start: out.offset,
                            width: vocab.len(),
                        },
                        vocab.len(),
                    ),
                ),
                FittedColumn::Ordinal { vocab, .. } => roles.push(FeatureRole::Ordinal {
                    levels: vocab.len(),
                }),
                FittedColumn::MinMax { .. } | FittedColumn::Passthrough { .. } => {
                    roles.push(FeatureRole::Continuous)
                }
                FittedColumn::Label { .. } => {}
            }
        }
        roles
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let enc: FittedEncoder = serde_json::from_str(text)?;
        if enc.format != ENCODER_FORMAT || enc.version != ENCODER_VERSION {
            return Err(Error::invalid(format!(
                "unsupported encoder document {} v{}",
                enc.format, enc.version
            )));
        }
        Ok(enc)
    }
}

fn token<'a>(cell: &'a Cell, column: &str) -> Result<&'a str> {
    match cell {
        Cell::Token(t) => Ok(t),
        Cell::Num(_) => Err(Error::invalid(format!("numeric cell in categorical column `{column}`"))),
        Cell::Missing(raw) => Err(Error::invalid(format!("missing cell `{raw}` in column `{column}`"))),
    }
}

fn number(cell: &Cell, column: &str) -> Result<f64> {
    match cell {
        Cell::Num(v) => Ok(*v),
        Cell::Token(t) => Err(Error::invalid(format!("token `{t}` in numeric column `{column}`"))),
        Cell::Missing(raw) => Err(Error::invalid(format!("missing cell `{raw}` in column `{column}`"))),
    }
}

/// Fits every column of `plan` on `ds`. Only the rows handed in are read, so
/// pass the training partition.
pub fn fit_encoders(ds: &TabularDataset, plan: &EncoderPlan) -> Result<FittedEncoder> {
    let schema = ds.schema();
    if plan.directives.len() != schema.len() {
        return Err(Error::LayoutMismatch {
            expected: schema.len(),
            actual: plan.directives.len(),
        });
    }
    if ds.is_empty() {
        return Err(Error::invalid("cannot fit encoders on an empty dataset"));
    }
    let mut columns = Vec::with_capacity(schema.len());
    let mut layout = Vec::with_capacity(schema.len());
    let mut offset = 0;
    for (spec, &directive) in schema.columns().iter().zip(&plan.directives) {
        let name = spec.name.clone();
        let cells = ds.rows().iter().map(|r| &r[spec.position]);
        let vocab = || -> Result<Vec<String>> {
            let mut set = BTreeSet::new();
            for c in ds.rows().iter().map(|r| &r[spec.position]) {
                set.insert(token(c, &spec.name)?.to_string());
            }
            Ok(set.into_iter().collect())
        };
        let fitted = match (spec.kind, directive) {
            (ColumnKind::Label, Directive::Ordinal) => FittedColumn::Label { name, vocab: vocab()? },
            (ColumnKind::Label, d) => {
                return Err(Error::invalid(format!(
                    "label column `{name}` must be ordinal, got {d:?}"
                )))
            }
            (ColumnKind::Categorical, Directive::OneHot) => FittedColumn::OneHot { name, vocab: vocab()? },
            (ColumnKind::Categorical, Directive::Ordinal) => FittedColumn::Ordinal { name, vocab: vocab()? },
            (ColumnKind::Continuous, Directive::MinMax) => {
                let mut min = f64::INFINITY;
                let mut max = f64::NEG_INFINITY;
                for c in cells {
                    let v = number(c, &spec.name)?;
                    min = min.min(v);
                    max = max.max(v);
                }
                FittedColumn::MinMax { name, min, max }
            }
            (ColumnKind::Continuous, Directive::Passthrough) => FittedColumn::Passthrough { name },
            (kind, d) => {
                return Err(Error::invalid(format!(
                    "directive {d:?} does not apply to {kind:?} column `{name}`"
                )))
            }
        };
        let width = match &fitted {
            FittedColumn::OneHot { vocab, .. } => vocab.len(),
            FittedColumn::Label { .. } => 0,
            _ => 1,
        };
        layout.push(OutputColumn {
            name: spec.name.clone(),
            source: spec.position,
            offset,
            width,
        });
        offset += width;
        columns.push(fitted);
    }
    Ok(FittedEncoder {
        format: ENCODER_FORMAT.into(),
        version: ENCODER_VERSION,
        schema: schema.clone(),
        columns,
        layout,
    })
}

/// Encodes `ds`. Unseen categorical tokens map to the reserved ordinal code
/// `vocab.len()` or to an all-zero one-hot block; an unseen class label is an
/// error.
pub fn transform(enc: &FittedEncoder, ds: &TabularDataset) -> Result<FeatureMatrix> {
    if ds.schema() != &enc.schema {
        return Err(Error::Schema("dataset schema does not match encoder".into()));
    }
    let width = enc.n_features();
    let mut values = Array2::<f64>::zeros((ds.len(), width));
    let mut class_ids = Vec::with_capacity(ds.len());
    for (i, row) in ds.rows().iter().enumerate() {
        let mut out = values.row_mut(i);
        for (col, place) in enc.columns.iter().zip(&enc.layout) {
            let cell = &row[place.source];
            match col {
                FittedColumn::OneHot { name, vocab } => {
                    let t = token(cell, name)?;
                    if let Ok(k) = vocab.binary_search_by(|v| v.as_str().cmp(t)) {
                        out[place.offset + k] = 1.0;
                    }
                }
                FittedColumn::Ordinal { name, vocab } => {
                    let t = token(cell, name)?;
                    let code = vocab
                        .binary_search_by(|v| v.as_str().cmp(t))
                        .unwrap_or(vocab.len());
                    out[place.offset] = code as f64;
                }
                FittedColumn::MinMax { name, min, max } => {
                    let v = number(cell, name)?;
                    out[place.offset] = if max > min { (v - min) / (max - min) } else { 0.0 };
                }
                FittedColumn::Passthrough { name } => out[place.offset] = number(cell, name)?,
                FittedColumn::Label { name, vocab } => {
                    let t = token(cell, name)?;
                    let id = vocab
                        .binary_search_by(|v| v.as_str().cmp(t))
                        .map_err(|_| Error::invalid(format!("unseen class label `{t}`")))?;
                    class_ids.push(id);
                }
            }
        }
    }
    FeatureMatrix::new(
        values,
        enc.feature_names(),
        class_ids,
        enc.class_names().to_vec(),
    )
}

/// Decodes encoded rows back into records: one-hot blocks by arg-max (lowest
/// index on ties), ordinal codes rounded and clamped into the vocabulary,
/// min-max values rescaled.
pub fn inverse_transform(enc: &FittedEncoder, m: &FeatureMatrix) -> Result<TabularDataset> {
    if m.n_features() != enc.n_features() {
        return Err(Error::LayoutMismatch {
            expected: enc.n_features(),
            actual: m.n_features(),
        });
    }
    let mut rows = Vec::with_capacity(m.n_rows());
    for (i, x) in m.values.outer_iter().enumerate() {
        let mut row = Vec::with_capacity(enc.schema.len());
        for (col, place) in enc.columns.iter().zip(&enc.layout) {
            let cell = match col {
                FittedColumn::OneHot { vocab, .. } => {
                    let block = x.slice(ndarray::s![place.offset..place.offset + place.width]);
                    let mut best = 0;
                    for (k, &v) in block.iter().enumerate() {
                        if v > block[best] {
                            best = k;
                        }
                    }
                    Cell::Token(vocab[best].clone())
                }
                FittedColumn::Ordinal { vocab, .. } => {
                    let code = x[place.offset].round().clamp(0.0, (vocab.len() - 1) as f64);
                    Cell::Token(vocab[code as usize].clone())
                }
                FittedColumn::MinMax { min, max, .. } => {
                    Cell::Num(if max > min { x[place.offset] * (max - min) + min } else { *min })
                }
                FittedColumn::Passthrough { .. } => Cell::Num(x[place.offset]),
                FittedColumn::Label { .. } => Cell::Token(m.class_names[m.class_ids[i]].clone()),
            };
            row.push(cell);
        }
        rows.push(row);
    }
    TabularDataset::new(enc.schema.clone(), rows, "decoded")
}
