use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const BUILTIN_SCHEMA: &str = include_str!("../../data/nslkdd_schema.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Continuous,
    Categorical,
    Label,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    pub position: usize,
}

/// Ordered column layout of a record. Positions are contiguous from 0 and
/// exactly one column carries the class label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    columns: Vec<ColumnSpec>,
    label: usize,
}

impl Schema {
    pub fn new(columns: Vec<ColumnSpec>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::Schema("schema has no columns".into()));
        }
        for (i, c) in columns.iter().enumerate() {
            if c.position != i {
                return Err(Error::Schema(format!(
                    "column `{}` has position {} but appears at {i}",
                    c.name, c.position
                )));
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for c in &columns {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::Schema(format!("duplicate column `{}`", c.name)));
            }
        }
        let labels: Vec<usize> = columns
            .iter()
            .filter(|c| c.kind == ColumnKind::Label)
            .map(|c| c.position)
            .collect();
        match labels.as_slice() {
            [label] => Ok(Schema {
                label: *label,
                columns,
            }),
            _ => Err(Error::Schema(format!(
                "expected exactly one label column, found {}",
                labels.len()
            ))),
        }
    }

    /// Parses the `name kind` line format used by the shipped schema file.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut columns = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(name), Some(kind), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::Parse {
                    line: lineno + 1,
                    message: format!("expected `name kind`, got `{line}`"),
                });
            };
            let kind = match kind {
                "continuous" => ColumnKind::Continuous,
                "categorical" => ColumnKind::Categorical,
                "label" => ColumnKind::Label,
                other => {
                    return Err(Error::Parse {
                        line: lineno + 1,
                        message: format!("unknown column kind `{other}`"),
                    })
                }
            };
            columns.push(ColumnSpec {
                name: name.to_string(),
                kind,
                position: columns.len(),
            });
        }
        Schema::new(columns)
    }

    /// The standard 41-feature NSL-KDD layout plus the label column.
    pub fn nslkdd() -> Self {
        Schema::from_text(BUILTIN_SCHEMA).expect("built-in schema is valid")
    }

    pub fn builtin_text() -> &'static str {
        BUILTIN_SCHEMA
    }

    pub fn columns(&self) -> &[ColumnSpec] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn label_position(&self) -> usize {
        self.label
    }

    pub fn position(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn column(&self, name: &str) -> Result<&ColumnSpec> {
        self.position(name).map(|i| &self.columns[i])
    }
}
