use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{Cell, TabularDataset};
use crate::error::{Error, Result};

const BUILTIN_MAPPING: &str = include_str!("../../data/label_map.txt");

/// The eight report classes used by the shipped label mapping.
pub const REPORT_CLASSES: [&str; 8] = [
    "DDoS",
    "ipsweep",
    "neptune",
    "nmap",
    "normal",
    "portsweep",
    "satan",
    "smurf",
];

/// Raw label → report label, with an optional default bucket (`*`).
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LabelMapping {
    pub map: BTreeMap<String, String>,
    pub default: Option<String>,
}

impl LabelMapping {
    /// Parses `raw = report` lines; `#` starts a comment.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut mapping = LabelMapping::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((raw, report)) = line.split_once('=') else {
                return Err(Error::Parse {
                    line: lineno + 1,
                    message: format!("expected `raw = report`, got `{line}`"),
                });
            };
            let (raw, report) = (raw.trim(), report.trim());
            if raw.is_empty() || report.is_empty() {
                return Err(Error::Parse {
                    line: lineno + 1,
                    message: "empty label".into(),
                });
            }
            if raw == "*" {
                mapping.default = Some(report.to_string());
            } else {
                mapping.map.insert(raw.to_string(), report.to_string());
            }
        }
        Ok(mapping)
    }

    pub fn nslkdd_default() -> Self {
        LabelMapping::from_text(BUILTIN_MAPPING).expect("built-in mapping is valid")
    }

    pub fn builtin_text() -> &'static str {
        BUILTIN_MAPPING
    }

    pub fn identity<'a>(labels: impl IntoIterator<Item = &'a str>) -> Self {
        LabelMapping {
            map: labels
                .into_iter()
                .map(|l| (l.to_string(), l.to_string()))
                .collect(),
            default: None,
        }
    }

    pub fn get(&self, raw: &str) -> Option<&str> {
        self.map
            .get(raw)
            .or(self.default.as_ref())
            .map(String::as_str)
    }
}

pub fn default_keep() -> BTreeSet<String> {
    REPORT_CLASSES.iter().map(|s| s.to_string()).collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelReport {
    pub rows_kept: usize,
    /// Dropped row counts keyed by mapped label.
    pub dropped: BTreeMap<String, usize>,
}

/// Relabels every row through `mapping` and keeps only rows whose mapped
/// label is in `keep`. Fails listing every raw label that has no mapping.
pub fn map_labels(
    ds: &TabularDataset,
    mapping: &LabelMapping,
    keep: &BTreeSet<String>,
) -> Result<(TabularDataset, LabelReport)> {
    let unmapped: BTreeSet<&str> = ds.labels().filter(|l| mapping.get(l).is_none()).collect();
    if !unmapped.is_empty() {
        return Err(Error::UnmappedLabels(
            unmapped.into_iter().map(str::to_string).collect(),
        ));
    }
    let label_pos = ds.schema().label_position();
    let mut report = LabelReport::default();
    let mut rows = Vec::new();
    for (i, row) in ds.rows().iter().enumerate() {
        let mapped = mapping.get(ds.label(i)).expect("checked above");
        if keep.contains(mapped) {
            let mut row = row.clone();
            row[label_pos] = Cell::Token(mapped.to_string());
            rows.push(row);
        } else {
            *report.dropped.entry(mapped.to_string()).or_default() += 1;
        }
    }
    report.rows_kept = rows.len();
    let out = TabularDataset::new(ds.schema().clone(), rows, ds.provenance())?;
    Ok((out, report))
}
