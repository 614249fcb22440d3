//! NSL-KDD parsing, cleaning and relabelling.
//!
//! Records are comma-separated with no header. A line carries one field per
//! schema column (41 features and the label) and may carry one trailing
//! difficulty score, which is discarded.
//!
//! Two kinds of irregular cells are told apart: *missing* cells (empty,
//! `NaN`, `?`, or any text that does not parse in a numeric column) and
//! *sentinel* cells (whole-cell tokens such as `*` or `99999`). Cleaning
//! drops rows with missing cells and rewrites sentinel cells to zero.

mod labels;
mod schema;

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use labels::{default_keep, map_labels, LabelMapping, LabelReport, REPORT_CLASSES};
pub use schema::{ColumnKind, ColumnSpec, Schema};

/// One parsed cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Token(String),
    /// Unusable cell; the raw text is kept so that sentinel tokens can be
    /// recognised by [`clean`].
    Missing(String),
}

impl Cell {
    pub fn as_num(&self) -> Option<f64> {
        match self {
            Cell::Num(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_token(&self) -> Option<&str> {
        match self {
            Cell::Token(t) => Some(t),
            _ => None,
        }
    }

    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing(_))
    }
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            // `Display` for f64 prints the shortest text that parses back to
            // the same bits.
            Cell::Num(v) => write!(f, "{v}"),
            Cell::Token(t) | Cell::Missing(t) => f.write_str(t),
        }
    }
}

const MISSING_TOKENS: &[&str] = &["", "?", "NaN", "nan", "NA", "null"];

fn is_missing_token(s: &str) -> bool {
    MISSING_TOKENS.contains(&s)
}

/// Parsed records with their schema. Every row has one cell per schema
/// column, label included.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularDataset {
    schema: Schema,
    rows: Vec<Vec<Cell>>,
    provenance: String,
}

impl TabularDataset {
    pub fn new(schema: Schema, rows: Vec<Vec<Cell>>, provenance: impl Into<String>) -> Result<Self> {
        let label = schema.label_position();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != schema.len() {
                return Err(Error::LayoutMismatch {
                    expected: schema.len(),
                    actual: row.len(),
                });
            }
            if row[label].as_token().is_none() {
                return Err(Error::invalid(format!("row {i} has no label token")));
            }
        }
        Ok(TabularDataset {
            schema,
            rows,
            provenance: provenance.into(),
        })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn label(&self, row: usize) -> &str {
        self.rows[row][self.schema.label_position()]
            .as_token()
            .expect("label cells are tokens")
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> + '_ {
        (0..self.rows.len()).map(|i| self.label(i))
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> TabularDataset {
        TabularDataset {
            schema: self.schema.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            provenance: self.provenance.clone(),
        }
    }

    pub fn column_values(&self, column: &str) -> Result<impl Iterator<Item = &Cell> + '_> {
        let pos = self.schema.position(column)?;
        Ok(self.rows.iter().map(move |r| &r[pos]))
    }

    /// Writes the records back as comma-separated lines (no difficulty field).
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for row in &self.rows {
            let mut first = true;
            for cell in row {
                if !first {
                    out.write_all(b",")?;
                }
                first = false;
                write!(out, "{cell}")?;
            }
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("cells are utf-8")
    }
}

/// Parses NSL-KDD text. Blank lines are skipped.
pub fn parse_nslkdd<R: BufRead>(
    source: R,
    schema: &Schema,
    provenance: impl Into<String>,
) -> Result<TabularDataset> {
    let width = schema.len();
    let mut rows = Vec::new();
    for (lineno, line) in source.lines().enumerate() {
        let line = line.map_err(|e| Error::Parse {
            line: lineno + 1,
            message: e.to_string(),
        })?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != width && fields.len() != width + 1 {
            return Err(Error::Parse {
                line: lineno + 1,
                message: format!(
                    "expected {} or {} fields, found {}",
                    width,
                    width + 1,
                    fields.len()
                ),
            });
        }
        let mut row = Vec::with_capacity(width);
        for (spec, raw) in schema.columns().iter().zip(&fields) {
            let raw = raw.trim();
            let cell = match spec.kind {
                ColumnKind::Continuous => match raw.parse::<f64>() {
                    Ok(v) if v.is_finite() => Cell::Num(v),
                    _ => Cell::Missing(raw.to_string()),
                },
                ColumnKind::Categorical if is_missing_token(raw) => Cell::Missing(raw.to_string()),
                ColumnKind::Categorical => Cell::Token(raw.to_string()),
                ColumnKind::Label => {
                    if is_missing_token(raw) {
                        return Err(Error::Parse {
                            line: lineno + 1,
                            message: "missing label".into(),
                        });
                    }
                    Cell::Token(raw.to_string())
                }
            };
            row.push(cell);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptySource);
    }
    Ok(TabularDataset {
        schema: schema.clone(),
        rows,
        provenance: provenance.into(),
    })
}

pub fn parse_nslkdd_str(text: &str, schema: &Schema) -> Result<TabularDataset> {
    parse_nslkdd(text.as_bytes(), schema, "inline")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanOptions {
    pub sentinels: BTreeSet<String>,
    pub drop_missing: bool,
}

impl Default for CleanOptions {
    fn default() -> Self {
        CleanOptions {
            sentinels: ["*", "99999"].iter().map(|s| s.to_string()).collect(),
            drop_missing: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanReport {
    pub rows_in: usize,
    pub rows_out: usize,
    pub rows_dropped: usize,
    pub cells_replaced: usize,
    /// Missing cells rewritten to zero because `drop_missing` was off.
    pub cells_imputed: usize,
}

fn zero_for(kind: ColumnKind) -> Cell {
    match kind {
        ColumnKind::Continuous => Cell::Num(0.0),
        _ => Cell::Token("0".into()),
    }
}

/// Applies the cleaning rules: sentinel cells become zero, rows with missing
/// cells are dropped (or, with `drop_missing` off, their missing cells are
/// zero-filled). Sentinels match whole cells only; a numeric sentinel such
/// as `99999` also matches numeric cells holding exactly that value.
pub fn clean(ds: &TabularDataset, opts: &CleanOptions) -> (TabularDataset, CleanReport) {
    let numeric_sentinels: Vec<f64> = opts
        .sentinels
        .iter()
        .filter_map(|s| s.parse::<f64>().ok())
        .filter(|v| v.is_finite())
        .collect();
    let kinds: Vec<ColumnKind> = ds.schema.columns().iter().map(|c| c.kind).collect();

    let mut report = CleanReport {
        rows_in: ds.len(),
        ..CleanReport::default()
    };
    let mut rows = Vec::with_capacity(ds.len());
    for row in &ds.rows {
        let mut out = Vec::with_capacity(row.len());
        let mut replaced = 0;
        let mut missing = 0;
        for (cell, &kind) in row.iter().zip(&kinds) {
            if kind == ColumnKind::Label {
                out.push(cell.clone());
                continue;
            }
            let is_sentinel = match cell {
                Cell::Num(v) => numeric_sentinels.contains(v) && *v != 0.0,
                Cell::Token(t) => opts.sentinels.contains(t) && t != "0",
                Cell::Missing(raw) => opts.sentinels.contains(raw),
            };
            if is_sentinel {
                replaced += 1;
                out.push(zero_for(kind));
            } else if cell.is_missing() {
                missing += 1;
                out.push(if opts.drop_missing {
                    cell.clone()
                } else {
                    zero_for(kind)
                });
            } else {
                out.push(cell.clone());
            }
        }
        if missing > 0 && opts.drop_missing {
            report.rows_dropped += 1;
            continue;
        }
        report.cells_replaced += replaced;
        report.cells_imputed += missing;
        rows.push(out);
    }
    report.rows_out = rows.len();
    (
        TabularDataset {
            schema: ds.schema.clone(),
            rows,
            provenance: ds.provenance.clone(),
        },
        report,
    )
}

/// Number of distinct values in `column`.
pub fn cardinality(ds: &TabularDataset, column: &str) -> Result<usize> {
    let mut tokens = BTreeSet::new();
    let mut numbers = BTreeSet::new();
    for cell in ds.column_values(column)? {
        match cell {
            // +0.0 and -0.0 are one value.
            Cell::Num(v) => {
                numbers.insert(if *v == 0.0 { 0u64 } else { v.to_bits() });
            }
            Cell::Token(t) | Cell::Missing(t) => {
                tokens.insert(t.as_str());
            }
        }
    }
    Ok(tokens.len() + numbers.len())
}

/// Per-class row counts, most frequent first (ties by name).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassHistogram {
    pub entries: Vec<(String, usize)>,
    pub total: usize,
}

impl ClassHistogram {
    pub fn from_labels<'a>(labels: impl IntoIterator<Item = &'a str>) -> Self {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for l in labels {
            *counts.entry(l).or_default() += 1;
        }
        let mut entries: Vec<(String, usize)> =
            counts.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let total = entries.iter().map(|e| e.1).sum();
        ClassHistogram { entries, total }
    }

    pub fn get(&self, class: &str) -> Option<usize> {
        self.entries.iter().find(|e| e.0 == class).map(|e| e.1)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("class,count\n");
        for (class, count) in &self.entries {
            s.push_str(&format!("{class},{count}\n"));
        }
        s
    }
}

pub fn class_distribution(ds: &TabularDataset) -> ClassHistogram {
    ClassHistogram::from_labels(ds.labels())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(label: &str, src_bytes: &str, extra: bool) -> String {
        let mut f: Vec<String> = vec!["0".into(), "tcp".into(), "http".into(), "SF".into()];
        f.push(src_bytes.into());
        f.extend((5..41).map(|i| format!("{}", i % 3)));
        f.push(label.into());
        if extra {
            f.push("21".into());
        }
        f.join(",")
    }

    #[test]
    fn forty_three_fields_drop_difficulty() {
        let ds = parse_nslkdd_str(&line("normal", "181", true), &Schema::nslkdd()).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.rows()[0].len(), 42);
        assert_eq!(ds.label(0), "normal");
        assert_eq!(ds.rows()[0][4], Cell::Num(181.0));
    }

    #[test]
    fn empty_source_is_an_error() {
        let err = parse_nslkdd_str("", &Schema::nslkdd()).unwrap_err();
        assert_eq!(err.to_string(), "empty source");
        assert!(matches!(parse_nslkdd_str("\n\n", &Schema::nslkdd()), Err(Error::EmptySource)));
    }

    #[test]
    fn wrong_field_count_reports_line() {
        let text = format!("{}\n0,tcp,http\n", line("normal", "1", false));
        match parse_nslkdd_str(&text, &Schema::nslkdd()).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn star_cell_is_kept_as_missing_then_zeroed() {
        let ds = parse_nslkdd_str(&line("normal", "*", true), &Schema::nslkdd()).unwrap();
        assert_eq!(ds.rows()[0][4], Cell::Missing("*".into()));
        let (c, report) = clean(&ds, &CleanOptions::default());
        assert_eq!(c.len(), 1);
        assert_eq!(c.rows()[0][4], Cell::Num(0.0));
        assert_eq!(report.cells_replaced, 1);
    }

    #[test]
    fn numeric_sentinel_replaced() {
        let ds = parse_nslkdd_str(&line("normal", "99999", false), &Schema::nslkdd()).unwrap();
        let (c, report) = clean(&ds, &CleanOptions::default());
        assert_eq!(c.rows()[0][4], Cell::Num(0.0));
        assert_eq!(report.cells_replaced, 1);
        assert_eq!(report.rows_dropped, 0);
    }

    #[test]
    fn sentinel_is_not_a_substring_match() {
        let ds = parse_nslkdd_str(&line("normal", "999990", false), &Schema::nslkdd()).unwrap();
        let (c, report) = clean(&ds, &CleanOptions::default());
        assert_eq!(c.rows()[0][4], Cell::Num(999990.0));
        assert_eq!(report.cells_replaced, 0);
    }

    #[test]
    fn missing_row_dropped() {
        let mut text = String::new();
        for i in 0..999 {
            text.push_str(&line("normal", &i.to_string(), false));
            text.push('\n');
        }
        text.push_str(&line("normal", "", false));
        let ds = parse_nslkdd_str(&text, &Schema::nslkdd()).unwrap();
        assert_eq!(ds.len(), 1000);
        let (c, report) = clean(&ds, &CleanOptions::default());
        assert_eq!(c.len(), 999);
        assert_eq!(report.rows_dropped, 1);
    }

    #[test]
    fn keep_missing_rows_imputes_zero() {
        let ds = parse_nslkdd_str(&line("normal", "NaN", false), &Schema::nslkdd()).unwrap();
        let opts = CleanOptions {
            drop_missing: false,
            ..CleanOptions::default()
        };
        let (c, report) = clean(&ds, &opts);
        assert_eq!(c.rows()[0][4], Cell::Num(0.0));
        assert_eq!(report.cells_imputed, 1);
    }

    #[test]
    fn clean_dataset_is_unchanged() {
        let ds = parse_nslkdd_str(&line("normal", "5", false), &Schema::nslkdd()).unwrap();
        let (c, report) = clean(&ds, &CleanOptions::default());
        assert_eq!(c, ds);
        assert_eq!(report.rows_dropped + report.cells_replaced + report.cells_imputed, 0);
    }

    #[test]
    fn cardinality_counts_distinct() {
        let text = ["tcp", "udp", "tcp"]
            .iter()
            .map(|p| line("normal", "1", false).replacen("tcp", p, 1))
            .collect::<Vec<_>>()
            .join("\n");
        let ds = parse_nslkdd_str(&text, &Schema::nslkdd()).unwrap();
        assert_eq!(cardinality(&ds, "protocol_type").unwrap(), 2);
        assert_eq!(cardinality(&ds, "service").unwrap(), 1);
        assert!(matches!(cardinality(&ds, "nope"), Err(Error::UnknownColumn(_))));
    }

    #[test]
    fn histogram_orders_by_count() {
        let h = ClassHistogram::from_labels(["a", "b", "a"]);
        assert_eq!(h.entries, vec![("a".into(), 2), ("b".into(), 1)]);
        assert_eq!(h.total, 3);
        let empty = ClassHistogram::from_labels(std::iter::empty());
        assert_eq!(empty.total, 0);
        assert!(empty.entries.is_empty());
    }
}
