//! Per-class, per-feature summary statistics for exploratory plots.
//!
//! Quartiles interpolate linearly between order statistics: for sorted
//! values `x[0..n]` the `p`-quantile sits at position `h = (n − 1)·p` and
//! equals `x[⌊h⌋] + (h − ⌊h⌋)·(x[⌊h⌋+1] − x[⌊h⌋])`. Variance is the
//! population variance.

use ndarray::ArrayView1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::FeatureMatrix;

pub const HISTOGRAM_BINS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSummary {
    pub class: String,
    pub feature: String,
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    /// `HISTOGRAM_BINS + 1` edges shared by every class for this feature.
    pub bin_edges: Vec<f64>,
    pub histogram: Vec<usize>,
}

/// Linear-interpolation quantile of already sorted values.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Equal-width edges over `[lo, hi]`.
pub fn bin_edges(lo: f64, hi: f64) -> Vec<f64> {
    (0..=HISTOGRAM_BINS)
        .map(|i| {
            if i == HISTOGRAM_BINS {
                hi
            } else {
                lo + (hi - lo) * i as f64 / HISTOGRAM_BINS as f64
            }
        })
        .collect()
}

/// Bins are half-open except the last, which includes its upper edge. A
/// zero-width range puts everything in the first bin.
pub fn histogram(values: &[f64], edges: &[f64]) -> Vec<usize> {
    let bins = edges.len() - 1;
    let (lo, hi) = (edges[0], edges[bins]);
    let mut counts = vec![0; bins];
    for &v in values {
        let b = if hi > lo {
            (((v - lo) / (hi - lo) * bins as f64).floor().max(0.0) as usize).min(bins - 1)
        } else {
            0
        };
        counts[b] += 1;
    }
    counts
}

fn summarize(class: &str, feature: &str, values: &[f64], edges: &[f64]) -> FeatureSummary {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    FeatureSummary {
        class: class.to_string(),
        feature: feature.to_string(),
        count: values.len(),
        mean,
        variance,
        min: sorted[0],
        q1: quantile_sorted(&sorted, 0.25),
        median: quantile_sorted(&sorted, 0.5),
        q3: quantile_sorted(&sorted, 0.75),
        max: sorted[sorted.len() - 1],
        bin_edges: edges.to_vec(),
        histogram: histogram(values, edges),
    }
}

fn range(col: ArrayView1<f64>) -> (f64, f64) {
    col.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

fn resolve_features(x: &FeatureMatrix, features: &[&str]) -> Result<Vec<usize>> {
    if features.is_empty() {
        return Err(Error::invalid("feature selection is empty"));
    }
    features
        .iter()
        .map(|f| x.feature_index(f).ok_or_else(|| Error::UnknownColumn(f.to_string())))
        .collect()
}

/// One summary per `(class, feature)` pair, class-major. Classes without
/// rows in `x` are skipped. Histogram edges span each feature's range over
/// all of `x`.
pub fn feature_summaries(x: &FeatureMatrix, features: &[&str], classes: &[&str]) -> Result<Vec<FeatureSummary>> {
    let cols = resolve_features(x, features)?;
    if classes.is_empty() {
        return Err(Error::invalid("class selection is empty"));
    }
    let ids = classes
        .iter()
        .map(|c| x.class_id(c).ok_or_else(|| Error::invalid(format!("unknown class {c}"))))
        .collect::<Result<Vec<_>>>()?;
    let edges: Vec<Vec<f64>> = cols
        .iter()
        .map(|&j| {
            let (lo, hi) = range(x.values.column(j));
            bin_edges(lo, hi)
        })
        .collect();
    let mut out = Vec::new();
    for (&id, class) in ids.iter().zip(classes) {
        let rows = x.rows_of_class(id);
        if rows.is_empty() {
            continue;
        }
        for ((&j, feature), e) in cols.iter().zip(features).zip(&edges) {
            let values: Vec<f64> = rows.iter().map(|&r| x.values[[r, j]]).collect();
            out.push(summarize(class, feature, &values, e));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedSummary {
    pub feature: String,
    pub real: FeatureSummary,
    pub synthetic: FeatureSummary,
    pub mean_abs_diff: f64,
}

/// Real and synthetic summaries of one class, feature by feature, on shared
/// histogram edges.
pub fn real_vs_synthetic_summary(
    real: &FeatureMatrix,
    synthetic: &FeatureMatrix,
    class: &str,
) -> Result<Vec<PairedSummary>> {
    if real.feature_names != synthetic.feature_names {
        return Err(Error::LayoutMismatch {
            expected: real.n_features(),
            actual: synthetic.n_features(),
        });
    }
    let pick = |m: &FeatureMatrix, which: &str| -> Result<Vec<usize>> {
        let id = m
            .class_id(class)
            .ok_or_else(|| Error::invalid(format!("unknown class {class}")))?;
        let rows = m.rows_of_class(id);
        if rows.is_empty() {
            return Err(Error::invalid(format!("no {which} rows for class {class}")));
        }
        Ok(rows)
    };
    let real_rows = pick(real, "real")?;
    let synth_rows = pick(synthetic, "synthetic")?;
    let mut out = Vec::with_capacity(real.n_features());
    for (j, feature) in real.feature_names.iter().enumerate() {
        let a: Vec<f64> = real_rows.iter().map(|&r| real.values[[r, j]]).collect();
        let b: Vec<f64> = synth_rows.iter().map(|&r| synthetic.values[[r, j]]).collect();
        let lo = a.iter().chain(&b).copied().fold(f64::INFINITY, f64::min);
        let hi = a.iter().chain(&b).copied().fold(f64::NEG_INFINITY, f64::max);
        let edges = bin_edges(lo, hi);
        let real = summarize(class, feature, &a, &edges);
        let synthetic = summarize(class, feature, &b, &edges);
        out.push(PairedSummary {
            feature: feature.clone(),
            mean_abs_diff: (real.mean - synthetic.mean).abs(),
            real,
            synthetic,
        });
    }
    Ok(out)
}

pub fn summaries_csv(summaries: &[FeatureSummary]) -> String {
    let mut s = String::from("class,feature,count,mean,variance,min,q1,median,q3,max\n");
    for f in summaries {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            f.class, f.feature, f.count, f.mean, f.variance, f.min, f.q1, f.median, f.q3, f.max
        ));
    }
    s
}

/// Long-form histogram rows: `class,feature,bin,lower,upper,count`.
pub fn histograms_csv(summaries: &[FeatureSummary]) -> String {
    let mut s = String::from("class,feature,bin,lower,upper,count\n");
    for f in summaries {
        for (b, c) in f.histogram.iter().enumerate() {
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                f.class,
                f.feature,
                b,
                f.bin_edges[b],
                f.bin_edges[b + 1],
                c
            ));
        }
    }
    s
}

pub fn paired_csv(pairs: &[PairedSummary]) -> String {
    let mut s = String::from(
        "feature,real_mean,synthetic_mean,mean_abs_diff,real_variance,synthetic_variance,real_median,synthetic_median\n",
    );
    for p in pairs {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            p.feature,
            p.real.mean,
            p.synthetic.mean,
            p.mean_abs_diff,
            p.real.variance,
            p.synthetic.variance,
            p.real.median,
            p.synthetic.median
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use proptest::prelude::*;

    fn matrix(values: Vec<f64>, cols: usize, ids: Vec<usize>) -> FeatureMatrix {
        let rows = ids.len();
        FeatureMatrix::new(
            Array2::from_shape_vec((rows, cols), values).unwrap(),
            (0..cols).map(|j| format!("f{j}")).collect(),
            ids,
            vec!["a".into(), "b".into(), "c".into()],
        )
        .unwrap()
    }

    #[test]
    fn five_row_hand_quartiles() {
        // sorted: 1 2 4 7 11; positions q1 = 1.0, median = 2.0, q3 = 3.0
        let x = matrix(vec![7.0, 1.0, 11.0, 2.0, 4.0], 1, vec![0; 5]);
        let s = &feature_summaries(&x, &["f0"], &["a"]).unwrap()[0];
        assert_eq!((s.min, s.q1, s.median, s.q3, s.max), (1.0, 2.0, 4.0, 7.0, 11.0));
        assert_eq!(s.mean, 5.0);
        assert_eq!(s.variance, 13.2);
        assert_eq!(s.histogram.iter().sum::<usize>(), 5);
        assert_eq!(s.histogram[0], 1);
        assert_eq!(s.histogram[19], 1);
    }

    #[test]
    fn interpolated_quartile() {
        assert_eq!(quantile_sorted(&[1.0, 2.0, 3.0, 4.0], 0.25), 1.75);
        assert_eq!(quantile_sorted(&[5.0], 0.75), 5.0);
    }

    #[test]
    fn constant_feature() {
        let x = matrix(vec![3.0; 4], 1, vec![0, 0, 1, 1]);
        for s in feature_summaries(&x, &["f0"], &["a", "b"]).unwrap() {
            assert_eq!(s.variance, 0.0);
            assert_eq!(s.min, s.max);
            assert_eq!(s.histogram[0], 2);
        }
    }

    #[test]
    fn unknown_names_rejected() {
        let x = matrix(vec![1.0, 2.0], 1, vec![0, 1]);
        assert!(feature_summaries(&x, &["nope"], &["a"]).is_err());
        assert!(feature_summaries(&x, &["f0"], &["zzz"]).is_err());
        assert!(feature_summaries(&x, &[], &["a"]).is_err());
    }

    #[test]
    fn real_equals_synthetic_gives_zero_diff() {
        let x = matrix(vec![1.0, 2.0, 3.0, 4.0], 2, vec![0, 0]);
        for p in real_vs_synthetic_summary(&x, &x, "a").unwrap() {
            assert_eq!(p.mean_abs_diff, 0.0);
        }
    }

    #[test]
    fn disjoint_constants_differ_by_one() {
        let zeros = matrix(vec![0.0; 6], 2, vec![1; 3]);
        let ones = matrix(vec![1.0; 6], 2, vec![1; 3]);
        for p in real_vs_synthetic_summary(&zeros, &ones, "b").unwrap() {
            assert_eq!(p.mean_abs_diff, 1.0);
        }
    }

    #[test]
    fn layout_mismatch_rejected() {
        let a = matrix(vec![0.0; 2], 1, vec![0; 2]);
        let b = matrix(vec![0.0; 4], 2, vec![0; 2]);
        assert!(real_vs_synthetic_summary(&a, &b, "a").is_err());
    }

    proptest! {
        #[test]
        fn summary_invariants_and_pooled_mean(
            rows in proptest::collection::vec((-50.0f64..50.0, 0usize..3), 1..60)
        ) {
            let (vals, ids): (Vec<f64>, Vec<usize>) = rows.iter().copied().unzip();
            let x = matrix(vals.clone(), 1, ids);
            let sums = feature_summaries(&x, &["f0"], &["a", "b", "c"]).unwrap();
            let mut pooled = 0.0;
            for s in &sums {
                prop_assert!(s.min <= s.q1 && s.q1 <= s.median && s.median <= s.q3 && s.q3 <= s.max);
                prop_assert_eq!(s.histogram.iter().sum::<usize>(), s.count);
                pooled += s.mean * s.count as f64;
            }
            let global = vals.iter().sum::<f64>() / vals.len() as f64;
            prop_assert!((pooled / vals.len() as f64 - global).abs() < 1e-9);
        }

        #[test]
        fn row_order_does_not_matter(
            rows in proptest::collection::vec((-5.0f64..5.0, 0usize..2), 2..30),
            shift in 1usize..29
        ) {
            let (vals, ids): (Vec<f64>, Vec<usize>) = rows.iter().copied().unzip();
            let n = vals.len();
            let rot = |v: &[f64]| -> Vec<f64> { (0..n).map(|i| v[(i + shift) % n]).collect() };
            let rot_ids: Vec<usize> = (0..n).map(|i| ids[(i + shift) % n]).collect();
            let a = feature_summaries(&matrix(vals.clone(), 1, ids), &["f0"], &["a", "b"]).unwrap();
            let b = feature_summaries(&matrix(rot(&vals), 1, rot_ids), &["f0"], &["a", "b"]).unwrap();
            prop_assert_eq!(a.len(), b.len());
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x.mean - y.mean).abs() < 1e-9);
                prop_assert!((x.variance - y.variance).abs() < 1e-9);
                prop_assert_eq!((x.min, x.q1, x.median, x.q3, x.max), (y.min, y.q1, y.median, y.q3, y.max));
                prop_assert_eq!(&x.histogram, &y.histogram);
            }
        }
    }
}
