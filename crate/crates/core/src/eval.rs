//! Confusion matrices, per-class precision/recall/F1, accuracy and
//! before/after comparison reports.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Recall gains above this count as an improvement in a comparison.
pub const IMPROVEMENT_THRESHOLD: f64 = 0.01;

/// Rows are true classes, columns are predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub class_names: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_sum(&self, c: usize) -> u64 {
        self.counts[c].iter().sum()
    }

    pub fn col_sum(&self, c: usize) -> u64 {
        self.counts.iter().map(|r| r[c]).sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.n_classes()).map(|c| self.counts[c][c]).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("true\\pred");
        for n in &self.class_names {
            s.push(',');
            s.push_str(n);
        }
        s.push('\n');
        for (n, row) in self.class_names.iter().zip(&self.counts) {
            s.push_str(n);
            for v in row {
                s.push_str(&format!(",{v}"));
            }
            s.push('\n');
        }
        s
    }
}

pub fn confusion(pred: &[usize], truth: &[usize], class_names: &[String]) -> Result<ConfusionMatrix> {
    if pred.len() != truth.len() {
        return Err(Error::invalid(format!(
            "{} predictions but {} true labels",
            pred.len(),
            truth.len()
        )));
    }
    let k = class_names.len();
    let mut counts = vec![vec![0u64; k]; k];
    for (&p, &t) in pred.iter().zip(truth) {
        if p >= k || t >= k {
            return Err(Error::invalid(format!("class id {} out of range for {k} classes", p.max(t))));
        }
        counts[t][p] += 1;
    }
    Ok(ConfusionMatrix {
        class_names: class_names.to_vec(),
        counts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScore {
    pub class: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// True rows of this class.
    pub support: u64,
    /// Rows predicted as this class.
    pub predicted: u64,
    /// Set when the metric's denominator was zero and 0 was reported.
    pub precision_undefined: bool,
    pub recall_undefined: bool,
    pub f1_undefined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub classes: Vec<ClassScore>,
    pub accuracy: f64,
    pub total: u64,
}

impl ClassMetrics {
    pub fn get(&self, class: &str) -> Option<&ClassScore> {
        self.classes.iter().find(|c| c.class == class)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

pub fn metrics(cm: &ConfusionMatrix) -> Result<ClassMetrics> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::invalid("confusion matrix is empty"));
    }
    let classes = (0..cm.n_classes())
        .map(|c| {
            let tp = cm.counts[c][c];
            let support = cm.row_sum(c);
            let predicted = cm.col_sum(c);
            let (precision, precision_undefined) = ratio(tp, predicted);
            let (recall, recall_undefined) = ratio(tp, support);
            let f1_undefined = precision + recall == 0.0;
            let f1 = if f1_undefined {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            ClassScore {
                class: cm.class_names[c].clone(),
                precision,
                recall,
                f1,
                support,
                predicted,
                precision_undefined,
                recall_undefined,
                f1_undefined,
            }
        })
        .collect();
    Ok(ClassMetrics {
        classes,
        accuracy: cm.trace() as f64 / total as f64,
        total,
    })
}

/// Share of correct predictions.
pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    if pred.len() != truth.len() || pred.is_empty() {
        return Err(Error::invalid("accuracy needs equal nonempty label vectors"));
    }
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / pred.len() as f64)
}

/// Recall pooled over classes: `Σ TP / Σ (TP + FN)`.
pub fn micro_recall(cm: &ConfusionMatrix) -> f64 {
    let tp: u64 = cm.trace();
    let pos: u64 = (0..cm.n_classes()).map(|c| cm.row_sum(c)).sum();
    if pos == 0 {
        0.0
    } else {
        tp as f64 / pos as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassDelta {
    pub class: String,
    pub before: ClassScore,
    pub after: ClassScore,
    pub precision_delta: f64,
    pub recall_delta: f64,
    pub f1_delta: f64,
    pub recall_improved: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub classes: Vec<ClassDelta>,
    pub accuracy_before: f64,
    pub accuracy_after: f64,
    pub accuracy_delta: f64,
    /// Classes whose recall rose by more than [`IMPROVEMENT_THRESHOLD`].
    pub improved: Vec<String>,
    /// Published reference rows, for side-by-side reading only.
    pub reference_before: Vec<ReferenceRow>,
    pub reference_after: Vec<ReferenceRow>,
}

pub fn compare(before: &ClassMetrics, after: &ClassMetrics) -> Result<ComparisonReport> {
    let mut a_names: Vec<&str> = after.classes.iter().map(|c| c.class.as_str()).collect();
    let mut b_names: Vec<&str> = before.classes.iter().map(|c| c.class.as_str()).collect();
    a_names.sort_unstable();
    b_names.sort_unstable();
    if a_names != b_names {
        return Err(Error::invalid(format!(
            "class sets differ: before {b_names:?}, after {a_names:?}"
        )));
    }
    let classes: Vec<ClassDelta> = before
        .classes
        .iter()
        .map(|b| {
            let a = after.get(&b.class).expect("same class set");
            let recall_delta = a.recall - b.recall;
            ClassDelta {
                class: b.class.clone(),
                before: b.clone(),
                after: a.clone(),
                precision_delta: a.precision - b.precision,
                recall_delta,
                f1_delta: a.f1 - b.f1,
                recall_improved: recall_delta > IMPROVEMENT_THRESHOLD,
            }
        })
        .collect();
    let improved = classes
        .iter()
        .filter(|c| c.recall_improved)
        .map(|c| c.class.clone())
        .collect();
    Ok(ComparisonReport {
        classes,
        accuracy_before: before.accuracy,
        accuracy_after: after.accuracy,
        accuracy_delta: after.accuracy - before.accuracy,
        improved,
        reference_before: reference_rows(&REFERENCE_BEFORE),
        reference_after: reference_rows(&REFERENCE_AFTER),
    })
}

/// A published per-class result row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub class: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

type RefRow = (&'static str, f64, f64, f64);

/// Published results without augmentation; overall accuracy 0.995362.
pub const REFERENCE_BEFORE: [RefRow; 8] = [
    ("DDoS", 1.0000, 0.9917, 0.9959),
    ("ipsweep", 0.9103, 0.9707, 0.9997),
    ("neptune", 1.0000, 0.9997, 0.9999),
    ("nmap", 0.9034, 0.7480, 0.9998),
    ("normal", 0.9983, 0.9998, 0.9991),
    ("portsweep", 1.0000, 0.9943, 0.9971),
    ("satan", 0.9985, 0.9835, 0.9909),
    ("smurf", 1.0000, 1.0000, 1.0000),
];
pub const REFERENCE_ACCURACY_BEFORE: f64 = 0.995362;

/// Published results with augmentation; overall accuracy 0.997886.
pub const REFERENCE_AFTER: [RefRow; 8] = [
    ("DDoS", 0.9996, 0.9991, 0.9994),
    ("ipsweep", 0.9835, 0.9960, 0.9897),
    ("neptune", 1.0000, 1.0000, 1.0000),
    ("nmap", 0.9978, 0.9906, 0.9942),
    ("normal", 0.9987, 0.9992, 0.9990),
    ("portsweep", 0.9999, 0.9998, 0.9998),
    ("satan", 0.9991, 0.9983, 0.9987),
    ("smurf", 0.9998, 1.0000, 0.9999),
];
pub const REFERENCE_ACCURACY_AFTER: f64 = 0.997886;

fn reference_rows(rows: &[RefRow]) -> Vec<ReferenceRow> {
    rows.iter()
        .map(|&(class, precision, recall, f1)| ReferenceRow {
            class: class.to_string(),
            precision,
            recall,
            f1,
        })
        .collect()
}

fn table(rows: &[(String, [f64; 3])], accuracy: f64) -> String {
    let width = rows.iter().map(|r| r.0.len()).max().unwrap_or(0).max("Class".len());
    let mut s = format!(
        "{:<width$}  {:>9}  {:>9}  {:>9}  {:>9}\n",
        "Class", "Precision", "Recall", "F1-Score", "Accuracy"
    );
    for (i, (name, [p, r, f])) in rows.iter().enumerate() {
        let acc = if i == 0 { format!("{accuracy:.6}") } else { String::new() };
        s.push_str(&format!("{name:<width$}  {p:>9.4}  {r:>9.4}  {f:>9.4}  {acc:>9}\n"));
    }
    s
}

/// Aligned text table: one row per class, accuracy on the first row.
pub fn metrics_table(m: &ClassMetrics) -> String {
    let rows: Vec<_> = m
        .classes
        .iter()
        .map(|c| (c.class.clone(), [c.precision, c.recall, c.f1]))
        .collect();
    table(&rows, m.accuracy)
}

fn reference_table(rows: &[ReferenceRow], accuracy: f64) -> String {
    let rows: Vec<_> = rows
        .iter()
        .map(|c| (c.class.clone(), [c.precision, c.recall, c.f1]))
        .collect();
    table(&rows, accuracy)
}

impl ComparisonReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn to_text(&self, before: &ClassMetrics, after: &ClassMetrics) -> String {
        let mut s = String::new();
        s.push_str("Before augmentation\n");
        s.push_str(&metrics_table(before));
        s.push_str("\nAfter augmentation\n");
        s.push_str(&metrics_table(after));
        let width = self.classes.iter().map(|c| c.class.len()).max().unwrap_or(0).max("Class".len());
        s.push_str(&format!(
            "\nChange\n{:<width$}  {:>9}  {:>9}  {:>9}  {:>9}\n",
            "Class", "Precision", "Recall", "F1-Score", "Improved"
        ));
        for c in &self.classes {
            let mark = if c.recall_improved { "yes" } else { "" };
            s.push_str(&format!(
                "{:<width$}  {:>+9.4}  {:>+9.4}  {:>+9.4}  {:>9}\n",
                c.class, c.precision_delta, c.recall_delta, c.f1_delta, mark
            ));
        }
        s.push_str(&format!(
            "accuracy {:.6} -> {:.6} ({:+.6})\n",
            self.accuracy_before, self.accuracy_after, self.accuracy_delta
        ));
        s.push_str("\nReference, before augmentation\n");
        s.push_str(&reference_table(&self.reference_before, REFERENCE_ACCURACY_BEFORE));
        s.push_str("\nReference, after augmentation\n");
        s.push_str(&reference_table(&self.reference_after, REFERENCE_ACCURACY_AFTER));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn names(k: usize) -> Vec<String> {
        (0..k).map(|i| format!("c{i}")).collect()
    }

    fn cm(counts: Vec<Vec<u64>>) -> ConfusionMatrix {
        ConfusionMatrix {
            class_names: names(counts.len()),
            counts,
        }
    }

    #[test]
    fn perfect_predictions_are_diagonal() {
        let y = [0, 1, 2, 1, 0];
        let m = confusion(&y, &y, &names(3)).unwrap();
        assert_eq!(m.counts, vec![vec![2, 0, 0], vec![0, 2, 0], vec![0, 0, 1]]);
    }

    #[test]
    fn single_off_diagonal_pair() {
        let m = confusion(&[1], &[0], &names(2)).unwrap();
        assert_eq!(m.counts[0][1], 1);
        assert_eq!(m.total(), 1);
    }

    #[test]
    fn out_of_range_and_length_errors() {
        assert!(confusion(&[2], &[0], &names(2)).is_err());
        assert!(confusion(&[0, 1], &[0], &names(2)).is_err());
    }

    #[test]
    fn eight_of_ten_is_point_eight() {
        let pred = [0, 0, 0, 0, 0, 0, 0, 0, 1, 1];
        let truth = [0; 10];
        assert_eq!(accuracy(&pred, &truth).unwrap(), 0.8);
        let m = metrics(&confusion(&pred, &truth, &names(2)).unwrap()).unwrap();
        assert_eq!(m.accuracy, 0.8);
    }

    #[test]
    fn balanced_diagonal_scores_one() {
        let m = metrics(&cm(vec![vec![5, 0], vec![0, 5]])).unwrap();
        assert_eq!(m.accuracy, 1.0);
        for c in &m.classes {
            assert_eq!((c.precision, c.recall, c.f1), (1.0, 1.0, 1.0));
        }
    }

    #[test]
    fn hand_computed_two_by_two() {
        let m = metrics(&cm(vec![vec![3, 1], vec![2, 4]])).unwrap();
        let c0 = &m.classes[0];
        assert!((c0.precision - 0.6).abs() < 1e-15);
        assert!((c0.recall - 0.75).abs() < 1e-15);
        assert!((c0.f1 - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.accuracy - 0.7).abs() < 1e-15);
    }

    #[test]
    fn zero_support_is_flagged() {
        let m = metrics(&cm(vec![vec![4, 0], vec![0, 0]])).unwrap();
        let c1 = &m.classes[1];
        assert_eq!(c1.recall, 0.0);
        assert!(c1.recall_undefined && c1.precision_undefined && c1.f1_undefined);
        assert!(!m.classes[0].recall_undefined);
    }

    #[test]
    fn empty_matrix_rejected() {
        assert!(metrics(&cm(vec![vec![0, 0], vec![0, 0]])).is_err());
    }

    fn scores(recall: f64) -> ClassMetrics {
        ClassMetrics {
            classes: vec![ClassScore {
                class: "nmap".into(),
                precision: 0.9,
                recall,
                f1: 0.8,
                support: 10,
                predicted: 10,
                precision_undefined: false,
                recall_undefined: false,
                f1_undefined: false,
            }],
            accuracy: 0.995362,
            total: 10,
        }
    }

    #[test]
    fn identical_inputs_give_zero_deltas() {
        let r = compare(&scores(0.5), &scores(0.5)).unwrap();
        assert_eq!(r.accuracy_delta, 0.0);
        assert_eq!(r.classes[0].recall_delta, 0.0);
        assert!(r.improved.is_empty());
    }

    #[test]
    fn recall_gain_is_flagged() {
        let mut after = scores(0.9906);
        after.accuracy = 0.997886;
        let r = compare(&scores(0.7480), &after).unwrap();
        assert!((r.classes[0].recall_delta - 0.2426).abs() < 1e-12);
        assert_eq!(r.improved, vec!["nmap".to_string()]);
        assert!((r.accuracy_delta - 0.002524).abs() < 1e-12);
    }

    #[test]
    fn mismatched_classes_rejected() {
        let mut other = scores(0.5);
        other.classes[0].class = "satan".into();
        assert!(compare(&scores(0.5), &other).is_err());
    }

    #[test]
    fn table_header_and_rounding() {
        let t = metrics_table(&metrics(&cm(vec![vec![3, 1], vec![2, 4]])).unwrap());
        let header: Vec<&str> = t.lines().next().unwrap().split_whitespace().collect();
        assert_eq!(header, ["Class", "Precision", "Recall", "F1-Score", "Accuracy"]);
        assert!(t.contains("0.6000") && t.contains("0.7500") && t.contains("0.6667"));
        assert!(t.contains("0.700000"));
    }

    #[test]
    fn confusion_csv_shape() {
        let csv = cm(vec![vec![3, 1], vec![2, 4]]).to_csv();
        assert_eq!(csv, "true\\pred,c0,c1\nc0,3,1\nc1,2,4\n");
    }

    fn matrix_strategy() -> impl Strategy<Value = Vec<Vec<u64>>> {
        (2usize..6).prop_flat_map(|k| proptest::collection::vec(proptest::collection::vec(0u64..50, k), k))
    }

    proptest! {
        #[test]
        fn self_confusion_has_accuracy_one(y in proptest::collection::vec(0usize..5, 1..60)) {
            let m = metrics(&confusion(&y, &y, &names(5)).unwrap()).unwrap();
            prop_assert_eq!(m.accuracy, 1.0);
        }

        #[test]
        fn counts_sum_to_samples(
            pairs in proptest::collection::vec((0usize..4, 0usize..4), 0..80)
        ) {
            let (p, t): (Vec<_>, Vec<_>) = pairs.iter().copied().unzip();
            let m = confusion(&p, &t, &names(4)).unwrap();
            prop_assert_eq!(m.total(), pairs.len() as u64);
        }

        #[test]
        fn micro_recall_equals_accuracy(counts in matrix_strategy()) {
            let c = cm(counts);
            prop_assume!(c.total() > 0);
            let m = metrics(&c).unwrap();
            prop_assert!((micro_recall(&c) - m.accuracy).abs() < 1e-12);
        }

        #[test]
        fn permuting_classes_permutes_metrics(counts in matrix_strategy(), rot in 0usize..6) {
            let c = cm(counts);
            prop_assume!(c.total() > 0);
            let k = c.n_classes();
            let perm: Vec<usize> = (0..k).map(|i| (i + rot) % k).collect();
            let permuted = ConfusionMatrix {
                class_names: perm.iter().map(|&i| c.class_names[i].clone()).collect(),
                counts: perm.iter().map(|&i| perm.iter().map(|&j| c.counts[i][j]).collect()).collect(),
            };
            let a = metrics(&c).unwrap();
            let b = metrics(&permuted).unwrap();
            prop_assert_eq!(a.accuracy, b.accuracy);
            for (new, &old) in perm.iter().enumerate() {
                prop_assert_eq!(&b.classes[new], &a.classes[old]);
            }
        }
    }
}
