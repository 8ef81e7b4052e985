//! Binary classification metrics with Up (1) as the positive class.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

pub fn confusion(y_true: &[u8], y_pred: &[u8]) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Dimension {
            expected: y_true.len(),
            got: y_pred.len(),
        });
    }
    let mut cm = ConfusionMatrix::default();
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t, p) {
            (1, 1) => cm.tp += 1,
            (0, 1) => cm.fp += 1,
            (0, 0) => cm.tn += 1,
            (1, 0) => cm.fn_ += 1,
            _ => return Err(Error::InvalidData(format!("label pair ({t}, {p}) is not binary"))),
        }
    }
    Ok(cm)
}

/// A metric value; `degenerate` is set when its denominator was zero and the
/// value was defined as 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub value: f64,
    pub degenerate: bool,
}

fn ratio(num: usize, den: usize) -> Score {
    if den == 0 {
        Score {
            value: 0.0,
            degenerate: true,
        }
    } else {
        Score {
            value: num as f64 / den as f64,
            degenerate: false,
        }
    }
}

pub fn accuracy(cm: &ConfusionMatrix) -> Score {
    ratio(cm.tp + cm.tn, cm.total())
}

pub fn precision(cm: &ConfusionMatrix) -> Score {
    ratio(cm.tp, cm.tp + cm.fp)
}

pub fn recall(cm: &ConfusionMatrix) -> Score {
    ratio(cm.tp, cm.tp + cm.fn_)
}

pub fn f1(cm: &ConfusionMatrix) -> Score {
    let (p, r) = (precision(cm).value, recall(cm).value);
    if p + r == 0.0 {
        Score {
            value: 0.0,
            degenerate: true,
        }
    } else {
        Score {
            value: 2.0 * p * r / (p + r),
            degenerate: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    Accuracy,
    Precision,
    Recall,
    F1,
}

/// All four scores for one evaluation, flattened for JSON output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub confusion: ConfusionMatrix,
    pub degenerate: Vec<Metric>,
}

impl Metrics {
    pub fn from_confusion(cm: ConfusionMatrix) -> Self {
        let scores = [
            (Metric::Accuracy, accuracy(&cm)),
            (Metric::Precision, precision(&cm)),
            (Metric::Recall, recall(&cm)),
            (Metric::F1, f1(&cm)),
        ];
        Self {
            accuracy: scores[0].1.value,
            precision: scores[1].1.value,
            recall: scores[2].1.value,
            f1: scores[3].1.value,
            confusion: cm,
            degenerate: scores
                .iter()
                .filter(|(_, s)| s.degenerate)
                .map(|(m, _)| *m)
                .collect(),
        }
    }

    pub fn evaluate(y_true: &[u8], y_pred: &[u8]) -> Result<Self> {
        Ok(Self::from_confusion(confusion(y_true, y_pred)?))
    }

    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Accuracy => self.accuracy,
            Metric::Precision => self.precision,
            Metric::Recall => self.recall,
            Metric::F1 => self.f1,
        }
    }
}

/// One line of the model comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub model: String,
    pub cv_accuracy: f64,
    pub test: Metrics,
}

/// Fixed-width comparison table: train CV accuracy, then held-out test
/// accuracy, precision, recall and F1.
pub fn render_table(rows: &[ComparisonRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<22} {:>11} {:>13} {:>10} {:>8} {:>8}",
        "Model", "CV accuracy", "Test accuracy", "Precision", "Recall", "F1"
    );
    let _ = writeln!(out, "{}", "-".repeat(77));
    for r in rows {
        let _ = writeln!(
            out,
            "{:<22} {:>11.4} {:>13.4} {:>10.4} {:>8.4} {:>8.4}",
            r.model, r.cv_accuracy, r.test.accuracy, r.test.precision, r.test.recall, r.test.f1
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn confusion_examples() {
        assert_eq!(
            confusion(&[1, 0], &[1, 0]).unwrap(),
            ConfusionMatrix { tp: 1, fp: 0, tn: 1, fn_: 0 }
        );
        assert_eq!(confusion(&[1], &[0]).unwrap(), ConfusionMatrix { tp: 0, fp: 0, tn: 0, fn_: 1 });
        assert_eq!(confusion(&[], &[]).unwrap(), ConfusionMatrix::default());
        assert!(matches!(confusion(&[1], &[]), Err(Error::Dimension { .. })));
        assert!(confusion(&[2], &[1]).is_err());
    }

    #[test]
    fn balanced_matrix_scores_half() {
        let m = Metrics::from_confusion(ConfusionMatrix { tp: 1, fp: 1, tn: 1, fn_: 1 });
        assert_eq!((m.accuracy, m.precision, m.recall, m.f1), (0.5, 0.5, 0.5, 0.5));
        assert!(m.degenerate.is_empty());
    }

    #[test]
    fn perfect_prediction() {
        let y = [1, 0, 1, 1, 0];
        let m = Metrics::evaluate(&y, &y).unwrap();
        assert_eq!((m.accuracy, m.precision, m.recall, m.f1), (1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn zero_denominator_is_flagged() {
        let cm = ConfusionMatrix { tp: 0, fp: 0, tn: 3, fn_: 2 };
        let p = precision(&cm);
        assert_eq!(p.value, 0.0);
        assert!(p.degenerate);
        let m = Metrics::from_confusion(cm);
        assert_eq!(m.degenerate, vec![Metric::Precision, Metric::F1]);
    }

    #[test]
    fn table_has_one_line_per_model() {
        let m = Metrics::from_confusion(ConfusionMatrix { tp: 1, fp: 1, tn: 1, fn_: 1 });
        let table = render_table(&[ComparisonRow {
            model: "random_forest".into(),
            cv_accuracy: 0.655,
            test: m,
        }]);
        assert_eq!(table.lines().count(), 3);
        assert!(table.lines().nth(2).unwrap().starts_with("random_forest"));
        assert!(table.contains("0.6550"));
    }

    proptest! {
        #[test]
        fn f1_is_harmonic_mean(tp in 1usize..50, fp in 0usize..50, fn_ in 0usize..50, tn in 0usize..50) {
            let cm = ConfusionMatrix { tp, fp, tn, fn_ };
            let (p, r, f) = (precision(&cm).value, recall(&cm).value, f1(&cm).value);
            prop_assert!(f <= p.max(r) + 1e-12 && f >= p.min(r) - 1e-12);
            prop_assert!((f - 2.0 / (1.0 / p + 1.0 / r)).abs() < 1e-12);
        }

        #[test]
        fn self_comparison_is_perfect(y in proptest::collection::vec(0u8..2, 2..60)) {
            prop_assume!(y.contains(&0) && y.contains(&1));
            let m = Metrics::evaluate(&y, &y).unwrap();
            prop_assert_eq!((m.accuracy, m.precision, m.recall, m.f1), (1.0, 1.0, 1.0, 1.0));
        }
    }
}
