//! Classification metrics and the early-detection deadline sweep.

use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Label};
use crate::error::{AimError, Result};
use crate::model::{forward, label_for_score, ModelParams};

/// Counts of a binary confusion matrix, positive class = misinformation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub true_positive: usize,
    pub false_positive: usize,
    pub true_negative: usize,
    pub false_negative: usize,
}

impl ConfusionMatrix {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Label, Label)>) -> Self {
        let mut m = ConfusionMatrix::default();
        for (actual, predicted) in pairs {
            match (actual, predicted) {
                (Label::Misinformation, Label::Misinformation) => m.true_positive += 1,
                (Label::True, Label::Misinformation) => m.false_positive += 1,
                (Label::True, Label::True) => m.true_negative += 1,
                (Label::Misinformation, Label::True) => m.false_negative += 1,
            }
        }
        m
    }

    pub fn total(&self) -> usize {
        self.true_positive + self.false_positive + self.true_negative + self.false_negative
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
    /// Set when precision or recall had a zero denominator and was reported as 0.
    pub zero_division: bool,
}

impl ClassMetrics {
    fn new(hits: usize, predicted: usize, actual: usize) -> Self {
        let ratio = |num: usize, den: usize| {
            if den == 0 {
                (0.0, true)
            } else {
                (num as f64 / den as f64, false)
            }
        };
        let (precision, zp) = ratio(hits, predicted);
        let (recall, zr) = ratio(hits, actual);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        ClassMetrics {
            precision,
            recall,
            f1,
            support: actual,
            zero_division: zp || zr,
        }
    }
}

/// Accuracy plus per-class metrics; "M" is misinformation (label 1), "T" is
/// true information (label 0).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub threshold: f64,
    pub misinformation: ClassMetrics,
    pub true_information: ClassMetrics,
    pub confusion: ConfusionMatrix,
}

impl EvalReport {
    pub fn from_confusion(confusion: ConfusionMatrix, threshold: f64) -> Result<Self> {
        let total = confusion.total();
        if total == 0 {
            return Err(AimError::validation("no events to evaluate"));
        }
        let c = &confusion;
        Ok(EvalReport {
            accuracy: (c.true_positive + c.true_negative) as f64 / total as f64,
            threshold,
            misinformation: ClassMetrics::new(
                c.true_positive,
                c.true_positive + c.false_positive,
                c.true_positive + c.false_negative,
            ),
            true_information: ClassMetrics::new(
                c.true_negative,
                c.true_negative + c.false_negative,
                c.true_negative + c.false_positive,
            ),
            confusion,
        })
    }

    /// Aligned text table with one row per class.
    pub fn to_table(&self, method: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<8} {:<6} {:>9} {:>10} {:>7} {:>9} {:>8}",
            "method", "class", "accuracy", "precision", "recall", "f1-score", "support"
        );
        let rows = [("M", &self.misinformation), ("T", &self.true_information)];
        for (i, (class, m)) in rows.iter().enumerate() {
            let (name, acc) = if i == 0 {
                (method.to_string(), format!("{:.3}", self.accuracy))
            } else {
                (String::new(), String::new())
            };
            let _ = writeln!(
                s,
                "{:<8} {:<6} {:>9} {:>10.3} {:>7.3} {:>9.3} {:>8}",
                name, class, acc, m.precision, m.recall, m.f1, m.support
            );
        }
        s
    }
}

/// Scores every event and tallies metrics at `threshold`.
pub fn evaluate(ds: &Dataset, p: &ModelParams, threshold: f64) -> Result<EvalReport> {
    if ds.is_empty() {
        return Err(AimError::validation("no events to evaluate"));
    }
    let pairs = ds
        .events()
        .iter()
        .map(|e| Ok((e.label(), label_for_score(forward(e, p)?.score, threshold))))
        .collect::<Result<Vec<_>>>()?;
    EvalReport::from_confusion(ConfusionMatrix::from_pairs(pairs), threshold)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EarlyDetectionCurve {
    pub deadlines_secs: Vec<f64>,
    pub accuracy_at: Vec<f64>,
    pub official_report_secs: Option<f64>,
}

impl EarlyDetectionCurve {
    /// CSV with header `deadline_hours,accuracy`; an infinite deadline is
    /// written as `inf`.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "deadline_hours,accuracy")?;
        for (&d, &a) in self.deadlines_secs.iter().zip(&self.accuracy_at) {
            let hours = if d.is_infinite() {
                "inf".to_string()
            } else {
                (d / 3600.0).to_string()
            };
            writeln!(w, "{hours},{a}")?;
        }
        Ok(())
    }
}

/// Accuracy of the same model on every event truncated at each deadline.
pub fn early_detection_sweep(
    ds: &Dataset,
    p: &ModelParams,
    deadlines_secs: &[f64],
    threshold: f64,
) -> Result<EarlyDetectionCurve> {
    if deadlines_secs.iter().any(|d| d.is_nan() || *d < 0.0) {
        return Err(AimError::validation("deadlines must be non-negative"));
    }
    if deadlines_secs.windows(2).any(|w| w[1] < w[0]) {
        return Err(AimError::validation("deadlines must be ascending"));
    }
    let accuracy_at = deadlines_secs
        .iter()
        .map(|&d| evaluate(&ds.truncate(d), p, threshold).map(|r| r.accuracy))
        .collect::<Result<Vec<_>>>()?;
    Ok(EarlyDetectionCurve {
        deadlines_secs: deadlines_secs.to_vec(),
        accuracy_at,
        official_report_secs: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Event, Microblog};
    use crate::model::ModelShape;

    fn pairs(actual: &[u8], predicted: &[u8]) -> ConfusionMatrix {
        ConfusionMatrix::from_pairs(
            actual
                .iter()
                .zip(predicted)
                .map(|(&a, &p)| (Label::try_from(a).unwrap(), Label::try_from(p).unwrap())),
        )
    }

    #[test]
    fn perfect_predictions() {
        let r = EvalReport::from_confusion(pairs(&[1, 0, 1, 0], &[1, 0, 1, 0]), 0.5).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.misinformation.f1, 1.0);
        assert_eq!(r.true_information.f1, 1.0);
    }

    #[test]
    fn always_positive_on_balanced_set() {
        let r = EvalReport::from_confusion(pairs(&[1, 0, 1, 0], &[1, 1, 1, 1]), 0.5).unwrap();
        assert_eq!(r.accuracy, 0.5);
        assert_eq!(r.misinformation.recall, 1.0);
        assert_eq!(r.misinformation.precision, 0.5);
        assert_eq!(r.true_information.recall, 0.0);
        assert_eq!(r.true_information.f1, 0.0);
        assert!(r.true_information.zero_division);
        assert!(!r.misinformation.zero_division);
    }

    /// Ten events scored by a fixed linear model on one feature: the score
    /// is sigmoid(x), so the prediction is 1 iff x >= 0.
    #[test]
    fn fixed_fixture_matches_hand_count() {
        // (x, label): predictions 1 for x >= 0.
        let rows: [(f64, u8); 10] = [
            (2.0, 1),  // TP
            (0.5, 1),  // TP
            (0.0, 1),  // TP (score 0.5 ties to 1)
            (-1.0, 1), // FN
            (3.0, 0),  // FP
            (0.1, 0),  // FP
            (-0.2, 0), // TN
            (-2.0, 0), // TN
            (-3.0, 0), // TN
            (-0.5, 1), // FN
        ];
        let events = rows
            .iter()
            .enumerate()
            .map(|(i, &(x, l))| {
                Event::new(
                    format!("e{i}"),
                    Label::try_from(l).unwrap(),
                    vec![Microblog::with_features("m", 0, vec![x])],
                )
                .unwrap()
            })
            .collect();
        let ds = Dataset::new(events, 1).unwrap();
        let mut p = ModelParams::zeros(&ModelShape {
            dim: 1,
            hidden_dim: 1,
            horizon_bins: 1,
            bin_width_secs: 3600.0,
        });
        p.classifier.weights = vec![1.0];
        let r = evaluate(&ds, &p, 0.5).unwrap();
        assert_eq!(
            r.confusion,
            ConfusionMatrix {
                true_positive: 3,
                false_positive: 2,
                true_negative: 3,
                false_negative: 2,
            }
        );
        assert_eq!(r.accuracy, 0.6);
        assert_eq!(r.misinformation.precision, 0.6);
        assert_eq!(r.misinformation.recall, 0.6);
        assert_eq!(r.true_information.support, 5);
        assert!((r.misinformation.f1 - 0.6).abs() < 1e-15);

        let strict = evaluate(&ds, &p, 0.6).unwrap();
        // x = 0.0 and 0.1 fall below sigmoid^-1(0.6) ≈ 0.405.
        assert_eq!(strict.confusion.true_positive, 2);
        assert_eq!(strict.confusion.false_positive, 1);
    }

    #[test]
    fn empty_dataset_is_rejected() {
        let p = ModelParams::zeros(&ModelShape::default());
        assert!(evaluate(&Dataset::empty(50), &p, 0.5).is_err());
    }

    #[test]
    fn table_has_two_class_rows() {
        let r = EvalReport::from_confusion(pairs(&[1, 0, 1, 0], &[1, 0, 0, 0]), 0.5).unwrap();
        let t = r.to_table("AIM");
        let lines: Vec<_> = t.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("AIM      M"));
        assert!(lines[1].contains("0.750"));
        assert!(lines[2].trim_start().starts_with('T'));
    }

    #[test]
    fn curve_csv() {
        let c = EarlyDetectionCurve {
            deadlines_secs: vec![0.0, 5400.0, f64::INFINITY],
            accuracy_at: vec![0.5, 0.75, 1.0],
            official_report_secs: None,
        };
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "deadline_hours,accuracy\n0,0.5\n1.5,0.75\ninf,1\n"
        );
    }

    #[test]
    fn sweep_rejects_unsorted_deadlines() {
        let p = ModelParams::zeros(&ModelShape::default());
        assert!(early_detection_sweep(&Dataset::empty(50), &p, &[10.0, 5.0], 0.5).is_err());
    }
}
