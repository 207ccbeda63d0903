//! Triple-classification metrics from exact confusion counts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Confusion counts plus derived fractions.
///
/// A zero denominator leaves the metric `None` ("n/a" in reports), never a
/// silent zero: defaulting would bias ablation comparisons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
    pub accuracy: f64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

impl Metrics {
    /// Derives all fractions from confusion counts.
    pub fn from_confusion(tp: u64, fp: u64, fn_: u64, tn: u64) -> Result<Metrics> {
        let total = tp + fp + fn_ + tn;
        if total == 0 {
            return Err(Error::Validation("empty evaluation".into()));
        }
        let ratio = |num: u64, den: u64| {
            if den == 0 {
                None
            } else {
                Some(num as f64 / den as f64)
            }
        };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = match (precision, recall) {
            (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
            _ => None,
        };
        Ok(Metrics {
            tp,
            fp,
            fn_,
            tn,
            accuracy: (tp + tn) as f64 / total as f64,
            precision,
            recall,
            f1,
        })
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// One table row with percentages to two decimals, `n/a` when undefined.
    pub fn table_row(&self) -> String {
        let cell = |m: Option<f64>| match m {
            Some(v) => format!("{:6.2}", 100.0 * v),
            None => "   n/a".to_owned(),
        };
        format!(
            "{:6.2} {} {} {}",
            100.0 * self.accuracy,
            cell(self.precision),
            cell(self.recall),
            cell(self.f1)
        )
    }
}

/// Exact confusion-matrix arithmetic over aligned prediction/gold vectors.
pub fn evaluate(predictions: &[bool], gold: &[bool]) -> Result<Metrics> {
    if predictions.len() != gold.len() {
        return Err(Error::Validation(format!(
            "prediction/gold length mismatch: {} vs {}",
            predictions.len(),
            gold.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::Validation("empty evaluation".into()));
    }
    let mut tp = 0;
    let mut fp = 0;
    let mut fn_ = 0;
    let mut tn = 0;
    for (&p, &g) in predictions.iter().zip(gold) {
        match (p, g) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    Metrics::from_confusion(tp, fp, fn_, tn)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_confusion_fixture() {
        // TP=3, FP=1, FN=2, TN=4.
        let m = Metrics::from_confusion(3, 1, 2, 4).unwrap();
        assert!((m.accuracy - 0.7).abs() < 1e-15);
        assert!((m.precision.unwrap() - 0.75).abs() < 1e-15);
        assert!((m.recall.unwrap() - 0.6).abs() < 1e-15);
        assert!((m.f1.unwrap() - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn all_correct_is_all_ones() {
        let m = evaluate(&[true, false, true], &[true, false, true]).unwrap();
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.precision, Some(1.0));
        assert_eq!(m.recall, Some(1.0));
        assert_eq!(m.f1, Some(1.0));
    }

    #[test]
    fn zero_denominators_are_flagged_not_zero() {
        // Never predicts positive: precision undefined.
        let m = evaluate(&[false, false], &[true, false]).unwrap();
        assert_eq!(m.precision, None);
        assert_eq!(m.recall, Some(0.0));
        assert_eq!(m.f1, None);
        // No gold positives: recall undefined.
        let m = evaluate(&[true, false], &[false, false]).unwrap();
        assert_eq!(m.recall, None);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        assert!(evaluate(&[true], &[true, false]).is_err());
        assert!(evaluate(&[], &[]).is_err());
    }

    #[test]
    fn recomputing_from_emitted_counts_reproduces_fractions() {
        let m = evaluate(
            &[true, true, false, true, false, false, true],
            &[true, false, true, true, false, true, true],
        )
        .unwrap();
        let again = Metrics::from_confusion(m.tp, m.fp, m.fn_, m.tn).unwrap();
        assert_eq!(m, again);
    }

    #[test]
    fn table_row_matches_percent_format() {
        let m = Metrics::from_confusion(3, 1, 2, 4).unwrap();
        let row = m.table_row();
        assert!(row.contains("70.00"));
        assert!(row.contains("75.00"));
        assert!(row.contains("60.00"));
        assert!(row.contains("66.67"));
    }
}
