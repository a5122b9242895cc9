use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Classification metrics on one labelled split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub class_names: Vec<String>,
    /// `confusion[true][predicted]`
    pub confusion: Vec<Vec<usize>>,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f1: Vec<f64>,
    pub support: Vec<usize>,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub n_test: usize,
}

/// Harmonic mean of precision and recall, 0 when both are 0.
pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

pub fn compute_metrics(truth: &[usize], predicted: &[usize], n_classes: usize) -> Result<EvaluationReport> {
    if truth.len() != predicted.len() {
        return Err(Error::Shape(format!(
            "{} true labels but {} predictions",
            truth.len(),
            predicted.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::Data("cannot compute metrics on zero samples".into()));
    }
    if n_classes == 0 {
        return Err(Error::Parameter("n_classes must be positive".into()));
    }
    let mut confusion = vec![vec![0usize; n_classes]; n_classes];
    for (&t, &p) in truth.iter().zip(predicted) {
        if t >= n_classes || p >= n_classes {
            return Err(Error::Index(format!("label ({t}, {p}) out of range for {n_classes} classes")));
        }
        confusion[t][p] += 1;
    }
    let mut precision = Vec::with_capacity(n_classes);
    let mut recall = Vec::with_capacity(n_classes);
    let mut support = Vec::with_capacity(n_classes);
    for c in 0..n_classes {
        let tp = confusion[c][c] as f64;
        let predicted_c: usize = confusion.iter().map(|row| row[c]).sum();
        let actual_c: usize = confusion[c].iter().sum();
        precision.push(if predicted_c == 0 {
            warn!("class {c} is never predicted; precision set to 0");
            0.0
        } else {
            tp / predicted_c as f64
        });
        recall.push(if actual_c == 0 {
            warn!("class {c} has no true instances; recall set to 0");
            0.0
        } else {
            tp / actual_c as f64
        });
        support.push(actual_c);
    }
    let f1s: Vec<f64> = precision.iter().zip(&recall).map(|(&p, &r)| f1(p, r)).collect();
    let correct: usize = (0..n_classes).map(|c| confusion[c][c]).sum();
    Ok(EvaluationReport {
        class_names: (0..n_classes).map(|c| c.to_string()).collect(),
        accuracy: correct as f64 / truth.len() as f64,
        macro_f1: f1s.iter().sum::<f64>() / n_classes as f64,
        f1: f1s,
        confusion,
        precision,
        recall,
        support,
        n_test: truth.len(),
    })
}

impl EvaluationReport {
    pub fn with_class_names(mut self, names: &[String]) -> Self {
        if names.len() == self.class_names.len() {
            self.class_names = names.to_vec();
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions() {
        let y = [0, 1, 2, 2, 1, 0];
        let r = compute_metrics(&y, &y, 3).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.macro_f1, 1.0);
        assert!(r.f1.iter().all(|&f| f == 1.0));
    }

    #[test]
    fn reference_low_class_f1() {
        assert!((f1(0.64, 0.97) - 0.771).abs() < 5e-4);
        let mean = (f1(0.64, 0.97) + f1(0.73, 0.84) + f1(0.95, 0.67)) / 3.0;
        assert!((mean - (0.77 + 0.78 + 0.79) / 3.0).abs() < 0.005);
    }

    #[test]
    fn single_class_predictions() {
        let truth = [0, 0, 1, 1, 2, 2];
        let r = compute_metrics(&truth, &[0; 6], 3).unwrap();
        assert!((r.accuracy - 1.0 / 3.0).abs() < 1e-15);
        assert!((r.macro_f1 - 0.5 / 3.0).abs() < 1e-15);
        assert_eq!(r.precision[1], 0.0);
        assert_eq!(r.confusion[2], vec![2, 0, 0]);
    }

    #[test]
    fn errors() {
        assert!(matches!(compute_metrics(&[0], &[0, 1], 2), Err(Error::Shape(_))));
        assert!(matches!(compute_metrics(&[], &[], 2), Err(Error::Data(_))));
        assert!(matches!(compute_metrics(&[3], &[0], 2), Err(Error::Index(_))));
    }

    #[test]
    fn json_round_trip() {
        let r = compute_metrics(&[0, 1, 1, 0, 1], &[0, 1, 0, 0, 1], 2).unwrap();
        let back: EvaluationReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(r, back);
    }
}
