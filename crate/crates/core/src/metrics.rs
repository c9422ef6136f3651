//! Ordinal evaluation metrics.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::criteria::ScoreMap;
use crate::dataset::OrdinalLabel;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("no predictions to evaluate")]
    Empty,
    #[error("{truth} true labels but {predicted} predictions")]
    LengthMismatch { truth: usize, predicted: usize },
    #[error("label {label} out of range for {num_classes} classes")]
    LabelOutOfRange { label: u32, num_classes: usize },
    #[error("at least two classes are required, got {0}")]
    TooFewClasses(usize),
    #[error("probability row {row} is not a distribution over {num_classes} classes")]
    NotAProbability { row: usize, num_classes: usize },
}

/// `O[q][j]` counts patterns of true class `q` predicted as class `j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    num_classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn from_labels(
        y_true: &[OrdinalLabel],
        y_pred: &[OrdinalLabel],
        num_classes: usize,
    ) -> Result<Self, MetricError> {
        check_lengths(y_true, y_pred.len())?;
        let mut m = ConfusionMatrix {
            num_classes,
            counts: vec![0; num_classes * num_classes],
        };
        for (&t, &p) in y_true.iter().zip(y_pred) {
            for l in [t, p] {
                if l.zero_based() >= num_classes {
                    return Err(MetricError::LabelOutOfRange {
                        label: l.index(),
                        num_classes,
                    });
                }
            }
            m.counts[t.zero_based() * num_classes + p.zero_based()] += 1;
        }
        Ok(m)
    }

    /// Builds from row-major rows.
    pub fn from_rows(rows: Vec<Vec<u64>>) -> Self {
        let num_classes = rows.len();
        assert!(
            rows.iter().all(|r| r.len() == num_classes),
            "confusion matrix must be square"
        );
        ConfusionMatrix {
            num_classes,
            counts: rows.concat(),
        }
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn get(&self, true_class: usize, predicted_class: usize) -> u64 {
        self.counts[true_class * self.num_classes + predicted_class]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Count of each true class.
    pub fn row_sums(&self) -> Vec<u64> {
        self.counts
            .chunks(self.num_classes)
            .map(|r| r.iter().sum())
            .collect()
    }

    /// Count of each predicted class.
    pub fn column_sums(&self) -> Vec<u64> {
        (0..self.num_classes)
            .map(|j| (0..self.num_classes).map(|q| self.get(q, j)).sum())
            .collect()
    }

    /// CSV with a header of predicted-class indices; each row starts with the
    /// true class index.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("true\\pred");
        for j in 1..=self.num_classes {
            write!(out, ",{j}").unwrap();
        }
        out.push('\n');
        for q in 0..self.num_classes {
            write!(out, "{}", q + 1).unwrap();
            for j in 0..self.num_classes {
                write!(out, ",{}", self.get(q, j)).unwrap();
            }
            out.push('\n');
        }
        out
    }
}

fn check_lengths(y_true: &[OrdinalLabel], predicted: usize) -> Result<(), MetricError> {
    if y_true.len() != predicted {
        return Err(MetricError::LengthMismatch {
            truth: y_true.len(),
            predicted,
        });
    }
    if y_true.is_empty() {
        return Err(MetricError::Empty);
    }
    Ok(())
}

/// Mean absolute score difference between true and predicted classes.
pub fn mae(
    y_true: &[OrdinalLabel],
    y_pred: &[OrdinalLabel],
    scores: &ScoreMap,
) -> Result<f64, MetricError> {
    check_lengths(y_true, y_pred.len())?;
    let total: f64 = y_true
        .iter()
        .zip(y_pred)
        .map(|(t, p)| (scores.score(t.zero_based()) - scores.score(p.zero_based())).abs())
        .sum();
    Ok(total / y_true.len() as f64)
}

/// Quadratic weighted kappa.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Qwk {
    pub value: f64,
    /// The chance-agreement denominator was zero (for example when truth and
    /// predictions are both a single class). `value` is then reported as 0.
    pub degenerate: bool,
}

/// `1 - sum(W*O) / sum(W*E)` with `W[q][j] = (v(q) - v(j))^2 / (Q-1)^2` and
/// `E` the outer product of the marginals divided by `N`.
pub fn qwk(confusion: &ConfusionMatrix, scores: &ScoreMap) -> Result<Qwk, MetricError> {
    let q = confusion.num_classes();
    if q < 2 {
        return Err(MetricError::TooFewClasses(q));
    }
    let n = confusion.total();
    if n == 0 {
        return Err(MetricError::Empty);
    }
    let rows = confusion.row_sums();
    let cols = confusion.column_sums();
    let norm = ((q - 1) * (q - 1)) as f64;
    let n = n as f64;
    let mut observed = 0.0;
    let mut expected = 0.0;
    for (i, &row) in rows.iter().enumerate() {
        for (j, &col) in cols.iter().enumerate() {
            let d = scores.score(i) - scores.score(j);
            let w = d * d / norm;
            observed += w * confusion.get(i, j) as f64;
            expected += w * (row as f64 * col as f64 / n);
        }
    }
    if expected == 0.0 {
        return Ok(Qwk {
            value: 0.0,
            degenerate: true,
        });
    }
    Ok(Qwk {
        value: 1.0 - observed / expected,
        degenerate: false,
    })
}

/// Tolerance on each probability row summing to one.
pub const PROBABILITY_SUM_TOLERANCE: f64 = 1e-9;

/// Ranked probability score: mean squared distance between predicted and
/// observed cumulative distributions.
pub fn rps(y_true: &[OrdinalLabel], probas: &[Vec<f64>]) -> Result<f64, MetricError> {
    check_lengths(y_true, probas.len())?;
    let mut total = 0.0;
    for (row, (t, p)) in y_true.iter().zip(probas).enumerate() {
        let num_classes = p.len();
        let valid = p.iter().all(|&v| v >= 0.0 && v.is_finite())
            && (p.iter().sum::<f64>() - 1.0).abs() <= PROBABILITY_SUM_TOLERANCE;
        if !valid {
            return Err(MetricError::NotAProbability { row, num_classes });
        }
        if t.zero_based() >= num_classes {
            return Err(MetricError::LabelOutOfRange {
                label: t.index(),
                num_classes,
            });
        }
        let mut cumulative = 0.0;
        for (q, &pq) in p.iter().enumerate() {
            cumulative += pq;
            let observed = if t.zero_based() <= q { 1.0 } else { 0.0 };
            let d = cumulative - observed;
            total += d * d;
        }
    }
    Ok(total / y_true.len() as f64)
}

/// All metrics computed on one set of predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mae: f64,
    pub qwk: f64,
    pub rps: f64,
    pub confusion: ConfusionMatrix,
    pub degenerate_qwk: bool,
}

impl EvalReport {
    pub fn compute(
        y_true: &[OrdinalLabel],
        y_pred: &[OrdinalLabel],
        probas: &[Vec<f64>],
        num_classes: usize,
        scores: &ScoreMap,
    ) -> Result<Self, MetricError> {
        let confusion = ConfusionMatrix::from_labels(y_true, y_pred, num_classes)?;
        let kappa = qwk(&confusion, scores)?;
        Ok(EvalReport {
            mae: mae(y_true, y_pred, scores)?,
            qwk: kappa.value,
            rps: rps(y_true, probas)?,
            confusion,
            degenerate_qwk: kappa.degenerate,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ls(ix: &[u32]) -> Vec<OrdinalLabel> {
        ix.iter().map(|&i| OrdinalLabel::new(i).unwrap()).collect()
    }

    #[test]
    fn mae_examples() {
        let id = ScoreMap::Identity;
        assert_eq!(mae(&ls(&[1, 2, 3]), &ls(&[1, 2, 3]), &id).unwrap(), 0.0);
        assert_eq!(mae(&ls(&[1, 3]), &ls(&[2, 3]), &id).unwrap(), 0.5);
        assert_eq!(mae(&ls(&[1]), &ls(&[5]), &id).unwrap(), 4.0);
        assert_eq!(mae(&[], &[], &id), Err(MetricError::Empty));
        assert!(matches!(
            mae(&ls(&[1]), &ls(&[1, 2]), &id),
            Err(MetricError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn mae_uses_scores_on_both_sides() {
        let s = ScoreMap::custom(vec![0.0, 10.0, 11.0]).unwrap();
        assert_eq!(mae(&ls(&[1, 3]), &ls(&[2, 2]), &s).unwrap(), 5.5);
    }

    #[test]
    fn qwk_examples() {
        let id = ScoreMap::Identity;
        for q in 2..6 {
            let rows = (0..q)
                .map(|i| (0..q).map(|j| if i == j { 3 } else { 0 }).collect())
                .collect();
            let k = qwk(&ConfusionMatrix::from_rows(rows), &id).unwrap();
            assert_eq!(
                k,
                Qwk {
                    value: 1.0,
                    degenerate: false
                }
            );
        }
        let anti = ConfusionMatrix::from_rows(vec![vec![0, 1], vec![1, 0]]);
        assert_eq!(qwk(&anti, &id).unwrap().value, -1.0);

        let partial = ConfusionMatrix::from_rows(vec![vec![5, 0, 0], vec![0, 5, 0], vec![0, 0, 0]]);
        // E = 2.5 on each of the four top-left cells; only the off-diagonal
        // pair carries weight 1/4, so sum(W*E) = 2 * 2.5 / 4 = 1.25.
        let k = qwk(&partial, &id).unwrap();
        assert_eq!(k.value, 1.0);
        assert!(!k.degenerate);
    }

    #[test]
    fn qwk_degenerate() {
        let m = ConfusionMatrix::from_rows(vec![vec![4, 0], vec![0, 0]]);
        assert_eq!(
            qwk(&m, &ScoreMap::Identity).unwrap(),
            Qwk {
                value: 0.0,
                degenerate: true
            }
        );
        let empty = ConfusionMatrix::from_rows(vec![vec![0, 0], vec![0, 0]]);
        assert_eq!(qwk(&empty, &ScoreMap::Identity), Err(MetricError::Empty));
    }

    #[test]
    fn rps_examples() {
        assert_eq!(rps(&ls(&[2]), &[vec![0.0, 1.0, 0.0]]).unwrap(), 0.0);
        let v = rps(&ls(&[2]), &[vec![0.2, 0.5, 0.3]]).unwrap();
        assert!((v - 0.13).abs() < 1e-12);
        assert_eq!(rps(&ls(&[1]), &[vec![0.0, 1.0]]).unwrap(), 1.0);
        assert!(matches!(
            rps(&ls(&[1, 1]), &[vec![1.0, 0.0], vec![0.5, 0.6]]),
            Err(MetricError::NotAProbability { row: 1, .. })
        ));
    }

    #[test]
    fn confusion_examples() {
        let m = ConfusionMatrix::from_labels(&ls(&[1, 2]), &ls(&[1, 2]), 2).unwrap();
        assert_eq!(m, ConfusionMatrix::from_rows(vec![vec![1, 0], vec![0, 1]]));
        let m = ConfusionMatrix::from_labels(&ls(&[1, 1]), &ls(&[2, 2]), 2).unwrap();
        assert_eq!(m, ConfusionMatrix::from_rows(vec![vec![0, 2], vec![0, 0]]));
        assert_eq!(m.row_sums(), vec![2, 0]);
        assert_eq!(m.to_csv(), "true\\pred,1,2\n1,0,2\n2,0,0\n");
        assert!(matches!(
            ConfusionMatrix::from_labels(&ls(&[3]), &ls(&[1]), 2),
            Err(MetricError::LabelOutOfRange { label: 3, .. })
        ));
    }
}
