use std::fmt;
use std::str::FromStr;

use super::{check_inputs, EvalError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ThresholdCriterion {
    /// Maximise accuracy.
    #[default]
    Accuracy,
    /// Maximise `TPR - FPR`.
    Youden,
}

impl fmt::Display for ThresholdCriterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ThresholdCriterion::Accuracy => "accuracy",
            ThresholdCriterion::Youden => "youden",
        })
    }
}

impl FromStr for ThresholdCriterion {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "accuracy" => Ok(Self::Accuracy),
            "youden" => Ok(Self::Youden),
            _ => Err(format!("unknown threshold criterion {s:?} (accuracy, youden)")),
        }
    }
}

/// Share of rows where `score >= threshold` matches a positive label.
pub fn accuracy_at(scores: &[f64], labels: &[u8], threshold: f64) -> f64 {
    if scores.is_empty() {
        return f64::NAN;
    }
    let correct = scores
        .iter()
        .zip(labels)
        .filter(|(s, l)| (**s >= threshold) == (**l == 1))
        .count();
    correct as f64 / scores.len() as f64
}

/// Threshold and its accuracy. Candidates are 0, 1 and the midpoints
/// between consecutive distinct scores; rows scoring at or above the
/// threshold are predicted positive. Ties go to the candidate nearest 0.5.
pub fn best_threshold(
    scores: &[f64],
    labels: &[u8],
    criterion: ThresholdCriterion,
) -> Result<(f64, f64), EvalError> {
    let (pos, neg) = check_inputs(scores, labels)?;
    let n = scores.len();
    let mut pairs: Vec<(f64, u8)> = scores.iter().copied().zip(labels.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // positives at or above each sorted position
    let mut pos_above = vec![0usize; n + 1];
    for i in (0..n).rev() {
        pos_above[i] = pos_above[i + 1] + usize::from(pairs[i].1 == 1);
    }

    let mut candidates = vec![0.0, 1.0];
    candidates.extend(
        pairs
            .windows(2)
            .filter(|w| w[0].0 != w[1].0)
            .map(|w| (w[0].0 + w[1].0) / 2.0),
    );

    let mut best: Option<(f64, f64, f64)> = None; // (metric, threshold, accuracy)
    for t in candidates {
        let idx = pairs.partition_point(|p| p.0 < t);
        let tp = pos_above[idx];
        let fp = (n - idx) - tp;
        let tn = neg - fp;
        let accuracy = (tp + tn) as f64 / n as f64;
        let metric = match criterion {
            ThresholdCriterion::Accuracy => accuracy,
            ThresholdCriterion::Youden => tp as f64 / pos as f64 - fp as f64 / neg as f64,
        };
        let better = match best {
            None => true,
            Some((m, bt, _)) => {
                metric > m + 1e-12
                    || ((metric - m).abs() <= 1e-12
                        && ((t - 0.5).abs() < (bt - 0.5).abs()
                            || ((t - 0.5).abs() == (bt - 0.5).abs() && t < bt)))
            }
        };
        if better {
            best = Some((metric, t, accuracy));
        }
    }
    let (_, threshold, accuracy) = best.expect("candidate list is never empty");
    Ok((threshold, accuracy))
}
