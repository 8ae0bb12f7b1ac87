use super::{check_inputs, EvalError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    /// Rows scoring at or above this value are predicted positive.
    pub threshold: f64,
}

/// ROC points from threshold `+inf` (the origin) down to the lowest score
/// (the `(1, 1)` corner). Tied scores produce a single diagonal step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
}

impl RocCurve {
    /// Trapezoidal area under the curve.
    pub fn auc(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1].fpr - w[0].fpr) * (w[0].tpr + w[1].tpr) / 2.0)
            .sum()
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["fpr", "tpr", "threshold"])?;
        for p in &self.points {
            w.write_record([p.fpr.to_string(), p.tpr.to_string(), p.threshold.to_string()])?;
        }
        w.flush()
    }
}

pub fn roc_and_auc(scores: &[f64], labels: &[u8]) -> Result<(RocCurve, f64), EvalError> {
    let (pos, neg) = check_inputs(scores, labels)?;
    let mut pairs: Vec<(f64, u8)> = scores.iter().copied().zip(labels.iter().copied()).collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut points = vec![RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: f64::INFINITY,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < pairs.len() {
        let score = pairs[i].0;
        while i < pairs.len() && pairs[i].0 == score {
            if pairs[i].1 == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
            threshold: score,
        });
    }
    let curve = RocCurve { points };
    let auc = curve.auc();
    Ok((curve, auc))
}
