use super::DataError;
use crate::features::{FeatureMatrix, FeatureRow};

/// Per-column z-score parameters learned from training rows.
///
/// Uses the population standard deviation (divide by `n`).
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(train: &FeatureMatrix) -> Result<Self, DataError> {
        if train.rows.is_empty() {
            return Err(DataError::EmptyMatrix);
        }
        let width = train.columns.len();
        let n = train.rows.len() as f64;
        let mut mean = vec![0.0; width];
        for (i, row) in train.rows.iter().enumerate() {
            if row.values.len() != width {
                return Err(DataError::WidthMismatch {
                    expected: width,
                    found: row.values.len(),
                });
            }
            for (acc, v) in mean.iter_mut().zip(&row.values) {
                *acc += v.ok_or(DataError::NaPresent(i))?;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; width];
        for row in &train.rows {
            for ((acc, v), m) in var.iter_mut().zip(&row.values).zip(&mean) {
                let d = v.unwrap_or(*m) - m;
                *acc += d * d;
            }
        }
        let std: Vec<f64> = var.iter().map(|v| (v / n).sqrt()).collect();
        for (j, (s, m)) in std.iter().zip(&mean).enumerate() {
            if !(s.is_finite() && *s > 1e-12 * (1.0 + m.abs())) {
                return Err(DataError::ConstantColumn(train.columns[j].clone()));
            }
        }
        Ok(Self { mean, std })
    }

    /// Applies the training statistics; NA entries stay NA.
    pub fn apply(&self, m: &FeatureMatrix) -> Result<FeatureMatrix, DataError> {
        if m.columns.len() != self.mean.len() {
            return Err(DataError::WidthMismatch {
                expected: self.mean.len(),
                found: m.columns.len(),
            });
        }
        let rows = m
            .rows
            .iter()
            .map(|r| FeatureRow {
                values: r
                    .values
                    .iter()
                    .zip(self.mean.iter().zip(&self.std))
                    .map(|(v, (mu, sd))| v.map(|x| (x - mu) / sd))
                    .collect(),
                ..r.clone()
            })
            .collect();
        Ok(FeatureMatrix {
            columns: m.columns.clone(),
            rows,
        })
    }
}
