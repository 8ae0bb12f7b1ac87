//! ROC/AUC, threshold selection and cross-validated evaluation.

mod cv;
mod report;
mod roc;
mod threshold;

use thiserror::Error;

use crate::dataset::DataError;
use crate::features::FeatureError;
use crate::net::NetError;

pub use cv::{
    cross_validate, cross_validate_matrix, fit_fold, per_season_accuracy, CvOptions, EvalMode,
    EvalReport, FoldModel, FoldResult, SeasonAccuracy,
};
pub use report::write_report;
pub use roc::{roc_and_auc, RocCurve, RocPoint};
pub use threshold::{accuracy_at, best_threshold, ThresholdCriterion};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("scores and labels must have equal, non-zero length")]
    LengthMismatch,
    #[error("labels contain a single class")]
    SingleClass,
    #[error("label {0} is not binary")]
    NonBinaryLabel(u8),
    #[error("every fold was skipped")]
    NoFolds,
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Counts `(positives, negatives)` after validating the inputs.
fn check_inputs(scores: &[f64], labels: &[u8]) -> Result<(usize, usize), EvalError> {
    if scores.len() != labels.len() || scores.is_empty() {
        return Err(EvalError::LengthMismatch);
    }
    if let Some(&bad) = labels.iter().find(|&&l| l > 1) {
        return Err(EvalError::NonBinaryLabel(bad));
    }
    let pos = labels.iter().filter(|&&l| l == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(EvalError::SingleClass);
    }
    Ok((pos, neg))
}
