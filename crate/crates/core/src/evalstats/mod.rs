//! Accuracy accounting, cross-validated grid search and the rank-based
//! comparison of several models over several datasets.

mod grid;
mod stats;

use thiserror::Error;

use crate::datakit::{DataError, Label};
use crate::models::ModelError;

pub use self::grid::{grid_search, pow2_grid, CvRow, GridResult, GridSpec};
pub use self::stats::{
    average_ranks, friedman, nemenyi_cd, q_alpha_005, rank_row, sign_test_threshold, win_tie_loss, AccuracyTable,
    EvalReport, WinTieLoss, Q_ALPHA_005,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{predicted} predictions for {truth} labels")]
    LengthMismatch { predicted: usize, truth: usize },
    #[error("nothing to evaluate")]
    Empty,
    #[error("accuracy table has no entry for dataset {dataset}, model {model}")]
    IncompleteTable { dataset: String, model: String },
    #[error("unknown model {0}")]
    UnknownModel(String),
    #[error("unknown dataset {0}")]
    UnknownDataset(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("every grid cell failed; last error: {0}")]
    AllCellsFailed(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Percentage of matching labels.
pub fn accuracy(predicted: &[Label], truth: &[Label]) -> Result<f64, EvalError> {
    if predicted.len() != truth.len() {
        return Err(EvalError::LengthMismatch {
            predicted: predicted.len(),
            truth: truth.len(),
        });
    }
    if truth.is_empty() {
        return Err(EvalError::Empty);
    }
    let hits = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(100.0 * hits as f64 / truth.len() as f64)
}
