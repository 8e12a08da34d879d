//! Datasets and the data preparation steps of the experimental protocol:
//! CSV ingestion, min-max scaling, stratified splits and folds, label noise,
//! and the synthetic cross-plane generator.

mod csv;
mod split;
mod synth;

use std::fmt;
use std::path::PathBuf;

use nalgebra::DMatrix;
use thiserror::Error;

pub use self::csv::{load_csv, read_csv, write_csv, CsvOptions, LabelColumn, LabelMap};
pub use self::split::{inject_label_noise, kfold_indices, split, SplitPlan};
pub use self::synth::{gen_crossplane, CrossplaneSpec};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: ::csv::Error,
    },
    #[error("parse error at row {row}, column {column}: {value:?} is not a number")]
    Parse {
        row: usize,
        column: usize,
        value: String,
    },
    #[error("row {row} has {found} fields, expected {expected}")]
    Arity {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("label values {0:?} do not form one of the alphabets {{-1,+1}}, {{0,1}}, {{1,2}}")]
    MixedLabelAlphabet(Vec<String>),
    #[error("file contains no data rows")]
    EmptyFile,
    #[error("label column {column} is out of range for {width} columns")]
    LabelColumnOutOfRange { column: usize, width: usize },
    #[error("class {label} has {count} samples, at least {needed} required")]
    ClassTooSmall {
        label: Label,
        count: usize,
        needed: usize,
    },
    #[error("fraction {0} is out of range")]
    InvalidFraction(f64),
    #[error("fold count {0} must be at least 2")]
    InvalidFolds(usize),
    #[error("{features} feature rows but {labels} labels")]
    LengthMismatch { features: usize, labels: usize },
    #[error("non-finite feature value at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },
    #[error("dataset has {found} features, expected {expected}")]
    FeatureMismatch { expected: usize, found: usize },
}

/// Binary class label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Pos,
    Neg,
}

impl Label {
    pub fn from_sign(v: f64) -> Self {
        if v >= 0.0 {
            Label::Pos
        } else {
            Label::Neg
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Label::Pos => 1.0,
            Label::Neg => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Label::Pos => Label::Neg,
            Label::Neg => Label::Pos,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Pos => "+1",
            Label::Neg => "-1",
        })
    }
}

/// Feature matrix (one sample per row) with ±1 labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    features: DMatrix<f64>,
    labels: Vec<Label>,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        features: DMatrix<f64>,
        labels: Vec<Label>,
    ) -> Result<Self, DataError> {
        if features.nrows() != labels.len() {
            return Err(DataError::LengthMismatch {
                features: features.nrows(),
                labels: labels.len(),
            });
        }
        for row in 0..features.nrows() {
            for column in 0..features.ncols() {
                if !features[(row, column)].is_finite() {
                    return Err(DataError::NonFinite { row, column });
                }
            }
        }
        Ok(Self {
            name: name.into(),
            features,
            labels,
        })
    }

    /// Builds a dataset from the two class matrices, `+1` rows first.
    pub fn from_classes(
        name: impl Into<String>,
        pos: &DMatrix<f64>,
        neg: &DMatrix<f64>,
    ) -> Result<Self, DataError> {
        if pos.ncols() != neg.ncols() {
            return Err(DataError::FeatureMismatch {
                expected: pos.ncols(),
                found: neg.ncols(),
            });
        }
        let (m1, m2) = (pos.nrows(), neg.nrows());
        let features = DMatrix::from_fn(m1 + m2, pos.ncols(), |i, j| {
            if i < m1 {
                pos[(i, j)]
            } else {
                neg[(i - m1, j)]
            }
        });
        let labels = std::iter::repeat_n(Label::Pos, m1)
            .chain(std::iter::repeat_n(Label::Neg, m2))
            .collect();
        Self::new(name, features, labels)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn set_name(&mut self, name: impl Into<String>) {
        self.name = name.into();
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.features.row(i).iter().copied().collect()
    }

    /// Same features, replaced labels.
    pub fn with_labels(&self, labels: Vec<Label>) -> Result<Self, DataError> {
        Self::new(self.name.clone(), self.features.clone(), labels)
    }

    /// Rows at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let features = DMatrix::from_fn(indices.len(), self.n_features(), |i, j| {
            self.features[(indices[i], j)]
        });
        Self {
            name: self.name.clone(),
            features,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    pub fn class_indices(&self, label: Label) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.labels[i] == label).collect()
    }

    /// `+1` rows as `A` or `−1` rows as `B`, in dataset order.
    pub fn class_matrix(&self, label: Label) -> DMatrix<f64> {
        let idx = self.class_indices(label);
        DMatrix::from_fn(idx.len(), self.n_features(), |i, j| self.features[(idx[i], j)])
    }

    /// `(count of +1, count of −1)`.
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.labels.iter().filter(|&&l| l == Label::Pos).count();
        (pos, self.len() - pos)
    }

    pub fn require_both_classes(&self) -> Result<(), DataError> {
        let (pos, neg) = self.class_counts();
        for (label, count) in [(Label::Pos, pos), (Label::Neg, neg)] {
            if count == 0 {
                return Err(DataError::ClassTooSmall {
                    label,
                    count,
                    needed: 1,
                });
            }
        }
        Ok(())
    }
}

/// Per-feature affine map onto `[0, 1]` fitted on a training set.
#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxScaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(train: &Dataset) -> Self {
        let x = train.features();
        let (min, max) = (0..x.ncols())
            .map(|j| {
                let col = x.column(j);
                (col.min(), col.max())
            })
            .unzip();
        Self { min, max }
    }

    /// Constant training features map to 0; values outside the training
    /// range are not clamped.
    pub fn transform_matrix(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>, DataError> {
        if x.ncols() != self.min.len() {
            return Err(DataError::FeatureMismatch {
                expected: self.min.len(),
                found: x.ncols(),
            });
        }
        Ok(DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| {
            let range = self.max[j] - self.min[j];
            if range > 0.0 {
                (x[(i, j)] - self.min[j]) / range
            } else {
                0.0
            }
        }))
    }

    pub fn transform(&self, ds: &Dataset) -> Result<Dataset, DataError> {
        Dataset::new(
            ds.name(),
            self.transform_matrix(ds.features())?,
            ds.labels().to_vec(),
        )
    }
}

/// Scales `train` onto `[0, 1]` per feature and applies the same map to
/// every dataset in `others`.
pub fn minmax_normalize(
    train: &Dataset,
    others: &[Dataset],
) -> Result<(Dataset, Vec<Dataset>, MinMaxScaler), DataError> {
    let scaler = MinMaxScaler::fit(train);
    let scaled = scaler.transform(train)?;
    let rest = others
        .iter()
        .map(|d| scaler.transform(d))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((scaled, rest, scaler))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column_dataset(values: &[f64]) -> Dataset {
        let labels = (0..values.len())
            .map(|i| if i % 2 == 0 { Label::Pos } else { Label::Neg })
            .collect();
        Dataset::new("t", DMatrix::from_column_slice(values.len(), 1, values), labels).unwrap()
    }

    #[test]
    fn minmax_examples() {
        let (t, _, _) = minmax_normalize(&column_dataset(&[0.0, 5.0, 10.0]), &[]).unwrap();
        assert_eq!(t.features().as_slice(), &[0.0, 0.5, 1.0]);

        let (t, _, _) = minmax_normalize(&column_dataset(&[3.0, 3.0]), &[]).unwrap();
        assert_eq!(t.features().as_slice(), &[0.0, 0.0]);

        let (_, others, _) =
            minmax_normalize(&column_dataset(&[0.0, 10.0]), &[column_dataset(&[20.0, -5.0])])
                .unwrap();
        assert_eq!(others[0].features().as_slice(), &[2.0, -0.5]);
    }

    #[test]
    fn minmax_is_idempotent_on_train() {
        let ds = column_dataset(&[0.3, -1.7, 8.25, 4.0, 4.0]);
        let (once, _, _) = minmax_normalize(&ds, &[]).unwrap();
        let (twice, _, _) = minmax_normalize(&once, &[]).unwrap();
        for (a, b) in once.features().iter().zip(twice.features().iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_finite_and_mismatched() {
        let x = DMatrix::from_row_slice(2, 1, &[1.0, f64::NAN]);
        assert!(matches!(
            Dataset::new("x", x, vec![Label::Pos, Label::Neg]),
            Err(DataError::NonFinite { row: 1, column: 0 })
        ));
        let x = DMatrix::from_row_slice(2, 1, &[1.0, 2.0]);
        assert!(matches!(
            Dataset::new("x", x, vec![Label::Pos]),
            Err(DataError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn class_matrices_keep_row_order() {
        let ds = column_dataset(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(ds.class_matrix(Label::Pos).as_slice(), &[1.0, 3.0, 5.0]);
        assert_eq!(ds.class_matrix(Label::Neg).as_slice(), &[2.0, 4.0]);
        assert_eq!(ds.class_counts(), (3, 2));
    }
}
