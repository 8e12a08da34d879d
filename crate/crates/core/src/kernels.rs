//! Kernel evaluation, Gram matrices and feature-space distances.
//!
//! Distances in the implicit feature space `ψ` are computed from kernel
//! values only:
//!
//! * `‖ψ(x) − ψ(y)‖ = √(K(x,x) − 2K(x,y) + K(y,y))`
//! * `‖ψ(x) − C‖ = √(K(x,x) − (2/p) Σⱼ K(x,xⱼ) + (1/p²) Σⱼ Σₗ K(xⱼ,xₗ))`
//!   for the centroid `C` of `p` class members.

use std::fmt;

use nalgebra::DMatrix;
use thiserror::Error;

/// Radicands in `[-RADICAND_CLAMP, 0)` are treated as zero.
pub const RADICAND_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("dimension mismatch: expected {expected} features, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("input contains a non-finite value")]
    NonFinite,
    #[error("negative radicand {0:e} in feature-space distance; kernel is not positive semidefinite")]
    NegativeRadicand(f64),
    #[error("class has no members")]
    EmptyClass,
    #[error("Gaussian kernel width must be positive and finite, got {0}")]
    InvalidSigma(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    Linear,
    /// `exp(−‖x − y‖² / 2σ²)`.
    Gaussian { sigma: f64 },
}

impl KernelSpec {
    pub fn gaussian(sigma: f64) -> Result<Self, KernelError> {
        if sigma.is_finite() && sigma > 0.0 {
            Ok(KernelSpec::Gaussian { sigma })
        } else {
            Err(KernelError::InvalidSigma(sigma))
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, KernelSpec::Linear)
    }

    pub fn sigma(&self) -> Option<f64> {
        match self {
            KernelSpec::Linear => None,
            KernelSpec::Gaussian { sigma } => Some(*sigma),
        }
    }

    /// Kernel value for two equally long samples.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            KernelSpec::Linear => x.iter().zip(y).map(|(a, b)| a * b).sum(),
            KernelSpec::Gaussian { sigma } => {
                let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-sq / (2.0 * sigma * sigma)).exp()
            }
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::Linear => write!(f, "linear"),
            KernelSpec::Gaussian { sigma } => write!(f, "gaussian(sigma={sigma})"),
        }
    }
}

/// Row-major copy of a sample matrix, for cache-friendly row access.
pub(crate) fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

fn check_finite(m: &DMatrix<f64>) -> Result<(), KernelError> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(KernelError::NonFinite)
    }
}

/// `K(X, Y)` with entry `(i, j) = K(Xᵢ, Yⱼ)`.
pub fn gram(x: &DMatrix<f64>, y: &DMatrix<f64>, kernel: KernelSpec) -> Result<DMatrix<f64>, KernelError> {
    if x.ncols() != y.ncols() {
        return Err(KernelError::DimensionMismatch {
            expected: x.ncols(),
            found: y.ncols(),
        });
    }
    check_finite(x)?;
    check_finite(y)?;
    let xr = rows_of(x);
    let yr = rows_of(y);
    Ok(DMatrix::from_fn(x.nrows(), y.nrows(), |i, j| kernel.eval(&xr[i], &yr[j])))
}

/// Symmetric `K(X, X)`, evaluating each unordered pair once.
pub fn gram_sym(x: &DMatrix<f64>, kernel: KernelSpec) -> Result<DMatrix<f64>, KernelError> {
    check_finite(x)?;
    let xr = rows_of(x);
    let m = xr.len();
    let mut k = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let v = kernel.eval(&xr[i], &xr[j]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}

/// Square root of a radicand, clamping round-off negatives to zero.
pub fn clamped_sqrt(radicand: f64) -> Result<f64, KernelError> {
    if radicand >= 0.0 {
        Ok(radicand.sqrt())
    } else if radicand >= -RADICAND_CLAMP {
        Ok(0.0)
    } else {
        Err(KernelError::NegativeRadicand(radicand))
    }
}

/// `‖ψ(x) − ψ(y)‖` from kernel values.
pub fn feature_distance(x: &[f64], y: &[f64], kernel: KernelSpec) -> Result<f64, KernelError> {
    if x.len() != y.len() {
        return Err(KernelError::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    if !x.iter().chain(y).all(|v| v.is_finite()) {
        return Err(KernelError::NonFinite);
    }
    clamped_sqrt(kernel.eval(x, x) - 2.0 * kernel.eval(x, y) + kernel.eval(y, y))
}

/// Centroid of a class in feature space, holding the cached double sum
/// `(1/p²) Σⱼ Σₗ K(xⱼ, xₗ)`.
#[derive(Debug, Clone)]
pub struct ClassCenter {
    members: Vec<Vec<f64>>,
    kernel: KernelSpec,
    self_term: f64,
}

impl ClassCenter {
    pub fn new(members: &DMatrix<f64>, kernel: KernelSpec) -> Result<Self, KernelError> {
        if members.nrows() == 0 {
            return Err(KernelError::EmptyClass);
        }
        let k = gram_sym(members, kernel)?;
        let p = members.nrows() as f64;
        Ok(Self {
            members: rows_of(members),
            kernel,
            self_term: k.sum() / (p * p),
        })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// `‖ψ(x) − C‖`.
    pub fn distance(&self, x: &[f64]) -> Result<f64, KernelError> {
        let n = self.members[0].len();
        if x.len() != n {
            return Err(KernelError::DimensionMismatch {
                expected: n,
                found: x.len(),
            });
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(KernelError::NonFinite);
        }
        let p = self.members.len() as f64;
        let cross: f64 = self.members.iter().map(|m| self.kernel.eval(x, m)).sum();
        clamped_sqrt(self.kernel.eval(x, x) - 2.0 * cross / p + self.self_term)
    }
}

/// `‖ψ(x) − C‖` for the centroid of `class_members`.
pub fn distance_to_center(
    x: &[f64],
    class_members: &DMatrix<f64>,
    kernel: KernelSpec,
) -> Result<f64, KernelError> {
    ClassCenter::new(class_members, kernel)?.distance(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn linear_gram_of_orthonormal_rows() {
        let x = DMatrix::identity(2, 2);
        assert_eq!(gram(&x, &x, KernelSpec::Linear).unwrap(), DMatrix::identity(2, 2));
    }

    #[test]
    fn gaussian_values() {
        let k = KernelSpec::gaussian(1.0).unwrap();
        assert_eq!(k.eval(&[0.3, 0.4], &[0.3, 0.4]), 1.0);
        assert!((k.eval(&[0.0, 0.0], &[1.0, 1.0]) - (-1.0f64).exp()).abs() < 1e-15);
        let d = feature_distance(&[0.0, 0.0], &[1.0, 1.0], k).unwrap();
        assert!((d - (2.0 - 2.0 * (-1.0f64).exp()).sqrt()).abs() < 1e-12);
        assert!((d - 1.12438).abs() < 1e-5);
    }

    #[test]
    fn invalid_inputs() {
        assert!(matches!(KernelSpec::gaussian(0.0), Err(KernelError::InvalidSigma(_))));
        let x = DMatrix::zeros(2, 2);
        let y = DMatrix::zeros(2, 3);
        assert!(matches!(gram(&x, &y, KernelSpec::Linear), Err(KernelError::DimensionMismatch { .. })));
        let mut z = DMatrix::zeros(2, 2);
        z[(1, 1)] = f64::INFINITY;
        assert_eq!(gram(&z, &z, KernelSpec::Linear), Err(KernelError::NonFinite));
        assert_eq!(
            distance_to_center(&[0.0], &DMatrix::zeros(0, 1), KernelSpec::Linear).unwrap_err(),
            KernelError::EmptyClass
        );
    }

    #[test]
    fn radicand_clamp() {
        assert_eq!(clamped_sqrt(-1e-13).unwrap(), 0.0);
        assert!(matches!(clamped_sqrt(-1e-9), Err(KernelError::NegativeRadicand(_))));
    }

    #[test]
    fn center_distances() {
        let class = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 2.0, 0.0]);
        let d = distance_to_center(&[1.0, 0.0], &class, KernelSpec::Linear).unwrap();
        assert!(d.abs() < 1e-12);
        let d = distance_to_center(&[0.0, 0.0], &class, KernelSpec::Linear).unwrap();
        assert!((d - 1.0).abs() < 1e-12);
        let single = DMatrix::from_row_slice(1, 2, &[0.7, -0.2]);
        for k in [KernelSpec::Linear, KernelSpec::Gaussian { sigma: 0.5 }] {
            assert!(distance_to_center(&[0.7, -0.2], &single, k).unwrap() < 1e-7);
        }
    }

    #[test]
    fn wide_gaussian_is_flat() {
        let x = DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 1.0, 2.0, -3.0, 0.5]);
        let k = gram_sym(&x, KernelSpec::Gaussian { sigma: 1e6 * 5.0 }).unwrap();
        assert!(k.iter().all(|v| (v - 1.0).abs() < 1e-6));
    }

    proptest! {
        #[test]
        fn linear_distance_is_euclidean(
            x in prop::collection::vec(-10.0f64..10.0, 4),
            y in prop::collection::vec(-10.0f64..10.0, 4),
        ) {
            let d = feature_distance(&x, &y, KernelSpec::Linear).unwrap();
            let e: f64 = x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            prop_assert!((d - e).abs() < 1e-10);
        }

        #[test]
        fn gaussian_gram_is_psd(
            vals in prop::collection::vec(-2.0f64..2.0, 18),
            sigma in 0.1f64..3.0,
        ) {
            let x = DMatrix::from_row_slice(6, 3, &vals);
            let k = gram_sym(&x, KernelSpec::Gaussian { sigma }).unwrap();
            prop_assert_eq!(&k, &k.transpose());
            let min = nalgebra::SymmetricEigen::new(k).eigenvalues.min();
            prop_assert!(min >= -1e-8);
        }
    }
}
