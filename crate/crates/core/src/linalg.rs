//! Dense symmetric and symmetric-definite eigen solvers.
//!
//! Every model fit reduces to one of two problems: the smallest eigenpair
//! of a symmetric matrix, or the smallest eigenpair of a symmetric-definite
//! pencil `(N, D)`. Both return unit-norm vectors in a canonical sign
//! (first non-negligible component positive) so callers never observe the
//! eigenvector sign ambiguity.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use thiserror::Error;

/// Absolute tolerance for `a_ij == a_ji`.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Default denominator stabilizer, relative to `trace(D) / order`.
pub const DEFAULT_RIDGE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },
    #[error("matrix is not symmetric at ({row}, {col}): gap {gap:e}")]
    NotSymmetric { row: usize, col: usize, gap: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("denominator is not positive definite after stabilization (ridge {ridge:e})")]
    IndefiniteDenominator { ridge: f64 },
    #[error("symmetric eigen decomposition did not converge")]
    NoConvergence,
}

/// A validated dense symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    /// Validates squareness, finiteness and symmetry.
    pub fn new(m: DMatrix<f64>) -> Result<Self, LinalgError> {
        if m.nrows() != m.ncols() {
            return Err(LinalgError::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        let n = m.nrows();
        for col in 0..n {
            for row in 0..n {
                if !m[(row, col)].is_finite() {
                    return Err(LinalgError::NonFinite { row, col });
                }
            }
        }
        for row in 0..n {
            for col in (row + 1)..n {
                let gap = (m[(row, col)] - m[(col, row)]).abs();
                if gap > SYMMETRY_TOL {
                    return Err(LinalgError::NotSymmetric { row, col, gap });
                }
            }
        }
        Ok(Self(m))
    }

    /// Replaces `m` by `(m + mᵀ) / 2` before validating. Used for matrices
    /// that are symmetric in exact arithmetic.
    pub fn symmetrized(m: DMatrix<f64>) -> Result<Self, LinalgError> {
        if m.nrows() != m.ncols() {
            return Err(LinalgError::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        let t = m.transpose();
        Self::new((m + t) * 0.5)
    }

    pub fn identity(order: usize) -> Self {
        Self(DMatrix::identity(order, order))
    }

    pub fn diagonal(values: &[f64]) -> Result<Self, LinalgError> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(values)))
    }

    pub fn order(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    /// `zᵀ M z`.
    pub fn quadratic_form(&self, z: &DVector<f64>) -> f64 {
        z.dot(&(&self.0 * z))
    }
}

/// An eigenvalue with its unit-norm eigenvector.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    pub vector: DVector<f64>,
}

/// Flips `v` so that its first component with magnitude above a relative
/// threshold is positive.
pub fn canonical_sign(v: &mut DVector<f64>) {
    let scale = v.amax();
    if scale == 0.0 {
        return;
    }
    let cutoff = scale * 1e-12;
    if let Some(first) = v.iter().copied().find(|x| x.abs() > cutoff) {
        if first < 0.0 {
            v.neg_mut();
        }
    }
}

/// Smallest eigenpair of a symmetric matrix.
///
/// The residual `‖M z − λ z‖₂` is at the level of the backward error of the
/// symmetric QR algorithm, well below `1e-8 (1 + ‖M‖_F)`.
pub fn sym_eig_smallest(m: &SymMatrix) -> Result<EigenPair, LinalgError> {
    let (value, vector) = extreme_eigenpair(m.as_matrix(), Extreme::Smallest)?;
    Ok(EigenPair { value, vector })
}

/// Smallest eigenpair of the pencil `(N, D + εI)` with
/// `ε = ridge · trace(D) / order`.
///
/// The returned vector minimizes the generalized Rayleigh quotient
/// `zᵀNz / zᵀ(D+εI)z`, and the returned value is that quotient at `z`.
pub fn gen_eig_smallest(
    numerator: &SymMatrix,
    denominator: &SymMatrix,
    ridge: f64,
) -> Result<EigenPair, LinalgError> {
    let order = numerator.order();
    if denominator.order() != order {
        return Err(LinalgError::DimensionMismatch {
            expected: order,
            found: denominator.order(),
        });
    }
    if !(ridge.is_finite() && ridge >= 0.0) {
        return Err(LinalgError::IndefiniteDenominator { ridge });
    }
    if order == 0 {
        return Err(LinalgError::DimensionMismatch {
            expected: 1,
            found: 0,
        });
    }

    let eps = ridge * denominator.trace() / order as f64;
    let mut stabilized = denominator.as_matrix().clone();
    for i in 0..order {
        stabilized[(i, i)] += eps;
    }
    let den_factor = positive_definite_factor(&stabilized)
        .ok_or(LinalgError::IndefiniteDenominator { ridge })?;
    let num_factor = positive_definite_factor(numerator.as_matrix());

    // Reduce through whichever definite factor is better conditioned. When
    // N is definite, the smallest λ of (N, D) is 1/μ for the largest μ of
    // (D, N), which stays accurate when D is nearly singular.
    let mut z = match num_factor {
        Some((ref num_chol, num_cond)) if num_cond < den_factor.1 => {
            let reduced = congruence(num_chol, &stabilized);
            let (_, y) = extreme_eigenpair(&reduced, Extreme::Largest)?;
            back_transform(num_chol, &y)
        }
        _ => {
            let reduced = congruence(&den_factor.0, numerator.as_matrix());
            let (_, y) = extreme_eigenpair(&reduced, Extreme::Smallest)?;
            back_transform(&den_factor.0, &y)
        }
    };

    let norm = z.norm();
    if !(norm.is_finite() && norm > 0.0) {
        return Err(LinalgError::NoConvergence);
    }
    z /= norm;
    canonical_sign(&mut z);
    let num_q = numerator.quadratic_form(&z);
    let den_q = z.dot(&(&stabilized * &z));
    Ok(EigenPair {
        value: num_q / den_q,
        vector: z,
    })
}

#[derive(Clone, Copy, PartialEq)]
enum Extreme {
    Smallest,
    Largest,
}

fn extreme_eigenpair(m: &DMatrix<f64>, which: Extreme) -> Result<(f64, DVector<f64>), LinalgError> {
    let n = m.nrows();
    if n == 0 {
        return Err(LinalgError::DimensionMismatch {
            expected: 1,
            found: 0,
        });
    }
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, 1000 * n.max(10))
        .ok_or(LinalgError::NoConvergence)?;
    let values = &eig.eigenvalues;
    let target = match which {
        Extreme::Smallest => values.iter().copied().fold(f64::INFINITY, f64::min),
        Extreme::Largest => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    };
    if !target.is_finite() {
        return Err(LinalgError::NoConvergence);
    }
    let spread = values.amax();
    let tie_tol = 8.0 * f64::EPSILON * (1.0 + spread);

    // Among (numerically) tied candidates keep the lexicographically smallest
    // sign-fixed vector.
    let mut best: Option<(f64, DVector<f64>)> = None;
    for (k, &value) in values.iter().enumerate() {
        if (value - target).abs() > tie_tol {
            continue;
        }
        let mut v = eig.eigenvectors.column(k).into_owned();
        let norm = v.norm();
        if norm > 0.0 {
            v /= norm;
        }
        canonical_sign(&mut v);
        let replace = match &best {
            None => true,
            Some((_, current)) => lexicographically_less(&v, current),
        };
        if replace {
            best = Some((value, v));
        }
    }
    best.ok_or(LinalgError::NoConvergence)
}

fn lexicographically_less(a: &DVector<f64>, b: &DVector<f64>) -> bool {
    for (x, y) in a.iter().zip(b.iter()) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    false
}

/// Cholesky factor together with a cheap condition proxy
/// `(max Lᵢᵢ / min Lᵢᵢ)²`.
fn positive_definite_factor(m: &DMatrix<f64>) -> Option<(Cholesky<f64, Dyn>, f64)> {
    let chol = Cholesky::new(m.clone())?;
    let l = chol.l_dirty();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
    for i in 0..l.nrows() {
        let d = l[(i, i)];
        if !(d.is_finite() && d > 0.0) {
            return None;
        }
        lo = lo.min(d);
        hi = hi.max(d);
    }
    Some((chol, (hi / lo).powi(2)))
}

/// `L⁻¹ M L⁻ᵀ` for symmetric `M`, symmetrized.
fn congruence(chol: &Cholesky<f64, Dyn>, m: &DMatrix<f64>) -> DMatrix<f64> {
    let l = chol.l();
    let left = l
        .solve_lower_triangular(m)
        .expect("Cholesky factor has a positive diagonal");
    let both = l
        .solve_lower_triangular(&left.transpose())
        .expect("Cholesky factor has a positive diagonal");
    (&both + both.transpose()) * 0.5
}

/// `z = L⁻ᵀ y`.
fn back_transform(chol: &Cholesky<f64, Dyn>, y: &DVector<f64>) -> DVector<f64> {
    chol.l()
        .tr_solve_lower_triangular(y)
        .expect("Cholesky factor has a positive diagonal")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sym(rows: &[&[f64]]) -> SymMatrix {
        let n = rows.len();
        SymMatrix::new(DMatrix::from_fn(n, n, |i, j| rows[i][j])).unwrap()
    }

    fn random_sym(rng: &mut ChaCha8Rng, n: usize) -> SymMatrix {
        let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        SymMatrix::symmetrized(&a + a.transpose()).unwrap()
    }

    fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> SymMatrix {
        let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let mut m = a.transpose() * &a;
        for i in 0..n {
            m[(i, i)] += 0.1;
        }
        SymMatrix::symmetrized(m).unwrap()
    }

    #[test]
    fn smallest_of_identity_is_one() {
        let p = sym_eig_smallest(&SymMatrix::identity(3)).unwrap();
        assert!((p.value - 1.0).abs() < 1e-14);
        assert!((p.vector.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn smallest_of_diagonal() {
        let p = sym_eig_smallest(&SymMatrix::diagonal(&[2.0, 1.0]).unwrap()).unwrap();
        assert!((p.value - 1.0).abs() < 1e-14);
        assert!((p.vector[0]).abs() < 1e-14 && (p.vector[1] - 1.0).abs() < 1e-14);

        let p = sym_eig_smallest(&SymMatrix::diagonal(&[5.0, -3.0, 0.0]).unwrap()).unwrap();
        assert!((p.value + 3.0).abs() < 1e-14);
        assert!((p.vector[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn generalized_examples() {
        let i2 = SymMatrix::identity(2);
        let p = gen_eig_smallest(&i2, &i2, 0.0).unwrap();
        assert!((p.value - 1.0).abs() < 1e-14);

        let p = gen_eig_smallest(
            &SymMatrix::diagonal(&[2.0, 1.0]).unwrap(),
            &SymMatrix::diagonal(&[1.0, 1.0]).unwrap(),
            0.0,
        )
        .unwrap();
        assert!((p.value - 1.0).abs() < 1e-14);
        assert!((p.vector[1] - 1.0).abs() < 1e-14);

        // Per-axis quotients 4/2 = 2 and 9/3 = 3.
        let p = gen_eig_smallest(
            &SymMatrix::diagonal(&[4.0, 9.0]).unwrap(),
            &SymMatrix::diagonal(&[2.0, 3.0]).unwrap(),
            0.0,
        )
        .unwrap();
        assert!((p.value - 2.0).abs() < 1e-14);
        assert!((p.vector[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn construction_errors() {
        let mut m = DMatrix::identity(2, 2);
        m[(0, 1)] = f64::NAN;
        assert!(matches!(SymMatrix::new(m), Err(LinalgError::NonFinite { row: 0, col: 1 })));
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.1, 1.0]);
        assert!(matches!(SymMatrix::new(m), Err(LinalgError::NotSymmetric { .. })));
        let m = DMatrix::zeros(2, 3);
        assert!(matches!(SymMatrix::new(m), Err(LinalgError::DimensionMismatch { .. })));
    }

    #[test]
    fn generalized_errors() {
        let n = SymMatrix::identity(2);
        let d = SymMatrix::identity(3);
        assert!(matches!(
            gen_eig_smallest(&n, &d, 0.0),
            Err(LinalgError::DimensionMismatch { .. })
        ));
        let d = sym(&[&[1.0, 0.0], &[0.0, -1.0]]);
        assert!(matches!(
            gen_eig_smallest(&n, &d, 1e-12),
            Err(LinalgError::IndefiniteDenominator { .. })
        ));
        let zero = SymMatrix::diagonal(&[0.0, 0.0]).unwrap();
        assert!(matches!(
            gen_eig_smallest(&n, &zero, 1e-12),
            Err(LinalgError::IndefiniteDenominator { .. })
        ));
    }

    #[test]
    fn ridge_rescues_singular_denominator() {
        let n = SymMatrix::diagonal(&[1.0, 2.0]).unwrap();
        let d = SymMatrix::diagonal(&[1.0, 0.0]).unwrap();
        assert!(gen_eig_smallest(&n, &d, 0.0).is_err());
        let p = gen_eig_smallest(&n, &d, 1e-12).unwrap();
        assert!((p.value - 1.0).abs() < 1e-9);
        assert!((p.vector[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn tie_picks_lexicographically_smallest_canonical_vector() {
        let p = sym_eig_smallest(&SymMatrix::identity(3)).unwrap();
        assert_eq!(p.vector.as_slice(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn residuals_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..20 {
            let m = random_sym(&mut rng, n);
            let p = sym_eig_smallest(&m).unwrap();
            let r = (m.as_matrix() * &p.vector - &p.vector * p.value).norm();
            assert!(r <= 1e-8 * (1.0 + m.frobenius_norm()));

            let num = random_sym(&mut rng, n);
            let den = random_spd(&mut rng, n);
            let p = gen_eig_smallest(&num, &den, DEFAULT_RIDGE).unwrap();
            let eps = DEFAULT_RIDGE * den.trace() / n as f64;
            let stab = den.as_matrix() + DMatrix::<f64>::identity(n, n) * eps;
            let r = (num.as_matrix() * &p.vector - &stab * &p.vector * p.value).norm();
            assert!(r <= 1e-8 * (1.0 + num.frobenius_norm() + den.frobenius_norm()));
        }
    }

    #[test]
    fn shift_moves_eigenvalue_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 2..12 {
            let m = random_sym(&mut rng, n);
            let c = 3.25;
            let shifted =
                SymMatrix::new(m.as_matrix() + DMatrix::<f64>::identity(n, n) * c).unwrap();
            let a = sym_eig_smallest(&m).unwrap();
            let b = sym_eig_smallest(&shifted).unwrap();
            assert!((b.value - a.value - c).abs() < 1e-8);
            let same = (&a.vector - &b.vector).norm().min((&a.vector + &b.vector).norm());
            assert!(same < 1e-8);
        }
    }

    #[test]
    fn quotient_is_minimal_against_probes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 6;
        let num = random_sym(&mut rng, n);
        let den = random_spd(&mut rng, n);
        let p = gen_eig_smallest(&num, &den, 0.0).unwrap();
        let q = num.quadratic_form(&p.vector) / den.quadratic_form(&p.vector);
        assert!((q - p.value).abs() <= 1e-8 * (1.0 + p.value.abs()));
        for _ in 0..100 {
            let mut z = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            z /= z.norm();
            let probe = num.quadratic_form(&z) / den.quadratic_form(&z);
            assert!(probe >= p.value - 1e-8);
        }
    }

    #[test]
    fn nearly_singular_denominator_with_definite_numerator() {
        // Denominator of rank 2 in order 5, as produced by kernel moments.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let b = DMatrix::from_fn(2, 5, |_, _| rng.gen_range(-1.0..1.0));
        let den = SymMatrix::symmetrized(b.transpose() * &b).unwrap();
        let num = random_spd(&mut rng, 5);
        let p = gen_eig_smallest(&num, &den, DEFAULT_RIDGE).unwrap();
        let eps = DEFAULT_RIDGE * den.trace() / 5.0;
        let stab = den.as_matrix() + DMatrix::<f64>::identity(5, 5) * eps;
        let r = (num.as_matrix() * &p.vector - &stab * &p.vector * p.value).norm();
        assert!(r <= 1e-8 * (1.0 + num.frobenius_norm() + den.frobenius_norm()), "{r}");
        // The minimizer lives in the range of the denominator.
        assert!(p.value < 1e6);
    }
}
