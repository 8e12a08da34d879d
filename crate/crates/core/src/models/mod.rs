//! The four proximal classifiers in linear and kernel form.
//!
//! Every variant fits two planes `wᵀφ(x) + b = 0`, one per class, from the
//! moment matrices of the two classes
//!
//! * `G = [S₁φ(A), S₁e]ᵀ [S₁φ(A), S₁e]`
//! * `H = [S₂φ(B), S₂e]ᵀ [S₂φ(B), S₂e]`
//!
//! where `φ(x) = x` for the linear kernel and `φ(x) = K(x, Cᵀ)` with
//! `C = [A; B]` otherwise. `S₁` and `S₂` are the fuzzy score diagonals for the
//! IF variants and identities for the plain ones.
//!
//! GEPSVM and IF-GEPSVM take the smallest eigenvector of the pencils
//! `(G + δI, H)` and `(H + δI, G)`. IGEPSVM and IF-IGEPSVM take the smallest
//! eigenvector of `G + ηI − δH` and `H + ηI − δG`.

mod io;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::datakit::{Dataset, Label};
use crate::ifscore::{self, IfParams, IfScoreError, ScoreMatrices};
use crate::kernels::{self, KernelError, KernelSpec};
use crate::linalg::{self, LinalgError, SymMatrix, DEFAULT_RIDGE};

pub use self::io::{read_model, write_model, ModelIoError};

/// Floor applied to plane norms before dividing by them.
pub const WNORM_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("dimension mismatch: expected {expected} features, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("class {0} has no training samples")]
    EmptyClass(Label),
    #[error("invalid hyperparameter: {0}")]
    InvalidParams(String),
    #[error("every score of class {0} is zero")]
    DegenerateScores(Label),
    #[error("expected {expected} scores, found {found}")]
    ScoreLength { expected: usize, found: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    IfScore(#[from] IfScoreError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    Gepsvm,
    Igepsvm,
    IfGepsvm,
    IfIgepsvm,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::Gepsvm,
        Variant::Igepsvm,
        Variant::IfGepsvm,
        Variant::IfIgepsvm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Gepsvm => "GEPSVM",
            Variant::Igepsvm => "IGEPSVM",
            Variant::IfGepsvm => "IF-GEPSVM",
            Variant::IfIgepsvm => "IF-IGEPSVM",
        }
    }

    /// Uses fuzzy score weights.
    pub fn is_fuzzy(self) -> bool {
        matches!(self, Variant::IfGepsvm | Variant::IfIgepsvm)
    }

    /// Solves the difference form and so has the Tikhonov parameter `η`.
    pub fn uses_eta(self) -> bool {
        matches!(self, Variant::Igepsvm | Variant::IfIgepsvm)
    }

    /// The plain counterpart of an IF variant, or itself.
    pub fn plain(self) -> Variant {
        match self {
            Variant::IfGepsvm => Variant::Gepsvm,
            Variant::IfIgepsvm => Variant::Igepsvm,
            v => v,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown model variant {0:?}; expected one of GEPSVM, IGEPSVM, IF-GEPSVM, IF-IGEPSVM")]
pub struct UnknownVariant(pub String);

impl FromStr for Variant {
    type Err = UnknownVariant;

    /// Case-insensitive; `-` and `_` are optional.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| *c != '-' && *c != '_')
            .collect::<String>()
            .to_ascii_uppercase();
        match key.as_str() {
            "GEPSVM" => Ok(Variant::Gepsvm),
            "IGEPSVM" => Ok(Variant::Igepsvm),
            "IFGEPSVM" => Ok(Variant::IfGepsvm),
            "IFIGEPSVM" => Ok(Variant::IfIgepsvm),
            _ => Err(UnknownVariant(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperParams {
    pub delta: f64,
    pub eta: f64,
    pub kernel: KernelSpec,
    /// Scoring setup; ignored by the plain variants.
    pub if_params: IfParams,
    pub ridge: f64,
}

impl HyperParams {
    /// Scores use the classifier kernel when it is Gaussian and a Gaussian
    /// kernel of width 1 when it is linear.
    pub fn new(delta: f64, eta: f64, kernel: KernelSpec) -> Self {
        let score_kernel = match kernel {
            KernelSpec::Linear => KernelSpec::Gaussian { sigma: 1.0 },
            k => k,
        };
        Self {
            delta,
            eta,
            kernel,
            if_params: IfParams::with_kernel(score_kernel),
            ridge: DEFAULT_RIDGE,
        }
    }

    /// Sets the Gaussian width used for scoring.
    pub fn with_score_sigma(mut self, sigma: f64) -> Self {
        self.if_params.score_kernel = KernelSpec::Gaussian { sigma };
        self
    }

    /// `δ = 0` is accepted for the limiting cases of the difference form.
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |what: &str, v: f64| Err(ModelError::InvalidParams(format!("{what} = {v}")));
        if !(self.delta.is_finite() && self.delta >= 0.0) {
            return bad("delta", self.delta);
        }
        if !(self.eta.is_finite() && self.eta >= 0.0) {
            return bad("eta", self.eta);
        }
        if !(self.ridge.is_finite() && self.ridge >= 0.0) {
            return bad("ridge", self.ridge);
        }
        if let KernelSpec::Gaussian { sigma } = self.kernel {
            KernelSpec::gaussian(sigma)?;
        }
        Ok(())
    }
}

/// `wᵀφ(x) + b = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperplane {
    pub w: DVector<f64>,
    pub b: f64,
    /// `‖w‖` for linear models and `√(wᵀK(C,Cᵀ)w)` for kernel models,
    /// floored at [`WNORM_FLOOR`].
    pub wnorm: f64,
}

impl Hyperplane {
    fn from_eigenvector(z: &DVector<f64>, reference_gram: Option<&DMatrix<f64>>) -> Self {
        let k = z.len() - 1;
        let w = z.rows(0, k).into_owned();
        let wnorm = match reference_gram {
            None => w.norm().max(WNORM_FLOOR),
            Some(kc) => w.dot(&(kc * &w)).max(WNORM_FLOOR).sqrt(),
        };
        Self { w, b: z[k], wnorm }
    }

    /// `|wᵀφ + b| / wnorm`.
    pub fn distance(&self, phi: &[f64]) -> f64 {
        let v: f64 = self.w.iter().zip(phi).map(|(a, b)| a * b).sum::<f64>() + self.b;
        v.abs() / self.wnorm
    }
}

/// Class moment matrices together with what is needed to turn their
/// eigenvectors into planes. Reusable across `δ` and `η`.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub g: SymMatrix,
    pub h: SymMatrix,
    pub kernel: KernelSpec,
    n_features: usize,
    /// `C = [A; B]` for kernel models.
    reference: Option<DMatrix<f64>>,
    /// `K(C, Cᵀ)` for kernel models.
    reference_gram: Option<DMatrix<f64>>,
}

impl Moments {
    /// Moments of the class matrices with per-row weights.
    pub fn build(a: &DMatrix<f64>, b: &DMatrix<f64>, kernel: KernelSpec, scores: &ScoreMatrices) -> Result<Self, ModelError> {
        check_classes(a, b)?;
        for (s, m) in [(&scores.s1, a), (&scores.s2, b)] {
            if s.len() != m.nrows() {
                return Err(ModelError::ScoreLength {
                    expected: m.nrows(),
                    found: s.len(),
                });
            }
        }
        for (label, s) in [(Label::Pos, &scores.s1), (Label::Neg, &scores.s2)] {
            if s.iter().all(|&v| v == 0.0) {
                return Err(ModelError::DegenerateScores(label));
            }
        }
        match kernel {
            KernelSpec::Linear => Ok(Self {
                g: weighted_moment(a, &scores.s1)?,
                h: weighted_moment(b, &scores.s2)?,
                kernel,
                n_features: a.ncols(),
                reference: None,
                reference_gram: None,
            }),
            KernelSpec::Gaussian { .. } => {
                let c = stack(a, b);
                let kc = kernels::gram_sym(&c, kernel)?;
                let m1 = a.nrows();
                let ka = kc.rows(0, m1).into_owned();
                let kb = kc.rows(m1, b.nrows()).into_owned();
                Ok(Self {
                    g: weighted_moment(&ka, &scores.s1)?,
                    h: weighted_moment(&kb, &scores.s2)?,
                    kernel,
                    n_features: a.ncols(),
                    reference: Some(c),
                    reference_gram: Some(kc),
                })
            }
        }
    }

    /// Moments for `variant`, computing scores from `hp.if_params` when the
    /// variant is fuzzy.
    pub fn for_variant(variant: Variant, a: &DMatrix<f64>, b: &DMatrix<f64>, hp: &HyperParams) -> Result<Self, ModelError> {
        hp.validate()?;
        check_classes(a, b)?;
        let scores = if variant.is_fuzzy() {
            let ds = Dataset::from_classes("train", a, b).map_err(|e| ModelError::InvalidParams(e.to_string()))?;
            ifscore::score_matrices(&ds, &hp.if_params)?
        } else {
            ScoreMatrices::unit(a.nrows(), b.nrows())
        };
        Self::build(a, b, hp.kernel, &scores)
    }

    pub fn order(&self) -> usize {
        self.g.order()
    }

    /// `φ(x)` for every row of `x`: `x` itself for linear moments and
    /// `K(x, Cᵀ)` otherwise.
    pub fn embed(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>, ModelError> {
        embed(x, self.n_features, self.kernel, self.reference.as_ref())
    }

    /// Solves both planes for `variant` with the `δ`, `η` and ridge of `hp`.
    /// The kernel of `hp` is not consulted; the moments fix it.
    pub fn solve(&self, variant: Variant, hp: &HyperParams) -> Result<TrainedModel, ModelError> {
        hp.validate()?;
        let order = self.order();
        let (z_pos, z_neg) = if variant.uses_eta() {
            let pos = difference_form(&self.g, &self.h, hp.delta, hp.eta)?;
            let neg = difference_form(&self.h, &self.g, hp.delta, hp.eta)?;
            (linalg::sym_eig_smallest(&pos)?, linalg::sym_eig_smallest(&neg)?)
        } else {
            let shift = SymMatrix::identity(order).into_inner() * hp.delta;
            let gd = SymMatrix::symmetrized(self.g.as_matrix() + &shift)?;
            let hd = SymMatrix::symmetrized(self.h.as_matrix() + &shift)?;
            (
                linalg::gen_eig_smallest(&gd, &self.h, hp.ridge)?,
                linalg::gen_eig_smallest(&hd, &self.g, hp.ridge)?,
            )
        };
        let kc = self.reference_gram.as_ref();
        Ok(TrainedModel {
            variant,
            plane_pos: Hyperplane::from_eigenvector(&z_pos.vector, kc),
            plane_neg: Hyperplane::from_eigenvector(&z_neg.vector, kc),
            kernel: self.kernel,
            reference: self.reference.clone(),
            n_features: self.n_features,
            params: HyperParams { kernel: self.kernel, ..*hp },
        })
    }
}

fn check_classes(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<(), ModelError> {
    if a.nrows() == 0 {
        return Err(ModelError::EmptyClass(Label::Pos));
    }
    if b.nrows() == 0 {
        return Err(ModelError::EmptyClass(Label::Neg));
    }
    if a.ncols() != b.ncols() {
        return Err(ModelError::DimensionMismatch {
            expected: a.ncols(),
            found: b.ncols(),
        });
    }
    Ok(())
}

fn stack(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let m1 = a.nrows();
    DMatrix::from_fn(m1 + b.nrows(), a.ncols(), |i, j| if i < m1 { a[(i, j)] } else { b[(i - m1, j)] })
}

/// `[S X, S e]ᵀ [S X, S e]`, accumulated row by row in a fixed order so that
/// a zero-weight row leaves every entry bit-identical to omitting it.
fn weighted_moment(x: &DMatrix<f64>, s: &[f64]) -> Result<SymMatrix, ModelError> {
    let n = x.ncols();
    let order = n + 1;
    let mut m = DMatrix::zeros(order, order);
    let mut row = vec![0.0; order];
    for (i, &si) in s.iter().enumerate() {
        if si == 0.0 {
            continue;
        }
        for j in 0..n {
            row[j] = si * x[(i, j)];
        }
        row[n] = si;
        for p in 0..order {
            let rp = row[p];
            for q in p..order {
                m[(p, q)] += rp * row[q];
            }
        }
    }
    for p in 0..order {
        for q in 0..p {
            m[(p, q)] = m[(q, p)];
        }
    }
    Ok(SymMatrix::new(m)?)
}

/// `own + ηI − δ·other`.
fn difference_form(own: &SymMatrix, other: &SymMatrix, delta: f64, eta: f64) -> Result<SymMatrix, ModelError> {
    let mut m = own.as_matrix() - other.as_matrix() * delta;
    for i in 0..m.nrows() {
        m[(i, i)] += eta;
    }
    Ok(SymMatrix::symmetrized(m)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub variant: Variant,
    pub plane_pos: Hyperplane,
    pub plane_neg: Hyperplane,
    pub kernel: KernelSpec,
    /// Training rows `C = [A; B]`, kept for kernel models only.
    pub reference: Option<DMatrix<f64>>,
    pub n_features: usize,
    pub params: HyperParams,
}

fn embed(
    x: &DMatrix<f64>,
    n_features: usize,
    kernel: KernelSpec,
    reference: Option<&DMatrix<f64>>,
) -> Result<DMatrix<f64>, ModelError> {
    if x.ncols() != n_features {
        return Err(ModelError::DimensionMismatch {
            expected: n_features,
            found: x.ncols(),
        });
    }
    match reference {
        None => Ok(x.clone()),
        Some(c) => Ok(kernels::gram(x, c, kernel)?),
    }
}

impl TrainedModel {
    /// `φ(x)` for every row of `x`.
    pub fn embed(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>, ModelError> {
        embed(x, self.n_features, self.kernel, self.reference.as_ref())
    }

    /// `(d_pos, d_neg)` for every row of an embedded matrix.
    pub fn decision_values_embedded(&self, phi: &DMatrix<f64>) -> Vec<(f64, f64)> {
        kernels::rows_of(phi)
            .iter()
            .map(|r| (self.plane_pos.distance(r), self.plane_neg.distance(r)))
            .collect()
    }

    /// `(d_pos, d_neg)` for every row of `x`.
    pub fn decision_values(&self, x: &DMatrix<f64>) -> Result<Vec<(f64, f64)>, ModelError> {
        Ok(self.decision_values_embedded(&self.embed(x)?))
    }

    /// Nearest plane wins; ties go to `+1`.
    pub fn predict_embedded(&self, phi: &DMatrix<f64>) -> Vec<Label> {
        self.decision_values_embedded(phi)
            .into_iter()
            .map(|(dp, dn)| if dp <= dn { Label::Pos } else { Label::Neg })
            .collect()
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<Label>, ModelError> {
        Ok(self.predict_embedded(&self.embed(x)?))
    }
}

/// Fits `variant` on class matrices `a` (`+1`) and `b` (`−1`). Linear or
/// kernel form follows `hp.kernel`.
pub fn fit(variant: Variant, a: &DMatrix<f64>, b: &DMatrix<f64>, hp: &HyperParams) -> Result<TrainedModel, ModelError> {
    Moments::for_variant(variant, a, b, hp)?.solve(variant, hp)
}

/// Fits on a labelled dataset.
pub fn fit_dataset(variant: Variant, ds: &Dataset, hp: &HyperParams) -> Result<TrainedModel, ModelError> {
    fit(variant, &ds.class_matrix(Label::Pos), &ds.class_matrix(Label::Neg), hp)
}

/// Fits with caller-supplied score diagonals instead of computed ones.
pub fn fit_with_scores(
    variant: Variant,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    hp: &HyperParams,
    scores: &ScoreMatrices,
) -> Result<TrainedModel, ModelError> {
    hp.validate()?;
    Moments::build(a, b, hp.kernel, scores)?.solve(variant, hp)
}

pub fn fit_gepsvm(a: &DMatrix<f64>, b: &DMatrix<f64>, hp: &HyperParams) -> Result<TrainedModel, ModelError> {
    fit(Variant::Gepsvm, a, b, hp)
}

pub fn fit_igepsvm(a: &DMatrix<f64>, b: &DMatrix<f64>, hp: &HyperParams) -> Result<TrainedModel, ModelError> {
    fit(Variant::Igepsvm, a, b, hp)
}

pub fn fit_if_gepsvm(a: &DMatrix<f64>, b: &DMatrix<f64>, hp: &HyperParams) -> Result<TrainedModel, ModelError> {
    fit(Variant::IfGepsvm, a, b, hp)
}

pub fn fit_if_igepsvm(a: &DMatrix<f64>, b: &DMatrix<f64>, hp: &HyperParams) -> Result<TrainedModel, ModelError> {
    fit(Variant::IfIgepsvm, a, b, hp)
}
