//! Intuitionistic fuzzy scores of training samples.
//!
//! Each sample gets a membership `μ` from its feature-space distance to its
//! own class center, a non-membership `ν = (1 − μ) η` where `η` is the share
//! of other-class samples in its `β`-neighborhood, and a score `s` that
//! combines the two. The scores weight the rows of the class matrices in the
//! fuzzy model variants.

use thiserror::Error;

use crate::datakit::{Dataset, Label};
use crate::kernels::{self, ClassCenter, KernelError, KernelSpec};

pub const DEFAULT_GAMMA: f64 = 1e-4;

/// Slack for the `0 ≤ ν ≤ 1 − μ ≤ 1` domain check in [`score`].
const DOMAIN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IfScoreError {
    #[error("class {0} has no samples")]
    EmptyClass(Label),
    #[error("class {0} has zero radius and gamma is zero")]
    ZeroDenominator(Label),
    #[error("sample {index}: (mu={mu}, nu={nu}) violates 0 <= nu <= 1 - mu <= 1")]
    DomainViolation { index: usize, mu: f64, nu: f64 },
    #[error("{expected} samples but {found} values")]
    LengthMismatch { expected: usize, found: usize },
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Neighborhood radius for the non-membership count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Beta {
    /// Median of all pairwise feature-space distances of the training set.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IfParams {
    pub gamma: f64,
    pub beta: Beta,
    pub score_kernel: KernelSpec,
}

impl IfParams {
    pub fn new(gamma: f64, beta: Beta, score_kernel: KernelSpec) -> Result<Self, IfScoreError> {
        let p = Self {
            gamma,
            beta,
            score_kernel,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_kernel(score_kernel: KernelSpec) -> Self {
        Self {
            gamma: DEFAULT_GAMMA,
            beta: Beta::Auto,
            score_kernel,
        }
    }

    pub fn validate(&self) -> Result<(), IfScoreError> {
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(IfScoreError::InvalidParams(format!("gamma {}", self.gamma)));
        }
        if let Beta::Fixed(b) = self.beta {
            if !(b.is_finite() && b > 0.0) {
                return Err(IfScoreError::InvalidParams(format!("beta {b}")));
            }
        }
        if let KernelSpec::Gaussian { sigma } = self.score_kernel {
            KernelSpec::gaussian(sigma)?;
        }
        Ok(())
    }
}

/// Per-sample scores in dataset row order.
#[derive(Debug, Clone, PartialEq)]
pub struct IfScores {
    pub mu: Vec<f64>,
    pub nu: Vec<f64>,
    pub s: Vec<f64>,
    /// `(r⁺, r⁻)`.
    pub class_radii: (f64, f64),
    /// The neighborhood radius actually used.
    pub beta: f64,
}

/// Diagonals of `S₁` (`+1` rows) and `S₂` (`−1` rows), each in dataset
/// order within its class.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrices {
    pub s1: Vec<f64>,
    pub s2: Vec<f64>,
}

impl ScoreMatrices {
    pub fn unit(m1: usize, m2: usize) -> Self {
        Self {
            s1: vec![1.0; m1],
            s2: vec![1.0; m2],
        }
    }
}

fn class_radius(label: Label, radii: (f64, f64)) -> f64 {
    match label {
        Label::Pos => radii.0,
        Label::Neg => radii.1,
    }
}

/// Distances of every sample to its own class center, and the class radii.
fn center_distances(ds: &Dataset, kernel: KernelSpec) -> Result<(Vec<f64>, (f64, f64)), IfScoreError> {
    let mut dist = vec![0.0; ds.len()];
    let mut radii = [0.0; 2];
    for (slot, label) in [Label::Pos, Label::Neg].into_iter().enumerate() {
        let idx = ds.class_indices(label);
        if idx.is_empty() {
            return Err(IfScoreError::EmptyClass(label));
        }
        let center = ClassCenter::new(&ds.class_matrix(label), kernel)?;
        for &i in &idx {
            let d = center.distance(&ds.row(i))?;
            dist[i] = d;
            radii[slot] = f64::max(radii[slot], d);
        }
    }
    Ok((dist, (radii[0], radii[1])))
}

/// `μᵢ = 1 − d(ψ(xᵢ), C^±) / (r^± + γ)` using the sample's own class.
pub fn membership(ds: &Dataset, params: &IfParams) -> Result<Vec<f64>, IfScoreError> {
    params.validate()?;
    let (dist, radii) = center_distances(ds, params.score_kernel)?;
    membership_from(ds, &dist, radii, params.gamma)
}

fn membership_from(ds: &Dataset, dist: &[f64], radii: (f64, f64), gamma: f64) -> Result<Vec<f64>, IfScoreError> {
    ds.labels()
        .iter()
        .zip(dist)
        .map(|(&label, &d)| {
            let denom = class_radius(label, radii) + gamma;
            if denom == 0.0 {
                Err(IfScoreError::ZeroDenominator(label))
            } else {
                Ok(1.0 - d / denom)
            }
        })
        .collect()
}

/// All pairwise feature-space distances, row-major `m × m`.
pub fn pairwise_distances(ds: &Dataset, kernel: KernelSpec) -> Result<Vec<Vec<f64>>, IfScoreError> {
    let k = kernels::gram_sym(ds.features(), kernel)?;
    let m = ds.len();
    let mut d = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in (i + 1)..m {
            let v = kernels::clamped_sqrt(k[(i, i)] - 2.0 * k[(i, j)] + k[(j, j)])?;
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    Ok(d)
}

/// Median of the strictly upper triangle of a distance table.
pub fn median_pairwise(dist: &[Vec<f64>]) -> f64 {
    let mut vals: Vec<f64> = dist
        .iter()
        .enumerate()
        .flat_map(|(i, row)| row[i + 1..].iter().copied())
        .collect();
    if vals.is_empty() {
        return 0.0;
    }
    vals.sort_by(f64::total_cmp);
    let n = vals.len();
    if n % 2 == 1 {
        vals[n / 2]
    } else {
        0.5 * (vals[n / 2 - 1] + vals[n / 2])
    }
}

fn resolve_beta(beta: Beta, dist: &[Vec<f64>]) -> f64 {
    match beta {
        Beta::Auto => median_pairwise(dist),
        Beta::Fixed(b) => b,
    }
}

/// Share of other-class samples among all samples within `beta` of each
/// sample. The sample itself is part of its own neighborhood.
pub fn heterogeneity(labels: &[Label], dist: &[Vec<f64>], beta: f64) -> Vec<f64> {
    (0..labels.len())
        .map(|i| {
            let (mut near, mut other) = (0usize, 0usize);
            for (j, &d) in dist[i].iter().enumerate() {
                if d <= beta {
                    near += 1;
                    if labels[j] != labels[i] {
                        other += 1;
                    }
                }
            }
            other as f64 / near as f64
        })
        .collect()
}

/// `νᵢ = (1 − μᵢ) ηᵢ`.
pub fn nonmembership(ds: &Dataset, mu: &[f64], params: &IfParams) -> Result<Vec<f64>, IfScoreError> {
    params.validate()?;
    if mu.len() != ds.len() {
        return Err(IfScoreError::LengthMismatch {
            expected: ds.len(),
            found: mu.len(),
        });
    }
    let dist = pairwise_distances(ds, params.score_kernel)?;
    let beta = resolve_beta(params.beta, &dist);
    Ok(nonmembership_from(mu, &heterogeneity(ds.labels(), &dist, beta)))
}

fn nonmembership_from(mu: &[f64], eta: &[f64]) -> Vec<f64> {
    mu.iter().zip(eta).map(|(m, e)| (1.0 - m) * e).collect()
}

/// Score of a single `(μ, ν)` pair, assuming a valid domain.
pub fn score_one(mu: f64, nu: f64) -> f64 {
    if nu == 0.0 {
        mu
    } else if mu <= nu {
        0.0
    } else {
        (1.0 - nu) / (2.0 - mu - nu)
    }
}

pub fn score(mu: &[f64], nu: &[f64]) -> Result<Vec<f64>, IfScoreError> {
    if mu.len() != nu.len() {
        return Err(IfScoreError::LengthMismatch {
            expected: mu.len(),
            found: nu.len(),
        });
    }
    mu.iter()
        .zip(nu)
        .enumerate()
        .map(|(index, (&m, &n))| {
            let ok = n >= -DOMAIN_TOL && n <= 1.0 - m + DOMAIN_TOL && (-DOMAIN_TOL..=1.0 + DOMAIN_TOL).contains(&m);
            if ok && m.is_finite() && n.is_finite() {
                Ok(score_one(m, n))
            } else {
                Err(IfScoreError::DomainViolation { index, mu: m, nu: n })
            }
        })
        .collect()
}

/// μ, ν and s for every sample of `ds`.
pub fn compute_scores(ds: &Dataset, params: &IfParams) -> Result<IfScores, IfScoreError> {
    params.validate()?;
    let (dist_center, radii) = center_distances(ds, params.score_kernel)?;
    let mu = membership_from(ds, &dist_center, radii, params.gamma)?;
    let dist = pairwise_distances(ds, params.score_kernel)?;
    let beta = resolve_beta(params.beta, &dist);
    let nu = nonmembership_from(&mu, &heterogeneity(ds.labels(), &dist, beta));
    let s = score(&mu, &nu)?;
    Ok(IfScores {
        mu,
        nu,
        s,
        class_radii: radii,
        beta,
    })
}

/// Splits per-sample scores into the `S₁` / `S₂` diagonals.
pub fn split_by_class(labels: &[Label], s: &[f64]) -> ScoreMatrices {
    let mut out = ScoreMatrices {
        s1: Vec::new(),
        s2: Vec::new(),
    };
    for (&label, &v) in labels.iter().zip(s) {
        match label {
            Label::Pos => out.s1.push(v),
            Label::Neg => out.s2.push(v),
        }
    }
    out
}

pub fn score_matrices(ds: &Dataset, params: &IfParams) -> Result<ScoreMatrices, IfScoreError> {
    let scores = compute_scores(ds, params)?;
    Ok(split_by_class(ds.labels(), &scores.s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn ds_1d(values: &[f64], labels: &[Label]) -> Dataset {
        Dataset::new("t", DMatrix::from_column_slice(values.len(), 1, values), labels.to_vec()).unwrap()
    }

    #[test]
    fn membership_examples() {
        use Label::*;
        let ds = ds_1d(&[0.0, 1.0, 2.0, 10.0, 11.0], &[Pos, Pos, Pos, Neg, Neg]);
        let params = IfParams::new(0.1, Beta::Auto, KernelSpec::Linear).unwrap();
        let mu = membership(&ds, &params).unwrap();
        assert!((mu[0] - (1.0 - 1.0 / 1.1)).abs() < 1e-12);
        assert!((mu[0] - 0.09091).abs() < 1e-5);
        // The center sample has membership exactly one.
        assert!((mu[1] - 1.0).abs() < 1e-12);

        let params0 = IfParams::new(0.0, Beta::Auto, KernelSpec::Linear).unwrap();
        let mu = membership(&ds, &params0).unwrap();
        assert!(mu[0].abs() < 1e-12);
    }

    #[test]
    fn zero_radius_with_zero_gamma() {
        use Label::*;
        let ds = ds_1d(&[1.0, 1.0, 3.0, 4.0], &[Pos, Pos, Neg, Neg]);
        let params = IfParams::new(0.0, Beta::Auto, KernelSpec::Linear).unwrap();
        assert_eq!(membership(&ds, &params), Err(IfScoreError::ZeroDenominator(Pos)));
    }

    #[test]
    fn empty_class() {
        let ds = ds_1d(&[1.0, 2.0], &[Label::Pos, Label::Pos]);
        let params = IfParams::with_kernel(KernelSpec::Linear);
        assert_eq!(membership(&ds, &params), Err(IfScoreError::EmptyClass(Label::Neg)));
    }

    #[test]
    fn nonmembership_examples() {
        use Label::*;
        // Sample 0 has neighbors {0, 1, 2, 3} within beta = 1.5, one of them
        // from the other class.
        let ds = ds_1d(&[0.0, 0.5, 1.0, 1.5, 10.0, 11.0], &[Pos, Pos, Pos, Neg, Neg, Neg]);
        let params = IfParams::new(1e-4, Beta::Fixed(1.5), KernelSpec::Linear).unwrap();
        let mu = vec![0.5; 6];
        let nu = nonmembership(&ds, &mu, &params).unwrap();
        assert!((nu[0] - 0.125).abs() < 1e-15);
        // Samples 4 and 5 see only their own class.
        assert_eq!(nu[5], 0.0);
        let mut mu1 = mu.clone();
        mu1[1] = 1.0;
        assert_eq!(nonmembership(&ds, &mu1, &params).unwrap()[1], 0.0);
    }

    #[test]
    fn score_branches() {
        assert_eq!(score_one(0.8, 0.0), 0.8);
        assert_eq!(score_one(0.3, 0.5), 0.0);
        assert!((score_one(0.6, 0.2) - 0.8 / 1.2).abs() < 1e-15);
        assert!(matches!(
            score(&[0.7], &[0.5]),
            Err(IfScoreError::DomainViolation { index: 0, .. })
        ));
        assert!(matches!(score(&[0.5], &[-0.1]), Err(IfScoreError::DomainViolation { .. })));
    }

    #[test]
    fn score_is_monotone() {
        let grid: Vec<f64> = (1..20).map(|i| i as f64 / 20.0).collect();
        for &nu in &grid {
            let mut prev = None;
            for &mu in grid.iter().filter(|&&m| m > nu && m + nu <= 1.0) {
                let s = score_one(mu, nu);
                if let Some(p) = prev {
                    assert!(s > p);
                }
                prev = Some(s);
            }
        }
        for &mu in &grid {
            let mut prev = None;
            for &nu in grid.iter().filter(|&&n| mu > n && mu + n <= 1.0) {
                let s = score_one(mu, nu);
                if let Some(p) = prev {
                    assert!(s <= p);
                }
                prev = Some(s);
            }
        }
    }

    #[test]
    fn unit_scores_at_centers() {
        // Every sample is its class center: μ = 1, ν = 0.
        use Label::*;
        let x = DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 0.0, 0.0, 9.0, 9.0, 9.0, 9.0]);
        let ds = Dataset::new("c", x, vec![Pos, Pos, Neg, Neg]).unwrap();
        let params = IfParams::with_kernel(KernelSpec::Gaussian { sigma: 1.0 });
        let sm = score_matrices(&ds, &params).unwrap();
        assert_eq!(sm.s1, vec![1.0, 1.0]);
        assert_eq!(sm.s2, vec![1.0, 1.0]);
    }

    #[test]
    fn relabel_swaps_score_matrices() {
        use Label::*;
        let x = DMatrix::from_row_slice(5, 1, &[0.0, 0.4, 3.0, 2.5, 0.2]);
        let ds = Dataset::new("r", x, vec![Pos, Pos, Neg, Neg, Neg]).unwrap();
        let swapped = ds.with_labels(ds.labels().iter().map(|l| l.flipped()).collect()).unwrap();
        let params = IfParams::with_kernel(KernelSpec::Gaussian { sigma: 0.7 });
        let a = score_matrices(&ds, &params).unwrap();
        let b = score_matrices(&swapped, &params).unwrap();
        assert_eq!(a.s1, b.s2);
        assert_eq!(a.s2, b.s1);
    }

    #[test]
    fn median_of_pairs() {
        let d = vec![vec![0.0, 1.0, 4.0], vec![1.0, 0.0, 2.0], vec![4.0, 2.0, 0.0]];
        assert_eq!(median_pairwise(&d), 2.0);
    }
}
