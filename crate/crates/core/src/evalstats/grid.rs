//! Cross-validated grid search over `δ`, `η` and `σ`.

use super::{accuracy, EvalError};
use crate::datakit::{kfold_indices, Dataset, Label};
use crate::kernels::KernelSpec;
use crate::models::{HyperParams, ModelError, Moments, Variant};

/// `{2^lo, …, 2^hi}`.
pub fn pow2_grid(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|e| 2f64.powi(e)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub delta_grid: Vec<f64>,
    pub eta_grid: Vec<f64>,
    pub sigma_grid: Vec<f64>,
    pub folds: usize,
    pub seed: u64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            delta_grid: pow2_grid(-8, 8),
            eta_grid: pow2_grid(-8, 8),
            sigma_grid: pow2_grid(-8, 8),
            folds: 10,
            seed: 0,
        }
    }
}

impl GridSpec {
    pub fn single(delta: f64, eta: f64, sigma: f64) -> Self {
        Self {
            delta_grid: vec![delta],
            eta_grid: vec![eta],
            sigma_grid: vec![sigma],
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        for (name, g) in [("delta", &self.delta_grid), ("eta", &self.eta_grid), ("sigma", &self.sigma_grid)] {
            if g.is_empty() {
                return Err(EvalError::InvalidGrid(format!("{name} grid is empty")));
            }
            if let Some(v) = g.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
                return Err(EvalError::InvalidGrid(format!("{name} grid value {v} is not positive")));
            }
        }
        if self.folds < 2 {
            return Err(EvalError::InvalidGrid(format!("folds = {}", self.folds)));
        }
        Ok(())
    }
}

/// One grid cell. `eta` and `sigma` are `None` when the variant and kernel
/// do not use them.
#[derive(Debug, Clone, PartialEq)]
pub struct CvRow {
    pub delta: f64,
    pub eta: Option<f64>,
    pub sigma: Option<f64>,
    /// `None` when the fit failed on some fold.
    pub mean_accuracy: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub best: HyperParams,
    pub best_accuracy: f64,
    /// Every cell, ordered by `(δ, η, σ)`.
    pub table: Vec<CvRow>,
}

fn sorted(grid: &[f64]) -> Vec<f64> {
    let mut g = grid.to_vec();
    g.sort_by(f64::total_cmp);
    g.dedup();
    g
}

/// Applies the `σ` of a cell: the classifier width for Gaussian models and
/// the scoring width for linear fuzzy models.
fn with_sigma(template: &HyperParams, sigma: Option<f64>) -> HyperParams {
    let mut hp = *template;
    if let Some(s) = sigma {
        match hp.kernel {
            KernelSpec::Gaussian { .. } => {
                hp.kernel = KernelSpec::Gaussian { sigma: s };
                hp.if_params.score_kernel = hp.kernel;
            }
            KernelSpec::Linear => hp.if_params.score_kernel = KernelSpec::Gaussian { sigma: s },
        }
    }
    hp
}

/// Evaluates every parameter combination by mean accuracy over stratified
/// folds of `train` and returns the best one.
///
/// `template` fixes the kernel kind and the scoring, ridge and fixed
/// parameters; the grid supplies `δ`, `η` (difference-form variants) and
/// `σ` (Gaussian kernels and fuzzy variants). Ties keep the smallest `δ`,
/// then `η`, then `σ`. A cell whose fit fails on any fold is excluded.
pub fn grid_search(train: &Dataset, variant: Variant, template: &HyperParams, grid: &GridSpec) -> Result<GridResult, EvalError> {
    grid.validate()?;
    template.validate()?;
    let folds = kfold_indices(train.len(), grid.folds, train.labels(), grid.seed)?;

    let deltas = sorted(&grid.delta_grid);
    let etas: Vec<Option<f64>> = if variant.uses_eta() {
        sorted(&grid.eta_grid).into_iter().map(Some).collect()
    } else {
        vec![None]
    };
    let sigmas: Vec<Option<f64>> = if !template.kernel.is_linear() || variant.is_fuzzy() {
        sorted(&grid.sigma_grid).into_iter().map(Some).collect()
    } else {
        vec![None]
    };

    // cells[d][e][s] accumulates the fold accuracy sum, or the first error.
    let mut cells: Vec<Vec<Vec<Result<f64, String>>>> = vec![vec![vec![Ok(0.0); sigmas.len()]; etas.len()]; deltas.len()];

    for (si, &sigma) in sigmas.iter().enumerate() {
        let base = with_sigma(template, sigma);
        for fold in &folds {
            let mut held = vec![false; train.len()];
            for &i in fold {
                held[i] = true;
            }
            let fit_idx: Vec<usize> = (0..train.len()).filter(|&i| !held[i]).collect();
            let fit_set = train.subset(&fit_idx);
            let val_set = train.subset(fold);
            let prepared = Moments::for_variant(
                variant,
                &fit_set.class_matrix(Label::Pos),
                &fit_set.class_matrix(Label::Neg),
                &base,
            )
            .and_then(|m| Ok::<_, ModelError>((m.embed(val_set.features())?, m)));
            let (phi, moments) = match prepared {
                Ok(p) => p,
                Err(e) => {
                    for row in cells.iter_mut() {
                        for cell in row.iter_mut() {
                            if cell[si].is_ok() {
                                cell[si] = Err(e.to_string());
                            }
                        }
                    }
                    continue;
                }
            };
            for (di, &delta) in deltas.iter().enumerate() {
                for (ei, &eta) in etas.iter().enumerate() {
                    let cell = &mut cells[di][ei][si];
                    let Ok(sum) = cell else { continue };
                    let hp = HyperParams {
                        delta,
                        eta: eta.unwrap_or(template.eta),
                        ..base
                    };
                    match moments.solve(variant, &hp) {
                        Ok(model) => {
                            let pred = model.predict_embedded(&phi);
                            *sum += accuracy(&pred, val_set.labels())?;
                        }
                        Err(e) => *cell = Err(e.to_string()),
                    }
                }
            }
        }
    }

    let k = folds.len() as f64;
    let mut table = Vec::new();
    let mut best: Option<(f64, HyperParams)> = None;
    let mut last_error = None;
    for (di, &delta) in deltas.iter().enumerate() {
        for (ei, &eta) in etas.iter().enumerate() {
            for (si, &sigma) in sigmas.iter().enumerate() {
                let (mean_accuracy, error) = match &cells[di][ei][si] {
                    Ok(sum) => (Some(sum / k), None),
                    Err(e) => (None, Some(e.clone())),
                };
                if let Some(acc) = mean_accuracy {
                    if best.as_ref().is_none_or(|(b, _)| acc > *b) {
                        let hp = HyperParams {
                            delta,
                            eta: eta.unwrap_or(template.eta),
                            ..with_sigma(template, sigma)
                        };
                        best = Some((acc, hp));
                    }
                } else {
                    last_error = error.clone();
                }
                table.push(CvRow {
                    delta,
                    eta,
                    sigma,
                    mean_accuracy,
                    error,
                });
            }
        }
    }
    match best {
        Some((best_accuracy, best)) => Ok(GridResult {
            best,
            best_accuracy,
            table,
        }),
        None => Err(EvalError::AllCellsFailed(last_error.unwrap_or_default())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datakit::{gen_crossplane, minmax_normalize};

    fn small_grid() -> GridSpec {
        GridSpec {
            delta_grid: vec![2f64.powi(-8), 2f64.powi(-4), 0.5, 2.0],
            eta_grid: pow2_grid(-2, 1),
            sigma_grid: pow2_grid(-1, 1),
            folds: 5,
            seed: 3,
        }
    }

    fn unit_crossplane(outliers: (usize, usize), seed: u64) -> Dataset {
        let (train, _) = gen_crossplane(20, outliers.0, outliers.1, seed).unwrap();
        minmax_normalize(&train, &[]).unwrap().0
    }

    #[test]
    fn single_point_grid() {
        let train = unit_crossplane((8, 7), 1);
        let hp = HyperParams::new(1.0, 0.0, KernelSpec::Linear);
        let g = GridSpec::single(0.5, 0.25, 1.0);
        let r = grid_search(&train, Variant::IfIgepsvm, &hp, &g).unwrap();
        assert_eq!(r.table.len(), 1);
        assert_eq!((r.best.delta, r.best.eta), (0.5, 0.25));
        assert_eq!(r.best.if_params.score_kernel, KernelSpec::Gaussian { sigma: 1.0 });
    }

    #[test]
    fn clean_crossplane_reaches_full_cv_accuracy() {
        let train = unit_crossplane((0, 0), 2);
        for v in Variant::ALL {
            let r = grid_search(&train, v, &HyperParams::new(1.0, 0.0, KernelSpec::Linear), &small_grid()).unwrap();
            assert_eq!(r.best_accuracy, 100.0, "{v}");
        }
    }

    #[test]
    fn table_shape_and_tie_break() {
        let (train, _) = gen_crossplane(20, 0, 0, 2).unwrap();
        let hp = HyperParams::new(1.0, 0.0, KernelSpec::Gaussian { sigma: 1.0 });
        let r = grid_search(&train, Variant::Igepsvm, &hp, &small_grid()).unwrap();
        assert_eq!(r.table.len(), 4 * 4 * 3);
        // The winner is the first cell in (δ, η, σ) order with the top score.
        let first = r
            .table
            .iter()
            .find(|row| row.mean_accuracy == Some(r.best_accuracy))
            .unwrap();
        assert_eq!(first.delta, r.best.delta);
        assert_eq!(first.eta, Some(r.best.eta));
        assert_eq!(first.sigma, r.best.kernel.sigma());

        let plain = grid_search(&train, Variant::Gepsvm, &HyperParams::new(1.0, 0.0, KernelSpec::Linear), &small_grid()).unwrap();
        assert_eq!(plain.table.len(), 4);
        assert!(plain.table.iter().all(|row| row.eta.is_none() && row.sigma.is_none()));
    }

    #[test]
    fn deterministic_under_seed() {
        let train = unit_crossplane((8, 7), 4);
        let hp = HyperParams::new(1.0, 0.0, KernelSpec::Linear);
        let a = grid_search(&train, Variant::IfGepsvm, &hp, &small_grid()).unwrap();
        let b = grid_search(&train, Variant::IfGepsvm, &hp, &small_grid()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn failing_cells_are_excluded() {
        // Narrow scoring widths zero every score on raw cross-plane data.
        let (train, _) = gen_crossplane(20, 8, 7, 6).unwrap();
        let hp = HyperParams::new(1.0, 0.0, KernelSpec::Linear);
        let g = GridSpec {
            sigma_grid: vec![0.01, 4.0],
            ..small_grid()
        };
        let r = grid_search(&train, Variant::IfGepsvm, &hp, &g).unwrap();
        assert!(r.table.iter().any(|row| row.mean_accuracy.is_none() && row.error.is_some()));
        assert_eq!(r.best.if_params.score_kernel, KernelSpec::Gaussian { sigma: 4.0 });

        let g = GridSpec {
            sigma_grid: vec![0.01],
            ..small_grid()
        };
        assert!(matches!(grid_search(&train, Variant::IfGepsvm, &hp, &g), Err(EvalError::AllCellsFailed(_))));
    }

    #[test]
    fn rejects_bad_grid() {
        let (train, _) = gen_crossplane(20, 0, 0, 2).unwrap();
        let hp = HyperParams::new(1.0, 0.0, KernelSpec::Linear);
        let g = GridSpec {
            delta_grid: vec![],
            ..GridSpec::default()
        };
        assert!(matches!(grid_search(&train, Variant::Gepsvm, &hp, &g), Err(EvalError::InvalidGrid(_))));
        let g = GridSpec {
            folds: 1,
            ..GridSpec::default()
        };
        assert!(matches!(grid_search(&train, Variant::Gepsvm, &hp, &g), Err(EvalError::InvalidGrid(_))));
    }
}
