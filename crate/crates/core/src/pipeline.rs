//! The evaluation protocol shared by the command-line tools and the
//! acceptance checks: split, optional label noise on the training part,
//! min-max scaling, grid search, final fit and test accuracy.

use crate::datakit::{inject_label_noise, minmax_normalize, split, CrossplaneSpec, Dataset, MinMaxScaler, SplitPlan};
use crate::evalstats::{accuracy, grid_search, CvRow, EvalError, GridSpec};
use crate::models::{fit_dataset, HyperParams, TrainedModel, Variant};
use crate::seeds;

#[derive(Debug, Clone, PartialEq)]
pub struct Protocol {
    pub train_fraction: f64,
    pub normalize: bool,
    /// The fold seed of the grid is replaced by one derived from the master
    /// seed.
    pub grid: GridSpec,
    /// Kernel kind, scoring and ridge; `δ`, `η` and `σ` come from the grid.
    pub template: HyperParams,
    /// Fraction of training labels flipped before fitting.
    pub noise: f64,
}

impl Default for Protocol {
    fn default() -> Self {
        Self {
            train_fraction: 0.7,
            normalize: true,
            grid: GridSpec::default(),
            template: HyperParams::new(1.0, 0.0, crate::kernels::KernelSpec::Linear),
            noise: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dataset: String,
    pub variant: Variant,
    pub params: HyperParams,
    pub cv_accuracy: f64,
    /// Against the (possibly noisy) labels the model was fitted on.
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub model: TrainedModel,
    pub scaler: Option<MinMaxScaler>,
    pub cv_table: Vec<CvRow>,
}

/// Seed of the label noise at `level`; independent of the variant so all
/// models see the same flipped labels.
pub fn noise_seed(master: u64, level: f64) -> u64 {
    seeds::derive(master, "noise", level.to_bits())
}

/// Runs the protocol on an existing train/test partition.
pub fn evaluate(train: &Dataset, test: &Dataset, variant: Variant, protocol: &Protocol, master: u64) -> Result<RunOutcome, EvalError> {
    let train = if protocol.noise > 0.0 {
        inject_label_noise(train, protocol.noise, noise_seed(master, protocol.noise))?
    } else {
        train.clone()
    };
    let (train, test, scaler) = if protocol.normalize {
        let (tr, mut rest, scaler) = minmax_normalize(&train, std::slice::from_ref(test))?;
        (tr, rest.remove(0), Some(scaler))
    } else {
        (train, test.clone(), None)
    };
    let grid = GridSpec {
        seed: seeds::derive(master, "folds", 0),
        ..protocol.grid.clone()
    };
    let search = grid_search(&train, variant, &protocol.template, &grid)?;
    let model = fit_dataset(variant, &train, &search.best)?;
    let train_accuracy = accuracy(&model.predict(train.features())?, train.labels())?;
    let test_accuracy = accuracy(&model.predict(test.features())?, test.labels())?;
    log::debug!(
        "{} {variant}: cv {:.2} train {train_accuracy:.2} test {test_accuracy:.2} delta {} eta {} kernel {} score {}",
        train.name(),
        search.best_accuracy,
        search.best.delta,
        search.best.eta,
        search.best.kernel,
        search.best.if_params.score_kernel,
    );
    Ok(RunOutcome {
        dataset: train.name().to_string(),
        variant,
        params: search.best,
        cv_accuracy: search.best_accuracy,
        train_accuracy,
        test_accuracy,
        model,
        scaler,
        cv_table: search.table,
    })
}

/// Splits `ds` with a seed derived from `master`, then [`evaluate`]s.
pub fn run(ds: &Dataset, variant: Variant, protocol: &Protocol, master: u64) -> Result<RunOutcome, EvalError> {
    let plan = SplitPlan {
        train_fraction: protocol.train_fraction,
        seed: seeds::derive(master, "split", 0),
        stratified: true,
    };
    let (train, test) = split(ds, &plan)?;
    evaluate(&train, &test, variant, protocol, master)
}

/// Cross-plane data for `master`, with the generator seed derived from it.
pub fn crossplane(spec: &CrossplaneSpec, master: u64) -> Result<(Dataset, Dataset), EvalError> {
    let spec = CrossplaneSpec {
        seed: seeds::derive(master, "synth", 0),
        ..*spec
    };
    Ok(spec.generate()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evalstats::pow2_grid;

    fn quick() -> Protocol {
        Protocol {
            grid: GridSpec {
                delta_grid: pow2_grid(-8, 0),
                eta_grid: pow2_grid(-4, 0),
                sigma_grid: pow2_grid(-2, 1),
                folds: 5,
                seed: 0,
            },
            ..Protocol::default()
        }
    }

    #[test]
    fn crossplane_protocol() {
        let (train, test) = crossplane(&CrossplaneSpec { outliers_pos: 0, outliers_neg: 0, ..CrossplaneSpec::default() }, 1).unwrap();
        let out = evaluate(&train, &test, Variant::IfIgepsvm, &quick(), 1).unwrap();
        assert_eq!(out.train_accuracy, 100.0);
        assert!(out.test_accuracy >= 95.0, "{}", out.test_accuracy);
    }

    #[test]
    fn zero_noise_matches_clean_run() {
        let (train, test) = crossplane(&CrossplaneSpec::default(), 2).unwrap();
        let p = quick();
        let clean = evaluate(&train, &test, Variant::Gepsvm, &p, 2).unwrap();
        let zero = evaluate(&train, &test, Variant::Gepsvm, &Protocol { noise: 0.0, ..p.clone() }, 2).unwrap();
        assert_eq!(clean.test_accuracy, zero.test_accuracy);
        let noisy = evaluate(&train, &test, Variant::Gepsvm, &Protocol { noise: 0.2, ..p }, 2).unwrap();
        assert_eq!(noisy.dataset, clean.dataset);
    }

    #[test]
    fn run_is_reproducible() {
        let (a, b) = crossplane(&CrossplaneSpec::default(), 3).unwrap();
        let all = crate::datakit::Dataset::new(
            "all",
            nalgebra::DMatrix::from_fn(a.len() + b.len(), 2, |i, j| if i < a.len() { a.features()[(i, j)] } else { b.features()[(i - a.len(), j)] }),
            a.labels().iter().chain(b.labels()).copied().collect(),
        )
        .unwrap();
        let x = run(&all, Variant::IfGepsvm, &quick(), 9).unwrap();
        let y = run(&all, Variant::IfGepsvm, &quick(), 9).unwrap();
        assert_eq!(x.test_accuracy, y.test_accuracy);
        assert_eq!(x.model, y.model);
    }
}
