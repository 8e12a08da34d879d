//! Seeded train/test splits, stratified folds and label noise.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{DataError, Dataset, Label};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitPlan {
    pub train_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitPlan {
    fn default() -> Self {
        Self {
            train_fraction: 0.7,
            seed: 0,
            stratified: true,
        }
    }
}

impl SplitPlan {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }
}

/// Splits `total` training slots over classes proportionally by largest
/// remainder, keeping at least one train and one test sample per class.
fn allocate(counts: &[usize], fraction: f64) -> Vec<usize> {
    let m: usize = counts.iter().sum();
    let target = ((fraction * m as f64).round() as usize).clamp(1, m.saturating_sub(1).max(1));
    let quotas: Vec<f64> = counts.iter().map(|&c| fraction * c as f64).collect();
    let mut alloc: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    let mut assigned: usize = alloc.iter().sum();
    for &c in order.iter().cycle().take(counts.len() * 2) {
        if assigned >= target {
            break;
        }
        if alloc[c] < counts[c] {
            alloc[c] += 1;
            assigned += 1;
        }
    }
    for (a, &c) in alloc.iter_mut().zip(counts) {
        if c >= 2 {
            *a = (*a).clamp(1, c - 1);
        }
    }
    alloc
}

/// Seeded train/test partition. Rows keep their original relative order.
pub fn split(ds: &Dataset, plan: &SplitPlan) -> Result<(Dataset, Dataset), DataError> {
    let f = plan.train_fraction;
    if !(f > 0.0 && f < 1.0) {
        return Err(DataError::InvalidFraction(f));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let mut train_idx = Vec::new();
    if plan.stratified {
        let classes = [Label::Pos, Label::Neg];
        let members: Vec<Vec<usize>> = classes.iter().map(|&l| ds.class_indices(l)).collect();
        for (label, idx) in classes.iter().zip(&members) {
            if idx.len() < 2 {
                return Err(DataError::ClassTooSmall {
                    label: *label,
                    count: idx.len(),
                    needed: 2,
                });
            }
        }
        let counts: Vec<usize> = members.iter().map(Vec::len).collect();
        for (mut idx, take) in members.into_iter().zip(allocate(&counts, f)) {
            idx.shuffle(&mut rng);
            train_idx.extend_from_slice(&idx[..take]);
        }
    } else {
        if ds.len() < 2 {
            return Err(DataError::InvalidFraction(f));
        }
        let mut idx: Vec<usize> = (0..ds.len()).collect();
        idx.shuffle(&mut rng);
        let take = allocate(&[ds.len()], f)[0];
        train_idx.extend_from_slice(&idx[..take]);
    }
    train_idx.sort_unstable();
    let mut in_train = vec![false; ds.len()];
    for &i in &train_idx {
        in_train[i] = true;
    }
    let test_idx: Vec<usize> = (0..ds.len()).filter(|&i| !in_train[i]).collect();
    Ok((ds.subset(&train_idx), ds.subset(&test_idx)))
}

/// `k` disjoint, stratified folds covering `0..m`, each sorted.
pub fn kfold_indices(m: usize, k: usize, labels: &[Label], seed: u64) -> Result<Vec<Vec<usize>>, DataError> {
    if k < 2 {
        return Err(DataError::InvalidFolds(k));
    }
    if labels.len() != m {
        return Err(DataError::LengthMismatch {
            features: m,
            labels: labels.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    let mut next = 0usize;
    for label in [Label::Pos, Label::Neg] {
        let mut idx: Vec<usize> = (0..m).filter(|&i| labels[i] == label).collect();
        if idx.len() < k {
            return Err(DataError::ClassTooSmall {
                label,
                count: idx.len(),
                needed: k,
            });
        }
        idx.shuffle(&mut rng);
        // Dealing continues where the previous class stopped so fold sizes
        // differ by at most one overall.
        for i in idx {
            folds[next % k].push(i);
            next += 1;
        }
    }
    for fold in &mut folds {
        fold.sort_unstable();
    }
    Ok(folds)
}

/// Flips the labels of exactly `round(fraction · m)` samples drawn
/// uniformly without replacement from the whole dataset.
pub fn inject_label_noise(ds: &Dataset, fraction: f64, seed: u64) -> Result<Dataset, DataError> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(DataError::InvalidFraction(fraction));
    }
    let m = ds.len();
    let count = ((fraction * m as f64).round() as usize).min(m);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels = ds.labels().to_vec();
    for i in rand::seq::index::sample(&mut rng, m, count) {
        labels[i] = labels[i].flipped();
    }
    ds.with_labels(labels)
}
