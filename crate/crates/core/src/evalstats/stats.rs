//! Rank statistics over a dataset × model accuracy table.

use std::collections::BTreeMap;

use super::EvalError;

/// Nemenyi critical values `q_α` at `α = 0.05` for `q = 2..=10` models.
pub const Q_ALPHA_005: [f64; 9] = [1.960, 2.343, 2.569, 2.728, 2.850, 2.949, 3.031, 3.102, 3.164];

pub fn q_alpha_005(q: usize) -> Option<f64> {
    q.checked_sub(2).and_then(|i| Q_ALPHA_005.get(i)).copied()
}

/// Accuracies in percent, one row per dataset and one column per model.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyTable {
    datasets: Vec<String>,
    models: Vec<String>,
    values: Vec<Vec<Option<f64>>>,
}

impl AccuracyTable {
    pub fn new(datasets: Vec<String>, models: Vec<String>) -> Self {
        let values = vec![vec![None; models.len()]; datasets.len()];
        Self {
            datasets,
            models,
            values,
        }
    }

    /// Builds a table from `(dataset, model, accuracy)` triples. Datasets
    /// and models keep their first-seen order.
    pub fn from_triples<'a>(rows: impl IntoIterator<Item = (&'a str, &'a str, f64)>) -> Result<Self, EvalError> {
        let rows: Vec<_> = rows.into_iter().collect();
        let mut datasets: Vec<String> = Vec::new();
        let mut models: Vec<String> = Vec::new();
        for &(d, m, _) in &rows {
            if !datasets.iter().any(|x| x == d) {
                datasets.push(d.to_string());
            }
            if !models.iter().any(|x| x == m) {
                models.push(m.to_string());
            }
        }
        let mut table = Self::new(datasets, models);
        for (d, m, v) in rows {
            table.set(d, m, v)?;
        }
        table.check_complete()?;
        Ok(table)
    }

    pub fn datasets(&self) -> &[String] {
        &self.datasets
    }

    pub fn models(&self) -> &[String] {
        &self.models
    }

    fn model_index(&self, model: &str) -> Result<usize, EvalError> {
        self.models
            .iter()
            .position(|m| m == model)
            .ok_or_else(|| EvalError::UnknownModel(model.to_string()))
    }

    pub fn set(&mut self, dataset: &str, model: &str, accuracy: f64) -> Result<(), EvalError> {
        if !(0.0..=100.0).contains(&accuracy) {
            return Err(EvalError::DegenerateInput(format!(
                "accuracy {accuracy} for {dataset}/{model} is outside [0, 100]"
            )));
        }
        let j = self.model_index(model)?;
        let i = self
            .datasets
            .iter()
            .position(|d| d == dataset)
            .ok_or_else(|| EvalError::UnknownDataset(dataset.to_string()))?;
        self.values[i][j] = Some(accuracy);
        Ok(())
    }

    pub fn get(&self, dataset: usize, model: usize) -> Option<f64> {
        self.values.get(dataset)?.get(model).copied().flatten()
    }

    /// Drops datasets that are missing any model's accuracy.
    pub fn complete_rows(&self) -> Self {
        let keep: Vec<usize> = (0..self.datasets.len())
            .filter(|&i| self.values[i].iter().all(Option::is_some))
            .collect();
        Self {
            datasets: keep.iter().map(|&i| self.datasets[i].clone()).collect(),
            models: self.models.clone(),
            values: keep.iter().map(|&i| self.values[i].clone()).collect(),
        }
    }

    fn check_complete(&self) -> Result<(), EvalError> {
        for (i, row) in self.values.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if v.is_none() {
                    return Err(EvalError::IncompleteTable {
                        dataset: self.datasets[i].clone(),
                        model: self.models[j].clone(),
                    });
                }
            }
        }
        Ok(())
    }

    fn complete_values(&self) -> Result<Vec<Vec<f64>>, EvalError> {
        self.check_complete()?;
        Ok(self
            .values
            .iter()
            .map(|row| row.iter().map(|v| v.unwrap()).collect())
            .collect())
    }
}

/// Ranks of one row, 1 for the highest value, ties sharing the mean of the
/// ranks they cover.
pub fn rank_row(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // Positions start..end hold ranks start+1..=end.
        let shared = (start + 1 + end) as f64 / 2.0;
        for &k in &order[start..end] {
            ranks[k] = shared;
        }
        start = end;
    }
    ranks
}

/// Mean rank of each model over all datasets, in table model order.
pub fn average_ranks(table: &AccuracyTable) -> Result<Vec<f64>, EvalError> {
    let values = table.complete_values()?;
    if values.is_empty() {
        return Err(EvalError::Empty);
    }
    let q = table.models.len();
    let mut sums = vec![0.0; q];
    for row in &values {
        for (s, r) in sums.iter_mut().zip(rank_row(row)) {
            *s += r;
        }
    }
    let n = values.len() as f64;
    Ok(sums.into_iter().map(|s| s / n).collect())
}

/// `(χ²_F, F_F)` from the average ranks of `q` models over `n` datasets.
pub fn friedman(avg_ranks: &[f64], n: usize) -> Result<(f64, f64), EvalError> {
    let q = avg_ranks.len();
    if q < 2 || n < 2 {
        return Err(EvalError::DegenerateInput(format!(
            "Friedman test needs at least 2 models and 2 datasets, got {q} and {n}"
        )));
    }
    let (qf, nf) = (q as f64, n as f64);
    let sum_sq: f64 = avg_ranks.iter().map(|r| r * r).sum();
    let chi2 = 12.0 * nf / (qf * (qf + 1.0)) * (sum_sq - qf * (qf + 1.0).powi(2) / 4.0);
    let denom = nf * (qf - 1.0) - chi2;
    if denom <= 0.0 {
        return Err(EvalError::DegenerateInput(format!(
            "F_F denominator N(q-1) - chi2 = {denom} is not positive"
        )));
    }
    Ok((chi2, (nf - 1.0) * chi2 / denom))
}

/// Nemenyi critical difference `q_α √(q(q+1) / 6N)`.
pub fn nemenyi_cd(q: usize, n: usize, q_alpha: f64) -> f64 {
    let (qf, nf) = (q as f64, n as f64);
    q_alpha * (qf * (qf + 1.0) / (6.0 * nf)).sqrt()
}

/// Adjusted wins needed for significance in the sign test over `n`
/// datasets: `n/2 + 1.96 √n / 2`.
pub fn sign_test_threshold(n: usize) -> f64 {
    let nf = n as f64;
    nf / 2.0 + 1.96 * nf.sqrt() / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WinTieLoss {
    pub wins: usize,
    pub ties: usize,
    pub losses: usize,
    /// Wins plus half the ties, one tie dropped first when the count is odd.
    pub adjusted_wins: f64,
    pub significant: bool,
}

impl WinTieLoss {
    pub fn from_counts(wins: usize, ties: usize, losses: usize) -> Self {
        let n = wins + ties + losses;
        let adjusted_wins = wins as f64 + (ties / 2) as f64;
        Self {
            wins,
            ties,
            losses,
            adjusted_wins,
            significant: n > 0 && adjusted_wins >= sign_test_threshold(n),
        }
    }
}

/// Sign-test counts of `model_a` against `model_b` over the datasets.
pub fn win_tie_loss(table: &AccuracyTable, model_a: &str, model_b: &str) -> Result<WinTieLoss, EvalError> {
    let (a, b) = (table.model_index(model_a)?, table.model_index(model_b)?);
    let values = table.complete_values()?;
    let (mut w, mut t, mut l) = (0, 0, 0);
    for row in &values {
        match row[a].total_cmp(&row[b]) {
            std::cmp::Ordering::Greater => w += 1,
            std::cmp::Ordering::Equal => t += 1,
            std::cmp::Ordering::Less => l += 1,
        }
    }
    Ok(WinTieLoss::from_counts(w, t, l))
}

/// Everything reported for a benchmark run.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub table: AccuracyTable,
    /// Model name to average rank, in table order.
    pub avg_ranks: Vec<(String, f64)>,
    /// `None` when there are fewer than 2 datasets or the statistic is
    /// undefined.
    pub chi2_f: Option<f64>,
    pub f_f: Option<f64>,
    /// `None` when no critical value is tabulated for the model count.
    pub cd: Option<f64>,
    pub wtl: BTreeMap<(String, String), WinTieLoss>,
}

impl EvalReport {
    pub fn from_table(table: AccuracyTable) -> Result<Self, EvalError> {
        let ranks = average_ranks(&table)?;
        let n = table.datasets.len();
        let q = table.models.len();
        let (chi2_f, f_f) = match friedman(&ranks, n) {
            Ok((c, f)) => (Some(c), Some(f)),
            Err(_) => (None, None),
        };
        let cd = q_alpha_005(q).map(|qa| nemenyi_cd(q, n, qa));
        let mut wtl = BTreeMap::new();
        for a in &table.models {
            for b in &table.models {
                if a != b {
                    wtl.insert((a.clone(), b.clone()), win_tie_loss(&table, a, b)?);
                }
            }
        }
        Ok(Self {
            avg_ranks: table.models.iter().cloned().zip(ranks).collect(),
            table,
            chi2_f,
            f_f,
            cd,
            wtl,
        })
    }
}
