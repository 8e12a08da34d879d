//! Report files. Everything is rendered to a string first and then written
//! through a temporary file that is renamed into place.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::Context;
use ifgep::evalstats::{sign_test_threshold, CvRow, EvalReport};
use ifgep::models::HyperParams;
use ifgep::pipeline::RunOutcome;

pub fn write_atomic(path: &Path, contents: &str) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, contents).with_context(|| format!("writing {}", Path::new(&tmp).display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// Quotes a field when it would otherwise break the row.
fn field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub const CV_HEADER: &str = "delta,eta,sigma,mean_accuracy,error";

pub fn cv_row(r: &CvRow) -> String {
    format!(
        "{},{},{},{},{}",
        r.delta,
        opt(r.eta),
        opt(r.sigma),
        opt(r.mean_accuracy),
        field(r.error.as_deref().unwrap_or(""))
    )
}

pub fn cv_table(rows: &[CvRow]) -> String {
    let mut out = format!("{CV_HEADER}\n");
    for r in rows {
        writeln!(out, "{}", cv_row(r)).unwrap();
    }
    out
}

/// The width that was searched: the classifier's for kernel models, the
/// scoring kernel's for fuzzy linear ones.
pub fn chosen_sigma(outcome: &RunOutcome) -> Option<f64> {
    let p: &HyperParams = &outcome.params;
    p.kernel
        .sigma()
        .or_else(|| outcome.variant.is_fuzzy().then(|| p.if_params.score_kernel.sigma()).flatten())
}

pub fn train_report(outcome: &RunOutcome) -> String {
    let mut out = String::new();
    writeln!(out, "dataset={}", outcome.dataset).unwrap();
    writeln!(out, "variant={}", outcome.variant).unwrap();
    writeln!(out, "delta={}", outcome.params.delta).unwrap();
    if outcome.variant.uses_eta() {
        writeln!(out, "eta={}", outcome.params.eta).unwrap();
    }
    if let Some(s) = chosen_sigma(outcome) {
        writeln!(out, "sigma={s}").unwrap();
    }
    writeln!(out, "cv_accuracy={}", outcome.cv_accuracy).unwrap();
    writeln!(out, "train_accuracy={}", outcome.train_accuracy).unwrap();
    writeln!(out, "test_accuracy={}", outcome.test_accuracy).unwrap();
    out
}

pub fn accuracy_table(report: &EvalReport) -> String {
    let t = &report.table;
    let mut out = String::from("dataset,model,accuracy\n");
    for (i, d) in t.datasets().iter().enumerate() {
        for (j, m) in t.models().iter().enumerate() {
            writeln!(out, "{},{},{}", field(d), m, opt(t.get(i, j))).unwrap();
        }
    }
    out
}

pub fn ranks_table(ranks: &[(String, f64)]) -> String {
    let mut out = String::from("model,avg_rank\n");
    for (m, r) in ranks {
        writeln!(out, "{},{r}", field(m)).unwrap();
    }
    out
}

pub struct Statistics {
    pub n_datasets: usize,
    pub n_models: usize,
    pub chi2_f: Option<f64>,
    pub f_f: Option<f64>,
    pub cd: Option<f64>,
}

impl Statistics {
    pub fn of(report: &EvalReport) -> Self {
        Self {
            n_datasets: report.table.datasets().len(),
            n_models: report.table.models().len(),
            chi2_f: report.chi2_f,
            f_f: report.f_f,
            cd: report.cd,
        }
    }
}

/// Rows: `n_datasets`, `n_models`, `chi2_f`, `f_f`, `nemenyi_cd`,
/// `wtl_threshold`. Undefined values are left empty.
pub fn stats_table(s: &Statistics) -> String {
    let mut out = String::from("statistic,value\n");
    writeln!(out, "n_datasets,{}", s.n_datasets).unwrap();
    writeln!(out, "n_models,{}", s.n_models).unwrap();
    writeln!(out, "chi2_f,{}", opt(s.chi2_f)).unwrap();
    writeln!(out, "f_f,{}", opt(s.f_f)).unwrap();
    writeln!(out, "nemenyi_cd,{}", opt(s.cd)).unwrap();
    writeln!(out, "wtl_threshold,{}", sign_test_threshold(s.n_datasets)).unwrap();
    out
}

pub fn wtl_table(report: &EvalReport) -> String {
    let mut out = String::from("model_a,model_b,wins,ties,losses,significant\n");
    for a in report.table.models() {
        for b in report.table.models() {
            if let Some(w) = report.wtl.get(&(a.clone(), b.clone())) {
                writeln!(out, "{},{},{},{},{},{}", field(a), field(b), w.wins, w.ties, w.losses, w.significant).unwrap();
            }
        }
    }
    out
}
