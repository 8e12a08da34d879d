//! `ifgep`: experiments with proximal eigenvalue classifiers.
//!
//! Every run writes `run.meta` (the resolved configuration) into its
//! output directory. Written tables and their columns:
//!
//! | file | columns |
//! |------|---------|
//! | `accuracy.csv` | `dataset,model,accuracy` |
//! | `ranks.csv` | `model,avg_rank` |
//! | `stats.csv` | `statistic,value` |
//! | `wtl.csv` | `model_a,model_b,wins,ties,losses,significant` |
//! | `cv.csv` | `[dataset,model,]delta,eta,sigma,mean_accuracy,error` |
//! | `noise.csv` | `noise_percent,model,cv_accuracy,train_accuracy,test_accuracy` |
//! | `excluded.csv` | `dataset,reason` |
//! | `predictions.csv` | `index[,label],prediction` |
//!
//! Exit codes: 0 on success (a benchmark that skipped some datasets still
//! succeeds), 1 on runtime failure, 2 on usage or configuration errors.

mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::Command;

/// An error in how the program was invoked, reported with exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

const SUBCOMMANDS: [(&str, &str); 6] = [
    ("synth", "Generate cross-plane train/test CSVs"),
    ("train", "Grid-search, fit and evaluate one model"),
    ("predict", "Classify a CSV with a saved model"),
    ("benchmark", "Compare variants over several datasets"),
    ("noise-sweep", "Accuracy as training-label noise grows"),
    ("stats", "Recompute rank statistics from an accuracy table or rank vector"),
];

fn cli() -> Command {
    let mut cmd = Command::new("ifgep")
        .about("Proximal eigenvalue classifiers with intuitionistic fuzzy scores")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg_required_else_help(true);
    for (name, about) in SUBCOMMANDS {
        cmd = cmd.subcommand(config::with_flags(Command::new(name).about(about), &config::keys_for(name)));
    }
    cmd
}

fn dispatch(name: &str, matches: &clap::ArgMatches) -> anyhow::Result<()> {
    let settings = config::Settings::resolve(name, matches)?;
    match name {
        "synth" => commands::synth(&settings),
        "train" => commands::train(&settings),
        "predict" => commands::predict(&settings),
        "benchmark" => commands::benchmark(&settings),
        "noise-sweep" => commands::noise_sweep(&settings),
        "stats" => commands::stats(&settings),
        _ => unreachable!(),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let matches = match cli().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    match dispatch(name, sub) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<UsageError>().is_some() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
