//! Run configuration: built-in defaults, then an optional `key=value` file,
//! then command-line flags. Every key a command understands has a flag of
//! the same name with `_` written as `-`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::Context;
use clap::{Arg, ArgMatches, Command};
use ifgep::datakit::{CsvOptions, LabelColumn};
use ifgep::evalstats::{pow2_grid, GridSpec};
use ifgep::ifscore::Beta;
use ifgep::kernels::KernelSpec;
use ifgep::models::{HyperParams, Variant};
use ifgep::pipeline::Protocol;

use crate::UsageError;

/// A key, its default (`None` when the key has no default) and help text.
pub type Key = (&'static str, Option<&'static str>, &'static str);

const DATA_KEYS: &[Key] = &[
    ("label_column", Some("last"), "label column: `last` or a zero-based index"),
    ("header", Some("false"), "whether input CSVs start with a header row"),
];

const PROTOCOL_KEYS: &[Key] = &[
    ("seed", Some("0"), "master seed"),
    ("kernel", Some("linear"), "`linear` or `gaussian`"),
    ("folds", Some("10"), "cross-validation folds"),
    ("grid_lo", Some("-8"), "smallest grid exponent (base 2)"),
    ("grid_hi", Some("8"), "largest grid exponent (base 2)"),
    ("train_fraction", Some("0.7"), "training share of the split"),
    ("normalize", Some("true"), "min-max scale features on the training part"),
    ("beta", Some("auto"), "neighborhood radius for scoring: `auto` or a number"),
];

pub const SYNTH: &[Key] = &[
    ("seed", Some("0"), "master seed"),
    ("per_class", Some("20"), "clean training points per class"),
    ("outliers", Some("8,7"), "outliers added to classes +1 and -1"),
    ("test_per_class", Some("72"), "test points per class"),
    ("out", None, "output directory"),
];

pub const TRAIN: &[Key] = &[
    ("variant", None, "model variant"),
    ("data", None, "dataset CSV, split by the protocol"),
    ("train", None, "training CSV (with --test, skips the split)"),
    ("test", None, "test CSV"),
    ("noise", Some("0"), "percent of training labels flipped"),
    ("out", None, "output directory"),
];

pub const PREDICT: &[Key] = &[
    ("model", None, "model file written by `train`"),
    ("data", None, "CSV to classify"),
    ("unlabeled", Some("false"), "every column is a feature"),
    ("out", None, "output directory"),
];

pub const BENCHMARK: &[Key] = &[
    ("data", None, "comma-separated dataset CSVs"),
    ("variants", Some("GEPSVM,IGEPSVM,IF-GEPSVM,IF-IGEPSVM"), "comma-separated model variants"),
    ("out", None, "output directory"),
];

pub const NOISE_SWEEP: &[Key] = &[
    ("data", None, "dataset CSV, split by the protocol"),
    ("train", None, "training CSV (with --test, skips the split)"),
    ("test", None, "test CSV"),
    ("variants", Some("GEPSVM,IGEPSVM,IF-GEPSVM,IF-IGEPSVM"), "comma-separated model variants"),
    ("levels", Some("0,5,10,15,20"), "comma-separated label-noise percentages"),
    ("out", None, "output directory"),
];

pub const STATS: &[Key] = &[
    ("accuracy", None, "accuracy CSV with header dataset,model,accuracy"),
    ("ranks", None, "comma-separated average ranks (instead of --accuracy)"),
    ("n_datasets", None, "dataset count for --ranks"),
    ("out", None, "output directory"),
];

/// Keys accepted by a subcommand, in the order they are echoed.
pub fn keys_for(command: &str) -> Vec<Key> {
    let (own, protocol, data): (&[Key], bool, bool) = match command {
        "synth" => (SYNTH, false, false),
        "train" => (TRAIN, true, true),
        "predict" => (PREDICT, false, true),
        "benchmark" => (BENCHMARK, true, true),
        "noise-sweep" => (NOISE_SWEEP, true, true),
        "stats" => (STATS, false, false),
        _ => unreachable!("unknown subcommand {command}"),
    };
    let mut keys = own.to_vec();
    if protocol {
        keys.extend_from_slice(PROTOCOL_KEYS);
    }
    if data {
        keys.extend_from_slice(DATA_KEYS);
    }
    let mut seen = std::collections::HashSet::new();
    keys.retain(|k| seen.insert(k.0));
    keys
}

pub fn flag_name(key: &str) -> String {
    key.replace('_', "-")
}

/// Adds `--config` and one flag per key.
pub fn with_flags(mut cmd: Command, keys: &[Key]) -> Command {
    cmd = cmd.arg(Arg::new("config").long("config").value_name("FILE").help("key=value config file"));
    for &(key, default, help) in keys {
        let help = match default {
            Some(d) => format!("{help} [default: {d}]"),
            None => help.to_string(),
        };
        cmd = cmd.arg(Arg::new(key).long(flag_name(key)).value_name("VALUE").allow_negative_numbers(true).help(help));
    }
    cmd
}

/// Fully resolved settings for one run.
#[derive(Debug, Clone)]
pub struct Settings {
    command: String,
    values: BTreeMap<String, String>,
    order: Vec<&'static str>,
}

fn parse_config_file(path: &Path) -> anyhow::Result<Vec<(String, String)>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            UsageError(format!("{}:{}: expected key=value", path.display(), i + 1))
        })?;
        out.push((k.trim().replace('-', "_"), v.trim().to_string()));
    }
    Ok(out)
}

impl Settings {
    pub fn resolve(command: &str, matches: &ArgMatches) -> anyhow::Result<Self> {
        let keys = keys_for(command);
        let mut values = BTreeMap::new();
        for &(key, default, _) in &keys {
            if let Some(d) = default {
                values.insert(key.to_string(), d.to_string());
            }
        }
        if let Some(path) = matches.get_one::<String>("config") {
            for (k, v) in parse_config_file(Path::new(path))? {
                if !keys.iter().any(|key| key.0 == k) {
                    return Err(UsageError(format!("{path}: unknown key {k:?} for `{command}`")).into());
                }
                values.insert(k, v);
            }
        }
        for &(key, _, _) in &keys {
            if let Some(v) = matches.get_one::<String>(key) {
                values.insert(key.to_string(), v.clone());
            }
        }
        Ok(Self {
            command: command.to_string(),
            values,
            order: keys.iter().map(|k| k.0).collect(),
        })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str).filter(|v| !v.is_empty())
    }

    pub fn require(&self, key: &str) -> Result<&str, UsageError> {
        self.get(key)
            .ok_or_else(|| UsageError(format!("`{}` needs --{}", self.command, flag_name(key))))
    }

    pub fn parse<T: FromStr>(&self, key: &str) -> Result<T, UsageError>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.require(key)?;
        raw.parse()
            .map_err(|e| UsageError(format!("--{} {raw:?}: {e}", flag_name(key))))
    }

    pub fn parse_list<T: FromStr>(&self, key: &str) -> Result<Vec<T>, UsageError>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.require(key)?;
        raw.split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(|t| t.parse().map_err(|e| UsageError(format!("--{} {t:?}: {e}", flag_name(key)))))
            .collect()
    }

    pub fn flag(&self, key: &str) -> Result<bool, UsageError> {
        match self.require(key)? {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            other => Err(UsageError(format!("--{} {other:?}: expected true or false", flag_name(key)))),
        }
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.get(key).map(PathBuf::from)
    }

    pub fn out_dir(&self) -> Result<PathBuf, UsageError> {
        self.require("out").map(PathBuf::from)
    }

    /// The `run.meta` echo: every key the command understands, defaults
    /// included, in declaration order.
    pub fn meta(&self) -> String {
        let mut out = String::new();
        writeln!(out, "command={}", self.command).unwrap();
        for key in &self.order {
            writeln!(out, "{key}={}", self.values.get(*key).map_or("", String::as_str)).unwrap();
        }
        out
    }

    pub fn variants(&self, key: &str) -> Result<Vec<Variant>, UsageError> {
        let v: Vec<Variant> = self.parse_list(key)?;
        if v.is_empty() {
            return Err(UsageError(format!("--{} is empty", flag_name(key))));
        }
        Ok(v)
    }

    pub fn csv_options(&self) -> Result<CsvOptions, UsageError> {
        let label_column = match self.require("label_column")? {
            "last" => LabelColumn::Last,
            _ => LabelColumn::Index(self.parse("label_column")?),
        };
        Ok(CsvOptions {
            label_column,
            has_header: self.flag("header")?,
            ..CsvOptions::default()
        })
    }

    pub fn protocol(&self) -> Result<Protocol, UsageError> {
        let kernel = match self.require("kernel")? {
            "linear" => KernelSpec::Linear,
            "gaussian" | "rbf" => KernelSpec::Gaussian { sigma: 1.0 },
            other => return Err(UsageError(format!("--kernel {other:?}: expected linear or gaussian"))),
        };
        let mut template = HyperParams::new(1.0, 0.0, kernel);
        template.if_params.beta = match self.require("beta")? {
            "auto" => Beta::Auto,
            _ => Beta::Fixed(self.parse("beta")?),
        };
        let (lo, hi): (i32, i32) = (self.parse("grid_lo")?, self.parse("grid_hi")?);
        if lo > hi {
            return Err(UsageError(format!("grid exponents {lo}..{hi} are empty")));
        }
        let grid = GridSpec {
            delta_grid: pow2_grid(lo, hi),
            eta_grid: pow2_grid(lo, hi),
            sigma_grid: pow2_grid(lo, hi),
            folds: self.parse("folds")?,
            seed: 0,
        };
        grid.validate().map_err(|e| UsageError(e.to_string()))?;
        let train_fraction: f64 = self.parse("train_fraction")?;
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(UsageError(format!("--train-fraction {train_fraction} outside (0, 1)")));
        }
        Ok(Protocol {
            train_fraction,
            normalize: self.flag("normalize")?,
            grid,
            template,
            noise: 0.0,
        })
    }
}

/// Percent values such as `5` or `12.5`, returned as fractions.
pub fn percent(v: f64, what: &str) -> Result<f64, UsageError> {
    if (0.0..=100.0).contains(&v) {
        Ok(v / 100.0)
    } else {
        Err(UsageError(format!("{what} {v} is not a percentage")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings(command: &str, args: &[&str]) -> anyhow::Result<Settings> {
        let cmd = with_flags(Command::new(command.to_string()), &keys_for(command));
        let mut argv = vec![command];
        argv.extend_from_slice(args);
        Settings::resolve(command, &cmd.try_get_matches_from(argv)?)
    }

    #[test]
    fn flags_override_file_and_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.cfg");
        fs::write(&cfg, "# comment\nseed = 5\nfolds=3\nlevels=0,10\n").unwrap();
        let s = settings("noise-sweep", &["--config", cfg.to_str().unwrap(), "--seed", "9"]).unwrap();
        assert_eq!(s.get("seed"), Some("9"));
        assert_eq!(s.get("folds"), Some("3"));
        assert_eq!(s.get("kernel"), Some("linear"));
        assert_eq!(s.parse_list::<f64>("levels").unwrap(), vec![0.0, 10.0]);
        let meta = s.meta();
        assert!(meta.starts_with("command=noise-sweep\n"));
        assert!(meta.contains("\nseed=9\n") && meta.contains("\ngrid_lo=-8\n") && meta.contains("\nout=\n"));
    }

    #[test]
    fn unknown_config_key_is_a_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.cfg");
        fs::write(&cfg, "colour=blue\n").unwrap();
        let err = settings("train", &["--config", cfg.to_str().unwrap()]).unwrap_err();
        assert!(err.downcast_ref::<UsageError>().is_some());
    }

    #[test]
    fn protocol_from_settings() {
        let s = settings("train", &["--kernel", "gaussian", "--grid-lo", "-2", "--grid-hi", "1", "--beta", "0.5"]).unwrap();
        let p = s.protocol().unwrap();
        assert_eq!(p.grid.delta_grid, vec![0.25, 0.5, 1.0, 2.0]);
        assert!(!p.template.kernel.is_linear());
        assert_eq!(p.template.if_params.beta, Beta::Fixed(0.5));
        assert!(settings("train", &["--kernel", "poly"]).unwrap().protocol().is_err());
        assert!(settings("train", &["--variant", "SVM"]).unwrap().variants("variant").is_err());
    }
}
