use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use ifgep::datakit::{load_csv, write_csv, CrossplaneSpec, Dataset, Label};
use ifgep::evalstats::{
    accuracy, friedman, nemenyi_cd, q_alpha_005, AccuracyTable, EvalReport,
};
use ifgep::models::{read_model, write_model, Variant};
use ifgep::pipeline::{crossplane, evaluate, run, Protocol, RunOutcome};
use nalgebra::DMatrix;

use crate::config::{percent, Settings};
use crate::output::{self, write_atomic, Statistics};
use crate::UsageError;

fn start(settings: &Settings) -> anyhow::Result<PathBuf> {
    let out = settings.out_dir()?;
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    write_atomic(&out.join("run.meta"), &settings.meta())?;
    Ok(out)
}

fn write_dataset(ds: &Dataset, path: &Path) -> anyhow::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    write_csv(ds, &tmp)?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))
}

fn load(path: &Path, settings: &Settings) -> anyhow::Result<Dataset> {
    load_csv(path, &settings.csv_options()?).with_context(|| format!("loading {}", path.display()))
}

/// Either one dataset to be split by the protocol or an explicit
/// train/test pair.
enum Source {
    Whole(Dataset),
    Pair(Dataset, Dataset),
}

impl Source {
    fn from_settings(settings: &Settings) -> anyhow::Result<Self> {
        match (settings.path("data"), settings.path("train"), settings.path("test")) {
            (Some(d), None, None) => Ok(Source::Whole(load(&d, settings)?)),
            (None, Some(tr), Some(te)) => Ok(Source::Pair(load(&tr, settings)?, load(&te, settings)?)),
            _ => Err(UsageError("give either --data or both --train and --test".into()).into()),
        }
    }

    fn name(&self) -> &str {
        match self {
            Source::Whole(d) | Source::Pair(d, _) => d.name(),
        }
    }

    fn evaluate(&self, variant: Variant, protocol: &Protocol, seed: u64) -> anyhow::Result<RunOutcome> {
        let outcome = match self {
            Source::Whole(d) => run(d, variant, protocol, seed),
            Source::Pair(tr, te) => evaluate(tr, te, variant, protocol, seed),
        };
        outcome.with_context(|| format!("{variant} on {}", self.name()))
    }
}

pub fn synth(settings: &Settings) -> anyhow::Result<()> {
    let outliers: Vec<usize> = settings.parse_list("outliers")?;
    let [outliers_pos, outliers_neg] = outliers[..] else {
        return Err(UsageError("--outliers takes two counts, e.g. 8,7".into()).into());
    };
    let spec = CrossplaneSpec {
        n_per_class: settings.parse("per_class")?,
        outliers_pos,
        outliers_neg,
        test_per_class: settings.parse("test_per_class")?,
        ..CrossplaneSpec::default()
    };
    let out = start(settings)?;
    let (train, test) = crossplane(&spec, settings.parse("seed")?)?;
    write_dataset(&train, &out.join("train.csv"))?;
    write_dataset(&test, &out.join("test.csv"))?;
    let (p, n) = train.class_counts();
    println!("train: {p} (+1) / {n} (-1), test: {} rows", test.len());
    Ok(())
}

pub fn train(settings: &Settings) -> anyhow::Result<()> {
    let variant: Variant = settings.parse("variant")?;
    let mut protocol = settings.protocol()?;
    protocol.noise = percent(settings.parse("noise")?, "--noise")?;
    let seed: u64 = settings.parse("seed")?;
    let source = Source::from_settings(settings)?;
    let out = start(settings)?;
    let outcome = source.evaluate(variant, &protocol, seed)?;
    write_atomic(&out.join("model.txt"), &write_model(&outcome.model, outcome.scaler.as_ref()))?;
    write_atomic(&out.join("cv.csv"), &output::cv_table(&outcome.cv_table))?;
    let report = output::train_report(&outcome);
    write_atomic(&out.join("report.txt"), &report)?;
    print!("{report}");
    Ok(())
}

/// Reads a CSV whose columns are all features.
fn read_unlabeled(path: &Path, has_header: bool) -> anyhow::Result<DMatrix<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let mut values = Vec::new();
    let mut width = None;
    let mut rows = 0;
    for (i, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("{}: row {}", path.display(), i + 1))?;
        if *width.get_or_insert(record.len()) != record.len() {
            bail!("{}: row {} has {} fields, expected {}", path.display(), i + 1, record.len(), width.unwrap());
        }
        for (j, f) in record.iter().enumerate() {
            let v: f64 = f
                .parse()
                .with_context(|| format!("{}: row {}, column {}: {f:?}", path.display(), i + 1, j + 1))?;
            values.push(v);
        }
        rows += 1;
    }
    let Some(width) = width else {
        bail!("{}: no data rows", path.display());
    };
    Ok(DMatrix::from_row_slice(rows, width, &values))
}

pub fn predict(settings: &Settings) -> anyhow::Result<()> {
    let model_path = PathBuf::from(settings.require("model")?);
    let data_path = PathBuf::from(settings.require("data")?);
    let unlabeled = settings.flag("unlabeled")?;
    let text = fs::read_to_string(&model_path).with_context(|| format!("reading {}", model_path.display()))?;
    let (model, scaler) = read_model(&text).with_context(|| format!("parsing {}", model_path.display()))?;
    let (x, truth): (DMatrix<f64>, Option<Vec<Label>>) = if unlabeled {
        (read_unlabeled(&data_path, settings.flag("header")?)?, None)
    } else {
        let ds = load(&data_path, settings)?;
        (ds.features().clone(), Some(ds.labels().to_vec()))
    };
    let x = match &scaler {
        Some(s) => s.transform_matrix(&x)?,
        None => x,
    };
    let out = start(settings)?;
    let predicted = model.predict(&x)?;
    let value = |l: Label| l.value() as i64;
    let mut csv = String::new();
    match &truth {
        Some(t) => {
            csv.push_str("index,label,prediction\n");
            for (i, (p, l)) in predicted.iter().zip(t).enumerate() {
                writeln!(csv, "{i},{},{}", value(*l), value(*p)).unwrap();
            }
        }
        None => {
            csv.push_str("index,prediction\n");
            for (i, p) in predicted.iter().enumerate() {
                writeln!(csv, "{i},{}", value(*p)).unwrap();
            }
        }
    }
    write_atomic(&out.join("predictions.csv"), &csv)?;
    match truth {
        Some(t) => println!("accuracy={}", accuracy(&predicted, &t)?),
        None => println!("predicted {} rows", predicted.len()),
    }
    Ok(())
}

fn write_report(out: &Path, report: &EvalReport) -> anyhow::Result<()> {
    write_atomic(&out.join("accuracy.csv"), &output::accuracy_table(report))?;
    write_atomic(&out.join("ranks.csv"), &output::ranks_table(&report.avg_ranks))?;
    write_atomic(&out.join("stats.csv"), &output::stats_table(&Statistics::of(report)))?;
    write_atomic(&out.join("wtl.csv"), &output::wtl_table(report))
}

pub fn benchmark(settings: &Settings) -> anyhow::Result<()> {
    let variants = settings.variants("variants")?;
    if variants.len() < 2 {
        return Err(UsageError("a benchmark needs at least two variants".into()).into());
    }
    let paths: Vec<PathBuf> = settings.parse_list::<String>("data")?.into_iter().map(PathBuf::from).collect();
    let protocol = settings.protocol()?;
    let seed: u64 = settings.parse("seed")?;
    let out = start(settings)?;

    let mut rows: Vec<(String, Vec<RunOutcome>)> = Vec::new();
    let mut excluded = String::from("dataset,reason\n");
    let mut excluded_count = 0;
    for path in &paths {
        let attempt = load(path, settings).and_then(|ds| {
            variants
                .iter()
                .map(|&v| {
                    log::info!("{}: {v}", ds.name());
                    run(&ds, v, &protocol, seed).with_context(|| format!("{v} on {}", ds.name()))
                })
                .collect::<anyhow::Result<Vec<_>>>()
                .map(|r| (ds.name().to_string(), r))
        });
        match attempt {
            Ok(row) if rows.iter().any(|(name, _)| *name == row.0) => {
                bail!("two datasets are named {:?}", row.0);
            }
            Ok(row) => rows.push(row),
            Err(e) => {
                log::warn!("excluding {}: {e:#}", path.display());
                writeln!(excluded, "{},{}", path.display(), format!("{e:#}").replace([',', '\n'], ";")).unwrap();
                excluded_count += 1;
            }
        }
    }
    write_atomic(&out.join("excluded.csv"), &excluded)?;
    if rows.is_empty() {
        bail!("every dataset failed; see excluded.csv");
    }

    let names: Vec<String> = variants.iter().map(|v| v.to_string()).collect();
    let mut table = AccuracyTable::new(rows.iter().map(|r| r.0.clone()).collect(), names.clone());
    let mut cv = format!("dataset,model,{}\n", output::CV_HEADER);
    for (dataset, outcomes) in &rows {
        for (name, o) in names.iter().zip(outcomes) {
            table.set(dataset, name, o.test_accuracy)?;
            for r in &o.cv_table {
                writeln!(cv, "{dataset},{name},{}", output::cv_row(r)).unwrap();
            }
        }
    }
    let report = EvalReport::from_table(table)?;
    write_report(&out, &report)?;
    write_atomic(&out.join("cv.csv"), &cv)?;
    print!("{}", output::ranks_table(&report.avg_ranks));
    println!("datasets: {} used, {excluded_count} excluded", rows.len());
    Ok(())
}

pub fn noise_sweep(settings: &Settings) -> anyhow::Result<()> {
    let variants = settings.variants("variants")?;
    let levels: Vec<f64> = settings.parse_list("levels")?;
    let fractions = levels
        .iter()
        .map(|&l| percent(l, "noise level"))
        .collect::<Result<Vec<_>, _>>()?;
    let mut protocol = settings.protocol()?;
    let seed: u64 = settings.parse("seed")?;
    let source = Source::from_settings(settings)?;
    let out = start(settings)?;
    let mut csv = String::from("noise_percent,model,cv_accuracy,train_accuracy,test_accuracy\n");
    for (level, fraction) in levels.iter().zip(fractions) {
        protocol.noise = fraction;
        for &v in &variants {
            log::info!("{}% noise: {v}", level);
            let o = source.evaluate(v, &protocol, seed)?;
            writeln!(csv, "{level},{v},{},{},{}", o.cv_accuracy, o.train_accuracy, o.test_accuracy).unwrap();
        }
    }
    write_atomic(&out.join("noise.csv"), &csv)?;
    print!("{csv}");
    Ok(())
}

fn read_accuracy_csv(path: &Path) -> anyhow::Result<AccuracyTable> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header != ["dataset", "model", "accuracy"] {
        bail!("{}: expected header dataset,model,accuracy, found {}", path.display(), header.join(","));
    }
    let mut triples = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let r = record.with_context(|| format!("{}: row {}", path.display(), i + 2))?;
        let acc: f64 = r[2]
            .parse()
            .with_context(|| format!("{}: row {}: accuracy {:?}", path.display(), i + 2, &r[2]))?;
        triples.push((r[0].to_string(), r[1].to_string(), acc));
    }
    Ok(AccuracyTable::from_triples(triples.iter().map(|(d, m, a)| (d.as_str(), m.as_str(), *a)))?)
}

pub fn stats(settings: &Settings) -> anyhow::Result<()> {
    match (settings.path("accuracy"), settings.get("ranks")) {
        (Some(path), None) => {
            let table = read_accuracy_csv(&path)?;
            let out = start(settings)?;
            let report = EvalReport::from_table(table)?;
            write_report(&out, &report)?;
            print!("{}", output::stats_table(&Statistics::of(&report)));
        }
        (None, Some(_)) => {
            let ranks: Vec<f64> = settings.parse_list("ranks")?;
            let n: usize = settings.parse("n_datasets")?;
            let q = ranks.len();
            let out = start(settings)?;
            let (chi2_f, f_f) = friedman(&ranks, n)?;
            let s = Statistics {
                n_datasets: n,
                n_models: q,
                chi2_f: Some(chi2_f),
                f_f: Some(f_f),
                cd: q_alpha_005(q).map(|qa| nemenyi_cd(q, n, qa)),
            };
            let named: Vec<(String, f64)> = ranks.iter().enumerate().map(|(i, &r)| (format!("m{}", i + 1), r)).collect();
            write_atomic(&out.join("ranks.csv"), &output::ranks_table(&named))?;
            let table = output::stats_table(&s);
            write_atomic(&out.join("stats.csv"), &table)?;
            print!("{table}");
        }
        _ => return Err(UsageError("give either --accuracy or --ranks with --n-datasets".into()).into()),
    }
    Ok(())
}
