//! Flat `key=value` model files.
//!
//! Keys appear in a fixed order, one per line. Vectors are space-separated
//! and matrices are row-major with their shape given first. Floats are
//! written in shortest round-trip scientific notation, so reading a file
//! back restores every value bit for bit.

use std::collections::HashMap;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use super::{HyperParams, Hyperplane, TrainedModel, Variant};
use crate::datakit::MinMaxScaler;
use crate::ifscore::{Beta, IfParams};
use crate::kernels::KernelSpec;

const FORMAT: &str = "ifgep-model 1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelIoError {
    #[error("not a model file (missing `format={FORMAT}` header)")]
    BadHeader,
    #[error("line {line}: expected key=value")]
    Syntax { line: usize },
    #[error("missing key {0}")]
    Missing(String),
    #[error("key {key}: cannot parse {value:?}")]
    Value { key: String, value: String },
    #[error("key {key}: expected {expected} values, found {found}")]
    Length { key: String, expected: usize, found: usize },
}

fn floats(values: impl IntoIterator<Item = f64>) -> String {
    let mut out = String::new();
    for (i, v) in values.into_iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        write!(out, "{v:e}").unwrap();
    }
    out
}

fn kernel_fields(prefix: &str, k: KernelSpec, out: &mut String) {
    match k {
        KernelSpec::Linear => writeln!(out, "{prefix}=linear").unwrap(),
        KernelSpec::Gaussian { sigma } => {
            writeln!(out, "{prefix}=gaussian").unwrap();
            writeln!(out, "{prefix}.sigma={sigma:e}").unwrap();
        }
    }
}

/// Serializes a model together with the feature scaler fitted on its
/// training data, if any.
pub fn write_model(model: &TrainedModel, scaler: Option<&MinMaxScaler>) -> String {
    let mut out = String::new();
    let p = &model.params;
    writeln!(out, "format={FORMAT}").unwrap();
    writeln!(out, "variant={}", model.variant).unwrap();
    writeln!(out, "n_features={}", model.n_features).unwrap();
    kernel_fields("kernel", model.kernel, &mut out);
    writeln!(out, "delta={:e}", p.delta).unwrap();
    writeln!(out, "eta={:e}", p.eta).unwrap();
    writeln!(out, "ridge={:e}", p.ridge).unwrap();
    writeln!(out, "gamma={:e}", p.if_params.gamma).unwrap();
    match p.if_params.beta {
        Beta::Auto => writeln!(out, "beta=auto").unwrap(),
        Beta::Fixed(b) => writeln!(out, "beta={b:e}").unwrap(),
    }
    kernel_fields("score_kernel", p.if_params.score_kernel, &mut out);
    for (name, plane) in [("plane_pos", &model.plane_pos), ("plane_neg", &model.plane_neg)] {
        writeln!(out, "{name}.w={}", floats(plane.w.iter().copied())).unwrap();
        writeln!(out, "{name}.b={:e}", plane.b).unwrap();
        writeln!(out, "{name}.wnorm={:e}", plane.wnorm).unwrap();
    }
    if let Some(c) = &model.reference {
        writeln!(out, "reference.rows={}", c.nrows()).unwrap();
        writeln!(out, "reference={}", floats(c.transpose().iter().copied())).unwrap();
    }
    if let Some(s) = scaler {
        writeln!(out, "scaler.min={}", floats(s.min.iter().copied())).unwrap();
        writeln!(out, "scaler.max={}", floats(s.max.iter().copied())).unwrap();
    }
    out
}

struct Fields<'a>(HashMap<&'a str, &'a str>);

impl<'a> Fields<'a> {
    fn get(&self, key: &str) -> Result<&'a str, ModelIoError> {
        self.0.get(key).copied().ok_or_else(|| ModelIoError::Missing(key.to_string()))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T, ModelIoError> {
        let v = self.get(key)?;
        v.parse().map_err(|_| ModelIoError::Value {
            key: key.to_string(),
            value: v.to_string(),
        })
    }

    fn floats(&self, key: &str, expected: usize) -> Result<Vec<f64>, ModelIoError> {
        let raw = self.get(key)?;
        let values = raw
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>().map_err(|_| ModelIoError::Value {
                    key: key.to_string(),
                    value: t.to_string(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        if values.len() != expected {
            return Err(ModelIoError::Length {
                key: key.to_string(),
                expected,
                found: values.len(),
            });
        }
        Ok(values)
    }

    fn kernel(&self, prefix: &str) -> Result<KernelSpec, ModelIoError> {
        match self.get(prefix)? {
            "linear" => Ok(KernelSpec::Linear),
            "gaussian" => Ok(KernelSpec::Gaussian {
                sigma: self.parse(&format!("{prefix}.sigma"))?,
            }),
            other => Err(ModelIoError::Value {
                key: prefix.to_string(),
                value: other.to_string(),
            }),
        }
    }

    fn plane(&self, name: &str, len: usize) -> Result<Hyperplane, ModelIoError> {
        Ok(Hyperplane {
            w: DVector::from_vec(self.floats(&format!("{name}.w"), len)?),
            b: self.parse(&format!("{name}.b"))?,
            wnorm: self.parse(&format!("{name}.wnorm"))?,
        })
    }
}

/// Parses a model file written by [`write_model`].
pub fn read_model(text: &str) -> Result<(TrainedModel, Option<MinMaxScaler>), ModelIoError> {
    let mut map = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or(ModelIoError::Syntax { line: i + 1 })?;
        map.insert(k.trim(), v.trim());
    }
    let f = Fields(map);
    if f.get("format").ok() != Some(FORMAT) {
        return Err(ModelIoError::BadHeader);
    }
    let variant: Variant = f.parse("variant")?;
    let n_features: usize = f.parse("n_features")?;
    let kernel = f.kernel("kernel")?;
    let beta = match f.get("beta")? {
        "auto" => Beta::Auto,
        _ => Beta::Fixed(f.parse("beta")?),
    };
    let params = HyperParams {
        delta: f.parse("delta")?,
        eta: f.parse("eta")?,
        kernel,
        if_params: IfParams {
            gamma: f.parse("gamma")?,
            beta,
            score_kernel: f.kernel("score_kernel")?,
        },
        ridge: f.parse("ridge")?,
    };
    let reference = match kernel {
        KernelSpec::Linear => None,
        KernelSpec::Gaussian { .. } => {
            let rows: usize = f.parse("reference.rows")?;
            let values = f.floats("reference", rows * n_features)?;
            Some(DMatrix::from_row_slice(rows, n_features, &values))
        }
    };
    let w_len = reference.as_ref().map_or(n_features, |c| c.nrows());
    let scaler = match f.0.contains_key("scaler.min") {
        false => None,
        true => Some(MinMaxScaler {
            min: f.floats("scaler.min", n_features)?,
            max: f.floats("scaler.max", n_features)?,
        }),
    };
    let model = TrainedModel {
        variant,
        plane_pos: f.plane("plane_pos", w_len)?,
        plane_neg: f.plane("plane_neg", w_len)?,
        kernel,
        reference,
        n_features,
        params,
    };
    Ok((model, scaler))
}
