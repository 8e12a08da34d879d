//! Numeric CSV ingestion and export.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use super::{DataError, Dataset, Label};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LabelColumn {
    #[default]
    Last,
    /// Zero-based column index.
    Index(usize),
}

#[derive(Debug, Clone)]
pub struct CsvOptions {
    pub label_column: LabelColumn,
    pub has_header: bool,
    pub delimiter: u8,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            label_column: LabelColumn::Last,
            has_header: false,
            delimiter: b',',
        }
    }
}

/// How raw label values were mapped onto `{−1, +1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    pub pairs: Vec<(String, Label)>,
}

impl fmt::Display for LabelMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .pairs
            .iter()
            .map(|(raw, label)| format!("{raw}->{label}"))
            .collect();
        f.write_str(&parts.join(" "))
    }
}

/// Raw label values are integers in one of the alphabets `{−1,+1}`,
/// `{0,1}` or `{1,2}`; in each the larger value becomes `+1`.
fn label_mapping(raw: &BTreeSet<i64>) -> Result<Vec<(i64, Label)>, DataError> {
    let fail = || {
        DataError::MixedLabelAlphabet(raw.iter().map(|v| v.to_string()).collect())
    };
    let alphabet: [i64; 2] = if raw.contains(&-1) {
        [-1, 1]
    } else if raw.contains(&0) {
        [0, 1]
    } else if raw.contains(&2) {
        [1, 2]
    } else {
        [-1, 1]
    };
    if !raw.iter().all(|v| alphabet.contains(v)) {
        return Err(fail());
    }
    Ok(raw
        .iter()
        .map(|&v| (v, if v == alphabet[1] { Label::Pos } else { Label::Neg }))
        .collect())
}

fn parse_number(field: &str, row: usize, column: usize) -> Result<f64, DataError> {
    let trimmed = field.trim();
    trimmed.parse::<f64>().map_err(|_| DataError::Parse {
        row,
        column,
        value: trimmed.to_string(),
    })
}

/// Reads a numeric CSV file. Row numbers in errors are 1-based file lines;
/// column numbers are 1-based fields.
pub fn read_csv(path: impl AsRef<Path>, options: &CsvOptions) -> Result<(Dataset, LabelMap), DataError> {
    let path = path.as_ref();
    let text = fs::read(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = ::csv::ReaderBuilder::new()
        .has_headers(options.has_header)
        .delimiter(options.delimiter)
        .flexible(true)
        .trim(::csv::Trim::All)
        .from_reader(text.as_slice());

    let mut width = None;
    let mut features: Vec<f64> = Vec::new();
    let mut raw_labels: Vec<i64> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|source| DataError::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        let row = record.position().map(|p| p.line() as usize).unwrap_or(0);
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let w = *width.get_or_insert(record.len());
        if record.len() != w {
            return Err(DataError::Arity {
                row,
                expected: w,
                found: record.len(),
            });
        }
        let label_col = match options.label_column {
            LabelColumn::Last => w - 1,
            LabelColumn::Index(c) if c < w => c,
            LabelColumn::Index(c) => {
                return Err(DataError::LabelColumnOutOfRange { column: c, width: w })
            }
        };
        for (column, field) in record.iter().enumerate() {
            let value = parse_number(field, row, column + 1)?;
            if column == label_col {
                if value.fract() != 0.0 || !value.is_finite() {
                    return Err(DataError::MixedLabelAlphabet(vec![field.to_string()]));
                }
                raw_labels.push(value as i64);
            } else {
                if !value.is_finite() {
                    return Err(DataError::NonFinite { row, column: column + 1 });
                }
                features.push(value);
            }
        }
    }
    let Some(width) = width else {
        return Err(DataError::EmptyFile);
    };
    let m = raw_labels.len();
    let n = width - 1;

    let alphabet: BTreeSet<i64> = raw_labels.iter().copied().collect();
    let mapping = label_mapping(&alphabet)?;
    let labels = raw_labels
        .iter()
        .map(|v| mapping.iter().find(|(raw, _)| raw == v).map(|(_, l)| *l).unwrap())
        .collect();
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let ds = Dataset::new(name, DMatrix::from_row_slice(m, n, &features), labels)?;
    let map = LabelMap {
        pairs: mapping.into_iter().map(|(v, l)| (v.to_string(), l)).collect(),
    };
    Ok((ds, map))
}

/// [`read_csv`] without the label mapping; the mapping is logged.
pub fn load_csv(path: impl AsRef<Path>, options: &CsvOptions) -> Result<Dataset, DataError> {
    let (ds, map) = read_csv(path.as_ref(), options)?;
    log::info!("{}: labels {}", path.as_ref().display(), map);
    Ok(ds)
}

/// Writes features followed by the label (`1` / `-1`), no header.
pub fn write_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<(), DataError> {
    let path = path.as_ref();
    let io = |source| DataError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = Vec::new();
    for i in 0..ds.len() {
        for v in ds.features().row(i).iter() {
            write!(out, "{v},").map_err(io)?;
        }
        let label = match ds.labels()[i] {
            Label::Pos => "1",
            Label::Neg => "-1",
        };
        writeln!(out, "{label}").map_err(io)?;
    }
    fs::write(path, out).map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(name: &str, text: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join(format!("ifgep-csv-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let p = dir.join(name);
        fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn parses_signed_labels() {
        let p = write_tmp("a.csv", "1,2,+1\n3,4,-1\n5,6,+1\n");
        let ds = load_csv(&p, &CsvOptions::default()).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.n_features(), 2);
        assert_eq!(ds.labels(), &[Label::Pos, Label::Neg, Label::Pos]);
        assert_eq!(ds.features()[(1, 1)], 4.0);
    }

    #[test]
    fn zero_one_alphabet() {
        let p = write_tmp("b.csv", "1,0\n2,1\n");
        let (ds, map) = read_csv(&p, &CsvOptions::default()).unwrap();
        assert_eq!(ds.labels(), &[Label::Neg, Label::Pos]);
        assert_eq!(map.to_string(), "0->-1 1->+1");
    }

    #[test]
    fn one_two_alphabet() {
        let p = write_tmp("c.csv", "1,1\n2,2\n");
        let ds = load_csv(&p, &CsvOptions::default()).unwrap();
        assert_eq!(ds.labels(), &[Label::Neg, Label::Pos]);
    }

    #[test]
    fn mixed_alphabet_rejected() {
        let p = write_tmp("d.csv", "1,0\n2,2\n");
        assert!(matches!(
            load_csv(&p, &CsvOptions::default()),
            Err(DataError::MixedLabelAlphabet(_))
        ));
        let p = write_tmp("e.csv", "1,-1\n2,0\n");
        assert!(matches!(
            load_csv(&p, &CsvOptions::default()),
            Err(DataError::MixedLabelAlphabet(_))
        ));
    }

    #[test]
    fn parse_error_names_row() {
        let p = write_tmp("f.csv", "1,2,+1\nabc,4,-1\n5,6,+1\n");
        match load_csv(&p, &CsvOptions::default()) {
            Err(DataError::Parse { row, column, value }) => {
                assert_eq!((row, column, value.as_str()), (2, 1, "abc"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_and_ragged() {
        let p = write_tmp("g.csv", "");
        assert!(matches!(load_csv(&p, &CsvOptions::default()), Err(DataError::EmptyFile)));
        let p = write_tmp("h.csv", "1,2,1\n1,-1\n");
        assert!(matches!(
            load_csv(&p, &CsvOptions::default()),
            Err(DataError::Arity { row: 2, .. })
        ));
    }

    #[test]
    fn header_and_label_column() {
        let p = write_tmp("i.csv", "y,a,b\n1,0.5,2\n0,1.5,3\n");
        let opts = CsvOptions {
            label_column: LabelColumn::Index(0),
            has_header: true,
            ..CsvOptions::default()
        };
        let ds = load_csv(&p, &opts).unwrap();
        assert_eq!(ds.labels(), &[Label::Pos, Label::Neg]);
        assert_eq!(ds.row(1), vec![1.5, 3.0]);
    }

    #[test]
    fn write_then_read() {
        let ds = Dataset::new(
            "w",
            DMatrix::from_row_slice(2, 2, &[0.1, 1e-20, -3.5, 7.0]),
            vec![Label::Neg, Label::Pos],
        )
        .unwrap();
        let p = write_tmp("w.csv", "");
        write_csv(&ds, &p).unwrap();
        let back = load_csv(&p, &CsvOptions::default()).unwrap();
        assert_eq!(back.features(), ds.features());
        assert_eq!(back.labels(), ds.labels());
    }
}
