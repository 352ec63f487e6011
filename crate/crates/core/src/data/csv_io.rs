use std::collections::HashMap;
use std::path::Path;

use super::Dataset;
use crate::error::{Error, Result};
use crate::numeric::Matrix;

fn csv_error(err: csv::Error) -> Error {
    let line = err.position().map_or(0, |p| p.line());
    match err.kind() {
        csv::ErrorKind::UnequalLengths {
            expected_len, len, ..
        } => Error::Parse {
            line,
            message: format!("row has {len} fields, header has {expected_len}"),
        },
        _ => Error::Parse {
            line,
            message: err.to_string(),
        },
    }
}

/// Reads a headed CSV of numeric features. When `label_column` is given,
/// that column's values are mapped to class ids in order of first appearance.
pub fn load_csv(path: impl AsRef<Path>, label_column: Option<&str>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = reader.headers().map_err(csv_error)?.clone();
    if headers.is_empty() || headers.iter().all(str::is_empty) {
        return Err(Error::Parse {
            line: 1,
            message: "missing header row".into(),
        });
    }
    let label_idx = match label_column {
        Some(name) => Some(
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Parse {
                    line: 1,
                    message: format!("label column '{name}' not found in header"),
                })?,
        ),
        None => None,
    };
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != label_idx)
        .map(|(_, h)| h.to_string())
        .collect();

    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut label_ids: HashMap<String, usize> = HashMap::new();
    let mut label_names = Vec::new();
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        for (i, field) in record.iter().enumerate() {
            if Some(i) == label_idx {
                let next = label_ids.len();
                let id = *label_ids.entry(field.to_string()).or_insert_with(|| {
                    label_names.push(field.to_string());
                    next
                });
                labels.push(id);
                continue;
            }
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                line,
                message: format!("column '{}': '{field}' is not a number", &headers[i]),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line,
                    message: format!("column '{}': non-finite value '{field}'", &headers[i]),
                });
            }
            data.push(v);
        }
        rows += 1;
    }

    let features = Matrix::from_vec(rows, feature_names.len(), data)?;
    let name = path
        .file_stem()
        .map_or_else(|| "csv".to_string(), |s| s.to_string_lossy().into_owned());
    let mut ds = Dataset::new(name, features, label_idx.map(|_| labels))?;
    ds.feature_names = feature_names;
    if label_idx.is_some() {
        ds.label_names = Some(label_names);
    }
    Ok(ds)
}

/// Writes features (and labels as `label_column`, if present) with a header.
/// Values are printed in shortest round-trip form.
pub fn save_csv(dataset: &Dataset, path: impl AsRef<Path>, label_column: &str) -> Result<()> {
    let path = path.as_ref();
    let io = |e: csv::Error| Error::Parse {
        line: 0,
        message: format!("writing {}: {e}", path.display()),
    };
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    let mut header: Vec<String> = dataset.feature_names.clone();
    if dataset.labels.is_some() {
        header.push(label_column.to_string());
    }
    w.write_record(&header).map_err(io)?;
    for (r, row) in dataset.features.iter_rows().enumerate() {
        let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        if let Some(labels) = &dataset.labels {
            let id = labels[r];
            rec.push(match &dataset.label_names {
                Some(names) => names[id].clone(),
                None => id.to_string(),
            });
        }
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
