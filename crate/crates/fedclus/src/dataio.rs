//! File formats: numeric-CSV dataset loading, dataset export, and the split
//! sidecar mapping points to clients.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use fedclus_core::{DataPoint, Dataset, FederatedSplit, SplitSpec};

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("cannot open {path}: {source}")]
    Open {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: missing column '{column}'")]
    MissingColumn { path: String, column: String },
    #[error("{path}: row {row}, column '{column}': '{value}' is not numeric")]
    NonNumericCell {
        path: String,
        row: u64,
        column: String,
        value: String,
    },
    #[error("{path}: no data rows")]
    Empty { path: String },
    #[error("{path}: line {line}: expected 'client_id,point_index'")]
    MalformedSidecar { path: String, line: usize },
    #[error("csv error in {path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] fedclus_core::Error),
}

fn path_str(path: &Path) -> String {
    path.display().to_string()
}

/// Reads a header-rowed numeric CSV into a dataset.
///
/// `feature_columns` picks the coordinates in order. With a label column the
/// raw numeric labels are densified to 0..L by sorted distinct value, so
/// heterogeneity-controlled partitioning works on real data too. With
/// `standardize` every feature column is z-scored using the whole file's
/// mean and sample standard deviation.
pub fn load_csv(
    path: &Path,
    feature_columns: &[String],
    label_column: Option<&str>,
    standardize: bool,
) -> Result<Dataset, DataError> {
    let file = File::open(path).map_err(|source| DataError::Open {
        path: path_str(path),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(BufReader::new(file));

    let headers = reader
        .headers()
        .map_err(|source| DataError::Csv {
            path: path_str(path),
            source,
        })?
        .clone();
    let column_index = |name: &str| -> Result<usize, DataError> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DataError::MissingColumn {
                path: path_str(path),
                column: name.to_string(),
            })
    };
    let feature_idx: Vec<usize> = feature_columns
        .iter()
        .map(|c| column_index(c))
        .collect::<Result<_, _>>()?;
    let label_idx = label_column.map(column_index).transpose()?;

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut raw_labels: Vec<f64> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|source| DataError::Csv {
            path: path_str(path),
            source,
        })?;
        // header is line 1, first data row line 2
        let row_no = (i + 2) as u64;
        let parse = |col: usize| -> Result<f64, DataError> {
            let raw = record.get(col).unwrap_or("");
            raw.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| DataError::NonNumericCell {
                    path: path_str(path),
                    row: row_no,
                    column: headers.get(col).unwrap_or("?").to_string(),
                    value: raw.to_string(),
                })
        };
        rows.push(feature_idx.iter().map(|&c| parse(c)).collect::<Result<_, _>>()?);
        if let Some(col) = label_idx {
            raw_labels.push(parse(col)?);
        }
    }
    if rows.is_empty() {
        return Err(DataError::Empty {
            path: path_str(path),
        });
    }

    if standardize {
        let n = rows.len() as f64;
        for d in 0..feature_idx.len() {
            let mean = rows.iter().map(|r| r[d]).sum::<f64>() / n;
            let std = if rows.len() > 1 {
                (rows.iter().map(|r| (r[d] - mean) * (r[d] - mean)).sum::<f64>() / (n - 1.0))
                    .sqrt()
            } else {
                0.0
            };
            let denom = if std > 0.0 { std } else { 1.0 };
            for r in &mut rows {
                r[d] = (r[d] - mean) / denom;
            }
        }
    }

    let points: Vec<DataPoint> = rows
        .into_iter()
        .map(DataPoint::new)
        .collect::<Result<_, _>>()?;
    if label_idx.is_some() {
        let mut distinct: Vec<u64> = raw_labels.iter().map(|l| l.to_bits()).collect();
        distinct.sort_unstable_by(|a, b| {
            f64::from_bits(*a)
                .partial_cmp(&f64::from_bits(*b))
                .unwrap()
        });
        distinct.dedup();
        let labels: Vec<usize> = raw_labels
            .iter()
            .map(|l| distinct.iter().position(|d| *d == l.to_bits()).unwrap())
            .collect();
        Ok(Dataset::with_labels(points, labels)?)
    } else {
        Ok(Dataset::new(points)?)
    }
}

/// Writes a dataset as CSV with feature columns x0..x{h-1} and, when labels
/// exist, a final `label` column.
pub fn write_dataset_csv(path: &Path, data: &Dataset) -> Result<(), DataError> {
    let mut writer = csv::Writer::from_path(path).map_err(|source| DataError::Csv {
        path: path_str(path),
        source,
    })?;
    let dim = data.dim().unwrap_or(0);
    let mut header: Vec<String> = (0..dim).map(|d| format!("x{d}")).collect();
    if data.labels().is_some() {
        header.push("label".to_string());
    }
    writer
        .write_record(&header)
        .map_err(|source| DataError::Csv {
            path: path_str(path),
            source,
        })?;
    for (i, p) in data.points().iter().enumerate() {
        let mut record: Vec<String> = p.coords().iter().map(|c| c.to_string()).collect();
        if let Some(labels) = data.labels() {
            record.push(labels[i].to_string());
        }
        writer
            .write_record(&record)
            .map_err(|source| DataError::Csv {
                path: path_str(path),
                source,
            })?;
    }
    writer.flush().map_err(|source| DataError::Io {
        path: path_str(path),
        source,
    })?;
    Ok(())
}

/// Writes the split sidecar: one `client_id,point_index` pair per line,
/// clients ascending, points in their within-client order.
pub fn write_split_sidecar(path: &Path, split: &FederatedSplit) -> Result<(), DataError> {
    let mut out = File::create(path).map_err(|source| DataError::Io {
        path: path_str(path),
        source,
    })?;
    for (client, indices) in split.provenance.client_point_indices.iter().enumerate() {
        for &point in indices {
            writeln!(out, "{client},{point}").map_err(|source| DataError::Io {
                path: path_str(path),
                source,
            })?;
        }
    }
    Ok(())
}

/// Reads a split sidecar back against its dataset, restoring per-client
/// point order exactly. A literal `client_id,point_index` header line is
/// tolerated and skipped.
pub fn read_split_sidecar(
    path: &Path,
    data: &Dataset,
    spec: Option<SplitSpec>,
) -> Result<FederatedSplit, DataError> {
    let file = File::open(path).map_err(|source| DataError::Open {
        path: path_str(path),
        source,
    })?;
    let mut client_points: Vec<Vec<usize>> = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| DataError::Io {
            path: path_str(path),
            source,
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() || (lineno == 0 && trimmed == "client_id,point_index") {
            continue;
        }
        let parts: Vec<&str> = trimmed.split(',').collect();
        let parsed: Option<(usize, usize)> = match parts.as_slice() {
            [c, p] => c.trim().parse().ok().zip(p.trim().parse().ok()),
            _ => None,
        };
        let (client, point) = parsed.ok_or(DataError::MalformedSidecar {
            path: path_str(path),
            line: lineno + 1,
        })?;
        if client_points.len() <= client {
            client_points.resize(client + 1, Vec::new());
        }
        client_points[client].push(point);
    }
    Ok(FederatedSplit::from_point_indices(data, client_points, spec)?)
}
