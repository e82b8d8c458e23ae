//! Results file schema, parsing, and seed aggregation.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};

/// Header of the results CSV, fixed for toolchain-agnostic plotting.
pub const RESULTS_HEADER: [&str; 14] = [
    "method",
    "dataset",
    "split_mode",
    "Z",
    "H",
    "k",
    "l",
    "seed",
    "split_checksum",
    "mu",
    "sigma",
    "max",
    "per_client_mu_json",
    "runtime_ms",
];

/// Header of the error sidecar written next to the results file.
pub const ERRORS_HEADER: [&str; 9] = [
    "method", "dataset", "split_mode", "Z", "H", "k", "l", "seed", "message",
];

/// Identity of one grid cell plus the seed: everything before the metrics.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RowKey {
    pub method: String,
    pub dataset: String,
    pub split_mode: String,
    pub z: usize,
    pub h: usize,
    pub k: usize,
    pub l_repr: String,
    pub seed: u64,
}

/// One (method, cell, seed) measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub key: RowKey,
    pub split_checksum: String,
    pub mu: f64,
    pub sigma: f64,
    pub max: f64,
    pub per_client_mu: Vec<f64>,
    /// Wall-clock per method call; written only when timings are enabled so
    /// default runs stay byte-deterministic.
    pub runtime_ms: Option<f64>,
}

/// A failed (method, cell, seed) attempt, recorded without aborting the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRow {
    pub key: RowKey,
    pub message: String,
}

impl MetricsRow {
    pub fn to_record(&self) -> Vec<String> {
        vec![
            self.key.method.clone(),
            self.key.dataset.clone(),
            self.key.split_mode.clone(),
            self.key.z.to_string(),
            self.key.h.to_string(),
            self.key.k.to_string(),
            self.key.l_repr.clone(),
            self.key.seed.to_string(),
            self.split_checksum.clone(),
            self.mu.to_string(),
            self.sigma.to_string(),
            self.max.to_string(),
            serde_json::to_string(&self.per_client_mu).expect("vec of floats"),
            self.runtime_ms.map(|v| v.to_string()).unwrap_or_default(),
        ]
    }

    pub fn from_record(record: &csv::StringRecord) -> Result<Self> {
        if record.len() != RESULTS_HEADER.len() {
            bail!(
                "results row has {} fields, expected {}",
                record.len(),
                RESULTS_HEADER.len()
            );
        }
        let field = |i: usize| record.get(i).unwrap_or("");
        let runtime = field(13);
        Ok(Self {
            key: RowKey {
                method: field(0).to_string(),
                dataset: field(1).to_string(),
                split_mode: field(2).to_string(),
                z: field(3).parse().context("Z")?,
                h: field(4).parse().context("H")?,
                k: field(5).parse().context("k")?,
                l_repr: field(6).to_string(),
                seed: field(7).parse().context("seed")?,
            },
            split_checksum: field(8).to_string(),
            mu: field(9).parse().context("mu")?,
            sigma: field(10).parse().context("sigma")?,
            max: field(11).parse().context("max")?,
            per_client_mu: serde_json::from_str(field(12)).context("per_client_mu_json")?,
            runtime_ms: if runtime.is_empty() {
                None
            } else {
                Some(runtime.parse().context("runtime_ms")?)
            },
        })
    }
}

pub fn read_results(path: &Path) -> Result<Vec<MetricsRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let mut rows = Vec::new();
    for record in reader.records() {
        rows.push(MetricsRow::from_record(&record?)?);
    }
    Ok(rows)
}

/// Columns a report may group on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupKey {
    Method,
    Dataset,
    SplitMode,
    Z,
    H,
    K,
    L,
}

impl GroupKey {
    pub const FULL_CELL: [GroupKey; 7] = [
        GroupKey::Method,
        GroupKey::Dataset,
        GroupKey::SplitMode,
        GroupKey::Z,
        GroupKey::H,
        GroupKey::K,
        GroupKey::L,
    ];

    pub fn parse(name: &str) -> Option<Self> {
        match name.trim() {
            "method" => Some(Self::Method),
            "dataset" => Some(Self::Dataset),
            "split_mode" => Some(Self::SplitMode),
            "Z" | "z" => Some(Self::Z),
            "H" | "h" => Some(Self::H),
            "k" => Some(Self::K),
            "l" => Some(Self::L),
            _ => None,
        }
    }

    pub fn column(self) -> &'static str {
        match self {
            Self::Method => "method",
            Self::Dataset => "dataset",
            Self::SplitMode => "split_mode",
            Self::Z => "Z",
            Self::H => "H",
            Self::K => "k",
            Self::L => "l",
        }
    }

    fn value(self, key: &RowKey) -> String {
        match self {
            Self::Method => key.method.clone(),
            Self::Dataset => key.dataset.clone(),
            Self::SplitMode => key.split_mode.clone(),
            Self::Z => key.z.to_string(),
            Self::H => key.h.to_string(),
            Self::K => key.k.to_string(),
            Self::L => key.l_repr.clone(),
        }
    }
}

impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.column())
    }
}

/// Per-group mean and sample standard deviation of each metric.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub group: Vec<String>,
    pub n: usize,
    pub mu_mean: f64,
    pub mu_std: f64,
    pub sigma_mean: f64,
    pub sigma_std: f64,
    pub max_mean: f64,
    pub max_std: f64,
}

fn mean_and_sample_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, std)
}

/// Groups rows by the given key columns (first-appearance order) and folds
/// each metric into mean and sample standard deviation across the group.
pub fn aggregate_by(rows: &[MetricsRow], keys: &[GroupKey]) -> Vec<AggregateRow> {
    let mut order: Vec<Vec<String>> = Vec::new();
    let mut groups: BTreeMap<Vec<String>, Vec<&MetricsRow>> = BTreeMap::new();
    for row in rows {
        let group: Vec<String> = keys.iter().map(|k| k.value(&row.key)).collect();
        if !groups.contains_key(&group) {
            order.push(group.clone());
        }
        groups.entry(group).or_default().push(row);
    }
    order
        .into_iter()
        .map(|group| {
            let members = &groups[&group];
            let collect = |f: fn(&MetricsRow) -> f64| -> Vec<f64> {
                members.iter().map(|r| f(r)).collect()
            };
            let (mu_mean, mu_std) = mean_and_sample_std(&collect(|r| r.mu));
            let (sigma_mean, sigma_std) = mean_and_sample_std(&collect(|r| r.sigma));
            let (max_mean, max_std) = mean_and_sample_std(&collect(|r| r.max));
            AggregateRow {
                group,
                n: members.len(),
                mu_mean,
                mu_std,
                sigma_mean,
                sigma_std,
                max_mean,
                max_std,
            }
        })
        .collect()
}

/// Aggregation over the full cell identity: one row per (method, dataset,
/// split_mode, Z, H, k, l) across its seeds.
pub fn aggregate(rows: &[MetricsRow]) -> Vec<AggregateRow> {
    aggregate_by(rows, &GroupKey::FULL_CELL)
}

pub fn write_aggregates(
    out: &mut dyn Write,
    keys: &[GroupKey],
    rows: &[AggregateRow],
) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    let mut header: Vec<String> = keys.iter().map(|k| k.column().to_string()).collect();
    header.extend(
        [
            "n", "mu_mean", "mu_std", "sigma_mean", "sigma_std", "max_mean", "max_std",
        ]
        .map(String::from),
    );
    writer.write_record(&header)?;
    for row in rows {
        let mut record = row.group.clone();
        record.push(row.n.to_string());
        for v in [
            row.mu_mean,
            row.mu_std,
            row.sigma_mean,
            row.sigma_std,
            row.max_mean,
            row.max_std,
        ] {
            record.push(v.to_string());
        }
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(method: &str, h: usize, seed: u64, mu: f64) -> MetricsRow {
        MetricsRow {
            key: RowKey {
                method: method.to_string(),
                dataset: "Syn-NO".to_string(),
                split_mode: "balanced".to_string(),
                z: 50,
                h,
                k: 10,
                l_repr: "2".to_string(),
                seed,
            },
            split_checksum: "abc".to_string(),
            mu,
            sigma: mu / 10.0,
            max: mu * 2.0,
            per_client_mu: vec![mu; 3],
            runtime_ms: None,
        }
    }

    #[test]
    fn sample_std_over_seeds() {
        let rows = vec![
            row("pfclus", 2, 0, 1.0),
            row("pfclus", 2, 300, 2.0),
            row("pfclus", 2, 600, 3.0),
        ];
        let agg = aggregate(&rows);
        assert_eq!(agg.len(), 1);
        assert_eq!(agg[0].n, 3);
        assert_eq!(agg[0].mu_mean, 2.0);
        assert!((agg[0].mu_std - 1.0).abs() < 1e-12); // sample form, n−1
    }

    #[test]
    fn single_seed_reports_zero_std_with_count() {
        let agg = aggregate(&[row("pfclus", 2, 0, 5.0)]);
        assert_eq!(agg[0].n, 1);
        assert_eq!(agg[0].mu_std, 0.0);
    }

    #[test]
    fn identical_rows_have_zero_std() {
        let rows = vec![row("kfed", 5, 0, 4.0), row("kfed", 5, 300, 4.0)];
        let agg = aggregate(&rows);
        assert_eq!(agg[0].mu_std, 0.0);
        assert_eq!(agg[0].sigma_std, 0.0);
        assert_eq!(agg[0].max_std, 0.0);
    }

    #[test]
    fn group_by_subset_merges_cells() {
        let rows = vec![
            row("pfclus", 2, 0, 1.0),
            row("pfclus", 10, 0, 3.0),
            row("kfed", 2, 0, 9.0),
        ];
        let agg = aggregate_by(&rows, &[GroupKey::Method]);
        assert_eq!(agg.len(), 2);
        assert_eq!(agg[0].group, vec!["pfclus".to_string()]);
        assert_eq!(agg[0].n, 2);
        assert_eq!(agg[0].mu_mean, 2.0);
    }

    #[test]
    fn record_round_trip_is_idempotent() {
        let mut r = row("mfc", 7, 900, 1.25);
        r.runtime_ms = Some(12.5);
        let record = r.to_record();
        let parsed =
            MetricsRow::from_record(&csv::StringRecord::from(record.clone())).unwrap();
        assert_eq!(parsed, r);
        assert_eq!(parsed.to_record(), record);
    }
}
