//! Report emission: grouped aggregates and per-figure CSVs laid out like
//! the evaluation panels (one file per dataset/split/metric, rows by H,
//! columns by method).

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};

use crate::results::{aggregate_by, AggregateRow, GroupKey, MetricsRow};

pub fn parse_group_by(spec: &str) -> Result<Vec<GroupKey>> {
    let mut keys = Vec::new();
    for part in spec.split(',') {
        match GroupKey::parse(part) {
            Some(key) if !keys.contains(&key) => keys.push(key),
            Some(_) => bail!("--group-by: duplicate column '{}'", part.trim()),
            None => bail!(
                "--group-by: unknown column '{}' (expected method, dataset, split_mode, Z, H, k, l)",
                part.trim()
            ),
        }
    }
    if keys.is_empty() {
        bail!("--group-by: need at least one column");
    }
    Ok(keys)
}

pub fn grouped(rows: &[MetricsRow], keys: &[GroupKey]) -> Vec<AggregateRow> {
    aggregate_by(rows, keys)
}

fn sanitize(part: &str) -> String {
    part.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '-' })
        .collect()
}

/// Writes one CSV per (dataset, split_mode, Z, k, l, metric): rows are the
/// heterogeneity levels, with a mean and std column per method.
pub fn write_figures(rows: &[MetricsRow], dir: &Path) -> Result<Vec<String>> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("creating figure directory {}", dir.display()))?;

    let mut panels: BTreeSet<(String, String, usize, usize, String)> = BTreeSet::new();
    for r in rows {
        panels.insert((
            r.key.dataset.clone(),
            r.key.split_mode.clone(),
            r.key.z,
            r.key.k,
            r.key.l_repr.clone(),
        ));
    }

    let mut written = Vec::new();
    for (dataset, split_mode, z, k, l) in panels {
        let panel_rows: Vec<&MetricsRow> = rows
            .iter()
            .filter(|r| {
                r.key.dataset == dataset
                    && r.key.split_mode == split_mode
                    && r.key.z == z
                    && r.key.k == k
                    && r.key.l_repr == l
            })
            .collect();
        let mut methods: Vec<String> = Vec::new();
        for r in &panel_rows {
            if !methods.contains(&r.key.method) {
                methods.push(r.key.method.clone());
            }
        }
        let mut levels: Vec<usize> = panel_rows.iter().map(|r| r.key.h).collect();
        levels.sort_unstable();
        levels.dedup();

        for (metric, pick) in [
            ("mu", 0usize),
            ("sigma", 1),
            ("max", 2),
        ] {
            let name = format!(
                "{}_{}_Z{}_k{}_l{}_{}.csv",
                sanitize(&dataset),
                sanitize(&split_mode),
                z,
                k,
                sanitize(&l),
                metric
            );
            let path = dir.join(&name);
            let file = std::fs::File::create(&path)
                .with_context(|| format!("creating {}", path.display()))?;
            let mut writer = csv::Writer::from_writer(file);
            let mut header = vec!["H".to_string()];
            for m in &methods {
                header.push(format!("{m}_mean"));
                header.push(format!("{m}_std"));
            }
            writer.write_record(&header)?;
            for &h in &levels {
                let mut record = vec![h.to_string()];
                for m in &methods {
                    let cell_rows: Vec<MetricsRow> = panel_rows
                        .iter()
                        .filter(|r| r.key.h == h && &r.key.method == m)
                        .map(|r| (*r).clone())
                        .collect();
                    if cell_rows.is_empty() {
                        record.push(String::new());
                        record.push(String::new());
                        continue;
                    }
                    let agg = aggregate_by(&cell_rows, &GroupKey::FULL_CELL);
                    let a = &agg[0];
                    let (mean, std) = match pick {
                        0 => (a.mu_mean, a.mu_std),
                        1 => (a.sigma_mean, a.sigma_std),
                        _ => (a.max_mean, a.max_std),
                    };
                    record.push(mean.to_string());
                    record.push(std.to_string());
                }
                writer.write_record(&record)?;
            }
            writer.flush()?;
            written.push(name);
        }
    }
    Ok(written)
}

pub fn print_aggregates(
    out: &mut dyn Write,
    keys: &[GroupKey],
    rows: &[AggregateRow],
) -> Result<()> {
    crate::results::write_aggregates(out, keys, rows)
}
