//! Grid execution: expands the config into (cell × seed) jobs, runs every
//! configured method on identical splits, and appends rows incrementally in
//! a stable order regardless of worker count.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{mpsc, Arc};
use std::time::Instant;

use anyhow::{anyhow, Context, Result};
use fedclus_core::{
    derive_seed2, generate_synthetic, partition, run_centclus, run_kfed, run_mfc, run_pfclus,
    Dataset, FederatedSplit, MethodOutcome, SplitSpec, SynSpec,
};
use sha2::{Digest, Sha256};

use crate::config::{DatasetConfig, ExperimentConfig, MethodId, SplitModeConfig};
use crate::dataio::{load_csv, read_split_sidecar};
use crate::results::{ErrorRow, MetricsRow, RowKey, ERRORS_HEADER, RESULTS_HEADER};

const DOM_DATA: u64 = 1;
const DOM_SPLIT: u64 = 2;
const DOM_METHOD: u64 = 0x100;

fn method_stream(method: MethodId) -> u64 {
    DOM_METHOD
        + match method {
            MethodId::Pfclus => 0,
            MethodId::Kfed => 1,
            MethodId::Mfc => 2,
            MethodId::Centclus => 3,
        }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub resume: bool,
    pub timings: bool,
    pub workers: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            resume: false,
            timings: false,
            workers: 1,
        }
    }
}

/// A fully resolved grid cell: one (split block, heterogeneity) pair.
#[derive(Debug, Clone)]
pub struct Cell {
    pub index: usize,
    pub mode: SplitModeConfig,
    pub clients: usize,
    pub heterogeneity: usize,
    pub skew: Option<f64>,
    pub min_points: Option<usize>,
    pub import_path: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub enum JobRecord {
    Row(MetricsRow),
    Error(ErrorRow),
}

pub struct RunSummary {
    pub rows_written: usize,
    pub errors: usize,
    pub jobs_skipped: usize,
}

/// Where the error sidecar lives for a given results path.
pub fn errors_path(output: &Path) -> PathBuf {
    let stem = output
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "results".to_string());
    output.with_file_name(format!("{stem}.errors.csv"))
}

fn l_repr(l: f64) -> String {
    l.to_string()
}

/// The base dataset of a run. CSV data is loaded once; synthetic data is
/// regenerated per seed from a derived stream.
pub enum BaseData {
    PerSeed(SynSpec),
    Fixed(Arc<Dataset>),
}

impl BaseData {
    pub fn for_seed(&self, seed: u64) -> Result<Arc<Dataset>> {
        match self {
            BaseData::Fixed(d) => Ok(Arc::clone(d)),
            BaseData::PerSeed(spec) => {
                let seeded = SynSpec {
                    rng_seed: derive_seed2(seed, DOM_DATA, 0),
                    ..*spec
                };
                Ok(Arc::new(generate_synthetic(&seeded)?))
            }
        }
    }
}

pub fn base_data(cfg: &ExperimentConfig) -> Result<BaseData> {
    match &cfg.dataset {
        DatasetConfig::Synthetic {
            clusters,
            per_cluster,
            dim,
            ..
        } => {
            let kind = cfg
                .dataset
                .syn_kind()
                .ok_or_else(|| anyhow!("dataset.variant: unknown synthetic variant"))?;
            Ok(BaseData::PerSeed(SynSpec {
                kind,
                n_clusters: *clusters,
                points_per_cluster: *per_cluster,
                dim: *dim,
                rng_seed: 0,
            }))
        }
        DatasetConfig::Csv {
            path,
            features,
            label,
            standardize,
        } => {
            let data = load_csv(path, features, label.as_deref(), *standardize)
                .with_context(|| format!("loading dataset {}", path.display()))?;
            Ok(BaseData::Fixed(Arc::new(data)))
        }
    }
}

/// Expands split blocks into resolved cells. Import cells read their
/// sidecar once to fix Z and H up front.
pub fn resolve_cells(cfg: &ExperimentConfig, data: &BaseData) -> Result<Vec<Cell>> {
    let mut cells = Vec::new();
    for split in &cfg.splits {
        match split.mode {
            SplitModeConfig::Import => {
                let path = split.path.clone().expect("validated");
                // the label layout is structural, so any seed's dataset works
                let reference = data.for_seed(cfg.seeds[0])?;
                let imported = read_split_sidecar(&path, &reference, None)
                    .with_context(|| format!("importing split {}", path.display()))?;
                cells.push(Cell {
                    index: cells.len(),
                    mode: split.mode,
                    clients: imported.client_datasets.len(),
                    heterogeneity: imported.max_label_cardinality(),
                    skew: None,
                    min_points: split.min_points,
                    import_path: Some(path),
                });
            }
            _ => {
                for &h in &split.heterogeneity {
                    cells.push(Cell {
                        index: cells.len(),
                        mode: split.mode,
                        clients: split.clients.expect("validated"),
                        heterogeneity: h,
                        skew: split.skew,
                        min_points: split.min_points,
                        import_path: None,
                    });
                }
            }
        }
    }
    Ok(cells)
}

/// Builds the cell's federated split of `data` for one seed.
pub fn build_split(
    cfg: &ExperimentConfig,
    cell: &Cell,
    data: &Dataset,
    seed: u64,
) -> Result<FederatedSplit> {
    let split = match cell.mode {
        SplitModeConfig::Import => {
            let path = cell.import_path.as_ref().expect("import cell has a path");
            read_split_sidecar(path, data, None)?
        }
        SplitModeConfig::Balanced | SplitModeConfig::Unequal => {
            let mode = cell.mode.core_mode().expect("not import");
            let mut spec = SplitSpec::new(
                mode,
                cell.clients,
                cell.heterogeneity,
                derive_seed2(seed, DOM_SPLIT, cell.index as u64),
            );
            // protocol precondition: every client must carry at least k points
            spec = spec.with_min_points(cell.min_points.unwrap_or(0).max(cfg.k).max(1));
            if let Some(skew) = cell.skew {
                spec = spec.with_skew(skew);
            }
            partition(data, &spec)?
        }
    };
    for (z, client) in split.client_datasets.iter().enumerate() {
        if client.len() < cfg.k {
            return Err(anyhow!(
                "client {z} received {} points, fewer than k = {}",
                client.len(),
                cfg.k
            ));
        }
    }
    Ok(split)
}

/// Canonical checksum of a split: clients in order, each with its original
/// point indices, coordinates and labels. Truncated SHA-256.
pub fn split_checksum(data: &Dataset, split: &FederatedSplit) -> String {
    let mut hasher = Sha256::new();
    for (client, indices) in split.provenance.client_point_indices.iter().enumerate() {
        hasher.update((client as u64).to_le_bytes());
        hasher.update((indices.len() as u64).to_le_bytes());
        for &i in indices {
            hasher.update((i as u64).to_le_bytes());
            for c in data.points()[i].coords() {
                hasher.update(c.to_le_bytes());
            }
            let label = data.labels().map_or(u64::MAX, |l| l[i] as u64);
            hasher.update(label.to_le_bytes());
        }
    }
    let digest = hasher.finalize();
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

fn run_method(
    cfg: &ExperimentConfig,
    method: MethodId,
    split: &FederatedSplit,
    cell: &Cell,
    seed: u64,
) -> fedclus_core::Result<MethodOutcome> {
    let norm = cfg.norm();
    let tuning = cfg.solver.tuning();
    let method_seed = derive_seed2(seed, method_stream(method), cell.index as u64);
    let clients = &split.client_datasets;
    match method {
        MethodId::Pfclus => {
            let pcfg = cfg.pfclus.to_core(norm);
            run_pfclus(clients, cfg.k, norm, &pcfg, None, tuning, method_seed)
        }
        MethodId::Kfed => run_kfed(clients, cfg.k, cfg.kfed.k_prime, norm, tuning, method_seed),
        MethodId::Mfc => run_mfc(clients, cfg.k, norm, cfg.mfc.to_core(), tuning, method_seed),
        MethodId::Centclus => run_centclus(clients, cfg.k, norm, tuning, method_seed),
    }
}

fn row_key(cfg: &ExperimentConfig, method: MethodId, cell: &Cell, seed: u64) -> RowKey {
    RowKey {
        method: method.id().to_string(),
        dataset: cfg.dataset.id(),
        split_mode: cell.mode.id().to_string(),
        z: cell.clients,
        h: cell.heterogeneity,
        k: cfg.k,
        l_repr: l_repr(cfg.l),
        seed,
    }
}

/// Runs every configured method for one (cell, seed) on a shared split.
fn run_job(
    cfg: &ExperimentConfig,
    data: &BaseData,
    cell: &Cell,
    seed: u64,
    timings: bool,
) -> Vec<JobRecord> {
    let prepared = data
        .for_seed(seed)
        .and_then(|d| build_split(cfg, cell, &d, seed).map(|s| (d, s)));
    let (dataset, split) = match prepared {
        Ok(pair) => pair,
        Err(err) => {
            return cfg
                .methods
                .iter()
                .map(|&m| {
                    JobRecord::Error(ErrorRow {
                        key: row_key(cfg, m, cell, seed),
                        message: err.to_string(),
                    })
                })
                .collect();
        }
    };
    let checksum = split_checksum(&dataset, &split);
    cfg.methods
        .iter()
        .map(|&method| {
            let started = Instant::now();
            match run_method(cfg, method, &split, cell, seed) {
                Ok(outcome) => JobRecord::Row(MetricsRow {
                    key: row_key(cfg, method, cell, seed),
                    split_checksum: checksum.clone(),
                    mu: outcome.metrics.mu,
                    sigma: outcome.metrics.sigma,
                    max: outcome.metrics.max,
                    per_client_mu: outcome.metrics.per_client_mu,
                    runtime_ms: timings.then(|| started.elapsed().as_secs_f64() * 1e3),
                }),
                Err(err) => JobRecord::Error(ErrorRow {
                    key: row_key(cfg, method, cell, seed),
                    message: err.to_string(),
                }),
            }
        })
        .collect()
}

struct SinkFiles {
    results: csv::Writer<BufWriter<File>>,
    errors: csv::Writer<BufWriter<File>>,
}

impl SinkFiles {
    fn create(output: &Path) -> Result<Self> {
        if let Some(parent) = output.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)?;
            }
        }
        let results_file = OpenOptions::new()
            .create(true)
            .write(true)
            .truncate(true)
            .open(output)
            .with_context(|| format!("creating {}", output.display()))?;
        let errors_file = OpenOptions::new()
            .create(true)
            .write(true)
            .truncate(true)
            .open(errors_path(output))?;
        let mut sink = Self {
            results: csv::Writer::from_writer(BufWriter::new(results_file)),
            errors: csv::Writer::from_writer(BufWriter::new(errors_file)),
        };
        sink.results.write_record(RESULTS_HEADER)?;
        sink.errors.write_record(ERRORS_HEADER)?;
        sink.flush()?;
        Ok(sink)
    }

    fn append(&mut self, records: &[JobRecord]) -> Result<()> {
        for record in records {
            match record {
                JobRecord::Row(row) => {
                    self.results.write_record(row.to_record())?;
                }
                JobRecord::Error(err) => {
                    let k = &err.key;
                    self.errors.write_record([
                        k.method.as_str(),
                        k.dataset.as_str(),
                        k.split_mode.as_str(),
                        &k.z.to_string(),
                        &k.h.to_string(),
                        &k.k.to_string(),
                        &k.l_repr,
                        &k.seed.to_string(),
                        &err.message,
                    ])?;
                }
            }
        }
        self.flush()
    }

    fn flush(&mut self) -> Result<()> {
        self.results.flush()?;
        self.errors.flush()?;
        Ok(())
    }
}

/// Reads back whatever records a previous (possibly killed) run left,
/// tolerating a torn final line.
fn read_existing(output: &Path) -> (Vec<MetricsRow>, Vec<ErrorRow>) {
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    if let Ok(mut reader) = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(output)
    {
        for record in reader.records().flatten() {
            if let Ok(row) = MetricsRow::from_record(&record) {
                rows.push(row);
            }
        }
    }
    if let Ok(mut reader) = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(errors_path(output))
    {
        for record in reader.records().flatten() {
            if record.len() == ERRORS_HEADER.len() {
                let field = |i: usize| record.get(i).unwrap_or("").to_string();
                let parsed = (
                    field(3).parse::<usize>(),
                    field(4).parse::<usize>(),
                    field(5).parse::<usize>(),
                    field(7).parse::<u64>(),
                );
                if let (Ok(z), Ok(h), Ok(k), Ok(seed)) = parsed {
                    errors.push(ErrorRow {
                        key: RowKey {
                            method: field(0),
                            dataset: field(1),
                            split_mode: field(2),
                            z,
                            h,
                            k,
                            l_repr: field(6),
                            seed,
                        },
                        message: field(8),
                    });
                }
            }
        }
    }
    (rows, errors)
}

/// Executes the experiment grid. With `resume`, completed (cell, seed) jobs
/// found in the output files are reused verbatim and only the remainder is
/// computed; the final files are byte-identical to an uninterrupted run.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunSummary> {
    let data = base_data(cfg)?;
    let cells = resolve_cells(cfg, &data)?;
    let jobs: Vec<(usize, u64)> = cells
        .iter()
        .flat_map(|c| cfg.seeds.iter().map(move |&s| (c.index, s)))
        .collect();

    // Records every job is expected to produce, in emit order.
    let expected: Vec<Vec<RowKey>> = jobs
        .iter()
        .map(|&(cell_idx, seed)| {
            cfg.methods
                .iter()
                .map(|&m| row_key(cfg, m, &cells[cell_idx], seed))
                .collect()
        })
        .collect();

    let mut reuse: Vec<Vec<JobRecord>> = Vec::new();
    if opts.resume && cfg.output.exists() {
        let (rows, errors) = read_existing(&cfg.output);
        let mut by_key: HashMap<RowKey, Vec<JobRecord>> = HashMap::new();
        for r in rows {
            by_key.entry(r.key.clone()).or_default().push(JobRecord::Row(r));
        }
        for e in errors {
            by_key
                .entry(e.key.clone())
                .or_default()
                .push(JobRecord::Error(e));
        }
        // longest prefix of jobs whose records are all present
        'jobs: for keys in &expected {
            let mut records = Vec::with_capacity(keys.len());
            for key in keys {
                match by_key.get_mut(key).and_then(Vec::pop) {
                    Some(record) => records.push(record),
                    None => break 'jobs,
                }
            }
            reuse.push(records);
        }
    }
    let jobs_skipped = reuse.len();

    let mut sink = SinkFiles::create(&cfg.output)?;
    let mut rows_written = 0usize;
    let mut errors_written = 0usize;
    let mut emit = |sink: &mut SinkFiles, records: &[JobRecord]| -> Result<()> {
        for r in records {
            match r {
                JobRecord::Row(_) => rows_written += 1,
                JobRecord::Error(_) => errors_written += 1,
            }
        }
        sink.append(records)
    };

    for records in &reuse {
        emit(&mut sink, records)?;
    }

    let remaining: Vec<usize> = (jobs_skipped..jobs.len()).collect();
    if opts.workers <= 1 || remaining.len() <= 1 {
        for &job_idx in &remaining {
            let (cell_idx, seed) = jobs[job_idx];
            let records = run_job(cfg, &data, &cells[cell_idx], seed, opts.timings);
            emit(&mut sink, &records)?;
        }
    } else {
        let cursor = AtomicUsize::new(0);
        let (tx, rx) = mpsc::channel::<(usize, Vec<JobRecord>)>();
        let n_workers = opts.workers.min(remaining.len());
        std::thread::scope(|scope| -> Result<()> {
            for _ in 0..n_workers {
                let tx = tx.clone();
                let cursor = &cursor;
                let remaining = &remaining;
                let jobs = &jobs;
                let cells = &cells;
                let data = &data;
                scope.spawn(move || loop {
                    let i = cursor.fetch_add(1, Ordering::Relaxed);
                    if i >= remaining.len() {
                        break;
                    }
                    let job_idx = remaining[i];
                    let (cell_idx, seed) = jobs[job_idx];
                    let records = run_job(cfg, data, &cells[cell_idx], seed, opts.timings);
                    if tx.send((i, records)).is_err() {
                        break;
                    }
                });
            }
            drop(tx);
            // reorder buffer: append in job order as the prefix completes
            let mut pending: HashMap<usize, Vec<JobRecord>> = HashMap::new();
            let mut next = 0usize;
            for (i, records) in rx {
                pending.insert(i, records);
                while let Some(records) = pending.remove(&next) {
                    emit(&mut sink, &records)?;
                    next += 1;
                }
            }
            Ok(())
        })?;
    }

    sink.flush()?;
    Ok(RunSummary {
        rows_written,
        errors: errors_written,
        jobs_skipped,
    })
}

/// Runs the partitioner invariant suite for every cell and seed without
/// executing any clustering method. Returns human-readable check lines and
/// whether everything passed.
pub fn validate_experiment(cfg: &ExperimentConfig) -> Result<(Vec<String>, bool)> {
    let data = base_data(cfg)?;
    let cells = resolve_cells(cfg, &data)?;
    let mut lines = Vec::new();
    let mut all_ok = true;
    let mut check = |ok: bool, line: String, lines: &mut Vec<String>| {
        lines.push(format!("{} {line}", if ok { "ok  " } else { "FAIL" }));
        all_ok &= ok;
    };

    for cell in &cells {
        for &seed in &cfg.seeds {
            let label = format!(
                "cell {} ({} Z={} H={}) seed {seed}",
                cell.index,
                cell.mode.id(),
                cell.clients,
                cell.heterogeneity
            );
            let dataset = data.for_seed(seed)?;
            let split = match build_split(cfg, cell, &dataset, seed) {
                Ok(s) => s,
                Err(err) => {
                    check(false, format!("{label}: split failed: {err}"), &mut lines);
                    continue;
                }
            };

            let mut all: Vec<usize> = split
                .provenance
                .client_point_indices
                .iter()
                .flatten()
                .copied()
                .collect();
            all.sort_unstable();
            let conserved = all == (0..dataset.len()).collect::<Vec<_>>();
            check(conserved, format!("{label}: conservation"), &mut lines);

            let cardinality_ok = split
                .provenance
                .client_distributions
                .iter()
                .all(|d| d.len() <= cell.heterogeneity);
            check(
                cardinality_ok,
                format!("{label}: label cardinality <= H"),
                &mut lines,
            );

            let min_size = split
                .client_datasets
                .iter()
                .map(Dataset::len)
                .min()
                .unwrap_or(0);
            check(
                min_size >= cfg.k,
                format!("{label}: min client size {min_size} >= k"),
                &mut lines,
            );

            if cell.mode == SplitModeConfig::Balanced {
                let sizes: Vec<usize> =
                    split.client_datasets.iter().map(Dataset::len).collect();
                let spread = sizes.iter().max().unwrap() - sizes.iter().min().unwrap();
                check(
                    spread <= cell.heterogeneity,
                    format!("{label}: balanced size spread {spread} <= H"),
                    &mut lines,
                );
            }

            if cell.mode != SplitModeConfig::Import {
                let again = build_split(cfg, cell, &dataset, seed)?;
                check(again == split, format!("{label}: deterministic"), &mut lines);
            }
        }
    }
    Ok((lines, all_ok))
}
