//! Experiment configuration: TOML schema, validation with field paths, and
//! conversion into core types.

use std::fmt;
use std::path::{Path, PathBuf};

use fedclus_core::{
    L1GradientMode, MfcConfig, NormOrder, PersonalizationConfig, SolverTuning, SplitMode, SynKind,
};
use serde::Deserialize;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {source}")]
    Parse {
        path: String,
        source: Box<toml::de::Error>,
    },
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodId {
    Pfclus,
    Kfed,
    Mfc,
    Centclus,
}

impl MethodId {
    pub fn id(self) -> &'static str {
        match self {
            MethodId::Pfclus => "pfclus",
            MethodId::Kfed => "kfed",
            MethodId::Mfc => "mfc",
            MethodId::Centclus => "centclus",
        }
    }
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DatasetConfig {
    Synthetic {
        /// One of NO, LO, O.
        variant: String,
        #[serde(default = "default_clusters")]
        clusters: usize,
        per_cluster: usize,
        #[serde(default = "default_dim")]
        dim: usize,
    },
    Csv {
        path: PathBuf,
        features: Vec<String>,
        #[serde(default)]
        label: Option<String>,
        #[serde(default)]
        standardize: bool,
    },
}

fn default_clusters() -> usize {
    10
}

fn default_dim() -> usize {
    2
}

impl DatasetConfig {
    pub fn id(&self) -> String {
        match self {
            DatasetConfig::Synthetic { variant, .. } => format!("Syn-{variant}"),
            DatasetConfig::Csv { path, .. } => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "csv".to_string()),
        }
    }

    pub fn syn_kind(&self) -> Option<SynKind> {
        match self {
            DatasetConfig::Synthetic { variant, .. } => parse_syn_kind(variant),
            DatasetConfig::Csv { .. } => None,
        }
    }
}

pub fn parse_syn_kind(variant: &str) -> Option<SynKind> {
    match variant.to_ascii_uppercase().as_str() {
        "NO" => Some(SynKind::NoOverlap),
        "LO" => Some(SynKind::LittleOverlap),
        "O" => Some(SynKind::Overlap),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitModeConfig {
    Balanced,
    Unequal,
    Import,
}

impl SplitModeConfig {
    pub fn id(self) -> &'static str {
        match self {
            SplitModeConfig::Balanced => "balanced",
            SplitModeConfig::Unequal => "unequal",
            SplitModeConfig::Import => "import",
        }
    }

    pub fn core_mode(self) -> Option<SplitMode> {
        match self {
            SplitModeConfig::Balanced => Some(SplitMode::Balanced),
            SplitModeConfig::Unequal => Some(SplitMode::Unequal),
            SplitModeConfig::Import => None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    pub mode: SplitModeConfig,
    #[serde(default)]
    pub clients: Option<usize>,
    /// Heterogeneity levels; each becomes one grid cell.
    #[serde(default)]
    pub heterogeneity: Vec<usize>,
    #[serde(default)]
    pub skew: Option<f64>,
    #[serde(default)]
    pub min_points: Option<usize>,
    /// Sidecar path for `mode = "import"`.
    #[serde(default)]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PfclusToml {
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_passes")]
    pub passes: usize,
    #[serde(default = "default_pers_tol")]
    pub tol: f64,
    #[serde(default = "default_true")]
    pub medoid_snap: bool,
    /// "literal" or "subgradient".
    #[serde(default = "default_l1_gradient")]
    pub l1_gradient: String,
    #[serde(default)]
    pub shuffle: bool,
    /// Seed for the per-pass shuffle stream when `shuffle` is on.
    #[serde(default)]
    pub shuffle_seed: u64,
}

fn default_lambda() -> f64 {
    0.01
}

fn default_passes() -> usize {
    10
}

fn default_pers_tol() -> f64 {
    1e-4
}

fn default_true() -> bool {
    true
}

fn default_l1_gradient() -> String {
    "literal".to_string()
}

impl Default for PfclusToml {
    fn default() -> Self {
        Self {
            lambda: default_lambda(),
            passes: default_passes(),
            tol: default_pers_tol(),
            medoid_snap: true,
            l1_gradient: default_l1_gradient(),
            shuffle: false,
            shuffle_seed: 0,
        }
    }
}

impl PfclusToml {
    pub fn to_core(&self, norm: NormOrder) -> PersonalizationConfig {
        let mut cfg = PersonalizationConfig::new(norm);
        cfg.lambda = self.lambda;
        cfg.passes = self.passes;
        cfg.tol = self.tol;
        cfg.medoid_snap = self.medoid_snap;
        cfg.l1_gradient = if self.l1_gradient == "subgradient" {
            L1GradientMode::Subgradient
        } else {
            L1GradientMode::Literal
        };
        cfg.shuffle_seed = self.shuffle.then_some(self.shuffle_seed);
        cfg
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KfedToml {
    /// Per-client local center count; defaults to k.
    #[serde(default)]
    pub k_prime: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MfcToml {
    #[serde(default = "default_max_rounds")]
    pub max_rounds: usize,
    #[serde(default = "default_round_tol")]
    pub tol: f64,
}

fn default_max_rounds() -> usize {
    20
}

fn default_round_tol() -> f64 {
    1e-4
}

impl Default for MfcToml {
    fn default() -> Self {
        Self {
            max_rounds: default_max_rounds(),
            tol: default_round_tol(),
        }
    }
}

impl MfcToml {
    pub fn to_core(&self) -> MfcConfig {
        MfcConfig {
            max_rounds: self.max_rounds,
            tol: self.tol,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverToml {
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_solver_tol")]
    pub tol: f64,
}

fn default_max_iters() -> usize {
    100
}

fn default_solver_tol() -> f64 {
    1e-4
}

impl Default for SolverToml {
    fn default() -> Self {
        Self {
            max_iters: default_max_iters(),
            tol: default_solver_tol(),
        }
    }
}

impl SolverToml {
    pub fn tuning(&self) -> SolverTuning {
        SolverTuning::default()
            .with_max_iters(self.max_iters)
            .with_tol(self.tol)
    }
}

fn default_l() -> f64 {
    2.0
}

fn default_seeds() -> Vec<u64> {
    vec![0, 300, 600, 900, 1200]
}

/// The whole experiment: dataset, split grid, methods and their knobs.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub output: PathBuf,
    pub k: usize,
    #[serde(default = "default_l")]
    pub l: f64,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    pub methods: Vec<MethodId>,
    #[serde(default)]
    pub workers: Option<usize>,
    pub dataset: DatasetConfig,
    #[serde(rename = "split", default)]
    pub splits: Vec<SplitConfig>,
    #[serde(default)]
    pub pfclus: PfclusToml,
    #[serde(default)]
    pub kfed: KfedToml,
    #[serde(default)]
    pub mfc: MfcToml,
    #[serde(default)]
    pub solver: SolverToml,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        let cfg: ExperimentConfig =
            toml::from_str(&text).map_err(|source| ConfigError::Parse {
                path: path.display().to_string(),
                source: Box::new(source),
            })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn norm(&self) -> NormOrder {
        NormOrder::new(self.l).expect("validated")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.k == 0 {
            return Err(invalid("k", "must be at least 1"));
        }
        if self.l != 1.0 && self.l != 2.0 {
            return Err(invalid(
                "l",
                "clustering solvers exist for l = 1 and l = 2 only",
            ));
        }
        if self.seeds.is_empty() {
            return Err(invalid("seeds", "need at least one seed"));
        }
        if self.methods.is_empty() {
            return Err(invalid("methods", "need at least one method"));
        }
        if self.l == 1.0 {
            for m in &self.methods {
                if matches!(m, MethodId::Kfed | MethodId::Mfc) {
                    return Err(invalid(
                        "methods",
                        format!("{m} supports the k-means objective (l = 2) only"),
                    ));
                }
            }
        }
        match &self.dataset {
            DatasetConfig::Synthetic {
                variant,
                clusters,
                per_cluster,
                dim,
            } => {
                if parse_syn_kind(variant).is_none() {
                    return Err(invalid(
                        "dataset.variant",
                        format!("'{variant}' is not one of NO, LO, O"),
                    ));
                }
                if *clusters == 0 {
                    return Err(invalid("dataset.clusters", "must be at least 1"));
                }
                if *per_cluster == 0 {
                    return Err(invalid("dataset.per_cluster", "must be at least 1"));
                }
                if *dim == 0 {
                    return Err(invalid("dataset.dim", "must be at least 1"));
                }
            }
            DatasetConfig::Csv { features, .. } => {
                if features.is_empty() {
                    return Err(invalid("dataset.features", "need at least one column"));
                }
            }
        }
        if self.splits.is_empty() {
            return Err(invalid("split", "need at least one [[split]] block"));
        }
        for (i, split) in self.splits.iter().enumerate() {
            let field = |name: &str| format!("split[{i}].{name}");
            match split.mode {
                SplitModeConfig::Import => {
                    if split.path.is_none() {
                        return Err(invalid(field("path"), "import mode needs a sidecar path"));
                    }
                }
                _ => {
                    match split.clients {
                        None | Some(0) => {
                            return Err(invalid(field("clients"), "must be at least 1"))
                        }
                        Some(_) => {}
                    }
                    if split.heterogeneity.is_empty() {
                        return Err(invalid(
                            field("heterogeneity"),
                            "need at least one level",
                        ));
                    }
                    if split.heterogeneity.contains(&0) {
                        return Err(invalid(field("heterogeneity"), "levels must be >= 1"));
                    }
                }
            }
            if let Some(skew) = split.skew {
                if !(skew.is_finite() && skew > 0.0) {
                    return Err(invalid(field("skew"), "must be a positive real"));
                }
            }
        }
        if !(self.pfclus.lambda.is_finite() && self.pfclus.lambda >= 0.0) {
            return Err(invalid("pfclus.lambda", "must be >= 0"));
        }
        if self.pfclus.passes == 0 {
            return Err(invalid("pfclus.passes", "must be at least 1"));
        }
        if self.pfclus.l1_gradient != "literal" && self.pfclus.l1_gradient != "subgradient" {
            return Err(invalid(
                "pfclus.l1_gradient",
                "must be 'literal' or 'subgradient'",
            ));
        }
        if let Some(0) = self.kfed.k_prime {
            return Err(invalid("kfed.k_prime", "must be at least 1"));
        }
        if self.mfc.max_rounds == 0 {
            return Err(invalid("mfc.max_rounds", "must be at least 1"));
        }
        if self.solver.max_iters == 0 {
            return Err(invalid("solver.max_iters", "must be at least 1"));
        }
        Ok(())
    }
}
