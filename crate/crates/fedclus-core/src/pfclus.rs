//! The p-FClus protocol: local initialization, one-shot server aggregation,
//! and SGD-based per-client personalization of the global centers.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::comm::{ClientResult, Direction, MessageLog, MethodOutcome};
use crate::dist::{assign_nearest, distance_unchecked, nearest};
use crate::error::{Error, Result};
use crate::metrics::compute_metrics;
use crate::seeding::{derive_seed, derive_seed2, rng_from_seed};
use crate::solver::{solve, SolverConfig};
use crate::types::{Assignment, CenterKind, CenterSet, DataPoint, Dataset, NormOrder};

/// Iteration caps every solver call inside a protocol run uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverTuning {
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for SolverTuning {
    fn default() -> Self {
        Self {
            max_iters: 100,
            tol: 1e-4,
        }
    }
}

impl SolverTuning {
    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn config(self, k: usize, norm: NormOrder, rng_seed: u64) -> SolverConfig {
        SolverConfig {
            k,
            norm,
            max_iters: self.max_iters,
            tol: self.tol,
            rng_seed,
        }
    }
}

/// How the ℓ=1 clustering-cost term differentiates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum L1GradientMode {
    /// The printed update rule: the constant 1/2 broadcast to every
    /// coordinate, with no sign term.
    #[default]
    Literal,
    /// A true subgradient of ½‖c − x‖₁: ½·sign(c_d − x_d) per coordinate.
    Subgradient,
}

/// Client-side fine-tuning parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PersonalizationConfig {
    /// Fine-tuning level λ: weight of the pull toward the nearest local
    /// center. The per-update step size η is not configured here; it is the
    /// reciprocal of the updated center's visit count.
    pub lambda: f64,
    /// Tuning passes t over the local data.
    pub passes: usize,
    pub norm: NormOrder,
    /// Early stop when the largest center movement within a full pass drops
    /// below this threshold.
    pub tol: f64,
    /// For ℓ=1, replace each final center with its nearest local data point.
    pub medoid_snap: bool,
    pub l1_gradient: L1GradientMode,
    /// Seed for per-pass shuffling of the point order; `None` keeps the
    /// fixed dataset order.
    pub shuffle_seed: Option<u64>,
}

impl PersonalizationConfig {
    pub fn new(norm: NormOrder) -> Self {
        Self {
            lambda: 0.01,
            passes: 10,
            norm,
            tol: 1e-4,
            medoid_snap: true,
            l1_gradient: L1GradientMode::default(),
            shuffle_seed: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return Err(Error::InvalidConfig(String::from("lambda must be >= 0")));
        }
        if self.passes == 0 {
            return Err(Error::InvalidConfig(String::from("passes must be >= 1")));
        }
        if !(self.norm.is_l1() || self.norm.is_l2()) {
            return Err(Error::UnsupportedNorm {
                norm: self.norm.value(),
                supported: "1, 2",
            });
        }
        Ok(())
    }
}

/// Per-client protocol state while personalizing.
#[derive(Debug, Clone)]
pub struct ClientState {
    /// Centers from the client's own initialization, fixed during tuning.
    pub local_centers: CenterSet,
    /// The client's copy of the global centers, mutated by the SGD updates.
    pub personalized: CenterSet,
    /// Visit counters, one per personalized center. Never reset: they only
    /// grow across passes, so η = 1/count decays over the whole run.
    pub counts: Vec<u64>,
    /// Assignment of local points to personalized centers.
    pub assignment: Assignment,
}

impl ClientState {
    pub fn new(local_centers: CenterSet, global: &CenterSet) -> Result<Self> {
        if local_centers.len() != global.len() {
            return Err(Error::InvalidConfig(String::from(
                "local and global center sets must have the same k",
            )));
        }
        if local_centers.dim() != global.dim() {
            return Err(Error::DimensionMismatch {
                expected: local_centers.dim(),
                got: global.dim(),
            });
        }
        let k = global.len();
        Ok(Self {
            local_centers,
            personalized: global.retagged(CenterKind::Personalized),
            counts: vec![0; k],
            assignment: Assignment::new(Vec::new()),
        })
    }
}

/// What a personalization run did, beyond the new state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PersonalizeReport {
    pub passes_run: usize,
    pub early_stopped: bool,
}

/// Local (k,ℓ)-clustering of a client's own data: Lloyd's k-means for ℓ=2,
/// k-medoids for ℓ=1.
pub fn client_initialization(
    data: &Dataset,
    k: usize,
    norm: NormOrder,
    rng_seed: u64,
    tuning: SolverTuning,
) -> Result<CenterSet> {
    let res = solve(data, &tuning.config(k, norm, rng_seed))?;
    Ok(res.centers)
}

/// Pools the Z local center sets (duplicates retained) and runs
/// (k,ℓ)-clustering on the pool to produce the k global centers.
pub fn server_aggregate(
    local_sets: &[CenterSet],
    k: usize,
    norm: NormOrder,
    rng_seed: u64,
    tuning: SolverTuning,
) -> Result<CenterSet> {
    if local_sets.is_empty() {
        return Err(Error::EmptyCenterSet);
    }
    let mut pooled: Vec<DataPoint> = Vec::new();
    for set in local_sets {
        pooled.extend(set.centers().iter().cloned());
    }
    let mut distinct: Vec<&DataPoint> = Vec::new();
    for p in &pooled {
        if !distinct.contains(&p) {
            distinct.push(p);
        }
    }
    if distinct.len() < k {
        return Err(Error::DegeneratePool { needed: k });
    }
    let pool = Dataset::new(pooled)?;
    let res = solve(&pool, &tuning.config(k, norm, rng_seed))?;
    Ok(res.centers.retagged(CenterKind::Global))
}

/// Gradient of the personalization objective with respect to the global
/// center: for ℓ=2, (c^g − x) + 2λ(c^g − c^(z)); for ℓ=1 the scalar 1/2
/// (broadcast per coordinate, or signed in subgradient mode) plus the same
/// regularizer term.
pub fn personalization_gradient(
    x: &DataPoint,
    c_g: &DataPoint,
    c_z: &DataPoint,
    lambda: f64,
    norm: NormOrder,
    l1_mode: L1GradientMode,
) -> Result<Vec<f64>> {
    if x.dim() != c_g.dim() || x.dim() != c_z.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            got: if x.dim() != c_g.dim() { c_g.dim() } else { c_z.dim() },
        });
    }
    let n = x.dim();
    let mut grad = Vec::with_capacity(n);
    if norm.is_l2() {
        for d in 0..n {
            let cg = c_g.coords()[d];
            grad.push((cg - x.coords()[d]) + 2.0 * lambda * (cg - c_z.coords()[d]));
        }
    } else if norm.is_l1() {
        for d in 0..n {
            let cg = c_g.coords()[d];
            let cost_term = match l1_mode {
                L1GradientMode::Literal => 0.5,
                L1GradientMode::Subgradient => {
                    let diff = cg - x.coords()[d];
                    if diff > 0.0 {
                        0.5
                    } else if diff < 0.0 {
                        -0.5
                    } else {
                        0.0
                    }
                }
            };
            grad.push(cost_term + 2.0 * lambda * (cg - c_z.coords()[d]));
        }
    } else {
        return Err(Error::UnsupportedNorm {
            norm: norm.value(),
            supported: "1, 2",
        });
    }
    Ok(grad)
}

/// Fine-tunes a client's copy of the global centers against its local data.
///
/// Each pass walks the points in a deterministic order; for each point the
/// nearest local and nearest personalized centers are found, the visited
/// center's counter is incremented, and the center takes an SGD step with
/// η = 1/count. Stops early when a full pass moves no center by `cfg.tol`
/// or more. For ℓ=1 with `medoid_snap`, final centers are replaced by their
/// nearest local data points. The reported assignment is a clean nearest
/// assignment against the final centers.
pub fn personalize_client(
    state: &mut ClientState,
    data: &Dataset,
    cfg: &PersonalizationConfig,
) -> Result<PersonalizeReport> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if data.dim() != Some(state.personalized.dim()) {
        return Err(Error::DimensionMismatch {
            expected: state.personalized.dim(),
            got: data.dim().unwrap_or(0),
        });
    }
    let k = state.personalized.len();
    let n = data.len();
    let mut recorded = vec![0usize; n];
    let mut order: Vec<usize> = (0..n).collect();
    let mut passes_run = 0;
    let mut early_stopped = false;

    for pass in 0..cfg.passes {
        if let Some(seed) = cfg.shuffle_seed {
            // each pass draws its permutation from its own stream
            order = (0..n).collect();
            let mut rng = rng_from_seed(derive_seed(seed, pass as u64));
            order.shuffle(&mut rng);
        }
        let pass_start: Vec<DataPoint> = state.personalized.centers().to_vec();
        for &i in &order {
            let x = &data.points()[i];
            let (zi, _) = nearest(x.coords(), state.local_centers.centers(), cfg.norm);
            let (gi, _) = nearest(x.coords(), state.personalized.centers(), cfg.norm);
            state.counts[gi] += 1;
            let eta = 1.0 / state.counts[gi] as f64;
            let grad = personalization_gradient(
                x,
                &state.personalized.centers()[gi],
                &state.local_centers.centers()[zi],
                cfg.lambda,
                cfg.norm,
                cfg.l1_gradient,
            )?;
            let moved: Vec<f64> = state.personalized.centers()[gi]
                .coords()
                .iter()
                .zip(&grad)
                .map(|(c, g)| c - eta * g)
                .collect();
            state.personalized.replace_center(gi, DataPoint::from_trusted(moved));
            recorded[i] = gi;
        }
        passes_run = pass + 1;
        let movement = pass_start
            .iter()
            .zip(state.personalized.centers())
            .map(|(a, b)| distance_unchecked(a.coords(), b.coords(), cfg.norm))
            .fold(0.0f64, f64::max);
        if movement < cfg.tol {
            early_stopped = passes_run < cfg.passes;
            break;
        }
    }

    if cfg.norm.is_l1() && cfg.medoid_snap {
        for j in 0..k {
            let (pi, _) = nearest(
                state.personalized.centers()[j].coords(),
                data.points(),
                cfg.norm,
            );
            state.personalized.replace_center(j, data.points()[pi].clone());
        }
    }

    state.assignment = assign_nearest(data, &state.personalized, cfg.norm)?;
    Ok(PersonalizeReport {
        passes_run,
        early_stopped,
    })
}

/// Runs the whole protocol: initialization on every client, one server
/// aggregation, personalization on every client — exactly one round of
/// client→server and server→client communication.
pub fn run_pfclus(
    clients: &[Dataset],
    k: usize,
    norm: NormOrder,
    cfg: &PersonalizationConfig,
    lambda_overrides: Option<&[f64]>,
    tuning: SolverTuning,
    rng_seed: u64,
) -> Result<MethodOutcome> {
    cfg.validate()?;
    if clients.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if let Some(lambdas) = lambda_overrides {
        if lambdas.len() != clients.len() {
            return Err(Error::InvalidConfig(String::from(
                "lambda overrides must have one entry per client",
            )));
        }
    }

    const PHASE_INIT: u64 = 0;
    const PHASE_SERVER: u64 = 1;
    const PHASE_SHUFFLE: u64 = 2;

    let mut messages = MessageLog::new();

    // Phase 1: every client solves locally and uploads its k centers.
    let mut local_sets = Vec::with_capacity(clients.len());
    for (z, data) in clients.iter().enumerate() {
        let seed = derive_seed2(rng_seed, PHASE_INIT, z as u64);
        let centers = client_initialization(data, k, norm, seed, tuning)?;
        messages.record(0, z, Direction::Upload, centers.len());
        local_sets.push(centers);
    }

    // Phase 2: one server aggregation, then the global set goes back down.
    let server_seed = derive_seed2(rng_seed, PHASE_SERVER, 0);
    let global = server_aggregate(&local_sets, k, norm, server_seed, tuning)?;
    for z in 0..clients.len() {
        messages.record(0, z, Direction::Download, global.len());
    }

    // Phase 3: per-client fine-tuning; no further communication.
    let mut per_client = Vec::with_capacity(clients.len());
    for (z, (data, local)) in clients.iter().zip(local_sets).enumerate() {
        let mut client_cfg = cfg.clone();
        if let Some(lambdas) = lambda_overrides {
            client_cfg.lambda = lambdas[z];
        }
        if let Some(base) = cfg.shuffle_seed {
            client_cfg.shuffle_seed = Some(derive_seed2(base, PHASE_SHUFFLE, z as u64));
        }
        let mut state = ClientState::new(local, &global)?;
        personalize_client(&mut state, data, &client_cfg)?;
        per_client.push(ClientResult {
            centers: state.personalized,
            assignment: state.assignment,
        });
    }

    let triples: Vec<_> = clients
        .iter()
        .zip(&per_client)
        .map(|(d, r)| (d, &r.centers, &r.assignment))
        .collect();
    let metrics = compute_metrics(&triples, norm)?;

    Ok(MethodOutcome {
        per_client,
        metrics,
        messages,
        rounds: 0,
    })
}
