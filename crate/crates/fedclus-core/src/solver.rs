//! Centralized (k,ℓ)-clustering: Lloyd's k-means (ℓ=2) and alternating
//! k-medoids (ℓ=1), both seeded by k-means++ D²-weighting.

use alloc::vec;
use alloc::vec::Vec;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng as _;

use crate::dist::{distance_pow_unchecked, distance_unchecked, nearest};
use crate::error::{Error, Result};
use crate::seeding::{rng_from_seed, Rng};
use crate::types::{Assignment, CenterKind, CenterSet, DataPoint, Dataset, NormOrder};

/// Parameters of a single deterministic solver invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Number of centers. Must not exceed the number of distinct points.
    pub k: usize,
    pub norm: NormOrder,
    pub max_iters: usize,
    /// Convergence threshold on the maximum per-iteration center movement.
    pub tol: f64,
    pub rng_seed: u64,
}

impl SolverConfig {
    pub fn new(k: usize, norm: NormOrder, rng_seed: u64) -> Self {
        Self {
            k,
            norm,
            max_iters: 100,
            tol: 1e-4,
            rng_seed,
        }
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }
}

/// Final centers and assignment plus the per-iteration objective trace.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub centers: CenterSet,
    pub assignment: Assignment,
    pub iterations: usize,
    /// Objective cost after each full (assign + update) iteration.
    pub cost_trace: Vec<f64>,
}

fn validate_input(data: &Dataset, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidConfig(alloc::string::String::from(
            "k must be at least 1",
        )));
    }
    if data.len() < k {
        return Err(Error::InsufficientPoints {
            needed: k,
            got: data.len(),
        });
    }
    Ok(())
}

/// k-means++ seeding: first center uniform, every next center sampled with
/// probability proportional to the squared distance to its nearest already
/// chosen center. Deterministic given the RNG state; never picks the same
/// location twice (duplicates carry zero weight).
pub fn kmeans_pp_init(
    data: &Dataset,
    k: usize,
    norm: NormOrder,
    rng: &mut Rng,
) -> Result<Vec<DataPoint>> {
    validate_input(data, k)?;
    let points = data.points();
    let first = rng.random_range(0..points.len());
    let mut centers: Vec<DataPoint> = vec![points[first].clone()];

    // min squared distance to the chosen set, updated incrementally
    let mut weights: Vec<f64> = points
        .iter()
        .map(|p| {
            let d = distance_unchecked(p.coords(), centers[0].coords(), norm);
            d * d
        })
        .collect();

    while centers.len() < k {
        let index = WeightedIndex::new(weights.iter().copied())
            .map_err(|_| Error::InsufficientDistinctPoints { needed: k })?
            .sample(rng);
        centers.push(points[index].clone());
        let chosen = &points[index];
        for (w, p) in weights.iter_mut().zip(points) {
            let d = distance_unchecked(p.coords(), chosen.coords(), norm);
            *w = w.min(d * d);
        }
    }
    Ok(centers)
}

fn objective(data: &Dataset, centers: &[DataPoint], assignment: &[usize], norm: NormOrder) -> f64 {
    data.points()
        .iter()
        .zip(assignment)
        .map(|(p, &j)| distance_pow_unchecked(p.coords(), centers[j].coords(), norm))
        .sum()
}

fn assign_indices(data: &Dataset, centers: &[DataPoint], norm: NormOrder) -> Vec<usize> {
    data.points()
        .iter()
        .map(|p| nearest(p.coords(), centers, norm).0)
        .collect()
}

/// Relocates centers that lost every point to the data point farthest from
/// its nearest surviving center, processed in ascending center index.
fn repair_empty(
    data: &Dataset,
    new_centers: &mut [Option<DataPoint>],
    norm: NormOrder,
) -> Result<()> {
    for j in 0..new_centers.len() {
        if new_centers[j].is_some() {
            continue;
        }
        let mut best_idx = None;
        let mut best_dist = f64::NEG_INFINITY;
        for (i, p) in data.points().iter().enumerate() {
            let mut nearest_d = f64::INFINITY;
            for c in new_centers.iter().flatten() {
                nearest_d = nearest_d.min(distance_unchecked(p.coords(), c.coords(), norm));
            }
            if nearest_d > best_dist {
                best_dist = nearest_d;
                best_idx = Some(i);
            }
        }
        let idx = best_idx.ok_or(Error::EmptyDataset)?;
        new_centers[j] = Some(data.points()[idx].clone());
    }
    Ok(())
}

fn finish(
    data: &Dataset,
    centers: Vec<DataPoint>,
    iterations: usize,
    cost_trace: Vec<f64>,
    norm: NormOrder,
) -> Result<SolveResult> {
    let assignment = Assignment::new(assign_indices(data, &centers, norm));
    Ok(SolveResult {
        centers: CenterSet::new(CenterKind::Local, centers)?,
        assignment,
        iterations,
        cost_trace,
    })
}

/// Seeded k-means++ restarts per solve; the lowest-cost run wins. Lifts the
/// alternating local searches out of bad basins on small instances while
/// staying deterministic in `cfg.rng_seed`.
const RESTARTS: u64 = 10;

fn best_of_restarts(
    data: &Dataset,
    cfg: &SolverConfig,
    run: impl Fn(&Dataset, &SolverConfig) -> Result<SolveResult>,
) -> Result<SolveResult> {
    let mut best: Option<SolveResult> = None;
    for r in 0..RESTARTS {
        let seeded = SolverConfig {
            rng_seed: crate::seeding::derive_seed(cfg.rng_seed, r),
            ..cfg.clone()
        };
        let candidate = run(data, &seeded)?;
        let cost = candidate.cost_trace.last().copied().unwrap_or(f64::INFINITY);
        let better = best
            .as_ref()
            .and_then(|b| b.cost_trace.last().copied())
            .is_none_or(|b| cost < b);
        if better {
            best = Some(candidate);
        }
    }
    best.ok_or(Error::EmptyDataset)
}

/// Lloyd's k-means (ℓ=2): alternate nearest assignment and centroid update
/// until the largest center movement drops below `tol` or `max_iters` is
/// reached. The objective cost is non-increasing across iterations; the
/// returned run is the best of a fixed set of seeded restarts.
pub fn lloyd_kmeans(data: &Dataset, cfg: &SolverConfig) -> Result<SolveResult> {
    best_of_restarts(data, cfg, lloyd_kmeans_single)
}

fn lloyd_kmeans_single(data: &Dataset, cfg: &SolverConfig) -> Result<SolveResult> {
    if !cfg.norm.is_l2() {
        return Err(Error::UnsupportedNorm {
            norm: cfg.norm.value(),
            supported: "2",
        });
    }
    validate_input(data, cfg.k)?;
    let norm = cfg.norm;
    let dim = data.dim().ok_or(Error::EmptyDataset)?;
    let mut rng = rng_from_seed(cfg.rng_seed);
    let mut centers = kmeans_pp_init(data, cfg.k, norm, &mut rng)?;
    let mut assignment = assign_indices(data, &centers, norm);
    let mut trace = Vec::new();
    let mut iterations = 0;

    loop {
        iterations += 1;
        // centroid update
        let mut sums = vec![vec![0.0f64; dim]; cfg.k];
        let mut counts = vec![0usize; cfg.k];
        for (p, &j) in data.points().iter().zip(&assignment) {
            counts[j] += 1;
            for (s, c) in sums[j].iter_mut().zip(p.coords()) {
                *s += c;
            }
        }
        let mut new_centers: Vec<Option<DataPoint>> = sums
            .into_iter()
            .zip(&counts)
            .map(|(sum, &n)| {
                (n > 0).then(|| {
                    DataPoint::from_trusted(sum.into_iter().map(|s| s / n as f64).collect())
                })
            })
            .collect();
        repair_empty(data, &mut new_centers, norm)?;
        let new_centers: Vec<DataPoint> = new_centers.into_iter().flatten().collect();

        let movement = centers
            .iter()
            .zip(&new_centers)
            .map(|(a, b)| distance_unchecked(a.coords(), b.coords(), norm))
            .fold(0.0f64, f64::max);
        centers = new_centers;
        assignment = assign_indices(data, &centers, norm);
        trace.push(objective(data, &centers, &assignment, norm));

        if movement < cfg.tol || iterations >= cfg.max_iters {
            break;
        }
    }
    finish(data, centers, iterations, trace, norm)
}

/// Alternating (Voronoi-iteration) k-medoids (ℓ=1): the update step sets
/// each center to the cluster member minimizing the sum of ℓ=1 distances to
/// the other members. Every returned center is a member of the input; the
/// returned run is the best of a fixed set of seeded restarts.
pub fn kmedoids(data: &Dataset, cfg: &SolverConfig) -> Result<SolveResult> {
    best_of_restarts(data, cfg, kmedoids_single)
}

fn kmedoids_single(data: &Dataset, cfg: &SolverConfig) -> Result<SolveResult> {
    if !cfg.norm.is_l1() {
        return Err(Error::UnsupportedNorm {
            norm: cfg.norm.value(),
            supported: "1",
        });
    }
    validate_input(data, cfg.k)?;
    let norm = cfg.norm;
    let mut rng = rng_from_seed(cfg.rng_seed);
    let mut centers = kmeans_pp_init(data, cfg.k, norm, &mut rng)?;
    let mut assignment = assign_indices(data, &centers, norm);
    let mut trace = Vec::new();
    let mut iterations = 0;

    loop {
        iterations += 1;
        let mut clusters: Vec<Vec<usize>> = vec![Vec::new(); cfg.k];
        for (i, &j) in assignment.iter().enumerate() {
            clusters[j].push(i);
        }
        let mut new_centers: Vec<Option<DataPoint>> = clusters
            .iter()
            .map(|members| {
                if members.is_empty() {
                    return None;
                }
                // medoid: member with minimal total distance, ties to the
                // lowest point index (members are in ascending order)
                let mut best = members[0];
                let mut best_cost = f64::INFINITY;
                for &m in members {
                    let cost: f64 = members
                        .iter()
                        .map(|&o| {
                            distance_unchecked(
                                data.points()[m].coords(),
                                data.points()[o].coords(),
                                norm,
                            )
                        })
                        .sum();
                    if cost < best_cost {
                        best_cost = cost;
                        best = m;
                    }
                }
                Some(data.points()[best].clone())
            })
            .collect();
        repair_empty(data, &mut new_centers, norm)?;
        let new_centers: Vec<DataPoint> = new_centers.into_iter().flatten().collect();

        let movement = centers
            .iter()
            .zip(&new_centers)
            .map(|(a, b)| distance_unchecked(a.coords(), b.coords(), norm))
            .fold(0.0f64, f64::max);
        centers = new_centers;
        assignment = assign_indices(data, &centers, norm);
        trace.push(objective(data, &centers, &assignment, norm));

        if movement < cfg.tol || iterations >= cfg.max_iters {
            break;
        }
    }
    finish(data, centers, iterations, trace, norm)
}

/// Dispatches to the (k,ℓ)-solver matching `cfg.norm`. Only ℓ ∈ {1, 2} are
/// backed by solvers; other norms are supported for distances and costs but
/// not for clustering.
pub fn solve(data: &Dataset, cfg: &SolverConfig) -> Result<SolveResult> {
    if cfg.norm.is_l2() {
        lloyd_kmeans(data, cfg)
    } else if cfg.norm.is_l1() {
        kmedoids(data, cfg)
    } else {
        Err(Error::UnsupportedNorm {
            norm: cfg.norm.value(),
            supported: "1, 2",
        })
    }
}
