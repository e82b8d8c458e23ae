//! Reference methods the protocol is compared against: centralized
//! clustering on pooled data (CentClus), one-shot k-FED with a farthest-first
//! server heuristic, and multi-round MFC.

use alloc::vec::Vec;

use crate::comm::{ClientResult, Direction, MessageLog, MethodOutcome};
use crate::dist::{assign_nearest, distance_unchecked, nearest};
use crate::error::{Error, Result};
use crate::metrics::compute_metrics;
use crate::pfclus::SolverTuning;
use crate::seeding::derive_seed2;
use crate::solver::{lloyd_kmeans, solve};
use crate::types::{CenterKind, CenterSet, DataPoint, Dataset, NormOrder};

/// Round budget and convergence threshold for MFC.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MfcConfig {
    pub max_rounds: usize,
    /// Stop once the global center set moves (Hausdorff distance between
    /// consecutive rounds' sets) by less than this.
    pub tol: f64,
}

impl Default for MfcConfig {
    fn default() -> Self {
        Self {
            max_rounds: 20,
            tol: 1e-4,
        }
    }
}

fn pool_clients(clients: &[Dataset]) -> Result<Dataset> {
    let mut points = Vec::new();
    for c in clients {
        points.extend(c.points().iter().cloned());
    }
    if points.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Dataset::new(points)
}

fn per_client_outcome(
    clients: &[Dataset],
    centers: &CenterSet,
    norm: NormOrder,
    messages: MessageLog,
    rounds: usize,
) -> Result<MethodOutcome> {
    let mut per_client = Vec::with_capacity(clients.len());
    for data in clients {
        let assignment = assign_nearest(data, centers, norm)?;
        per_client.push(ClientResult {
            centers: centers.clone(),
            assignment,
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
        rounds,
    })
}

/// Centralized (k,ℓ)-clustering on the union of all client data: the
/// privacy-violating reference solution.
pub fn centclus(
    pooled: &Dataset,
    k: usize,
    norm: NormOrder,
    rng_seed: u64,
    tuning: SolverTuning,
) -> Result<CenterSet> {
    let res = solve(pooled, &tuning.config(k, norm, rng_seed))?;
    Ok(res.centers.retagged(CenterKind::Global))
}

/// CentClus over a federated split; metrics come from assigning each
/// client's points to the pooled-solution centers.
pub fn run_centclus(
    clients: &[Dataset],
    k: usize,
    norm: NormOrder,
    tuning: SolverTuning,
    rng_seed: u64,
) -> Result<MethodOutcome> {
    let pooled = pool_clients(clients)?;
    let centers = centclus(&pooled, k, norm, rng_seed, tuning)?;
    per_client_outcome(clients, &centers, norm, MessageLog::new(), 0)
}

/// Farthest-first traversal over `pool`: starts from the first element,
/// then repeatedly picks the element farthest from the already-picked set.
/// Returns indices into `pool`; ties go to the lowest index.
pub(crate) fn farthest_first(pool: &[DataPoint], k: usize, norm: NormOrder) -> Vec<usize> {
    let mut picked = Vec::with_capacity(k);
    picked.push(0);
    let mut min_dist: Vec<f64> = pool
        .iter()
        .map(|p| distance_unchecked(p.coords(), pool[0].coords(), norm))
        .collect();
    while picked.len() < k {
        let mut best = 0;
        let mut best_dist = f64::NEG_INFINITY;
        for (i, &d) in min_dist.iter().enumerate() {
            if d > best_dist {
                best_dist = d;
                best = i;
            }
        }
        picked.push(best);
        for (d, p) in min_dist.iter_mut().zip(pool) {
            *d = d.min(distance_unchecked(p.coords(), pool[best].coords(), norm));
        }
    }
    picked
}

/// One-shot k-FED: every client clusters locally into k' centers (Lloyd's
/// k-means stands in for the well-separated solver of the original method)
/// and uploads them; the server picks k global centers from the pool by
/// farthest-first traversal, anchored at the first uploaded center.
pub fn kfed(
    clients: &[Dataset],
    k: usize,
    k_prime: Option<usize>,
    norm: NormOrder,
    tuning: SolverTuning,
    rng_seed: u64,
) -> Result<(CenterSet, MessageLog)> {
    if !norm.is_l2() {
        return Err(Error::UnsupportedNorm {
            norm: norm.value(),
            supported: "2",
        });
    }
    if clients.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let k_prime = k_prime.unwrap_or(k);
    let mut messages = MessageLog::new();
    let mut pool: Vec<DataPoint> = Vec::with_capacity(clients.len() * k_prime);
    for (z, data) in clients.iter().enumerate() {
        let seed = derive_seed2(rng_seed, 0, z as u64);
        let res = lloyd_kmeans(data, &tuning.config(k_prime, norm, seed))?;
        messages.record(0, z, Direction::Upload, res.centers.len());
        pool.extend(res.centers.centers().iter().cloned());
    }
    if pool.len() < k {
        return Err(Error::InsufficientPoints {
            needed: k,
            got: pool.len(),
        });
    }
    let picked = farthest_first(&pool, k, norm);
    let centers: Vec<DataPoint> = picked.into_iter().map(|i| pool[i].clone()).collect();
    let global = CenterSet::new(CenterKind::Global, centers)?;
    for z in 0..clients.len() {
        messages.record(0, z, Direction::Download, global.len());
    }
    Ok((global, messages))
}

pub fn run_kfed(
    clients: &[Dataset],
    k: usize,
    k_prime: Option<usize>,
    norm: NormOrder,
    tuning: SolverTuning,
    rng_seed: u64,
) -> Result<MethodOutcome> {
    let (centers, messages) = kfed(clients, k, k_prime, norm, tuning, rng_seed)?;
    per_client_outcome(clients, &centers, norm, messages, 0)
}

/// Hausdorff distance between two center sets; the convergence measure for
/// MFC's unordered global sets.
fn set_movement(a: &[DataPoint], b: &[DataPoint], norm: NormOrder) -> f64 {
    let one_way = |from: &[DataPoint], to: &[DataPoint]| {
        from.iter()
            .map(|p| nearest(p.coords(), to, norm).1)
            .fold(0.0f64, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}

/// One MFC refinement round: each client re-assigns its points to the
/// current global centers, recomputes its cluster means, and uploads the
/// mean whose cluster carries the maximum local cost; the server re-runs
/// Lloyd's k-means on {previous global centers} ∪ {uploaded means}.
pub(crate) fn mfc_round(
    clients: &[Dataset],
    global: &CenterSet,
    k: usize,
    norm: NormOrder,
    tuning: SolverTuning,
    round_seed: u64,
) -> Result<(CenterSet, Vec<DataPoint>)> {
    let mut uploads = Vec::with_capacity(clients.len());
    for data in clients {
        let assignment = assign_nearest(data, global, norm)?;
        let dim = data.dim().ok_or(Error::EmptyDataset)?;
        let mut sums = alloc::vec![alloc::vec![0.0f64; dim]; global.len()];
        let mut counts = alloc::vec![0usize; global.len()];
        for (p, &j) in data.points().iter().zip(assignment.indices()) {
            counts[j] += 1;
            for (s, c) in sums[j].iter_mut().zip(p.coords()) {
                *s += c;
            }
        }
        let means: Vec<Option<DataPoint>> = sums
            .into_iter()
            .zip(&counts)
            .map(|(sum, &n)| {
                (n > 0)
                    .then(|| DataPoint::from_trusted(sum.into_iter().map(|s| s / n as f64).collect()))
            })
            .collect();
        // cost of each nonempty cluster against its recomputed mean
        let mut best: Option<(f64, usize)> = None;
        for (j, mean) in means.iter().enumerate() {
            let Some(mean) = mean else { continue };
            let cost: f64 = data
                .points()
                .iter()
                .zip(assignment.indices())
                .filter(|(_, &a)| a == j)
                .map(|(p, _)| {
                    let d = distance_unchecked(p.coords(), mean.coords(), norm);
                    d * d
                })
                .sum();
            if best.is_none_or(|(c, _)| cost > c) {
                best = Some((cost, j));
            }
        }
        let (_, j) = best.ok_or(Error::EmptyDataset)?;
        uploads.push(means[j].clone().expect("max-cost cluster is nonempty"));
    }

    let mut pool: Vec<DataPoint> = global.centers().to_vec();
    pool.extend(uploads.iter().cloned());
    let pool = Dataset::new(pool)?;
    let res = lloyd_kmeans(&pool, &tuning.config(k, norm, round_seed))?;
    Ok((res.centers.retagged(CenterKind::Global), uploads))
}

/// What an MFC run produced, including its round-by-round movement.
#[derive(Debug, Clone)]
pub struct MfcRun {
    pub centers: CenterSet,
    pub rounds: usize,
    pub movement_trace: Vec<f64>,
    pub messages: MessageLog,
}

/// Multi-round MFC: a k-FED style handshake yields initial global centers,
/// then refinement rounds run until the global set stops moving or the
/// round budget is exhausted. Per refinement round each client uploads one
/// center and receives k back.
pub fn mfc(
    clients: &[Dataset],
    k: usize,
    norm: NormOrder,
    cfg: MfcConfig,
    tuning: SolverTuning,
    rng_seed: u64,
) -> Result<MfcRun> {
    if cfg.max_rounds == 0 {
        return Err(Error::InvalidConfig(alloc::string::String::from(
            "max_rounds must be >= 1",
        )));
    }
    let (mut global, mut messages) = kfed(clients, k, None, norm, tuning, rng_seed)?;
    let mut movement_trace = Vec::new();
    let mut rounds = 0;

    for round in 1..=cfg.max_rounds {
        let round_seed = derive_seed2(rng_seed, 1, round as u64);
        let (new_global, uploads) = mfc_round(clients, &global, k, norm, tuning, round_seed)?;
        for (z, _) in uploads.iter().enumerate() {
            messages.record(round, z, Direction::Upload, 1);
        }
        for z in 0..clients.len() {
            messages.record(round, z, Direction::Download, k);
        }
        let movement = set_movement(global.centers(), new_global.centers(), norm);
        movement_trace.push(movement);
        global = new_global;
        rounds = round;
        if movement < cfg.tol {
            break;
        }
    }

    Ok(MfcRun {
        centers: global,
        rounds,
        movement_trace,
        messages,
    })
}

pub fn run_mfc(
    clients: &[Dataset],
    k: usize,
    norm: NormOrder,
    cfg: MfcConfig,
    tuning: SolverTuning,
    rng_seed: u64,
) -> Result<MethodOutcome> {
    let run = mfc(clients, k, norm, cfg, tuning, rng_seed)?;
    per_client_outcome(clients, &run.centers, norm, run.messages, run.rounds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::distance;
    use alloc::vec;

    fn pt(coords: &[f64]) -> DataPoint {
        DataPoint::new(coords.to_vec()).unwrap()
    }

    fn dataset(points: &[&[f64]]) -> Dataset {
        Dataset::new(points.iter().map(|c| pt(c)).collect()).unwrap()
    }

    #[test]
    fn centclus_single_location() {
        let data = Dataset::new(vec![pt(&[2.0, 2.0]); 4]).unwrap();
        let centers = centclus(&data, 1, NormOrder::L2, 0, SolverTuning::default()).unwrap();
        assert_eq!(centers.centers(), &[pt(&[2.0, 2.0])]);
    }

    #[test]
    fn centclus_equals_local_solve_for_single_client() {
        let data = dataset(&[&[0.0, 0.0], &[1.0, 0.0], &[10.0, 0.0], &[11.0, 0.0]]);
        let a = centclus(&data, 2, NormOrder::L2, 7, SolverTuning::default()).unwrap();
        let b = solve(&data, &SolverTuning::default().config(2, NormOrder::L2, 7)).unwrap();
        assert_eq!(a.centers(), b.centers.centers());
    }

    #[test]
    fn centclus_two_cluster_optimum() {
        let data = dataset(&[&[0.0, 0.0], &[0.0, 1.0], &[10.0, 0.0], &[10.0, 1.0]]);
        let centers = centclus(&data, 2, NormOrder::L2, 0, SolverTuning::default()).unwrap();
        for e in [pt(&[0.0, 0.5]), pt(&[10.0, 0.5])] {
            assert!(centers
                .centers()
                .iter()
                .any(|c| distance(c, &e, NormOrder::L2).unwrap() < 1e-9));
        }
    }

    #[test]
    fn farthest_first_exhausts_far_apart_points() {
        let pool = vec![pt(&[0.0, 0.0]), pt(&[100.0, 0.0]), pt(&[0.0, 100.0])];
        let picked = farthest_first(&pool, 3, NormOrder::L2);
        let mut sorted = picked.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![0, 1, 2]);
    }

    #[test]
    fn farthest_first_on_a_line() {
        let pool = vec![pt(&[0.0]), pt(&[1.0]), pt(&[10.0])];
        let picked = farthest_first(&pool, 2, NormOrder::L2);
        assert_eq!(picked, vec![0, 2]);
    }

    #[test]
    fn kfed_single_client_returns_its_centers() {
        let clients = [dataset(&[&[0.0, 0.0], &[0.2, 0.0], &[10.0, 0.0], &[10.2, 0.0]])];
        let (centers, messages) =
            kfed(&clients, 2, None, NormOrder::L2, SolverTuning::default(), 0).unwrap();
        let local = lloyd_kmeans(
            &clients[0],
            &SolverTuning::default().config(2, NormOrder::L2, crate::seeding::derive_seed2(0, 0, 0)),
        )
        .unwrap();
        for c in centers.centers() {
            assert!(local.centers.centers().iter().any(|l| l == c));
        }
        assert_eq!(messages.uploads(0), 1);
        assert_eq!(messages.downloads(0), 1);
    }

    #[test]
    fn kfed_centers_come_from_the_pool() {
        let clients = [
            dataset(&[&[0.0, 0.0], &[0.4, 0.1], &[5.0, 5.0], &[5.2, 5.1]]),
            dataset(&[&[9.0, 0.0], &[9.3, 0.1], &[0.1, 9.0], &[0.2, 9.2]]),
        ];
        let out = run_kfed(&clients, 3, None, NormOrder::L2, SolverTuning::default(), 3).unwrap();
        // every selected center must be one of the uploaded local centers
        let mut pool = Vec::new();
        for (z, data) in clients.iter().enumerate() {
            let seed = derive_seed2(3, 0, z as u64);
            let res = lloyd_kmeans(data, &SolverTuning::default().config(3, NormOrder::L2, seed))
                .unwrap();
            pool.extend(res.centers.centers().to_vec());
        }
        for c in out.per_client[0].centers.centers() {
            assert!(pool.iter().any(|p| p == c));
        }
    }

    #[test]
    fn kfed_rejects_l1() {
        let clients = [dataset(&[&[0.0], &[1.0]])];
        assert!(matches!(
            kfed(&clients, 1, None, NormOrder::L1, SolverTuning::default(), 0),
            Err(Error::UnsupportedNorm { .. })
        ));
    }

    #[test]
    fn mfc_converges_in_one_round_at_a_fixed_point() {
        // perfectly clustered data; the handshake already finds the optimum
        let clients = [
            dataset(&[&[0.0, 0.0], &[0.0, 0.0], &[50.0, 50.0], &[50.0, 50.0]]),
            dataset(&[&[0.0, 0.0], &[50.0, 50.0], &[0.0, 0.0], &[50.0, 50.0]]),
        ];
        let run = mfc(
            &clients,
            2,
            NormOrder::L2,
            MfcConfig::default(),
            SolverTuning::default(),
            0,
        )
        .unwrap();
        assert_eq!(run.rounds, 1);
        assert!(run.movement_trace[0] < MfcConfig::default().tol);
    }

    #[test]
    fn mfc_round_halves_the_gap_for_k1() {
        // with k = 1 the server pool is {old center, client mean}, so each
        // round moves the center to their midpoint: geometric convergence
        let clients = [dataset(&[&[0.0], &[2.0]])]; // client mean = 1
        let mut global = CenterSet::new(CenterKind::Global, vec![pt(&[9.0])]).unwrap();
        let mut gap = 8.0;
        for round in 0..5 {
            let (next, uploads) = mfc_round(
                &clients,
                &global,
                1,
                NormOrder::L2,
                SolverTuning::default().with_tol(1e-12),
                round,
            )
            .unwrap();
            assert_eq!(uploads, vec![pt(&[1.0])]);
            let new_gap = (next.centers()[0].coords()[0] - 1.0).abs();
            assert!((new_gap - gap / 2.0).abs() < 1e-9);
            gap = new_gap;
            global = next;
        }
    }

    #[test]
    fn mfc_message_budget_per_round() {
        let clients = [
            dataset(&[&[0.0, 0.0], &[1.0, 1.0], &[9.0, 9.0], &[10.0, 10.0]]),
            dataset(&[&[0.5, 0.5], &[1.5, 1.5], &[8.5, 8.5], &[9.5, 9.5]]),
        ];
        let run = mfc(
            &clients,
            2,
            NormOrder::L2,
            MfcConfig::default(),
            SolverTuning::default(),
            1,
        )
        .unwrap();
        for round in 1..=run.rounds {
            let ups: Vec<_> = run
                .messages
                .events()
                .iter()
                .filter(|e| e.round == round && e.direction == Direction::Upload)
                .collect();
            let downs: Vec<_> = run
                .messages
                .events()
                .iter()
                .filter(|e| e.round == round && e.direction == Direction::Download)
                .collect();
            assert_eq!(ups.len(), clients.len());
            assert_eq!(downs.len(), clients.len());
            assert!(ups.iter().all(|e| e.centers == 1));
            assert!(downs.iter().all(|e| e.centers == 2));
        }
    }

    #[test]
    fn mfc_terminates_at_round_cap() {
        let clients = [
            dataset(&[&[0.0, 0.0], &[3.0, 0.0], &[6.0, 0.0], &[9.0, 0.0]]),
            dataset(&[&[1.5, 0.0], &[4.5, 0.0], &[7.5, 0.0], &[10.5, 0.0]]),
        ];
        let cfg = MfcConfig {
            max_rounds: 3,
            tol: 0.0, // never converges by movement
        };
        let run = mfc(&clients, 2, NormOrder::L2, cfg, SolverTuning::default(), 0).unwrap();
        assert_eq!(run.rounds, 3);
        assert_eq!(run.movement_trace.len(), 3);
    }
}
