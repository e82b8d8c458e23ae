//! Baseline-method properties: farthest-first structure for k-FED and the
//! MFC round mechanics.

use fedclus_core::{
    distance, kfed, lloyd_kmeans, mfc, rng_from_seed, run_centclus, run_kfed, run_mfc,
    run_pfclus, DataPoint, Dataset, MfcConfig, NormOrder, PersonalizationConfig, SolverTuning,
    derive_seed2,
};
use rand::Rng;

fn pt(coords: &[f64]) -> DataPoint {
    DataPoint::new(coords.to_vec()).unwrap()
}

fn random_clients(seed: u64, z: usize, per_client: usize) -> Vec<Dataset> {
    let mut rng = rng_from_seed(seed);
    (0..z)
        .map(|_| {
            let points = (0..per_client)
                .map(|_| {
                    pt(&[
                        rng.random_range(-50.0..50.0),
                        rng.random_range(-50.0..50.0),
                    ])
                })
                .collect();
            Dataset::new(points).unwrap()
        })
        .collect()
}

#[test]
fn kfed_centers_are_a_subset_of_uploaded_centers() {
    for seed in 0..10u64 {
        let clients = random_clients(seed, 4, 12);
        let (global, _) = kfed(
            &clients,
            5,
            Some(3),
            NormOrder::L2,
            SolverTuning::default(),
            seed,
        )
        .unwrap();
        let mut pool = Vec::new();
        for (z, data) in clients.iter().enumerate() {
            let res = lloyd_kmeans(
                data,
                &SolverTuning::default().config(3, NormOrder::L2, derive_seed2(seed, 0, z as u64)),
            )
            .unwrap();
            pool.extend(res.centers.centers().to_vec());
        }
        for c in global.centers() {
            assert!(pool.iter().any(|p| p == c), "seed {seed}: center not uploaded");
        }
    }
}

/// Optimal k-center radius by enumerating every center subset.
fn brute_force_kcenter_radius(points: &[DataPoint], k: usize) -> f64 {
    let n = points.len();
    let mut best = f64::INFINITY;
    let mut subset: Vec<usize> = (0..k).collect();
    loop {
        let radius = points
            .iter()
            .map(|p| {
                subset
                    .iter()
                    .map(|&c| distance(p, &points[c], NormOrder::L2).unwrap())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0f64, f64::max);
        best = best.min(radius);
        let mut i = k;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if subset[i] != i + n - k {
                subset[i] += 1;
                for j in i + 1..k {
                    subset[j] = subset[j - 1] + 1;
                }
                break;
            }
        }
    }
}

#[test]
fn farthest_first_is_a_two_approximation_on_small_pools() {
    // exercised through kfed with singleton clients, whose single "local
    // center" is their own mean: the pool equals the client means
    let mut rng = rng_from_seed(31);
    for case in 0..15u64 {
        let n = 5 + (case as usize % 4);
        let k = 2 + (case as usize % 2);
        let pool: Vec<DataPoint> = (0..n)
            .map(|_| {
                pt(&[
                    rng.random_range(-20.0..20.0),
                    rng.random_range(-20.0..20.0),
                ])
            })
            .collect();
        let clients: Vec<Dataset> = pool
            .iter()
            .map(|p| Dataset::new(vec![p.clone()]).unwrap())
            .collect();
        let (selected, _) = kfed(
            &clients,
            k,
            Some(1),
            NormOrder::L2,
            SolverTuning::default(),
            case,
        )
        .unwrap();
        let ff_radius = pool
            .iter()
            .map(|p| {
                selected
                    .centers()
                    .iter()
                    .map(|c| distance(p, c, NormOrder::L2).unwrap())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0f64, f64::max);
        let optimal = brute_force_kcenter_radius(&pool, k);
        assert!(
            ff_radius <= 2.0 * optimal + 1e-9,
            "case {case}: radius {ff_radius} vs optimal {optimal}"
        );
    }
}

#[test]
fn mfc_logs_movement_every_round_and_terminates() {
    let clients = random_clients(11, 5, 20);
    let cfg = MfcConfig {
        max_rounds: 12,
        tol: 1e-4,
    };
    let run = mfc(&clients, 4, NormOrder::L2, cfg, SolverTuning::default(), 2).unwrap();
    assert!(run.rounds >= 1 && run.rounds <= cfg.max_rounds);
    assert_eq!(run.movement_trace.len(), run.rounds);
    if run.rounds < cfg.max_rounds {
        assert!(run.movement_trace.last().unwrap() < &cfg.tol);
    }
}

#[test]
fn all_methods_run_on_the_same_split_object() {
    let clients = random_clients(77, 4, 16);
    let k = 3;
    let tuning = SolverTuning::default();
    let pf = run_pfclus(
        &clients,
        k,
        NormOrder::L2,
        &PersonalizationConfig::new(NormOrder::L2),
        None,
        tuning,
        5,
    )
    .unwrap();
    let kf = run_kfed(&clients, k, None, NormOrder::L2, tuning, 5).unwrap();
    let mf = run_mfc(&clients, k, NormOrder::L2, MfcConfig::default(), tuning, 5).unwrap();
    let cc = run_centclus(&clients, k, NormOrder::L2, tuning, 5).unwrap();
    for out in [&pf, &kf, &mf, &cc] {
        assert_eq!(out.per_client.len(), clients.len());
        assert_eq!(out.metrics.per_client_mu.len(), clients.len());
        for (client, result) in clients.iter().zip(&out.per_client) {
            assert_eq!(result.assignment.len(), client.len());
        }
    }
}
