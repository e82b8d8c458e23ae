//! Objective cost and the per-client fairness metrics μ, σ and max.

use alloc::vec::Vec;

// f64 math methods for the no_std build; redundant when std is linked
#[allow(unused_imports)]
use num_traits::Float;

use crate::dist::distance_pow;
use crate::error::{Error, Result};
use crate::types::{Assignment, CenterSet, Dataset, NormOrder};

/// Mean, deviation and maximum of per-client per-point costs.
///
/// Invariants: `mu` is the arithmetic mean of `per_client_mu`, `sigma` its
/// population standard deviation (divide by Z), and `max` its maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub mu: f64,
    pub sigma: f64,
    pub max: f64,
    pub per_client_mu: Vec<f64>,
}

/// Local objective cost: sum over points of d(x, assigned center)^ℓ.
pub fn local_objective_cost(
    data: &Dataset,
    centers: &CenterSet,
    assignment: &Assignment,
    norm: NormOrder,
) -> Result<f64> {
    assignment.validate(data, centers)?;
    let mut cost = 0.0;
    for (point, &idx) in data.points().iter().zip(assignment.indices()) {
        cost += distance_pow(point, &centers.centers()[idx], norm)?;
    }
    Ok(cost)
}

/// Computes per-client per-point costs μ^(z) = L_ℓ^(z)/|X^(z)| and folds
/// them into μ (mean), σ (population standard deviation) and max.
pub fn compute_metrics(
    per_client: &[(&Dataset, &CenterSet, &Assignment)],
    norm: NormOrder,
) -> Result<Metrics> {
    if per_client.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut per_client_mu = Vec::with_capacity(per_client.len());
    for (data, centers, assignment) in per_client {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let cost = local_objective_cost(data, centers, assignment, norm)?;
        per_client_mu.push(cost / data.len() as f64);
    }
    Ok(metrics_from_per_client(per_client_mu))
}

/// Folds already-computed per-client per-point costs into a [`Metrics`].
pub fn metrics_from_per_client(per_client_mu: Vec<f64>) -> Metrics {
    let z = per_client_mu.len() as f64;
    let mu = per_client_mu.iter().sum::<f64>() / z;
    let var = per_client_mu.iter().map(|m| (m - mu) * (m - mu)).sum::<f64>() / z;
    let sigma = var.sqrt();
    let max = per_client_mu.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Metrics {
        mu,
        sigma,
        max,
        per_client_mu,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{CenterKind, DataPoint};
    use alloc::vec;

    fn pt(coords: &[f64]) -> DataPoint {
        DataPoint::new(coords.to_vec()).unwrap()
    }

    // Hand evaluation: both points at distance 1 from the center,
    // so the ℓ=2 cost is 1² + 1² and the ℓ=1 cost is |−1| + |1|.
    #[test]
    fn objective_cost_two_points() {
        let data = Dataset::new(vec![pt(&[0.0, 0.0]), pt(&[2.0, 0.0])]).unwrap();
        let centers = CenterSet::new(CenterKind::Global, vec![pt(&[1.0, 0.0])]).unwrap();
        let a = Assignment::new(vec![0, 0]);
        assert_eq!(
            local_objective_cost(&data, &centers, &a, NormOrder::L2).unwrap(),
            2.0
        );
        assert_eq!(
            local_objective_cost(&data, &centers, &a, NormOrder::L1).unwrap(),
            2.0
        );
    }

    #[test]
    fn objective_cost_zero_distance() {
        let data = Dataset::new(vec![pt(&[3.0, 3.0])]).unwrap();
        let centers = CenterSet::new(CenterKind::Global, vec![pt(&[3.0, 3.0])]).unwrap();
        let a = Assignment::new(vec![0]);
        for norm in [NormOrder::L1, NormOrder::L2, NormOrder::new(3.0).unwrap()] {
            assert_eq!(
                local_objective_cost(&data, &centers, &a, norm).unwrap(),
                0.0
            );
        }
    }

    #[test]
    fn objective_cost_rejects_bad_assignment() {
        let data = Dataset::new(vec![pt(&[0.0]), pt(&[1.0])]).unwrap();
        let centers = CenterSet::new(CenterKind::Global, vec![pt(&[0.0])]).unwrap();
        let short = Assignment::new(vec![0]);
        assert!(matches!(
            local_objective_cost(&data, &centers, &short, NormOrder::L2),
            Err(Error::AssignmentLength { .. })
        ));
        let out_of_range = Assignment::new(vec![0, 3]);
        assert!(matches!(
            local_objective_cost(&data, &centers, &out_of_range, NormOrder::L2),
            Err(Error::AssignmentOutOfRange { .. })
        ));
    }

    // Hand evaluation of the μ/σ equations for per-point costs {1, 3}:
    // μ = 2, σ = sqrt(((1−2)² + (3−2)²)/2) = 1, max = 3.
    #[test]
    fn metrics_two_clients() {
        let m = metrics_from_per_client(vec![1.0, 3.0]);
        assert_eq!(m.mu, 2.0);
        assert_eq!(m.sigma, 1.0);
        assert_eq!(m.max, 3.0);
    }

    #[test]
    fn metrics_single_client_degenerate_sigma() {
        let m = metrics_from_per_client(vec![5.0]);
        assert_eq!(m.mu, 5.0);
        assert_eq!(m.sigma, 0.0);
        assert_eq!(m.max, 5.0);
    }

    #[test]
    fn metrics_equal_costs_have_zero_sigma() {
        let c = 0.75;
        let m = metrics_from_per_client(vec![c, c, c]);
        assert_eq!(m.mu, c);
        assert_eq!(m.sigma, 0.0);
        assert_eq!(m.max, c);
    }

    #[test]
    fn compute_metrics_end_to_end() {
        // Client 0: two points at distance 1 from its center → per-point cost 1.
        // Client 1: one point at distance √3... use distance 3 → cost 9, μ=9.
        let d0 = Dataset::new(vec![pt(&[0.0]), pt(&[2.0])]).unwrap();
        let c0 = CenterSet::new(CenterKind::Personalized, vec![pt(&[1.0])]).unwrap();
        let a0 = Assignment::new(vec![0, 0]);
        let d1 = Dataset::new(vec![pt(&[3.0])]).unwrap();
        let c1 = CenterSet::new(CenterKind::Personalized, vec![pt(&[0.0])]).unwrap();
        let a1 = Assignment::new(vec![0]);
        let m = compute_metrics(&[(&d0, &c0, &a0), (&d1, &c1, &a1)], NormOrder::L2).unwrap();
        assert_eq!(m.per_client_mu, vec![1.0, 9.0]);
        assert_eq!(m.mu, 5.0);
        assert_eq!(m.sigma, 4.0);
        assert_eq!(m.max, 9.0);
    }

    #[test]
    fn compute_metrics_rejects_empty_client() {
        let d0 = Dataset::new(vec![]).unwrap();
        let c0 = CenterSet::new(CenterKind::Global, vec![pt(&[0.0])]).unwrap();
        let a0 = Assignment::new(vec![]);
        assert_eq!(
            compute_metrics(&[(&d0, &c0, &a0)], NormOrder::L2),
            Err(Error::EmptyDataset)
        );
    }
}
