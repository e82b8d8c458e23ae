//! Seeded synthetic datasets: families of isotropic Gaussian clusters laid
//! out along the diagonal with controlled overlap.

use alloc::string::String;
use alloc::vec::Vec;

use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::seeding::rng_from_seed;
use crate::types::{DataPoint, Dataset};

/// Overlap family of the generated clusters.
///
/// Cluster i (1-based) is centered at `mean_spacing() * i` on every
/// coordinate with isotropic standard deviation `std_dev()`:
///
/// - `NoOverlap`: means 10 apart, σ = 1 — well separated;
/// - `LittleOverlap`: means 8 apart, σ = 2 — neighbors meet only beyond two
///   standard deviations;
/// - `Overlap`: means 9 apart, σ = 3 — each mean touches the 3σ shell of
///   its neighbor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynKind {
    NoOverlap,
    LittleOverlap,
    Overlap,
}

impl SynKind {
    pub fn id(self) -> &'static str {
        match self {
            SynKind::NoOverlap => "Syn-NO",
            SynKind::LittleOverlap => "Syn-LO",
            SynKind::Overlap => "Syn-O",
        }
    }

    pub fn mean_spacing(self) -> f64 {
        match self {
            SynKind::NoOverlap => 10.0,
            SynKind::LittleOverlap => 8.0,
            SynKind::Overlap => 9.0,
        }
    }

    pub fn std_dev(self) -> f64 {
        match self {
            SynKind::NoOverlap => 1.0,
            SynKind::LittleOverlap => 2.0,
            SynKind::Overlap => 3.0,
        }
    }
}

/// Parameters of one synthetic dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynSpec {
    pub kind: SynKind,
    pub n_clusters: usize,
    pub points_per_cluster: usize,
    pub dim: usize,
    pub rng_seed: u64,
}

impl SynSpec {
    /// The usual configuration: ten bi-variate clusters.
    pub fn new(kind: SynKind, points_per_cluster: usize, rng_seed: u64) -> Self {
        Self {
            kind,
            n_clusters: 10,
            points_per_cluster,
            dim: 2,
            rng_seed,
        }
    }

    /// Mean of cluster `i` (0-based) on every coordinate.
    pub fn cluster_mean(&self, i: usize) -> f64 {
        self.kind.mean_spacing() * (i + 1) as f64
    }
}

/// Samples the dataset described by `spec`, labeling each point with its
/// cluster index. Deterministic given `spec`, including its seed.
pub fn generate_synthetic(spec: &SynSpec) -> Result<Dataset> {
    if spec.n_clusters == 0 || spec.points_per_cluster == 0 || spec.dim == 0 {
        return Err(Error::InvalidConfig(String::from(
            "n_clusters, points_per_cluster and dim must all be >= 1",
        )));
    }
    let mut rng = rng_from_seed(spec.rng_seed);
    let sigma = spec.kind.std_dev();
    let n = spec.n_clusters * spec.points_per_cluster;
    let mut points = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for cluster in 0..spec.n_clusters {
        let normal = Normal::new(spec.cluster_mean(cluster), sigma)
            .expect("sigma is a positive constant");
        for _ in 0..spec.points_per_cluster {
            let coords: Vec<f64> = (0..spec.dim).map(|_| normal.sample(&mut rng)).collect();
            points.push(DataPoint::from_trusted(coords));
            labels.push(cluster);
        }
    }
    Dataset::with_labels(points, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_overlap_cluster_mean_matches() {
        let spec = SynSpec::new(SynKind::NoOverlap, 400, 0);
        let data = generate_synthetic(&spec).unwrap();
        // cluster index 2 is the third cluster, centered at 30
        let labels = data.labels().unwrap();
        for d in 0..2 {
            let (sum, n) = data
                .points()
                .iter()
                .zip(labels)
                .filter(|(_, &l)| l == 2)
                .fold((0.0, 0usize), |(s, n), (p, _)| (s + p.coords()[d], n + 1));
            let mean = sum / n as f64;
            let bound = 3.0 * spec.kind.std_dev() / (n as f64).sqrt();
            assert!(
                (mean - 30.0).abs() < bound,
                "coordinate {d} sample mean {mean} outside {bound} of 30"
            );
        }
    }

    #[test]
    fn little_overlap_spacing_is_eight() {
        let spec = SynSpec::new(SynKind::LittleOverlap, 1, 0);
        for i in 1..spec.n_clusters {
            assert_eq!(spec.cluster_mean(i) - spec.cluster_mean(i - 1), 8.0);
        }
    }

    #[test]
    fn overlap_spacing_is_nine() {
        let spec = SynSpec::new(SynKind::Overlap, 1, 0);
        for i in 1..spec.n_clusters {
            assert_eq!(spec.cluster_mean(i) - spec.cluster_mean(i - 1), 9.0);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = SynSpec::new(SynKind::Overlap, 25, 1200);
        assert_eq!(generate_synthetic(&spec).unwrap(), generate_synthetic(&spec).unwrap());
    }

    #[test]
    fn labels_cover_every_cluster() {
        let spec = SynSpec::new(SynKind::NoOverlap, 7, 3);
        let data = generate_synthetic(&spec).unwrap();
        assert_eq!(data.len(), 70);
        let labels = data.labels().unwrap();
        for cluster in 0..10 {
            assert_eq!(labels.iter().filter(|&&l| l == cluster).count(), 7);
        }
    }
}
