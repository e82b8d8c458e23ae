//! Domain types: points, datasets, norm orders, center sets and assignments.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// A single h-dimensional real-valued feature vector.
///
/// All coordinates are finite; the dimension is fixed at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DataPoint {
    coords: Vec<f64>,
}

impl DataPoint {
    /// Builds a point, rejecting empty vectors and non-finite coordinates.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::EmptyPoint);
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFiniteCoordinate);
        }
        Ok(Self { coords })
    }

    /// Used internally for values produced by arithmetic on already-validated
    /// points (means, gradient steps). Debug builds still check the invariant.
    pub(crate) fn from_trusted(coords: Vec<f64>) -> Self {
        debug_assert!(!coords.is_empty() && coords.iter().all(|c| c.is_finite()));
        Self { coords }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

/// A collection of uniformly-dimensioned points, optionally carrying the
/// index of the true distribution each point was sampled from.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    points: Vec<DataPoint>,
    labels: Option<Vec<usize>>,
}

impl Dataset {
    /// Builds an unlabeled dataset, enforcing uniform dimensionality.
    pub fn new(points: Vec<DataPoint>) -> Result<Self> {
        Self::build(points, None)
    }

    /// Builds a labeled dataset; `labels[i]` is the true-distribution index
    /// of `points[i]`.
    pub fn with_labels(points: Vec<DataPoint>, labels: Vec<usize>) -> Result<Self> {
        Self::build(points, Some(labels))
    }

    fn build(points: Vec<DataPoint>, labels: Option<Vec<usize>>) -> Result<Self> {
        if let Some(first) = points.first() {
            let dim = first.dim();
            for p in &points {
                if p.dim() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: p.dim(),
                    });
                }
            }
        }
        if let Some(ref l) = labels {
            if l.len() != points.len() {
                return Err(Error::LabelLength {
                    labels: l.len(),
                    points: points.len(),
                });
            }
        }
        Ok(Self { points, labels })
    }

    pub fn points(&self) -> &[DataPoint] {
        &self.points
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Dimension of the feature space, or `None` for an empty dataset.
    pub fn dim(&self) -> Option<usize> {
        self.points.first().map(DataPoint::dim)
    }

    /// Number of true distributions (max label + 1), if labels are present.
    pub fn n_distributions(&self) -> Option<usize> {
        self.labels
            .as_ref()
            .map(|l| l.iter().max().map_or(0, |m| m + 1))
    }
}

/// The ℓ of the (k,ℓ)-clustering objective: a finite norm order ≥ 1.
///
/// ℓ=2 selects the k-means objective, ℓ=1 the k-medoids objective; distance
/// and cost computations accept any finite ℓ ≥ 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormOrder(f64);

impl NormOrder {
    /// Manhattan norm, the k-medoids objective.
    pub const L1: NormOrder = NormOrder(1.0);
    /// Euclidean norm, the k-means objective.
    pub const L2: NormOrder = NormOrder(2.0);

    pub fn new(order: f64) -> Result<Self> {
        if !order.is_finite() || order < 1.0 {
            return Err(Error::InvalidNorm(order));
        }
        Ok(Self(order))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_l1(self) -> bool {
        self.0 == 1.0
    }

    pub fn is_l2(self) -> bool {
        self.0 == 2.0
    }
}

/// Which role a set of centers plays in the protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CenterKind {
    /// Computed by a client on its own data.
    Local,
    /// Computed at the server from pooled local centers.
    Global,
    /// A client's fine-tuned copy of the global centers.
    Personalized,
}

/// An ordered list of k center vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct CenterSet {
    centers: Vec<DataPoint>,
    kind: CenterKind,
}

impl CenterSet {
    /// Builds a center set, enforcing non-emptiness and uniform dimension.
    pub fn new(kind: CenterKind, centers: Vec<DataPoint>) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::EmptyCenterSet);
        }
        let dim = centers[0].dim();
        for c in &centers {
            if c.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: c.dim(),
                });
            }
        }
        Ok(Self { centers, kind })
    }

    pub fn centers(&self) -> &[DataPoint] {
        &self.centers
    }

    pub fn kind(&self) -> CenterKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.centers[0].dim()
    }

    /// Same centers re-tagged with a different role.
    pub fn retagged(&self, kind: CenterKind) -> CenterSet {
        CenterSet {
            centers: self.centers.clone(),
            kind,
        }
    }

    pub(crate) fn replace_center(&mut self, index: usize, center: DataPoint) {
        self.centers[index] = center;
    }
}

/// Map from each point of a local dataset to the index of its assigned
/// center. Total by construction: one entry per point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment(Vec<usize>);

impl Assignment {
    pub fn new(indices: Vec<usize>) -> Self {
        Self(indices)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Checks totality and center-index bounds against a dataset/center pair.
    pub fn validate(&self, data: &Dataset, centers: &CenterSet) -> Result<()> {
        if self.0.len() != data.len() {
            return Err(Error::AssignmentLength {
                expected: data.len(),
                got: self.0.len(),
            });
        }
        for &i in &self.0 {
            if i >= centers.len() {
                return Err(Error::AssignmentOutOfRange {
                    index: i,
                    centers: centers.len(),
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn point_rejects_nan() {
        assert_eq!(
            DataPoint::new(vec![0.0, f64::NAN]),
            Err(Error::NonFiniteCoordinate)
        );
        assert_eq!(
            DataPoint::new(vec![f64::INFINITY]),
            Err(Error::NonFiniteCoordinate)
        );
        assert_eq!(DataPoint::new(vec![]), Err(Error::EmptyPoint));
    }

    #[test]
    fn dataset_enforces_uniform_dimension() {
        let p1 = DataPoint::new(vec![0.0, 1.0]).unwrap();
        let p2 = DataPoint::new(vec![0.0]).unwrap();
        assert!(matches!(
            Dataset::new(vec![p1, p2]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn dataset_label_length_checked() {
        let p = DataPoint::new(vec![0.0]).unwrap();
        assert!(matches!(
            Dataset::with_labels(vec![p], vec![0, 1]),
            Err(Error::LabelLength { .. })
        ));
    }

    #[test]
    fn norm_order_bounds() {
        assert!(NormOrder::new(1.0).is_ok());
        assert!(NormOrder::new(3.5).is_ok());
        assert_eq!(NormOrder::new(0.5), Err(Error::InvalidNorm(0.5)));
        assert_eq!(
            NormOrder::new(f64::INFINITY),
            Err(Error::InvalidNorm(f64::INFINITY))
        );
        assert!(NormOrder::L2.is_l2() && !NormOrder::L2.is_l1());
    }

    #[test]
    fn center_set_requires_centers() {
        assert_eq!(
            CenterSet::new(CenterKind::Local, vec![]),
            Err(Error::EmptyCenterSet)
        );
    }
}
