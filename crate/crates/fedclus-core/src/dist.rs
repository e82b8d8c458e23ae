//! ℓ-norm distances and nearest-center assignment.

use alloc::vec::Vec;

// f64 math methods for the no_std build; redundant when std is linked
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::types::{Assignment, CenterSet, DataPoint, Dataset, NormOrder};

fn check_dims(a: &DataPoint, b: &DataPoint) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    Ok(())
}

/// Sum over coordinates of |a_i − b_i|^ℓ, i.e. the ℓ-th power of the
/// ℓ-norm distance. This is the per-point contribution to the objective
/// cost, computed without the cancelling root/power round trip.
pub fn distance_pow(a: &DataPoint, b: &DataPoint, norm: NormOrder) -> Result<f64> {
    check_dims(a, b)?;
    Ok(distance_pow_unchecked(a.coords(), b.coords(), norm))
}

pub(crate) fn distance_pow_unchecked(a: &[f64], b: &[f64], norm: NormOrder) -> f64 {
    if norm.is_l2() {
        a.iter()
            .zip(b)
            .map(|(x, y)| {
                let d = x - y;
                d * d
            })
            .sum()
    } else if norm.is_l1() {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
    } else {
        let l = norm.value();
        a.iter().zip(b).map(|(x, y)| (x - y).abs().powf(l)).sum()
    }
}

/// ℓ-norm of (a − b). Symmetric, non-negative, zero iff a = b.
pub fn distance(a: &DataPoint, b: &DataPoint, norm: NormOrder) -> Result<f64> {
    check_dims(a, b)?;
    Ok(distance_unchecked(a.coords(), b.coords(), norm))
}

pub(crate) fn distance_unchecked(a: &[f64], b: &[f64], norm: NormOrder) -> f64 {
    let pow = distance_pow_unchecked(a, b, norm);
    if norm.is_l1() {
        pow
    } else if norm.is_l2() {
        pow.sqrt()
    } else {
        pow.powf(1.0 / norm.value())
    }
}

/// Index and distance of the nearest center; ties resolve to the lowest
/// center index.
pub(crate) fn nearest(point: &[f64], centers: &[DataPoint], norm: NormOrder) -> (usize, f64) {
    let mut best = 0usize;
    // Compare on d^ℓ: monotone in d, cheaper, and tie-equivalent.
    let mut best_pow = distance_pow_unchecked(point, centers[0].coords(), norm);
    for (i, c) in centers.iter().enumerate().skip(1) {
        let pow = distance_pow_unchecked(point, c.coords(), norm);
        if pow < best_pow {
            best = i;
            best_pow = pow;
        }
    }
    let d = if norm.is_l1() {
        best_pow
    } else if norm.is_l2() {
        best_pow.sqrt()
    } else {
        best_pow.powf(1.0 / norm.value())
    };
    (best, d)
}

/// Maps every point of `data` to its nearest center under `norm`
/// (argmin over centers; ties broken by lowest center index).
pub fn assign_nearest(data: &Dataset, centers: &CenterSet, norm: NormOrder) -> Result<Assignment> {
    if centers.is_empty() {
        return Err(Error::EmptyCenterSet);
    }
    if let Some(dim) = data.dim() {
        if dim != centers.dim() {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: centers.dim(),
            });
        }
    }
    let indices: Vec<usize> = data
        .points()
        .iter()
        .map(|p| nearest(p.coords(), centers.centers(), norm).0)
        .collect();
    Ok(Assignment::new(indices))
}
