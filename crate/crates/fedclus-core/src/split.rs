//! Federated partitioners: distribute a labeled dataset over Z clients at a
//! controlled heterogeneity level, evenly or deliberately skewed.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

// f64 math methods for the no_std build; redundant when std is linked
#[allow(unused_imports)]
use num_traits::Float;
use rand::seq::SliceRandom;
use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};
use crate::seeding::{rng_from_seed, Rng};
use crate::types::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitMode {
    /// Each distribution's points are divided equally (±1) among its holders.
    Balanced,
    /// Holder shares are drawn from a symmetric Dirichlet, floored so every
    /// client keeps a workable minimum.
    Unequal,
}

impl SplitMode {
    pub fn id(self) -> &'static str {
        match self {
            SplitMode::Balanced => "balanced",
            SplitMode::Unequal => "unequal",
        }
    }
}

/// How to split a dataset across clients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub mode: SplitMode,
    /// Number of clients Z.
    pub clients: usize,
    /// Heterogeneity H: every client receives points from exactly H
    /// distributions.
    pub heterogeneity: usize,
    pub rng_seed: u64,
    /// Dirichlet concentration for `Unequal`; smaller is more skewed.
    pub skew: f64,
    /// Minimum points per client. Callers enforcing a protocol precondition
    /// should set this to at least k before splitting.
    pub min_points: usize,
}

impl SplitSpec {
    pub fn new(mode: SplitMode, clients: usize, heterogeneity: usize, rng_seed: u64) -> Self {
        Self {
            mode,
            clients,
            heterogeneity,
            rng_seed,
            skew: 0.1,
            min_points: 10,
        }
    }

    pub fn with_skew(mut self, skew: f64) -> Self {
        self.skew = skew;
        self
    }

    pub fn with_min_points(mut self, min_points: usize) -> Self {
        self.min_points = min_points;
        self
    }
}

/// How a split was made: the `SplitSpec` plus, per client, the distributions it
/// holds and the original indices of its points.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitProvenance {
    /// `None` when the split was imported from a sidecar file rather than
    /// generated.
    pub spec: Option<SplitSpec>,
    pub client_distributions: Vec<Vec<usize>>,
    pub client_point_indices: Vec<Vec<usize>>,
}

/// Z client datasets plus the metadata needed to reproduce or audit them.
#[derive(Debug, Clone, PartialEq)]
pub struct FederatedSplit {
    pub client_datasets: Vec<Dataset>,
    pub provenance: SplitProvenance,
}

impl FederatedSplit {
    /// Rebuilds a split from an explicit client→point-index map, checking
    /// that every point is used exactly once.
    pub fn from_point_indices(
        data: &Dataset,
        client_point_indices: Vec<Vec<usize>>,
        spec: Option<SplitSpec>,
    ) -> Result<Self> {
        let mut seen = vec![false; data.len()];
        for indices in &client_point_indices {
            for &i in indices {
                if i >= data.len() {
                    return Err(Error::InfeasibleSplit(format!(
                        "point index {i} out of range ({} points)",
                        data.len()
                    )));
                }
                if seen[i] {
                    return Err(Error::InfeasibleSplit(format!("point {i} assigned twice")));
                }
                seen[i] = true;
            }
        }
        if let Some(missing) = seen.iter().position(|&s| !s) {
            return Err(Error::InfeasibleSplit(format!(
                "point {missing} not assigned to any client"
            )));
        }
        let client_datasets = build_client_datasets(data, &client_point_indices)?;
        let client_distributions = client_point_indices
            .iter()
            .map(|indices| {
                let mut dists: Vec<usize> = match data.labels() {
                    Some(labels) => indices.iter().map(|&i| labels[i]).collect(),
                    None => Vec::new(),
                };
                dists.sort_unstable();
                dists.dedup();
                dists
            })
            .collect();
        Ok(Self {
            client_datasets,
            provenance: SplitProvenance {
                spec,
                client_distributions,
                client_point_indices,
            },
        })
    }

    /// Largest number of distinct true labels held by any client.
    pub fn max_label_cardinality(&self) -> usize {
        self.provenance
            .client_distributions
            .iter()
            .map(Vec::len)
            .max()
            .unwrap_or(0)
    }
}

fn build_client_datasets(data: &Dataset, indices: &[Vec<usize>]) -> Result<Vec<Dataset>> {
    indices
        .iter()
        .map(|client| {
            let points = client.iter().map(|&i| data.points()[i].clone()).collect();
            match data.labels() {
                Some(labels) => {
                    Dataset::with_labels(points, client.iter().map(|&i| labels[i]).collect())
                }
                None => Dataset::new(points),
            }
        })
        .collect()
}

/// Point indices grouped by true label; every label in 0..max must occur.
fn group_by_label(data: &Dataset) -> Result<Vec<Vec<usize>>> {
    let labels = data.labels().ok_or(Error::LabelsRequired)?;
    let n_dist = data.n_distributions().unwrap_or(0);
    if n_dist == 0 {
        return Err(Error::LabelsRequired);
    }
    let mut groups = vec![Vec::new(); n_dist];
    for (i, &l) in labels.iter().enumerate() {
        groups[l].push(i);
    }
    if let Some(empty) = groups.iter().position(Vec::is_empty) {
        return Err(Error::InfeasibleSplit(format!(
            "distribution {empty} has no points"
        )));
    }
    Ok(groups)
}

/// Distribution ids per client, and holder clients per distribution (in
/// deal order).
type HolderAssignment = (Vec<Vec<usize>>, Vec<Vec<usize>>);

/// Deals exactly H distributions to every client by cycling through the
/// distribution indices over a seeded-random client order.
fn assign_distributions(
    z: usize,
    h: usize,
    n_dist: usize,
    rng: &mut Rng,
) -> Result<HolderAssignment> {
    if z == 0 {
        return Err(Error::InfeasibleSplit(String::from("need at least 1 client")));
    }
    if h == 0 || h > n_dist {
        return Err(Error::InfeasibleSplit(format!(
            "heterogeneity {h} must be in 1..={n_dist}"
        )));
    }
    if z * h < n_dist {
        return Err(Error::InfeasibleSplit(format!(
            "{z} clients with H={h} cannot cover {n_dist} distributions"
        )));
    }
    let mut client_order: Vec<usize> = (0..z).collect();
    client_order.shuffle(rng);
    let mut client_dists = vec![Vec::with_capacity(h); z];
    let mut holders = vec![Vec::new(); n_dist];
    let mut next = 0usize;
    for &client in &client_order {
        for _ in 0..h {
            let dist = next % n_dist;
            client_dists[client].push(dist);
            holders[dist].push(client);
            next += 1;
        }
    }
    for dists in &mut client_dists {
        dists.sort_unstable();
    }
    Ok((client_dists, holders))
}

/// Equal shares of `n` over `m` holders: n/m each, the remainder spread one
/// apiece starting at a rotating offset so no holder is systematically
/// favored across distributions.
fn balanced_shares(n: usize, m: usize, rotation: usize) -> Vec<usize> {
    let base = n / m;
    let extra = n % m;
    (0..m)
        .map(|i| base + usize::from((i + m - rotation % m) % m < extra))
        .collect()
}

/// Dirichlet-weighted shares of `n` over `m` holders with a per-holder
/// floor, rounded by largest remainder.
fn dirichlet_shares(n: usize, m: usize, floor: usize, skew: f64, rng: &mut Rng) -> Vec<usize> {
    debug_assert!(n >= floor * m);
    let remaining = n - floor * m;
    // symmetric Dirichlet via normalized Gamma(α, 1) draws
    let gamma = Gamma::new(skew, 1.0).expect("skew validated positive");
    let mut weights: Vec<f64> = (0..m).map(|_| gamma.sample(rng)).collect();
    let total: f64 = weights.iter().sum();
    if !(total.is_finite() && total > 0.0) {
        weights = vec![1.0; m];
    }
    let total: f64 = weights.iter().sum();

    let targets: Vec<f64> = weights
        .iter()
        .map(|w| w / total * remaining as f64)
        .collect();
    let mut shares: Vec<usize> = targets.iter().map(|t| t.floor() as usize).collect();
    let mut leftover = remaining - shares.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        let fa = targets[a] - targets[a].floor();
        let fb = targets[b] - targets[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &i in &order {
        if leftover == 0 {
            break;
        }
        shares[i] += 1;
        leftover -= 1;
    }
    for s in &mut shares {
        *s += floor;
    }
    shares
}

fn split_with(
    data: &Dataset,
    spec: &SplitSpec,
    expected_mode: SplitMode,
) -> Result<FederatedSplit> {
    if spec.mode != expected_mode {
        return Err(Error::InvalidConfig(format!(
            "spec mode {:?} does not match the partitioner called",
            spec.mode
        )));
    }
    if spec.mode == SplitMode::Unequal && !(spec.skew.is_finite() && spec.skew > 0.0) {
        return Err(Error::InvalidConfig(String::from("skew must be positive")));
    }
    let groups = group_by_label(data)?;
    let n_dist = groups.len();
    let mut rng = rng_from_seed(spec.rng_seed);
    let (client_dists, holders) =
        assign_distributions(spec.clients, spec.heterogeneity, n_dist, &mut rng)?;

    // Per-holding floor that guarantees the per-client minimum: a client
    // holds exactly H distributions, each contributing at least the floor.
    let floor = match spec.mode {
        SplitMode::Balanced => 0,
        SplitMode::Unequal => 1.max(spec.min_points.div_ceil(spec.heterogeneity)),
    };

    let mut client_point_indices = vec![Vec::new(); spec.clients];
    for (dist, group) in groups.iter().enumerate() {
        let mut points = group.clone();
        points.shuffle(&mut rng);
        let m = holders[dist].len();
        let shares = match spec.mode {
            SplitMode::Balanced => balanced_shares(points.len(), m, dist),
            SplitMode::Unequal => {
                if points.len() < floor * m {
                    return Err(Error::InfeasibleSplit(format!(
                        "distribution {dist}: {} points cannot give {m} holders a floor of {floor}",
                        points.len()
                    )));
                }
                dirichlet_shares(points.len(), m, floor, spec.skew, &mut rng)
            }
        };
        let mut cursor = 0;
        for (&client, &share) in holders[dist].iter().zip(&shares) {
            client_point_indices[client].extend_from_slice(&points[cursor..cursor + share]);
            cursor += share;
        }
    }

    if let Some(small) = client_point_indices
        .iter()
        .position(|p| p.len() < spec.min_points)
    {
        return Err(Error::InfeasibleSplit(format!(
            "client {small} received {} points, below the minimum of {}",
            client_point_indices[small].len(),
            spec.min_points
        )));
    }

    let client_datasets = build_client_datasets(data, &client_point_indices)?;
    Ok(FederatedSplit {
        client_datasets,
        provenance: SplitProvenance {
            spec: Some(*spec),
            client_distributions: client_dists,
            client_point_indices,
        },
    })
}

/// Splits so each distribution's points divide equally (±1) among its
/// holders; every client holds exactly H distributions.
pub fn partition_balanced(data: &Dataset, spec: &SplitSpec) -> Result<FederatedSplit> {
    split_with(data, spec, SplitMode::Balanced)
}

/// Splits with Dirichlet-skewed holder shares, floored so every holder gets
/// at least one point and every client at least `min_points`.
pub fn partition_unequal(data: &Dataset, spec: &SplitSpec) -> Result<FederatedSplit> {
    split_with(data, spec, SplitMode::Unequal)
}

/// Dispatches on `spec.mode`.
pub fn partition(data: &Dataset, spec: &SplitSpec) -> Result<FederatedSplit> {
    match spec.mode {
        SplitMode::Balanced => partition_balanced(data, spec),
        SplitMode::Unequal => partition_unequal(data, spec),
    }
}
