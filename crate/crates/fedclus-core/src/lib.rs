//! Federated data clustering with client-side personalization.
//!
//! This crate contains the algorithmic core of the `fedclus` workspace:
//!
//! - domain types for points, datasets, ℓ-norms, center sets and assignments;
//! - centralized (k,ℓ)-clustering primitives (Lloyd's k-means for ℓ=2 and a
//!   Voronoi-iteration k-medoids for ℓ=1) with k-means++ seeding;
//! - the p-FClus protocol: local initialization, one-shot server aggregation
//!   of local centers, and per-client SGD fine-tuning of the global centers;
//! - baseline methods it is compared against (CentClus, k-FED, MFC);
//! - seeded synthetic dataset generators and federated partitioners.
//!
//! The crate is `no_std` (with `alloc`) so the algorithms stay free of IO and
//! host dependencies; all randomness flows through explicit 64-bit seeds and
//! a portable ChaCha stream, making every operation reproducible bit-for-bit.
//! File formats, the CLI and the experiment harness live in the companion
//! `fedclus` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod baselines;
pub mod comm;
pub mod dist;
pub mod error;
pub mod metrics;
pub mod pfclus;
pub mod seeding;
pub mod solver;
pub mod split;
pub mod synth;
pub mod types;

pub use baselines::{centclus, kfed, mfc, run_centclus, run_kfed, run_mfc, MfcConfig, MfcRun};
pub use comm::{ClientResult, Direction, MessageEvent, MessageLog, MethodOutcome};
pub use dist::{assign_nearest, distance, distance_pow};
pub use error::{Error, Result};
pub use metrics::{compute_metrics, local_objective_cost, metrics_from_per_client, Metrics};
pub use pfclus::{
    client_initialization, personalization_gradient, personalize_client, run_pfclus,
    server_aggregate, ClientState, L1GradientMode, PersonalizationConfig, PersonalizeReport,
    SolverTuning,
};
pub use seeding::{derive_seed, derive_seed2, rng_from_seed};
pub use solver::{kmeans_pp_init, kmedoids, lloyd_kmeans, solve, SolveResult, SolverConfig};
pub use split::{
    partition, partition_balanced, partition_unequal, FederatedSplit, SplitMode, SplitProvenance,
    SplitSpec,
};
pub use synth::{generate_synthetic, SynKind, SynSpec};
pub use types::{Assignment, CenterKind, CenterSet, DataPoint, Dataset, NormOrder};
