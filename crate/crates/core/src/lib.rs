//! Deadline-constrained job offloading and resource allocation for mobile
//! edge computing.
//!
//! Vehicles release jobs that may be offloaded to nearby edge servers. Each
//! server owns a budget of bandwidth units (BUs) and computing units (CUs);
//! a job earns its full utility when it completes by its deadline and a
//! decaying fraction up to a tolerance limit. The crate builds the pool of
//! feasible assignment instances (job, server ring, BU and CU amounts),
//! then solves the joint selection problem with:
//!
//! * [`localratio::idassign`], a local-ratio approximation with a proven
//!   1/6 worst-case guarantee,
//! * [`baselines`]: a density greedy, an alternating reassignment
//!   heuristic, and a best-response game,
//! * [`exact`]: a branch-and-bound oracle (and a brute-force cross-check
//!   for small pools).
//!
//! [`workload`] synthesizes random problems in the style of an urban
//! vehicular deployment, and [`experiment`] runs algorithm sweeps over
//! synthesized or file-based problems and writes per-run CSV rows.
//!
//! All real-valued arithmetic is generic over [`scalar::Scalar`]
//! (`f64` or `f32`); the `*64` aliases below fix the default precision.

pub mod baselines;
pub mod enumerate;
pub mod exact;
pub mod experiment;
pub mod localratio;
pub mod model;
pub mod scalar;
pub mod workload;

pub use model::{
    compute_offload_rate, compute_offload_time, compute_utility, AssignmentInstance, ChannelEnv,
    EdgeServer, InstanceId, Job, JobId, ModelError, NetworkRing, PenaltyShape, Problem,
    RingAccess, ServerId, Solution,
};

pub use baselines::{game, game_default_rounds, greedy, iterative, ITERATIVE_DEFAULT_ROUNDS};
pub use enumerate::{dominance_prune, enumerate_instances, InstancePool};
pub use exact::{exact_opt, exhaustive_opt, write_lp, BnBConfig, ExactResult, SolveStatus};
pub use experiment::{
    performance_ratio, run_experiment, write_csv, AlgorithmKind, ExperimentError, ExperimentSpec,
    ResultRow, WorkloadSource,
};
pub use localratio::{decompose, idassign, idassign_observed, select_pivot, WeightLayer};
pub use scalar::Scalar;
pub use workload::{
    mix_seed, randfixedsum, synthesize, synthesize_topology, Trace, WorkloadConfig, WorkloadError,
};

pub type Problem64 = model::Problem<f64>;
pub type InstancePool64 = enumerate::InstancePool<f64>;
pub type Solution64 = model::Solution<f64>;
pub type WorkloadConfig64 = workload::WorkloadConfig<f64>;
pub type ExperimentSpec64 = experiment::ExperimentSpec<f64>;
