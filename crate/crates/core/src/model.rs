//! Domain model: edge servers with ringed coverage, deadline-constrained
//! jobs, assignment instances, and solutions, together with the timing and
//! utility formulas and the feasibility checks that every solver relies on.
//!
//! A problem document is JSON with top-level keys `servers`, `jobs` and
//! (optionally) `channel_env`; field names match the struct fields below.
//! `Problem::validate` checks every structural invariant once, after which
//! enumeration and the solvers may assume a well-formed input.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

/// Megabits per megabyte: Shannon-mode rates come out of the log formula in
/// Mbit/s (MHz times bits/s/Hz) and are divided by this to yield MB/s,
/// keeping them comparable with the MB-denominated job sizes and the
/// direct per-BU rates.
pub const MBIT_PER_MBYTE: f64 = 8.0;

/// Index of a job within `Problem::jobs`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct JobId(pub usize);

/// Index of a server within `Problem::servers`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ServerId(pub usize);

/// Position of an assignment instance within its pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct InstanceId(pub usize);

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("missing channel parameters: {0}")]
    MissingChannel(String),
    #[error("offload rate must be positive, got {0}")]
    NonPositiveRate(f64),
    #[error("no processing time profiled for server `{server}` at {cu} computing units")]
    MissingProcessingTime { server: String, cu: u32 },
    #[error("infeasible solution: {0}")]
    InfeasibleSolution(String),
}

/// Annular sub-region of a server's coverage. Within a ring the channel is
/// treated as constant, expressed either as a channel gain (Shannon mode)
/// or as a measured per-BU data rate (direct-rate mode). Exactly one of the
/// two must be present.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(serialize = "", deserialize = ""))]
pub struct NetworkRing<S: Scalar> {
    pub ring_index: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel_gain: Option<S>,
    /// Data rate in MB/s contributed by each allocated bandwidth unit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_bu_rate: Option<S>,
    /// Ring geometry in meters; only the synthetic mobility generator needs it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_radius: Option<S>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outer_radius: Option<S>,
}

/// An edge server: an access point with `bandwidth_units` BUs of
/// `bu_size_mhz` MHz each, and a compute node with `computing_units` units.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(serialize = "", deserialize = ""))]
pub struct EdgeServer<S: Scalar> {
    pub server_id: String,
    pub bandwidth_units: u32,
    pub bu_size_mhz: S,
    pub computing_units: u32,
    pub rings: Vec<NetworkRing<S>>,
}

impl<S: Scalar> EdgeServer<S> {
    pub fn ring(&self, ring_index: u32) -> Option<&NetworkRing<S>> {
        self.rings.iter().find(|r| r.ring_index == ring_index)
    }
}

/// Shared wireless environment, needed only when some ring uses Shannon mode.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(serialize = "", deserialize = ""))]
pub struct ChannelEnv<S: Scalar> {
    pub noise_spectral_density: S,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default_offload_power: Option<S>,
}

/// One ring a job's vehicle is covered by at release, with the time the
/// vehicle keeps that coverage.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(serialize = "", deserialize = ""))]
pub struct RingAccess<S: Scalar> {
    pub server_id: String,
    pub ring_index: u32,
    pub dwell_time: S,
}

/// Shape of the utility decay between the deadline and the tolerance limit.
///
/// For a completion time `t` in `(deadline, tolerance_factor * deadline]`
/// let `f = (t - deadline) / (tolerance_factor * deadline - deadline)` be
/// the fraction of the tolerance window consumed. `LinearDecreasing` maps
/// `f` to `1 - f`. `Step` holds `(time_fraction, utility_fraction)` levels
/// with ascending time fractions and non-increasing utility fractions; the
/// value at `f` is the utility fraction of the first level whose time
/// fraction is >= `f`, and 0 beyond the last level.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[serde(bound(serialize = "", deserialize = ""))]
pub enum PenaltyShape<S: Scalar> {
    LinearDecreasing,
    Step { step_levels: Vec<(S, S)> },
}

impl<S: Scalar> PenaltyShape<S> {
    /// Value of the decay on the consumed-window fraction `f` in (0, 1].
    fn value_at(&self, f: S) -> S {
        match self {
            PenaltyShape::LinearDecreasing => S::one() - f,
            PenaltyShape::Step { step_levels } => {
                for &(tf, uf) in step_levels {
                    if f <= tf {
                        return uf;
                    }
                }
                S::zero()
            }
        }
    }
}

/// A job released by a vehicle: `input_size_mb` of data to offload, a
/// deadline, a tolerance window, and a per-server processing-time profile.
///
/// `processing_times` maps a server id to the profiled processing times for
/// 1, 2, ... computing units (position `c - 1` holds the time at `c` units).
/// The map is closed: combinations not profiled simply do not exist as
/// allocation choices.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(serialize = "", deserialize = ""))]
pub struct Job<S: Scalar> {
    pub job_id: String,
    pub input_size_mb: S,
    pub deadline: S,
    pub tolerance_factor: S,
    pub full_utility: S,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offload_power: Option<S>,
    pub accessible_rings: Vec<RingAccess<S>>,
    pub processing_times: BTreeMap<String, Vec<S>>,
    pub penalty: PenaltyShape<S>,
}

impl<S: Scalar> Job<S> {
    /// Profiled processing time on `server` with `cu` computing units.
    pub fn processing_time(&self, server: &str, cu: u32) -> Result<S, ModelError> {
        self.processing_times
            .get(server)
            .and_then(|ts| ts.get(cu.checked_sub(1)? as usize).copied())
            .ok_or_else(|| ModelError::MissingProcessingTime {
                server: server.to_string(),
                cu,
            })
    }

    /// Latest completion time that still yields any utility.
    pub fn tolerance_limit(&self) -> S {
        self.tolerance_factor * self.deadline
    }
}

/// A full problem input: the topology and the jobset.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(serialize = "", deserialize = ""))]
pub struct Problem<S: Scalar> {
    pub servers: Vec<EdgeServer<S>>,
    pub jobs: Vec<Job<S>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel_env: Option<ChannelEnv<S>>,
}

impl<S: Scalar> Problem<S> {
    pub fn from_reader<R: Read>(r: R) -> Result<Self, serde_json::Error> {
        serde_json::from_reader(r)
    }

    pub fn to_writer<W: Write>(&self, w: W) -> Result<(), serde_json::Error> {
        serde_json::to_writer_pretty(w, self)
    }

    /// Map from server id to its index, for resolving string references.
    pub fn server_index(&self) -> HashMap<&str, ServerId> {
        self.servers
            .iter()
            .enumerate()
            .map(|(k, s)| (s.server_id.as_str(), ServerId(k)))
            .collect()
    }

    pub fn server(&self, id: ServerId) -> &EdgeServer<S> {
        &self.servers[id.0]
    }

    pub fn job(&self, id: JobId) -> &Job<S> {
        &self.jobs[id.0]
    }

    /// Check every structural invariant of the document. All downstream
    /// code assumes a validated problem.
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::InvalidProblem(msg));

        let mut seen_servers = BTreeSet::new();
        for server in &self.servers {
            if !seen_servers.insert(server.server_id.as_str()) {
                return bad(format!("duplicate server_id `{}`", server.server_id));
            }
            if server.bandwidth_units < 1 || server.computing_units < 1 {
                return bad(format!(
                    "server `{}` must provide at least one BU and one CU",
                    server.server_id
                ));
            }
            if server.bu_size_mhz <= S::zero() {
                return bad(format!("server `{}` has nonpositive bu_size_mhz", server.server_id));
            }
            if server.rings.is_empty() {
                return bad(format!("server `{}` has no rings", server.server_id));
            }
            let mut prev_index = None;
            for ring in &server.rings {
                if let Some(p) = prev_index {
                    if ring.ring_index <= p {
                        return bad(format!(
                            "server `{}` ring indices must be distinct and ascending",
                            server.server_id
                        ));
                    }
                }
                prev_index = Some(ring.ring_index);
                match (ring.channel_gain, ring.per_bu_rate) {
                    (Some(_), Some(_)) | (None, None) => {
                        return bad(format!(
                            "server `{}` ring {} needs exactly one of channel_gain/per_bu_rate",
                            server.server_id, ring.ring_index
                        ));
                    }
                    (Some(h), None) if h <= S::zero() => {
                        return bad(format!(
                            "server `{}` ring {} has nonpositive channel_gain",
                            server.server_id, ring.ring_index
                        ));
                    }
                    (None, Some(r)) if r <= S::zero() => {
                        return bad(format!(
                            "server `{}` ring {} has nonpositive per_bu_rate",
                            server.server_id, ring.ring_index
                        ));
                    }
                    _ => {}
                }
                if let (Some(inner), Some(outer)) = (ring.inner_radius, ring.outer_radius) {
                    if inner >= outer {
                        return bad(format!(
                            "server `{}` ring {} has inner_radius >= outer_radius",
                            server.server_id, ring.ring_index
                        ));
                    }
                }
            }
        }

        if let Some(env) = &self.channel_env {
            if env.noise_spectral_density <= S::zero() {
                return bad("channel_env.noise_spectral_density must be positive".into());
            }
            if let Some(p) = env.default_offload_power {
                if p <= S::zero() {
                    return bad("channel_env.default_offload_power must be positive".into());
                }
            }
        }

        let index = self.server_index();
        let mut seen_jobs = BTreeSet::new();
        for job in &self.jobs {
            if !seen_jobs.insert(job.job_id.as_str()) {
                return bad(format!("duplicate job_id `{}`", job.job_id));
            }
            if job.input_size_mb <= S::zero()
                || job.deadline <= S::zero()
                || job.full_utility <= S::zero()
            {
                return bad(format!(
                    "job `{}` requires positive input_size_mb, deadline and full_utility",
                    job.job_id
                ));
            }
            if job.tolerance_factor < S::one() {
                return bad(format!("job `{}` has tolerance_factor < 1", job.job_id));
            }
            if let Some(p) = job.offload_power {
                if p <= S::zero() {
                    return bad(format!("job `{}` has nonpositive offload_power", job.job_id));
                }
            }
            if job.accessible_rings.len() > self.servers.len() {
                return bad(format!(
                    "job `{}` lists more accessible rings than there are servers",
                    job.job_id
                ));
            }
            let mut touched_servers = BTreeSet::new();
            for access in &job.accessible_rings {
                let Some(&sid) = index.get(access.server_id.as_str()) else {
                    return bad(format!(
                        "job `{}` references unknown server `{}`",
                        job.job_id, access.server_id
                    ));
                };
                if !touched_servers.insert(sid) {
                    return bad(format!(
                        "job `{}` lists two rings of server `{}`",
                        job.job_id, access.server_id
                    ));
                }
                let server = self.server(sid);
                let Some(ring) = server.ring(access.ring_index) else {
                    return bad(format!(
                        "job `{}` references missing ring {} of server `{}`",
                        job.job_id, access.ring_index, access.server_id
                    ));
                };
                if access.dwell_time <= S::zero() {
                    return bad(format!("job `{}` has nonpositive dwell_time", job.job_id));
                }
                // A Shannon-mode ring is only usable with full channel data.
                if ring.channel_gain.is_some() {
                    let env = self.channel_env.as_ref().ok_or_else(|| {
                        ModelError::MissingChannel(format!(
                            "job `{}` can reach Shannon-mode ring {} of `{}` but no channel_env is given",
                            job.job_id, access.ring_index, access.server_id
                        ))
                    })?;
                    if job.offload_power.or(env.default_offload_power).is_none() {
                        return Err(ModelError::MissingChannel(format!(
                            "job `{}` has no offload_power and channel_env has no default",
                            job.job_id
                        )));
                    }
                }
            }
            for (server_id, times) in &job.processing_times {
                if !index.contains_key(server_id.as_str()) {
                    return bad(format!(
                        "job `{}` profiles unknown server `{}`",
                        job.job_id, server_id
                    ));
                }
                let mut prev: Option<S> = None;
                for &t in times {
                    if t <= S::zero() {
                        return bad(format!("job `{}` has nonpositive processing time", job.job_id));
                    }
                    if let Some(p) = prev {
                        if t > p {
                            return bad(format!(
                                "job `{}` processing times on `{}` must be non-increasing in c",
                                job.job_id, server_id
                            ));
                        }
                    }
                    prev = Some(t);
                }
            }
            if let PenaltyShape::Step { step_levels } = &job.penalty {
                let mut prev_f: Option<S> = None;
                let mut prev_u: Option<S> = None;
                for &(tf, uf) in step_levels {
                    if tf <= S::zero() || tf > S::one() || uf < S::zero() || uf > S::one() {
                        return bad(format!("job `{}` has step levels outside [0,1]", job.job_id));
                    }
                    if prev_f.is_some_and(|p| tf <= p) || prev_u.is_some_and(|p| uf > p) {
                        return bad(format!(
                            "job `{}` step levels must ascend in time and not increase in utility",
                            job.job_id
                        ));
                    }
                    prev_f = Some(tf);
                    prev_u = Some(uf);
                }
            }
        }
        Ok(())
    }
}

/// Data rate achieved by `job` on `ring` of `server` with `bu` bandwidth
/// units, in MB/s. Direct-rate rings multiply the measured per-BU rate;
/// Shannon rings evaluate `bu * bu_size_mhz * log2(1 + p*h/sigma^2)` in
/// Mbit/s and convert via [`MBIT_PER_MBYTE`].
pub fn compute_offload_rate<S: Scalar>(
    job: &Job<S>,
    server: &EdgeServer<S>,
    ring: &NetworkRing<S>,
    bu: u32,
    env: Option<&ChannelEnv<S>>,
) -> Result<S, ModelError> {
    debug_assert!(bu >= 1);
    let bu = S::from_u32(bu).expect("BU count fits the scalar");
    if let Some(per_bu) = ring.per_bu_rate {
        return Ok(bu * per_bu);
    }
    let gain = ring.channel_gain.ok_or_else(|| {
        ModelError::MissingChannel(format!(
            "ring {} of `{}` has neither per_bu_rate nor channel_gain",
            ring.ring_index, server.server_id
        ))
    })?;
    let env = env.ok_or_else(|| {
        ModelError::MissingChannel("Shannon-mode rate requested without a channel_env".into())
    })?;
    let power = job.offload_power.or(env.default_offload_power).ok_or_else(|| {
        ModelError::MissingChannel(format!(
            "job `{}` has no offload_power and channel_env has no default",
            job.job_id
        ))
    })?;
    let snr = power * gain / env.noise_spectral_density;
    let mbit_per_s = bu * server.bu_size_mhz * (S::one() + snr).log2();
    Ok(mbit_per_s / S::from_f64_c(MBIT_PER_MBYTE))
}

/// Time to upload the job's input at `rate` MB/s.
pub fn compute_offload_time<S: Scalar>(job: &Job<S>, rate: S) -> Result<S, ModelError> {
    if rate <= S::zero() {
        return Err(ModelError::NonPositiveRate(rate.to_f64_c()));
    }
    Ok(job.input_size_mb / rate)
}

/// Utility gained from `job` when it completes at `completion_time`:
/// full utility up to the deadline (inclusive), the penalty-shaped fraction
/// up to the tolerance limit, zero afterwards.
pub fn compute_utility<S: Scalar>(job: &Job<S>, completion_time: S) -> S {
    let deadline = job.deadline;
    if completion_time <= deadline {
        return job.full_utility;
    }
    let limit = job.tolerance_limit();
    if completion_time <= limit {
        let f = (completion_time - deadline) / (limit - deadline);
        job.full_utility * job.penalty.value_at(f)
    } else {
        S::zero()
    }
}

/// One fully-determined offloading choice for a job: the ring, the resource
/// amounts, and everything derived from them.
#[derive(Debug, Clone)]
pub struct AssignmentInstance<S: Scalar> {
    pub id: InstanceId,
    pub job: JobId,
    pub server: ServerId,
    pub ring_index: u32,
    pub bu_alloc: u32,
    pub cu_alloc: u32,
    pub offload_time: S,
    pub processing_time: S,
    pub completion_time: S,
    pub utility: S,
    /// bu_alloc over the server's total BUs, in (0, 1].
    pub norm_bu: S,
    /// cu_alloc over the server's total CUs, in (0, 1].
    pub norm_cu: S,
}

impl<S: Scalar> AssignmentInstance<S> {
    /// Light instances use at most half of both resource dimensions.
    pub fn is_light(&self) -> bool {
        let half = S::from_f64_c(0.5);
        self.norm_bu <= half && self.norm_cu <= half
    }

    pub fn max_norm(&self) -> S {
        self.norm_bu.max(self.norm_cu)
    }

    pub fn min_norm(&self) -> S {
        self.norm_bu.min(self.norm_cu)
    }
}

/// A set of selected instances with running feasibility bookkeeping:
/// at most one instance per job, and per-server BU/CU usage within capacity.
#[derive(Debug, Clone)]
pub struct Solution<S: Scalar> {
    selected: BTreeSet<InstanceId>,
    jobs_assigned: BTreeSet<JobId>,
    bu_used: Vec<u64>,
    cu_used: Vec<u64>,
    total_utility: S,
}

impl<S: Scalar> Solution<S> {
    pub fn empty(problem: &Problem<S>) -> Self {
        Solution {
            selected: BTreeSet::new(),
            jobs_assigned: BTreeSet::new(),
            bu_used: vec![0; problem.servers.len()],
            cu_used: vec![0; problem.servers.len()],
            total_utility: S::zero(),
        }
    }

    /// True iff adding `inst` keeps per-server usage within capacity and
    /// does not select a second instance of the same job. Panics if `inst`
    /// refers to a server this solution was not sized for.
    pub fn check_add_feasible(&self, inst: &AssignmentInstance<S>, problem: &Problem<S>) -> bool {
        assert!(
            inst.server.0 < self.bu_used.len() && inst.job.0 < problem.jobs.len(),
            "instance refers to a job or server outside this problem"
        );
        if self.jobs_assigned.contains(&inst.job) {
            return false;
        }
        let server = problem.server(inst.server);
        self.bu_used[inst.server.0] + u64::from(inst.bu_alloc) <= u64::from(server.bandwidth_units)
            && self.cu_used[inst.server.0] + u64::from(inst.cu_alloc)
                <= u64::from(server.computing_units)
    }

    /// Add an instance previously accepted by [`Self::check_add_feasible`].
    pub fn add(&mut self, inst: &AssignmentInstance<S>) {
        let fresh = self.selected.insert(inst.id) && self.jobs_assigned.insert(inst.job);
        assert!(fresh, "instance or job already selected");
        self.bu_used[inst.server.0] += u64::from(inst.bu_alloc);
        self.cu_used[inst.server.0] += u64::from(inst.cu_alloc);
        self.total_utility += inst.utility;
    }

    /// Build a solution from a set of instance ids, adding in ascending id
    /// order so the accumulated utility is canonical for a given set.
    pub fn from_ids<I>(
        ids: I,
        instances: &[AssignmentInstance<S>],
        problem: &Problem<S>,
    ) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = InstanceId>,
    {
        let mut solution = Solution::empty(problem);
        let ordered: BTreeSet<InstanceId> = ids.into_iter().collect();
        for id in ordered {
            let inst = &instances[id.0];
            if !solution.check_add_feasible(inst, problem) {
                return Err(ModelError::InfeasibleSolution(format!(
                    "instance {} conflicts with the selection built so far",
                    id.0
                )));
            }
            solution.add(inst);
        }
        Ok(solution)
    }

    /// Re-validate from scratch against the pool and problem: membership,
    /// one instance per job, capacity sums, and the utility total.
    pub fn validate(
        &self,
        instances: &[AssignmentInstance<S>],
        problem: &Problem<S>,
    ) -> Result<(), ModelError> {
        let mut bu = vec![0u64; problem.servers.len()];
        let mut cu = vec![0u64; problem.servers.len()];
        let mut jobs = BTreeSet::new();
        let mut total = S::zero();
        for &id in &self.selected {
            let inst = instances.get(id.0).ok_or_else(|| {
                ModelError::InfeasibleSolution(format!("instance {} is not in the pool", id.0))
            })?;
            if !jobs.insert(inst.job) {
                return Err(ModelError::InfeasibleSolution(format!(
                    "job {} has two selected instances",
                    inst.job.0
                )));
            }
            bu[inst.server.0] += u64::from(inst.bu_alloc);
            cu[inst.server.0] += u64::from(inst.cu_alloc);
            total += inst.utility;
        }
        for (k, server) in problem.servers.iter().enumerate() {
            if bu[k] > u64::from(server.bandwidth_units) {
                return Err(ModelError::InfeasibleSolution(format!(
                    "server `{}` over its bandwidth capacity",
                    server.server_id
                )));
            }
            if cu[k] > u64::from(server.computing_units) {
                return Err(ModelError::InfeasibleSolution(format!(
                    "server `{}` over its computing capacity",
                    server.server_id
                )));
            }
            if bu[k] != self.bu_used[k] || cu[k] != self.cu_used[k] {
                return Err(ModelError::InfeasibleSolution(format!(
                    "bookkeeping mismatch on server `{}`",
                    server.server_id
                )));
            }
        }
        let drift = (total - self.total_utility).abs();
        let tolerance = S::from_f64_c(1e-9) * S::one().max(total.abs());
        if drift > tolerance {
            return Err(ModelError::InfeasibleSolution(
                "stored total utility does not match the selected instances".into(),
            ));
        }
        Ok(())
    }

    pub fn selected(&self) -> impl Iterator<Item = InstanceId> + '_ {
        self.selected.iter().copied()
    }

    pub fn contains(&self, id: InstanceId) -> bool {
        self.selected.contains(&id)
    }

    pub fn assigns_job(&self, job: JobId) -> bool {
        self.jobs_assigned.contains(&job)
    }

    pub fn total_utility(&self) -> S {
        self.total_utility
    }

    pub fn bu_used(&self, server: ServerId) -> u64 {
        self.bu_used[server.0]
    }

    pub fn cu_used(&self, server: ServerId) -> u64 {
        self.cu_used[server.0]
    }

    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn direct_ring(index: u32, rate: f64) -> NetworkRing<f64> {
        NetworkRing {
            ring_index: index,
            channel_gain: None,
            per_bu_rate: Some(rate),
            inner_radius: None,
            outer_radius: None,
        }
    }

    fn shannon_ring(index: u32, gain: f64) -> NetworkRing<f64> {
        NetworkRing {
            ring_index: index,
            channel_gain: Some(gain),
            per_bu_rate: None,
            inner_radius: None,
            outer_radius: None,
        }
    }

    fn server(id: &str, bus: u32, cus: u32, rings: Vec<NetworkRing<f64>>) -> EdgeServer<f64> {
        EdgeServer {
            server_id: id.into(),
            bandwidth_units: bus,
            bu_size_mhz: 2.0,
            computing_units: cus,
            rings,
        }
    }

    fn job(id: &str, theta: f64, deadline: f64, gamma: f64, utility: f64) -> Job<f64> {
        Job {
            job_id: id.into(),
            input_size_mb: theta,
            deadline,
            tolerance_factor: gamma,
            full_utility: utility,
            offload_power: None,
            accessible_rings: vec![],
            processing_times: BTreeMap::new(),
            penalty: PenaltyShape::LinearDecreasing,
        }
    }

    fn instance(
        id: usize,
        j: usize,
        k: usize,
        bu: u32,
        cu: u32,
        caps: (u32, u32),
        utility: f64,
    ) -> AssignmentInstance<f64> {
        AssignmentInstance {
            id: InstanceId(id),
            job: JobId(j),
            server: ServerId(k),
            ring_index: 1,
            bu_alloc: bu,
            cu_alloc: cu,
            offload_time: 0.1,
            processing_time: 0.1,
            completion_time: 0.2,
            utility,
            norm_bu: f64::from(bu) / f64::from(caps.0),
            norm_cu: f64::from(cu) / f64::from(caps.1),
        }
    }

    #[test]
    fn direct_rate_scales_with_bu() {
        let s = server("es1", 20, 25, vec![direct_ring(1, 1.65)]);
        let j = job("j1", 0.33, 1.0, 1.0, 40.0);
        let rate = compute_offload_rate(&j, &s, &s.rings[0], 2, None).unwrap();
        assert!((rate - 3.30).abs() < 1e-12);
    }

    #[test]
    fn rate_is_homogeneous_in_bu() {
        let env = ChannelEnv {
            noise_spectral_density: 1e-9,
            default_offload_power: Some(0.5),
        };
        let shannon = server("es1", 20, 25, vec![shannon_ring(1, 3e-9)]);
        let direct = server("es2", 20, 25, vec![direct_ring(1, 1.15)]);
        let j = job("j1", 0.33, 1.0, 1.0, 40.0);
        for bu in [1u32, 2, 5, 13] {
            let r1 = compute_offload_rate(&j, &shannon, &shannon.rings[0], bu, Some(&env)).unwrap();
            let rb = compute_offload_rate(&j, &shannon, &shannon.rings[0], 1, Some(&env)).unwrap();
            assert!((r1 - rb * f64::from(bu)).abs() < 1e-12 * r1.abs());
            let d1 = compute_offload_rate(&j, &direct, &direct.rings[0], bu, None).unwrap();
            let db = compute_offload_rate(&j, &direct, &direct.rings[0], 1, None).unwrap();
            assert!((d1 - db * f64::from(bu)).abs() < 1e-12 * d1.abs());
        }
    }

    #[test]
    fn shannon_rate_matches_hand_evaluation() {
        // p*h/sigma^2 = 1, beta = 2 MHz, one BU: 2 * log2(2) = 2 Mbit/s.
        let env = ChannelEnv {
            noise_spectral_density: 2.0,
            default_offload_power: None,
        };
        let s = server("es1", 20, 25, vec![shannon_ring(1, 1.0)]);
        let mut j = job("j1", 0.33, 1.0, 1.0, 40.0);
        j.offload_power = Some(2.0);
        let rate = compute_offload_rate(&j, &s, &s.rings[0], 1, Some(&env)).unwrap();
        assert!((rate - 2.0 / MBIT_PER_MBYTE).abs() < 1e-12);
    }

    #[test]
    fn shannon_without_channel_env_is_an_error() {
        let s = server("es1", 20, 25, vec![shannon_ring(1, 1.0)]);
        let j = job("j1", 0.33, 1.0, 1.0, 40.0);
        let err = compute_offload_rate(&j, &s, &s.rings[0], 1, None).unwrap_err();
        assert!(matches!(err, ModelError::MissingChannel(_)));
    }

    #[test]
    fn offload_time_is_size_over_rate() {
        let j = job("j1", 0.33, 1.0, 1.0, 40.0);
        assert!((compute_offload_time(&j, 3.30).unwrap() - 0.1).abs() < 1e-12);

        let zero = job("j0", 0.63, 1.0, 1.0, 40.0);
        // A zero-size input is rejected at validation but the formula itself
        // degrades gracefully.
        let mut zero = zero;
        zero.input_size_mb = 0.0;
        assert_eq!(compute_offload_time(&zero, 1.0).unwrap(), 0.0);

        let slow = job("j2", 0.63, 1.0, 1.0, 40.0);
        let t = compute_offload_time(&slow, 1.15).unwrap();
        assert!((t - 0.63 / 1.15).abs() < 1e-12);
        assert!((t - 0.5478).abs() < 1e-4);

        assert!(matches!(
            compute_offload_time(&j, 0.0),
            Err(ModelError::NonPositiveRate(_))
        ));
    }

    #[test]
    fn utility_follows_the_three_cases() {
        let j = job("j1", 0.33, 1.0, 2.0, 40.0);
        assert_eq!(compute_utility(&j, 0.8), 40.0);
        assert_eq!(compute_utility(&j, 1.0), 40.0); // boundary keeps full utility
        assert!((compute_utility(&j, 1.5) - 20.0).abs() < 1e-12);
        assert_eq!(compute_utility(&j, 2.5), 0.0);
    }

    #[test]
    fn hard_deadline_utility_is_two_valued() {
        let j = job("j1", 0.33, 1.0, 1.0, 40.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let t: f64 = rng.gen_range(0.0..3.0);
            let u = compute_utility(&j, t);
            if t <= 1.0 {
                assert_eq!(u, 40.0);
            } else {
                assert_eq!(u, 0.0);
            }
        }
    }

    #[test]
    fn utility_is_non_increasing_in_completion_time() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let gamma = rng.gen_range(1.0..2.5);
            let mut j = job("j", 0.2, rng.gen_range(0.2..2.0), gamma, rng.gen_range(5.0..60.0));
            if rng.gen_bool(0.3) {
                j.penalty = PenaltyShape::Step {
                    step_levels: vec![(0.4, 0.8), (0.9, 0.3)],
                };
            }
            let mut prev = f64::INFINITY;
            let mut t = 0.0;
            while t < 3.0 * j.deadline {
                let u = compute_utility(&j, t);
                assert!(u <= prev + 1e-12, "utility increased at t={t}");
                prev = u;
                t += 0.01 * j.deadline;
            }
        }
    }

    #[test]
    fn step_penalty_levels_are_honored() {
        let mut j = job("j1", 0.33, 1.0, 2.0, 40.0);
        j.penalty = PenaltyShape::Step {
            step_levels: vec![(0.5, 0.8), (1.0, 0.25)],
        };
        assert!((compute_utility(&j, 1.3) - 32.0).abs() < 1e-12);
        assert!((compute_utility(&j, 1.8) - 10.0).abs() < 1e-12);
        assert_eq!(compute_utility(&j, 2.1), 0.0);
    }

    #[test]
    fn check_add_feasible_guards_capacity_and_job_uniqueness() {
        let problem = Problem {
            servers: vec![server("es1", 20, 25, vec![direct_ring(1, 1.65)])],
            jobs: vec![
                job("j1", 0.33, 1.0, 1.0, 40.0),
                job("j2", 0.33, 1.0, 1.0, 30.0),
            ],
            channel_env: None,
        };
        let mut solution = Solution::empty(&problem);

        let first = instance(0, 0, 0, 19, 1, (20, 25), 40.0);
        assert!(solution.check_add_feasible(&first, &problem));
        solution.add(&first);

        // 19 of 20 BUs used: a 2-BU instance no longer fits.
        let too_big = instance(1, 1, 0, 2, 1, (20, 25), 30.0);
        assert!(!solution.check_add_feasible(&too_big, &problem));

        // Same job, resources free: still rejected.
        let same_job = instance(2, 0, 0, 1, 1, (20, 25), 40.0);
        assert!(!solution.check_add_feasible(&same_job, &problem));

        let fits = instance(3, 1, 0, 1, 1, (20, 25), 30.0);
        assert!(solution.check_add_feasible(&fits, &problem));
    }

    #[test]
    fn accepted_adds_keep_the_solution_valid() {
        let problem = Problem {
            servers: vec![
                server("es1", 6, 4, vec![direct_ring(1, 1.65)]),
                server("es2", 3, 8, vec![direct_ring(1, 1.15)]),
            ],
            jobs: (0..6).map(|i| job(&format!("j{i}"), 0.3, 1.0, 1.0, 10.0)).collect(),
            channel_env: None,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pool: Vec<_> = (0..40)
            .map(|i| {
                let k = rng.gen_range(0..2usize);
                let caps = if k == 0 { (6, 4) } else { (3, 8) };
                instance(
                    i,
                    rng.gen_range(0..6),
                    k,
                    rng.gen_range(1..=caps.0),
                    rng.gen_range(1..=caps.1),
                    caps,
                    rng.gen_range(1.0..40.0),
                )
            })
            .collect();
        let mut solution = Solution::empty(&problem);
        for inst in &pool {
            if solution.check_add_feasible(inst, &problem) {
                solution.add(inst);
                solution.validate(&pool, &problem).unwrap();
            }
        }
        assert!(!solution.is_empty());
    }

    #[test]
    fn problem_json_round_trips() {
        let mut j = job("j1", 0.33, 1.0, 2.0, 40.0);
        j.accessible_rings.push(RingAccess {
            server_id: "es1".into(),
            ring_index: 1,
            dwell_time: 12.0,
        });
        j.processing_times.insert("es1".into(), vec![0.8, 0.5, 0.4]);
        let problem = Problem {
            servers: vec![server("es1", 20, 25, vec![direct_ring(1, 1.65)])],
            jobs: vec![j],
            channel_env: None,
        };
        problem.validate().unwrap();
        let text = serde_json::to_string(&problem).unwrap();
        let back: Problem<f64> = serde_json::from_str(&text).unwrap();
        back.validate().unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }

    #[test]
    fn validate_rejects_malformed_documents() {
        let mut p = Problem::<f64> {
            servers: vec![server("es1", 20, 25, vec![direct_ring(1, 1.65)])],
            jobs: vec![job("j1", 0.33, 1.0, 1.0, 40.0)],
            channel_env: None,
        };
        p.validate().unwrap();

        p.jobs[0].tolerance_factor = 0.9;
        assert!(p.validate().is_err());
        p.jobs[0].tolerance_factor = 1.0;

        p.jobs[0].accessible_rings.push(RingAccess {
            server_id: "nope".into(),
            ring_index: 1,
            dwell_time: 1.0,
        });
        assert!(p.validate().is_err());
        p.jobs[0].accessible_rings.clear();

        p.jobs[0]
            .processing_times
            .insert("es1".into(), vec![0.5, 0.8]);
        assert!(p.validate().is_err());
        p.jobs[0].processing_times.insert("es1".into(), vec![0.8, 0.5]);
        p.validate().unwrap();

        p.servers[0].rings[0].per_bu_rate = None;
        assert!(p.validate().is_err());
    }
}
