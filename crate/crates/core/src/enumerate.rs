//! Enumeration of feasible assignment instances.
//!
//! For every job, every reachable server ring, and every (BU, CU) amount
//! pair, an instance is materialized when the job would finish within both
//! its tolerance limit and the vehicle's dwell time and would earn positive
//! utility. The resulting pool is the ground set every solver works on.

use std::collections::HashMap;

use crate::model::{
    compute_offload_rate, compute_offload_time, compute_utility, AssignmentInstance, InstanceId,
    JobId, ModelError, Problem, ServerId,
};
use crate::scalar::Scalar;

/// The enumerated instances plus the per-job / per-server indexes the
/// solvers need. Instance ids equal positions in `instances`.
#[derive(Debug, Clone)]
pub struct InstancePool<S: Scalar> {
    instances: Vec<AssignmentInstance<S>>,
    by_job: Vec<Vec<InstanceId>>,
    by_server: Vec<Vec<InstanceId>>,
    light: Vec<bool>,
}

impl<S: Scalar> InstancePool<S> {
    /// Index a list of instances, reassigning ids to positions.
    pub fn from_instances(
        mut instances: Vec<AssignmentInstance<S>>,
        problem: &Problem<S>,
    ) -> Self {
        let mut by_job = vec![Vec::new(); problem.jobs.len()];
        let mut by_server = vec![Vec::new(); problem.servers.len()];
        let mut light = Vec::with_capacity(instances.len());
        for (pos, inst) in instances.iter_mut().enumerate() {
            inst.id = InstanceId(pos);
            by_job[inst.job.0].push(inst.id);
            by_server[inst.server.0].push(inst.id);
            light.push(inst.is_light());
        }
        InstancePool {
            instances,
            by_job,
            by_server,
            light,
        }
    }

    pub fn get(&self, id: InstanceId) -> &AssignmentInstance<S> {
        &self.instances[id.0]
    }

    pub fn instances(&self) -> &[AssignmentInstance<S>] {
        &self.instances
    }

    /// All instances of one job, in enumeration order.
    pub fn by_job(&self, job: JobId) -> &[InstanceId] {
        &self.by_job[job.0]
    }

    /// All instances placed on one server, in enumeration order.
    pub fn by_server(&self, server: ServerId) -> &[InstanceId] {
        &self.by_server[server.0]
    }

    pub fn is_light(&self, id: InstanceId) -> bool {
        self.light[id.0]
    }

    pub fn iter_light(&self) -> impl Iterator<Item = &AssignmentInstance<S>> {
        self.instances.iter().filter(|i| self.light[i.id.0])
    }

    pub fn iter_heavy(&self) -> impl Iterator<Item = &AssignmentInstance<S>> {
        self.instances.iter().filter(|i| !self.light[i.id.0])
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }
}

/// Build the full pool of feasible instances for a validated problem.
///
/// Enumeration order is deterministic: jobs in input order, a job's ring
/// accesses by (server id, ring index), BU amounts ascending, CU amounts
/// ascending over the profiled entries. An instance survives when its
/// completion time fits `min(tolerance limit, dwell time)` and its utility
/// is positive.
pub fn enumerate_instances<S: Scalar>(
    problem: &Problem<S>,
) -> Result<InstancePool<S>, ModelError> {
    problem.validate()?;
    let index = problem.server_index();
    let mut instances = Vec::new();
    for (j, job) in problem.jobs.iter().enumerate() {
        let mut accesses: Vec<_> = job.accessible_rings.iter().collect();
        accesses.sort_by(|a, b| {
            (a.server_id.as_str(), a.ring_index).cmp(&(b.server_id.as_str(), b.ring_index))
        });
        for access in accesses {
            let sid = index[access.server_id.as_str()];
            let server = problem.server(sid);
            let ring = server
                .ring(access.ring_index)
                .expect("validated access points at an existing ring");
            let Some(times) = job.processing_times.get(&server.server_id) else {
                continue;
            };
            let deadline_cap = job.tolerance_limit().min(access.dwell_time);
            for bu in 1..=server.bandwidth_units {
                let rate =
                    compute_offload_rate(job, server, ring, bu, problem.channel_env.as_ref())?;
                let offload_time = compute_offload_time(job, rate)?;
                // Offload time shrinks as BUs grow; an infeasible amount
                // here says nothing about larger ones.
                if offload_time > deadline_cap {
                    continue;
                }
                let max_cu = (times.len() as u32).min(server.computing_units);
                for cu in 1..=max_cu {
                    let processing_time = times[(cu - 1) as usize];
                    let completion_time = offload_time + processing_time;
                    if completion_time > deadline_cap {
                        continue;
                    }
                    let utility = compute_utility(job, completion_time);
                    if utility <= S::zero() {
                        continue;
                    }
                    instances.push(AssignmentInstance {
                        id: InstanceId(instances.len()),
                        job: JobId(j),
                        server: sid,
                        ring_index: access.ring_index,
                        bu_alloc: bu,
                        cu_alloc: cu,
                        offload_time,
                        processing_time,
                        completion_time,
                        utility,
                        norm_bu: S::from_u32(bu).expect("BU fits scalar")
                            / S::from_u32(server.bandwidth_units).expect("capacity fits scalar"),
                        norm_cu: S::from_u32(cu).expect("CU fits scalar")
                            / S::from_u32(server.computing_units).expect("capacity fits scalar"),
                    });
                }
            }
        }
    }
    Ok(InstancePool::from_instances(instances, problem))
}

/// Remove instances that are dominated within their (job, server) group:
/// another instance uses no more of either resource and earns at least as
/// much utility, strictly better in at least one of the three. Survivors
/// keep their relative order and receive fresh ids.
///
/// Each group occupies distinct cells of the server's (BU, CU) grid, so a
/// running prefix maximum over that grid finds every dominator without
/// pairwise comparison.
pub fn dominance_prune<S: Scalar>(pool: InstancePool<S>, problem: &Problem<S>) -> InstancePool<S> {
    let instances = pool.instances;
    let mut keep = vec![true; instances.len()];
    let mut groups: HashMap<(JobId, ServerId), Vec<usize>> = HashMap::new();
    for (i, inst) in instances.iter().enumerate() {
        groups.entry((inst.job, inst.server)).or_default().push(i);
    }
    for ((_, server), members) in groups {
        if members.len() < 2 {
            continue;
        }
        let bmax = problem.servers[server.0].bandwidth_units as usize;
        let cmax = problem.servers[server.0].computing_units as usize;
        // prefix[b][c]: best utility among the group's cells within the
        // rectangle (1..=b, 1..=c); row and column 0 stay empty.
        let mut prefix: Vec<Vec<Option<S>>> = vec![vec![None; cmax + 1]; bmax + 1];
        for &i in &members {
            let inst = &instances[i];
            let cell = &mut prefix[inst.bu_alloc as usize][inst.cu_alloc as usize];
            debug_assert!(cell.is_none(), "one instance per (bu, cu) cell");
            *cell = Some(inst.utility);
        }
        for b in 1..=bmax {
            for c in 1..=cmax {
                let neighbors = merge_max(prefix[b - 1][c], prefix[b][c - 1]);
                prefix[b][c] = merge_max(prefix[b][c], neighbors);
            }
        }
        for &i in &members {
            let inst = &instances[i];
            let b = inst.bu_alloc as usize;
            let c = inst.cu_alloc as usize;
            // The two neighbor rectangles cover everything using no more
            // of either resource, except the instance's own cell.
            if let Some(best) = merge_max(prefix[b - 1][c], prefix[b][c - 1]) {
                if best >= inst.utility {
                    keep[i] = false;
                }
            }
        }
    }
    let survivors: Vec<_> = instances
        .into_iter()
        .zip(keep)
        .filter_map(|(inst, k)| k.then_some(inst))
        .collect();
    InstancePool::from_instances(survivors, problem)
}

fn merge_max<S: Scalar>(a: Option<S>, b: Option<S>) -> Option<S> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.max(y)),
        (x, None) => x,
        (None, y) => y,
    }
}
