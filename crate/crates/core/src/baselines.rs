//! Heuristic baselines for the instance-selection problem: a density
//! greedy, an alternating per-job/per-server improvement loop, and a
//! best-response game. None carries a worst-case guarantee; they exist as
//! comparison points.

use crate::enumerate::InstancePool;
use crate::model::{InstanceId, JobId, ModelError, Problem, ServerId, Solution};
use crate::scalar::Scalar;

/// Greedy by utility density: instances sorted by
/// `utility / (norm_bu * norm_cu)` descending are tried once each. The
/// density rewards high utility per combined resource share.
pub fn greedy<S: Scalar>(
    pool: &InstancePool<S>,
    problem: &Problem<S>,
) -> Result<Solution<S>, ModelError> {
    let density = |id: InstanceId| {
        let inst = pool.get(id);
        inst.utility / (inst.norm_bu * inst.norm_cu)
    };
    let mut order: Vec<InstanceId> = pool.instances().iter().map(|i| i.id).collect();
    order.sort_by(|&a, &b| {
        density(b)
            .partial_cmp(&density(a))
            .expect("densities are finite")
            .then(
                pool.get(b)
                    .utility
                    .partial_cmp(&pool.get(a).utility)
                    .expect("utilities are finite"),
            )
            .then(a.0.cmp(&b.0))
    });
    let mut solution = Solution::empty(problem);
    for id in order {
        let inst = pool.get(id);
        if solution.check_add_feasible(inst, problem) {
            solution.add(inst);
        }
    }
    Solution::from_ids(solution.selected().collect::<Vec<_>>(), pool.instances(), problem)
}

/// Default refinement rounds for [`iterative`].
pub const ITERATIVE_DEFAULT_ROUNDS: usize = 20;

/// Alternating heuristic that decouples the two halves of the decision.
///
/// Each round first lets every job re-pick its placement (server and ring)
/// while keeping its resource amounts when possible, then lets every
/// server rebuild its own allocation from scratch: jobs currently on it
/// are re-admitted at minimal footprint in descending utility order, after
/// which single-unit BU/CU upgrades are applied by largest utility gain.
/// A server keeps its rebuilt allocation only when it strictly beats the
/// old one. Rounds repeat until a full round yields no strict improvement
/// or `max_rounds` is hit.
pub fn iterative<S: Scalar>(
    pool: &InstancePool<S>,
    problem: &Problem<S>,
    max_rounds: usize,
) -> Result<Solution<S>, ModelError> {
    // assign[j] is job j's current instance, if any.
    let mut assign: Vec<Option<InstanceId>> = vec![None; problem.jobs.len()];

    let total_of = |assign: &[Option<InstanceId>]| -> S {
        assign
            .iter()
            .flatten()
            .map(|&id| pool.get(id).utility)
            .sum()
    };

    // Jobs in descending order of their best obtainable utility; fixed
    // across rounds so the pass order is deterministic.
    let mut job_order: Vec<JobId> = (0..problem.jobs.len())
        .map(JobId)
        .filter(|&j| !pool.by_job(j).is_empty())
        .collect();
    let best_of = |j: JobId| {
        pool.by_job(j)
            .iter()
            .map(|&id| pool.get(id).utility)
            .fold(S::zero(), S::max)
    };
    job_order.sort_by(|&a, &b| {
        best_of(b)
            .partial_cmp(&best_of(a))
            .expect("utilities are finite")
            .then(a.0.cmp(&b.0))
    });

    let mut round_total = S::zero();
    for _ in 0..max_rounds {
        // Phase 1: placement. Each job frees its own resources and picks
        // the best instance that fits into what everyone else leaves over.
        for &j in &job_order {
            let mut bu_used = vec![0u64; problem.servers.len()];
            let mut cu_used = vec![0u64; problem.servers.len()];
            for (other, slot) in assign.iter().enumerate() {
                if other == j.0 {
                    continue;
                }
                if let Some(id) = slot {
                    let inst = pool.get(*id);
                    bu_used[inst.server.0] += u64::from(inst.bu_alloc);
                    cu_used[inst.server.0] += u64::from(inst.cu_alloc);
                }
            }
            let current = assign[j.0];
            let keep_amounts = current.map(|id| {
                let inst = pool.get(id);
                (inst.bu_alloc, inst.cu_alloc)
            });
            let mut best: Option<InstanceId> = None;
            for &cand in pool.by_job(j) {
                let inst = pool.get(cand);
                // With a placement already chosen, only migrations that
                // carry the same resource amounts are considered here;
                // amounts are the servers' business in phase 2.
                if let Some((b, c)) = keep_amounts {
                    if (inst.bu_alloc, inst.cu_alloc) != (b, c) {
                        continue;
                    }
                }
                let server = problem.server(inst.server);
                if bu_used[inst.server.0] + u64::from(inst.bu_alloc)
                    > u64::from(server.bandwidth_units)
                    || cu_used[inst.server.0] + u64::from(inst.cu_alloc)
                        > u64::from(server.computing_units)
                {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some(b) => {
                        inst.utility > pool.get(b).utility
                            || (inst.utility == pool.get(b).utility && cand.0 < b.0)
                    }
                };
                if better {
                    best = Some(cand);
                }
            }
            if let Some(b) = best {
                let keep = current
                    .map(|c| pool.get(c).utility >= pool.get(b).utility)
                    .unwrap_or(false);
                if !keep {
                    assign[j.0] = Some(b);
                }
            }
        }

        // Phase 2: per-server allocation rebuild.
        for k in 0..problem.servers.len() {
            let sid = ServerId(k);
            let server = problem.server(sid);
            let resident: Vec<JobId> = {
                let mut r: Vec<JobId> = assign
                    .iter()
                    .enumerate()
                    .filter_map(|(j, slot)| {
                        slot.and_then(|id| (pool.get(id).server == sid).then_some(JobId(j)))
                    })
                    .collect();
                r.sort_by(|&a, &b| {
                    let ua = pool.get(assign[a.0].expect("resident")).utility;
                    let ub = pool.get(assign[b.0].expect("resident")).utility;
                    ub.partial_cmp(&ua).expect("utilities are finite").then(a.0.cmp(&b.0))
                });
                r
            };
            if resident.is_empty() {
                continue;
            }
            let old_total: S = resident
                .iter()
                .map(|&j| pool.get(assign[j.0].expect("resident")).utility)
                .sum();

            // Re-admit every resident at its smallest footprint on this
            // server, then upgrade one unit at a time.
            let mut rebuilt: Vec<(JobId, InstanceId)> = Vec::new();
            let mut bu_free = u64::from(server.bandwidth_units);
            let mut cu_free = u64::from(server.computing_units);
            for &j in &resident {
                let mut minimal: Option<InstanceId> = None;
                for &cand in pool.by_job(j) {
                    let inst = pool.get(cand);
                    if inst.server != sid {
                        continue;
                    }
                    if u64::from(inst.bu_alloc) > bu_free || u64::from(inst.cu_alloc) > cu_free {
                        continue;
                    }
                    let better = match minimal {
                        None => true,
                        Some(m) => {
                            let cur = pool.get(m);
                            let key = (
                                inst.bu_alloc + inst.cu_alloc,
                                inst.bu_alloc,
                                inst.cu_alloc,
                                cand.0,
                            );
                            let mkey =
                                (cur.bu_alloc + cur.cu_alloc, cur.bu_alloc, cur.cu_alloc, m.0);
                            key < mkey
                        }
                    };
                    if better {
                        minimal = Some(cand);
                    }
                }
                if let Some(m) = minimal {
                    let inst = pool.get(m);
                    bu_free -= u64::from(inst.bu_alloc);
                    cu_free -= u64::from(inst.cu_alloc);
                    rebuilt.push((j, m));
                }
            }
            // Unit upgrades: replace one job's instance by one that uses
            // exactly one more BU or one more CU, largest gain first.
            loop {
                let mut best_gain = S::zero();
                let mut best_move: Option<(usize, InstanceId)> = None;
                for (slot, &(j, cur_id)) in rebuilt.iter().enumerate() {
                    let cur = pool.get(cur_id);
                    for &cand in pool.by_job(j) {
                        let inst = pool.get(cand);
                        if inst.server != sid {
                            continue;
                        }
                        let up_bu = inst.bu_alloc == cur.bu_alloc + 1
                            && inst.cu_alloc == cur.cu_alloc
                            && bu_free >= 1;
                        let up_cu = inst.cu_alloc == cur.cu_alloc + 1
                            && inst.bu_alloc == cur.bu_alloc
                            && cu_free >= 1;
                        if !up_bu && !up_cu {
                            continue;
                        }
                        let gain = inst.utility - cur.utility;
                        if gain > best_gain {
                            best_gain = gain;
                            best_move = Some((slot, cand));
                        }
                    }
                }
                let Some((slot, cand)) = best_move else { break };
                let old = pool.get(rebuilt[slot].1);
                let new = pool.get(cand);
                bu_free -= u64::from(new.bu_alloc - old.bu_alloc);
                cu_free -= u64::from(new.cu_alloc - old.cu_alloc);
                rebuilt[slot].1 = cand;
            }

            let new_total: S = rebuilt.iter().map(|&(_, id)| pool.get(id).utility).sum();
            if new_total > old_total {
                for &j in &resident {
                    assign[j.0] = None;
                }
                for &(j, id) in &rebuilt {
                    assign[j.0] = Some(id);
                }
            }
        }

        let new_round_total = total_of(&assign);
        if new_round_total <= round_total {
            break;
        }
        round_total = new_round_total;
    }

    Solution::from_ids(
        assign.iter().flatten().copied().collect::<Vec<_>>(),
        pool.instances(),
        problem,
    )
}

/// Best-response game: starting from nothing, in each round every possible
/// single-job move (adopt a new instance or switch to another) is scored
/// by its total-utility increment and the largest strictly positive one is
/// applied. The process stops at a stable point or after `max_rounds`.
pub fn game<S: Scalar>(
    pool: &InstancePool<S>,
    problem: &Problem<S>,
    max_rounds: usize,
) -> Result<Solution<S>, ModelError> {
    let mut assign: Vec<Option<InstanceId>> = vec![None; problem.jobs.len()];
    let mut bu_used = vec![0u64; problem.servers.len()];
    let mut cu_used = vec![0u64; problem.servers.len()];

    for _ in 0..max_rounds {
        let mut best_gain = S::zero();
        let mut best_move: Option<(JobId, InstanceId)> = None;
        for j in (0..problem.jobs.len()).map(JobId) {
            let current = assign[j.0];
            let (cur_utility, freed_bu, freed_cu, cur_server) = match current {
                Some(id) => {
                    let inst = pool.get(id);
                    (
                        inst.utility,
                        u64::from(inst.bu_alloc),
                        u64::from(inst.cu_alloc),
                        Some(inst.server),
                    )
                }
                None => (S::zero(), 0, 0, None),
            };
            for &cand in pool.by_job(j) {
                if current == Some(cand) {
                    continue;
                }
                let inst = pool.get(cand);
                let server = problem.server(inst.server);
                let mut bu_avail = u64::from(server.bandwidth_units) - bu_used[inst.server.0];
                let mut cu_avail = u64::from(server.computing_units) - cu_used[inst.server.0];
                if cur_server == Some(inst.server) {
                    bu_avail += freed_bu;
                    cu_avail += freed_cu;
                }
                if u64::from(inst.bu_alloc) > bu_avail || u64::from(inst.cu_alloc) > cu_avail {
                    continue;
                }
                let gain = inst.utility - cur_utility;
                let better = gain > best_gain
                    || (gain == best_gain
                        && best_gain > S::zero()
                        && match best_move {
                            Some((bj, bid)) => (j.0, cand.0) < (bj.0, bid.0),
                            None => true,
                        });
                if better {
                    best_gain = gain;
                    best_move = Some((j, cand));
                }
            }
        }
        let Some((j, cand)) = best_move else { break };
        if let Some(old) = assign[j.0] {
            let inst = pool.get(old);
            bu_used[inst.server.0] -= u64::from(inst.bu_alloc);
            cu_used[inst.server.0] -= u64::from(inst.cu_alloc);
        }
        let inst = pool.get(cand);
        bu_used[inst.server.0] += u64::from(inst.bu_alloc);
        cu_used[inst.server.0] += u64::from(inst.cu_alloc);
        assign[j.0] = Some(cand);
    }

    Solution::from_ids(
        assign.iter().flatten().copied().collect::<Vec<_>>(),
        pool.instances(),
        problem,
    )
}

/// Round cap for [`game`] scaled to the jobset, mirroring its use in the
/// experiment harness.
pub fn game_default_rounds(n_jobs: usize) -> usize {
    10 * n_jobs.max(1)
}
