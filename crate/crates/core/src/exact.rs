//! Exact solvers for the instance-selection problem.
//!
//! [`exhaustive_opt`] enumerates every subset of a small pool and exists to
//! cross-check everything else. [`exact_opt`] is a depth-first branch and
//! bound over jobs with two admissible upper bounds; without a timeout it
//! returns a certified optimum, with one it may return its best incumbent.

use std::collections::BTreeSet;
use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::enumerate::InstancePool;
use crate::model::{InstanceId, JobId, ModelError, Problem, Solution};
use crate::scalar::Scalar;

/// Largest pool [`exhaustive_opt`] accepts; 2^25 subsets is the ceiling of
/// what a test suite can afford.
pub const EXHAUSTIVE_MAX_POOL: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    /// The search space was exhausted; the solution is optimal.
    Optimal,
    /// The time budget ran out; the solution is the best incumbent found.
    TimeoutIncumbent,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BnBConfig {
    /// Wall-clock budget in seconds; `None` never times out.
    pub timeout_s: Option<f64>,
    /// Node budget; exceeded it also degrades the result to an incumbent.
    pub node_limit: Option<u64>,
}

impl Default for BnBConfig {
    fn default() -> Self {
        BnBConfig {
            timeout_s: Some(600.0),
            node_limit: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExactResult<S: Scalar> {
    pub solution: Solution<S>,
    pub status: SolveStatus,
    pub nodes: u64,
}

/// Brute-force optimum by subset enumeration, for pools of at most
/// [`EXHAUSTIVE_MAX_POOL`] instances. Kept deliberately independent of
/// [`Solution`]'s incremental bookkeeping so the two can check each other.
pub fn exhaustive_opt<S: Scalar>(
    pool: &InstancePool<S>,
    problem: &Problem<S>,
) -> Result<Solution<S>, ModelError> {
    let n = pool.len();
    if n > EXHAUSTIVE_MAX_POOL {
        return Err(ModelError::InvalidProblem(format!(
            "exhaustive search is capped at {EXHAUSTIVE_MAX_POOL} instances, pool has {n}"
        )));
    }
    let instances = pool.instances();
    let mut best_utility = S::zero();
    let mut best: Vec<InstanceId> = Vec::new();

    // Depth-first include/exclude in id order with raw capacity arrays.
    let mut bu = vec![0u64; problem.servers.len()];
    let mut cu = vec![0u64; problem.servers.len()];
    let mut job_taken = vec![false; problem.jobs.len()];
    let mut chosen: Vec<InstanceId> = Vec::new();

    // State lives in parallel arrays on purpose: this oracle must not share
    // code with Solution's bookkeeping, which it exists to cross-check.
    #[allow(clippy::too_many_arguments)]
    fn dfs<S: Scalar>(
        pos: usize,
        acc: S,
        instances: &[crate::model::AssignmentInstance<S>],
        problem: &Problem<S>,
        bu: &mut [u64],
        cu: &mut [u64],
        job_taken: &mut [bool],
        chosen: &mut Vec<InstanceId>,
        best_utility: &mut S,
        best: &mut Vec<InstanceId>,
    ) {
        if pos == instances.len() {
            if acc > *best_utility {
                *best_utility = acc;
                *best = chosen.clone();
            }
            return;
        }
        let inst = &instances[pos];
        let k = inst.server.0;
        let fits = !job_taken[inst.job.0]
            && bu[k] + u64::from(inst.bu_alloc) <= u64::from(problem.server(inst.server).bandwidth_units)
            && cu[k] + u64::from(inst.cu_alloc) <= u64::from(problem.server(inst.server).computing_units);
        if fits {
            bu[k] += u64::from(inst.bu_alloc);
            cu[k] += u64::from(inst.cu_alloc);
            job_taken[inst.job.0] = true;
            chosen.push(inst.id);
            dfs(
                pos + 1,
                acc + inst.utility,
                instances,
                problem,
                bu,
                cu,
                job_taken,
                chosen,
                best_utility,
                best,
            );
            chosen.pop();
            job_taken[inst.job.0] = false;
            bu[k] -= u64::from(inst.bu_alloc);
            cu[k] -= u64::from(inst.cu_alloc);
        }
        dfs(
            pos + 1,
            acc,
            instances,
            problem,
            bu,
            cu,
            job_taken,
            chosen,
            best_utility,
            best,
        );
    }

    dfs(
        0,
        S::zero(),
        instances,
        problem,
        &mut bu,
        &mut cu,
        &mut job_taken,
        &mut chosen,
        &mut best_utility,
        &mut best,
    );

    Solution::from_ids(best, instances, problem)
}

/// Per-job branching data: the job's instances sorted by descending
/// utility, plus suffix maxima over the branch order for the first bound.
struct BranchPlan<S: Scalar> {
    /// Jobs that own at least one instance, in branch order.
    jobs: Vec<JobId>,
    /// `options[d]` are the instances of `jobs[d]`, utility descending.
    options: Vec<Vec<InstanceId>>,
    /// `suffix_best[d]` = sum over branch levels >= d of the level's best
    /// utility; index `jobs.len()` holds 0.
    suffix_best: Vec<S>,
    /// Per server: instance ids sorted by utility / BU descending.
    density_bu: Vec<Vec<InstanceId>>,
    /// Per server: instance ids sorted by utility / CU descending.
    density_cu: Vec<Vec<InstanceId>>,
    /// Branch level of each job, `usize::MAX` for jobs with no instances.
    level_of_job: Vec<usize>,
}

fn branch_plan<S: Scalar>(pool: &InstancePool<S>, problem: &Problem<S>) -> BranchPlan<S> {
    let mut jobs: Vec<JobId> = (0..problem.jobs.len())
        .map(JobId)
        .filter(|&j| !pool.by_job(j).is_empty())
        .collect();
    let best_of = |j: JobId| {
        pool.by_job(j)
            .iter()
            .map(|&id| pool.get(id).utility)
            .fold(S::zero(), S::max)
    };
    // Branch on high-stakes jobs first; ties by job index keep it stable.
    jobs.sort_by(|&a, &b| {
        best_of(b)
            .partial_cmp(&best_of(a))
            .expect("utilities are finite")
            .then(a.0.cmp(&b.0))
    });

    let options: Vec<Vec<InstanceId>> = jobs
        .iter()
        .map(|&j| {
            let mut ids = pool.by_job(j).to_vec();
            ids.sort_by(|&x, &y| {
                pool.get(y)
                    .utility
                    .partial_cmp(&pool.get(x).utility)
                    .expect("utilities are finite")
                    .then(x.0.cmp(&y.0))
            });
            ids
        })
        .collect();

    let mut suffix_best = vec![S::zero(); jobs.len() + 1];
    for d in (0..jobs.len()).rev() {
        suffix_best[d] = suffix_best[d + 1] + pool.get(options[d][0]).utility;
    }

    let sort_by_density = |per_unit: &dyn Fn(InstanceId) -> S| -> Vec<Vec<InstanceId>> {
        (0..problem.servers.len())
            .map(|k| {
                let mut ids = pool.by_server(crate::model::ServerId(k)).to_vec();
                ids.sort_by(|&x, &y| {
                    per_unit(y)
                        .partial_cmp(&per_unit(x))
                        .expect("densities are finite")
                        .then(x.0.cmp(&y.0))
                });
                ids
            })
            .collect()
    };
    let density_bu = sort_by_density(&|id| {
        let i = pool.get(id);
        i.utility / S::from_u32(i.bu_alloc).expect("BU fits scalar")
    });
    let density_cu = sort_by_density(&|id| {
        let i = pool.get(id);
        i.utility / S::from_u32(i.cu_alloc).expect("CU fits scalar")
    });

    let mut level_of_job = vec![usize::MAX; problem.jobs.len()];
    for (d, &j) in jobs.iter().enumerate() {
        level_of_job[j.0] = d;
    }

    BranchPlan {
        jobs,
        options,
        suffix_best,
        density_bu,
        density_cu,
        level_of_job,
    }
}

/// Fractional-knapsack value of the remaining instances on one server under
/// the remaining capacity of one resource dimension. An admissible
/// overestimate of what that server can still contribute.
fn knapsack_bound<S: Scalar>(
    order: &[InstanceId],
    pool: &InstancePool<S>,
    amount_of: &dyn Fn(InstanceId) -> u32,
    mut capacity: S,
    decided_below: usize,
    plan: &BranchPlan<S>,
    job_taken: &[bool],
) -> S {
    let mut value = S::zero();
    for &id in order {
        if capacity <= S::zero() {
            break;
        }
        let inst = pool.get(id);
        // Jobs already branched on (taken or skipped) cannot contribute.
        let level = plan.level_of_job[inst.job.0];
        if level < decided_below || job_taken[inst.job.0] {
            continue;
        }
        let amount = S::from_u32(amount_of(id)).expect("amount fits scalar");
        if amount <= capacity {
            value += inst.utility;
            capacity -= amount;
        } else {
            value += inst.utility * capacity / amount;
            break;
        }
    }
    value
}

/// Upper bound on the utility still obtainable below branch level `depth`.
/// Exposed to the module tests, which check admissibility against the
/// brute-force optimum of the remaining subproblem.
#[allow(clippy::too_many_arguments)]
fn remaining_bound<S: Scalar>(
    depth: usize,
    pool: &InstancePool<S>,
    problem: &Problem<S>,
    plan: &BranchPlan<S>,
    bu_left: &[u32],
    cu_left: &[u32],
    job_taken: &[bool],
    incumbent_gap: S,
) -> S {
    let ub1 = plan.suffix_best[depth];
    if ub1 <= incumbent_gap {
        return ub1;
    }
    let mut ub2 = S::zero();
    for k in 0..problem.servers.len() {
        let by_bu = knapsack_bound(
            &plan.density_bu[k],
            pool,
            &|id| pool.get(id).bu_alloc,
            S::from_u32(bu_left[k]).expect("capacity fits scalar"),
            depth,
            plan,
            job_taken,
        );
        let by_cu = knapsack_bound(
            &plan.density_cu[k],
            pool,
            &|id| pool.get(id).cu_alloc,
            S::from_u32(cu_left[k]).expect("capacity fits scalar"),
            depth,
            plan,
            job_taken,
        );
        ub2 += by_bu.min(by_cu);
    }
    ub1.min(ub2)
}

/// Exact optimum by branch and bound over jobs. At every level the job
/// either takes one of its instances (utility descending) or is skipped.
/// The incumbent starts at the greedy solution, so even a truncated run
/// returns at least that. Pruning compares an admissible bound, padded by
/// one part in 1e12 to absorb accumulation roundoff, against the incumbent.
pub fn exact_opt<S: Scalar>(
    pool: &InstancePool<S>,
    problem: &Problem<S>,
    config: &BnBConfig,
) -> Result<ExactResult<S>, ModelError> {
    let plan = branch_plan(pool, problem);
    let started = Instant::now();
    let mut nodes: u64 = 0;
    let mut out_of_budget = false;

    let mut bu_left: Vec<u32> = problem.servers.iter().map(|s| s.bandwidth_units).collect();
    let mut cu_left: Vec<u32> = problem.servers.iter().map(|s| s.computing_units).collect();
    let mut job_taken = vec![false; problem.jobs.len()];
    let mut chosen: Vec<InstanceId> = Vec::new();
    // Warm-started incumbent: a timed-out search is then never worse than
    // the cheapest heuristic, and pruning bites from the first node.
    let warm = crate::baselines::greedy(pool, problem)?;
    let mut best: Vec<InstanceId> = warm.selected().collect();
    let mut best_utility = warm.total_utility();

    struct Ctx<'a, S: Scalar> {
        pool: &'a InstancePool<S>,
        problem: &'a Problem<S>,
        plan: &'a BranchPlan<S>,
        config: &'a BnBConfig,
        started: Instant,
        nodes: &'a mut u64,
        out_of_budget: &'a mut bool,
        bu_left: &'a mut Vec<u32>,
        cu_left: &'a mut Vec<u32>,
        job_taken: &'a mut Vec<bool>,
        chosen: &'a mut Vec<InstanceId>,
        best: &'a mut Vec<InstanceId>,
        best_utility: &'a mut S,
    }

    fn budget_exceeded<S: Scalar>(ctx: &mut Ctx<'_, S>) -> bool {
        if *ctx.out_of_budget {
            return true;
        }
        if let Some(limit) = ctx.config.node_limit {
            if *ctx.nodes > limit {
                *ctx.out_of_budget = true;
                return true;
            }
        }
        // The clock is queried sparsely; Instant::elapsed is cheap but not free.
        if (*ctx.nodes).is_multiple_of(1024) {
            if let Some(budget) = ctx.config.timeout_s {
                if ctx.started.elapsed().as_secs_f64() > budget {
                    *ctx.out_of_budget = true;
                    return true;
                }
            }
        }
        false
    }

    fn dfs<S: Scalar>(depth: usize, acc: S, ctx: &mut Ctx<'_, S>) {
        *ctx.nodes += 1;
        if budget_exceeded(ctx) {
            return;
        }
        if acc > *ctx.best_utility {
            *ctx.best_utility = acc;
            *ctx.best = ctx.chosen.clone();
        }
        if depth == ctx.plan.jobs.len() {
            return;
        }
        let gap = *ctx.best_utility - acc;
        let bound = remaining_bound(
            depth,
            ctx.pool,
            ctx.problem,
            ctx.plan,
            ctx.bu_left,
            ctx.cu_left,
            ctx.job_taken,
            gap,
        );
        // Padding keeps the prune admissible in the face of float roundoff.
        let padded = bound * S::from_f64_c(1.0 + 1e-12) + S::from_f64_c(1e-12);
        if acc + padded <= *ctx.best_utility {
            return;
        }

        let job = ctx.plan.jobs[depth];
        for &id in &ctx.plan.options[depth] {
            let inst = ctx.pool.get(id);
            let k = inst.server.0;
            if inst.bu_alloc > ctx.bu_left[k] || inst.cu_alloc > ctx.cu_left[k] {
                continue;
            }
            ctx.bu_left[k] -= inst.bu_alloc;
            ctx.cu_left[k] -= inst.cu_alloc;
            ctx.job_taken[job.0] = true;
            ctx.chosen.push(id);
            dfs(depth + 1, acc + inst.utility, ctx);
            ctx.chosen.pop();
            ctx.job_taken[job.0] = false;
            ctx.bu_left[k] += inst.bu_alloc;
            ctx.cu_left[k] += inst.cu_alloc;
            if *ctx.out_of_budget {
                return;
            }
        }
        // Skip branch: the job stays unassigned.
        ctx.job_taken[job.0] = true;
        dfs(depth + 1, acc, ctx);
        ctx.job_taken[job.0] = false;
    }

    let mut ctx = Ctx {
        pool,
        problem,
        plan: &plan,
        config,
        started,
        nodes: &mut nodes,
        out_of_budget: &mut out_of_budget,
        bu_left: &mut bu_left,
        cu_left: &mut cu_left,
        job_taken: &mut job_taken,
        chosen: &mut chosen,
        best: &mut best,
        best_utility: &mut best_utility,
    };
    dfs(0, S::zero(), &mut ctx);

    let status = if out_of_budget {
        SolveStatus::TimeoutIncumbent
    } else {
        SolveStatus::Optimal
    };
    Ok(ExactResult {
        solution: Solution::from_ids(best, pool.instances(), problem)?,
        status,
        nodes,
    })
}

/// Write the selection problem in a line-oriented LP text format, one
/// constraint per line:
///
/// ```text
/// Maximize
///  obj: 40 x0 + 30 x1
/// Subject To
///  bu_es1: 2 x0 + 1 x1 <= 20
///  cu_es1: 1 x0 + 3 x1 <= 25
///  job_j1: x0 + x1 <= 1
/// Binary
///  x0 x1
/// End
/// ```
///
/// `x<i>` is instance id `i`. Servers contribute one `bu_` and one `cu_`
/// row each, jobs with at least one instance contribute one `job_` row.
pub fn write_lp<S: Scalar, W: Write>(
    w: &mut W,
    pool: &InstancePool<S>,
    problem: &Problem<S>,
) -> std::io::Result<()> {
    writeln!(w, "Maximize")?;
    let terms: Vec<String> = pool
        .instances()
        .iter()
        .map(|i| format!("{} x{}", i.utility, i.id.0))
        .collect();
    writeln!(w, " obj: {}", terms.join(" + "))?;
    writeln!(w, "Subject To")?;
    for (k, server) in problem.servers.iter().enumerate() {
        let ids = pool.by_server(crate::model::ServerId(k));
        if ids.is_empty() {
            continue;
        }
        let bu_terms: Vec<String> = ids
            .iter()
            .map(|&id| format!("{} x{}", pool.get(id).bu_alloc, id.0))
            .collect();
        writeln!(
            w,
            " bu_{}: {} <= {}",
            server.server_id,
            bu_terms.join(" + "),
            server.bandwidth_units
        )?;
        let cu_terms: Vec<String> = ids
            .iter()
            .map(|&id| format!("{} x{}", pool.get(id).cu_alloc, id.0))
            .collect();
        writeln!(
            w,
            " cu_{}: {} <= {}",
            server.server_id,
            cu_terms.join(" + "),
            server.computing_units
        )?;
    }
    for (j, job) in problem.jobs.iter().enumerate() {
        let ids = pool.by_job(JobId(j));
        if ids.is_empty() {
            continue;
        }
        let terms: Vec<String> = ids.iter().map(|&id| format!("x{}", id.0)).collect();
        writeln!(w, " job_{}: {} <= 1", job.job_id, terms.join(" + "))?;
    }
    writeln!(w, "Binary")?;
    let vars: Vec<String> = pool.instances().iter().map(|i| format!("x{}", i.id.0)).collect();
    writeln!(w, " {}", vars.join(" "))?;
    writeln!(w, "End")
}

/// Selected ids of a solution as a plain set, for test comparisons.
pub fn selected_set<S: Scalar>(solution: &Solution<S>) -> BTreeSet<usize> {
    solution.selected().map(|id| id.0).collect()
}
