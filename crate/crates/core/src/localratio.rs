//! Local-ratio solver for the instance-selection problem.
//!
//! [`idassign`] repeatedly picks the live instance with the smallest
//! maximum normalized demand (preferring light instances, which use at most
//! half of both resources), splits the weight function around that pivot,
//! drops everything whose residual weight vanishes, and finally replays the
//! pivots innermost-first, keeping each one that still fits. The selection
//! it returns is guaranteed to collect at least 1/6 of the optimal utility.

use crate::enumerate::InstancePool;
use crate::model::{InstanceId, ModelError, Problem, Solution};
use crate::scalar::Scalar;

/// Residual weights at or below this are treated as exhausted. Absorbs the
/// cancellation noise of repeated subtraction; utilities of practical
/// problems sit far above it.
pub const RESIDUAL_EPS: f64 = 1e-12;

/// One peel of the weight function, recorded when an observer asks for it.
/// `live` lists the instance ids still alive at the start of the layer;
/// `weights_before`/`weights_after` run parallel to it.
#[derive(Debug, Clone)]
pub struct WeightLayer<S: Scalar> {
    pub layer_index: usize,
    pub pivot: InstanceId,
    pub pivot_weight: S,
    pub live: Vec<InstanceId>,
    pub weights_before: Vec<S>,
    pub weights_after: Vec<S>,
}

/// Choose the pivot among the live instances: the smallest maximum
/// normalized demand, restricted to light instances whenever any is alive.
/// Ties fall to the smaller minimum demand, then the larger weight, then
/// the smaller id, so the choice is deterministic.
pub fn select_pivot<S: Scalar>(
    live: &[InstanceId],
    weights: &[S],
    pool: &InstancePool<S>,
) -> Option<InstanceId> {
    debug_assert_eq!(live.len(), weights.len());
    let any_light = live.iter().any(|&id| pool.is_light(id));
    let mut best: Option<(usize, InstanceId)> = None;
    for (pos, &id) in live.iter().enumerate() {
        if any_light && !pool.is_light(id) {
            continue;
        }
        let better = match best {
            None => true,
            Some((bpos, bid)) => {
                let cand = pool.get(id);
                let inc = pool.get(bid);
                let key = (cand.max_norm(), cand.min_norm());
                let bkey = (inc.max_norm(), inc.min_norm());
                if key != bkey {
                    key < bkey
                } else {
                    weights[pos] > weights[bpos]
                }
            }
        };
        if better {
            best = Some((pos, id));
        }
    }
    best.map(|(_, id)| id)
}

/// Split `weights` around `pivot` into the pivot-aligned part and the
/// residual. The aligned part gives every live instance of the pivot's job
/// the full pivot weight, every live instance sharing only the pivot's
/// server its weight scaled by the instance's total normalized demand, and
/// everything else zero. Returns `(aligned, residual)` parallel to `live`.
pub fn decompose<S: Scalar>(
    weights: &[S],
    pivot: InstanceId,
    live: &[InstanceId],
    pool: &InstancePool<S>,
) -> (Vec<S>, Vec<S>) {
    debug_assert_eq!(live.len(), weights.len());
    let pivot_pos = live
        .iter()
        .position(|&id| id == pivot)
        .expect("pivot must be live");
    let wp = weights[pivot_pos];
    let p = pool.get(pivot);
    let mut aligned = Vec::with_capacity(live.len());
    for &id in live {
        let inst = pool.get(id);
        let a = if inst.job == p.job {
            wp
        } else if inst.server == p.server {
            wp * (inst.norm_bu + inst.norm_cu)
        } else {
            S::zero()
        };
        aligned.push(a);
    }
    let residual: Vec<S> = weights
        .iter()
        .zip(&aligned)
        .map(|(&w, &a)| w - a)
        .collect();
    (aligned, residual)
}

/// Forward/backward local-ratio pass shared by the public entry points.
fn run<S: Scalar>(
    pool: &InstancePool<S>,
    problem: &Problem<S>,
    mut observer: Option<&mut dyn FnMut(WeightLayer<S>)>,
) -> Result<Solution<S>, ModelError> {
    let eps = S::from_f64_c(RESIDUAL_EPS);

    // Live set in ascending id order; `weights` runs parallel to it.
    let mut live: Vec<InstanceId> = Vec::with_capacity(pool.len());
    let mut weights: Vec<S> = Vec::with_capacity(pool.len());
    for inst in pool.instances() {
        if inst.utility > eps {
            live.push(inst.id);
            weights.push(inst.utility);
        }
    }

    let mut pivots: Vec<InstanceId> = Vec::new();
    while let Some(pivot) = select_pivot(&live, &weights, pool) {
        debug_assert!(
            pool.is_light(pivot) || live.iter().all(|&id| !pool.is_light(id)),
            "a heavy pivot implies no light instance is alive"
        );
        let pivot_pos = live.iter().position(|&id| id == pivot).expect("pivot is live");
        let wp = weights[pivot_pos];
        debug_assert!(wp > S::zero());

        let layer_snapshot = observer.as_ref().map(|_| (live.clone(), weights.clone()));

        // Subtract the pivot-aligned weight component in place.
        let p = pool.get(pivot);
        for (pos, &id) in live.iter().enumerate() {
            let inst = pool.get(id);
            if inst.job == p.job {
                weights[pos] -= wp;
            } else if inst.server == p.server {
                weights[pos] -= wp * (inst.norm_bu + inst.norm_cu);
            }
        }
        // The pivot's own residual is exactly zero by construction.
        weights[pivot_pos] = S::zero();

        if let Some(obs) = observer.as_deref_mut() {
            let (live_before, weights_before) = layer_snapshot.expect("snapshot exists");
            obs(WeightLayer {
                layer_index: pivots.len(),
                pivot,
                pivot_weight: wp,
                live: live_before,
                weights_before,
                weights_after: weights.clone(),
            });
        }

        pivots.push(pivot);

        // Drop exhausted instances; retain keeps ascending id order. The
        // two retains see the same values in the same order.
        let mut pos = 0;
        live.retain(|_| {
            let kept = weights[pos] > eps;
            pos += 1;
            kept
        });
        weights.retain(|&w| w > eps);

        assert!(pivots.len() <= pool.len(), "each layer removes its pivot");
    }

    // Backward pass: innermost (last) pivot first, keep whatever fits.
    let mut solution = Solution::empty(problem);
    for &id in pivots.iter().rev() {
        let inst = pool.get(id);
        if solution.check_add_feasible(inst, problem) {
            solution.add(inst);
        }
    }
    Solution::from_ids(solution.selected().collect::<Vec<_>>(), pool.instances(), problem)
}

/// Local-ratio selection with a 1/6 worst-case guarantee.
pub fn idassign<S: Scalar>(
    pool: &InstancePool<S>,
    problem: &Problem<S>,
) -> Result<Solution<S>, ModelError> {
    run(pool, problem, None)
}

/// Same as [`idassign`] but reports every weight layer to `observer` as it
/// is peeled, for decomposition audits and tracing.
pub fn idassign_observed<S: Scalar>(
    pool: &InstancePool<S>,
    problem: &Problem<S>,
    observer: &mut dyn FnMut(WeightLayer<S>),
) -> Result<Solution<S>, ModelError> {
    run(pool, problem, Some(observer))
}
