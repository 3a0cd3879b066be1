//! Random problem generators shared by the integration tests. Deadlines
//! are calibrated against each job's fastest possible completion so the
//! feasible-instance pools stay small but rarely empty.

#![allow(dead_code)]

use std::collections::BTreeMap;

use edgeassign::model::{ChannelEnv, EdgeServer, Job, NetworkRing, PenaltyShape, RingAccess};
use edgeassign::{enumerate_instances, InstancePool, Problem};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Problems inside the small family: at most 3 servers, 8 jobs, and 6
/// units per resource, all rings rate-based.
pub fn small_problem(rng: &mut ChaCha8Rng) -> Problem<f64> {
    build_problem(rng, 3, 8, 6, 6, false)
}

/// A broader family for feasibility sweeps: more jobs and units, step
/// penalties, and a share of gain-based (channel model) problems.
pub fn medium_problem(rng: &mut ChaCha8Rng) -> Problem<f64> {
    build_problem(rng, 4, 10, 8, 8, true)
}

/// Rejection-sample a small problem whose raw instance pool is nonempty
/// and within `max_pool`, so subset enumeration stays affordable.
pub fn capped_pool(
    rng: &mut ChaCha8Rng,
    max_pool: usize,
) -> (Problem<f64>, InstancePool<f64>) {
    for _ in 0..20_000 {
        let problem = small_problem(rng);
        let pool = enumerate_instances(&problem).expect("generated problems validate");
        if !pool.is_empty() && pool.len() <= max_pool {
            return (problem, pool);
        }
    }
    panic!("no problem with pool size <= {max_pool} in 20000 draws");
}

fn build_problem(
    rng: &mut ChaCha8Rng,
    max_servers: usize,
    max_jobs: usize,
    max_b: u32,
    max_c: u32,
    allow_gain_mode: bool,
) -> Problem<f64> {
    let gain_mode = allow_gain_mode && rng.gen_bool(0.3);
    let n_servers = rng.gen_range(1..=max_servers);
    let mut servers = Vec::with_capacity(n_servers);
    for k in 0..n_servers {
        let n_rings = rng.gen_range(1..=2u32);
        let rings = (1..=n_rings)
            .map(|r| {
                if gain_mode {
                    NetworkRing {
                        ring_index: r,
                        channel_gain: Some(rng.gen_range(1.0..15.0)),
                        per_bu_rate: None,
                        inner_radius: None,
                        outer_radius: None,
                    }
                } else {
                    NetworkRing {
                        ring_index: r,
                        channel_gain: None,
                        per_bu_rate: Some([1.65, 1.15][(r as usize - 1) % 2]),
                        inner_radius: None,
                        outer_radius: None,
                    }
                }
            })
            .collect();
        servers.push(EdgeServer {
            server_id: format!("es{k}"),
            bandwidth_units: rng.gen_range(1..=max_b),
            bu_size_mhz: 2.0,
            computing_units: rng.gen_range(1..=max_c),
            rings,
        });
    }

    let n_jobs = rng.gen_range(1..=max_jobs);
    let mut jobs = Vec::with_capacity(n_jobs);
    for j in 0..n_jobs {
        let input_size_mb = rng.gen_range(0.05..0.6);
        let offload_power = if gain_mode && rng.gen_bool(0.3) {
            Some(rng.gen_range(0.5..2.0))
        } else {
            None
        };

        let mut accessed: Vec<usize> = (0..n_servers).filter(|_| rng.gen_bool(0.75)).collect();
        if accessed.is_empty() {
            accessed.push(rng.gen_range(0..n_servers));
        }
        let mut accessible_rings = Vec::with_capacity(accessed.len());
        let mut processing_times = BTreeMap::new();
        // Fastest completion over all accesses calibrates the deadline.
        let mut best_completion = f64::INFINITY;
        for &k in &accessed {
            let server = &servers[k];
            let ring = &server.rings[rng.gen_range(0..server.rings.len())];
            accessible_rings.push(RingAccess {
                server_id: server.server_id.clone(),
                ring_index: ring.ring_index,
                dwell_time: rng.gen_range(0.3..20.0),
            });
            let base = rng.gen_range(0.05..0.9);
            let alpha = rng.gen_range(0.55..1.0);
            let times: Vec<f64> = (1..=server.computing_units)
                .map(|c| base / (c as f64).powf(alpha))
                .collect();
            let rate_one_bu = match ring.per_bu_rate {
                Some(rate) => rate,
                None => {
                    let snr: f64 = offload_power.unwrap_or(1.0) * ring.channel_gain.unwrap();
                    server.bu_size_mhz * (1.0 + snr).log2() / 8.0
                }
            };
            let t_offload = input_size_mb / (server.bandwidth_units as f64 * rate_one_bu);
            best_completion = best_completion.min(t_offload + times.last().unwrap());
            processing_times.insert(server.server_id.clone(), times);
        }

        let tolerance_factor = if rng.gen_bool(0.3) {
            1.0
        } else {
            rng.gen_range(1.2..2.2)
        };
        let penalty = if rng.gen_bool(0.15) {
            PenaltyShape::Step {
                step_levels: vec![(0.5, 0.7), (1.0, 0.3)],
            }
        } else {
            PenaltyShape::LinearDecreasing
        };
        jobs.push(Job {
            job_id: format!("j{j}"),
            input_size_mb,
            deadline: best_completion * rng.gen_range(0.7..1.8),
            tolerance_factor,
            full_utility: rng.gen_range(20.0..60.0),
            offload_power,
            accessible_rings,
            processing_times,
            penalty,
        });
    }

    let channel_env = gain_mode.then_some(ChannelEnv {
        noise_spectral_density: 1.0,
        default_offload_power: Some(1.0),
    });
    let problem = Problem { servers, jobs, channel_env };
    problem.validate().expect("generated problems validate");
    problem
}
