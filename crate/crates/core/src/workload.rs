//! Workload synthesis: random problems shaped like an urban vehicular
//! deployment. A grid of edge servers with annular coverage rings, vehicles
//! moving through it (either synthetic constant-velocity traffic or a
//! replayed position trace), and a jobset whose aggregate resource appetite
//! is steered by two utilization knobs. Per-job resource demands are drawn
//! with [`randfixedsum`] so the aggregate is hit exactly while each job's
//! demand stays inside the configured bounds.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::PathBuf;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    EdgeServer, Job, ModelError, NetworkRing, PenaltyShape, Problem, RingAccess,
};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("invalid workload config: {0}")]
    Config(String),
    #[error("infeasible workload: {0}")]
    Infeasible(String),
    #[error("trace error: {0}")]
    Trace(String),
    #[error("processing profile error: {0}")]
    Profile(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Derive an independent stream seed from a base seed, with the avalanche
/// finalizer of splitmix64 so neighboring streams are uncorrelated.
pub fn mix_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Guards the 0/0 corner of the transition table.
const TINY: f64 = f64::MIN_POSITIVE;

/// Draw a vector of `n` values, each in `[lo, hi]`, summing to `total`,
/// uniformly over that polytope.
///
/// The construction walks the simplex decomposition of the polytope with a
/// transition table built from its (relative) volumes, then randomly
/// permutes the coordinates. All randomness is drawn as `f64` so a given
/// rng stream yields the same vector for every scalar type. The sum is
/// exact up to accumulated rounding; the bounds are enforced exactly.
pub fn randfixedsum<S: Scalar, R: Rng + ?Sized>(
    n: usize,
    total: f64,
    lo: f64,
    hi: f64,
    rng: &mut R,
) -> Result<Vec<S>, WorkloadError> {
    if n == 0 {
        return Err(WorkloadError::Config("randfixedsum needs n >= 1".into()));
    }
    if !(lo.is_finite() && hi.is_finite() && total.is_finite()) || lo > hi {
        return Err(WorkloadError::Config(format!(
            "randfixedsum bounds are malformed: lo {lo}, hi {hi}, total {total}"
        )));
    }
    let nf = n as f64;
    let span = (hi - lo).max(1.0);
    let slack = 1e-9 * span * nf;
    if total < nf * lo - slack || total > nf * hi + slack {
        return Err(WorkloadError::Infeasible(format!(
            "sum {total} cannot be split into {n} values within [{lo}, {hi}]"
        )));
    }
    let total = total.clamp(nf * lo, nf * hi);
    if hi == lo {
        return Ok(vec![S::from_f64_c(lo); n]);
    }
    if n == 1 {
        return Ok(vec![S::from_f64_c(total)]);
    }

    // Work in the unit cube: values in [0,1] summing to s in [0,n].
    let s_unit = (total - nf * lo) / (hi - lo);
    let k = (s_unit.floor() as usize).min(n - 1);
    let s = s_unit.clamp(k as f64, (k + 1) as f64);

    // s1[m] and s2[m] (1-based) are the distances of s to the lattice
    // points below and above; s1[m] + s2[n - i + m] == i throughout.
    let mut s1 = vec![0.0; n + 1];
    let mut s2 = vec![0.0; n + 1];
    for m in 1..=n {
        s1[m] = s - (k as f64) + (m as f64 - 1.0);
        s2[m] = (k + n - m) as f64 + 1.0 - s;
    }

    // Transition table t[i][j]: probability that the step revealing the
    // next coordinate consumes an integer unit of the remaining sum, given
    // i + 1 coordinates remain in lattice state j. Rows and columns are
    // 1-based to match the recurrence; index 0 is padding.
    let mut t = vec![vec![0.0f64; n + 1]; n];
    let mut w_prev = vec![0.0f64; n + 2];
    let mut w_cur = vec![0.0f64; n + 2];
    // The seed is an arbitrary large scale; only ratios of w survive.
    w_prev[2] = f64::MAX;
    for i in 2..=n {
        let fi = i as f64;
        for j in 1..=i {
            // Dividing before multiplying keeps the products representable:
            // s1, s2 <= i, so the factors stay at most 1.
            let tmp1 = w_prev[j + 1] * (s1[j] / fi);
            let tmp2 = w_prev[j] * (s2[n - i + j] / fi);
            w_cur[j + 1] = tmp1 + tmp2;
            let tmp3 = w_cur[j + 1] + TINY;
            t[i - 1][j] = if s2[n - i + j] > s1[j] {
                tmp2 / tmp3
            } else {
                1.0 - tmp1 / tmp3
            };
        }
        std::mem::swap(&mut w_prev, &mut w_cur);
    }

    // Walk the table backwards, peeling one coordinate per step.
    let mut x = vec![0.0f64; n + 1];
    let mut s_run = s;
    let mut j = k + 1;
    let mut sm = 0.0f64;
    let mut pr = 1.0f64;
    for i in (1..=n - 1).rev() {
        let rt: f64 = rng.gen();
        let rs: f64 = rng.gen();
        let e = rt <= t[i][j];
        let sx = rs.powf(1.0 / i as f64);
        sm += (1.0 - sx) * pr * s_run / (i as f64 + 1.0);
        pr *= sx;
        x[n - i] = sm + if e { pr } else { 0.0 };
        if e {
            s_run -= 1.0;
            j = j.saturating_sub(1).max(1);
        }
    }
    x[n] = sm + pr * s_run;

    // Uniform random permutation restores exchangeability.
    for m in (2..=n).rev() {
        let pick = rng.gen_range(0..m) + 1;
        x.swap(m, pick);
    }

    Ok(x[1..=n]
        .iter()
        .map(|&v| S::from_f64_c((lo + (hi - lo) * v).clamp(lo, hi)))
        .collect())
}

/// Application processing profile: time on a reference GPU at one
/// computing unit, and how it shrinks as units are added.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AppProfile {
    pub app_id: String,
    pub base_seconds: f64,
    /// Exponent of the speedup; time at c units is `base / c^exponent`.
    pub scaling_exponent: f64,
}

/// Nine built-in profiles spanning short reflex tasks to heavy perception
/// pipelines, with imperfect-to-linear scaling.
pub fn builtin_app_profiles() -> Vec<AppProfile> {
    let table: [(f64, f64); 9] = [
        (0.05, 0.90),
        (0.08, 0.85),
        (0.12, 1.00),
        (0.16, 0.75),
        (0.20, 0.95),
        (0.26, 0.80),
        (0.33, 1.00),
        (0.41, 0.85),
        (0.50, 0.90),
    ];
    table
        .iter()
        .enumerate()
        .map(|(i, &(base_seconds, scaling_exponent))| AppProfile {
            app_id: format!("app-{}", i + 1),
            base_seconds,
            scaling_exponent,
        })
        .collect()
}

/// Processing times for `profile` on a GPU of relative speed `gpu_factor`,
/// densely for 1..=`max_cu` units. Strictly decreasing in the unit count.
pub fn synth_processing_table<S: Scalar>(
    profile: &AppProfile,
    gpu_factor: f64,
    max_cu: u32,
) -> Vec<S> {
    (1..=max_cu)
        .map(|c| {
            S::from_f64_c(
                profile.base_seconds * gpu_factor / f64::from(c).powf(profile.scaling_exponent),
            )
        })
        .collect()
}

/// Measured processing-time table loaded from CSV with columns
/// `app_id,gpu_id,computing_units,seconds`. Each (app, gpu) pair must
/// cover computing units 1..=L contiguously for some L.
#[derive(Debug, Clone)]
pub struct ProcessingProfileTable {
    entries: BTreeMap<(String, String), Vec<f64>>,
    app_ids: Vec<String>,
    gpu_ids: Vec<String>,
}

impl ProcessingProfileTable {
    pub fn from_reader<R: Read>(r: R) -> Result<Self, WorkloadError> {
        #[derive(Deserialize)]
        struct Row {
            app_id: String,
            gpu_id: String,
            computing_units: u32,
            seconds: f64,
        }
        let mut raw: BTreeMap<(String, String), Vec<(u32, f64)>> = BTreeMap::new();
        let mut reader = csv::Reader::from_reader(r);
        for record in reader.deserialize::<Row>() {
            let row = record.map_err(|e| {
                WorkloadError::Profile(format!("malformed profile row: {e}"))
            })?;
            if row.computing_units < 1 || row.seconds <= 0.0 {
                return Err(WorkloadError::Profile(format!(
                    "profile row for ({}, {}) needs computing_units >= 1 and seconds > 0",
                    row.app_id, row.gpu_id
                )));
            }
            raw.entry((row.app_id, row.gpu_id))
                .or_default()
                .push((row.computing_units, row.seconds));
        }
        let mut entries = BTreeMap::new();
        for ((app, gpu), mut rows) in raw {
            rows.sort_by_key(|&(c, _)| c);
            let mut times = Vec::with_capacity(rows.len());
            for (pos, &(c, secs)) in rows.iter().enumerate() {
                if c as usize != pos + 1 {
                    return Err(WorkloadError::Profile(format!(
                        "profile for ({app}, {gpu}) must cover computing units 1..=L, found {c} at position {}",
                        pos + 1
                    )));
                }
                times.push(secs);
            }
            entries.insert((app, gpu), times);
        }
        if entries.is_empty() {
            return Err(WorkloadError::Profile("profile table is empty".into()));
        }
        let mut app_ids: Vec<String> = entries.keys().map(|(a, _)| a.clone()).collect();
        app_ids.dedup();
        let mut gpu_ids: Vec<String> = entries.keys().map(|(_, g)| g.clone()).collect();
        gpu_ids.sort();
        gpu_ids.dedup();
        Ok(ProcessingProfileTable {
            entries,
            app_ids,
            gpu_ids,
        })
    }

    pub fn app_ids(&self) -> &[String] {
        &self.app_ids
    }

    pub fn gpu_ids(&self) -> &[String] {
        &self.gpu_ids
    }

    /// Times for the pair, truncated to `max_cu` units.
    pub fn times(&self, app: &str, gpu: &str, max_cu: u32) -> Option<Vec<f64>> {
        self.entries
            .get(&(app.to_string(), gpu.to_string()))
            .map(|v| v.iter().copied().take(max_cu as usize).collect())
    }
}

/// One vehicle position sample of a replayed trace.
#[derive(Debug, Clone, Copy)]
pub struct TraceSample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

/// Replayed mobility: per-vehicle timestamped positions, interpolated
/// linearly between samples.
#[derive(Debug, Clone)]
pub struct Trace {
    samples: BTreeMap<String, Vec<TraceSample>>,
}

impl Trace {
    /// Parse CSV with columns `vehicle_id,timestamp_s,x_m,y_m`. Timestamps
    /// must be strictly increasing per vehicle.
    pub fn from_reader<R: Read>(r: R) -> Result<Self, WorkloadError> {
        #[derive(Deserialize)]
        struct Row {
            vehicle_id: String,
            timestamp_s: f64,
            x_m: f64,
            y_m: f64,
        }
        let mut samples: BTreeMap<String, Vec<TraceSample>> = BTreeMap::new();
        let mut reader = csv::Reader::from_reader(r);
        for record in reader.deserialize::<Row>() {
            let row = record.map_err(|e| {
                let line = e
                    .position()
                    .map(|p| p.line().to_string())
                    .unwrap_or_else(|| "?".into());
                WorkloadError::Trace(format!("malformed trace row at line {line}: {e}"))
            })?;
            samples.entry(row.vehicle_id).or_default().push(TraceSample {
                t: row.timestamp_s,
                x: row.x_m,
                y: row.y_m,
            });
        }
        if samples.is_empty() {
            return Err(WorkloadError::Trace("trace is empty".into()));
        }
        for (id, v) in &samples {
            for pair in v.windows(2) {
                if pair[1].t <= pair[0].t {
                    return Err(WorkloadError::Trace(format!(
                        "vehicle `{id}` has non-increasing timestamps near t = {}",
                        pair[0].t
                    )));
                }
            }
        }
        Ok(Trace { samples })
    }

    pub fn time_span(&self) -> (f64, f64) {
        let lo = self
            .samples
            .values()
            .map(|v| v.first().expect("vehicles have samples").t)
            .fold(f64::INFINITY, f64::min);
        let hi = self
            .samples
            .values()
            .map(|v| v.last().expect("vehicles have samples").t)
            .fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    /// Vehicles whose sample range covers `t`.
    pub fn active_ids(&self, t: f64) -> Vec<&str> {
        self.samples
            .iter()
            .filter(|(_, v)| {
                v.first().expect("nonempty").t <= t && t <= v.last().expect("nonempty").t
            })
            .map(|(id, _)| id.as_str())
            .collect()
    }

    /// Interpolated position and segment velocity at `t`.
    pub fn state_at(&self, id: &str, t: f64) -> Option<([f64; 2], [f64; 2])> {
        let v = self.samples.get(id)?;
        if t < v.first()?.t || t > v.last()?.t {
            return None;
        }
        if v.len() == 1 {
            let s = v[0];
            return Some(([s.x, s.y], [0.0, 0.0]));
        }
        let hi = v.partition_point(|s| s.t < t).min(v.len() - 1).max(1);
        let (a, b) = (v[hi - 1], v[hi]);
        let dt = b.t - a.t;
        let f = ((t - a.t) / dt).clamp(0.0, 1.0);
        let pos = [a.x + (b.x - a.x) * f, a.y + (b.y - a.y) * f];
        let vel = [(b.x - a.x) / dt, (b.y - a.y) / dt];
        Some((pos, vel))
    }

    /// Time from `t0` until the vehicle leaves the annulus around `center`,
    /// walking its piecewise-linear segments. Capped at `horizon` and at
    /// the end of the vehicle's data.
    pub fn dwell_in_ring(
        &self,
        id: &str,
        t0: f64,
        center: [f64; 2],
        inner: f64,
        outer: f64,
        horizon: f64,
    ) -> f64 {
        let Some(v) = self.samples.get(id) else {
            return 0.0;
        };
        if v.is_empty() || t0 < v[0].t || t0 > v[v.len() - 1].t {
            return 0.0;
        }
        let mut seg = v.partition_point(|s| s.t <= t0).min(v.len() - 1);
        if seg == 0 {
            seg = 1;
        }
        let mut cursor = t0;
        loop {
            if cursor - t0 >= horizon {
                return horizon;
            }
            if seg >= v.len() {
                // Data runs out while still inside the ring.
                return (v[v.len() - 1].t - t0).min(horizon);
            }
            let (a, b) = (v[seg - 1], v[seg]);
            let dt = b.t - a.t;
            let f = (cursor - a.t) / dt;
            let pos = [a.x + (b.x - a.x) * f, a.y + (b.y - a.y) * f];
            let vel = [(b.x - a.x) / dt, (b.y - a.y) / dt];
            let span = b.t - cursor;
            let exit = ring_exit_time(pos, vel, center, inner, outer, span + 1.0);
            if exit < span {
                return ((cursor + exit) - t0).min(horizon);
            }
            cursor = b.t;
            seg += 1;
        }
    }
}

/// Earliest strictly positive time at which the ray `pos + t * vel` leaves
/// the annulus `inner <= distance(center) <= outer`, capped at `horizon`.
/// The start point is assumed inside the annulus.
pub fn ring_exit_time(
    pos: [f64; 2],
    vel: [f64; 2],
    center: [f64; 2],
    inner: f64,
    outer: f64,
    horizon: f64,
) -> f64 {
    let px = pos[0] - center[0];
    let py = pos[1] - center[1];
    let a = vel[0] * vel[0] + vel[1] * vel[1];
    if a <= 0.0 {
        return horizon;
    }
    let b = px * vel[0] + py * vel[1];
    let d2 = px * px + py * py;

    let mut exit = f64::INFINITY;
    // Outward crossing of the outer circle: the larger root is the exit.
    let c_out = d2 - outer * outer;
    let disc_out = b * b - a * c_out;
    if disc_out >= 0.0 {
        let t_out = (-b + disc_out.sqrt()) / a;
        if t_out > 1e-9 {
            exit = exit.min(t_out);
        }
    }
    // Inward crossing of the inner circle, if the ray dips into the hole.
    if inner > 0.0 {
        let c_in = d2 - inner * inner;
        let disc_in = b * b - a * c_in;
        if disc_in > 0.0 {
            let t_in = (-b - disc_in.sqrt()) / a;
            if t_in > 1e-9 {
                exit = exit.min(t_in);
            }
        }
    }
    exit.min(horizon).max(0.0)
}

/// Knobs of the synthesizer. Serde defaults mirror a 20-server urban
/// deployment with two-ring coverage; any subset can be overridden.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound(serialize = "", deserialize = ""))]
pub struct WorkloadConfig<S: Scalar> {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_n_servers")]
    pub n_servers: usize,
    /// Per-server bandwidth capacity is drawn from this choice set.
    #[serde(default = "default_bu_choices")]
    pub bu_choices: Vec<u32>,
    #[serde(default = "default_cu_choices")]
    pub cu_choices: Vec<u32>,
    #[serde(default = "default_bu_size")]
    pub bu_size_mhz: S,
    /// Per-BU data rate of each coverage ring, innermost first, MB/s.
    #[serde(default = "default_ring_rates")]
    pub ring_rates: Vec<S>,
    /// Outer radius of each coverage ring, innermost first, meters.
    #[serde(default = "default_ring_radii")]
    pub ring_outer_radii: Vec<S>,
    /// Side of the square deployment area, meters.
    #[serde(default = "default_area")]
    pub area_m: S,
    #[serde(default = "default_jobset_size")]
    pub jobset_size: usize,
    /// Aggregate BU demand as a fraction of total BU capacity.
    #[serde(default = "default_ru_range")]
    pub ru_b_range: (S, S),
    /// Aggregate CU demand as a fraction of total CU capacity.
    #[serde(default = "default_ru_range")]
    pub ru_c_range: (S, S),
    /// Job input size, MB.
    #[serde(default = "default_input_size_range")]
    pub input_size_range: (S, S),
    #[serde(default = "default_utility_range")]
    pub utility_range: (S, S),
    /// Tolerance factor for soft-deadline jobs.
    #[serde(default = "default_tolerance_range")]
    pub tolerance_range: (S, S),
    /// Fraction of jobs with a hard deadline (tolerance factor 1).
    #[serde(default = "default_hard_fraction")]
    pub hard_deadline_fraction: f64,
    /// The deadline is the job's reference completion time scaled by this.
    #[serde(default = "default_slack_range")]
    pub deadline_slack_range: (S, S),
    /// Relative GPU speeds; each server draws one.
    #[serde(default = "default_gpu_factors")]
    pub gpu_factors: Vec<f64>,
    #[serde(default = "default_n_vehicles")]
    pub n_vehicles: usize,
    /// Synthetic vehicle speed, m/s.
    #[serde(default = "default_speed_range")]
    pub vehicle_speed_range: (S, S),
    /// Jobset release time is drawn from this many seconds of the trace.
    #[serde(default = "default_release_horizon")]
    pub release_horizon_s: f64,
    /// Dwell times are capped here, seconds.
    #[serde(default = "default_dwell_horizon")]
    pub dwell_horizon_s: f64,
    /// Replay this position trace instead of synthetic traffic.
    #[serde(default)]
    pub trace_path: Option<PathBuf>,
    /// Use measured processing profiles instead of the built-in ones.
    #[serde(default)]
    pub processing_profile_path: Option<PathBuf>,
    #[serde(default = "default_retries")]
    pub max_job_retries: usize,
}

fn default_n_servers() -> usize {
    20
}
fn default_bu_choices() -> Vec<u32> {
    vec![20, 40]
}
fn default_cu_choices() -> Vec<u32> {
    vec![25]
}
fn default_bu_size<S: Scalar>() -> S {
    S::from_f64_c(2.0)
}
fn default_ring_rates<S: Scalar>() -> Vec<S> {
    vec![S::from_f64_c(1.65), S::from_f64_c(1.15)]
}
fn default_ring_radii<S: Scalar>() -> Vec<S> {
    vec![S::from_f64_c(100.0), S::from_f64_c(200.0)]
}
fn default_area<S: Scalar>() -> S {
    S::from_f64_c(1000.0)
}
fn default_jobset_size() -> usize {
    280
}
fn default_ru_range<S: Scalar>() -> (S, S) {
    (S::from_f64_c(0.6), S::from_f64_c(0.9))
}
fn default_input_size_range<S: Scalar>() -> (S, S) {
    (S::from_f64_c(0.15), S::from_f64_c(0.63))
}
fn default_utility_range<S: Scalar>() -> (S, S) {
    (S::from_f64_c(20.0), S::from_f64_c(60.0))
}
fn default_tolerance_range<S: Scalar>() -> (S, S) {
    (S::from_f64_c(1.8), S::from_f64_c(2.2))
}
fn default_hard_fraction() -> f64 {
    0.5
}
fn default_slack_range<S: Scalar>() -> (S, S) {
    (S::from_f64_c(1.0), S::from_f64_c(1.2))
}
fn default_gpu_factors() -> Vec<f64> {
    vec![0.5, 0.75, 1.0, 1.25, 1.5]
}
fn default_n_vehicles() -> usize {
    200
}
fn default_speed_range<S: Scalar>() -> (S, S) {
    (S::from_f64_c(5.0), S::from_f64_c(15.0))
}
fn default_release_horizon() -> f64 {
    900.0
}
fn default_dwell_horizon() -> f64 {
    3600.0
}
fn default_retries() -> usize {
    50
}

impl<S: Scalar> Default for WorkloadConfig<S> {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

impl<S: Scalar> WorkloadConfig<S> {
    pub fn validate(&self) -> Result<(), WorkloadError> {
        let bad = |msg: &str| Err(WorkloadError::Config(msg.into()));
        if self.n_servers == 0 || self.jobset_size == 0 || self.n_vehicles == 0 {
            return bad("n_servers, jobset_size and n_vehicles must be positive");
        }
        if self.bu_choices.is_empty() || self.cu_choices.is_empty() {
            return bad("bu_choices and cu_choices must be nonempty");
        }
        if self.bu_choices.iter().chain(&self.cu_choices).any(|&v| v == 0) {
            return bad("capacity choices must be positive");
        }
        if self.ring_rates.len() != self.ring_outer_radii.len() || self.ring_rates.is_empty() {
            return bad("ring_rates and ring_outer_radii must be nonempty and equally long");
        }
        let mut prev = 0.0;
        for &r in &self.ring_outer_radii {
            if r.to_f64_c() <= prev {
                return bad("ring_outer_radii must be strictly increasing and positive");
            }
            prev = r.to_f64_c();
        }
        if self.ring_rates.iter().any(|&r| r <= S::zero()) {
            return bad("ring_rates must be positive");
        }
        for (name, &(lo, hi)) in [
            ("ru_b_range", &self.ru_b_range),
            ("ru_c_range", &self.ru_c_range),
            ("input_size_range", &self.input_size_range),
            ("utility_range", &self.utility_range),
            ("tolerance_range", &self.tolerance_range),
            ("deadline_slack_range", &self.deadline_slack_range),
            ("vehicle_speed_range", &self.vehicle_speed_range),
        ] {
            if lo > hi || lo.to_f64_c() < 0.0 {
                return Err(WorkloadError::Config(format!("{name} is malformed")));
            }
        }
        if self.input_size_range.0 <= S::zero() || self.utility_range.0 <= S::zero() {
            return bad("input sizes and utilities must be positive");
        }
        if self.tolerance_range.0 < S::one() {
            return bad("tolerance_range must start at 1 or above");
        }
        if self.deadline_slack_range.0 < S::one() {
            return bad("deadline_slack_range must start at 1 or above");
        }
        if !(0.0..=1.0).contains(&self.hard_deadline_fraction) {
            return bad("hard_deadline_fraction must be in [0, 1]");
        }
        if self.gpu_factors.is_empty() || self.gpu_factors.iter().any(|&g| g <= 0.0) {
            return bad("gpu_factors must be nonempty and positive");
        }
        if self.area_m <= S::zero() || self.dwell_horizon_s <= 0.0 {
            return bad("area_m and dwell_horizon_s must be positive");
        }
        Ok(())
    }
}

/// Server layout produced by [`synthesize_topology`].
#[derive(Debug, Clone)]
pub struct Topology<S: Scalar> {
    pub servers: Vec<EdgeServer<S>>,
    pub positions: Vec<[f64; 2]>,
    /// Relative GPU speed per server (synthetic profiles) or the drawn
    /// GPU id (measured profiles).
    pub gpus: Vec<GpuAssignment>,
}

#[derive(Debug, Clone)]
pub enum GpuAssignment {
    Factor(f64),
    Id(String),
}

/// Lay the servers out on a near-square grid over the area and draw their
/// capacities and GPUs.
pub fn synthesize_topology<S: Scalar, R: Rng + ?Sized>(
    config: &WorkloadConfig<S>,
    profile: Option<&ProcessingProfileTable>,
    rng: &mut R,
) -> Topology<S> {
    let n = config.n_servers;
    let cols = (n as f64).sqrt().ceil() as usize;
    let rows = n.div_ceil(cols);
    let area = config.area_m.to_f64_c();
    let width = n.to_string().len();
    let mut servers = Vec::with_capacity(n);
    let mut positions = Vec::with_capacity(n);
    let mut gpus = Vec::with_capacity(n);
    for k in 0..n {
        let col = k % cols;
        let row = k / cols;
        positions.push([
            (col as f64 + 0.5) * area / cols as f64,
            (row as f64 + 0.5) * area / rows as f64,
        ]);
        let mut inner = S::zero();
        let rings = config
            .ring_rates
            .iter()
            .zip(&config.ring_outer_radii)
            .enumerate()
            .map(|(r, (&rate, &outer))| {
                let ring = NetworkRing {
                    ring_index: (r + 1) as u32,
                    channel_gain: None,
                    per_bu_rate: Some(rate),
                    inner_radius: Some(inner),
                    outer_radius: Some(outer),
                };
                inner = outer;
                ring
            })
            .collect();
        servers.push(EdgeServer {
            server_id: format!("es{k:0width$}"),
            bandwidth_units: config.bu_choices[rng.gen_range(0..config.bu_choices.len())],
            bu_size_mhz: config.bu_size_mhz,
            computing_units: config.cu_choices[rng.gen_range(0..config.cu_choices.len())],
            rings,
        });
        gpus.push(match profile {
            Some(table) => {
                let ids = table.gpu_ids();
                GpuAssignment::Id(ids[rng.gen_range(0..ids.len())].clone())
            }
            None => GpuAssignment::Factor(
                config.gpu_factors[rng.gen_range(0..config.gpu_factors.len())],
            ),
        });
    }
    Topology {
        servers,
        positions,
        gpus,
    }
}

/// The coverage ring (1-based index plus annulus radii) of `pos` for each
/// server that covers it.
pub fn coverage<S: Scalar>(
    pos: [f64; 2],
    topology: &Topology<S>,
) -> Vec<(usize, u32, f64, f64)> {
    let mut out = Vec::new();
    for (k, server) in topology.servers.iter().enumerate() {
        let c = topology.positions[k];
        let d = ((pos[0] - c[0]).powi(2) + (pos[1] - c[1]).powi(2)).sqrt();
        let mut inner = 0.0;
        for ring in &server.rings {
            let outer = ring
                .outer_radius
                .expect("synthesized rings carry geometry")
                .to_f64_c();
            if d >= inner && d < outer {
                out.push((k, ring.ring_index, inner, outer));
                break;
            }
            inner = outer;
        }
    }
    out
}

/// A synthesized problem plus the utilization knobs it was drawn with.
#[derive(Debug, Clone)]
pub struct SynthesizedProblem<S: Scalar> {
    pub problem: Problem<S>,
    pub ru_b: S,
    pub ru_c: S,
}

fn sample_range<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        lo
    } else {
        rng.gen_range(lo..hi)
    }
}

enum Mobility {
    Synthetic(Vec<([f64; 2], [f64; 2])>),
    Traced(Trace),
}

/// Draw one full problem from the config using `rng`. The same rng stream
/// always yields the same problem.
pub fn synthesize<S: Scalar, R: Rng + ?Sized>(
    config: &WorkloadConfig<S>,
    rng: &mut R,
) -> Result<SynthesizedProblem<S>, WorkloadError> {
    config.validate()?;
    let profile_table = match &config.processing_profile_path {
        Some(path) => Some(ProcessingProfileTable::from_reader(std::fs::File::open(
            path,
        )?)?),
        None => None,
    };
    let topology = synthesize_topology(config, profile_table.as_ref(), rng);

    let area = config.area_m.to_f64_c();
    let mobility = match &config.trace_path {
        Some(path) => Mobility::Traced(Trace::from_reader(std::fs::File::open(path)?)?),
        None => {
            let vehicles = (0..config.n_vehicles)
                .map(|_| {
                    let pos = [rng.gen_range(0.0..area), rng.gen_range(0.0..area)];
                    let speed = sample_range(
                        rng,
                        config.vehicle_speed_range.0.to_f64_c(),
                        config.vehicle_speed_range.1.to_f64_c(),
                    );
                    let angle = rng.gen_range(0.0..std::f64::consts::TAU);
                    (pos, [speed * angle.cos(), speed * angle.sin()])
                })
                .collect();
            Mobility::Synthetic(vehicles)
        }
    };

    // One release instant for the whole jobset.
    let release = match &mobility {
        Mobility::Synthetic(_) => 0.0,
        Mobility::Traced(trace) => {
            let (lo, hi) = trace.time_span();
            let hi = hi.min(lo + config.release_horizon_s);
            let mut release = None;
            for _ in 0..config.max_job_retries.max(1) {
                let t = sample_range(rng, lo, hi);
                if !trace.active_ids(t).is_empty() {
                    release = Some(t);
                    break;
                }
            }
            release.ok_or_else(|| {
                WorkloadError::Infeasible(
                    "no trace vehicles are active at any sampled release time".into(),
                )
            })?
        }
    };

    let n = config.jobset_size;
    let ru_b = sample_range(rng, config.ru_b_range.0.to_f64_c(), config.ru_b_range.1.to_f64_c());
    let ru_c = sample_range(rng, config.ru_c_range.0.to_f64_c(), config.ru_c_range.1.to_f64_c());
    let total_bu: u32 = topology.servers.iter().map(|s| s.bandwidth_units).sum();
    let total_cu: u32 = topology.servers.iter().map(|s| s.computing_units).sum();
    let max_bu = f64::from(
        topology
            .servers
            .iter()
            .map(|s| s.bandwidth_units)
            .max()
            .expect("servers exist"),
    );
    let max_cu = f64::from(
        topology
            .servers
            .iter()
            .map(|s| s.computing_units)
            .max()
            .expect("servers exist"),
    );
    let bu_shares: Vec<f64> =
        randfixedsum(n, ru_b * f64::from(total_bu), 0.0, max_bu, rng)?;
    let cu_shares: Vec<f64> =
        randfixedsum(n, ru_c * f64::from(total_cu), 0.0, max_cu, rng)?;

    let apps = builtin_app_profiles();
    let width = n.to_string().len();
    let mut jobs: Vec<Job<S>> = Vec::with_capacity(n);
    for j in 0..n {
        let mut built = None;
        for _ in 0..config.max_job_retries.max(1) {
            // Place the job on a random vehicle and look at what it sees.
            let (pos, vel, trace_id) = match &mobility {
                Mobility::Synthetic(vehicles) => {
                    let &(pos, vel) = &vehicles[rng.gen_range(0..vehicles.len())];
                    (pos, vel, None)
                }
                Mobility::Traced(trace) => {
                    let ids = trace.active_ids(release);
                    let id = ids[rng.gen_range(0..ids.len())].to_string();
                    let (pos, vel) = trace.state_at(&id, release).expect("active vehicle");
                    (pos, vel, Some(id))
                }
            };
            let cov = coverage(pos, &topology);
            if cov.is_empty() {
                continue;
            }

            let theta = sample_range(
                rng,
                config.input_size_range.0.to_f64_c(),
                config.input_size_range.1.to_f64_c(),
            );

            // Processing-time tables for every covered server.
            let app = &apps[rng.gen_range(0..apps.len())];
            let app_id_from_table = profile_table
                .as_ref()
                .map(|t| t.app_ids()[rng.gen_range(0..t.app_ids().len())].clone());
            let mut processing_times: BTreeMap<String, Vec<S>> = BTreeMap::new();
            for &(k, _, _, _) in &cov {
                let server = &topology.servers[k];
                let times: Vec<S> = match (&topology.gpus[k], &profile_table) {
                    (GpuAssignment::Factor(f), _) => {
                        synth_processing_table(app, *f, server.computing_units)
                    }
                    (GpuAssignment::Id(gpu), Some(table)) => {
                        let app_id = app_id_from_table.as_deref().expect("table app drawn");
                        match table.times(app_id, gpu, server.computing_units) {
                            Some(ts) => ts.into_iter().map(S::from_f64_c).collect(),
                            None => continue,
                        }
                    }
                    (GpuAssignment::Id(_), None) => unreachable!("id assignment implies a table"),
                };
                if !times.is_empty() {
                    processing_times.insert(server.server_id.clone(), times);
                }
            }
            if processing_times.is_empty() {
                continue;
            }

            // Dwell time in the covered ring of each server.
            let mut accesses: Vec<RingAccess<S>> = Vec::new();
            let mut dwell_of: BTreeMap<usize, f64> = BTreeMap::new();
            for &(k, ring_index, inner, outer) in &cov {
                let center = topology.positions[k];
                let dwell = match (&mobility, &trace_id) {
                    (Mobility::Traced(trace), Some(id)) => trace.dwell_in_ring(
                        id,
                        release,
                        center,
                        inner,
                        outer,
                        config.dwell_horizon_s,
                    ),
                    _ => ring_exit_time(pos, vel, center, inner, outer, config.dwell_horizon_s),
                };
                if dwell <= 0.0 {
                    continue;
                }
                accesses.push(RingAccess {
                    server_id: topology.servers[k].server_id.clone(),
                    ring_index,
                    dwell_time: S::from_f64_c(dwell),
                });
                dwell_of.insert(k, dwell);
            }
            if accesses.is_empty() {
                continue;
            }

            // Reference allocation from the utilization shares; the best
            // reachable completion time anchors the deadline.
            let mut t_ref: Option<f64> = None;
            for &(k, ring_index, _, _) in &cov {
                let server = &topology.servers[k];
                let Some(&dwell) = dwell_of.get(&k) else {
                    continue;
                };
                let Some(times) = processing_times.get(&server.server_id) else {
                    continue;
                };
                let ring = server.ring(ring_index).expect("covered ring exists");
                let b_ref = (bu_shares[j].round() as u32).clamp(1, server.bandwidth_units);
                let c_ref = (cu_shares[j].round() as u32).clamp(1, times.len() as u32);
                let rate = f64::from(b_ref) * ring.per_bu_rate.expect("direct-rate ring").to_f64_c();
                let t = theta / rate + times[(c_ref - 1) as usize].to_f64_c();
                if t <= dwell {
                    t_ref = Some(t_ref.map_or(t, |cur: f64| cur.min(t)));
                }
            }
            let Some(t_ref) = t_ref else {
                continue;
            };

            let slack = sample_range(
                rng,
                config.deadline_slack_range.0.to_f64_c(),
                config.deadline_slack_range.1.to_f64_c(),
            );
            let deadline = slack * t_ref;
            let hard = rng.gen_bool(config.hard_deadline_fraction);
            let gamma = if hard {
                1.0
            } else {
                sample_range(
                    rng,
                    config.tolerance_range.0.to_f64_c(),
                    config.tolerance_range.1.to_f64_c(),
                )
            };
            let utility = sample_range(
                rng,
                config.utility_range.0.to_f64_c(),
                config.utility_range.1.to_f64_c(),
            );

            built = Some(Job {
                job_id: format!("j{j:0width$}"),
                input_size_mb: S::from_f64_c(theta),
                deadline: S::from_f64_c(deadline),
                tolerance_factor: S::from_f64_c(gamma),
                full_utility: S::from_f64_c(utility),
                offload_power: None,
                accessible_rings: accesses,
                processing_times,
                penalty: PenaltyShape::LinearDecreasing,
            });
            break;
        }
        let Some(job) = built else {
            return Err(WorkloadError::Infeasible(format!(
                "gave up synthesizing job {j} after {} attempts; widen coverage or deadlines",
                config.max_job_retries
            )));
        };
        jobs.push(job);
    }

    let problem = Problem {
        servers: topology.servers,
        jobs,
        channel_env: None,
    };
    problem.validate()?;
    Ok(SynthesizedProblem {
        problem,
        ru_b: S::from_f64_c(ru_b),
        ru_c: S::from_f64_c(ru_c),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mix_seed_streams_differ() {
        let a = mix_seed(7, 0);
        let b = mix_seed(7, 1);
        let c = mix_seed(8, 0);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, mix_seed(7, 0));
    }

    #[test]
    fn randfixedsum_single_value_is_the_total() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v: Vec<f64> = randfixedsum(1, 0.5, 0.0, 1.0, &mut rng).unwrap();
        assert_eq!(v, vec![0.5]);
    }

    #[test]
    fn randfixedsum_corner_totals_pin_every_component() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let hi = 3.5;
        let v: Vec<f64> = randfixedsum(2, 2.0 * hi, 1.0, hi, &mut rng).unwrap();
        assert!((v[0] - hi).abs() < 1e-9 && (v[1] - hi).abs() < 1e-9);
        let v: Vec<f64> = randfixedsum(4, 4.0, 1.0, hi, &mut rng).unwrap();
        for &x in &v {
            assert!((x - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn randfixedsum_rejects_impossible_totals() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(randfixedsum::<f64, _>(3, 10.0, 0.0, 1.0, &mut rng).is_err());
        assert!(randfixedsum::<f64, _>(3, -1.0, 0.0, 1.0, &mut rng).is_err());
        assert!(randfixedsum::<f64, _>(0, 0.0, 0.0, 1.0, &mut rng).is_err());
        assert!(randfixedsum::<f64, _>(3, 1.0, 2.0, 1.0, &mut rng).is_err());
    }

    #[test]
    fn randfixedsum_holds_sum_and_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for round in 0..500 {
            let n = rng.gen_range(1..=40usize);
            let lo = rng.gen_range(-2.0..2.0);
            let hi = lo + rng.gen_range(0.0..3.0);
            let total = rng.gen_range(n as f64 * lo..=n as f64 * hi);
            let v: Vec<f64> = randfixedsum(n, total, lo, hi, &mut rng).unwrap();
            assert_eq!(v.len(), n);
            let sum: f64 = v.iter().sum();
            let scale = total.abs().max(1.0);
            assert!(
                (sum - total).abs() <= 1e-9 * scale,
                "round {round}: sum {sum} vs total {total}"
            );
            for &x in &v {
                assert!(x >= lo && x <= hi, "round {round}: {x} outside [{lo}, {hi}]");
            }
        }
    }

    #[test]
    fn randfixedsum_components_are_exchangeable() {
        // Per-coordinate means must agree with total/n across draws.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (n, total, lo, hi) = (5usize, 2.0, 0.0, 1.0);
        let draws = 4000;
        let mut mean = vec![0.0f64; n];
        for _ in 0..draws {
            let v: Vec<f64> = randfixedsum(n, total, lo, hi, &mut rng).unwrap();
            for (m, &x) in mean.iter_mut().zip(&v) {
                *m += x;
            }
        }
        let expect = total / n as f64;
        for m in &mean {
            let avg = m / draws as f64;
            // Component variance is below (hi-lo)^2/4; 5 sigma of the mean.
            let tol = 5.0 * 0.5 / (draws as f64).sqrt();
            assert!((avg - expect).abs() < tol, "mean {avg} vs {expect}");
        }
    }

    #[test]
    fn randfixedsum_is_deterministic_per_seed() {
        let a: Vec<f64> =
            randfixedsum(7, 3.0, 0.0, 1.0, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b: Vec<f64> =
            randfixedsum(7, 3.0, 0.0, 1.0, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        let c: Vec<f32> =
            randfixedsum(7, 3.0, 0.0, 1.0, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        for (x, y) in a.iter().zip(&c) {
            assert!((x - f64::from(*y)).abs() < 1e-6);
        }
    }

    #[test]
    fn degenerate_equal_bounds_work() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let v: Vec<f64> = randfixedsum(4, 8.0, 2.0, 2.0, &mut rng).unwrap();
        assert_eq!(v, vec![2.0; 4]);
        assert!(randfixedsum::<f64, _>(4, 9.0, 2.0, 2.0, &mut rng).is_err());
    }

    #[test]
    fn processing_tables_shrink_with_more_units() {
        for profile in builtin_app_profiles() {
            let times: Vec<f64> = synth_processing_table(&profile, 1.25, 25);
            assert_eq!(times.len(), 25);
            for pair in times.windows(2) {
                assert!(pair[1] < pair[0], "{} is not strictly decreasing", profile.app_id);
            }
            assert!((times[0] - profile.base_seconds * 1.25).abs() < 1e-12);
        }
    }

    #[test]
    fn ring_exit_matches_hand_cases() {
        // Radially outward through the outer circle.
        let t = ring_exit_time([90.0, 0.0], [10.0, 0.0], [0.0, 0.0], 0.0, 100.0, 1e9);
        assert!((t - 1.0).abs() < 1e-9);
        // Inward into the annulus hole.
        let t = ring_exit_time([150.0, 0.0], [-10.0, 0.0], [0.0, 0.0], 100.0, 200.0, 1e9);
        assert!((t - 5.0).abs() < 1e-9);
        // Outward from the annulus.
        let t = ring_exit_time([150.0, 0.0], [10.0, 0.0], [0.0, 0.0], 100.0, 200.0, 1e9);
        assert!((t - 5.0).abs() < 1e-9);
        // Stationary: capped at the horizon.
        let t = ring_exit_time([150.0, 0.0], [0.0, 0.0], [0.0, 0.0], 100.0, 200.0, 3600.0);
        assert_eq!(t, 3600.0);
        // Tangential motion misses the hole.
        let t = ring_exit_time([150.0, 0.0], [0.0, 10.0], [0.0, 0.0], 100.0, 200.0, 1e9);
        let expect = (200.0f64 * 200.0 - 150.0 * 150.0).sqrt() / 10.0;
        assert!((t - expect).abs() < 1e-9);
    }

    #[test]
    fn trace_parses_interpolates_and_dwells() {
        let csv = "\
vehicle_id,timestamp_s,x_m,y_m
v1,0.0,0.0,0.0
v1,10.0,100.0,0.0
v1,20.0,100.0,100.0
v2,5.0,500.0,500.0
";
        let trace = Trace::from_reader(csv.as_bytes()).unwrap();
        assert_eq!(trace.time_span(), (0.0, 20.0));
        assert_eq!(trace.active_ids(7.0), vec!["v1"]);
        assert_eq!(trace.active_ids(5.0).len(), 2);

        let (pos, vel) = trace.state_at("v1", 5.0).unwrap();
        assert!((pos[0] - 50.0).abs() < 1e-9 && pos[1].abs() < 1e-9);
        assert!((vel[0] - 10.0).abs() < 1e-9 && vel[1].abs() < 1e-9);

        // From t=0 moving at 10 m/s toward +x, leaves a 60 m disk around
        // the origin at t=6 (within the first segment).
        let d = trace.dwell_in_ring("v1", 0.0, [0.0, 0.0], 0.0, 60.0, 1e9);
        assert!((d - 6.0).abs() < 1e-9);
        // A disk big enough to hold both segments: data runs out at t=20.
        let d = trace.dwell_in_ring("v1", 0.0, [0.0, 0.0], 0.0, 1e6, 1e9);
        assert!((d - 20.0).abs() < 1e-9);
        // Horizon cap.
        let d = trace.dwell_in_ring("v1", 0.0, [0.0, 0.0], 0.0, 1e6, 7.5);
        assert!((d - 7.5).abs() < 1e-9);
    }

    #[test]
    fn trace_rejects_malformed_rows() {
        let bad = "vehicle_id,timestamp_s,x_m,y_m\nv1,abc,0,0\n";
        let err = Trace::from_reader(bad.as_bytes()).unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("line"), "{msg}");

        let unsorted = "vehicle_id,timestamp_s,x_m,y_m\nv1,5,0,0\nv1,5,1,1\n";
        assert!(Trace::from_reader(unsorted.as_bytes()).is_err());
    }

    #[test]
    fn profile_table_loads_and_serves_prefixes() {
        let csv = "\
app_id,gpu_id,computing_units,seconds
detect,gpu-a,1,0.5
detect,gpu-a,2,0.3
detect,gpu-a,3,0.22
track,gpu-a,1,0.2
";
        let table = ProcessingProfileTable::from_reader(csv.as_bytes()).unwrap();
        assert_eq!(table.app_ids(), ["detect", "track"]);
        assert_eq!(table.gpu_ids(), ["gpu-a"]);
        assert_eq!(table.times("detect", "gpu-a", 2), Some(vec![0.5, 0.3]));
        assert_eq!(table.times("track", "gpu-a", 5), Some(vec![0.2]));
        assert_eq!(table.times("track", "gpu-b", 5), None);

        let gap = "app_id,gpu_id,computing_units,seconds\ndetect,gpu-a,2,0.3\n";
        assert!(ProcessingProfileTable::from_reader(gap.as_bytes()).is_err());
    }

    fn small_config() -> WorkloadConfig<f64> {
        WorkloadConfig::<f64> {
            n_servers: 5,
            bu_choices: vec![8],
            cu_choices: vec![8],
            jobset_size: 12,
            n_vehicles: 60,
            ..Default::default()
        }
    }

    #[test]
    fn default_config_validates_and_round_trips() {
        let config = WorkloadConfig::<f64>::default();
        config.validate().unwrap();
        assert_eq!(config.n_servers, 20);
        assert_eq!(config.bu_choices, vec![20, 40]);
        let text = serde_json::to_string(&config).unwrap();
        let back: WorkloadConfig<f64> = serde_json::from_str(&text).unwrap();
        back.validate().unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), text);

        let sparse: WorkloadConfig<f64> = serde_json::from_str(r#"{"jobset_size": 7}"#).unwrap();
        assert_eq!(sparse.jobset_size, 7);
        assert_eq!(sparse.n_servers, 20);

        assert!(serde_json::from_str::<WorkloadConfig<f64>>(r#"{"jobsetsize": 7}"#).is_err());
    }

    #[test]
    fn topology_covers_the_area_grid() {
        let config = small_config();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let topo = synthesize_topology(&config, None, &mut rng);
        assert_eq!(topo.servers.len(), 5);
        assert_eq!(topo.positions.len(), 5);
        for (server, pos) in topo.servers.iter().zip(&topo.positions) {
            assert_eq!(server.bandwidth_units, 8);
            assert_eq!(server.rings.len(), 2);
            assert!(pos[0] > 0.0 && pos[0] < 1000.0 && pos[1] > 0.0 && pos[1] < 1000.0);
        }
        // Distinct ids, ring geometry nested.
        let r1 = &topo.servers[0].rings[0];
        let r2 = &topo.servers[0].rings[1];
        assert_eq!(r1.outer_radius, r2.inner_radius);
    }

    #[test]
    fn coverage_picks_the_containing_ring() {
        let config = small_config();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let topo = synthesize_topology(&config, None, &mut rng);
        let c = topo.positions[0];
        let near = coverage([c[0] + 50.0, c[1]], &topo);
        assert!(near.iter().any(|&(k, r, ..)| k == 0 && r == 1));
        let far = coverage([c[0] + 150.0, c[1]], &topo);
        assert!(far.iter().any(|&(k, r, ..)| k == 0 && r == 2));
    }

    #[test]
    fn synthesized_problems_validate_and_enumerate() {
        let config = small_config();
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let synth = synthesize(&config, &mut rng).unwrap();
            synth.problem.validate().unwrap();
            assert_eq!(synth.problem.jobs.len(), 12);
            assert!(synth.ru_b >= 0.6 && synth.ru_b <= 0.9);
            let pool = crate::enumerate::enumerate_instances(&synth.problem).unwrap();
            // Deadlines anchor to a feasible reference completion, so
            // every job must offer at least one instance.
            for (j, _) in synth.problem.jobs.iter().enumerate() {
                assert!(
                    !pool.by_job(crate::model::JobId(j)).is_empty(),
                    "seed {seed}: job {j} has no feasible instance"
                );
            }
        }
    }

    #[test]
    fn synthesis_is_deterministic_per_seed() {
        let config = small_config();
        let a = synthesize(&config, &mut ChaCha8Rng::seed_from_u64(77)).unwrap();
        let b = synthesize(&config, &mut ChaCha8Rng::seed_from_u64(77)).unwrap();
        let ja = serde_json::to_string(&a.problem).unwrap();
        let jb = serde_json::to_string(&b.problem).unwrap();
        assert_eq!(ja, jb);
    }

    #[test]
    fn synthesis_follows_a_trace_when_given() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        // A swarm of vehicles parked around the area so coverage holds.
        let mut text = String::from("vehicle_id,timestamp_s,x_m,y_m\n");
        for v in 0..40 {
            let x = 100.0 + 200.0 * f64::from(v % 5);
            let y = 100.0 + 200.0 * f64::from(v / 5 % 5);
            text.push_str(&format!("v{v},0.0,{x},{y}\n"));
            text.push_str(&format!("v{v},1000.0,{},{y}\n", x + 50.0));
        }
        std::fs::write(&path, text).unwrap();

        let mut config = small_config();
        config.trace_path = Some(path);
        let synth = synthesize(&config, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        synth.problem.validate().unwrap();
        assert_eq!(synth.problem.jobs.len(), config.jobset_size);
    }
}
