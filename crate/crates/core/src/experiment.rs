//! Experiment harness: run a set of algorithms over repeated problem
//! draws (or one problem loaded from a file) and emit one CSV row per
//! (repetition, algorithm). Results are deterministic for a fixed base
//! seed: repetition seeds are derived streams and every solver is
//! deterministic, so utility columns are byte-stable across runs.

use std::io::{Read, Write};
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::{game, game_default_rounds, greedy, iterative, ITERATIVE_DEFAULT_ROUNDS};
use crate::enumerate::{dominance_prune, enumerate_instances, InstancePool};
use crate::exact::{exact_opt, BnBConfig, SolveStatus};
use crate::localratio::idassign;
use crate::model::{ModelError, Problem, Solution};
use crate::scalar::Scalar;
use crate::workload::{mix_seed, synthesize, WorkloadConfig, WorkloadError};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("spec error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid experiment: {0}")]
    Invalid(String),
}

/// Where the problems of an experiment come from: a fixed problem document
/// or fresh draws from the synthesizer. In JSON, a `problem_file` key
/// selects the file form; any other object is read as a synthesizer config.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
#[serde(bound(serialize = "", deserialize = ""))]
// A spec holds exactly one of these; boxing the config variant would buy
// nothing for the size skew it papers over.
#[allow(clippy::large_enum_variant)]
pub enum WorkloadSource<S: Scalar> {
    File { problem_file: PathBuf },
    Synth(WorkloadConfig<S>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgorithmKind {
    Idassign,
    Greedy,
    Iterative,
    Game,
    Exact,
}

impl AlgorithmKind {
    pub fn name(self) -> &'static str {
        match self {
            AlgorithmKind::Idassign => "idassign",
            AlgorithmKind::Greedy => "greedy",
            AlgorithmKind::Iterative => "iterative",
            AlgorithmKind::Game => "game",
            AlgorithmKind::Exact => "exact",
        }
    }

    pub const ALL: [AlgorithmKind; 5] = [
        AlgorithmKind::Idassign,
        AlgorithmKind::Greedy,
        AlgorithmKind::Iterative,
        AlgorithmKind::Game,
        AlgorithmKind::Exact,
    ];
}

impl FromStr for AlgorithmKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AlgorithmKind::ALL
            .into_iter()
            .find(|a| a.name() == s.trim().to_lowercase())
            .ok_or_else(|| format!("unknown algorithm `{s}`"))
    }
}

impl std::fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A full experiment: workload source, algorithms to compare, repetition
/// count, and the exact-solver budget used when `exact` is requested.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(serialize = "", deserialize = ""))]
pub struct ExperimentSpec<S: Scalar> {
    pub workload: WorkloadSource<S>,
    pub algorithms: Vec<AlgorithmKind>,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub bnb: BnBConfig,
    /// Overrides the workload seed when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<PathBuf>,
}

fn default_repetitions() -> usize {
    1
}

impl<S: Scalar> ExperimentSpec<S> {
    pub fn from_reader<R: Read>(r: R) -> Result<Self, ExperimentError> {
        let spec: ExperimentSpec<S> = serde_json::from_reader(r)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.algorithms.is_empty() {
            return Err(ExperimentError::Invalid("no algorithms requested".into()));
        }
        if self.repetitions == 0 {
            return Err(ExperimentError::Invalid("repetitions must be positive".into()));
        }
        if let WorkloadSource::Synth(config) = &self.workload {
            config.validate()?;
        }
        Ok(())
    }

    fn base_seed(&self) -> u64 {
        self.seed.unwrap_or(match &self.workload {
            WorkloadSource::Synth(config) => config.seed,
            WorkloadSource::File { .. } => 0,
        })
    }
}

/// One CSV row: an algorithm's outcome on one repetition. `opt_*` and
/// `ratio` are filled only when the experiment also ran `exact`; `ratio`
/// additionally requires the exact run to have proven optimality, so a
/// timeout leaves it blank rather than reporting a ratio against an
/// underestimate. `ru_b`/`ru_c` are blank for file-based problems.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(serialize = "", deserialize = ""))]
pub struct ResultRow<S: Scalar> {
    pub seed: u64,
    pub jobset_size: usize,
    pub ru_b: Option<S>,
    pub ru_c: Option<S>,
    pub algorithm: String,
    pub utility: S,
    pub opt_utility: Option<S>,
    pub opt_status: Option<SolveStatus>,
    pub ratio: Option<S>,
    pub runtime_ms: f64,
    pub pool_size: usize,
    pub enum_ms: f64,
}

/// Utility ratio of an algorithm against the optimum. Both zero counts as
/// a full score; an algorithm utility above the optimum is an invariant
/// violation and comes back as an error.
pub fn performance_ratio<S: Scalar>(algorithm: S, optimal: S) -> Result<S, ExperimentError> {
    let tolerance = S::from_f64_c(1e-9) * optimal.abs().max(S::one());
    if algorithm > optimal + tolerance {
        return Err(ExperimentError::Invalid(format!(
            "algorithm utility {} exceeds the optimum {}",
            algorithm.to_f64_c(),
            optimal.to_f64_c()
        )));
    }
    if optimal <= S::zero() {
        return Ok(S::one());
    }
    Ok((algorithm / optimal).min(S::one()))
}

struct RepOutcome<S: Scalar> {
    rep: usize,
    rows: Vec<ResultRow<S>>,
}

fn run_rep<S: Scalar>(
    spec: &ExperimentSpec<S>,
    shared_problem: Option<&Problem<S>>,
    rep: usize,
) -> Result<RepOutcome<S>, ExperimentError> {
    use rand::SeedableRng;
    let seed = mix_seed(spec.base_seed(), rep as u64);

    let (problem, ru_b, ru_c) = match (&spec.workload, shared_problem) {
        (WorkloadSource::File { .. }, Some(p)) => (p.clone(), None, None),
        (WorkloadSource::Synth(config), _) => {
            let mut config = config.clone();
            config.seed = seed;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let synth = synthesize(&config, &mut rng)?;
            (synth.problem, Some(synth.ru_b), Some(synth.ru_c))
        }
        (WorkloadSource::File { .. }, None) => {
            return Err(ExperimentError::Invalid("file problem was not preloaded".into()))
        }
    };

    let enum_started = Instant::now();
    let pool = enumerate_instances(&problem)?;
    let pool = dominance_prune(pool, &problem);
    let enum_ms = enum_started.elapsed().as_secs_f64() * 1e3;

    // The exact run, when requested, supplies the reference optimum for
    // every row of this repetition.
    let mut exact_outcome: Option<(Solution<S>, SolveStatus, f64)> = None;
    if spec.algorithms.contains(&AlgorithmKind::Exact) {
        let started = Instant::now();
        let result = exact_opt(&pool, &problem, &spec.bnb)?;
        let ms = started.elapsed().as_secs_f64() * 1e3;
        exact_outcome = Some((result.solution, result.status, ms));
    }

    let mut rows = Vec::with_capacity(spec.algorithms.len());
    for &algorithm in &spec.algorithms {
        let (solution, runtime_ms) = match algorithm {
            AlgorithmKind::Exact => {
                let (solution, _, ms) = exact_outcome.as_ref().expect("exact ran");
                (solution.clone(), *ms)
            }
            other => {
                let started = Instant::now();
                let solution = run_heuristic(other, &pool, &problem)?;
                (solution, started.elapsed().as_secs_f64() * 1e3)
            }
        };
        solution.validate(pool.instances(), &problem)?;

        let utility = solution.total_utility();
        let (opt_utility, opt_status, ratio) = match &exact_outcome {
            Some((opt, status, _)) => {
                let ratio = match status {
                    SolveStatus::Optimal => {
                        Some(performance_ratio(utility, opt.total_utility())?)
                    }
                    SolveStatus::TimeoutIncumbent => None,
                };
                (Some(opt.total_utility()), Some(*status), ratio)
            }
            None => (None, None, None),
        };
        rows.push(ResultRow {
            seed,
            jobset_size: problem.jobs.len(),
            ru_b,
            ru_c,
            algorithm: algorithm.name().to_string(),
            utility,
            opt_utility,
            opt_status,
            ratio,
            runtime_ms,
            pool_size: pool.len(),
            enum_ms,
        });
    }
    Ok(RepOutcome { rep, rows })
}

fn run_heuristic<S: Scalar>(
    algorithm: AlgorithmKind,
    pool: &InstancePool<S>,
    problem: &Problem<S>,
) -> Result<Solution<S>, ExperimentError> {
    let solution = match algorithm {
        AlgorithmKind::Idassign => idassign(pool, problem)?,
        AlgorithmKind::Greedy => greedy(pool, problem)?,
        AlgorithmKind::Iterative => iterative(pool, problem, ITERATIVE_DEFAULT_ROUNDS)?,
        AlgorithmKind::Game => game(pool, problem, game_default_rounds(problem.jobs.len()))?,
        AlgorithmKind::Exact => unreachable!("exact is handled by the caller"),
    };
    Ok(solution)
}

/// Run the experiment, spreading repetitions over `parallel` worker
/// threads (0 and 1 both mean serial). Rows come back ordered by
/// repetition, then by the spec's algorithm order.
pub fn run_experiment<S: Scalar>(
    spec: &ExperimentSpec<S>,
    parallel: usize,
) -> Result<Vec<ResultRow<S>>, ExperimentError> {
    spec.validate()?;
    let shared_problem: Option<Problem<S>> = match &spec.workload {
        WorkloadSource::File { problem_file } => {
            let file = std::fs::File::open(problem_file)?;
            let problem = Problem::from_reader(std::io::BufReader::new(file))?;
            problem.validate()?;
            Some(problem)
        }
        WorkloadSource::Synth(_) => None,
    };

    let reps = spec.repetitions;
    let workers = parallel.max(1).min(reps);
    let mut outcomes: Vec<RepOutcome<S>> = if workers <= 1 {
        (0..reps)
            .map(|rep| run_rep(spec, shared_problem.as_ref(), rep))
            .collect::<Result<_, _>>()?
    } else {
        let shared = shared_problem.as_ref();
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    scope.spawn(move || {
                        (w..reps)
                            .step_by(workers)
                            .map(|rep| run_rep(spec, shared, rep))
                            .collect::<Result<Vec<_>, _>>()
                    })
                })
                .collect();
            let mut all = Vec::with_capacity(reps);
            let mut first_error = None;
            for handle in handles {
                match handle.join().expect("worker does not panic") {
                    Ok(mut chunk) => all.append(&mut chunk),
                    Err(e) if first_error.is_none() => first_error = Some(e),
                    Err(_) => {}
                }
            }
            match first_error {
                Some(e) => Err(e),
                None => Ok(all),
            }
        })?
    };
    outcomes.sort_by_key(|o| o.rep);
    Ok(outcomes.into_iter().flat_map(|o| o.rows).collect())
}

/// Serialize rows as CSV with a header line.
pub fn write_csv<S: Scalar, W: Write>(
    rows: &[ResultRow<S>],
    writer: W,
) -> Result<(), ExperimentError> {
    let mut csv_writer = csv::Writer::from_writer(writer);
    for row in rows {
        csv_writer.serialize(row)?;
    }
    csv_writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{EdgeServer, Job, NetworkRing, PenaltyShape, RingAccess};
    use std::collections::BTreeMap;

    fn small_synth_spec(algorithms: Vec<AlgorithmKind>, reps: usize) -> ExperimentSpec<f64> {
        let config = WorkloadConfig::<f64> {
            n_servers: 4,
            bu_choices: vec![6],
            cu_choices: vec![6],
            jobset_size: 8,
            n_vehicles: 40,
            seed: 99,
            ..Default::default()
        };
        ExperimentSpec {
            workload: WorkloadSource::Synth(config),
            algorithms,
            repetitions: reps,
            bnb: BnBConfig { timeout_s: Some(30.0), node_limit: None },
            seed: None,
            output_path: None,
        }
    }

    #[test]
    fn ratio_arithmetic_is_guarded() {
        assert_eq!(performance_ratio(45.0, 60.0).unwrap(), 0.75);
        assert_eq!(performance_ratio(0.0, 0.0).unwrap(), 1.0);
        assert!((performance_ratio(59.999999999f64, 60.0).unwrap() - 1.0).abs() < 1e-9);
        assert!(performance_ratio(61.0, 60.0).is_err());
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in AlgorithmKind::ALL {
            assert_eq!(a.name().parse::<AlgorithmKind>().unwrap(), a);
        }
        assert!("sorcery".parse::<AlgorithmKind>().is_err());
        let json = serde_json::to_string(&AlgorithmKind::Idassign).unwrap();
        assert_eq!(json, "\"idassign\"");
    }

    #[test]
    fn spec_json_selects_the_right_workload_source() {
        let synth = r#"{
            "workload": {"jobset_size": 9, "n_servers": 3},
            "algorithms": ["idassign", "greedy"],
            "repetitions": 2
        }"#;
        let spec: ExperimentSpec<f64> = serde_json::from_str(synth).unwrap();
        match &spec.workload {
            WorkloadSource::Synth(c) => assert_eq!(c.jobset_size, 9),
            WorkloadSource::File { .. } => panic!("expected synth"),
        }

        let file = r#"{
            "workload": {"problem_file": "problems/p1.json"},
            "algorithms": ["exact"]
        }"#;
        let spec: ExperimentSpec<f64> = serde_json::from_str(file).unwrap();
        assert!(matches!(spec.workload, WorkloadSource::File { .. }));
        assert_eq!(spec.repetitions, 1);
    }

    #[test]
    fn rows_carry_opt_columns_only_with_exact() {
        let spec = small_synth_spec(vec![AlgorithmKind::Idassign, AlgorithmKind::Greedy], 2);
        let rows = run_experiment(&spec, 1).unwrap();
        assert_eq!(rows.len(), 4);
        for row in &rows {
            assert!(row.opt_utility.is_none());
            assert!(row.ratio.is_none());
            assert!(row.ru_b.is_some());
            assert!(row.pool_size > 0);
        }

        let spec = small_synth_spec(
            vec![AlgorithmKind::Idassign, AlgorithmKind::Exact],
            1,
        );
        let rows = run_experiment(&spec, 1).unwrap();
        assert_eq!(rows.len(), 2);
        for row in &rows {
            let opt = row.opt_utility.expect("exact ran");
            assert_eq!(row.opt_status, Some(SolveStatus::Optimal));
            let ratio = row.ratio.expect("optimal status implies a ratio");
            assert!((1.0 / 6.0 - 1e-9..=1.0 + 1e-9).contains(&ratio));
            assert!(row.utility <= opt + 1e-9);
            if row.algorithm == "exact" {
                assert!((ratio - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn parallel_and_serial_runs_agree() {
        let spec = small_synth_spec(
            vec![AlgorithmKind::Idassign, AlgorithmKind::Greedy, AlgorithmKind::Game],
            6,
        );
        let serial = run_experiment(&spec, 1).unwrap();
        let parallel = run_experiment(&spec, 3).unwrap();
        assert_eq!(serial.len(), parallel.len());
        for (a, b) in serial.iter().zip(&parallel) {
            assert_eq!(a.seed, b.seed);
            assert_eq!(a.algorithm, b.algorithm);
            assert_eq!(a.utility, b.utility);
            assert_eq!(a.pool_size, b.pool_size);
        }
    }

    #[test]
    fn csv_output_has_stable_shape_and_values() {
        let spec = small_synth_spec(vec![AlgorithmKind::Idassign], 2);
        let rows = run_experiment(&spec, 1).unwrap();
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "seed,jobset_size,ru_b,ru_c,algorithm,utility,opt_utility,opt_status,ratio,runtime_ms,pool_size,enum_ms"
        );
        assert_eq!(lines.count(), 2);

        // Utility fields are identical across re-runs of the same spec.
        let again = run_experiment(&spec, 1).unwrap();
        for (a, b) in rows.iter().zip(&again) {
            assert_eq!(a.utility.to_bits(), b.utility.to_bits());
        }
    }

    #[test]
    fn file_workloads_round_trip_through_the_harness() {
        let mut processing_times = BTreeMap::new();
        processing_times.insert("es0".to_string(), vec![0.4, 0.25]);
        let problem = Problem::<f64> {
            servers: vec![EdgeServer {
                server_id: "es0".into(),
                bandwidth_units: 3,
                bu_size_mhz: 2.0,
                computing_units: 2,
                rings: vec![NetworkRing {
                    ring_index: 1,
                    channel_gain: None,
                    per_bu_rate: Some(1.65),
                    inner_radius: None,
                    outer_radius: None,
                }],
            }],
            jobs: vec![Job {
                job_id: "j0".into(),
                input_size_mb: 0.33,
                deadline: 0.9,
                tolerance_factor: 1.0,
                full_utility: 40.0,
                offload_power: None,
                accessible_rings: vec![RingAccess {
                    server_id: "es0".into(),
                    ring_index: 1,
                    dwell_time: 30.0,
                }],
                processing_times,
                penalty: PenaltyShape::LinearDecreasing,
            }],
            channel_env: None,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("problem.json");
        problem
            .to_writer(std::fs::File::create(&path).unwrap())
            .unwrap();

        let spec = ExperimentSpec::<f64> {
            workload: WorkloadSource::File {
                problem_file: path,
            },
            algorithms: vec![AlgorithmKind::Idassign, AlgorithmKind::Exact],
            repetitions: 2,
            bnb: BnBConfig::default(),
            seed: Some(5),
            output_path: None,
        };
        let rows = run_experiment(&spec, 1).unwrap();
        assert_eq!(rows.len(), 4);
        for row in &rows {
            assert!(row.ru_b.is_none());
            assert_eq!(row.jobset_size, 1);
            assert!(row.utility > 0.0);
            assert_eq!(row.ratio, Some(1.0));
        }
    }
}
