//! `edgeassign`: run offloading experiments, synthesize problem
//! documents, and solve single problems from the command line.

use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use rand::SeedableRng;

use edgeassign::{
    dominance_prune, enumerate_instances, exact_opt, run_experiment, synthesize, write_csv,
    write_lp, AlgorithmKind, BnBConfig, ExperimentSpec64, Problem64, SolveStatus, Solution64,
    WorkloadConfig64,
};

#[derive(Parser)]
#[command(name = "edgeassign", version, about = "Deadline-aware job offloading solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a JSON spec and write a result CSV.
    Run {
        /// Experiment spec (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Output CSV path; defaults to the spec's `output_path`, else stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated algorithm override (idassign,greedy,iterative,game,exact).
        #[arg(long, value_delimiter = ',')]
        algorithms: Vec<String>,
        /// Base seed override.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads for repetitions (1 = serial).
        #[arg(long, default_value_t = 1)]
        parallel: usize,
    },
    /// Synthesize one problem document from a workload config.
    Gen {
        /// Workload config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Output problem path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed override.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Solve one problem document and print the assignment.
    Solve {
        /// Problem document (JSON).
        #[arg(long)]
        problem: PathBuf,
        /// Algorithm to run.
        #[arg(long, default_value = "idassign")]
        algorithm: String,
        /// Exact-solver timeout in seconds (applies to `exact` only).
        #[arg(long)]
        timeout_s: Option<f64>,
        /// Also write the instance selection model in LP format to this path.
        #[arg(long)]
        emit_lp: Option<PathBuf>,
    },
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Run { config, out, algorithms, seed, parallel } => {
            cmd_run(config, out, algorithms, seed, parallel)
        }
        Command::Gen { config, out, seed } => cmd_gen(config, out, seed),
        Command::Solve { problem, algorithm, timeout_s, emit_lp } => {
            cmd_solve(problem, algorithm, timeout_s, emit_lp)
        }
    }
}

fn cmd_run(
    config: PathBuf,
    out: Option<PathBuf>,
    algorithms: Vec<String>,
    seed: Option<u64>,
    parallel: usize,
) -> Result<()> {
    let file = std::fs::File::open(&config)
        .with_context(|| format!("opening spec {}", config.display()))?;
    let mut spec = ExperimentSpec64::from_reader(std::io::BufReader::new(file))
        .with_context(|| format!("reading spec {}", config.display()))?;
    if !algorithms.is_empty() {
        spec.algorithms = algorithms
            .iter()
            .map(|s| AlgorithmKind::from_str(s).map_err(anyhow::Error::msg))
            .collect::<Result<Vec<_>>>()?;
    }
    if seed.is_some() {
        spec.seed = seed;
    }

    let rows = run_experiment(&spec, parallel)?;
    log::info!("{} rows from {} repetitions", rows.len(), spec.repetitions);
    let target = out.or(spec.output_path.clone());
    match target {
        Some(path) => {
            let file = std::fs::File::create(&path)
                .with_context(|| format!("creating {}", path.display()))?;
            write_csv(&rows, std::io::BufWriter::new(file))?;
            eprintln!("wrote {} rows to {}", rows.len(), path.display());
        }
        None => write_csv(&rows, std::io::stdout().lock())?,
    }
    Ok(())
}

fn cmd_gen(config: PathBuf, out: Option<PathBuf>, seed: Option<u64>) -> Result<()> {
    let file = std::fs::File::open(&config)
        .with_context(|| format!("opening config {}", config.display()))?;
    let mut config: WorkloadConfig64 = serde_json::from_reader(std::io::BufReader::new(file))?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.seed);
    let synth = synthesize(&config, &mut rng)?;
    match out {
        Some(path) => {
            let file = std::fs::File::create(&path)
                .with_context(|| format!("creating {}", path.display()))?;
            synth.problem.to_writer(std::io::BufWriter::new(file))?;
            eprintln!(
                "wrote problem with {} jobs over {} servers to {}",
                synth.problem.jobs.len(),
                synth.problem.servers.len(),
                path.display()
            );
        }
        None => synth.problem.to_writer(std::io::stdout().lock())?,
    }
    Ok(())
}

fn cmd_solve(
    problem_path: PathBuf,
    algorithm: String,
    timeout_s: Option<f64>,
    emit_lp: Option<PathBuf>,
) -> Result<()> {
    let file = std::fs::File::open(&problem_path)
        .with_context(|| format!("opening problem {}", problem_path.display()))?;
    let problem = Problem64::from_reader(std::io::BufReader::new(file))?;
    problem.validate()?;

    let pool = enumerate_instances(&problem)?;
    let pool = dominance_prune(pool, &problem);
    if let Some(path) = &emit_lp {
        let file = std::fs::File::create(path)
            .with_context(|| format!("creating {}", path.display()))?;
        write_lp(&mut std::io::BufWriter::new(file), &pool, &problem)?;
        eprintln!("wrote LP model to {}", path.display());
    }

    let kind = AlgorithmKind::from_str(&algorithm).map_err(anyhow::Error::msg)?;
    let (solution, status): (Solution64, Option<SolveStatus>) = match kind {
        AlgorithmKind::Exact => {
            let config = BnBConfig { timeout_s: timeout_s.or(Some(600.0)), node_limit: None };
            let result = exact_opt(&pool, &problem, &config)?;
            (result.solution, Some(result.status))
        }
        AlgorithmKind::Idassign => (edgeassign::idassign(&pool, &problem)?, None),
        AlgorithmKind::Greedy => (edgeassign::greedy(&pool, &problem)?, None),
        AlgorithmKind::Iterative => (
            edgeassign::iterative(&pool, &problem, edgeassign::ITERATIVE_DEFAULT_ROUNDS)?,
            None,
        ),
        AlgorithmKind::Game => (
            edgeassign::game(&pool, &problem, edgeassign::game_default_rounds(problem.jobs.len()))?,
            None,
        ),
    };
    solution.validate(pool.instances(), &problem)?;

    let stdout = std::io::stdout();
    let mut w = stdout.lock();
    writeln!(w, "algorithm: {kind}")?;
    if let Some(status) = status {
        let label = match status {
            SolveStatus::Optimal => "optimal",
            SolveStatus::TimeoutIncumbent => "timeout_incumbent",
        };
        writeln!(w, "status: {label}")?;
    }
    writeln!(w, "jobs_assigned: {} / {}", solution.len(), problem.jobs.len())?;
    writeln!(w, "total_utility: {}", solution.total_utility())?;
    for id in solution.selected() {
        let inst = &pool.instances()[id.0];
        let job = &problem.jobs[inst.job.0];
        let server = &problem.servers[inst.server.0];
        writeln!(
            w,
            "  {} -> {} ring {} ({} BU, {} CU, t={:.4}s, u={:.4})",
            job.job_id,
            server.server_id,
            inst.ring_index,
            inst.bu_alloc,
            inst.cu_alloc,
            inst.completion_time,
            inst.utility
        )?;
    }
    if kind != AlgorithmKind::Exact && pool.len() <= 25 {
        // Small pools get an exhaustive reference so ad hoc runs show the gap.
        let best = edgeassign::exhaustive_opt(&pool, &problem)?;
        writeln!(w, "exhaustive_reference_utility: {}", best.total_utility())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    #[test]
    fn cli_parses() {
        use clap::CommandFactory;
        super::Cli::command().debug_assert();
    }
}
