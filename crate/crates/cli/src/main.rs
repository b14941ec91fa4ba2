use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use albnr::acquisition::{Correction, StrategyRegistry};
use albnr::config::{ExperimentConfig, ResponseSource};
use albnr::data::PoolPolicy;
use albnr::dgp::{Dgp, DgpId};
use albnr::engine::{
    run_boundary_experiment, run_replay, run_replications, run_response_sweep, synthetic_replay_pool,
    BoundaryOptions, ExperimentResult, ReplayConfig, ReplayResponse,
};
use albnr::learners::GradientDescent;
use albnr::rng::{substream, Stream};
use albnr::{io, Error};

#[derive(Debug, Parser)]
#[command(name = "albnr", version, about = "Active learning under label non-response")]
struct Cli {
    /// Experiment config (TOML); built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed; overrides the config.
    #[arg(long, global = true, env = "ALBNR_SEED")]
    seed: Option<u64>,
    /// Number of replications; overrides the config.
    #[arg(long, global = true)]
    runs: Option<usize>,
    /// Maximum concurrent replications (0 = all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Replicate every configured arm and write curves and aggregates.
    Simulate,
    /// MAR versus MCAR over the configured p_low grid.
    Sweep,
    /// Linear boundaries fitted on increasingly censored synthetic3 data.
    Boundary,
    /// Replay a logged pool with its observed responses.
    Replay {
        /// Pool CSV (`x0..,label,response`); a synthetic pool when omitted.
        #[arg(long)]
        pool: Option<PathBuf>,
        #[arg(long, value_enum)]
        policy: Option<PolicyArg>,
    },
    /// Write samples from a generator as CSV.
    EmitDgp {
        #[arg(long, default_value = "synthetic1")]
        dgp: DgpId,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        /// Write a replay pool (`x0..,label,response`) using the replay
        /// section's mechanism instead of plain samples.
        #[arg(long)]
        replay_pool: bool,
        /// Destination file; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print the effective configuration.
    PrintConfig,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum PolicyArg {
    Remove,
    Replace,
}

enum Failure {
    Config(Error),
    Runtime(Error),
}

fn config_err(e: Error) -> Failure {
    Failure::Config(e)
}

fn runtime_err(e: Error) -> Failure {
    match e {
        Error::Config(_) => Failure::Config(e),
        other => Failure::Runtime(other),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("albnr: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("albnr: {e}");
            ExitCode::from(2)
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path).map_err(config_err)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.engine.base_seed = seed;
    }
    if let Some(runs) = cli.runs {
        cfg.engine.runs = runs;
        cfg.replay.runs = runs;
    }
    if let Some(jobs) = cli.jobs {
        cfg.engine.jobs = jobs;
    }
    if let Some(out) = &cli.out {
        cfg.outputs.dir = out.clone();
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = load_config(&cli)?;
    let registry = StrategyRegistry::builtin();
    match &cli.command {
        Command::Simulate => simulate(&cfg, &registry),
        Command::Sweep => sweep(&cfg, &registry),
        Command::Boundary => boundary(&cfg),
        Command::Replay { pool, policy } => replay(&cfg, &registry, pool.as_deref(), *policy),
        Command::EmitDgp { dgp, n, replay_pool, output } => {
            emit_dgp(&cfg, *dgp, *n, *replay_pool, output.as_deref())
        }
        Command::PrintConfig => {
            print!("{}", cfg.to_toml().map_err(config_err)?);
            Ok(())
        }
    }
}

fn output_path(cfg: &ExperimentConfig, suffix: &str) -> PathBuf {
    cfg.outputs.dir.join(format!("{}_{suffix}.csv", cfg.name))
}

fn slug(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' { c } else { '_' })
        .collect()
}

fn write_results(cfg: &ExperimentConfig, results: &[ExperimentResult]) -> Result<(), Failure> {
    let refs: Vec<&ExperimentResult> = results.iter().collect();
    let curves = output_path(cfg, "curves");
    io::write_file(&curves, |w| io::write_curves(w, &refs)).map_err(runtime_err)?;
    let aggregate = output_path(cfg, "aggregate");
    io::write_file(&aggregate, |w| io::write_aggregate(w, &refs)).map_err(runtime_err)?;
    println!("wrote {} and {}", curves.display(), aggregate.display());
    if cfg.outputs.query_log {
        for r in results {
            let path = output_path(cfg, &format!("queries_{}", slug(&r.meta.label)));
            io::write_file(&path, |w| io::write_query_log(w, r)).map_err(runtime_err)?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn summarize(r: &ExperimentResult) {
    match r.final_point() {
        Some(p) => println!(
            "{}: step {} mean AUC {:.4} [{:.4}, {:.4}] over {} runs",
            r.meta.label, p.step, p.mean, p.lo95, p.hi95, p.runs
        ),
        None => println!("{}: no aggregate (fewer than two complete runs)", r.meta.label),
    }
    for (run, err) in &r.meta.failed_runs {
        eprintln!("warning: {} run {run} failed: {err}", r.meta.label);
    }
    if !r.meta.truncated_runs.is_empty() {
        eprintln!("warning: {} truncated runs: {:?}", r.meta.label, r.meta.truncated_runs);
    }
}

fn simulate(cfg: &ExperimentConfig, registry: &StrategyRegistry) -> Result<(), Failure> {
    let arms = cfg.arms(registry).map_err(config_err)?;
    let mut results = Vec::with_capacity(arms.len());
    for arm in &arms {
        let r = run_replications(arm, cfg.engine.runs, cfg.engine.jobs, registry).map_err(runtime_err)?;
        summarize(&r);
        results.push(r);
    }
    write_results(cfg, &results)
}

fn sweep(cfg: &ExperimentConfig, registry: &StrategyRegistry) -> Result<(), Failure> {
    let base = cfg.single_arm(registry).map_err(config_err)?;
    let sweep = run_response_sweep(&base, &cfg.sweep.p_low_grid, cfg.engine.runs, cfg.engine.jobs, registry)
        .map_err(runtime_err)?;
    let mut results = Vec::new();
    for p in &sweep.points {
        summarize(&p.mar);
        summarize(&p.mcar);
        results.push(p.mar.clone());
        results.push(p.mcar.clone());
    }
    write_results(cfg, &results)?;
    let path = output_path(cfg, "sweep");
    io::write_file(&path, |w| io::write_sweep_summary(w, &sweep)).map_err(runtime_err)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn boundary(cfg: &ExperimentConfig) -> Result<(), Failure> {
    let b = &cfg.boundary;
    let opts = BoundaryOptions {
        fractions: b.fractions.clone(),
        train_n: b.train_n,
        holdout_n: b.holdout_n,
        fit: GradientDescent { epochs: b.epochs, ..BoundaryOptions::default().fit },
        seed: cfg.engine.base_seed,
        ..BoundaryOptions::default()
    };
    let results = run_boundary_experiment(&opts).map_err(runtime_err)?;
    for r in &results {
        match (&r.weights, r.auc) {
            (Some(w), Some(auc)) => println!("fraction {}: AUC {auc:.4}, weights {w:?}", r.fraction),
            _ => println!("fraction {}: observed region holds a single class", r.fraction),
        }
    }
    let path = output_path(cfg, "boundary");
    io::write_file(&path, |w| io::write_boundary(w, &results)).map_err(runtime_err)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn replay(
    cfg: &ExperimentConfig,
    registry: &StrategyRegistry,
    pool_path: Option<&Path>,
    policy: Option<PolicyArg>,
) -> Result<(), Failure> {
    let rc = &cfg.replay;
    let pool = match pool_path.or(rc.pool.as_deref()) {
        Some(path) => io::load_replay_pool(path).map_err(runtime_err)?,
        None => synthetic_replay_pool(rc.dgp, rc.pool_n, rc.p_low, rc.p_star, cfg.engine.base_seed)
            .map_err(runtime_err)?,
    };
    let policy = match policy {
        Some(PolicyArg::Remove) => PoolPolicy::Remove,
        Some(PolicyArg::Replace) => PoolPolicy::Replace,
        None => rc.policy,
    };
    let mut variants = Vec::new();
    for correction in rc.correction.to_vec() {
        match (correction, rc.response_source) {
            (Correction::UcbEu, ResponseSource::Oracle) => variants.extend(
                rc.oracle_auc.iter().map(|&a| (correction, ReplayResponse::Oracle { target_auc: a })),
            ),
            (Correction::UcbEu, ResponseSource::Model) => variants.push((correction, ReplayResponse::Model)),
            (Correction::None, _) => variants.push((correction, ReplayResponse::Model)),
        }
    }
    let mut results = Vec::new();
    for (correction, response) in variants {
        let config = ReplayConfig {
            strategy: rc.strategy.clone(),
            correction,
            policy,
            response,
            seed_examples: rc.seed_examples,
            holdout_n: rc.holdout_n,
            steps: rc.steps,
            batch: rc.batch,
            learner: cfg.learner,
            response_model: cfg.response_model,
            base_seed: cfg.engine.base_seed,
        };
        let r = run_replay(&pool, &config, rc.runs, cfg.engine.jobs, registry).map_err(runtime_err)?;
        summarize(&r);
        results.push(r);
    }
    write_results(cfg, &results)
}

fn emit_dgp(
    cfg: &ExperimentConfig,
    dgp: DgpId,
    n: usize,
    replay_pool: bool,
    output: Option<&Path>,
) -> Result<(), Failure> {
    if n == 0 {
        return Err(Failure::Config(Error::Config("--n must be positive".into())));
    }
    let seed = cfg.engine.base_seed;
    let write = |w: &mut dyn std::io::Write| -> albnr::Result<()> {
        if replay_pool {
            let pool = synthetic_replay_pool(dgp, n, cfg.replay.p_low, cfg.replay.p_star, seed)?;
            io::write_replay_pool(w, &pool)
        } else {
            let mut rng = substream(seed, Stream::Dgp);
            let generator = Dgp::prepare(dgp, cfg.dgp.calibration_n, &mut rng)?;
            io::write_examples(w, &generator.generate(n, &mut rng))
        }
    };
    match output {
        Some(path) => io::write_file(path, |w| write(w)).map_err(runtime_err),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock).map_err(runtime_err)
        }
    }
}
