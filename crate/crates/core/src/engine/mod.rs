//! Experiment orchestration: single runs, replications with confidence
//! intervals, the response-probability sweep, the censored-boundary
//! experiment and replay on logged pools.

mod boundary;
mod replay;
mod simulate;
mod sweep;

use rayon::prelude::*;
use serde::Serialize;

pub use boundary::{run_boundary_experiment, BoundaryOptions, BoundaryResult};
pub use replay::{run_replay, synthetic_replay_pool, ReplayConfig, ReplayPool, ReplayResponse, ReplayRow};
pub use simulate::{run_simulation, RunOutput, Simulation};
pub use sweep::{run_response_sweep, SweepPoint, SweepResult};

use crate::acquisition::StrategyRegistry;
use crate::config::RunConfig;
use crate::data::{LearningCurve, QueryRecord};
use crate::error::{Error, Result};
use crate::numerics::{mean, sample_sd};

/// Normal quantile for a two-sided 95% interval.
pub const Z95: f64 = 1.96;

/// Build identifier stored with every result.
pub const VERSION: &str = match option_env!("ALBNR_BUILD_DESCRIBE") {
    Some(v) => v,
    None => concat!("v", env!("CARGO_PKG_VERSION")),
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AggregatePoint {
    pub step: usize,
    pub mean: f64,
    pub lo95: f64,
    pub hi95: f64,
    pub runs: usize,
}

/// Mean and normal-approximation 95% interval of `values`.
pub fn mean_ci(values: &[f64]) -> Result<(f64, f64, f64)> {
    if values.len() < 2 {
        return Err(Error::Aggregation(format!(
            "need at least 2 values for an interval, got {}",
            values.len()
        )));
    }
    let m = mean(values).unwrap_or(f64::NAN);
    let se = sample_sd(values).unwrap_or(0.0) / (values.len() as f64).sqrt();
    Ok((m, m - Z95 * se, m + Z95 * se))
}

/// Per-step mean AUC with a 95% interval across curves.
pub fn aggregate_curves(curves: &[LearningCurve]) -> Result<Vec<AggregatePoint>> {
    if curves.len() < 2 {
        return Err(Error::Aggregation(format!(
            "need at least 2 curves, got {}",
            curves.len()
        )));
    }
    let steps: Vec<usize> = curves[0].auc_by_step.iter().map(|&(s, _)| s).collect();
    for c in &curves[1..] {
        let other = c.auc_by_step.iter().map(|&(s, _)| s);
        if !other.eq(steps.iter().copied()) {
            return Err(Error::Aggregation(format!(
                "run {} has steps that do not line up with run {}",
                c.run_id, curves[0].run_id
            )));
        }
    }
    steps
        .iter()
        .enumerate()
        .map(|(k, &step)| {
            let values: Vec<f64> = curves.iter().map(|c| c.auc_by_step[k].1).collect();
            let (mean, lo95, hi95) = mean_ci(&values)?;
            Ok(AggregatePoint { step, mean, lo95, hi95, runs: curves.len() })
        })
        .collect()
}

/// Identifies an arm in output files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArmTag {
    pub label: String,
    pub mechanism: String,
    pub strategy: String,
    pub correction: String,
}

impl ArmTag {
    pub fn for_run(config: &RunConfig) -> Self {
        Self {
            label: config.label(),
            mechanism: config.mechanism.kind.name().to_string(),
            strategy: config.strategy.clone(),
            correction: config.correction.name().to_string(),
        }
    }
}

/// One run's query log.
#[derive(Debug, Clone, PartialEq)]
pub struct RunQueries {
    pub run: usize,
    pub records: Vec<QueryRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultMeta {
    pub label: String,
    pub mechanism: String,
    pub strategy: String,
    pub correction: String,
    pub config: Option<RunConfig>,
    pub version: String,
    /// Runs whose pool ran out before the final step; excluded from the
    /// aggregate.
    pub truncated_runs: Vec<usize>,
    pub failed_runs: Vec<(usize, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub curves: Vec<LearningCurve>,
    pub query_log: Vec<RunQueries>,
    /// `None` when fewer than two complete runs are available.
    pub aggregate: Option<Vec<AggregatePoint>>,
    pub meta: ResultMeta,
}

impl ExperimentResult {
    /// Assembles a result from per-run outcomes, ordered by run index.
    pub fn from_runs(tag: ArmTag, config: Option<RunConfig>, runs: Vec<(usize, Result<RunOutput>)>) -> Self {
        let mut curves = Vec::new();
        let mut query_log = Vec::new();
        let mut truncated_runs = Vec::new();
        let mut failed_runs = Vec::new();
        for (run, outcome) in runs {
            match outcome {
                Ok(out) => {
                    if out.truncated {
                        truncated_runs.push(run);
                    }
                    curves.push(out.curve);
                    query_log.push(RunQueries { run, records: out.queries });
                }
                Err(e) => failed_runs.push((run, e.to_string())),
            }
        }
        let complete: Vec<LearningCurve> = curves
            .iter()
            .filter(|c| !truncated_runs.contains(&c.run_id))
            .cloned()
            .collect();
        let aggregate = aggregate_curves(&complete).ok();
        Self {
            curves,
            query_log,
            aggregate,
            meta: ResultMeta {
                label: tag.label,
                mechanism: tag.mechanism,
                strategy: tag.strategy,
                correction: tag.correction,
                config,
                version: VERSION.to_string(),
                truncated_runs,
                failed_runs,
            },
        }
    }

    pub fn at_step(&self, step: usize) -> Option<AggregatePoint> {
        self.aggregate.as_ref()?.iter().find(|p| p.step == step).copied()
    }

    pub fn final_point(&self) -> Option<AggregatePoint> {
        self.aggregate.as_ref()?.last().copied()
    }

    /// AUC of each completed run at `step`, in run order.
    pub fn aucs_at(&self, step: usize) -> Vec<f64> {
        self.curves.iter().filter_map(|c| c.auc_at(step)).collect()
    }
}

/// Runs `work` over `0..runs` on at most `jobs` threads (0 = all cores).
/// Results come back in run order whatever the schedule.
pub(crate) fn parallel_runs<T, F>(runs: usize, jobs: usize, work: F) -> Result<Vec<(usize, T)>>
where
    T: Send,
    F: Fn(usize) -> T + Send + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| (0..runs).into_par_iter().map(|i| (i, work(i))).collect()))
}

/// `runs` independent replications of one arm.
pub fn run_replications(
    config: &RunConfig,
    runs: usize,
    jobs: usize,
    registry: &StrategyRegistry,
) -> Result<ExperimentResult> {
    if runs < 2 {
        return Err(Error::Config(format!("need at least 2 runs, got {runs}")));
    }
    let sim = Simulation::prepare(config, registry)?;
    let outcomes = parallel_runs(runs, jobs, |i| sim.run(i))?;
    Ok(ExperimentResult::from_runs(ArmTag::for_run(config), Some(config.clone()), outcomes))
}
