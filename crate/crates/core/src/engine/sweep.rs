use super::{mean_ci, run_replications, ExperimentResult};
use crate::acquisition::StrategyRegistry;
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::nonresponse::{solve_region_split, MechanismKind, MechanismSpec};

/// Paired MAR and MCAR results at one low-region response probability.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub p_low: f64,
    pub p_high: f64,
    pub region_fraction: f64,
    pub mar: ExperimentResult,
    pub mcar: ExperimentResult,
}

impl SweepPoint {
    /// Marginal response rate implied by the region split.
    pub fn marginal_rate(&self) -> f64 {
        self.region_fraction * self.p_low + (1.0 - self.region_fraction) * self.p_high
    }

    /// `AUC(MCAR) - AUC(MAR)` at `step`, paired by run: mean and 95% interval.
    pub fn gap(&self, step: usize) -> Result<(f64, f64, f64)> {
        let mut diffs = Vec::new();
        for c in &self.mcar.curves {
            let twin = self.mar.curves.iter().find(|m| m.run_id == c.run_id);
            if let (Some(a), Some(b)) = (c.auc_at(step), twin.and_then(|m| m.auc_at(step))) {
                diffs.push(a - b);
            }
        }
        mean_ci(&diffs)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    /// Grid values whose region split was infeasible.
    pub skipped: Vec<(f64, String)>,
}

/// For each `p_low`, replicates `base` under a MAR mechanism and under MCAR
/// with the same marginal rate and seeds.
pub fn run_response_sweep(
    base: &RunConfig,
    p_low_grid: &[f64],
    runs: usize,
    jobs: usize,
    registry: &StrategyRegistry,
) -> Result<SweepResult> {
    if p_low_grid.is_empty() {
        return Err(Error::Config("empty p_low grid".into()));
    }
    let p_star = base.mechanism.p_star;
    let mut points = Vec::new();
    let mut skipped = Vec::new();
    for &p_low in p_low_grid {
        let (p_high, region_fraction) = match solve_region_split(p_low, p_star) {
            Ok(split) => split,
            Err(e) => {
                eprintln!("warning: skipping p_low = {p_low}: {e}");
                skipped.push((p_low, e.to_string()));
                continue;
            }
        };
        let with_kind = |kind| RunConfig {
            mechanism: MechanismSpec { kind, p_star, p_low, ..base.mechanism },
            ..base.clone()
        };
        let mut mar = run_replications(&with_kind(MechanismKind::Mar), runs, jobs, registry)?;
        let mut mcar = run_replications(&with_kind(MechanismKind::Mcar), runs, jobs, registry)?;
        mar.meta.label = format!("{} p_low={p_low}", mar.meta.label);
        mcar.meta.label = format!("{} p_low={p_low}", mcar.meta.label);
        points.push(SweepPoint { p_low, p_high, region_fraction, mar, mcar });
    }
    Ok(SweepResult { points, skipped })
}
