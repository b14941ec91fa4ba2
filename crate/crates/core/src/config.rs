//! Run and experiment configuration.
//!
//! [`RunConfig`] describes a single simulated arm. [`ExperimentConfig`] is the
//! TOML document read by the CLI; list-valued keys (`dgp.id`,
//! `mechanism.kind`, `strategy.name`, `correction.kind`) expand into the
//! cartesian product of arms.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::acquisition::{Correction, Disagreement, StrategyRegistry};
use crate::data::PoolPolicy;
use crate::dgp::{DgpId, DEFAULT_CALIBRATION_N, MIN_CALIBRATION_N};
use crate::error::{Error, Result};
use crate::learners::{LearnerKind, LearnerParams};
use crate::nonresponse::{MechanismKind, MechanismSpec};
use crate::response_model::ResponseModelParams;

/// Fully resolved configuration of one simulated arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub dgp: DgpId,
    pub mechanism: MechanismSpec,
    pub strategy: String,
    pub qbc_disagreement: Disagreement,
    /// Target-model override; `None` uses the strategy's default.
    pub learner_kind: Option<LearnerKind>,
    pub learner: LearnerParams,
    pub correction: Correction,
    pub steps: usize,
    pub batch: usize,
    pub seed_examples: usize,
    pub holdout_n: usize,
    pub pool_n: usize,
    pub pool_policy: PoolPolicy,
    pub base_seed: u64,
    pub calibration_n: usize,
    pub response_model: ResponseModelParams,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dgp: DgpId::Synthetic1,
            mechanism: MechanismSpec {
                kind: MechanismKind::Full,
                p_star: 0.3,
                p_low: 0.001,
                dimension: 0,
            },
            strategy: "uncertainty".into(),
            qbc_disagreement: Disagreement::Max,
            learner_kind: None,
            learner: LearnerParams::default(),
            correction: Correction::None,
            steps: 50,
            batch: 10,
            seed_examples: 2,
            holdout_n: 1000,
            pool_n: 5000,
            pool_policy: PoolPolicy::Retain,
            base_seed: 0,
            calibration_n: DEFAULT_CALIBRATION_N,
            response_model: ResponseModelParams::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("steps", self.steps),
            ("batch", self.batch),
            ("seed_examples", self.seed_examples),
            ("holdout_n", self.holdout_n),
            ("pool_n", self.pool_n),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be positive")));
        }
        if self.batch > self.pool_n {
            return Err(Error::Config(format!(
                "batch {} exceeds pool size {}",
                self.batch, self.pool_n
            )));
        }
        if self.seed_examples > self.pool_n {
            return Err(Error::Config("more seed examples than pool points".into()));
        }
        if self.dgp == DgpId::Mar1 && self.calibration_n < MIN_CALIBRATION_N {
            return Err(Error::Config(format!(
                "calibration_n must be at least {MIN_CALIBRATION_N}"
            )));
        }
        if self.mechanism.kind == MechanismKind::Mar && self.mechanism.dimension >= self.dgp.dim() {
            return Err(Error::Config(format!(
                "mechanism dimension {} out of range for {} ({} features)",
                self.mechanism.dimension,
                self.dgp,
                self.dgp.dim()
            )));
        }
        self.mechanism.build()?;
        self.learner.validate()?;
        self.response_model.validate()?;
        Ok(())
    }

    /// `dgp/mechanism/strategy/correction`, used as the experiment label.
    pub fn label(&self) -> String {
        format!(
            "{}/{}/{}/{}",
            self.dgp,
            self.mechanism.kind.name(),
            self.strategy,
            self.correction
        )
    }
}

/// A scalar or a list of scalars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DgpSection {
    pub id: OneOrMany<DgpId>,
    pub pool_n: usize,
    pub holdout_n: usize,
    pub calibration_n: usize,
}

impl Default for DgpSection {
    fn default() -> Self {
        let run = RunConfig::default();
        Self {
            id: OneOrMany::One(run.dgp),
            pool_n: run.pool_n,
            holdout_n: run.holdout_n,
            calibration_n: run.calibration_n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MechanismSection {
    pub kind: OneOrMany<MechanismKind>,
    pub p_star: f64,
    pub p_low: f64,
    pub dimension: usize,
}

impl Default for MechanismSection {
    fn default() -> Self {
        let m = RunConfig::default().mechanism;
        Self { kind: OneOrMany::One(m.kind), p_star: m.p_star, p_low: m.p_low, dimension: m.dimension }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StrategySection {
    pub name: OneOrMany<String>,
    pub qbc_disagreement: Disagreement,
    /// Target model for strategies that accept one (`random`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub learner: Option<LearnerKind>,
}

impl Default for StrategySection {
    fn default() -> Self {
        Self {
            name: OneOrMany::One("uncertainty".into()),
            qbc_disagreement: Disagreement::Max,
            learner: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorrectionSection {
    pub kind: OneOrMany<Correction>,
}

impl Default for CorrectionSection {
    fn default() -> Self {
        Self { kind: OneOrMany::One(Correction::None) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngineSection {
    pub steps: usize,
    pub batch: usize,
    pub runs: usize,
    pub seed_examples: usize,
    pub base_seed: u64,
    pub pool_policy: PoolPolicy,
    /// Concurrent replications; 0 uses every available core.
    pub jobs: usize,
}

impl Default for EngineSection {
    fn default() -> Self {
        let run = RunConfig::default();
        Self {
            steps: run.steps,
            batch: run.batch,
            runs: 20,
            seed_examples: run.seed_examples,
            base_seed: run.base_seed,
            pool_policy: run.pool_policy,
            jobs: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub p_low_grid: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { p_low_grid: vec![0.001, 0.01, 0.05, 0.15, 0.3] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundarySection {
    /// Share of the population censored on the left of dimension 0.
    pub fractions: Vec<f64>,
    pub train_n: usize,
    pub holdout_n: usize,
    pub epochs: usize,
}

impl Default for BoundarySection {
    fn default() -> Self {
        Self { fractions: vec![0.0, 0.5, 0.7, 0.85], train_n: 6000, holdout_n: 5000, epochs: 3000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseSource {
    /// Rank candidates with the observed response column, corrupted to a
    /// target ROC AUC.
    Oracle,
    /// Fit a response model on the pool's observed responses.
    Model,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReplaySection {
    /// Pool CSV; a synthetic pool is generated when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pool: Option<PathBuf>,
    /// Synthetic pool: generator, size and response mechanism.
    pub dgp: DgpId,
    pub pool_n: usize,
    pub p_star: f64,
    pub p_low: f64,
    pub policy: PoolPolicy,
    pub strategy: String,
    pub correction: OneOrMany<Correction>,
    pub response_source: ResponseSource,
    pub oracle_auc: Vec<f64>,
    pub seed_examples: usize,
    pub holdout_n: usize,
    pub steps: usize,
    pub batch: usize,
    pub runs: usize,
}

impl Default for ReplaySection {
    fn default() -> Self {
        Self {
            pool: None,
            dgp: DgpId::Mar1,
            pool_n: 50_000,
            p_star: 0.3,
            p_low: 0.001,
            policy: PoolPolicy::Remove,
            strategy: "qbc".into(),
            correction: OneOrMany::One(Correction::UcbEu),
            response_source: ResponseSource::Oracle,
            oracle_auc: vec![0.6, 1.0],
            seed_examples: 50,
            holdout_n: 2000,
            steps: 25,
            batch: 500,
            runs: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub query_log: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("results"), query_log: false }
    }
}

/// The configuration document accepted by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub name: String,
    pub dgp: DgpSection,
    pub mechanism: MechanismSection,
    pub learner: LearnerParams,
    pub strategy: StrategySection,
    pub correction: CorrectionSection,
    pub engine: EngineSection,
    pub response_model: ResponseModelParams,
    pub sweep: SweepSection,
    pub boundary: BoundarySection,
    pub replay: ReplaySection,
    pub outputs: OutputSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: "experiment".into(),
            dgp: DgpSection::default(),
            mechanism: MechanismSection::default(),
            learner: LearnerParams::default(),
            strategy: StrategySection::default(),
            correction: CorrectionSection::default(),
            engine: EngineSection::default(),
            response_model: ResponseModelParams::default(),
            sweep: SweepSection::default(),
            boundary: BoundarySection::default(),
            replay: ReplaySection::default(),
            outputs: OutputSection::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Every arm of the experiment, in dgp, mechanism, strategy, correction
    /// order. Each arm is validated against `registry`.
    pub fn arms(&self, registry: &StrategyRegistry) -> Result<Vec<RunConfig>> {
        let mut arms = Vec::new();
        for dgp in self.dgp.id.to_vec() {
            for kind in self.mechanism.kind.to_vec() {
                for strategy in self.strategy.name.to_vec() {
                    if !registry.contains(&strategy) {
                        return Err(Error::Config(format!("unknown strategy `{strategy}`")));
                    }
                    for correction in self.correction.kind.to_vec() {
                        let run = RunConfig {
                            dgp,
                            mechanism: MechanismSpec {
                                kind,
                                p_star: self.mechanism.p_star,
                                p_low: self.mechanism.p_low,
                                dimension: self.mechanism.dimension,
                            },
                            strategy: strategy.clone(),
                            qbc_disagreement: self.strategy.qbc_disagreement,
                            learner_kind: self.strategy.learner,
                            learner: self.learner,
                            correction,
                            steps: self.engine.steps,
                            batch: self.engine.batch,
                            seed_examples: self.engine.seed_examples,
                            holdout_n: self.dgp.holdout_n,
                            pool_n: self.dgp.pool_n,
                            pool_policy: self.engine.pool_policy,
                            base_seed: self.engine.base_seed,
                            calibration_n: self.dgp.calibration_n,
                            response_model: self.response_model,
                        };
                        run.validate()?;
                        arms.push(run);
                    }
                }
            }
        }
        if arms.is_empty() {
            return Err(Error::Config("configuration expands to no arms".into()));
        }
        Ok(arms)
    }

    /// First arm, for commands that act on a single configuration.
    pub fn single_arm(&self, registry: &StrategyRegistry) -> Result<RunConfig> {
        Ok(self.arms(registry)?.remove(0))
    }
}
