use rand::seq::SliceRandom;

use super::simulate::{active_learning_loop_with_seeds, Holdout, LoopInputs};
use super::{parallel_runs, ArmTag, ExperimentResult, RunOutput};
use crate::acquisition::{Correction, StrategyOptions, StrategyRegistry};
use crate::data::{LabeledExample, Pool, PoolPolicy};
use crate::dgp::{Dgp, DgpId, DEFAULT_CALIBRATION_N};
use crate::error::{Error, Result};
use crate::learners::LearnerParams;
use crate::nonresponse::{realize_response, NonResponseMechanism};
use crate::response_model::{fit_response_model, make_corrupted_oracle, ResponseModelParams};
use crate::rng::{run_seed, substream, Stream};

/// One logged impression.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayRow {
    pub features: Vec<f64>,
    /// Known only for rows that responded.
    pub label: Option<u8>,
    pub response: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayPool {
    rows: Vec<ReplayRow>,
    dim: usize,
}

impl ReplayPool {
    pub fn new(rows: Vec<ReplayRow>) -> Result<Self> {
        let dim = rows
            .first()
            .map(|r| r.features.len())
            .ok_or_else(|| Error::Domain("replay pool is empty".into()))?;
        for (i, row) in rows.iter().enumerate() {
            let fail = |message: String| Error::Ingestion { row: i + 1, message };
            if row.features.len() != dim {
                return Err(fail(format!("expected {dim} features, got {}", row.features.len())));
            }
            if row.features.iter().any(|v| !v.is_finite()) {
                return Err(fail("non-finite feature".into()));
            }
            match (row.response, row.label) {
                (0, _) | (1, Some(0 | 1)) => {}
                (1, None) => return Err(fail("responded row without a label".into())),
                (1, Some(l)) => return Err(fail(format!("label {l} is not binary"))),
                (r, _) => return Err(fail(format!("response {r} is not binary"))),
            }
        }
        Ok(Self { rows, dim })
    }

    pub fn rows(&self) -> &[ReplayRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn responded_indices(&self) -> Vec<usize> {
        (0..self.rows.len()).filter(|&i| self.rows[i].response == 1).collect()
    }
}

/// Logged pool drawn from `dgp` with responses realised once by a MAR
/// mechanism on dimension 0. Non-responders keep no label.
pub fn synthetic_replay_pool(dgp: DgpId, n: usize, p_low: f64, p_star: f64, seed: u64) -> Result<ReplayPool> {
    let mut rng = substream(seed, Stream::Dgp);
    let generator = Dgp::prepare(dgp, DEFAULT_CALIBRATION_N, &mut rng)?;
    let examples = generator.generate(n, &mut rng);
    let mechanism = NonResponseMechanism::mar(p_low, p_star, 0)?
        .calibrate_threshold(examples.iter().map(|e| e.features.as_slice()))?;
    let mut response_rng = substream(seed, Stream::Response);
    let rows = examples
        .into_iter()
        .map(|e| {
            let responded = realize_response(mechanism.response_probability(&e.features)?, &mut response_rng);
            Ok(ReplayRow {
                label: responded.then_some(e.label),
                features: e.features,
                response: responded as u8,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ReplayPool::new(rows)
}

/// How candidates' response probabilities are estimated under UCB-EU.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReplayResponse {
    /// The observed response column with a random subset of indicators
    /// flipped so its ROC AUC is `target_auc`.
    Oracle { target_auc: f64 },
    /// A response model fitted on the pool's observed responses.
    Model,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayConfig {
    pub strategy: String,
    pub correction: Correction,
    pub policy: PoolPolicy,
    pub response: ReplayResponse,
    pub seed_examples: usize,
    pub holdout_n: usize,
    pub steps: usize,
    pub batch: usize,
    pub learner: LearnerParams,
    pub response_model: ResponseModelParams,
    pub base_seed: u64,
}

impl Default for ReplayConfig {
    fn default() -> Self {
        Self {
            strategy: "qbc".into(),
            correction: Correction::UcbEu,
            policy: PoolPolicy::Remove,
            response: ReplayResponse::Oracle { target_auc: 1.0 },
            seed_examples: 50,
            holdout_n: 2000,
            steps: 25,
            batch: 500,
            learner: LearnerParams::default(),
            response_model: ResponseModelParams::default(),
            base_seed: 0,
        }
    }
}

impl ReplayConfig {
    pub fn label(&self) -> String {
        let source = match self.response {
            ReplayResponse::Oracle { target_auc } => format!("oracle_auc={target_auc}"),
            ReplayResponse::Model => "model".into(),
        };
        format!("replay/{}/{}/{}/{source}", self.policy.name(), self.strategy, self.correction)
    }

    fn validate(&self, pool: &ReplayPool) -> Result<()> {
        if self.steps == 0 || self.batch == 0 || self.seed_examples == 0 || self.holdout_n < 2 {
            return Err(Error::Config("replay sizes must be positive".into()));
        }
        if self.policy == PoolPolicy::Retain {
            return Err(Error::Config("replay policy must be remove or replace".into()));
        }
        let responded = pool.responded_indices().len();
        if self.holdout_n + self.seed_examples > responded {
            return Err(Error::Config(format!(
                "pool has {responded} responded rows, fewer than holdout plus seeds ({})",
                self.holdout_n + self.seed_examples
            )));
        }
        self.learner.validate()
    }
}

/// Replays the logged pool `runs` times. The realised response of a query
/// is the row's observed response; evaluation uses responded rows held out
/// from the pool.
pub fn run_replay(
    pool: &ReplayPool,
    config: &ReplayConfig,
    runs: usize,
    jobs: usize,
    registry: &StrategyRegistry,
) -> Result<ExperimentResult> {
    if runs < 2 {
        return Err(Error::Config(format!("need at least 2 runs, got {runs}")));
    }
    config.validate(pool)?;
    let strategy = registry.create(&config.strategy, &StrategyOptions::default())?;
    let mode = strategy.selection_mode(config.correction);

    let outcomes = parallel_runs(runs, jobs, |run_index| -> Result<RunOutput> {
        let seed = run_seed(config.base_seed, run_index);
        let mut responded = pool.responded_indices();
        responded.shuffle(&mut substream(seed, Stream::Holdout));
        let holdout_rows = &responded[..config.holdout_n];
        let holdout = Holdout::from_examples(
            holdout_rows
                .iter()
                .map(|&i| {
                    let row = &pool.rows[i];
                    LabeledExample { features: row.features.clone(), label: row.label.unwrap_or(0) }
                })
                .collect(),
        );
        if !holdout.is_two_class() {
            return Err(Error::UndefinedMetric("replay holdout contains a single class".into()));
        }

        let mut in_holdout = vec![false; pool.len()];
        for &i in holdout_rows {
            in_holdout[i] = true;
        }
        let active: Vec<&ReplayRow> =
            pool.rows.iter().zip(&in_holdout).filter(|(_, h)| !**h).map(|(r, _)| r).collect();
        let examples: Vec<LabeledExample> = active
            .iter()
            .map(|r| LabeledExample { features: r.features.clone(), label: r.label.unwrap_or(0) })
            .collect();
        let observed: Vec<u8> = active.iter().map(|r| r.response).collect();
        let seed_candidates: Vec<usize> = (0..active.len()).filter(|&i| observed[i] == 1).collect();

        let response_q = match (config.correction, config.response) {
            (Correction::None, _) => None,
            (Correction::UcbEu, ReplayResponse::Oracle { target_auc }) => Some(
                make_corrupted_oracle(&observed, target_auc, &mut substream(seed, Stream::ResponseModel))?
                    .scores(),
            ),
            (Correction::UcbEu, ReplayResponse::Model) => {
                let x: Vec<Vec<f64>> = examples.iter().map(|e| e.features.clone()).collect();
                let model = fit_response_model(
                    &x,
                    &observed,
                    &config.response_model,
                    None,
                    &mut substream(seed, Stream::ResponseModel),
                )?;
                Some(model.predict_response_quantile(&x, config.response_model.quantile)?)
            }
        };

        let al_pool = Pool::new(examples, observed.iter().map(|&r| r as f64).collect())?;
        let env = LoopInputs {
            strategy: strategy.as_ref(),
            learner: strategy.learner_kind(),
            mode,
            steps: config.steps,
            batch: config.batch,
            seed_examples: config.seed_examples,
            policy: config.policy,
            params: &config.learner,
        };
        let outcome = active_learning_loop_with_seeds(
            &env,
            al_pool,
            Some(&seed_candidates),
            response_q.as_deref(),
            &holdout,
            seed,
            run_index,
        )?;
        Ok(RunOutput {
            curve: outcome.curve,
            queries: outcome.queries,
            mechanism: None,
            response_model: None,
            truncated: outcome.truncated,
        })
    })?;
    let tag = ArmTag {
        label: config.label(),
        mechanism: "replay".into(),
        strategy: config.strategy.clone(),
        correction: config.correction.name().into(),
    };
    Ok(ExperimentResult::from_runs(tag, None, outcomes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pool_validation_reports_row() {
        let good = ReplayRow { features: vec![0.0, 1.0], label: Some(1), response: 1 };
        let unlabeled = ReplayRow { features: vec![0.0, 1.0], label: None, response: 0 };
        assert!(ReplayPool::new(vec![good.clone(), unlabeled.clone()]).is_ok());
        let bad = ReplayRow { label: None, ..good.clone() };
        assert_eq!(
            ReplayPool::new(vec![good.clone(), unlabeled, bad]),
            Err(Error::Ingestion { row: 3, message: "responded row without a label".into() })
        );
        let short = ReplayRow { features: vec![0.0], ..good.clone() };
        assert!(matches!(ReplayPool::new(vec![good, short]), Err(Error::Ingestion { row: 2, .. })));
    }

    #[test]
    fn synthetic_pool_hides_non_responder_labels() {
        let pool = synthetic_replay_pool(DgpId::Synthetic1, 5000, 0.001, 0.3, 4).unwrap();
        assert!(pool.rows().iter().all(|r| (r.response == 1) == r.label.is_some()));
        let rate = pool.responded_indices().len() as f64 / pool.len() as f64;
        assert!((rate - 0.3).abs() < 0.03, "{rate}");
    }
}
