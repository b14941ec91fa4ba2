use std::sync::Arc;

use crate::acquisition::{
    select_batch, AcquisitionScores, AcquisitionStrategy, SelectionMode,
    StrategyOptions, StrategyRegistry,
};
use crate::config::RunConfig;
use crate::data::{
    apply_query_outcome, reveal_seed, LabeledExample, LearningCurve, Pool, QueryRecord, TrainingSet,
};
use crate::dgp::Dgp;
use crate::error::{Error, Result};
use crate::learners::{LearnerKind, TargetModel};
use crate::nonresponse::{realize_response, MechanismKind, NonResponseMechanism};
use crate::numerics::{roc_auc, ScoreVector};
use crate::response_model::{fit_response_model, FitReport};
use crate::rng::{run_seed, substream, Stream};

use rand::seq::index;
use rand::Rng;

/// Everything one replication produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub curve: LearningCurve,
    pub queries: Vec<QueryRecord>,
    /// Mechanism with its threshold calibrated on this run's pool.
    pub mechanism: Option<NonResponseMechanism>,
    pub response_model: Option<FitReport>,
    /// The pool ran out of selectable points before the last step.
    pub truncated: bool,
}

impl RunOutput {
    pub fn responded_count(&self) -> usize {
        self.queries.iter().filter(|q| q.responded).count()
    }
}

/// A validated arm with its strategy resolved and its generator calibrated,
/// ready to run replications.
#[derive(Debug, Clone)]
pub struct Simulation {
    config: RunConfig,
    strategy: Arc<dyn AcquisitionStrategy>,
    dgp: Dgp,
}

impl Simulation {
    pub fn prepare(config: &RunConfig, registry: &StrategyRegistry) -> Result<Self> {
        config.validate()?;
        let strategy = registry.create(
            &config.strategy,
            &StrategyOptions { qbc_disagreement: config.qbc_disagreement, learner: config.learner_kind },
        )?;
        // the label threshold is shared by every run of the arm
        let dgp = Dgp::prepare(
            config.dgp,
            config.calibration_n,
            &mut substream(config.base_seed, Stream::Dgp),
        )?;
        Ok(Self { config: config.clone(), strategy, dgp })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn dgp(&self) -> &Dgp {
        &self.dgp
    }

    pub fn strategy(&self) -> &dyn AcquisitionStrategy {
        self.strategy.as_ref()
    }

    pub fn run(&self, run_index: usize) -> Result<RunOutput> {
        let cfg = &self.config;
        let seed = run_seed(cfg.base_seed, run_index);
        let mut dgp_rng = substream(seed, Stream::Dgp);

        let examples = self.dgp.generate(cfg.pool_n, &mut dgp_rng);
        let mechanism = cfg
            .mechanism
            .build()?
            .calibrate_threshold(examples.iter().map(|e| e.features.as_slice()))?;
        let response_prob = examples
            .iter()
            .map(|e| mechanism.response_probability(&e.features))
            .collect::<Result<Vec<_>>>()?;
        let holdout = draw_holdout(&self.dgp, cfg.holdout_n, &mut substream(seed, Stream::Holdout))?;

        let mode = self.strategy.selection_mode(cfg.correction);
        let (response_q, response_model) = if needs_response(mode) {
            self.pool_response_quantiles(&examples, &mechanism, seed)?
        } else {
            (None, None)
        };

        let pool = Pool::new(examples, response_prob)?;
        let env = LoopInputs {
            strategy: self.strategy.as_ref(),
            learner: self.strategy.learner_kind(),
            mode,
            steps: cfg.steps,
            batch: cfg.batch,
            seed_examples: cfg.seed_examples,
            policy: cfg.pool_policy,
            params: &cfg.learner,
        };
        let outcome = active_learning_loop(&env, pool, response_q.as_deref(), &holdout, seed, run_index)?;
        Ok(RunOutput {
            curve: outcome.curve,
            queries: outcome.queries,
            mechanism: Some(mechanism),
            response_model,
            truncated: outcome.truncated,
        })
    }

    /// Pre-trains the response model on fresh draws and scores the pool.
    /// Under full response every estimate is 1.
    fn pool_response_quantiles(
        &self,
        pool: &[LabeledExample],
        mechanism: &NonResponseMechanism,
        seed: u64,
    ) -> Result<(Option<Vec<f64>>, Option<FitReport>)> {
        if mechanism.kind() == MechanismKind::Full {
            return Ok((Some(vec![1.0; pool.len()]), None));
        }
        let params = &self.config.response_model;
        let mut rng = substream(seed, Stream::ResponseModel);
        let train = self.dgp.generate(params.pretrain_n, &mut rng);
        let mut x = Vec::with_capacity(train.len());
        let mut r = Vec::with_capacity(train.len());
        for e in train {
            let p = mechanism.response_probability(&e.features)?;
            r.push(realize_response(p, &mut rng) as u8);
            x.push(e.features);
        }
        let gate = (mechanism.kind() == MechanismKind::Mar).then(|| params.gate());
        let model = fit_response_model(&x, &r, params, gate, &mut rng)?;
        let pool_x: Vec<Vec<f64>> = pool.iter().map(|e| e.features.clone()).collect();
        let q = model.predict_response_quantile(&pool_x, params.quantile)?;
        Ok((Some(q), Some(model.report())))
    }
}

fn needs_response(mode: SelectionMode) -> bool {
    matches!(mode, SelectionMode::UcbEu | SelectionMode::WeightedRandom)
}

/// Evaluation set; redrawn once if it happens to contain one class.
pub(crate) fn draw_holdout<R: Rng + ?Sized>(dgp: &Dgp, n: usize, rng: &mut R) -> Result<Holdout> {
    for _ in 0..2 {
        let holdout = Holdout::from_examples(dgp.generate(n, rng));
        if holdout.is_two_class() {
            return Ok(holdout);
        }
    }
    Err(Error::UndefinedMetric(format!("holdout of {n} points contains a single class twice")))
}

#[derive(Debug, Clone)]
pub(crate) struct Holdout {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
}

impl Holdout {
    pub fn from_examples(examples: Vec<LabeledExample>) -> Self {
        let (features, labels) = examples.into_iter().map(|e| (e.features, e.label)).unzip();
        Self { features, labels }
    }

    pub fn is_two_class(&self) -> bool {
        let pos = self.labels.iter().filter(|&&y| y == 1).count();
        pos > 0 && pos < self.labels.len()
    }

    pub fn auc(&self, model: &TargetModel) -> Result<f64> {
        roc_auc(&model.predict_proba(&self.features)?, &self.labels)
    }
}

pub(crate) struct LoopInputs<'a> {
    pub strategy: &'a dyn AcquisitionStrategy,
    pub learner: LearnerKind,
    pub mode: SelectionMode,
    pub steps: usize,
    pub batch: usize,
    pub seed_examples: usize,
    pub policy: crate::data::PoolPolicy,
    pub params: &'a crate::learners::LearnerParams,
}

pub(crate) struct LoopOutcome {
    pub curve: LearningCurve,
    pub queries: Vec<QueryRecord>,
    pub truncated: bool,
}

/// Seeds the training set, then runs `steps` rounds of score, select,
/// realise responses, refit, evaluate.
///
/// `seed_candidates` restricts which pool points may seed the training set;
/// every point is eligible when `None`.
pub(crate) fn active_learning_loop_with_seeds(
    env: &LoopInputs<'_>,
    mut pool: Pool,
    seed_candidates: Option<&[usize]>,
    response_q: Option<&[f64]>,
    holdout: &Holdout,
    seed: u64,
    run_index: usize,
) -> Result<LoopOutcome> {
    let mut strategy_rng = substream(seed, Stream::Strategy);
    let mut response_rng = substream(seed, Stream::Response);
    let mut learner_rng = substream(seed, Stream::Learner);

    let mut train = TrainingSet::new();
    let candidates: Vec<usize> = match seed_candidates {
        Some(c) => c.to_vec(),
        None => (0..pool.len()).collect(),
    };
    if env.seed_examples > candidates.len() {
        return Err(Error::Budget { requested: env.seed_examples, available: candidates.len() });
    }
    for k in index::sample(&mut strategy_rng, candidates.len(), env.seed_examples) {
        reveal_seed(&mut train, &mut pool, candidates[k])?;
    }
    let mut model = TargetModel::fit(env.learner, train.features(), train.labels(), env.params, &mut learner_rng)?;

    let mut curve = LearningCurve::new(run_index);
    let mut queries = Vec::new();
    let mut truncated = false;
    for step in 1..=env.steps {
        let selectable = pool.selectable_indices();
        if selectable.is_empty() {
            truncated = true;
            break;
        }
        let b = if selectable.len() < env.batch {
            truncated = true;
            selectable.len()
        } else {
            env.batch
        };
        let x: Vec<Vec<f64>> = selectable.iter().map(|&i| pool.features(i).to_vec()).collect();
        let u = env.strategy.informativeness(&model, &x)?;
        let p = match (needs_response(env.mode), response_q) {
            (false, _) => None,
            (true, Some(q)) => Some(ScoreVector::new(selectable.iter().map(|&i| q[i]).collect())?),
            (true, None) => {
                return Err(Error::Config("selection needs response estimates".into()));
            }
        };
        let scores = AcquisitionScores::new(u, p, env.mode)?;
        let picks = select_batch(&scores, b, &mut strategy_rng)?;
        for pos in picks {
            let idx = selectable[pos];
            let responded = realize_response(pool.response_prob(idx), &mut response_rng);
            queries.push(QueryRecord {
                step,
                pool_index: idx,
                features: pool.features(idx).to_vec(),
                responded,
                informativeness: scores.informativeness.as_slice()[pos],
                response_quantile: scores
                    .response_q
                    .as_ref()
                    .map_or(f64::NAN, |q| q.as_slice()[pos]),
            });
            apply_query_outcome(&mut train, &mut pool, idx, responded, env.policy, step)?;
        }
        model = TargetModel::fit(env.learner, train.features(), train.labels(), env.params, &mut learner_rng)?;
        curve.record(step, holdout.auc(&model)?, train.len());
        if truncated {
            break;
        }
    }
    Ok(LoopOutcome { curve, queries, truncated })
}

pub(crate) fn active_learning_loop(
    env: &LoopInputs<'_>,
    pool: Pool,
    response_q: Option<&[f64]>,
    holdout: &Holdout,
    seed: u64,
    run_index: usize,
) -> Result<LoopOutcome> {
    active_learning_loop_with_seeds(env, pool, None, response_q, holdout, seed, run_index)
}

/// Runs replication `run_index` of `config` with the built-in strategies.
pub fn run_simulation(config: &RunConfig, run_index: usize) -> Result<RunOutput> {
    Simulation::prepare(config, &StrategyRegistry::builtin())?.run(run_index)
}
