//! Pools, training sets and the per-query update rule.
//!
//! True labels live inside [`Pool`] but are only handed to a learner through
//! [`apply_query_outcome`] (or [`reveal_seed`] for the initial examples).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample {
    pub features: Vec<f64>,
    pub label: u8,
}

impl LabeledExample {
    pub fn new(features: Vec<f64>, label: u8) -> Result<Self> {
        if label > 1 {
            return Err(Error::Domain(format!("label {label} is not binary")));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("feature vector contains non-finite values".into()));
        }
        Ok(Self { features, label })
    }
}

/// Lifecycle of a pool point. `Consumed` is terminal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolStatus {
    Available,
    QueriedNoResponse,
    Consumed,
}

impl PoolStatus {
    pub fn is_selectable(self) -> bool {
        self != PoolStatus::Consumed
    }
}

/// What happens to a queried point that did not respond.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolPolicy {
    /// Stays selectable in later rounds.
    Retain,
    /// Leaves the pool for good.
    Remove,
    /// Put back into the pool; same semantics as `Retain`.
    Replace,
}

impl PoolPolicy {
    pub fn name(self) -> &'static str {
        match self {
            PoolPolicy::Retain => "retain",
            PoolPolicy::Remove => "remove",
            PoolPolicy::Replace => "replace",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Pool {
    examples: Vec<LabeledExample>,
    response_prob: Vec<f64>,
    status: Vec<PoolStatus>,
    dim: usize,
}

impl Pool {
    pub fn new(examples: Vec<LabeledExample>, response_prob: Vec<f64>) -> Result<Self> {
        if examples.is_empty() {
            return Err(Error::Domain("pool must contain at least one example".into()));
        }
        if examples.len() != response_prob.len() {
            return Err(Error::Domain(format!(
                "{} examples but {} response probabilities",
                examples.len(),
                response_prob.len()
            )));
        }
        if let Some(p) = response_prob.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::Domain(format!("response probability {p} outside [0, 1]")));
        }
        let dim = examples[0].features.len();
        if let Some(e) = examples.iter().find(|e| e.features.len() != dim) {
            return Err(Error::Shape { expected: dim, got: e.features.len() });
        }
        let status = vec![PoolStatus::Available; examples.len()];
        Ok(Self { examples, response_prob, status, dim })
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn features(&self, index: usize) -> &[f64] {
        &self.examples[index].features
    }

    pub fn response_prob(&self, index: usize) -> f64 {
        self.response_prob[index]
    }

    pub fn status(&self, index: usize) -> PoolStatus {
        self.status[index]
    }

    /// Indices still eligible for selection, ascending.
    pub fn selectable_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.status[i].is_selectable()).collect()
    }

    pub fn selectable_count(&self) -> usize {
        self.status.iter().filter(|s| s.is_selectable()).count()
    }

    fn check_selectable(&self, index: usize) -> Result<()> {
        match self.status.get(index) {
            None => Err(Error::InvalidQuery(format!(
                "index {index} out of range for pool of {}",
                self.len()
            ))),
            Some(PoolStatus::Consumed) => Err(Error::InvalidQuery(format!(
                "pool point {index} was already consumed"
            ))),
            Some(_) => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Seed,
    Acquired(usize),
}

/// Labelled data available to the target model. Only grows.
#[derive(Debug, Clone, Default)]
pub struct TrainingSet {
    features: Vec<Vec<f64>>,
    labels: Vec<u8>,
    provenance: Vec<Provenance>,
}

impl TrainingSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_examples(examples: Vec<LabeledExample>) -> Self {
        let mut set = Self::new();
        for e in examples {
            set.push(e, Provenance::Seed);
        }
        set
    }

    fn push(&mut self, example: LabeledExample, provenance: Provenance) {
        self.features.push(example.features);
        self.labels.push(example.label);
        self.provenance.push(provenance);
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn provenance(&self) -> &[Provenance] {
        &self.provenance
    }

    pub fn acquired_count(&self) -> usize {
        self.provenance
            .iter()
            .filter(|p| matches!(p, Provenance::Acquired(_)))
            .count()
    }
}

/// Moves a seed example into the training set regardless of the response
/// mechanism.
pub fn reveal_seed(train: &mut TrainingSet, pool: &mut Pool, index: usize) -> Result<()> {
    pool.check_selectable(index)?;
    pool.status[index] = PoolStatus::Consumed;
    train.push(pool.examples[index].clone(), Provenance::Seed);
    Ok(())
}

/// Training-set update for one query: a response reveals the label and
/// consumes the point, a non-response leaves the training set untouched and
/// follows `policy`.
pub fn apply_query_outcome(
    train: &mut TrainingSet,
    pool: &mut Pool,
    index: usize,
    responded: bool,
    policy: PoolPolicy,
    step: usize,
) -> Result<()> {
    pool.check_selectable(index)?;
    if responded {
        pool.status[index] = PoolStatus::Consumed;
        train.push(pool.examples[index].clone(), Provenance::Acquired(step));
    } else {
        pool.status[index] = match policy {
            PoolPolicy::Retain | PoolPolicy::Replace => PoolStatus::QueriedNoResponse,
            PoolPolicy::Remove => PoolStatus::Consumed,
        };
    }
    Ok(())
}

/// One query attempt.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryRecord {
    pub step: usize,
    pub pool_index: usize,
    pub features: Vec<f64>,
    pub responded: bool,
    pub informativeness: f64,
    pub response_quantile: f64,
}

/// Holdout ROC-AUC and training-set size after every completed step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LearningCurve {
    pub run_id: usize,
    pub auc_by_step: Vec<(usize, f64)>,
    pub training_size_by_step: Vec<(usize, usize)>,
}

impl LearningCurve {
    pub fn new(run_id: usize) -> Self {
        Self { run_id, ..Self::default() }
    }

    pub fn record(&mut self, step: usize, auc: f64, training_size: usize) {
        debug_assert!(self.auc_by_step.last().is_none_or(|(s, _)| *s < step));
        self.auc_by_step.push((step, auc));
        self.training_size_by_step.push((step, training_size));
    }

    pub fn auc_at(&self, step: usize) -> Option<f64> {
        self.auc_by_step
            .iter()
            .find(|(s, _)| *s == step)
            .map(|(_, a)| *a)
    }

    pub fn final_training_size(&self) -> Option<usize> {
        self.training_size_by_step.last().map(|(_, n)| *n)
    }
}
