//! Response-probability estimators for the UCB-EU correction.
//!
//! [`ResponseModel`] is a bootstrap ensemble of trees; the spread of its
//! members gives an approximate posterior over `P(response | x)`, and the
//! correction reads an upper quantile of that spread. [`CorruptedOracle`]
//! turns known response indicators into a deliberately imperfect
//! click-through style model of a chosen ROC-AUC.

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learners::{BaggedForest, ForestParams, TreeParams};
use crate::numerics::{empirical_quantile, quantile_sorted, roc_auc};

pub const MIN_TRAINING_ROWS: usize = 100;
const HOLDOUT_FRACTION: f64 = 0.2;
/// Oracle scores for a flipped/unflipped indicator.
pub const ORACLE_LOW: f64 = 0.05;
pub const ORACLE_HIGH: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResponseModelParams {
    pub members: usize,
    pub pretrain_n: usize,
    pub quantile: f64,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Quality gate applied when the model is pre-trained on a MAR mechanism.
    pub min_auc: f64,
    pub max_mae: f64,
}

impl Default for ResponseModelParams {
    fn default() -> Self {
        Self {
            members: 50,
            pretrain_n: 10_000,
            quantile: 0.95,
            max_depth: 8,
            min_leaf: 5,
            min_auc: 0.99,
            max_mae: 0.05,
        }
    }
}

impl ResponseModelParams {
    pub fn validate(&self) -> Result<()> {
        if self.members < 10 {
            return Err(Error::Config("response model needs at least 10 members".into()));
        }
        if self.pretrain_n < MIN_TRAINING_ROWS {
            return Err(Error::Config(format!(
                "response model pretrain_n must be at least {MIN_TRAINING_ROWS}"
            )));
        }
        if !(self.quantile > 0.0 && self.quantile < 1.0) {
            return Err(Error::Config("response quantile must lie in (0, 1)".into()));
        }
        Ok(())
    }

    pub fn gate(&self) -> QualityGate {
        QualityGate { min_auc: self.min_auc, max_mae: self.max_mae }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityGate {
    pub min_auc: f64,
    pub max_mae: f64,
}

/// Held-out diagnostics recorded at fit time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitReport {
    pub n_train: usize,
    /// `None` when the held-out split contains a single response class.
    pub heldout_auc: Option<f64>,
    pub heldout_mae: f64,
}

impl FitReport {
    pub fn passes(&self, gate: QualityGate) -> bool {
        self.heldout_auc.is_some_and(|a| a >= gate.min_auc) && self.heldout_mae <= gate.max_mae
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResponseModel {
    forest: BaggedForest,
    report: FitReport,
}

/// Fits the ensemble on 80% of `(x, r)` and scores the remaining 20%. With a
/// `gate`, a model that misses either threshold is rejected.
pub fn fit_response_model<R: Rng + ?Sized>(
    x: &[Vec<f64>],
    r: &[u8],
    params: &ResponseModelParams,
    gate: Option<QualityGate>,
    rng: &mut R,
) -> Result<ResponseModel> {
    if x.len() != r.len() {
        return Err(Error::Fit("features and responses differ in length".into()));
    }
    if x.len() < MIN_TRAINING_ROWS {
        return Err(Error::Fit(format!(
            "response model needs at least {MIN_TRAINING_ROWS} rows, got {}",
            x.len()
        )));
    }
    let responders = r.iter().filter(|&&v| v == 1).count();
    if responders == 0 || responders == r.len() {
        return Err(Error::Fit("response indicators contain a single class".into()));
    }

    let mut order: Vec<usize> = (0..x.len()).collect();
    order.shuffle(rng);
    let n_hold = ((x.len() as f64) * HOLDOUT_FRACTION).round() as usize;
    let (hold_idx, train_idx) = order.split_at(n_hold);
    let pick = |idx: &[usize]| -> (Vec<Vec<f64>>, Vec<u8>) {
        idx.iter().map(|&i| (x[i].clone(), r[i])).unzip()
    };
    let (tx, tr) = pick(train_idx);
    let (hx, hr) = pick(hold_idx);

    let forest = BaggedForest::fit(
        &tx,
        &tr,
        ForestParams {
            trees: params.members,
            tree: TreeParams {
                max_depth: params.max_depth,
                min_leaf: params.min_leaf,
                max_features: None,
            },
            bootstrap_fraction: 1.0,
        },
        rng,
    )?;
    let model = ResponseModel {
        forest,
        report: FitReport { n_train: tx.len(), heldout_auc: None, heldout_mae: 0.0 },
    };
    let mean = model.predict_mean(&hx)?;
    let heldout_auc = roc_auc(&mean, &hr).ok();
    let heldout_mae = mean
        .iter()
        .zip(&hr)
        .map(|(p, &y)| (p - y as f64).abs())
        .sum::<f64>()
        / hr.len() as f64;
    let report = FitReport { n_train: tx.len(), heldout_auc, heldout_mae };
    if let Some(gate) = gate {
        if !report.passes(gate) {
            return Err(Error::QualityGate {
                auc: heldout_auc.unwrap_or(f64::NAN),
                mae: heldout_mae,
                min_auc: gate.min_auc,
                max_mae: gate.max_mae,
            });
        }
    }
    Ok(ResponseModel { report, ..model })
}

impl ResponseModel {
    pub fn report(&self) -> FitReport {
        self.report
    }

    pub fn members(&self) -> usize {
        self.forest.len()
    }

    pub fn from_forest(forest: BaggedForest, report: FitReport) -> Self {
        Self { forest, report }
    }

    fn check_shape(&self, x: &[Vec<f64>]) -> Result<()> {
        let d = self.forest.dim();
        match x.iter().find(|row| row.len() != d) {
            Some(row) => Err(Error::Shape { expected: d, got: row.len() }),
            None => Ok(()),
        }
    }

    pub fn predict_mean(&self, x: &[Vec<f64>]) -> Result<Vec<f64>> {
        self.check_shape(x)?;
        let per = self.forest.member_predictions(x);
        let b = per.len() as f64;
        Ok((0..x.len())
            .map(|i| per.iter().map(|m| m[i]).sum::<f64>() / b)
            .collect())
    }

    /// Per-row `q`-quantile across member predictions.
    pub fn predict_response_quantile(&self, x: &[Vec<f64>], q: f64) -> Result<Vec<f64>> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::Domain(format!("quantile level {q} outside (0, 1)")));
        }
        self.check_shape(x)?;
        let per = self.forest.member_predictions(x);
        let mut column = vec![0.0; per.len()];
        Ok((0..x.len())
            .map(|i| {
                for (slot, member) in column.iter_mut().zip(&per) {
                    *slot = member[i];
                }
                column.sort_by(f64::total_cmp);
                quantile_sorted(&column, q)
            })
            .collect())
    }
}

/// Quantile across an explicit set of member predictions for one row.
pub fn member_quantile(member_predictions: &[f64], q: f64) -> Result<f64> {
    empirical_quantile(member_predictions, q)
}

/// A click-through style model built by flipping a random
/// `floor((1 - target_auc) n)` subset of known response indicators.
#[derive(Debug, Clone, PartialEq)]
pub struct CorruptedOracle {
    base_responses: Vec<u8>,
    target_auc: f64,
    flipped_mask: Vec<bool>,
}

pub fn make_corrupted_oracle<R: Rng + ?Sized>(
    base_responses: &[u8],
    target_auc: f64,
    rng: &mut R,
) -> Result<CorruptedOracle> {
    if !(0.5..=1.0).contains(&target_auc) {
        return Err(Error::Domain(format!("target AUC {target_auc} outside [0.5, 1]")));
    }
    if base_responses.iter().any(|&v| v > 1) {
        return Err(Error::Domain("response indicators must be binary".into()));
    }
    let n = base_responses.len();
    let flips = (((1.0 - target_auc) * n as f64) + 1e-9).floor() as usize;
    let mut flipped_mask = vec![false; n];
    for i in sample(rng, n, flips.min(n)) {
        flipped_mask[i] = true;
    }
    Ok(CorruptedOracle { base_responses: base_responses.to_vec(), target_auc, flipped_mask })
}

impl CorruptedOracle {
    pub fn target_auc(&self) -> f64 {
        self.target_auc
    }

    pub fn len(&self) -> usize {
        self.base_responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base_responses.is_empty()
    }

    pub fn flipped_count(&self) -> usize {
        self.flipped_mask.iter().filter(|f| **f).count()
    }

    pub fn flipped_mask(&self) -> &[bool] {
        &self.flipped_mask
    }

    /// Smoothed response probability for row `i`.
    pub fn score(&self, i: usize) -> f64 {
        let value = self.base_responses[i] == 1;
        if value != self.flipped_mask[i] {
            ORACLE_HIGH
        } else {
            ORACLE_LOW
        }
    }

    pub fn scores(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.score(i)).collect()
    }
}
