//! Target models: a logistic-trained linear classifier for uncertainty
//! sampling and a bagged-tree committee for query-by-committee.

pub mod forest;
pub mod linear;
pub mod tree;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use forest::{BaggedForest, ForestParams};
pub use linear::{GradientDescent, LinearModel};
pub use tree::{DecisionTree, TreeParams};

use crate::error::{Error, Result};

/// Constant prediction used when the training set holds a single class.
pub const DEGENERATE_CONFIDENCE: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    Linear,
    Committee,
}

impl LearnerKind {
    pub fn name(self) -> &'static str {
        match self {
            LearnerKind::Linear => "linear",
            LearnerKind::Committee => "committee",
        }
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(LearnerKind::Linear),
            "committee" => Ok(LearnerKind::Committee),
            other => Err(Error::Config(format!("unknown learner kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LearnerParams {
    pub trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    pub epochs: usize,
    pub lr: f64,
    pub tol: f64,
}

impl Default for LearnerParams {
    fn default() -> Self {
        Self { trees: 25, max_depth: 8, min_leaf: 3, epochs: 500, lr: 1.0, tol: 1e-6 }
    }
}

impl LearnerParams {
    pub fn gradient_descent(&self) -> GradientDescent {
        GradientDescent { epochs: self.epochs, lr: self.lr, tol: self.tol }
    }

    pub fn forest(&self, dim: usize) -> ForestParams {
        ForestParams {
            trees: self.trees,
            tree: TreeParams {
                max_depth: self.max_depth,
                min_leaf: self.min_leaf,
                max_features: Some((dim as f64).sqrt().ceil() as usize),
            },
            bootstrap_fraction: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trees < 2 {
            return Err(Error::Config("a committee needs at least two trees".into()));
        }
        if self.max_depth == 0 || self.min_leaf == 0 || self.epochs == 0 {
            return Err(Error::Config("max_depth, min_leaf and epochs must be positive".into()));
        }
        if self.lr.is_nan() || self.lr <= 0.0 || self.tol.is_nan() || self.tol < 0.0 {
            return Err(Error::Config("lr must be positive and tol non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TargetModel {
    Linear(LinearModel),
    Committee(BaggedForest),
    /// Fitted on a single class: predicts that class with fixed confidence.
    Degenerate {
        kind: LearnerKind,
        dim: usize,
        p_positive: f64,
        members: usize,
    },
}

/// Per-member and consensus probabilities of a committee.
#[derive(Debug, Clone, PartialEq)]
pub struct CommitteeOpinion {
    /// `members x rows`
    pub per_member: Vec<Vec<f64>>,
    pub consensus: Vec<f64>,
}

impl CommitteeOpinion {
    pub fn from_members(per_member: Vec<Vec<f64>>) -> Self {
        let rows = per_member.first().map_or(0, Vec::len);
        let c = per_member.len() as f64;
        let consensus = (0..rows)
            .map(|i| per_member.iter().map(|m| m[i]).sum::<f64>() / c)
            .collect();
        Self { per_member, consensus }
    }
}

impl TargetModel {
    pub fn fit<R: Rng + ?Sized>(
        kind: LearnerKind,
        features: &[Vec<f64>],
        labels: &[u8],
        params: &LearnerParams,
        rng: &mut R,
    ) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::Fit("empty training set".into()));
        }
        if features.len() != labels.len() {
            return Err(Error::Fit("features and labels differ in length".into()));
        }
        let dim = features[0].len();
        let positives = labels.iter().filter(|&&y| y == 1).count();
        if positives == 0 || positives == labels.len() {
            let p_positive = if positives == 0 {
                1.0 - DEGENERATE_CONFIDENCE
            } else {
                DEGENERATE_CONFIDENCE
            };
            return Ok(TargetModel::Degenerate { kind, dim, p_positive, members: params.trees });
        }
        match kind {
            LearnerKind::Linear => Ok(TargetModel::Linear(LinearModel::fit(
                features,
                labels,
                params.gradient_descent(),
            )?)),
            LearnerKind::Committee => Ok(TargetModel::Committee(BaggedForest::fit(
                features,
                labels,
                params.forest(dim),
                rng,
            )?)),
        }
    }

    pub fn kind(&self) -> LearnerKind {
        match self {
            TargetModel::Linear(_) => LearnerKind::Linear,
            TargetModel::Committee(_) => LearnerKind::Committee,
            TargetModel::Degenerate { kind, .. } => *kind,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        matches!(self, TargetModel::Degenerate { .. })
    }

    pub fn dim(&self) -> usize {
        match self {
            TargetModel::Linear(m) => m.dim(),
            TargetModel::Committee(f) => f.dim(),
            TargetModel::Degenerate { dim, .. } => *dim,
        }
    }

    fn check_shape(&self, x: &[Vec<f64>]) -> Result<()> {
        let d = self.dim();
        match x.iter().find(|row| row.len() != d) {
            Some(row) => Err(Error::Shape { expected: d, got: row.len() }),
            None => Ok(()),
        }
    }

    /// `P(y = 1)` per row.
    pub fn predict_proba(&self, x: &[Vec<f64>]) -> Result<Vec<f64>> {
        self.check_shape(x)?;
        Ok(match self {
            TargetModel::Linear(m) => x.iter().map(|row| m.predict_one(row)).collect(),
            TargetModel::Committee(_) => self.committee_proba(x)?.consensus,
            TargetModel::Degenerate { p_positive, .. } => vec![*p_positive; x.len()],
        })
    }

    pub fn committee_proba(&self, x: &[Vec<f64>]) -> Result<CommitteeOpinion> {
        self.check_shape(x)?;
        match self {
            TargetModel::Committee(forest) => {
                Ok(CommitteeOpinion::from_members(forest.member_predictions(x)))
            }
            TargetModel::Degenerate { kind: LearnerKind::Committee, p_positive, members, .. } => {
                Ok(CommitteeOpinion::from_members(vec![vec![*p_positive; x.len()]; *members]))
            }
            _ => Err(Error::Config("committee predictions requested from a linear model".into())),
        }
    }
}
