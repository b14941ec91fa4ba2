use rand::Rng;

use super::tree::{DecisionTree, TreeParams};
use crate::error::{Error, Result};
use crate::rng::{indexed, Stream};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestParams {
    pub trees: usize,
    pub tree: TreeParams,
    /// Bootstrap sample size as a fraction of the training set.
    pub bootstrap_fraction: f64,
}

/// Bootstrap-aggregated trees. Each member is fitted from its own indexed
/// generator, so members do not depend on each other's randomness.
#[derive(Debug, Clone, PartialEq)]
pub struct BaggedForest {
    trees: Vec<DecisionTree>,
}

impl BaggedForest {
    pub fn fit<R: Rng + ?Sized>(
        x: &[Vec<f64>],
        y: &[u8],
        params: ForestParams,
        rng: &mut R,
    ) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::Fit("cannot fit a forest on an empty set".into()));
        }
        if params.trees == 0 {
            return Err(Error::Config("forest needs at least one tree".into()));
        }
        let n = x.len();
        let draws = ((n as f64 * params.bootstrap_fraction).round() as usize).max(1);
        let seed: u64 = rng.random();
        let trees = (0..params.trees)
            .map(|m| {
                let mut member_rng = indexed(seed, Stream::Learner, m as u64);
                let idx: Vec<usize> = (0..draws).map(|_| member_rng.random_range(0..n)).collect();
                DecisionTree::fit(x, y, idx, params.tree, &mut member_rng)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { trees })
    }

    pub fn from_trees(trees: Vec<DecisionTree>) -> Self {
        Self { trees }
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.trees[0].dim()
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    /// `members x rows` matrix of member probabilities.
    pub fn member_predictions(&self, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
        self.trees
            .iter()
            .map(|t| x.iter().map(|row| t.predict_one(row)).collect())
            .collect()
    }
}
