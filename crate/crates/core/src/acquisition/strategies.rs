use super::{AcquisitionStrategy, Correction, Disagreement, SelectionMode};
use crate::error::{Error, Result};
use crate::learners::{LearnerKind, TargetModel};
use crate::numerics::{binary_entropy, kl_divergence, ScoreVector};

/// Entropy of the target model's prediction.
#[derive(Debug, Clone, Default)]
pub struct UncertaintySampling;

impl AcquisitionStrategy for UncertaintySampling {
    fn name(&self) -> &str {
        "uncertainty"
    }

    fn learner_kind(&self) -> LearnerKind {
        LearnerKind::Linear
    }

    fn informativeness(&self, model: &TargetModel, pool_x: &[Vec<f64>]) -> Result<ScoreVector> {
        let proba = model.predict_proba(pool_x)?;
        let u = proba.into_iter().map(binary_entropy).collect::<Result<Vec<_>>>()?;
        ScoreVector::new(u)
    }

    fn selection_mode(&self, correction: Correction) -> SelectionMode {
        match correction {
            Correction::None => SelectionMode::Plain,
            Correction::UcbEu => SelectionMode::UcbEu,
        }
    }
}

/// KL divergence of committee members from the consensus, aggregated by
/// max (default) or mean over members.
#[derive(Debug, Clone, Default)]
pub struct QueryByCommittee {
    pub disagreement: Disagreement,
}

impl AcquisitionStrategy for QueryByCommittee {
    fn name(&self) -> &str {
        "qbc"
    }

    fn learner_kind(&self) -> LearnerKind {
        LearnerKind::Committee
    }

    fn informativeness(&self, model: &TargetModel, pool_x: &[Vec<f64>]) -> Result<ScoreVector> {
        if model.kind() != LearnerKind::Committee {
            return Err(Error::Config("qbc needs a committee target model".into()));
        }
        let opinion = model.committee_proba(pool_x)?;
        let members = opinion.per_member.len() as f64;
        let u = opinion
            .consensus
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let q = [c, 1.0 - c];
                let mut agg: f64 = 0.0;
                for member in &opinion.per_member {
                    let kl = kl_divergence([member[i], 1.0 - member[i]], q)?;
                    agg = match self.disagreement {
                        Disagreement::Max => agg.max(kl),
                        Disagreement::Mean => agg + kl / members,
                    };
                }
                Ok(agg)
            })
            .collect::<Result<Vec<_>>>()?;
        ScoreVector::new(u)
    }

    fn selection_mode(&self, correction: Correction) -> SelectionMode {
        match correction {
            Correction::None => SelectionMode::Plain,
            Correction::UcbEu => SelectionMode::UcbEu,
        }
    }
}

/// Uniform informativeness; selection is random, optionally weighted by the
/// softmax of the response estimates.
#[derive(Debug, Clone)]
pub struct RandomSampling {
    pub learner: LearnerKind,
}

impl Default for RandomSampling {
    fn default() -> Self {
        Self { learner: LearnerKind::Linear }
    }
}

impl AcquisitionStrategy for RandomSampling {
    fn name(&self) -> &str {
        "random"
    }

    fn learner_kind(&self) -> LearnerKind {
        self.learner
    }

    fn informativeness(&self, _model: &TargetModel, pool_x: &[Vec<f64>]) -> Result<ScoreVector> {
        ScoreVector::new(vec![1.0; pool_x.len()])
    }

    fn selection_mode(&self, correction: Correction) -> SelectionMode {
        match correction {
            Correction::None => SelectionMode::UniformRandom,
            Correction::UcbEu => SelectionMode::WeightedRandom,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{BaggedForest, DecisionTree, LinearModel, TreeParams};
    use crate::rng::{substream, Stream};

    fn stump(prob_left: u8) -> DecisionTree {
        // one split at 0: left side all `prob_left`, right side the opposite
        let x: Vec<Vec<f64>> = (0..200).map(|i| vec![i as f64 - 100.0]).collect();
        let y: Vec<u8> = (0..200)
            .map(|i| if i < 100 { prob_left } else { 1 - prob_left })
            .collect();
        let params = TreeParams { max_depth: 1, min_leaf: 1, max_features: None };
        DecisionTree::fit(&x, &y, (0..200).collect(), params, &mut substream(0, Stream::Learner)).unwrap()
    }

    #[test]
    fn uncertainty_peaks_at_half() {
        let model = TargetModel::Linear(LinearModel::zeros(2));
        let u = UncertaintySampling.informativeness(&model, &[vec![1.0, 2.0]]).unwrap();
        assert!((u.as_slice()[0] - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn qbc_agreement_is_zero() {
        let t = stump(1);
        let model = TargetModel::Committee(BaggedForest::from_trees(vec![t.clone(), t]));
        let u = QueryByCommittee::default()
            .informativeness(&model, &[vec![-5.0], vec![5.0]])
            .unwrap();
        assert!(u.as_slice().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn qbc_opposed_members() {
        // leaf probabilities are Laplace smoothed: 101/102 and 1/102
        let model = TargetModel::Committee(BaggedForest::from_trees(vec![stump(1), stump(0)]));
        let u = QueryByCommittee::default().informativeness(&model, &[vec![-5.0]]).unwrap();
        let p: f64 = 101.0 / 102.0;
        let expected = p * (2.0 * p).ln() + (1.0 - p) * (2.0 * (1.0 - p)).ln();
        assert!((u.as_slice()[0] - expected).abs() < 1e-12);

        // the textbook pair (0.9, 0.1) vs (0.1, 0.9): consensus 0.5
        let kl = kl_divergence([0.9, 0.1], [0.5, 0.5]).unwrap();
        assert!((kl - 0.3681).abs() < 5e-5);
    }

    #[test]
    fn qbc_rejects_linear_model() {
        let model = TargetModel::Linear(LinearModel::zeros(1));
        assert!(QueryByCommittee::default().informativeness(&model, &[vec![0.0]]).is_err());
    }

    #[test]
    fn random_is_uniform() {
        let model = TargetModel::Linear(LinearModel::zeros(1));
        let u = RandomSampling::default().informativeness(&model, &[vec![0.0], vec![3.0]]).unwrap();
        assert_eq!(u.as_slice(), &[1.0, 1.0]);
        assert_eq!(RandomSampling::default().selection_mode(Correction::UcbEu), SelectionMode::WeightedRandom);
    }
}
