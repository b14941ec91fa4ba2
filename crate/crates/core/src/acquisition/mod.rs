//! Informativeness scoring and batch selection.
//!
//! Each acquisition strategy implements [`AcquisitionStrategy`] and is
//! registered by name in a [`StrategyRegistry`]. The UCB-EU correction is a
//! selection mode, not a strategy: it multiplies any strategy's
//! informativeness by an optimistic response-probability estimate (summed in
//! log space).

mod registry;
mod strategies;

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use registry::{StrategyFactory, StrategyOptions, StrategyRegistry};
pub use strategies::{QueryByCommittee, RandomSampling, UncertaintySampling};

use crate::error::{Error, Result};
use crate::learners::{LearnerKind, TargetModel};
use crate::numerics::{softmax, top_m, ScoreVector, LOG_EPS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Correction {
    None,
    UcbEu,
}

impl Correction {
    pub fn name(self) -> &'static str {
        match self {
            Correction::None => "none",
            Correction::UcbEu => "ucb_eu",
        }
    }
}

impl fmt::Display for Correction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Correction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Correction::None),
            "ucb_eu" => Ok(Correction::UcbEu),
            other => Err(Error::Config(format!("unknown correction `{other}`"))),
        }
    }
}

/// Committee disagreement aggregate across members.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Disagreement {
    #[default]
    Max,
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SelectionMode {
    /// Top-b by informativeness.
    Plain,
    /// Top-b by `ln u + ln p`.
    UcbEu,
    /// b draws without replacement, probabilities `softmax(p)`.
    WeightedRandom,
    /// b uniform draws without replacement.
    UniformRandom,
}

impl SelectionMode {
    fn needs_response(self) -> bool {
        matches!(self, SelectionMode::UcbEu | SelectionMode::WeightedRandom)
    }
}

/// A querying strategy: scores candidates and picks the selection rule for
/// a given correction.
pub trait AcquisitionStrategy: fmt::Debug + Send + Sync {
    fn name(&self) -> &str;

    /// Target-model family this strategy scores with.
    fn learner_kind(&self) -> LearnerKind;

    fn informativeness(&self, model: &TargetModel, pool_x: &[Vec<f64>]) -> Result<ScoreVector>;

    fn selection_mode(&self, correction: Correction) -> SelectionMode;
}

/// Per-round scores over the currently selectable pool points.
#[derive(Debug, Clone, PartialEq)]
pub struct AcquisitionScores {
    pub informativeness: ScoreVector,
    pub response_q: Option<ScoreVector>,
    pub mode: SelectionMode,
}

impl AcquisitionScores {
    pub fn new(
        informativeness: ScoreVector,
        response_q: Option<ScoreVector>,
        mode: SelectionMode,
    ) -> Result<Self> {
        if let Some(p) = &response_q {
            if p.len() != informativeness.len() {
                return Err(Error::Domain(format!(
                    "{} informativeness scores but {} response estimates",
                    informativeness.len(),
                    p.len()
                )));
            }
            if p.as_slice().iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::Domain("response estimates must lie in [0, 1]".into()));
            }
        }
        Ok(Self { informativeness, response_q, mode })
    }

    pub fn len(&self) -> usize {
        self.informativeness.len()
    }

    pub fn is_empty(&self) -> bool {
        self.informativeness.is_empty()
    }

    /// `ln max(u, eps) + ln max(p, eps)` per candidate.
    pub fn expected_utility_log(&self) -> Result<Vec<f64>> {
        let p = self
            .response_q
            .as_ref()
            .ok_or_else(|| Error::Config("UCB-EU selection needs response estimates".into()))?;
        Ok(self
            .informativeness
            .as_slice()
            .iter()
            .zip(p.as_slice())
            .map(|(u, p)| u.max(LOG_EPS).ln() + p.max(LOG_EPS).ln())
            .collect())
    }
}

/// Picks `b` distinct positions (into the score vectors).
pub fn select_batch<R: Rng + ?Sized>(
    scores: &AcquisitionScores,
    b: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let n = scores.len();
    if b > n {
        return Err(Error::Budget { requested: b, available: n });
    }
    if scores.mode.needs_response() && scores.response_q.is_none() {
        return Err(Error::Config(format!(
            "{:?} selection needs response estimates",
            scores.mode
        )));
    }
    match scores.mode {
        SelectionMode::Plain => top_m(scores.informativeness.as_slice(), b),
        SelectionMode::UcbEu => top_m(&scores.expected_utility_log()?, b),
        SelectionMode::UniformRandom => Ok(index::sample(rng, n, b).into_vec()),
        SelectionMode::WeightedRandom => {
            let p = scores.response_q.as_ref().map(ScoreVector::as_slice).unwrap_or_default();
            let weights = softmax(p)?;
            index::sample_weighted(rng, n, |i| weights[i], b)
                .map(|v| v.into_vec())
                .map_err(|e| Error::Domain(format!("weighted sampling failed: {e}")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Stream};
    use proptest::prelude::*;

    fn sv(v: &[f64]) -> ScoreVector {
        ScoreVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn ucb_eu_prefers_higher_product() {
        let s = AcquisitionScores::new(sv(&[0.9, 0.5]), Some(sv(&[0.1, 0.9])), SelectionMode::UcbEu)
            .unwrap();
        let pick = select_batch(&s, 1, &mut substream(0, Stream::Strategy)).unwrap();
        assert_eq!(pick, vec![1]);
    }

    #[test]
    fn unit_response_reduces_to_plain() {
        let u = [0.3, 0.9, 0.1, 0.7];
        let plain = AcquisitionScores::new(sv(&u), None, SelectionMode::Plain).unwrap();
        let ucb = AcquisitionScores::new(sv(&u), Some(sv(&[1.0; 4])), SelectionMode::UcbEu).unwrap();
        let mut rng = substream(0, Stream::Strategy);
        assert_eq!(
            select_batch(&plain, 2, &mut rng).unwrap(),
            select_batch(&ucb, 2, &mut rng).unwrap()
        );
    }

    #[test]
    fn exhaustive_weighted_draw_takes_everything_once() {
        let s = AcquisitionScores::new(sv(&[1.0; 6]), Some(sv(&[0.5; 6])), SelectionMode::WeightedRandom)
            .unwrap();
        let mut pick = select_batch(&s, 6, &mut substream(3, Stream::Strategy)).unwrap();
        pick.sort();
        assert_eq!(pick, (0..6).collect::<Vec<_>>());
    }

    #[test]
    fn weighted_draw_follows_softmax() {
        // softmax(0, 1) = (0.269, 0.731)
        let s = AcquisitionScores::new(sv(&[1.0; 2]), Some(sv(&[0.0, 1.0])), SelectionMode::WeightedRandom)
            .unwrap();
        let mut rng = substream(5, Stream::Strategy);
        let hits = (0..20_000)
            .filter(|_| select_batch(&s, 1, &mut rng).unwrap()[0] == 1)
            .count() as f64
            / 20_000.0;
        let expected = 1.0f64.exp() / (1.0 + 1.0f64.exp());
        assert!((hits - expected).abs() < 0.015, "{hits}");
    }

    #[test]
    fn selection_errors() {
        let s = AcquisitionScores::new(sv(&[1.0, 2.0]), None, SelectionMode::UcbEu).unwrap();
        let mut rng = substream(0, Stream::Strategy);
        assert!(matches!(select_batch(&s, 1, &mut rng), Err(Error::Config(_))));
        assert!(matches!(select_batch(&s, 3, &mut rng), Err(Error::Budget { .. })));
        assert!(AcquisitionScores::new(sv(&[1.0]), Some(sv(&[0.5, 0.5])), SelectionMode::UcbEu).is_err());
    }

    #[test]
    fn zero_informativeness_stays_finite() {
        let s = AcquisitionScores::new(sv(&[0.0, 0.0, 0.0]), Some(sv(&[0.2, 0.9, 0.5])), SelectionMode::UcbEu)
            .unwrap();
        assert!(s.expected_utility_log().unwrap().iter().all(|v| v.is_finite()));
        assert_eq!(select_batch(&s, 1, &mut substream(0, Stream::Strategy)).unwrap(), vec![1]);
    }

    proptest! {
        #[test]
        fn reduction_to_plain(u in prop::collection::vec(1e-6f64..10.0, 1..50), frac in 0.0f64..=1.0) {
            let b = ((u.len() as f64) * frac).floor() as usize;
            let ones = vec![1.0; u.len()];
            let plain = AcquisitionScores::new(sv(&u), None, SelectionMode::Plain).unwrap();
            let ucb = AcquisitionScores::new(sv(&u), Some(sv(&ones)), SelectionMode::UcbEu).unwrap();
            let mut rng = substream(0, Stream::Strategy);
            let mut a = select_batch(&plain, b, &mut rng).unwrap();
            let mut c = select_batch(&ucb, b, &mut rng).unwrap();
            a.sort();
            c.sort();
            prop_assert_eq!(a, c);
        }

        #[test]
        fn scale_invariance(
            u in prop::collection::vec(1e-3f64..10.0, 2..40),
            p in prop::collection::vec(1e-3f64..1.0, 40),
            k in 0.01f64..100.0
        ) {
            let p = &p[..u.len()];
            let b = u.len() / 2;
            let scaled: Vec<f64> = u.iter().map(|v| v * k).collect();
            let a = AcquisitionScores::new(sv(&u), Some(sv(p)), SelectionMode::UcbEu).unwrap();
            let c = AcquisitionScores::new(sv(&scaled), Some(sv(p)), SelectionMode::UcbEu).unwrap();
            let mut rng = substream(0, Stream::Strategy);
            let mut x = select_batch(&a, b, &mut rng).unwrap();
            let mut y = select_batch(&c, b, &mut rng).unwrap();
            x.sort();
            y.sort();
            // ties between distinct products are measure-zero here; compare sets
            prop_assume!(x == y || {
                let eu = a.expected_utility_log().unwrap();
                let mut s = eu.clone();
                s.sort_by(f64::total_cmp);
                s.windows(2).any(|w| (w[1] - w[0]).abs() < 1e-9)
            });
            prop_assert_eq!(x, y);
        }

        #[test]
        fn pareto_consistent_and_distinct(
            u in prop::collection::vec(0.0f64..1.0, 2..40),
            p in prop::collection::vec(0.0f64..=1.0, 40),
            frac in 0.0f64..=1.0
        ) {
            let p = &p[..u.len()];
            let b = ((u.len() as f64) * frac).floor() as usize;
            let s = AcquisitionScores::new(sv(&u), Some(sv(p)), SelectionMode::UcbEu).unwrap();
            let pick = select_batch(&s, b, &mut substream(0, Stream::Strategy)).unwrap();
            let mut seen = pick.clone();
            seen.sort();
            seen.dedup();
            prop_assert_eq!(seen.len(), pick.len());
            for &i in &pick {
                for j in 0..u.len() {
                    if pick.contains(&j) {
                        continue;
                    }
                    prop_assert!(!(u[j] > u[i] && p[j] > p[i]),
                        "picked {} but {} dominates it", i, j);
                }
            }
        }
    }
}
