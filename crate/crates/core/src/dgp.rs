//! Synthetic data-generating processes.
//!
//! * `synthetic1`: two isotropic Gaussian clusters offset along the first
//!   axis, positives at `(3, 0)` with weight 0.1.
//! * `synthetic2`: six clusters (std 0.5) on a 3x2 grid, checkerboard labels.
//! * `synthetic3`: a U made of two negative arms and a positive bar that
//!   crosses the arms short of their tails, rotated by 20 degrees.
//! * `mar1`: correlated 5-d normal labelled by a quadratic score threshold
//!   calibrated to a 10% positive rate.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::LabeledExample;
use crate::error::{Error, Result};
use crate::numerics::quantile_sorted;

pub const MAR1_DIM: usize = 5;
pub const MAR1_CORRELATION: f64 = 0.3;
pub const MAR1_POSITIVE_RATE: f64 = 0.1;
pub const DEFAULT_CALIBRATION_N: usize = 1_000_000;
pub const MIN_CALIBRATION_N: usize = 100_000;

const SYNTH1_POSITIVE_WEIGHT: f64 = 0.1;
const SYNTH1_POSITIVE_MEAN: [f64; 2] = [3.0, 0.0];
const SYNTH2_STD: f64 = 0.5;
const SYNTH2_MEANS: [[f64; 2]; 6] = [
    [0.0, 0.0],
    [3.0, 0.0],
    [6.0, 0.0],
    [0.0, 3.0],
    [3.0, 3.0],
    [6.0, 3.0],
];
const SYNTH3_ARM_OFFSET: f64 = 1.5;
const SYNTH3_ARM_LENGTH: f64 = 3.5;
const SYNTH3_BAR_X: f64 = 3.0;
const SYNTH3_BAR_HALF_LENGTH: f64 = 2.0;
const SYNTH3_NOISE: f64 = 0.3;
const SYNTH3_ROTATION_DEG: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DgpId {
    Synthetic1,
    Synthetic2,
    Synthetic3,
    Mar1,
}

impl DgpId {
    pub const ALL: [DgpId; 4] = [
        DgpId::Synthetic1,
        DgpId::Synthetic2,
        DgpId::Synthetic3,
        DgpId::Mar1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DgpId::Synthetic1 => "synthetic1",
            DgpId::Synthetic2 => "synthetic2",
            DgpId::Synthetic3 => "synthetic3",
            DgpId::Mar1 => "mar1",
        }
    }

    pub fn dim(self) -> usize {
        match self {
            DgpId::Mar1 => MAR1_DIM,
            _ => 2,
        }
    }

    /// Population positive rate the generator is built around.
    pub fn positive_rate(self) -> f64 {
        match self {
            DgpId::Synthetic1 => SYNTH1_POSITIVE_WEIGHT,
            DgpId::Synthetic2 => 0.5,
            DgpId::Synthetic3 => 1.0 / 3.0,
            DgpId::Mar1 => MAR1_POSITIVE_RATE,
        }
    }
}

impl fmt::Display for DgpId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DgpId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DgpId::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown dgp id `{s}`")))
    }
}

/// `5x0 - 4x1 + 3x2 - 2x3 + x4 + 0.5x0^2 + 3x1x2`.
pub fn mar1_boundary_score(x: &[f64]) -> f64 {
    5.0 * x[0] - 4.0 * x[1] + 3.0 * x[2] - 2.0 * x[3] + x[4] + 0.5 * x[0] * x[0]
        + 3.0 * x[1] * x[2]
}

/// Threshold such that a fraction `target_rate` of `scores` lies at or above
/// it: the empirical `(1 - target_rate)` quantile.
pub fn threshold_for_rate(scores: &mut [f64], target_rate: f64) -> Result<f64> {
    if !(target_rate > 0.0 && target_rate < 1.0) {
        return Err(Error::Domain(format!("target rate {target_rate} outside (0, 1)")));
    }
    if scores.is_empty() {
        return Err(Error::Calibration("no scores to calibrate on".into()));
    }
    scores.sort_by(f64::total_cmp);
    if scores[0] == scores[scores.len() - 1] {
        return Err(Error::Calibration("score distribution is degenerate".into()));
    }
    Ok(quantile_sorted(scores, 1.0 - target_rate))
}

/// Calibrates the label threshold `c` of a score-thresholded DGP.
pub fn calibrate_label_threshold<R: Rng + ?Sized>(
    dgp: DgpId,
    target_rate: f64,
    calibration_n: usize,
    rng: &mut R,
) -> Result<f64> {
    if dgp != DgpId::Mar1 {
        return Err(Error::Config(format!("{dgp} has no score-defined labels to calibrate")));
    }
    if calibration_n < MIN_CALIBRATION_N {
        return Err(Error::Domain(format!(
            "calibration needs at least {MIN_CALIBRATION_N} samples, got {calibration_n}"
        )));
    }
    let chol = mar1_cholesky();
    let mut scores: Vec<f64> = (0..calibration_n)
        .map(|_| mar1_boundary_score(&correlated_normal(&chol, rng)))
        .collect();
    threshold_for_rate(&mut scores, target_rate)
}

/// Lower-triangular Cholesky factor of the mar1 covariance.
fn mar1_cholesky() -> [[f64; MAR1_DIM]; MAR1_DIM] {
    let mut cov = [[MAR1_CORRELATION; MAR1_DIM]; MAR1_DIM];
    for (i, row) in cov.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let mut l = [[0.0; MAR1_DIM]; MAR1_DIM];
    for i in 0..MAR1_DIM {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                l[i][j] = (cov[i][i] - s).sqrt();
            } else {
                l[i][j] = (cov[i][j] - s) / l[j][j];
            }
        }
    }
    l
}

fn correlated_normal<R: Rng + ?Sized>(
    chol: &[[f64; MAR1_DIM]; MAR1_DIM],
    rng: &mut R,
) -> Vec<f64> {
    let z: [f64; MAR1_DIM] = std::array::from_fn(|_| StandardNormal.sample(rng));
    (0..MAR1_DIM)
        .map(|i| (0..=i).map(|k| chol[i][k] * z[k]).sum())
        .collect()
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// A ready-to-sample generator. For `mar1` this carries the calibrated label
/// threshold.
#[derive(Debug, Clone)]
pub struct Dgp {
    id: DgpId,
    label_threshold: Option<f64>,
    chol: [[f64; MAR1_DIM]; MAR1_DIM],
}

impl Dgp {
    /// Builds the generator, calibrating `mar1` with `calibration_n` draws from
    /// `rng`. Other DGPs do not touch `rng`.
    pub fn prepare<R: Rng + ?Sized>(id: DgpId, calibration_n: usize, rng: &mut R) -> Result<Self> {
        let label_threshold = match id {
            DgpId::Mar1 => Some(calibrate_label_threshold(
                id,
                MAR1_POSITIVE_RATE,
                calibration_n,
                rng,
            )?),
            _ => None,
        };
        Ok(Self { id, label_threshold, chol: mar1_cholesky() })
    }

    /// Generator with a known mar1 threshold (skips calibration).
    pub fn with_threshold(id: DgpId, label_threshold: Option<f64>) -> Self {
        Self { id, label_threshold, chol: mar1_cholesky() }
    }

    pub fn id(&self) -> DgpId {
        self.id
    }

    pub fn dim(&self) -> usize {
        self.id.dim()
    }

    pub fn label_threshold(&self) -> Option<f64> {
        self.label_threshold
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> LabeledExample {
        let (features, label) = match self.id {
            DgpId::Synthetic1 => {
                let positive = rng.random::<f64>() < SYNTH1_POSITIVE_WEIGHT;
                let centre = if positive { SYNTH1_POSITIVE_MEAN } else { [0.0, 0.0] };
                (
                    vec![centre[0] + normal(rng), centre[1] + normal(rng)],
                    positive as u8,
                )
            }
            DgpId::Synthetic2 => {
                let k = rng.random_range(0..SYNTH2_MEANS.len());
                let [cx, cy] = SYNTH2_MEANS[k];
                let label = ((k % 3 + k / 3) % 2) as u8;
                (
                    vec![cx + SYNTH2_STD * normal(rng), cy + SYNTH2_STD * normal(rng)],
                    label,
                )
            }
            DgpId::Synthetic3 => {
                let component = rng.random_range(0..3);
                let u: f64 = rng.random();
                let (x, y, label) = match component {
                    0 => (u * SYNTH3_ARM_LENGTH, SYNTH3_ARM_OFFSET, 0),
                    1 => (u * SYNTH3_ARM_LENGTH, -SYNTH3_ARM_OFFSET, 0),
                    _ => (
                        SYNTH3_BAR_X,
                        (2.0 * u - 1.0) * SYNTH3_BAR_HALF_LENGTH,
                        1,
                    ),
                };
                let x = x + SYNTH3_NOISE * normal(rng);
                let y = y + SYNTH3_NOISE * normal(rng);
                let (sin, cos) = SYNTH3_ROTATION_DEG.to_radians().sin_cos();
                (vec![cos * x - sin * y, sin * x + cos * y], label)
            }
            DgpId::Mar1 => {
                let x = correlated_normal(&self.chol, rng);
                let c = self
                    .label_threshold
                    .expect("mar1 generator constructed without a label threshold");
                let label = (mar1_boundary_score(&x) >= c) as u8;
                (x, label)
            }
        };
        LabeledExample { features, label }
    }

    pub fn generate<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<LabeledExample> {
        (0..n).map(|_| self.sample(rng)).collect()
    }
}

/// Convenience wrapper: prepare the DGP and draw `n` samples from the same rng.
pub fn generate<R: Rng + ?Sized>(id: DgpId, n: usize, rng: &mut R) -> Result<Vec<LabeledExample>> {
    if n == 0 {
        return Err(Error::Domain("sample size must be positive".into()));
    }
    let dgp = Dgp::prepare(id, DEFAULT_CALIBRATION_N, rng)?;
    Ok(dgp.generate(n, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Stream};

    fn positive_rate(samples: &[LabeledExample]) -> f64 {
        samples.iter().map(|s| s.label as f64).sum::<f64>() / samples.len() as f64
    }

    #[test]
    fn boundary_score_examples() {
        assert_eq!(mar1_boundary_score(&[0.0; 5]), 0.0);
        assert_eq!(mar1_boundary_score(&[1.0, 0.0, 0.0, 0.0, 0.0]), 5.5);
        assert_eq!(mar1_boundary_score(&[0.0, 1.0, 1.0, 0.0, 0.0]), 2.0);
    }

    #[test]
    fn cholesky_reproduces_covariance() {
        let l = mar1_cholesky();
        for i in 0..MAR1_DIM {
            for j in 0..MAR1_DIM {
                let v: f64 = (0..MAR1_DIM).map(|k| l[i][k] * l[j][k]).sum();
                let expected = if i == j { 1.0 } else { MAR1_CORRELATION };
                assert!((v - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn positive_rates_match_targets() {
        for (id, target) in [
            (DgpId::Synthetic1, 0.1),
            (DgpId::Synthetic2, 0.5),
            (DgpId::Synthetic3, 1.0 / 3.0),
            (DgpId::Mar1, 0.1),
        ] {
            let mut rng = substream(11, Stream::Dgp);
            let samples = generate(id, 60_000, &mut rng).unwrap();
            assert!(samples.iter().all(|s| s.features.len() == id.dim()));
            let rate = positive_rate(&samples);
            assert!((rate - target).abs() < 0.01, "{id}: {rate}");
        }
    }

    #[test]
    fn calibration_is_self_consistent_and_deterministic() {
        let c1 = calibrate_label_threshold(DgpId::Mar1, 0.1, 1_000_000, &mut substream(3, Stream::Dgp))
            .unwrap();
        let c2 = calibrate_label_threshold(DgpId::Mar1, 0.1, 1_000_000, &mut substream(3, Stream::Dgp))
            .unwrap();
        assert_eq!(c1, c2);
        let dgp = Dgp::with_threshold(DgpId::Mar1, Some(c1));
        let check = dgp.generate(200_000, &mut substream(99, Stream::Dgp));
        let rate = positive_rate(&check);
        assert!((0.095..=0.105).contains(&rate), "{rate}");
    }

    #[test]
    fn symmetric_scores_calibrate_to_centre() {
        let mut rng = substream(5, Stream::Dgp);
        let mut scores: Vec<f64> = (0..100_001).map(|_| normal(&mut rng)).collect();
        let c = threshold_for_rate(&mut scores, 0.5).unwrap();
        assert!(c.abs() < 0.02);
        assert!(threshold_for_rate(&mut [1.0; 10], 0.5).is_err());
    }

    #[test]
    fn calibration_errors() {
        let mut rng = substream(1, Stream::Dgp);
        assert!(calibrate_label_threshold(DgpId::Synthetic1, 0.1, 200_000, &mut rng).is_err());
        assert!(calibrate_label_threshold(DgpId::Mar1, 0.1, 1_000, &mut rng).is_err());
        assert!("synthetic9".parse::<DgpId>().is_err());
        assert_eq!("mar1".parse::<DgpId>().unwrap(), DgpId::Mar1);
    }

    #[test]
    fn identical_seeds_identical_streams() {
        let dgp = Dgp::with_threshold(DgpId::Synthetic3, None);
        let a = dgp.generate(100, &mut substream(8, Stream::Dgp));
        let b = dgp.generate(100, &mut substream(8, Stream::Dgp));
        assert_eq!(a, b);
    }
}
