//! Label non-response mechanisms.
//!
//! The MAR mechanism splits the pool along one coordinate: points at or below
//! the threshold respond with `p_low`, the rest with `p_high`. The split keeps
//! the marginal response rate equal to the MCAR rate `p_star`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MechanismKind {
    Full,
    Mcar,
    Mar,
}

impl MechanismKind {
    pub fn name(self) -> &'static str {
        match self {
            MechanismKind::Full => "full",
            MechanismKind::Mcar => "mcar",
            MechanismKind::Mar => "mar",
        }
    }
}

impl fmt::Display for MechanismKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MechanismKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(MechanismKind::Full),
            "mcar" => Ok(MechanismKind::Mcar),
            "mar" => Ok(MechanismKind::Mar),
            other => Err(Error::Config(format!("unknown mechanism `{other}`"))),
        }
    }
}

/// Given the low-region response probability and the target marginal rate,
/// returns `(p_high, low_region_fraction)` with
/// `p_high = 1 - p_low (1 - p_star)` and `f p_low + (1 - f) p_high = p_star`.
///
/// `p_low == p_star` is accepted and yields `f = 1` (a uniform mechanism).
pub fn solve_region_split(p_low: f64, p_star: f64) -> Result<(f64, f64)> {
    if !(p_star > 0.0 && p_star <= 1.0) {
        return Err(Error::Domain(format!("marginal response rate {p_star} outside (0, 1]")));
    }
    if !(0.0..=1.0).contains(&p_low) {
        return Err(Error::Domain(format!("low-region response {p_low} outside [0, 1]")));
    }
    if p_star == 1.0 {
        return Ok((1.0, 0.0));
    }
    if p_low > p_star {
        return Err(Error::Domain(format!(
            "infeasible split: p_low {p_low} exceeds marginal rate {p_star}"
        )));
    }
    let p_high = 1.0 - p_low * (1.0 - p_star);
    if p_low == p_star {
        return Ok((p_high, 1.0));
    }
    let f = (p_high - p_star) / (p_high - p_low);
    Ok((p_high, f))
}

/// Serialisable description of a mechanism, as it appears in config files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechanismSpec {
    pub kind: MechanismKind,
    pub p_star: f64,
    pub p_low: f64,
    pub dimension: usize,
}

impl MechanismSpec {
    pub fn build(&self) -> Result<NonResponseMechanism> {
        match self.kind {
            MechanismKind::Full => Ok(NonResponseMechanism::full()),
            MechanismKind::Mcar => NonResponseMechanism::mcar(self.p_star),
            MechanismKind::Mar => NonResponseMechanism::mar(self.p_low, self.p_star, self.dimension),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonResponseMechanism {
    kind: MechanismKind,
    p_star: f64,
    p_low: f64,
    p_high: f64,
    region_fraction: f64,
    dimension: usize,
    threshold: Option<f64>,
}

impl NonResponseMechanism {
    pub fn full() -> Self {
        Self {
            kind: MechanismKind::Full,
            p_star: 1.0,
            p_low: 1.0,
            p_high: 1.0,
            region_fraction: 0.0,
            dimension: 0,
            threshold: None,
        }
    }

    pub fn mcar(p_star: f64) -> Result<Self> {
        if !(p_star > 0.0 && p_star <= 1.0) {
            return Err(Error::Domain(format!("marginal response rate {p_star} outside (0, 1]")));
        }
        Ok(Self {
            kind: MechanismKind::Mcar,
            p_star,
            p_low: p_star,
            p_high: p_star,
            region_fraction: 0.0,
            dimension: 0,
            threshold: None,
        })
    }

    /// MAR mechanism with the region split solved; the threshold still has to
    /// be calibrated on a pool.
    pub fn mar(p_low: f64, p_star: f64, dimension: usize) -> Result<Self> {
        let (p_high, region_fraction) = solve_region_split(p_low, p_star)?;
        Ok(Self {
            kind: MechanismKind::Mar,
            p_star,
            p_low,
            p_high,
            region_fraction,
            dimension,
            threshold: None,
        })
    }

    pub fn kind(&self) -> MechanismKind {
        self.kind
    }

    pub fn p_star(&self) -> f64 {
        self.p_star
    }

    pub fn p_low(&self) -> f64 {
        self.p_low
    }

    pub fn p_high(&self) -> f64 {
        self.p_high
    }

    pub fn region_fraction(&self) -> f64 {
        self.region_fraction
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn threshold(&self) -> Option<f64> {
        self.threshold
    }

    pub fn is_calibrated(&self) -> bool {
        self.kind != MechanismKind::Mar || self.threshold.is_some()
    }

    /// Sets the MAR threshold to the pool's `f`-quantile along the split
    /// dimension, so that `ceil(f N)` points fall in the low-response region.
    /// Full and MCAR mechanisms are returned unchanged.
    pub fn calibrate_threshold<'a, I>(&self, pool_features: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        if self.kind != MechanismKind::Mar {
            return Ok(*self);
        }
        let mut column = Vec::new();
        for row in pool_features {
            let v = row.get(self.dimension).ok_or(Error::Shape {
                expected: self.dimension + 1,
                got: row.len(),
            })?;
            column.push(*v);
        }
        if column.is_empty() {
            return Err(Error::Calibration("cannot calibrate on an empty pool".into()));
        }
        let f = self.region_fraction;
        let threshold = if f <= 0.0 {
            f64::NEG_INFINITY
        } else {
            column.sort_by(f64::total_cmp);
            if f < 1.0 && column[0] == column[column.len() - 1] {
                return Err(Error::Calibration(format!(
                    "feature column {} is constant",
                    self.dimension
                )));
            }
            let k = ((f * column.len() as f64).ceil() as usize).clamp(1, column.len());
            column[k - 1]
        };
        Ok(Self { threshold: Some(threshold), ..*self })
    }

    /// True when `x` lies in the low-response region. Always false for full
    /// and MCAR mechanisms.
    pub fn in_low_region(&self, x: &[f64]) -> Result<bool> {
        match self.kind {
            MechanismKind::Mar => {
                let tau = self.threshold.ok_or_else(|| {
                    Error::State("MAR mechanism used before threshold calibration".into())
                })?;
                Ok(x[self.dimension] <= tau)
            }
            _ => Ok(false),
        }
    }

    pub fn response_probability(&self, x: &[f64]) -> Result<f64> {
        match self.kind {
            MechanismKind::Full => Ok(1.0),
            MechanismKind::Mcar => Ok(self.p_star),
            MechanismKind::Mar => {
                if self.in_low_region(x)? {
                    Ok(self.p_low)
                } else {
                    Ok(self.p_high)
                }
            }
        }
    }
}

/// Bernoulli draw: responds with probability `p`.
pub fn realize_response<R: Rng + ?Sized>(p: f64, rng: &mut R) -> bool {
    rng.random::<f64>() < p
}
