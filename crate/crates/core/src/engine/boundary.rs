use serde::Serialize;

use crate::data::LabeledExample;
use crate::dgp::{Dgp, DgpId};
use crate::error::{Error, Result};
use crate::learners::{GradientDescent, LinearModel};
use crate::numerics::roc_auc;
use crate::rng::{substream, Stream};

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryOptions {
    /// Population share censored on the low side of dimension 0, per panel.
    pub fractions: Vec<f64>,
    pub train_n: usize,
    pub holdout_n: usize,
    /// Draws used to place each censoring threshold.
    pub reference_n: usize,
    pub fit: GradientDescent,
    pub seed: u64,
}

impl Default for BoundaryOptions {
    fn default() -> Self {
        Self {
            fractions: vec![0.0, 0.5, 0.7, 0.85],
            train_n: 6000,
            holdout_n: 5000,
            reference_n: 30_000,
            fit: GradientDescent { epochs: 3000, lr: 1.0, tol: 1e-7 },
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryResult {
    pub fraction: f64,
    /// Points with `x0 <= threshold` are never observed.
    pub threshold: f64,
    /// Linear boundary, bias last. `None` when the observed region held one
    /// class.
    pub weights: Option<Vec<f64>>,
    pub auc: Option<f64>,
    pub single_class: bool,
}

impl BoundaryResult {
    /// True when any feature weight changed sign relative to `other`.
    pub fn signs_differ(&self, other: &BoundaryResult) -> bool {
        match (&self.weights, &other.weights) {
            (Some(a), Some(b)) => {
                let d = a.len() - 1;
                a[..d].iter().zip(&b[..d]).any(|(x, y)| x.signum() != y.signum())
            }
            _ => false,
        }
    }
}

/// Fits a linear boundary on synthetic3 data observed only to the right of
/// a threshold on dimension 0, for each censoring fraction, and scores it on
/// uncensored data.
pub fn run_boundary_experiment(opts: &BoundaryOptions) -> Result<Vec<BoundaryResult>> {
    if opts.fractions.is_empty() || opts.train_n < 2 || opts.holdout_n < 2 || opts.reference_n < 2 {
        return Err(Error::Config("boundary experiment needs fractions and positive sizes".into()));
    }
    if let Some(f) = opts.fractions.iter().find(|f| !(0.0..1.0).contains(*f)) {
        return Err(Error::Config(format!("censoring fraction {f} outside [0, 1)")));
    }
    let dgp = Dgp::with_threshold(DgpId::Synthetic3, None);
    let mut rng = substream(opts.seed, Stream::Dgp);
    let mut reference: Vec<f64> = dgp
        .generate(opts.reference_n, &mut rng)
        .into_iter()
        .map(|e| e.features[0])
        .collect();
    reference.sort_by(f64::total_cmp);

    let holdout = dgp.generate(opts.holdout_n, &mut substream(opts.seed, Stream::Holdout));
    let (hx, hy): (Vec<Vec<f64>>, Vec<u8>) =
        holdout.into_iter().map(|e| (e.features, e.label)).unzip();

    // one shared stream of draws; each panel keeps the first train_n observed
    let mut draws: Vec<LabeledExample> = Vec::new();
    let mut results = Vec::with_capacity(opts.fractions.len());
    for &fraction in &opts.fractions {
        let threshold = if fraction == 0.0 {
            f64::NEG_INFINITY
        } else {
            let k = ((fraction * reference.len() as f64).ceil() as usize).clamp(1, reference.len());
            reference[k - 1]
        };
        let mut train: Vec<usize> = Vec::with_capacity(opts.train_n);
        let mut cursor = 0;
        let max_draws = opts.train_n.saturating_mul(1000);
        while train.len() < opts.train_n {
            if cursor == draws.len() {
                if draws.len() >= max_draws {
                    return Err(Error::Calibration(format!(
                        "observed region beyond {threshold} is too small to hold {} points",
                        opts.train_n
                    )));
                }
                let extra = opts.train_n.max(1024);
                draws.extend(dgp.generate(extra, &mut rng));
                continue;
            }
            if draws[cursor].features[0] > threshold {
                train.push(cursor);
            }
            cursor += 1;
        }
        let x: Vec<Vec<f64>> = train.iter().map(|&i| draws[i].features.clone()).collect();
        let y: Vec<u8> = train.iter().map(|&i| draws[i].label).collect();
        let positives = y.iter().filter(|&&v| v == 1).count();
        if positives == 0 || positives == y.len() {
            results.push(BoundaryResult { fraction, threshold, weights: None, auc: None, single_class: true });
            continue;
        }
        let model = LinearModel::fit(&x, &y, opts.fit)?;
        let scores: Vec<f64> = hx.iter().map(|row| model.decision(row)).collect();
        results.push(BoundaryResult {
            fraction,
            threshold,
            weights: Some(model.weights().to_vec()),
            auc: Some(roc_auc(&scores, &hy)?),
            single_class: false,
        });
    }
    Ok(results)
}
