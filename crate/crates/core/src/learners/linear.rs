use crate::error::{Error, Result};
use crate::numerics::sigmoid;

/// Logistic-loss linear classifier fitted by full-batch gradient descent on
/// internally standardised features. Weights are stored in the original
/// feature scale, bias last.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    weights: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientDescent {
    pub epochs: usize,
    pub lr: f64,
    pub tol: f64,
}

impl LinearModel {
    pub fn zeros(dim: usize) -> Self {
        Self { weights: vec![0.0; dim + 1] }
    }

    pub fn from_weights(weights: Vec<f64>) -> Self {
        assert!(!weights.is_empty(), "weights must include the bias");
        Self { weights }
    }

    pub fn dim(&self) -> usize {
        self.weights.len() - 1
    }

    /// Feature weights followed by the bias.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        let d = self.dim();
        self.weights[..d]
            .iter()
            .zip(x)
            .map(|(w, v)| w * v)
            .sum::<f64>()
            + self.weights[d]
    }

    pub fn predict_one(&self, x: &[f64]) -> f64 {
        sigmoid(self.decision(x))
    }

    pub fn fit(features: &[Vec<f64>], labels: &[u8], opts: GradientDescent) -> Result<Self> {
        let n = features.len();
        if n == 0 {
            return Err(Error::Fit("cannot fit on an empty training set".into()));
        }
        let d = features[0].len();
        let mut mean = vec![0.0; d];
        for row in features {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v / n as f64;
            }
        }
        let mut scale = vec![0.0; d];
        for row in features {
            for j in 0..d {
                scale[j] += (row[j] - mean[j]).powi(2) / n as f64;
            }
        }
        for s in scale.iter_mut() {
            *s = if *s > 1e-24 { s.sqrt() } else { 1.0 };
        }
        let z: Vec<Vec<f64>> = features
            .iter()
            .map(|row| (0..d).map(|j| (row[j] - mean[j]) / scale[j]).collect())
            .collect();

        let mut w = vec![0.0; d + 1];
        let mut grad = vec![0.0; d + 1];
        for _ in 0..opts.epochs {
            grad.iter_mut().for_each(|g| *g = 0.0);
            for (row, &y) in z.iter().zip(labels) {
                let s = row.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + w[d];
                let r = sigmoid(s) - y as f64;
                for j in 0..d {
                    grad[j] += r * row[j];
                }
                grad[d] += r;
            }
            let mut max_abs: f64 = 0.0;
            for (wj, gj) in w.iter_mut().zip(&grad) {
                let g = gj / n as f64;
                max_abs = max_abs.max(g.abs());
                *wj -= opts.lr * g;
            }
            if max_abs < opts.tol {
                break;
            }
        }

        // back to the raw feature scale
        let mut weights = vec![0.0; d + 1];
        let mut bias = w[d];
        for j in 0..d {
            weights[j] = w[j] / scale[j];
            bias -= w[j] * mean[j] / scale[j];
        }
        weights[d] = bias;
        Ok(Self { weights })
    }
}

/// Mean logistic loss of `model` on a data set.
pub fn log_loss(model: &LinearModel, features: &[Vec<f64>], labels: &[u8]) -> f64 {
    let eps = 1e-15;
    features
        .iter()
        .zip(labels)
        .map(|(x, &y)| {
            let p = model.predict_one(x).clamp(eps, 1.0 - eps);
            if y == 1 {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum::<f64>()
        / features.len() as f64
}
