//! Logistic regression and linear discriminant analysis. Both end up as a
//! weight vector and bias applied to raw features; internally they work on
//! standardized columns so unscaled inputs (byte sizes next to ratios) stay
//! numerically tame.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{sigmoid, Dataset};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Linear {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl Linear {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let z = self.bias + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        sigmoid(z)
    }
}

struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    fn fit(data: &Dataset) -> Self {
        let d = data.n_features();
        let n = data.len() as f64;
        let mut mean = vec![0.0; d];
        for x in &data.x {
            for (m, v) in mean.iter_mut().zip(x) {
                *m += v / n;
            }
        }
        let mut scale = vec![0.0; d];
        for x in &data.x {
            for j in 0..d {
                scale[j] += (x[j] - mean[j]).powi(2) / n;
            }
        }
        for s in &mut scale {
            *s = if *s > 0.0 { s.sqrt() } else { 1.0 };
        }
        Standardizer { mean, scale }
    }

    fn transform(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    /// Maps weights learned on standardized inputs back to raw inputs.
    fn unfold(&self, w: &[f64], b: f64) -> Linear {
        let weights: Vec<f64> = w.iter().zip(&self.scale).map(|(w, s)| w / s).collect();
        let bias = b - weights.iter().zip(&self.mean).map(|(w, m)| w * m).sum::<f64>();
        Linear { weights, bias }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LogisticParams {
    pub iterations: usize,
    pub learning_rate: f64,
    pub l2: f64,
}

/// Full-batch gradient ascent on the mean log-likelihood with an L2 penalty
/// on the weights (not the bias).
pub fn fit_logistic(data: &Dataset, params: LogisticParams) -> Linear {
    let std = Standardizer::fit(data);
    let xs: Vec<Vec<f64>> = data.x.iter().map(|x| std.transform(x)).collect();
    let d = data.n_features();
    let n = data.len() as f64;
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut grad = vec![0.0; d];
    for _ in 0..params.iterations {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut gb = 0.0;
        for (x, &y) in xs.iter().zip(&data.y) {
            let z = b + w.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
            let err = y as u8 as f64 - sigmoid(z);
            for (g, v) in grad.iter_mut().zip(x) {
                *g += err * v;
            }
            gb += err;
        }
        for (wj, g) in w.iter_mut().zip(&grad) {
            *wj += params.learning_rate * (g / n - params.l2 * *wj);
        }
        b += params.learning_rate * gb / n;
    }
    std.unfold(&w, b)
}

pub const LDA_RIDGE: f64 = 1e-6;

/// Two-class LDA with a pooled covariance; the posterior reduces to a
/// logistic of a linear score.
pub fn fit_lda(data: &Dataset) -> Linear {
    let std = Standardizer::fit(data);
    let xs: Vec<Vec<f64>> = data.x.iter().map(|x| std.transform(x)).collect();
    let d = data.n_features();
    let mut means = [DVector::zeros(d), DVector::zeros(d)];
    let mut count = [0usize; 2];
    for (x, &y) in xs.iter().zip(&data.y) {
        means[y as usize] += DVector::from_column_slice(x);
        count[y as usize] += 1;
    }
    for c in 0..2 {
        means[c] /= count[c] as f64;
    }
    let mut cov = DMatrix::<f64>::zeros(d, d);
    for (x, &y) in xs.iter().zip(&data.y) {
        let diff = DVector::from_column_slice(x) - &means[y as usize];
        cov += &diff * diff.transpose();
    }
    let dof = if data.len() > 2 { data.len() - 2 } else { data.len() };
    cov /= dof as f64;
    for i in 0..d {
        cov[(i, i)] += LDA_RIDGE;
    }
    let delta = &means[1] - &means[0];
    let w = match cov.clone().cholesky() {
        Some(ch) => ch.solve(&delta),
        None => cov
            .pseudo_inverse(1e-12)
            .map(|inv| inv * &delta)
            .unwrap_or_else(|_| DVector::zeros(d)),
    };
    let mid = (&means[1] + &means[0]) * 0.5;
    let prior = (count[1] as f64 / count[0] as f64).ln();
    let b = -mid.dot(&w) + prior;
    std.unfold(w.as_slice(), b)
}
