use serde::{Deserialize, Serialize};

use super::Dataset;

/// Per-class, per-feature Gaussian likelihoods. Index 0 is the negative
/// class, 1 the positive class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    pub log_prior: [f64; 2],
    pub mean: [Vec<f64>; 2],
    pub var: [Vec<f64>; 2],
}

pub const VAR_FLOOR_RATIO: f64 = 1e-9;

pub fn fit(data: &Dataset) -> GaussianNb {
    let d = data.n_features();
    let n = data.len() as f64;
    let mut mean = [vec![0.0; d], vec![0.0; d]];
    let mut var = [vec![0.0; d], vec![0.0; d]];
    let mut count = [0usize; 2];
    for (x, &y) in data.x.iter().zip(&data.y) {
        let c = y as usize;
        count[c] += 1;
        for (m, v) in mean[c].iter_mut().zip(x) {
            *m += v;
        }
    }
    for c in 0..2 {
        for m in &mut mean[c] {
            *m /= count[c] as f64;
        }
    }
    for (x, &y) in data.x.iter().zip(&data.y) {
        let c = y as usize;
        for j in 0..d {
            var[c][j] += (x[j] - mean[c][j]).powi(2);
        }
    }
    for (vc, &nc) in var.iter_mut().zip(&count) {
        for v in vc.iter_mut() {
            *v /= nc as f64;
        }
    }

    // floor relative to the largest variance over the whole training set
    let max_var = (0..d)
        .map(|j| {
            let mu = data.x.iter().map(|x| x[j]).sum::<f64>() / n;
            data.x.iter().map(|x| (x[j] - mu).powi(2)).sum::<f64>() / n
        })
        .fold(0.0, f64::max);
    let floor = if max_var > 0.0 { VAR_FLOOR_RATIO * max_var } else { VAR_FLOOR_RATIO };
    for vc in &mut var {
        for v in vc.iter_mut() {
            *v = v.max(floor);
        }
    }
    GaussianNb {
        log_prior: [(count[0] as f64 / n).ln(), (count[1] as f64 / n).ln()],
        mean,
        var,
    }
}

impl GaussianNb {
    fn joint_log_likelihood(&self, c: usize, x: &[f64]) -> f64 {
        let mut ll = self.log_prior[c];
        for ((xj, m), v) in x.iter().zip(&self.mean[c]).zip(&self.var[c]) {
            ll -= 0.5 * ((2.0 * std::f64::consts::PI * v).ln() + (xj - m).powi(2) / v);
        }
        ll
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let l0 = self.joint_log_likelihood(0, x);
        let l1 = self.joint_log_likelihood(1, x);
        // P(1) = 1 / (1 + exp(l0 - l1))
        super::sigmoid(l1 - l0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn well_separated_points() {
        let d = Dataset {
            x: vec![vec![0.0], vec![10.0]],
            y: vec![true, false],
        };
        let m = fit(&d);
        assert!(m.predict(&[0.0]) > 0.99);
        assert!(m.predict(&[10.0]) < 0.01);
    }

    #[test]
    fn equidistant_query_is_even() {
        let d = Dataset {
            x: vec![vec![-2.0], vec![-1.0], vec![1.0], vec![2.0]],
            y: vec![false, false, true, true],
        };
        assert!((fit(&d).predict(&[0.0]) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn closed_form_posterior() {
        // class means -1 and 1, both variances 1, equal priors:
        // P(1|x) = sigmoid(2x)
        let d = Dataset {
            x: vec![vec![-2.0], vec![0.0], vec![0.0], vec![2.0]],
            y: vec![false, false, true, true],
        };
        let m = fit(&d);
        for x in [-1.5, -0.3, 0.0, 0.7, 2.0] {
            let expected = 1.0 / (1.0 + (-2.0f64 * x).exp());
            assert!((m.predict(&[x]) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_feature_does_not_blow_up() {
        let d = Dataset {
            x: vec![vec![5.0, 0.0], vec![5.0, 1.0], vec![5.0, 9.0], vec![5.0, 10.0]],
            y: vec![false, false, true, true],
        };
        let p = fit(&d).predict(&[5.0, 9.5]);
        assert!(p.is_finite() && p > 0.5);
    }
}
