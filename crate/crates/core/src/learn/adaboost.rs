use serde::{Deserialize, Serialize};

use super::{sigmoid, Dataset};

/// Predicts +1 when `polarity * (x[feature] - threshold) > 0`, else -1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stump {
    pub feature: usize,
    pub threshold: f64,
    pub polarity: f64,
    pub alpha: f64,
}

impl Stump {
    fn vote(&self, x: &[f64]) -> f64 {
        if self.polarity * (x[self.feature] - self.threshold) > 0.0 {
            1.0
        } else {
            -1.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoost {
    pub stumps: Vec<Stump>,
}

const MIN_ERR: f64 = 1e-10;

/// Lowest weighted-error stump over every feature, threshold and polarity.
fn best_stump(data: &Dataset, sorted: &[Vec<usize>], w: &[f64]) -> (Stump, f64) {
    let total_pos: f64 = data.y.iter().zip(w).filter(|(y, _)| **y).map(|(_, w)| w).sum();
    let total: f64 = w.iter().sum();
    let mut best = (
        Stump {
            feature: 0,
            // finite so the model stays JSON-representable
            threshold: f64::MIN,
            polarity: 1.0,
            alpha: 0.0,
        },
        // everything predicted +1
        total - total_pos,
    );
    if total_pos < best.1 {
        best.0.polarity = -1.0;
        best.1 = total_pos;
    }
    for (f, order) in sorted.iter().enumerate() {
        // left of the cut: weight of positives / negatives
        let (mut lp, mut ln) = (0.0, 0.0);
        for k in 0..order.len() - 1 {
            let i = order[k];
            if data.y[i] {
                lp += w[i];
            } else {
                ln += w[i];
            }
            let (a, b) = (data.x[i][f], data.x[order[k + 1]][f]);
            if a == b {
                continue;
            }
            let threshold = a + (b - a) / 2.0;
            let threshold = if threshold < b { threshold } else { a };
            let rp = total_pos - lp;
            let rn = total - total_pos - ln;
            // polarity +1: right side positive; errors are left positives + right negatives
            let err_pos = lp + rn;
            let err_neg = ln + rp;
            if err_pos < best.1 {
                best = (
                    Stump {
                        feature: f,
                        threshold,
                        polarity: 1.0,
                        alpha: 0.0,
                    },
                    err_pos,
                );
            }
            if err_neg < best.1 {
                best = (
                    Stump {
                        feature: f,
                        threshold,
                        polarity: -1.0,
                        alpha: 0.0,
                    },
                    err_neg,
                );
            }
        }
    }
    (best.0, best.1 / total)
}

pub fn fit(data: &Dataset, n_stumps: usize) -> AdaBoost {
    let n = data.len();
    let sorted: Vec<Vec<usize>> = (0..data.n_features())
        .map(|f| {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| data.x[a][f].total_cmp(&data.x[b][f]));
            idx
        })
        .collect();
    let mut w = vec![1.0 / n as f64; n];
    let mut stumps = Vec::new();
    for _ in 0..n_stumps {
        let (mut stump, err) = best_stump(data, &sorted, &w);
        if err >= 0.5 && !stumps.is_empty() {
            break;
        }
        let err = err.clamp(MIN_ERR, 1.0 - MIN_ERR);
        stump.alpha = 0.5 * ((1.0 - err) / err).ln();
        for (i, wi) in w.iter_mut().enumerate() {
            let y = if data.y[i] { 1.0 } else { -1.0 };
            *wi *= (-stump.alpha * y * stump.vote(&data.x[i])).exp();
        }
        let z: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= z);
        stumps.push(stump);
        if err <= MIN_ERR {
            break;
        }
    }
    AdaBoost { stumps }
}

impl AdaBoost {
    pub fn margin(&self, x: &[f64]) -> f64 {
        self.stumps.iter().map(|s| s.alpha * s.vote(x)).sum()
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        sigmoid(2.0 * self.margin(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_single_stump() {
        let d = Dataset {
            x: vec![vec![1.0], vec![2.0], vec![3.0], vec![4.0]],
            y: vec![false, false, true, true],
        };
        let m = fit(&d, 50);
        assert_eq!(m.stumps.len(), 1);
        assert_eq!(m.stumps[0].threshold, 2.5);
        assert!(m.predict(&[4.0]) > 0.99);
        assert!(m.predict(&[1.0]) < 0.01);
    }

    #[test]
    fn interval_needs_several_stumps() {
        // positives in the middle: no single stump separates them
        let x: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64]).collect();
        let y: Vec<bool> = (0..12).map(|i| (4..8).contains(&i)).collect();
        let d = Dataset { x, y };
        let m = fit(&d, 50);
        assert!(m.stumps.len() > 1);
        let correct = d.x.iter().zip(&d.y).filter(|(x, y)| (m.predict(x) > 0.5) == **y).count();
        assert_eq!(correct, 12);
    }

    #[test]
    fn weighted_error_matches_brute_force() {
        let d = Dataset {
            x: vec![vec![3.0, 1.0], vec![1.0, 5.0], vec![2.0, 2.0], vec![5.0, 4.0], vec![4.0, 3.0]],
            y: vec![true, false, false, true, false],
        };
        let w = [0.1, 0.3, 0.2, 0.25, 0.15];
        let sorted: Vec<Vec<usize>> = (0..2)
            .map(|f| {
                let mut idx: Vec<usize> = (0..5).collect();
                idx.sort_by(|&a, &b| d.x[a][f].total_cmp(&d.x[b][f]));
                idx
            })
            .collect();
        let (_, err) = best_stump(&d, &sorted, &w);
        // brute force over all thresholds at data points and both polarities
        let mut brute = f64::INFINITY;
        for f in 0..2 {
            for t in d.x.iter().map(|x| x[f]).chain([f64::NEG_INFINITY]) {
                for pol in [1.0, -1.0] {
                    let e: f64 = (0..5)
                        .filter(|&i| (pol * (d.x[i][f] - t) > 0.0) != d.y[i])
                        .map(|i| w[i])
                        .sum();
                    brute = brute.min(e);
                }
            }
        }
        assert!((err - brute).abs() < 1e-12, "{err} vs {brute}");
    }
}
