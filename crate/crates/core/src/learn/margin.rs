//! Linear soft-margin classifier trained by seeded stochastic subgradient
//! descent on the regularised hinge loss.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginModel {
    pub w: Vec<f64>,
    pub b: f64,
    pub lambda: f64,
}

impl MarginModel {
    pub fn decide(&self, x: &[f64]) -> f64 {
        self.w.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.b
    }
}

pub fn margin_decide(model: &MarginModel, x: &[f64]) -> f64 {
    model.decide(x)
}

/// `λ/2 ‖w‖² + mean(max(0, 1 − y(w·x + b)))`.
pub fn margin_objective(w: &[f64], b: f64, lambda: f64, x: &[Vec<f64>], y: &[f64]) -> f64 {
    let reg = 0.5 * lambda * w.iter().map(|v| v * v).sum::<f64>();
    let hinge: f64 = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| (1.0 - yi * (w.iter().zip(xi).map(|(a, c)| a * c).sum::<f64>() + b)).max(0.0))
        .sum();
    reg + hinge / x.len() as f64
}

#[derive(Clone, Debug, PartialEq)]
pub struct MarginFit {
    pub model: MarginModel,
    /// Objective of the best epoch-averaged iterate so far, per epoch.
    pub objective: Vec<f64>,
}

/// Step size `1/(λ(t + N))`; each epoch visits a fresh seeded permutation and
/// its averaged iterate replaces the incumbent when it lowers the objective.
pub fn margin_train(x: &[Vec<f64>], y: &[f64], lambda: f64, epochs: usize, seed: u64) -> Result<MarginFit> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
    }
    if y.iter().any(|&v| v != 1.0 && v != -1.0) {
        return Err(Error::InvalidArgument("labels must be -1 or +1".into()));
    }
    if !(y.contains(&1.0) && y.contains(&-1.0)) {
        return Err(Error::SingleClass);
    }
    let n = x.len();
    let d = x[0].len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut w, mut b) = (vec![0.0; d], 0.0);
    let mut best = (w.clone(), b, margin_objective(&w, b, lambda, x, y));
    let mut t = 0usize;
    let mut order: Vec<usize> = (0..n).collect();
    let mut trace = Vec::with_capacity(epochs);
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        let (mut wsum, mut bsum) = (vec![0.0; d], 0.0);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * (t + n) as f64);
            let score = w.iter().zip(&x[i]).map(|(a, c)| a * c).sum::<f64>() + b;
            let shrink = 1.0 - eta * lambda;
            w.iter_mut().for_each(|v| *v *= shrink);
            if y[i] * score < 1.0 {
                for (wj, xj) in w.iter_mut().zip(&x[i]) {
                    *wj += eta * y[i] * xj;
                }
                b += eta * y[i];
            }
            wsum.iter_mut().zip(&w).for_each(|(s, v)| *s += v);
            bsum += b;
        }
        let avg: Vec<f64> = wsum.iter().map(|s| s / n as f64).collect();
        let bavg = bsum / n as f64;
        let f = margin_objective(&avg, bavg, lambda, x, y);
        if f < best.2 {
            best = (avg, bavg, f);
        }
        trace.push(best.2);
    }
    Ok(MarginFit { model: MarginModel { w: best.0, b: best.1, lambda }, objective: trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn one_d_separable() {
        let x = vec![vec![-2.0], vec![2.0]];
        let fit = margin_train(&x, &[-1.0, 1.0], 0.01, 50, 0).unwrap();
        assert!(fit.model.decide(&[-2.0]) < 0.0 && fit.model.decide(&[2.0]) > 0.0);
    }

    #[test]
    fn single_class_rejected() {
        assert!(matches!(margin_train(&[vec![1.0], vec![2.0]], &[1.0, 1.0], 0.1, 5, 0), Err(Error::SingleClass)));
    }

    #[test]
    fn objective_trace_non_increasing() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<Vec<f64>> = (0..60).map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
        let y: Vec<f64> = x.iter().map(|p| if p[0] + p[1] + 0.3 * rng.random_range(-1.0..1.0) > 0.0 { 1.0 } else { -1.0 }).collect();
        let fit = margin_train(&x, &y, 0.05, 40, 1).unwrap();
        for w in fit.objective.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn near_grid_search_optimum() {
        for seed in 0..4 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<Vec<f64>> = (0..40).map(|_| vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]).collect();
            let y: Vec<f64> =
                x.iter().map(|p| if 0.8 * p[0] - p[1] + 0.5 + rng.random_range(-0.8..0.8) > 0.0 { 1.0 } else { -1.0 }).collect();
            let lambda = 0.1;
            let fit = margin_train(&x, &y, lambda, 300, seed).unwrap();
            let got = margin_objective(&fit.model.w, fit.model.b, lambda, &x, &y);
            let mut best = f64::INFINITY;
            let steps = 120;
            for i in 0..=steps {
                for j in 0..=steps {
                    for k in 0..=steps / 4 {
                        let w0 = -4.0 + 8.0 * i as f64 / steps as f64;
                        let w1 = -4.0 + 8.0 * j as f64 / steps as f64;
                        let b = -4.0 + 8.0 * k as f64 / (steps / 4) as f64;
                        best = best.min(margin_objective(&[w0, w1], b, lambda, &x, &y));
                    }
                }
            }
            assert!(got <= 1.05 * best, "seed {seed}: {got} vs grid {best}");
        }
    }
}
