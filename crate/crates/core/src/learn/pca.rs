//! Principal component analysis via the symmetric eigendecomposition of the
//! sample covariance.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// Retained unit axes, strongest first.
    pub axes: Vec<Vec<f64>>,
    /// Sample variance along each retained axis.
    pub variances: Vec<f64>,
    /// Total variance of the data.
    pub total_variance: f64,
}

impl PcaModel {
    pub fn k(&self) -> usize {
        self.axes.len()
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn retained_fraction(&self) -> f64 {
        self.variances.iter().sum::<f64>() / self.total_variance
    }

    /// `mean + Σ c_k · axis_k`.
    pub fn reconstruct(&self, coords: &[f64]) -> Vec<f64> {
        let mut x = self.mean.clone();
        for (c, a) in coords.iter().zip(&self.axes) {
            for (xi, ai) in x.iter_mut().zip(a) {
                *xi += c * ai;
            }
        }
        x
    }
}

/// Fits the smallest axis set whose variance share reaches `var_frac`.
pub fn pca_fit(x: &[Vec<f64>], var_frac: f64) -> Result<PcaModel> {
    let n = x.len();
    if n < 2 {
        return Err(Error::DegenerateData(format!("need at least 2 observations, got {n}")));
    }
    let d = x[0].len();
    if d == 0 || x.iter().any(|r| r.len() != d) {
        return Err(Error::DegenerateData("rows must share a positive dimension".into()));
    }
    if !(var_frac > 0.0 && var_frac <= 1.0) {
        return Err(Error::InvalidArgument(format!("variance fraction {var_frac} outside (0, 1]")));
    }
    let mut mean = vec![0.0; d];
    for r in x {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let centred = DMatrix::from_fn(n, d, |i, j| x[i][j] - mean[j]);
    let cov = (centred.transpose() * &centred) / (n as f64 - 1.0);
    let total: f64 = cov.diagonal().iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateData("all observations are identical".into()));
    }
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut axes = Vec::new();
    let mut variances = Vec::new();
    let mut acc = 0.0;
    for &i in &order {
        let lambda = eig.eigenvalues[i].max(0.0);
        let mut axis: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
        // sign convention: largest-magnitude component positive
        let big = axis.iter().cloned().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
        if big < 0.0 {
            axis.iter_mut().for_each(|v| *v = -*v);
        }
        axes.push(axis);
        variances.push(lambda);
        acc += lambda;
        if acc >= var_frac * total * (1.0 - 1e-12) {
            break;
        }
    }
    Ok(PcaModel { mean, axes, variances, total_variance: total })
}

/// `axesᵀ (x − mean)`.
pub fn pca_project(model: &PcaModel, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != model.dim() {
        return Err(Error::LengthMismatch(x.len(), model.dim()));
    }
    Ok(model
        .axes
        .iter()
        .map(|a| a.iter().zip(x).zip(&model.mean).map(|((a, v), m)| a * (v - m)).sum())
        .collect())
}
