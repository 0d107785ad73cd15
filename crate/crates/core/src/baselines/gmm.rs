//! Two-component 1-D Gaussian mixture fitted by EM.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::mean_sd;
use crate::volcore::{intensity_level, otsu_threshold, Grid2, Histogram, Image2, Mask2};

pub const GMM_TOL: f64 = 1e-6;
pub const GMM_MAX_ITER: usize = 200;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gmm2 {
    /// Component 0 is the lower-mean (healthy) one.
    pub weights: [f64; 2],
    pub means: [f64; 2],
    pub sds: [f64; 2],
    /// Mean per-sample log-likelihood before each update, then at the end.
    pub log_likelihood: Vec<f64>,
    /// False when the iteration cap was hit first.
    pub converged: bool,
}

impl Gmm2 {
    /// `μ_h + 2σ_h`.
    pub fn threshold(&self) -> f64 {
        self.means[0] + 2.0 * self.sds[0]
    }
}

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

fn log_pdf(x: f64, mu: f64, sd: f64) -> f64 {
    let z = (x - mu) / sd;
    -0.5 * z * z - sd.ln() - LN_SQRT_2PI
}

fn mean_ll(x: &[f64], w: &[f64; 2], mu: &[f64; 2], sd: &[f64; 2]) -> f64 {
    x.iter()
        .map(|&v| {
            let a = w[0].ln() + log_pdf(v, mu[0], sd[0]);
            let b = w[1].ln() + log_pdf(v, mu[1], sd[1]);
            let m = a.max(b);
            m + ((a - m).exp() + (b - m).exp()).ln()
        })
        .sum::<f64>()
        / x.len() as f64
}

/// EM from the Otsu split, until the mean log-likelihood gains less than
/// [`GMM_TOL`] or [`GMM_MAX_ITER`] updates have run.
pub fn gmm_fit(x: &[f64]) -> Result<Gmm2> {
    if x.len() < 10 {
        return Err(Error::DegenerateData(format!("need at least 10 samples, got {}", x.len())));
    }
    let (_, sd_all) = mean_sd(x);
    if !(sd_all > 0.0) {
        return Err(Error::DegenerateData("samples have zero variance".into()));
    }
    let floor = 1e-3 * sd_all;
    let t = otsu_threshold(&Histogram::from_values(x.iter().copied()))
        .map_err(|_| Error::DegenerateData("samples fall in a single intensity level".into()))?;
    let (lo, hi): (Vec<f64>, Vec<f64>) = x.iter().partition(|&&v| intensity_level(v) <= t);
    let init = |g: &[f64]| {
        let (m, s) = mean_sd(g);
        (m, if s.is_finite() { s.max(floor) } else { floor })
    };
    let (m0, s0) = init(&lo);
    let (m1, s1) = init(&hi);
    let n = x.len() as f64;
    let mut w = [lo.len() as f64 / n, hi.len() as f64 / n];
    let mut mu = [m0, m1];
    let mut sd = [s0, s1];
    let mut trace = vec![mean_ll(x, &w, &mu, &sd)];
    let mut converged = false;
    let mut r = vec![0.0; x.len()];
    for _ in 0..GMM_MAX_ITER {
        // responsibilities of component 1
        for (ri, &v) in r.iter_mut().zip(x) {
            let a = w[0].ln() + log_pdf(v, mu[0], sd[0]);
            let b = w[1].ln() + log_pdf(v, mu[1], sd[1]);
            *ri = 1.0 / (1.0 + (a - b).exp());
        }
        let n1: f64 = r.iter().sum();
        let n0 = n - n1;
        if n0 <= 0.0 || n1 <= 0.0 {
            break;
        }
        let mu0 = x.iter().zip(&r).map(|(v, ri)| (1.0 - ri) * v).sum::<f64>() / n0;
        let mu1 = x.iter().zip(&r).map(|(v, ri)| ri * v).sum::<f64>() / n1;
        let v0 = x.iter().zip(&r).map(|(v, ri)| (1.0 - ri) * (v - mu0).powi(2)).sum::<f64>() / n0;
        let v1 = x.iter().zip(&r).map(|(v, ri)| ri * (v - mu1).powi(2)).sum::<f64>() / n1;
        w = [n0 / n, n1 / n];
        mu = [mu0, mu1];
        sd = [v0.sqrt().max(floor), v1.sqrt().max(floor)];
        let ll = mean_ll(x, &w, &mu, &sd);
        let gain = ll - trace.last().unwrap();
        trace.push(ll);
        if gain.abs() < GMM_TOL {
            converged = true;
            break;
        }
    }
    if mu[0] > mu[1] {
        w.swap(0, 1);
        mu.swap(0, 1);
        sd.swap(0, 1);
    }
    Ok(Gmm2 { weights: w, means: mu, sds: sd, log_likelihood: trace, converged })
}

/// `{v ∈ myo : I(v) > μ_h + 2σ_h}`.
pub fn gmm_segment(slice: &Image2, myo: &Mask2, gmm: &Gmm2) -> Mask2 {
    let t = gmm.threshold();
    Grid2::from_fn(slice.width(), slice.height(), |x, y| myo.get(x, y) && slice.get(x, y) > t)
}
