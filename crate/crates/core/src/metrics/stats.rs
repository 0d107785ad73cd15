use serde::{Deserialize, Serialize};

use super::special::{normal_sf, student_t_two_tailed};
use crate::error::{Error, Result};

/// Study-level agreement between a method and the reference.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgreementStats {
    pub bias_mean: f64,
    pub bias_sd: f64,
    pub spearman_rho: Option<f64>,
    pub p_value: Option<f64>,
    pub test: String,
}

/// Mean and sample (n − 1) standard deviation; SD is 0 for a single value.
pub fn mean_sd(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    if x.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = x.iter().sum::<f64>() / n;
    if x.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Bias `d = y − x`: returns (mean(d), SD(d)).
pub fn bland_altman(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(Error::InvalidArgument("Bland-Altman needs at least 2 pairs".into()));
    }
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| b - a).collect();
    Ok(mean_sd(&d))
}

/// 1-based ranks with ties replaced by their average rank.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let (mx, _) = mean_sd(x);
    let (my, _) = mean_sd(y);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Spearman's ρ: Pearson correlation of average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(Error::InvalidArgument("Spearman needs at least 3 pairs".into()));
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// `U_x`: pairs with x > y, ties counted one half.
    pub u: f64,
    pub z: f64,
    pub p_two_tailed: f64,
}

/// Mann–Whitney U with tie-corrected variance and a continuity-corrected
/// normal approximation for the two-tailed p-value.
pub fn mann_whitney_u(x: &[f64], y: &[f64]) -> Result<MannWhitney> {
    let (n1, n2) = (x.len(), y.len());
    if n1 < 2 || n2 < 2 {
        return Err(Error::InvalidArgument("Mann-Whitney needs at least 2 samples per group".into()));
    }
    let all: Vec<f64> = x.iter().chain(y).copied().collect();
    let ranks = average_ranks(&all);
    let r1: f64 = ranks[..n1].iter().sum();
    let (n1f, n2f) = (n1 as f64, n2 as f64);
    let u = r1 - n1f * (n1f + 1.0) / 2.0;
    let n = n1f + n2f;

    let mut sorted = all.clone();
    sorted.sort_by(f64::total_cmp);
    let mut tie_sum = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_sum += t * t * t - t;
        i = j + 1;
    }
    let mean = n1f * n2f / 2.0;
    let var = n1f * n2f / 12.0 * ((n + 1.0) - tie_sum / (n * (n - 1.0)));
    if var <= 0.0 {
        return Ok(MannWhitney { u, z: 0.0, p_two_tailed: 1.0 });
    }
    let z = ((u - mean).abs() - 0.5).max(0.0) / var.sqrt();
    Ok(MannWhitney { u, z, p_two_tailed: (2.0 * normal_sf(z)).min(1.0) })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairedT {
    pub t: f64,
    pub df: f64,
    pub p_two_tailed: f64,
}

/// Paired t-test on `d = y − x`.
pub fn paired_t(x: &[f64], y: &[f64]) -> Result<PairedT> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(Error::InvalidArgument("paired t needs at least 2 pairs".into()));
    }
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| b - a).collect();
    let (mean, sd) = mean_sd(&d);
    if sd == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let n = d.len() as f64;
    let t = mean / (sd / n.sqrt());
    let df = n - 1.0;
    Ok(PairedT { t, df, p_two_tailed: student_t_two_tailed(t, df) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bland_altman_examples() {
        let x = [1.0, 2.0, 5.0];
        assert_eq!(bland_altman(&x, &x).unwrap(), (0.0, 0.0));
        let y: Vec<f64> = x.iter().map(|v| v + 3.0).collect();
        assert_eq!(bland_altman(&x, &y).unwrap(), (3.0, 0.0));
        let (m, s) = bland_altman(&[0.0, 0.0], &[-1.0, 1.0]).unwrap();
        assert_eq!(m, 0.0);
        assert!((s - 2f64.sqrt()).abs() < 1e-15);
        assert!(matches!(bland_altman(&[1.0], &[1.0, 2.0]), Err(Error::LengthMismatch(1, 2))));
    }

    #[test]
    fn spearman_monotone() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert!((spearman(&x, &[2.0, 4.0, 8.0, 16.0, 32.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((spearman(&x, &[5.0, 3.0, 1.0, 0.0, -9.0]).unwrap() + 1.0).abs() < 1e-12);
        assert!(matches!(spearman(&x, &[1.0; 5]), Err(Error::ZeroVariance)));
    }

    #[test]
    fn spearman_invariant_under_monotone_transform() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let x: Vec<f64> = (0..12).map(|_| rng.random_range(0..6) as f64).collect();
            let y: Vec<f64> = (0..12).map(|_| rng.random_range(-3.0..3.0)).collect();
            let Ok(r) = spearman(&x, &y) else { continue };
            let yt: Vec<f64> = y.iter().map(|v| v.exp() * 3.0 + 1.0).collect();
            assert!((spearman(&x, &yt).unwrap() - r).abs() < 1e-12);
        }
    }

    #[test]
    fn mann_whitney_examples() {
        let r = mann_whitney_u(&[1.0, 2.0, 3.0], &[10.0, 11.0, 12.0]).unwrap();
        assert_eq!(r.u, 0.0);
        let same = mann_whitney_u(&[4.0, 5.0, 6.0, 7.0], &[4.0, 5.0, 6.0, 7.0]).unwrap();
        assert_eq!(same.u, 8.0);
        assert_eq!(same.p_two_tailed, 1.0);
        // scipy.stats.mannwhitneyu(..., method="asymptotic", use_continuity=True)
        let r = mann_whitney_u(&[1.0, 2.0, 3.0, 4.0, 5.0], &[3.0, 4.0, 6.0, 7.0, 8.0, 9.0]).unwrap();
        assert_eq!(r.u, 4.0);
        assert!((r.p_two_tailed - 0.054129028579733174).abs() < 1e-12);
    }

    #[test]
    fn paired_t_examples() {
        let x = [1.0, 2.0, 3.0];
        assert!(matches!(paired_t(&x, &x), Err(Error::ZeroVariance)));
        assert!(matches!(paired_t(&[0.0; 4], &[1.0; 4]), Err(Error::ZeroVariance)));
        let r = paired_t(&[0.0; 5], &[2.0, -1.0, 3.0, 0.0, 1.0]).unwrap();
        assert!((r.t - 2f64.sqrt()).abs() < 1e-14);
        // mpmath betainc(2, 1/2, 0, 4/(4+t²)) at 40 digits
        assert!((r.p_two_tailed - 0.230_199_641_080_498_98).abs() < 1e-14);
    }
}
