use crate::error::{Error, Result};

/// 256-bin histogram over intensity levels 0..=255.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Histogram {
    counts: [u64; 256],
}

/// Bin of a normalised intensity: rounded and clamped to 0..=255.
#[inline]
pub fn intensity_level(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

impl Default for Histogram {
    fn default() -> Self {
        Self { counts: [0; 256] }
    }
}

impl Histogram {
    pub fn from_counts(counts: [u64; 256]) -> Self {
        Self { counts }
    }

    pub fn from_values<I: IntoIterator<Item = f64>>(values: I) -> Self {
        let mut h = Self::default();
        for v in values {
            h.counts[intensity_level(v) as usize] += 1;
        }
        h
    }

    pub fn counts(&self) -> &[u64; 256] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn occupied_levels(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }
}

/// Otsu's threshold: the level `t` maximising the between-class variance
/// `ω₀ω₁(μ₀ − μ₁)²` of the split `{≤ t} | {> t}`. Ties go to the smaller `t`.
pub fn otsu_threshold(hist: &Histogram) -> Result<u8> {
    if hist.total() < 2 || hist.occupied_levels() < 2 {
        return Err(Error::DegenerateHistogram);
    }
    let total = hist.total() as f64;
    let sum_all: f64 = hist.counts.iter().enumerate().map(|(i, &c)| i as f64 * c as f64).sum();
    let (mut n0, mut s0) = (0.0f64, 0.0f64);
    let mut best = (0u8, f64::NEG_INFINITY);
    for t in 0..255usize {
        let c = hist.counts[t] as f64;
        n0 += c;
        s0 += t as f64 * c;
        let n1 = total - n0;
        let var = if n0 == 0.0 || n1 == 0.0 {
            0.0
        } else {
            let (w0, w1) = (n0 / total, n1 / total);
            let (m0, m1) = (s0 / n0, (sum_all - s0) / n1);
            w0 * w1 * (m0 - m1) * (m0 - m1)
        };
        if var > best.1 {
            best = (t as u8, var);
        }
    }
    Ok(best.0)
}
