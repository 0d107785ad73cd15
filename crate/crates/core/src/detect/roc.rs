//! ROC sweep, trapezoidal AUC and sensitivity-targeted operating points.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    /// Scores `>= threshold` are called positive.
    pub threshold: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// From (0, 0) at threshold +∞ to (1, 1) at the lowest score.
    pub points: Vec<RocPoint>,
    pub auc: f64,
    pub positives: usize,
    pub negatives: usize,
}

/// Sweeps every distinct score as a threshold. The area is accumulated in
/// integer counts, so it equals `(concordant + ½·tied) / (n₊·n₋)` exactly.
pub fn roc_curve(scores: &[f64], labels: &[bool]) -> Result<RocCurve> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch(scores.len(), labels.len()));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidArgument("NaN score".into()));
    }
    let p = labels.iter().filter(|&&l| l).count();
    let n = labels.len() - p;
    if p == 0 || n == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![RocPoint { fpr: 0.0, tpr: 0.0, threshold: f64::INFINITY }];
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut twice_area: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        let (tp0, fp0) = (tp, fp);
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        twice_area += u128::from(fp - fp0) * u128::from(tp + tp0);
        points.push(RocPoint { fpr: fp as f64 / n as f64, tpr: tp as f64 / p as f64, threshold: s });
    }
    let auc = twice_area as f64 / (2 * p as u128 * n as u128) as f64;
    Ok(RocCurve { points, auc, positives: p, negatives: n })
}

/// `(concordant + ½·tied) / (n₊·n₋)` by direct pair counting.
pub fn auc_pair_count(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let pos: Vec<f64> = scores.iter().zip(labels).filter(|(_, &l)| l).map(|(s, _)| *s).collect();
    let neg: Vec<f64> = scores.iter().zip(labels).filter(|(_, &l)| !l).map(|(s, _)| *s).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::SingleClass);
    }
    let mut twice: u128 = 0;
    for a in &pos {
        for b in &neg {
            twice += if a > b {
                2
            } else if a == b {
                1
            } else {
                0
            };
        }
    }
    Ok(twice as f64 / (2 * pos.len() as u128 * neg.len() as u128) as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub threshold: f64,
    pub sensitivity: f64,
    pub specificity: f64,
}

/// Highest threshold whose sensitivity reaches `target`, i.e. the most
/// specific point meeting the sensitivity requirement.
pub fn pick_operating_point(roc: &RocCurve, target: f64) -> Result<OperatingPoint> {
    if !(target > 0.0 && target <= 1.0) {
        return Err(Error::InvalidArgument(format!("target sensitivity {target} outside (0, 1]")));
    }
    roc.points
        .iter()
        .find(|pt| pt.tpr >= target)
        .map(|pt| OperatingPoint { threshold: pt.threshold, sensitivity: pt.tpr, specificity: 1.0 - pt.fpr })
        .ok_or(Error::Unachievable(target))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let r = roc_curve(&[0.1, 0.2, 0.8, 0.9], &[false, false, true, true]).unwrap();
        assert_eq!(r.auc, 1.0);
        assert_eq!(r.points.first().map(|p| (p.fpr, p.tpr)), Some((0.0, 0.0)));
        assert_eq!(r.points.last().map(|p| (p.fpr, p.tpr)), Some((1.0, 1.0)));
        assert_eq!(roc_curve(&[0.3; 6], &[true, false, true, false, false, true]).unwrap().auc, 0.5);
        assert!(matches!(roc_curve(&[1.0, 2.0], &[true, true]), Err(Error::SingleClass)));

        let op = pick_operating_point(&r, 1.0).unwrap();
        assert_eq!(op.threshold, 0.8);
        let op = pick_operating_point(&r, 0.9).unwrap();
        assert_eq!((op.sensitivity, op.specificity), (1.0, 1.0));
        let r = roc_curve(&[0.1, 0.5, 0.4, 0.9, 0.7], &[false, true, false, true, true]).unwrap();
        let op = pick_operating_point(&r, 1.0).unwrap();
        assert_eq!((op.threshold, op.specificity), (0.5, 1.0));
    }

    proptest! {
        #[test]
        fn trapezoid_equals_pair_count(data in proptest::collection::vec((0i32..6, any::<bool>()), 2..40)) {
            let scores: Vec<f64> = data.iter().map(|(s, _)| *s as f64).collect();
            let labels: Vec<bool> = data.iter().map(|(_, l)| *l).collect();
            prop_assume!(labels.contains(&true) && labels.contains(&false));
            let r = roc_curve(&scores, &labels).unwrap();
            prop_assert_eq!(r.auc, auc_pair_count(&scores, &labels).unwrap());
            for w in r.points.windows(2) {
                prop_assert!(w[1].fpr >= w[0].fpr && w[1].tpr >= w[0].tpr && w[1].threshold < w[0].threshold);
            }
        }
    }
}
