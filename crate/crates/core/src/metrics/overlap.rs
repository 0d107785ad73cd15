use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volcore::{Mask, Mask2};

fn overlap_counts(a: &[bool], b: &[bool]) -> (usize, usize, usize) {
    let mut inter = 0;
    let (mut na, mut nb) = (0, 0);
    for (&x, &y) in a.iter().zip(b) {
        na += x as usize;
        nb += y as usize;
        inter += (x && y) as usize;
    }
    (inter, na, nb)
}

fn dice_from(inter: usize, na: usize, nb: usize) -> f64 {
    if na + nb == 0 {
        1.0
    } else {
        2.0 * inter as f64 / (na + nb) as f64
    }
}

/// `2|A∩B| / (|A| + |B|)`, defined as 1 when both masks are empty.
pub fn dice(a: &Mask, b: &Mask) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(Error::Alignment);
    }
    let (i, na, nb) = overlap_counts(a.data(), b.data());
    Ok(dice_from(i, na, nb))
}

pub fn dice2(a: &Mask2, b: &Mask2) -> Result<f64> {
    if !a.same_shape(b) {
        return Err(Error::Alignment);
    }
    let (i, na, nb) = overlap_counts(a.data(), b.data());
    Ok(dice_from(i, na, nb))
}

/// Volume of the set voxels in cm³.
pub fn scar_volume_cm3(mask: &Mask) -> f64 {
    mask.count() as f64 * mask.voxel_volume() / 1000.0
}

/// `100 · Vol_scar / Vol_myocardium`.
pub fn percent_infarct(scar: &Mask, myo: &Mask) -> Result<f64> {
    if scar.dims() != myo.dims() {
        return Err(Error::Alignment);
    }
    let m = myo.count();
    if m == 0 {
        return Err(Error::EmptyDenominator("myocardium volume"));
    }
    Ok(100.0 * scar_volume_cm3(scar) / scar_volume_cm3(myo))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn from_predictions(pred: &[bool], truth: &[bool]) -> Self {
        let mut c = Self::default();
        for (&p, &t) in pred.iter().zip(truth) {
            match (p, t) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// (sensitivity, specificity, accuracy).
pub fn sens_spec_acc(c: &ConfusionCounts) -> Result<(f64, f64, f64)> {
    if c.tp + c.fn_ == 0 {
        return Err(Error::EmptyDenominator("no positive samples"));
    }
    if c.tn + c.fp == 0 {
        return Err(Error::EmptyDenominator("no negative samples"));
    }
    let se = c.tp as f64 / (c.tp + c.fn_) as f64;
    let sp = c.tn as f64 / (c.tn + c.fp) as f64;
    let acc = (c.tp + c.tn) as f64 / c.total() as f64;
    Ok((se, sp, acc))
}

/// `|pred ∩ gt_mvo| / |gt_mvo|`.
pub fn mvo_sensitivity(pred: &Mask, gt_mvo: &Mask) -> Result<f64> {
    if pred.dims() != gt_mvo.dims() {
        return Err(Error::Alignment);
    }
    let (i, _, n) = overlap_counts(pred.data(), gt_mvo.data());
    if n == 0 {
        return Err(Error::EmptyDenominator("empty MVO ground truth"));
    }
    Ok(i as f64 / n as f64)
}
