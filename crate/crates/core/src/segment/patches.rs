//! Boundary-patch extraction and ground-truth patch sampling.

use serde::{Deserialize, Serialize};

use crate::case::LabeledCase;
use crate::error::{Error, Result};
use crate::learn::balance_classes;
use crate::volcore::{binary_dilate, binary_erode, Image2, Mask2, StructuringElement};

pub const PATCH_SIDE: usize = 49;

/// Square patch centred on `(cx, cy)`, zero outside the slice, x-fastest.
pub fn extract_patch(slice: &Image2, cx: usize, cy: usize, side: usize) -> Vec<f64> {
    let half = (side / 2) as isize;
    let mut out = Vec::with_capacity(side * side);
    for j in 0..side as isize {
        for i in 0..side as isize {
            out.push(slice.get_signed(cx as isize - half + i, cy as isize - half + j).unwrap_or(0.0));
        }
    }
    out
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PatchSet {
    pub side: usize,
    pub patches: Vec<Vec<f64>>,
    /// 1 for hyper-enhanced scar, 0 otherwise.
    pub labels: Vec<usize>,
    /// `(z, x, y)` of each centre.
    pub centres: Vec<(usize, usize, usize)>,
}

impl PatchSet {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn extend(&mut self, other: PatchSet) {
        self.side = other.side;
        self.patches.extend(other.patches);
        self.labels.extend(other.labels);
        self.centres.extend(other.centres);
    }
}

/// Candidate centres of one slice on the stride lattice: scar from the inner
/// 5-pixel band of the ground truth (the whole mask when erosion empties it),
/// healthy from the outer 5-pixel band within the myocardium.
pub fn patch_centres(gt: &Mask2, myo: &Mask2, stride: usize) -> (Vec<(usize, usize)>, Vec<(usize, usize)>) {
    let d5 = StructuringElement::disk(5);
    let eroded = binary_erode(gt, &d5);
    let scar_band = if eroded.any() { gt.minus(&eroded) } else { gt.clone() };
    let healthy_band = binary_dilate(gt, &d5).minus(gt).and(myo);
    let on_lattice = |m: &Mask2| {
        m.iter_xy().filter(|&(x, y, v)| v && x % stride == 0 && y % stride == 0).map(|(x, y, _)| (x, y)).collect()
    };
    (on_lattice(&scar_band), on_lattice(&healthy_band))
}

/// Balanced patches from every slice of `case` carrying ground-truth scar.
pub fn sample_training_patches(case: &LabeledCase, stride: usize, side: usize, seed: u64) -> Result<PatchSet> {
    let gt = case.gt_scar.as_ref().ok_or(Error::NoGroundTruth)?;
    if stride == 0 {
        return Err(Error::InvalidArgument("stride must be positive".into()));
    }
    let mut all = PatchSet { side, ..PatchSet::default() };
    for z in 0..case.nz() {
        let g = gt.slice(z);
        if !g.any() {
            continue;
        }
        let (scar, healthy) = patch_centres(&g, &case.myocardium.slice(z), stride);
        let img = case.volume.slice(z);
        for (label, centres) in [(1usize, scar), (0, healthy)] {
            for (x, y) in centres {
                all.patches.push(extract_patch(&img, x, y, side));
                all.labels.push(label);
                all.centres.push((z, x, y));
            }
        }
    }
    if all.is_empty() || !all.labels.contains(&0) || !all.labels.contains(&1) {
        return Ok(PatchSet { side, ..PatchSet::default() });
    }
    let keep = balance_classes(&all.labels, seed)?;
    Ok(PatchSet {
        side,
        patches: keep.iter().map(|&i| all.patches[i].clone()).collect(),
        labels: keep.iter().map(|&i| all.labels[i]).collect(),
        centres: keep.iter().map(|&i| all.centres[i]).collect(),
    })
}
