//! Whole-case cascade: detection gating, coarse segmentation, refinement,
//! MVO inclusion and clinical markers.

use serde::{Deserialize, Serialize};

use super::coarse::coarse_segment;
use super::ensemble::{refine, PatchVoter};
use super::mvo::include_mvo;
use crate::case::LabeledCase;
use crate::detect::{detect_predict, DetectionModel};
use crate::error::Result;
use crate::metrics::scar_volume_cm3;
use crate::volcore::{Grid2, Mask, Mask2};

/// Which slices enter the segmentation cascade.
#[derive(Clone, Copy, Debug)]
pub enum Gate<'a> {
    /// Every slice with myocardium.
    All,
    Model(&'a DetectionModel),
    /// Externally supplied per-slice decisions (e.g. a perfect detector).
    Labels(&'a [bool]),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentOptions {
    pub refine: bool,
    pub mvo: bool,
}

impl Default for SegmentOptions {
    fn default() -> Self {
        Self { refine: true, mvo: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceWarning {
    pub slice: usize,
    pub message: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Markers {
    pub scar_volume_cm3: f64,
    pub myocardium_volume_cm3: f64,
    pub percent_infarct: f64,
}

impl Markers {
    pub fn from_masks(final_mask: &Mask, myo: &Mask) -> Self {
        let scar = scar_volume_cm3(final_mask);
        let myo_v = scar_volume_cm3(myo);
        let pct = if myo_v > 0.0 { 100.0 * scar / myo_v } else { 0.0 };
        Self { scar_volume_cm3: scar, myocardium_volume_cm3: myo_v, percent_infarct: pct }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SegmentationResult {
    pub case_id: String,
    /// Slices that entered the cascade.
    pub gated: Vec<bool>,
    pub coarse: Mask,
    /// Hyper-enhanced scar after refinement.
    pub hyper: Mask,
    pub mvo: Mask,
    /// `hyper ∪ mvo`.
    pub final_mask: Mask,
    pub markers: Markers,
    pub warnings: Vec<SliceWarning>,
}

struct SliceOut {
    coarse: Mask2,
    hyper: Mask2,
    mvo: Mask2,
    warning: Option<String>,
}

fn segment_slice(case: &LabeledCase, z: usize, voter: Option<&dyn PatchVoter>, opts: SegmentOptions) -> SliceOut {
    let img = case.volume.slice(z);
    let myo = case.myocardium.slice(z);
    let empty = Grid2::new(img.width(), img.height(), false);
    let c = coarse_segment(&img, &myo);
    let mut warning = c.warning.clone();
    let hyper = match (opts.refine, voter) {
        (true, Some(v)) if c.mask.any() => match refine(&img, &c.mask, &myo, v) {
            Ok(m) => m,
            Err(e) => {
                warning = Some(format!("refinement failed: {e}"));
                c.mask.clone()
            }
        },
        _ => c.mask.clone(),
    };
    let mvo = if opts.mvo { include_mvo(&hyper, &case.endocardium.slice(z), &myo).1 } else { empty };
    SliceOut { coarse: c.mask, hyper, mvo, warning }
}

/// Runs the cascade on a preprocessed case. Per-slice problems leave that
/// slice empty and are reported in `warnings`; they never abort the case.
pub fn segment_case(
    case: &LabeledCase,
    gate: Gate<'_>,
    voter: Option<&dyn PatchVoter>,
    opts: SegmentOptions,
) -> Result<SegmentationResult> {
    case.validate()?;
    let nz = case.nz();
    let mut warnings = Vec::new();
    let gated: Vec<bool> = match gate {
        Gate::All => vec![true; nz],
        Gate::Labels(l) => (0..nz).map(|z| l.get(z).copied().unwrap_or(false)).collect(),
        Gate::Model(m) => match detect_predict(m, case) {
            Ok(p) => p.iter().map(|s| s.diseased).collect(),
            Err(e) => {
                warnings.push(SliceWarning { slice: 0, message: format!("detection failed, no slice gated: {e}") });
                vec![false; nz]
            }
        },
    };
    let gated: Vec<bool> = gated.iter().enumerate().map(|(z, &g)| g && case.myocardium.slice(z).any()).collect();
    let outs = crate::par::map_range(nz, |z| gated[z].then(|| segment_slice(case, z, voter, opts)));

    let mut coarse = Mask::empty_like(&case.volume);
    let mut hyper = coarse.clone();
    let mut mvo = coarse.clone();
    for (z, o) in outs.into_iter().enumerate() {
        if let Some(o) = o {
            coarse.set_slice(z, &o.coarse);
            hyper.set_slice(z, &o.hyper);
            mvo.set_slice(z, &o.mvo);
            if let Some(message) = o.warning {
                warnings.push(SliceWarning { slice: z, message });
            }
        }
    }
    let final_mask = hyper.or(&mvo);
    Ok(SegmentationResult {
        case_id: case.case_id.clone(),
        gated,
        markers: Markers::from_masks(&final_mask, &case.myocardium),
        coarse,
        hyper,
        mvo,
        final_mask,
        warnings,
    })
}
