use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volcore::{Mask, Volume};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SliceLabel {
    Healthy,
    Diseased,
}

impl SliceLabel {
    pub fn is_diseased(self) -> bool {
        self == SliceLabel::Diseased
    }
}

/// A volume with its aligned anatomical and ground-truth masks.
///
/// `endocardium` is the blood-pool cavity, `epicardium` the filled epicardial
/// region and `myocardium = epicardium \ endocardium`. Ground-truth scar holds
/// the hyper-enhanced tissue only; MVO is a disjoint mask.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledCase {
    pub case_id: String,
    pub volume: Volume,
    pub myocardium: Mask,
    pub endocardium: Mask,
    pub epicardium: Mask,
    pub gt_scar: Option<Mask>,
    pub gt_mvo: Option<Mask>,
    /// Expert remote-myocardium region for the n-SD baselines.
    pub remote: Option<Mask>,
    pub slice_labels: Option<Vec<SliceLabel>>,
}

impl LabeledCase {
    pub fn nz(&self) -> usize {
        self.volume.nz()
    }

    /// Checks that every mask shares the volume geometry and the label count matches.
    pub fn validate(&self) -> Result<()> {
        self.volume.check_finite()?;
        let named = [
            ("myocardium", Some(&self.myocardium)),
            ("endocardium", Some(&self.endocardium)),
            ("epicardium", Some(&self.epicardium)),
            ("gt_scar", self.gt_scar.as_ref()),
            ("gt_mvo", self.gt_mvo.as_ref()),
            ("remote", self.remote.as_ref()),
        ];
        for (name, m) in named {
            if let Some(m) = m {
                if !m.same_geometry(&self.volume) {
                    return Err(Error::Shape(format!("{name} mask geometry differs from volume")));
                }
            }
        }
        if let Some(labels) = &self.slice_labels {
            if labels.len() != self.nz() {
                return Err(Error::LengthMismatch(labels.len(), self.nz()));
            }
        }
        Ok(())
    }

    /// Ground-truth infarct (hyper-enhanced scar plus MVO), if annotated.
    pub fn gt_infarct(&self) -> Option<Mask> {
        match (&self.gt_scar, &self.gt_mvo) {
            (Some(s), Some(m)) => Some(s.or(m)),
            (Some(s), None) => Some(s.clone()),
            (None, Some(m)) => Some(m.clone()),
            (None, None) => None,
        }
    }

    /// Per-slice labels, falling back to "diseased iff any ground-truth infarct".
    pub fn labels(&self) -> Vec<SliceLabel> {
        if let Some(l) = &self.slice_labels {
            return l.clone();
        }
        let gt = self.gt_infarct();
        (0..self.nz())
            .map(|z| match &gt {
                Some(m) if m.slice(z).any() => SliceLabel::Diseased,
                _ => SliceLabel::Healthy,
            })
            .collect()
    }

    pub fn is_diseased(&self) -> bool {
        self.labels().iter().any(|l| l.is_diseased())
    }
}
