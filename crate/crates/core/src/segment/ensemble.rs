//! Seven-member CNN ensemble that relabels the boundary band of a coarse
//! segmentation by majority vote.

use serde::{Deserialize, Serialize};

use super::coarse::boundary_region;
use super::patches::{extract_patch, sample_training_patches, PatchSet, PATCH_SIDE};
use crate::case::LabeledCase;
use crate::error::{Error, Result};
use crate::learn::{net_forward, net_train, Architecture, Dataset, NetModel, TrainConfig};
use crate::volcore::{binary_erode, Image2, Mask2, StructuringElement};

/// Anything that casts per-member scar votes on zero-padded raw patches.
pub trait PatchVoter: Sync {
    fn members(&self) -> usize;
    fn patch_side(&self) -> usize;
    /// Number of members voting "scar" for each patch.
    fn scar_votes(&self, patches: &[Vec<f64>]) -> Result<Vec<usize>>;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatchEnsemble {
    pub members: Vec<NetModel>,
    /// Mean training patch subtracted before scaling by 1/255.
    #[serde(with = "crate::vio::b64")]
    pub mean_patch: Vec<f64>,
    pub patch_side: usize,
}

impl PatchEnsemble {
    pub fn new(members: Vec<NetModel>, mean_patch: Vec<f64>, patch_side: usize) -> Result<Self> {
        let e = Self { members, mean_patch, patch_side };
        e.validate()?;
        Ok(e)
    }

    pub fn validate(&self) -> Result<()> {
        if self.members.is_empty() || self.members.len().is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!("ensemble needs an odd member count, got {}", self.members.len())));
        }
        let n = self.patch_side * self.patch_side;
        if self.mean_patch.len() != n {
            return Err(Error::LengthMismatch(self.mean_patch.len(), n));
        }
        for m in &self.members {
            m.validate()?;
            if m.input.len() != n || m.input != self.members[0].input {
                return Err(Error::Shape("ensemble members must share the patch shape".into()));
            }
        }
        Ok(())
    }

    pub fn centre(&self, patch: &[f64]) -> Vec<f64> {
        patch.iter().zip(&self.mean_patch).map(|(v, m)| (v - m) / 255.0).collect()
    }
}

impl PatchVoter for PatchEnsemble {
    fn members(&self) -> usize {
        self.members.len()
    }

    fn patch_side(&self) -> usize {
        self.patch_side
    }

    fn scar_votes(&self, patches: &[Vec<f64>]) -> Result<Vec<usize>> {
        let centred: Vec<Vec<f64>> = patches.iter().map(|p| self.centre(p)).collect();
        let mut votes = vec![0; patches.len()];
        for m in &self.members {
            for (v, p) in votes.iter_mut().zip(net_forward(m, &centred)?) {
                if p[1] > p[0] {
                    *v += 1;
                }
            }
        }
        Ok(votes)
    }
}

/// Voter with a fixed opinion, for tests and ablations.
#[derive(Clone, Copy, Debug)]
pub struct ConstantVoter {
    pub scar: bool,
    pub members: usize,
}

impl PatchVoter for ConstantVoter {
    fn members(&self) -> usize {
        self.members
    }

    fn patch_side(&self) -> usize {
        PATCH_SIDE
    }

    fn scar_votes(&self, patches: &[Vec<f64>]) -> Result<Vec<usize>> {
        Ok(vec![if self.scar { self.members } else { 0 }; patches.len()])
    }
}

/// Keeps `erode(coarse, 2)`, re-decides every band pixel inside the
/// myocardium by strict majority, and clips to the myocardium.
pub fn refine(slice: &Image2, coarse: &Mask2, myo: &Mask2, voter: &dyn PatchVoter) -> Result<Mask2> {
    let inner = binary_erode(coarse, &StructuringElement::disk(2));
    let band = boundary_region(coarse).and(myo);
    let centres: Vec<(usize, usize)> = band.iter_xy().filter(|p| p.2).map(|(x, y, _)| (x, y)).collect();
    let side = voter.patch_side();
    let patches: Vec<Vec<f64>> = centres.iter().map(|&(x, y)| extract_patch(slice, x, y, side)).collect();
    let votes = voter.scar_votes(&patches)?;
    let need = voter.members() / 2 + 1;
    let mut out = inner.and(myo);
    for ((x, y), v) in centres.into_iter().zip(votes) {
        if v >= need {
            out.set(x, y, true);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RefineConfig {
    pub arch: Architecture,
    pub train: TrainConfig,
    pub members: usize,
    pub stride: usize,
    /// Cap on patches drawn per case after balancing.
    pub max_patches_per_case: Option<usize>,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self { arch: Architecture::refinement(), train: TrainConfig::refinement(), members: 7, stride: 3, max_patches_per_case: None }
    }
}

fn capped(mut p: PatchSet, cap: Option<usize>, seed: u64) -> PatchSet {
    use rand::seq::index::sample;
    use rand::SeedableRng;
    match cap {
        Some(c) if p.len() > c => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut idx = sample(&mut rng, p.len(), c).into_vec();
            idx.sort_unstable();
            p.patches = idx.iter().map(|&i| std::mem::take(&mut p.patches[i])).collect();
            p.labels = idx.iter().map(|&i| p.labels[i]).collect();
            p.centres = idx.iter().map(|&i| p.centres[i]).collect();
            p
        }
        _ => p,
    }
}

/// Trains the members on a case-level k-fold rotation of `cases`: member k
/// never sees the cases of fold k.
pub fn train_ensemble(cases: &[LabeledCase], cfg: &RefineConfig, seed: u64) -> Result<PatchEnsemble> {
    if cfg.members == 0 || cfg.members.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("ensemble needs an odd member count, got {}", cfg.members)));
    }
    let side = cfg.arch.input_side;
    let per_case: Vec<PatchSet> = cases
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let s = seed.wrapping_add(1000 + i as u64);
            sample_training_patches(c, cfg.stride, side, s).map(|p| capped(p, cfg.max_patches_per_case, s))
        })
        .collect::<Result<_>>()?;
    let total: usize = per_case.iter().map(|p| p.len()).sum();
    if total == 0 {
        return Err(Error::EmptyClass);
    }
    let mut mean = vec![0.0; side * side];
    for p in per_case.iter().flat_map(|s| &s.patches) {
        mean.iter_mut().zip(p).for_each(|(m, v)| *m += v);
    }
    mean.iter_mut().for_each(|m| *m /= total as f64);
    let centre = |p: &Vec<f64>| p.iter().zip(&mean).map(|(v, m)| (v - m) / 255.0).collect::<Vec<f64>>();

    let k = cfg.members;
    let members: Vec<usize> = (0..k).collect();
    let nets = crate::par::map(&members, |&m| {
        let use_all = cases.len() < 2 || k == 1;
        let (mut inputs, mut labels) = (Vec::new(), Vec::new());
        for (ci, p) in per_case.iter().enumerate() {
            if !use_all && ci % k == m && cases.len() >= k {
                continue;
            }
            if !use_all && cases.len() < k && ci == m % cases.len() {
                continue;
            }
            inputs.extend(p.patches.iter().map(centre));
            labels.extend(&p.labels);
        }
        let data = Dataset::new(inputs, labels)?;
        let train = TrainConfig { seed: seed.wrapping_mul(31).wrapping_add(m as u64), ..cfg.train.clone() };
        net_train(&data, &cfg.arch, &train).map(|t| t.model)
    });
    let members = nets.into_iter().collect::<Result<Vec<_>>>()?;
    PatchEnsemble::new(members, mean, side)
}
