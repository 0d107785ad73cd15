//! Split-wise label-permutation test of the detection AUC.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{fit_samples, slice_samples, DetectConfig, SliceSample};
use super::roc::roc_curve;
use super::split::stratified_split;
use crate::case::LabeledCase;
use crate::error::{Error, Result};
use crate::volcore::Image2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PermutationResult {
    pub n: usize,
    pub auc_unpermuted: Vec<f64>,
    pub auc_permuted: Vec<f64>,
    /// `(1/N) Σ I(AUCᵖᵢ ≥ AUCⁿᵖᵢ)`.
    pub p: f64,
}

impl PermutationResult {
    pub fn from_aucs(auc_unpermuted: Vec<f64>, auc_permuted: Vec<f64>) -> Result<Self> {
        if auc_unpermuted.len() != auc_permuted.len() {
            return Err(Error::LengthMismatch(auc_unpermuted.len(), auc_permuted.len()));
        }
        if auc_unpermuted.is_empty() {
            return Err(Error::InvalidArgument("need at least one split".into()));
        }
        let p = permutation_p(&auc_unpermuted, &auc_permuted);
        Ok(Self { n: auc_unpermuted.len(), auc_unpermuted, auc_permuted, p })
    }

    pub fn recompute_p(&self) -> f64 {
        permutation_p(&self.auc_unpermuted, &self.auc_permuted)
    }
}

pub fn permutation_p(unpermuted: &[f64], permuted: &[f64]) -> f64 {
    let hits = unpermuted.iter().zip(permuted).filter(|(u, p)| p >= u).count();
    hits as f64 / unpermuted.len() as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitOutcome {
    pub split: usize,
    pub train_cases: Vec<usize>,
    pub validation_cases: Vec<usize>,
    pub test_cases: Vec<usize>,
    pub auc_unpermuted: f64,
    pub auc_permuted: f64,
}

fn split_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_add(0x0123_4567_89ab_cdef_u64.wrapping_mul(i as u64 + 1))
}

fn test_auc(model: &super::model::DetectionModel, test: &[&SliceSample]) -> Result<f64> {
    let scores: Vec<f64> = test.iter().map(|s| model.score_patch(&s.patch)).collect::<Result<_>>()?;
    let labels: Vec<bool> = test.iter().map(|s| s.diseased).collect();
    Ok(roc_curve(&scores, &labels)?.auc)
}

/// For each of `n` stratified case-level splits: fit on true labels and on
/// labels shuffled across training and validation slices (same seeds
/// otherwise), and score both on the untouched test slices.
pub fn permutation_runs(cases: &[LabeledCase], n: usize, cfg: &DetectConfig, seed: u64) -> Result<Vec<SplitOutcome>> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one split".into()));
    }
    let samples = slice_samples(cases)?;
    let strata: Vec<bool> = cases.iter().map(|c| c.is_diseased()).collect();
    let splits: Vec<usize> = (0..n).collect();
    crate::par::map(&splits, |&i| {
        let s = split_seed(seed, i);
        let split = stratified_split(&strata, s)?;
        let pick = |set: &[usize]| samples.iter().filter(|x| set.contains(&x.case)).collect::<Vec<_>>();
        let fit_set: Vec<usize> = split.train.iter().chain(&split.validation).copied().collect();
        let fit = pick(&fit_set);
        let test = pick(&split.test);
        let patches: Vec<&Image2> = fit.iter().map(|x| &x.patch).collect();
        let labels: Vec<bool> = fit.iter().map(|x| x.diseased).collect();
        let mut shuffled = labels.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(s ^ 0x7065_726d));

        let mut model = fit_samples(&patches, &labels, cfg, s)?;
        model.meta.split = Some(i);
        let auc_unpermuted = test_auc(&model, &test)?;
        let permuted = fit_samples(&patches, &shuffled, cfg, s)?;
        let auc_permuted = test_auc(&permuted, &test)?;
        Ok(SplitOutcome {
            split: i,
            train_cases: split.train,
            validation_cases: split.validation,
            test_cases: split.test,
            auc_unpermuted,
            auc_permuted,
        })
    })
    .into_iter()
    .collect()
}

pub fn permutation_test(cases: &[LabeledCase], n: usize, cfg: &DetectConfig, seed: u64) -> Result<PermutationResult> {
    let runs = permutation_runs(cases, n, cfg, seed)?;
    PermutationResult::from_aucs(
        runs.iter().map(|r| r.auc_unpermuted).collect(),
        runs.iter().map(|r| r.auc_permuted).collect(),
    )
}
