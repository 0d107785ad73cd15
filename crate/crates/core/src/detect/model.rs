//! Slice classifier: CNN features, PCA projection and a linear margin
//! classifier on the whitened projection.

use serde::{Deserialize, Serialize};

use crate::case::LabeledCase;
use crate::error::{Error, Result};
use crate::learn::{
    balance_classes, margin_train, net_train, pca_fit, pca_project, Architecture, Dataset, MarginModel, NetModel,
    PcaModel, TrainConfig,
};
use crate::volcore::{Grid2, Image2};

/// Side of the centroid-centred crop fed to the feature network.
pub const DETECTION_SIDE: usize = 89;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectConfig {
    pub arch: Architecture,
    pub train: TrainConfig,
    /// Variance share kept by PCA.
    pub var_frac: f64,
    pub margin_lambda: f64,
    pub margin_epochs: usize,
}

impl Default for DetectConfig {
    fn default() -> Self {
        Self {
            arch: Architecture::detection(),
            train: TrainConfig::detection(),
            var_frac: 0.95,
            margin_lambda: 1e-2,
            margin_epochs: 200,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DetectMeta {
    pub seed: u64,
    pub split: Option<usize>,
    pub training_slices: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionModel {
    pub net: NetModel,
    pub pca: PcaModel,
    pub margin: MarginModel,
    /// Scores `>= threshold` are called diseased.
    pub threshold: f64,
    pub meta: DetectMeta,
}

impl DetectionModel {
    pub fn validate(&self) -> Result<()> {
        self.net.validate()?;
        let feat = self.net.features(&vec![0.0; self.net.input.len()])?.len();
        if feat != self.pca.dim() || self.margin.w.len() != self.pca.k() {
            return Err(Error::Shape("detection model stages disagree on dimensions".into()));
        }
        Ok(())
    }

    /// Margin decision value of one crop (intensities on the 0–255 scale).
    pub fn score_patch(&self, patch: &Image2) -> Result<f64> {
        let x: Vec<f64> = patch.data().iter().map(|v| v / 255.0).collect();
        let f = self.net.features(&x)?;
        Ok(self.margin.decide(&whiten(&self.pca, &f)?))
    }
}

fn whiten(pca: &PcaModel, f: &[f64]) -> Result<Vec<f64>> {
    let p = pca_project(pca, f)?;
    Ok(p.iter().zip(&pca.variances).map(|(v, s)| if *s > 0.0 { v / s.sqrt() } else { 0.0 }).collect())
}

/// 89×89 crop centred on the rounded epicardial centroid, zero outside the
/// image and outside the myocardium.
pub fn extract_detection_input(case: &LabeledCase, z: usize) -> Result<Image2> {
    let epi = case.epicardium.slice(z);
    let (cx, cy) = epi.centroid().ok_or(Error::EmptyMask("epicardium"))?;
    let myo = case.myocardium.slice(z);
    let img = case.volume.slice(z);
    let half = (DETECTION_SIDE / 2) as isize;
    let (ox, oy) = (cx.round() as isize - half, cy.round() as isize - half);
    Ok(Grid2::from_fn(DETECTION_SIDE, DETECTION_SIDE, |i, j| {
        let (x, y) = (ox + i as isize, oy + j as isize);
        match myo.get_signed(x, y) {
            Some(true) => img.get(x as usize, y as usize),
            _ => 0.0,
        }
    }))
}

/// One classifiable slice.
#[derive(Clone, Debug, PartialEq)]
pub struct SliceSample {
    pub case: usize,
    pub z: usize,
    pub patch: Image2,
    pub diseased: bool,
}

/// Crops of every slice with a non-empty epicardium.
pub fn slice_samples(cases: &[LabeledCase]) -> Result<Vec<SliceSample>> {
    let mut out = Vec::new();
    for (ci, c) in cases.iter().enumerate() {
        let labels = c.labels();
        for (z, label) in labels.iter().enumerate() {
            if !c.epicardium.slice(z).any() {
                continue;
            }
            out.push(SliceSample { case: ci, z, patch: extract_detection_input(c, z)?, diseased: label.is_diseased() });
        }
    }
    Ok(out)
}

fn scaled(p: &Image2) -> Vec<f64> {
    p.data().iter().map(|v| v / 255.0).collect()
}

/// Trains the three stages on `(patch, label)` pairs.
pub fn fit_samples(patches: &[&Image2], labels: &[bool], cfg: &DetectConfig, seed: u64) -> Result<DetectionModel> {
    if patches.len() != labels.len() {
        return Err(Error::LengthMismatch(patches.len(), labels.len()));
    }
    if !(labels.contains(&true) && labels.contains(&false)) {
        return Err(Error::SingleClass);
    }
    let ints: Vec<usize> = labels.iter().map(|&l| usize::from(l)).collect();
    let keep = balance_classes(&ints, seed)?;
    let inputs: Vec<Vec<f64>> = patches.iter().map(|p| scaled(p)).collect();
    let data = Dataset::new(inputs.clone(), ints)?;
    let train_cfg = TrainConfig { seed, ..cfg.train.clone() };
    let net = net_train(&data.subset(&keep), &cfg.arch, &train_cfg)?.model;

    let feats: Vec<Vec<f64>> = crate::par::map(&inputs, |x| net.features(x)).into_iter().collect::<Result<_>>()?;
    let pca = pca_fit(&feats, cfg.var_frac)?;
    let proj: Vec<Vec<f64>> = feats.iter().map(|f| whiten(&pca, f)).collect::<Result<_>>()?;
    let y: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { -1.0 }).collect();
    let margin = margin_train(&proj, &y, cfg.margin_lambda, cfg.margin_epochs, seed)?.model;
    Ok(DetectionModel {
        net,
        pca,
        margin,
        threshold: 0.0,
        meta: DetectMeta { seed, split: None, training_slices: labels.len() },
    })
}

pub fn detect_fit(cases: &[LabeledCase], cfg: &DetectConfig, seed: u64) -> Result<DetectionModel> {
    let samples = slice_samples(cases)?;
    let patches: Vec<&Image2> = samples.iter().map(|s| &s.patch).collect();
    let labels: Vec<bool> = samples.iter().map(|s| s.diseased).collect();
    fit_samples(&patches, &labels, cfg, seed)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlicePrediction {
    pub score: f64,
    pub diseased: bool,
}

/// Scores every slice; slices without epicardium score −∞ (healthy).
pub fn detect_predict(model: &DetectionModel, case: &LabeledCase) -> Result<Vec<SlicePrediction>> {
    let zs: Vec<usize> = (0..case.nz()).collect();
    crate::par::map(&zs, |&z| {
        let score = if case.epicardium.slice(z).any() {
            model.score_patch(&extract_detection_input(case, z)?)?
        } else {
            f64::NEG_INFINITY
        };
        Ok(SlicePrediction { score, diseased: score >= model.threshold })
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantom::{generate_case, PhantomSpec};

    #[test]
    fn crop_is_centred_on_ring() {
        let spec = PhantomSpec { dims: [100, 100, 1], center_jitter_mm: 0.0, center_mm: Some([62.5, 62.5]), ..PhantomSpec::healthy() };
        let c = generate_case(&spec, 0).unwrap();
        let (cx, cy) = c.epicardium.slice(0).centroid().unwrap();
        assert!((cx - 50.0).abs() <= 0.5 && (cy - 50.0).abs() <= 0.5);
        let p = extract_detection_input(&c, 0).unwrap();
        assert_eq!((p.width(), p.height()), (89, 89));
        // the myocardium is symmetric about the crop centre
        assert!(p.get(44, 44) == 0.0 && p.get(44 + 20, 44) > 0.0 || p.get(44 + 20, 44) == 0.0);
    }

    #[test]
    fn corner_mask_is_padded() {
        let spec = PhantomSpec {
            dims: [64, 64, 1],
            center_mm: Some([10.0, 10.0]),
            inner_radius_mm: 4.0,
            outer_radius_mm: 8.0,
            center_jitter_mm: 0.0,
            ..PhantomSpec::healthy()
        };
        let c = generate_case(&spec, 0).unwrap();
        let p = extract_detection_input(&c, 0).unwrap();
        assert_eq!((p.width(), p.height()), (89, 89));
        assert_eq!(p.get(0, 0), 0.0);
        let mut zero = c.clone();
        zero.volume.data_mut().iter_mut().for_each(|v| *v = 0.0);
        assert!(extract_detection_input(&zero, 0).unwrap().data().iter().all(|&v| v == 0.0));
        let mut empty = c.clone();
        empty.epicardium.data_mut().iter_mut().for_each(|v| *v = false);
        assert!(matches!(extract_detection_input(&empty, 0), Err(Error::EmptyMask(_))));
    }

    #[test]
    fn single_class_is_rejected() {
        let spec = PhantomSpec { dims: [96, 96, 2], ..PhantomSpec::healthy() };
        let cases = vec![generate_case(&spec, 1).unwrap()];
        assert!(matches!(detect_fit(&cases, &DetectConfig::default(), 0), Err(Error::SingleClass)));
    }
}
