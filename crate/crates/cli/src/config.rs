use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use scarseg::detect::DetectConfig;
use scarseg::phantom::PhantomSpec;
use scarseg::preprocess::PreprocessConfig;
use scarseg::segment::RefineConfig;

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Pipeline {
    pub detect: bool,
    pub refine: bool,
    pub mvo: bool,
}

impl Default for Pipeline {
    fn default() -> Self {
        Self { detect: true, refine: true, mvo: true }
    }
}

/// Fixed defaults; nothing is derived from the clock.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    pub phantom: u64,
    pub detect: u64,
    pub refine: u64,
    pub splits: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Self { phantom: 1, detect: 2, refine: 3, splits: 4 }
    }
}

impl Seeds {
    pub fn all(seed: u64) -> Self {
        Self { phantom: seed, detect: seed, refine: seed, splits: seed }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhantomGen {
    pub spec: PhantomSpec,
    pub healthy: usize,
    pub diseased: usize,
    /// MVO core share for diseased cases.
    pub mvo_fraction: Option<f64>,
}

impl Default for PhantomGen {
    fn default() -> Self {
        Self { spec: PhantomSpec::default(), healthy: 5, diseased: 5, mvo_fraction: Some(0.25) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Protocol {
    /// Random 80-10-10 splits for `detect`.
    pub detect_splits: usize,
    /// Splits for `permtest`.
    pub permutations: usize,
    /// When set, `segment` trains one refinement ensemble per case-level
    /// fold and predicts each case with the ensemble that never saw it.
    pub cv_folds: Option<usize>,
}

impl Default for Protocol {
    fn default() -> Self {
        Self { detect_splits: 100, permutations: 20, cv_folds: None }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Case manifests, or directories whose `*.json` files are manifests.
    pub manifests: Vec<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub model_dir: Option<PathBuf>,
    /// Prediction directories for `evaluate`; defaults to the `segment`
    /// and `baselines` outputs.
    pub predictions: Vec<PathBuf>,
    pub preprocess: PreprocessConfig,
    /// Inputs are already preprocessed.
    pub skip_preprocess: bool,
    pub detect: DetectConfig,
    pub refine: RefineConfig,
    pub pipeline: Pipeline,
    pub seeds: Seeds,
    pub jobs: Option<usize>,
    pub phantom: PhantomGen,
    pub protocol: Protocol,
}

impl RunConfig {
    /// Parses a config file and anchors its relative paths at the file's directory.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::usage(format!("invalid config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let anchor = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.manifests.iter_mut().for_each(anchor);
        cfg.predictions.iter_mut().for_each(anchor);
        cfg.out_dir.iter_mut().for_each(anchor);
        cfg.model_dir.iter_mut().for_each(anchor);
        Ok(cfg)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn model_dir(&self) -> PathBuf {
        self.model_dir.clone().unwrap_or_else(|| self.out_dir().join("models"))
    }

    /// Checks settings shared by every subcommand. Input paths are checked
    /// by the subcommands that read them, so `phantom gen` can create them.
    pub fn validate(&self) -> CliResult<()> {
        if self.jobs == Some(0) {
            return Err(CliError::usage("jobs must be at least 1"));
        }
        self.preprocess.validate()?;
        self.detect.train.validate()?;
        self.refine.train.validate()?;
        Ok(())
    }

    /// Case manifest files in config order; directories expand to their
    /// sorted `*.json` entries.
    pub fn manifest_files(&self) -> CliResult<Vec<PathBuf>> {
        if self.manifests.is_empty() {
            return Err(CliError::usage("config lists no manifests"));
        }
        let mut out = Vec::new();
        for p in &self.manifests {
            if !p.exists() {
                return Err(CliError::usage(format!("manifest path {} does not exist", p.display())));
            }
            if p.is_dir() {
                out.extend(json_files(p, |n| n != crate::provenance::FILE_NAME && !n.ends_with("_pred.json"))?);
            } else {
                out.push(p.clone());
            }
        }
        Ok(out)
    }
}

pub(crate) fn json_files(dir: &Path, keep: impl Fn(&str) -> bool) -> CliResult<Vec<PathBuf>> {
    let rd = std::fs::read_dir(dir).map_err(|e| CliError::usage(format!("cannot list {}: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> = rd
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().is_some_and(|x| x == "json")
                && p.file_name().and_then(|n| n.to_str()).is_some_and(&keep)
        })
        .collect();
    files.sort();
    Ok(files)
}
