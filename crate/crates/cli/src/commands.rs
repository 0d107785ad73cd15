use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use scarseg::baselines::{run_baseline, Method};
use scarseg::detect::{detect_fit, permutation_runs, DetectionModel, PermutationResult, SplitOutcome};
use scarseg::metrics::{
    bland_altman, dice, hausdorff3d, mann_whitney_u, mean_sd, mvo_sensitivity, paired_t, percent_infarct,
    scar_volume_cm3, spearman,
};
use scarseg::phantom::{generate_case, ScarSpec};
use scarseg::preprocess::preprocess_case;
use scarseg::segment::{segment_case, train_ensemble, Gate, PatchEnsemble, PatchVoter, SegmentOptions};
use scarseg::vio::{self, load_case, read_manifest, save_case, write_mask, MetricsReport, ReportRow};
use scarseg::{LabeledCase, Mask};

use crate::config::{json_files, RunConfig};
use crate::error::{CliError, CliResult};
use crate::provenance;

pub const DETECT_MODEL: &str = "detect.json";
pub const REFINE_MODEL: &str = "refine.json";
pub const PROPOSED: &str = "proposed";

/// What a command produced, for the one-line stdout summary.
#[derive(Debug)]
pub struct Outcome {
    pub dir: PathBuf,
    pub artifacts: Vec<PathBuf>,
}

/// Masks written by `segment` or `baselines` for one case and method.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub case_id: String,
    pub method: String,
    pub final_mask: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hyper: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mvo: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coarse: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gated: Option<Vec<bool>>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
    pub n: usize,
}

impl MeanSd {
    fn of(x: &[f64]) -> Option<Self> {
        if x.is_empty() {
            return None;
        }
        let (mean, sd) = mean_sd(x);
        Some(Self { mean, sd, n: x.len() })
    }
}

#[derive(Debug, Serialize)]
pub struct SplitSummary {
    pub n: usize,
    pub p: f64,
    pub auc_unpermuted: MeanSd,
    pub auc_permuted: MeanSd,
}

fn mkdir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Core(scarseg::Error::Io { path: dir.into(), source: e }))
}

/// Reads, validates and (unless disabled) preprocesses every configured case.
pub fn load_cases(cfg: &RunConfig) -> CliResult<Vec<LabeledCase>> {
    let files = cfg.manifest_files()?;
    let loaded = scarseg::par::map(&files, |f| -> scarseg::Result<LabeledCase> {
        let case = load_case(&read_manifest(f)?)?;
        if cfg.skip_preprocess {
            Ok(case)
        } else {
            preprocess_case(&case, &cfg.preprocess)
        }
    });
    let cases: Vec<LabeledCase> = loaded.into_iter().collect::<scarseg::Result<_>>()?;
    let mut ids: Vec<&str> = cases.iter().map(|c| c.case_id.as_str()).collect();
    ids.sort_unstable();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(CliError::Core(scarseg::Error::InvalidArgument(format!("duplicate case_id {}", w[0]))));
    }
    Ok(cases)
}

pub fn phantom_gen(cfg: &RunConfig) -> CliResult<Outcome> {
    let g = &cfg.phantom;
    if g.healthy + g.diseased == 0 {
        return Err(CliError::usage("phantom: healthy + diseased must be positive"));
    }
    let dir = cfg.out_dir().join("phantom");
    mkdir(&dir)?;
    let mut healthy = g.spec.clone();
    healthy.scar = None;
    let mut diseased = g.spec.clone();
    let mut scar = diseased.scar.take().unwrap_or_default();
    if g.mvo_fraction.is_some() {
        scar.mvo_fraction = g.mvo_fraction;
    }
    diseased.scar = Some(ScarSpec { ..scar });
    healthy.validate()?;
    diseased.validate()?;

    let n = g.healthy + g.diseased;
    let cases = scarseg::par::map_range(n, |i| {
        let spec = if i < g.healthy { &healthy } else { &diseased };
        generate_case(spec, cfg.seeds.phantom.wrapping_add(i as u64))
    });
    let mut artifacts = Vec::new();
    for c in cases {
        let c = c?;
        let manifest = save_case(&c, &dir)?;
        artifacts.push(manifest);
        for suffix in ["image", "myo", "endo", "epi", "gt_scar", "gt_mvo", "remote"] {
            for ext in ["mhd", "raw"] {
                let p = dir.join(format!("{}_{suffix}.{ext}", c.case_id));
                if p.exists() {
                    artifacts.push(p);
                }
            }
        }
    }
    provenance::write(&dir, "phantom gen", cfg, &artifacts)?;
    Ok(Outcome { dir, artifacts })
}

pub fn train_detect(cfg: &RunConfig) -> CliResult<Outcome> {
    let cases = load_cases(cfg)?;
    let model = detect_fit(&cases, &cfg.detect, cfg.seeds.detect)?;
    let dir = cfg.model_dir();
    mkdir(&dir)?;
    let path = dir.join(DETECT_MODEL);
    vio::write_json(&model, &path)?;
    provenance::write(&dir, "train detect", cfg, &model_files(&dir))?;
    Ok(Outcome { dir, artifacts: vec![path] })
}

pub fn train_refine(cfg: &RunConfig) -> CliResult<Outcome> {
    let cases = load_cases(cfg)?;
    let ens = train_ensemble(&cases, &cfg.refine, cfg.seeds.refine)?;
    let dir = cfg.model_dir();
    mkdir(&dir)?;
    let path = dir.join(REFINE_MODEL);
    vio::write_json(&ens, &path)?;
    provenance::write(&dir, "train refine", cfg, &model_files(&dir))?;
    Ok(Outcome { dir, artifacts: vec![path] })
}

/// Both model files share one directory; the provenance lists whichever exist.
fn model_files(dir: &Path) -> Vec<PathBuf> {
    [DETECT_MODEL, REFINE_MODEL].iter().map(|f| dir.join(f)).filter(|p| p.exists()).collect()
}

fn load_model<T: serde::de::DeserializeOwned>(cfg: &RunConfig, name: &str, hint: &str) -> CliResult<T> {
    let path = cfg.model_dir().join(name);
    if !path.exists() {
        return Err(CliError::usage(format!("model {} not found; {hint}", path.display())));
    }
    Ok(vio::read_json(&path)?)
}

/// Writes `<name>.csv` (split, auc_unpermuted, auc_permuted) and `<name>_summary.json`.
fn split_loop(cfg: &RunConfig, n: usize, name: &str) -> CliResult<Outcome> {
    let cases = load_cases(cfg)?;
    let runs = permutation_runs(&cases, n, &cfg.detect, cfg.seeds.splits)?;
    let dir = cfg.out_dir().join(name);
    mkdir(&dir)?;
    let csv_path = dir.join(format!("{name}.csv"));
    write_split_csv(&runs, &csv_path)?;
    let un: Vec<f64> = runs.iter().map(|r| r.auc_unpermuted).collect();
    let pe: Vec<f64> = runs.iter().map(|r| r.auc_permuted).collect();
    let result = PermutationResult::from_aucs(un.clone(), pe.clone())?;
    let summary = SplitSummary {
        n: result.n,
        p: result.p,
        auc_unpermuted: MeanSd::of(&un).expect("n > 0"),
        auc_permuted: MeanSd::of(&pe).expect("n > 0"),
    };
    let summary_path = dir.join(format!("{name}_summary.json"));
    vio::write_json(&summary, &summary_path)?;
    let artifacts = vec![csv_path, summary_path];
    provenance::write(&dir, name, cfg, &artifacts)?;
    Ok(Outcome { dir, artifacts })
}

fn write_split_csv(runs: &[SplitOutcome], path: &Path) -> CliResult<()> {
    let mut s = String::from("split,auc_unpermuted,auc_permuted\n");
    for r in runs {
        s.push_str(&format!("{},{:.6},{:.6}\n", r.split, r.auc_unpermuted, r.auc_permuted));
    }
    std::fs::write(path, s).map_err(|e| CliError::Core(scarseg::Error::Io { path: path.into(), source: e }))
}

pub fn detect(cfg: &RunConfig) -> CliResult<Outcome> {
    split_loop(cfg, cfg.protocol.detect_splits, "detect")
}

pub fn permtest(cfg: &RunConfig) -> CliResult<Outcome> {
    split_loop(cfg, cfg.protocol.permutations, "permtest")
}

/// Whole-case report row; GT-dependent metrics stay blank without GT.
pub fn score_row(case: &LabeledCase, method: &str, pred: &Mask) -> ReportRow {
    let mut r = ReportRow::new(case.case_id.clone(), None, method);
    r.scar_volume_cm3 = Some(scar_volume_cm3(pred));
    r.pct_infarct = percent_infarct(pred, &case.myocardium).ok();
    if let Some(gt) = case.gt_infarct() {
        r.dice_pct = dice(pred, &gt).ok().map(|d| 100.0 * d);
        r.hausdorff_mm = hausdorff3d(pred, &gt).ok();
    }
    if let Some(m) = &case.gt_mvo {
        r.mvo_sensitivity = mvo_sensitivity(pred, m).ok();
    }
    r
}

pub fn segment(cfg: &RunConfig) -> CliResult<Outcome> {
    let cases = load_cases(cfg)?;
    let detector: Option<DetectionModel> = if cfg.pipeline.detect {
        Some(load_model(cfg, DETECT_MODEL, "run `train detect` first or pass --no-detect")?)
    } else {
        None
    };
    let opts = SegmentOptions { refine: cfg.pipeline.refine, mvo: cfg.pipeline.mvo };
    let gate = match &detector {
        Some(m) => Gate::Model(m),
        None => Gate::All,
    };

    // One ensemble per case: shared, per-fold, or none.
    let mut ensembles: Vec<PatchEnsemble> = Vec::new();
    let mut which: Vec<Option<usize>> = vec![None; cases.len()];
    if cfg.pipeline.refine {
        match cfg.protocol.cv_folds {
            Some(k) => {
                let strata: Vec<bool> = cases.iter().map(|c| c.is_diseased()).collect();
                let folds = scarseg::detect::stratified_folds(&strata, k, cfg.seeds.splits)?;
                for (f, held) in folds.iter().enumerate() {
                    let train: Vec<LabeledCase> =
                        (0..cases.len()).filter(|i| !held.contains(i)).map(|i| cases[i].clone()).collect();
                    ensembles.push(train_ensemble(&train, &cfg.refine, cfg.seeds.refine.wrapping_add(f as u64))?);
                    for &i in held {
                        which[i] = Some(f);
                    }
                }
            }
            None => {
                ensembles.push(load_model(cfg, REFINE_MODEL, "run `train refine` first or pass --no-refine")?);
                which.iter_mut().for_each(|w| *w = Some(0));
            }
        }
    }

    let idx: Vec<usize> = (0..cases.len()).collect();
    let results = scarseg::par::map(&idx, |&i| {
        let voter = which[i].map(|f| &ensembles[f] as &dyn PatchVoter);
        segment_case(&cases[i], gate, voter, opts)
    });

    let dir = cfg.out_dir().join("segment");
    mkdir(&dir)?;
    let mut artifacts = Vec::new();
    let mut report = MetricsReport::default();
    for (case, res) in cases.iter().zip(results) {
        let res = res?;
        let id = &case.case_id;
        let mut write = |suffix: &str, m: &Mask| -> CliResult<PathBuf> {
            let name = PathBuf::from(format!("{id}_{suffix}.mhd"));
            write_mask(m, &dir.join(&name))?;
            artifacts.push(dir.join(&name));
            artifacts.push(dir.join(format!("{id}_{suffix}.raw")));
            Ok(name)
        };
        let pred = Prediction {
            case_id: id.clone(),
            method: PROPOSED.into(),
            coarse: Some(write("coarse", &res.coarse)?),
            hyper: Some(write("hyper", &res.hyper)?),
            mvo: Some(write("mvo", &res.mvo)?),
            final_mask: write("final", &res.final_mask)?,
            gated: Some(res.gated.clone()),
            warnings: res.warnings.iter().map(|w| format!("slice {}: {}", w.slice, w.message)).collect(),
        };
        let pred_path = dir.join(format!("{id}_pred.json"));
        vio::write_json(&pred, &pred_path)?;
        artifacts.push(pred_path);
        report.rows.push(score_row(case, PROPOSED, &res.final_mask));
    }
    let report_path = dir.join("segment_report.csv");
    vio::write_report(&report, &report_path)?;
    artifacts.push(report_path);
    provenance::write(&dir, "segment", cfg, &artifacts)?;
    Ok(Outcome { dir, artifacts })
}

pub fn baselines(cfg: &RunConfig) -> CliResult<Outcome> {
    let cases = load_cases(cfg)?;
    let dir = cfg.out_dir().join("baselines");
    mkdir(&dir)?;
    let methods = Method::all();
    let mut artifacts = Vec::new();
    let mut report = MetricsReport::default();
    let results = scarseg::par::map(&cases, |c| {
        methods.iter().map(|&m| run_baseline(c, m)).collect::<scarseg::Result<Vec<_>>>()
    });
    for (case, res) in cases.iter().zip(results) {
        for r in res? {
            let id = &case.case_id;
            let method = r.method.name();
            let name = PathBuf::from(format!("{id}_{method}.mhd"));
            write_mask(&r.mask, &dir.join(&name))?;
            artifacts.push(dir.join(&name));
            artifacts.push(dir.join(format!("{id}_{method}.raw")));
            let pred = Prediction {
                case_id: id.clone(),
                method: method.clone(),
                final_mask: name,
                hyper: None,
                mvo: None,
                coarse: None,
                gated: None,
                warnings: r.warnings.iter().map(|(z, w)| format!("slice {z}: {w}")).collect(),
            };
            let pred_path = dir.join(format!("{id}_{method}_pred.json"));
            vio::write_json(&pred, &pred_path)?;
            artifacts.push(pred_path);
            report.rows.push(score_row(case, &method, &r.mask));
        }
    }
    let report_path = dir.join("baselines_report.csv");
    vio::write_report(&report, &report_path)?;
    artifacts.push(report_path);
    provenance::write(&dir, "baselines", cfg, &artifacts)?;
    Ok(Outcome { dir, artifacts })
}

#[derive(Debug, Serialize)]
pub struct MethodSummary {
    pub method: String,
    pub cases: usize,
    pub dice_pct: Option<MeanSd>,
    pub hausdorff_mm: Option<MeanSd>,
    pub scar_volume_cm3: Option<MeanSd>,
    pub pct_infarct: Option<MeanSd>,
    pub mvo_sensitivity: Option<MeanSd>,
    /// Predicted minus reference scar volume.
    pub volume_bias_cm3: Option<MeanSd>,
    pub volume_spearman: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct PairwiseTest {
    pub a: String,
    pub b: String,
    pub metric: String,
    pub pairs: usize,
    pub paired_t_p: Option<f64>,
    pub mann_whitney_p: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct EvaluationSummary {
    /// Dice is computed per case on the whole volume.
    pub dice_aggregation: String,
    pub methods: Vec<MethodSummary>,
    pub pairwise: Vec<PairwiseTest>,
}

fn prediction_files(cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let dirs: Vec<PathBuf> = if cfg.predictions.is_empty() {
        ["segment", "baselines"].iter().map(|d| cfg.out_dir().join(d)).filter(|d| d.is_dir()).collect()
    } else {
        cfg.predictions.clone()
    };
    let mut files = Vec::new();
    for d in &dirs {
        if !d.exists() {
            return Err(CliError::usage(format!("prediction path {} does not exist", d.display())));
        }
        if d.is_dir() {
            files.extend(json_files(d, |n| n.ends_with("_pred.json"))?);
        } else {
            files.push(d.clone());
        }
    }
    if files.is_empty() {
        return Err(CliError::usage("no prediction manifests found; run `segment` or `baselines` first"));
    }
    Ok(files)
}

pub fn evaluate(cfg: &RunConfig) -> CliResult<Outcome> {
    let cases = load_cases(cfg)?;
    let files = prediction_files(cfg)?;
    let mut report = MetricsReport::default();
    for f in &files {
        let pred: Prediction = vio::read_json(f)?;
        let case = cases.iter().find(|c| c.case_id == pred.case_id).ok_or_else(|| {
            CliError::usage(format!("{}: case {} is not among the configured manifests", f.display(), pred.case_id))
        })?;
        let base = f.parent().unwrap_or(Path::new(""));
        let mask_path = if pred.final_mask.is_absolute() { pred.final_mask.clone() } else { base.join(&pred.final_mask) };
        let mask = vio::read_mask(&mask_path)?;
        if !mask.same_geometry(&case.volume) {
            return Err(CliError::Core(scarseg::Error::Alignment));
        }
        report.rows.push(score_row(case, &pred.method, &mask));
    }
    report.rows.sort_by(|a, b| (&a.method, &a.case_id).cmp(&(&b.method, &b.case_id)));

    let mut methods: Vec<String> = report.rows.iter().map(|r| r.method.clone()).collect();
    methods.dedup();
    let reference: Vec<(String, f64)> = cases
        .iter()
        .filter_map(|c| c.gt_infarct().map(|g| (c.case_id.clone(), scar_volume_cm3(&g))))
        .collect();
    fn select<'a>(rows: &'a [ReportRow], m: &'a str) -> impl Iterator<Item = &'a ReportRow> + 'a {
        rows.iter().filter(move |r| r.method == m)
    }
    let rows = &report.rows;
    let col = |m: &str, f: fn(&ReportRow) -> Option<f64>| select(rows, m).filter_map(f).collect::<Vec<f64>>();

    let summaries: Vec<MethodSummary> = methods
        .iter()
        .map(|m| {
            let (mut pred_v, mut ref_v) = (Vec::new(), Vec::new());
            for r in select(rows, m) {
                if let (Some(v), Some((_, g))) = (r.scar_volume_cm3, reference.iter().find(|(id, _)| *id == r.case_id)) {
                    pred_v.push(v);
                    ref_v.push(*g);
                }
            }
            MethodSummary {
                method: m.clone(),
                cases: select(rows, m).count(),
                dice_pct: MeanSd::of(&col(m, |r| r.dice_pct)),
                hausdorff_mm: MeanSd::of(&col(m, |r| r.hausdorff_mm)),
                scar_volume_cm3: MeanSd::of(&col(m, |r| r.scar_volume_cm3)),
                pct_infarct: MeanSd::of(&col(m, |r| r.pct_infarct)),
                mvo_sensitivity: MeanSd::of(&col(m, |r| r.mvo_sensitivity)),
                volume_bias_cm3: bland_altman(&ref_v, &pred_v).ok().map(|(mean, sd)| MeanSd { mean, sd, n: pred_v.len() }),
                volume_spearman: spearman(&ref_v, &pred_v).ok(),
            }
        })
        .collect();

    let mut pairwise = Vec::new();
    for (i, a) in methods.iter().enumerate() {
        for b in &methods[i + 1..] {
            let (mut xa, mut xb) = (Vec::new(), Vec::new());
            for r in select(rows, a) {
                let other = select(rows, b).find(|o| o.case_id == r.case_id);
                if let (Some(da), Some(db)) = (r.dice_pct, other.and_then(|o| o.dice_pct)) {
                    xa.push(da);
                    xb.push(db);
                }
            }
            pairwise.push(PairwiseTest {
                a: a.clone(),
                b: b.clone(),
                metric: "dice_pct".into(),
                pairs: xa.len(),
                paired_t_p: paired_t(&xa, &xb).ok().map(|t| t.p_two_tailed).filter(|p| p.is_finite()),
                mann_whitney_p: mann_whitney_u(&xa, &xb).ok().map(|u| u.p_two_tailed).filter(|p| p.is_finite()),
            });
        }
    }

    let dir = cfg.out_dir().join("evaluate");
    mkdir(&dir)?;
    let report_path = dir.join("evaluation.csv");
    vio::write_report(&report, &report_path)?;
    let summary_path = dir.join("evaluation_summary.json");
    let summary = EvaluationSummary { dice_aggregation: "per-case volume".into(), methods: summaries, pairwise };
    vio::write_json(&summary, &summary_path)?;
    let artifacts = vec![report_path, summary_path];
    provenance::write(&dir, "evaluate", cfg, &artifacts)?;
    Ok(Outcome { dir, artifacts })
}
