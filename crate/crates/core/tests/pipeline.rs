use scarseg::detect::{detect_fit, detect_predict, DetectConfig};
use scarseg::learn::Architecture;
use scarseg::metrics::scar_volume_cm3;
use scarseg::phantom::{generate_case, PhantomSpec};
use scarseg::preprocess::{preprocess_case, PreprocessConfig};
use scarseg::vio::{load_case, read_manifest, save_case};
use scarseg::Error;

#[test]
fn manifest_round_trip_preserves_case() {
    let spec = PhantomSpec { dims: [48, 40, 3], ..PhantomSpec::with_mvo(0.25) };
    let case = generate_case(&spec, 11).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = save_case(&case, dir.path()).unwrap();
    let back = load_case(&read_manifest(&path).unwrap()).unwrap();
    assert_eq!(back, case);
}

#[test]
fn manifest_with_missing_mask_is_rejected() {
    let case = generate_case(&PhantomSpec { dims: [32, 32, 2], ..PhantomSpec::default() }, 3).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = save_case(&case, dir.path()).unwrap();
    std::fs::remove_file(dir.path().join(format!("{}_myo.mhd", case.case_id))).unwrap();
    assert!(matches!(read_manifest(&path), Err(Error::Manifest { .. })));
}

#[test]
fn reslicing_preserves_physical_volumes() {
    let spec = PhantomSpec { dims: [64, 64, 2], spacing: [1.91, 1.91, 8.0], ..PhantomSpec::default() };
    let case = generate_case(&spec, 21).unwrap();
    let out = preprocess_case(&case, &PreprocessConfig::default()).unwrap();
    assert_eq!(out.volume.spacing(), [1.25, 1.25, 8.0]);
    assert_eq!(out.volume.dims(), [98, 98, 2]);
    for (before, after) in [
        (&case.myocardium, &out.myocardium),
        (case.gt_scar.as_ref().unwrap(), out.gt_scar.as_ref().unwrap()),
    ] {
        let (a, b) = (scar_volume_cm3(before), scar_volume_cm3(after));
        assert!((a - b).abs() / a < 0.05, "{a} vs {b}");
    }
}

#[test]
fn canonical_spacing_keeps_mask_counts() {
    let case = generate_case(&PhantomSpec { dims: [64, 64, 2], ..PhantomSpec::default() }, 22).unwrap();
    let out = preprocess_case(&case, &PreprocessConfig::default()).unwrap();
    assert_eq!(out.myocardium, case.myocardium);
    assert_eq!(out.gt_scar, case.gt_scar);
    assert!(out.volume.data().iter().all(|v| (0.0..=255.0).contains(v)));
}

#[test]
fn detection_fit_is_deterministic() {
    let dims = [96, 96, 2];
    let mut cases = Vec::new();
    for i in 0..4 {
        let spec = if i % 2 == 0 { PhantomSpec { dims, ..PhantomSpec::healthy() } } else { PhantomSpec { dims, ..PhantomSpec::default() } };
        cases.push(preprocess_case(&generate_case(&spec, 40 + i).unwrap(), &PreprocessConfig::default()).unwrap());
    }
    let mut cfg = DetectConfig { arch: Architecture::scaled(89, [2, 2, 4], 8), ..DetectConfig::default() };
    cfg.train.epochs = 2;
    let a = detect_fit(&cases, &cfg, 5).unwrap();
    let b = detect_fit(&cases, &cfg, 5).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    let p = detect_predict(&a, &cases[1]).unwrap();
    assert_eq!(p.len(), 2);
    assert!(p.iter().all(|s| s.score.is_finite()));
}
