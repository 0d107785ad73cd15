//! Healthy/diseased slice classification, ROC analysis and the
//! label-permutation significance test.

pub mod model;
pub mod perm;
pub mod roc;
pub mod split;

pub use model::{
    detect_fit, detect_predict, extract_detection_input, fit_samples, slice_samples, DetectConfig, DetectMeta,
    DetectionModel, SlicePrediction, SliceSample, DETECTION_SIDE,
};
pub use perm::{permutation_p, permutation_runs, permutation_test, PermutationResult, SplitOutcome};
pub use roc::{auc_pair_count, pick_operating_point, roc_curve, OperatingPoint, RocCurve, RocPoint};
pub use split::{stratified_folds, stratified_split, Split};
