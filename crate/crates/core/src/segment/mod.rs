//! Scar segmentation cascade: top-hat enhanced Otsu thresholding, boundary
//! refinement by a patch-classifier ensemble, and MVO inclusion.

pub mod coarse;
pub mod ensemble;
pub mod mvo;
pub mod patches;
pub mod pipeline;

pub use coarse::{boundary_region, coarse_segment, tophat_enhance, tophat_sum, CoarseResult, BAR_ANGLES_DEG, BAR_LENGTH};
pub use ensemble::{refine, train_ensemble, ConstantVoter, PatchEnsemble, PatchVoter, RefineConfig};
pub use mvo::include_mvo;
pub use patches::{extract_patch, patch_centres, sample_training_patches, PatchSet, PATCH_SIDE};
pub use pipeline::{segment_case, Gate, Markers, SegmentOptions, SegmentationResult, SliceWarning};
