//! Evaluation mathematics: overlap and surface distance, clinical markers,
//! agreement statistics and two-sample hypothesis tests.

mod hausdorff;
mod overlap;
pub mod special;
mod stats;

pub use hausdorff::{hausdorff3d, hausdorff3d_brute, hausdorff3d_edt, BRUTE_FORCE_PAIR_LIMIT};
pub use overlap::{
    dice, dice2, mvo_sensitivity, percent_infarct, scar_volume_cm3, sens_spec_acc, ConfusionCounts,
};
pub use stats::{
    average_ranks, bland_altman, mann_whitney_u, mean_sd, paired_t, spearman, AgreementStats,
    MannWhitney, PairedT,
};
