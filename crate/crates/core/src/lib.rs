//! Detection and quantification of myocardial infarction in short-axis
//! late-gadolinium-enhanced MRI.
//!
//! The crate is organised around the processing cascade:
//!
//! * [`volcore`]: grids, masks, morphology, connected components and Otsu.
//! * [`vio`]: MetaImage volumes, JSON manifests and models, CSV reports.
//! * [`preprocess`]: denoising, reslicing, intensity normalisation, gamma.
//! * [`phantom`]: synthetic labelled cases with known ground truth.
//! * [`learn`]: a small convolutional network, PCA and a linear margin classifier.
//! * [`detect`]: healthy/diseased slice classification, ROC and permutation tests.
//! * [`segment`]: top-hat coarse segmentation, ensemble refinement, MVO inclusion.
//! * [`baselines`]: n-SD, Otsu, FWHM and GMM reference thresholds.
//! * [`metrics`]: overlap, distance, clinical markers and agreement statistics.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod case;
pub mod detect;
pub mod error;
pub mod learn;
pub mod metrics;
pub mod par;
pub mod phantom;
pub mod preprocess;
pub mod segment;
pub mod vio;
pub mod volcore;

pub use case::{LabeledCase, SliceLabel};
pub use error::{Error, Result};
pub use volcore::{Grid2, Grid3, Image2, Mask, Mask2, Volume};
