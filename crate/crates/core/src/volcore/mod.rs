//! Grid types and the 2-D morphology, labelling and thresholding primitives
//! every other stage builds on.

mod grid;
mod hist;
mod label;
mod morph;
mod se;

pub use grid::{Grid2, Grid3, Image2, Mask, Mask2, Volume};
pub use hist::{intensity_level, otsu_threshold, Histogram};
pub use label::{connected_components, fill_holes_2d, Connectivity};
pub use morph::{
    binary_closing, binary_dilate, binary_erode, binary_opening, gray_dilate, gray_erode,
    gray_opening, white_tophat,
};
pub use se::{SeKind, StructuringElement};
