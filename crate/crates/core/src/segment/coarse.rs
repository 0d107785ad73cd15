//! Top-hat contrast enhancement and Otsu-based coarse scar segmentation.

use crate::error::Error;
use crate::volcore::{
    binary_dilate, binary_erode, binary_opening, intensity_level, otsu_threshold, white_tophat, Grid2, Histogram,
    Image2, Mask2, StructuringElement,
};

pub const BAR_LENGTH: usize = 34;
pub const BAR_ANGLES_DEG: [f64; 6] = [0.0, 30.0, 60.0, 90.0, 120.0, 150.0];

/// `slice + Σ_θ tophat(slice, bar(34, θ))` before clamping.
pub fn tophat_sum(slice: &Image2) -> Image2 {
    let mut acc = slice.clone();
    for &a in &BAR_ANGLES_DEG {
        let th = white_tophat(slice, &StructuringElement::bar(BAR_LENGTH, a));
        acc.data_mut().iter_mut().zip(th.data()).for_each(|(s, t)| *s += t);
    }
    acc
}

/// Sum of oriented top-hats added to the slice, clamped to [0, 255] inside
/// `myo`; pixels outside `myo` keep their input value.
pub fn tophat_enhance(slice: &Image2, myo: &Mask2) -> Image2 {
    let sum = tophat_sum(slice);
    Grid2::from_fn(slice.width(), slice.height(), |x, y| {
        if myo.get(x, y) {
            sum.get(x, y).clamp(0.0, 255.0)
        } else {
            slice.get(x, y)
        }
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoarseResult {
    pub mask: Mask2,
    pub threshold: Option<u8>,
    /// Set when the slice could not be thresholded; the mask is then empty.
    pub warning: Option<String>,
}

/// Otsu on the enhanced myocardial histogram, foreground above the threshold,
/// then an opening with a radius-1 disk.
pub fn coarse_segment(slice: &Image2, myo: &Mask2) -> CoarseResult {
    let empty = Grid2::new(slice.width(), slice.height(), false);
    if !myo.any() {
        return CoarseResult { mask: empty, threshold: None, warning: Some(Error::EmptyRegion("myocardium").to_string()) };
    }
    let enhanced = tophat_enhance(slice, myo);
    let hist = Histogram::from_values(enhanced.values_in(myo));
    match otsu_threshold(&hist) {
        Ok(t) => {
            let fg = Grid2::from_fn(slice.width(), slice.height(), |x, y| {
                myo.get(x, y) && intensity_level(enhanced.get(x, y)) > t
            });
            CoarseResult { mask: binary_opening(&fg, &StructuringElement::disk(1)), threshold: Some(t), warning: None }
        }
        Err(e) => CoarseResult { mask: empty, threshold: None, warning: Some(e.to_string()) },
    }
}

/// `dilate(mask, disk 2) ∖ erode(mask, disk 2)`.
pub fn boundary_region(mask: &Mask2) -> Mask2 {
    let d = StructuringElement::disk(2);
    binary_dilate(mask, &d).minus(&binary_erode(mask, &d))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_slice_unchanged() {
        let s = Grid2::new(40, 40, 90.0);
        assert_eq!(tophat_enhance(&s, &Grid2::new(40, 40, true)), s);
    }

    #[test]
    fn streak_is_boosted() {
        let s = Grid2::from_fn(48, 48, |x, y| if y == 20 && (5..40).contains(&x) { 120.0 } else { 40.0 } + if x == 30 { 1.0 } else { 0.0 });
        let e = tophat_sum(&s);
        for x in 5..40 {
            assert!(e.get(x, 20) > s.get(x, 20));
        }
        assert!(e.data().iter().zip(s.data()).all(|(a, b)| a >= b));
    }

    #[test]
    fn isolated_pixel_removed() {
        let mut s = Grid2::new(30, 30, 20.0);
        s.set(15, 15, 250.0);
        let myo = Grid2::new(30, 30, true);
        let c = coarse_segment(&s, &myo);
        assert!(!c.mask.any());
        assert!(c.warning.is_none());
    }

    #[test]
    fn degenerate_histogram_warns() {
        let s = Grid2::new(20, 20, 50.0);
        let c = coarse_segment(&s, &Grid2::new(20, 20, true));
        assert!(!c.mask.any() && c.warning.is_some());
    }

    #[test]
    fn square_band_is_four_thick() {
        let m = Grid2::from_fn(31, 31, |x, y| (10..21).contains(&x) && (10..21).contains(&y));
        let b = boundary_region(&m);
        let near = |x: usize, y: usize, q: &dyn Fn(isize, isize) -> bool, all: bool| {
            let mut it = (-2isize..=2).flat_map(|dy| (-2isize..=2).map(move |dx| (dx, dy))).filter(|(dx, dy)| dx * dx + dy * dy <= 4);
            let f = |(dx, dy): (isize, isize)| q(x as isize + dx, y as isize + dy);
            if all { it.all(f) } else { it.any(f) }
        };
        let inside = |x: isize, y: isize| (10..21).contains(&x) && (10..21).contains(&y);
        for (x, y, v) in b.iter_xy() {
            let dil = near(x, y, &inside, false);
            let ero = near(x, y, &inside, true);
            assert_eq!(v, dil && !ero, "({x},{y})");
        }
        let row: Vec<usize> = (0..31).filter(|&x| b.get(x, 15)).collect();
        assert_eq!(row, vec![8, 9, 10, 11, 19, 20, 21, 22]);
        assert!(!boundary_region(&Grid2::new(5, 5, false)).any());
    }
}
