//! Flat grayscale and binary morphology on 2-D grids.
//!
//! Out-of-bounds samples are ignored: the min/max runs over the in-bounds
//! footprint members only. Since every element contains its anchor each
//! output pixel sees at least one sample, and erosion/dilation stay adjoint,
//! so openings are idempotent right up to the image edge.

use super::grid::{Grid2, Image2, Mask2};
use super::se::StructuringElement;

/// Apply `acc(out(p), input(p + sign·o))` for every offset `o`, restricted to
/// in-bounds source pixels.
fn scan<T: Copy>(
    input: &Grid2<T>,
    se: &StructuringElement,
    sign: isize,
    init: T,
    acc: impl Fn(T, T) -> T,
) -> Grid2<T> {
    let (w, h) = (input.width() as isize, input.height() as isize);
    let mut out = Grid2::new(input.width(), input.height(), init);
    let src = input.data();
    for &(ox, oy) in se.offsets() {
        let (dx, dy) = (sign * ox, sign * oy);
        let y0 = (-dy).max(0);
        let y1 = (h - dy).min(h);
        let x0 = (-dx).max(0);
        let x1 = (w - dx).min(w);
        if x0 >= x1 || y0 >= y1 {
            continue;
        }
        let dst = out.data_mut();
        for y in y0..y1 {
            let row = (y * w) as usize;
            let srow = ((y + dy) * w) as usize;
            for x in x0..x1 {
                let i = row + x as usize;
                dst[i] = acc(dst[i], src[srow + (x + dx) as usize]);
            }
        }
    }
    out
}

/// `out(p) = min_{o ∈ se} in(p + o)`.
pub fn gray_erode(input: &Image2, se: &StructuringElement) -> Image2 {
    scan(input, se, 1, f64::INFINITY, f64::min)
}

/// `out(p) = max_{o ∈ se} in(p − o)`, i.e. the max over the reflected element.
pub fn gray_dilate(input: &Image2, se: &StructuringElement) -> Image2 {
    scan(input, se, -1, f64::NEG_INFINITY, f64::max)
}

pub fn gray_opening(input: &Image2, se: &StructuringElement) -> Image2 {
    gray_dilate(&gray_erode(input, se), se)
}

/// `input − opening(input)`; non-negative everywhere.
pub fn white_tophat(input: &Image2, se: &StructuringElement) -> Image2 {
    let open = gray_opening(input, se);
    Grid2::from_vec(
        input.width(),
        input.height(),
        input.data().iter().zip(open.data()).map(|(&a, &b)| (a - b).max(0.0)).collect(),
    )
}

pub fn binary_erode(mask: &Mask2, se: &StructuringElement) -> Mask2 {
    scan(mask, se, 1, true, |a, b| a && b)
}

pub fn binary_dilate(mask: &Mask2, se: &StructuringElement) -> Mask2 {
    scan(mask, se, -1, false, |a, b| a || b)
}

pub fn binary_opening(mask: &Mask2, se: &StructuringElement) -> Mask2 {
    binary_dilate(&binary_erode(mask, se), se)
}

pub fn binary_closing(mask: &Mask2, se: &StructuringElement) -> Mask2 {
    binary_erode(&binary_dilate(mask, se), se)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute(input: &Image2, se: &StructuringElement, erode: bool) -> Image2 {
        Grid2::from_fn(input.width(), input.height(), |x, y| {
            let mut best = if erode { f64::INFINITY } else { f64::NEG_INFINITY };
            for &(ox, oy) in se.offsets() {
                let (sx, sy) = if erode {
                    (x as isize + ox, y as isize + oy)
                } else {
                    (x as isize - ox, y as isize - oy)
                };
                if let Some(v) = input.get_signed(sx, sy) {
                    best = if erode { best.min(v) } else { best.max(v) };
                }
            }
            best
        })
    }

    fn random_grid(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Image2 {
        Grid2::from_fn(w, h, |_, _| rng.random_range(0..10) as f64)
    }

    #[test]
    fn constant_grid_is_fixed() {
        let g = Grid2::new(7, 5, 3.5);
        for se in [StructuringElement::disk(2), StructuringElement::bar(5, 30.0)] {
            assert_eq!(gray_erode(&g, &se), g);
            assert_eq!(gray_dilate(&g, &se), g);
            assert!(white_tophat(&g, &se).data().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn dilate_point_by_disk_gives_cross() {
        let mut g = Grid2::new(5, 5, 0.0);
        g.set(2, 2, 9.0);
        let d = gray_dilate(&g, &StructuringElement::disk(1));
        let lit: Vec<(usize, usize)> = d.iter_xy().filter(|t| t.2 == 9.0).map(|t| (t.0, t.1)).collect();
        assert_eq!(lit, vec![(2, 1), (1, 2), (2, 2), (3, 2), (2, 3)]);
    }

    #[test]
    fn matches_brute_force_on_random_grids() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let ses = [StructuringElement::disk(1), StructuringElement::bar(4, 60.0)];
        for _ in 0..50 {
            let g = random_grid(&mut rng, 8, 8);
            for se in &ses {
                assert_eq!(gray_erode(&g, se), brute(&g, se, true));
                assert_eq!(gray_dilate(&g, se), brute(&g, se, false));
            }
        }
    }

    #[test]
    fn tophat_keeps_thin_spike() {
        let mut g = Grid2::new(9, 9, 10.0);
        g.set(4, 4, 50.0);
        let th = white_tophat(&g, &StructuringElement::bar(3, 0.0));
        assert_eq!(th.get(4, 4), 40.0);
        assert_eq!(th.data().iter().filter(|&&v| v != 0.0).count(), 1);
    }

    #[test]
    fn tophat_zero_inside_wide_plateau() {
        let mut g = Grid2::new(20, 20, 0.0);
        for y in 4..16 {
            for x in 4..16 {
                g.set(x, y, 100.0);
            }
        }
        let se = StructuringElement::bar(5, 30.0);
        let th = white_tophat(&g, &se);
        for y in 6..14 {
            for x in 6..14 {
                assert_eq!(th.get(x, y), 0.0);
            }
        }
    }

    #[test]
    fn binary_matches_grayscale_on_indicator() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let se = StructuringElement::disk(1);
        for _ in 0..20 {
            let m = Grid2::from_fn(10, 10, |_, _| rng.random_bool(0.6));
            let g = m.map(|b| if b { 1.0 } else { 0.0 });
            assert_eq!(binary_erode(&m, &se), gray_erode(&g, &se).map(|v| v > 0.5));
            assert_eq!(binary_dilate(&m, &se), gray_dilate(&g, &se).map(|v| v > 0.5));
        }
    }

    #[test]
    fn single_pixel_removed_by_opening() {
        let mut m = Grid2::new(6, 6, false);
        m.set(3, 3, true);
        assert!(!binary_opening(&m, &StructuringElement::disk(1)).any());
    }
}
