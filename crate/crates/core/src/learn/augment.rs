//! Random geometric augmentation of square patches.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::volcore::{Grid2, Image2};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentParams {
    pub rotation_deg: f64,
    pub shear: f64,
    pub flip_h: bool,
    pub flip_v: bool,
    pub scale: f64,
}

impl AugmentParams {
    pub const IDENTITY: Self = Self { rotation_deg: 0.0, shear: 0.0, flip_h: false, flip_v: false, scale: 1.0 };

    pub fn is_identity(&self) -> bool {
        *self == Self::IDENTITY
    }

    /// Each component is applied with probability ½: rotation in ±20°, shear
    /// in ±0.1, either flip, scale in 0.9–1.1.
    pub fn sample(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = Self::IDENTITY;
        if rng.random_bool(0.5) {
            p.rotation_deg = rng.random_range(-20.0..=20.0);
        }
        if rng.random_bool(0.5) {
            p.shear = rng.random_range(-0.1..=0.1);
        }
        p.flip_h = rng.random_bool(0.5);
        p.flip_v = rng.random_bool(0.5);
        if rng.random_bool(0.5) {
            p.scale = rng.random_range(0.9..=1.1);
        }
        p
    }

    /// Forward 2×2 map about the patch centre: rotation · shear · scale · flips.
    fn matrix(&self) -> [[f64; 2]; 2] {
        let (s, c) = self.rotation_deg.to_radians().sin_cos();
        let fx = if self.flip_h { -1.0 } else { 1.0 };
        let fy = if self.flip_v { -1.0 } else { 1.0 };
        // R · [[1, k], [0, 1]] · diag(scale·fx, scale·fy)
        let k = self.shear;
        let sh = [[c, c * k - s], [s, s * k + c]];
        [[sh[0][0] * self.scale * fx, sh[0][1] * self.scale * fy], [sh[1][0] * self.scale * fx, sh[1][1] * self.scale * fy]]
    }
}

fn bilinear_zero(img: &Image2, x: f64, y: f64) -> f64 {
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = (x - x0, y - y0);
    let at = |xi: f64, yi: f64| img.get_signed(xi as isize, yi as isize).unwrap_or(0.0);
    let snap = |f: f64| if f.abs() < 1e-12 { 0.0 } else if (1.0 - f).abs() < 1e-12 { 1.0 } else { f };
    let (fx, fy) = (snap(fx), snap(fy));
    let mut v = 0.0;
    for (dx, wx) in [(0.0, 1.0 - fx), (1.0, fx)] {
        for (dy, wy) in [(0.0, 1.0 - fy), (1.0, fy)] {
            let w = wx * wy;
            if w != 0.0 {
                v += w * at(x0 + dx, y0 + dy);
            }
        }
    }
    v
}

/// Resamples `patch` under `params` by inverse mapping, zero outside.
pub fn apply_augment(patch: &Image2, params: &AugmentParams) -> Image2 {
    if params.is_identity() {
        return patch.clone();
    }
    let m = params.matrix();
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let inv = [[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]];
    let cx = (patch.width() as f64 - 1.0) / 2.0;
    let cy = (patch.height() as f64 - 1.0) / 2.0;
    Grid2::from_fn(patch.width(), patch.height(), |x, y| {
        let (u, v) = (x as f64 - cx, y as f64 - cy);
        let sx = inv[0][0] * u + inv[0][1] * v + cx;
        let sy = inv[1][0] * u + inv[1][1] * v + cy;
        bilinear_zero(patch, sx, sy)
    })
}

pub fn augment(patch: &Image2, seed: u64) -> Image2 {
    apply_augment(patch, &AugmentParams::sample(seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn marker() -> Image2 {
        Grid2::from_fn(3, 3, |x, y| (1 + x + 3 * y) as f64 * if (x, y) == (2, 0) { 10.0 } else { 1.0 })
    }

    #[test]
    fn identity_seed_is_noop() {
        let seed = (0..1000).find(|&s| AugmentParams::sample(s).is_identity()).expect("identity reachable");
        let p = Grid2::from_fn(9, 9, |x, y| (x * 7 + y * 3) as f64);
        assert_eq!(augment(&p, seed), p);
    }

    #[test]
    fn double_flip_is_identity() {
        let p = Grid2::from_fn(7, 7, |x, y| (x * 11 + y * y) as f64);
        let f = AugmentParams { flip_h: true, ..AugmentParams::IDENTITY };
        let once = apply_augment(&p, &f);
        assert_eq!(once.get(0, 2), p.get(6, 2));
        assert_eq!(apply_augment(&once, &f), p);
    }

    #[test]
    fn quarter_turn_permutes_indices() {
        let p = marker();
        let r = apply_augment(&p, &AugmentParams { rotation_deg: 90.0, ..AugmentParams::IDENTITY });
        // (x, y) relative to the centre goes to (−y, x)
        for y in 0..3 {
            for x in 0..3 {
                let (u, v) = (x as isize - 1, y as isize - 1);
                let (nx, ny) = ((-v + 1) as usize, (u + 1) as usize);
                assert!((r.get(nx, ny) - p.get(x, y)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sampled_params_in_range() {
        for s in 0..200 {
            let p = AugmentParams::sample(s);
            assert!(p.rotation_deg.abs() <= 20.0 && p.shear.abs() <= 0.1 && (0.9..=1.1).contains(&p.scale));
        }
    }
}
