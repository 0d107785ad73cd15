//! Volume homogenisation: non-local-means denoising with an automatic noise
//! estimate, in-plane reslicing to the canonical grid, per-slice intensity
//! normalisation inside the epicardium, and gamma enhancement.

use serde::{Deserialize, Serialize};

use crate::case::LabeledCase;
use crate::error::{Error, Result};
use crate::volcore::{Grid2, Image2, Mask, Mask2, Volume};

/// Canonical voxel size in mm.
pub const CANONICAL_SPACING: [f64; 3] = [1.25, 1.25, 8.0];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NlmConfig {
    pub patch_radius: usize,
    pub search_radius: usize,
    /// Filtering parameter `h = h_factor · σ`.
    pub h_factor: f64,
}

impl Default for NlmConfig {
    fn default() -> Self {
        Self { patch_radius: 1, search_radius: 3, h_factor: 0.6 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    pub target_spacing: [f64; 3],
    pub gamma: f64,
    pub denoise: bool,
    pub nlm: NlmConfig,
    /// Percentile of myocardial intensities mapped to 0.
    pub p_lo: f64,
    /// Percentile of blood-pool intensities mapped to 255.
    pub p_hi: f64,
    /// Permit linear through-plane resampling when the slice spacing differs.
    pub allow_through_plane: bool,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            target_spacing: CANONICAL_SPACING,
            gamma: 1.5,
            denoise: true,
            nlm: NlmConfig::default(),
            p_lo: 1.0,
            p_hi: 99.0,
            allow_through_plane: false,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.target_spacing.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::Spacing(format!("target spacing must be positive: {:?}", self.target_spacing)));
        }
        if !(self.gamma > 0.0) {
            return Err(Error::InvalidArgument(format!("gamma must be positive, got {}", self.gamma)));
        }
        if !(0.0 <= self.p_lo && self.p_lo < self.p_hi && self.p_hi <= 100.0) {
            return Err(Error::InvalidArgument(format!("need 0 <= p_lo < p_hi <= 100, got {} / {}", self.p_lo, self.p_hi)));
        }
        Ok(())
    }
}

const MAD_TO_SIGMA: f64 = 0.6745;

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Robust noise level: `median(|∇²I|) / 0.6745 / √20` over interior pixels,
/// with the 4-neighbour Laplacian (whose squared weights sum to 20).
pub fn estimate_noise_sigma(slice: &Image2) -> f64 {
    let (w, h) = (slice.width(), slice.height());
    if w < 3 || h < 3 {
        return 0.0;
    }
    let mut lap = Vec::with_capacity((w - 2) * (h - 2));
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let l = slice.get(x - 1, y) + slice.get(x + 1, y) + slice.get(x, y - 1) + slice.get(x, y + 1)
                - 4.0 * slice.get(x, y);
            lap.push(l.abs());
        }
    }
    median(lap) / MAD_TO_SIGMA / 20f64.sqrt()
}

/// Non-local means: each pixel becomes a weighted mean of its search window
/// with weights `exp(−max(d² − 2σ², 0) / h²)`, `d²` the mean squared
/// difference between the two patches (edge-replicated at the border).
pub fn denoise_nlm(slice: &Image2, sigma: f64, cfg: &NlmConfig) -> Image2 {
    if !(sigma > 0.0) {
        return slice.clone();
    }
    let (w, h) = (slice.width() as isize, slice.height() as isize);
    let pr = cfg.patch_radius as isize;
    let sr = cfg.search_radius as isize;
    let pad = pr + sr;
    let pw = w + 2 * pad;
    let padded: Vec<f64> = (0..(h + 2 * pad))
        .flat_map(|y| (0..pw).map(move |x| (x, y)))
        .map(|(x, y)| slice.get((x - pad).clamp(0, w - 1) as usize, (y - pad).clamp(0, h - 1) as usize))
        .collect();
    let at = |x: isize, y: isize| padded[((y + pad) * pw + x + pad) as usize];
    let h2 = (cfg.h_factor * sigma).powi(2);
    let two_s2 = 2.0 * sigma * sigma;
    let npatch = ((2 * pr + 1) * (2 * pr + 1)) as f64;

    Grid2::from_fn(slice.width(), slice.height(), |x, y| {
        let (x, y) = (x as isize, y as isize);
        let (mut num, mut den) = (0.0, 0.0);
        for qy in (y - sr).max(0)..=(y + sr).min(h - 1) {
            for qx in (x - sr).max(0)..=(x + sr).min(w - 1) {
                let mut d2 = 0.0;
                for oy in -pr..=pr {
                    for ox in -pr..=pr {
                        let diff = at(x + ox, y + oy) - at(qx + ox, qy + oy);
                        d2 += diff * diff;
                    }
                }
                d2 /= npatch;
                let wgt = (-(d2 - two_s2).max(0.0) / h2).exp();
                num += wgt * at(qx, qy);
                den += wgt;
            }
        }
        num / den
    })
}

/// Output grid size and source coordinate step for one axis.
fn axis_plan(n: usize, src: f64, dst: f64) -> (usize, f64) {
    let m = ((n as f64 * src / dst).round() as usize).max(1);
    (m, dst / src)
}

fn lerp_coord(pos: f64, n: usize) -> (usize, usize, f64) {
    let p = pos.clamp(0.0, (n - 1) as f64);
    let i0 = p.floor() as usize;
    let i1 = (i0 + 1).min(n - 1);
    (i0, i1, p - i0 as f64)
}

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * b.abs()
}

fn check_through_plane(src: [f64; 3], target: [f64; 3], allow: bool) -> Result<()> {
    if !same(src[2], target[2]) && !allow {
        return Err(Error::Spacing(format!(
            "slice spacing {} mm differs from target {} mm and through-plane resampling is disabled",
            src[2], target[2]
        )));
    }
    Ok(())
}

/// Bilinear in-plane resampling to `target` spacing. The first voxel centre
/// stays fixed and samples past the last source voxel clamp to the edge.
/// The slice axis is left untouched when its spacing already matches;
/// otherwise it is linearly resampled if `allow_through_plane` is set.
pub fn reslice(vol: &Volume, target: [f64; 3], allow_through_plane: bool) -> Result<Volume> {
    let src = vol.spacing();
    check_through_plane(src, target, allow_through_plane)?;
    let [nx, ny, nz] = vol.dims();
    if same(src[0], target[0]) && same(src[1], target[1]) && same(src[2], target[2]) {
        return Volume::from_vec(vol.dims(), target, vol.data().to_vec());
    }
    let (mx, stx) = axis_plan(nx, src[0], target[0]);
    let (my, sty) = axis_plan(ny, src[1], target[1]);
    let (mz, stz) = if same(src[2], target[2]) { (nz, 1.0) } else { axis_plan(nz, src[2], target[2]) };
    let mut out = Vec::with_capacity(mx * my * mz);
    for k in 0..mz {
        let (z0, z1, fz) = lerp_coord(k as f64 * stz, nz);
        for j in 0..my {
            let (y0, y1, fy) = lerp_coord(j as f64 * sty, ny);
            for i in 0..mx {
                let (x0, x1, fx) = lerp_coord(i as f64 * stx, nx);
                let plane = |z| {
                    let a = vol.get(x0, y0, z) * (1.0 - fx) + vol.get(x1, y0, z) * fx;
                    let b = vol.get(x0, y1, z) * (1.0 - fx) + vol.get(x1, y1, z) * fx;
                    a * (1.0 - fy) + b * fy
                };
                let v = if fz == 0.0 { plane(z0) } else { plane(z0) * (1.0 - fz) + plane(z1) * fz };
                out.push(v);
            }
        }
    }
    Volume::from_vec([mx, my, mz], target, out)
}

/// Nearest-neighbour counterpart of [`reslice`] for binary masks.
pub fn reslice_mask(mask: &Mask, target: [f64; 3], allow_through_plane: bool) -> Result<Mask> {
    let src = mask.spacing();
    check_through_plane(src, target, allow_through_plane)?;
    let [nx, ny, nz] = mask.dims();
    let (mx, stx) = axis_plan(nx, src[0], target[0]);
    let (my, sty) = axis_plan(ny, src[1], target[1]);
    let (mz, stz) = if same(src[2], target[2]) { (nz, 1.0) } else { axis_plan(nz, src[2], target[2]) };
    let nn = |i: usize, step: f64, n: usize| ((i as f64 * step).round() as usize).min(n - 1);
    let mut out = Vec::with_capacity(mx * my * mz);
    for k in 0..mz {
        let z = nn(k, stz, nz);
        for j in 0..my {
            let y = nn(j, sty, ny);
            for i in 0..mx {
                out.push(mask.get(nn(i, stx, nx), y, z));
            }
        }
    }
    Mask::from_vec([mx, my, mz], target, out)
}

/// Linear-interpolated percentile (`p` in 0..=100) of unsorted values.
pub fn percentile(values: &[f64], p: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = (p / 100.0).clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let i = pos.floor() as usize;
    let j = (i + 1).min(v.len() - 1);
    Some(v[i] + (v[j] - v[i]) * (pos - i as f64))
}

/// Affine map sending the `p_lo` percentile of myocardium to 0 and the
/// `p_hi` percentile of blood pool to 255, clamped; zero outside `epi`.
pub fn normalize_slice(
    slice: &Image2,
    myo: &Mask2,
    bloodpool: &Mask2,
    epi: &Mask2,
    p_lo: f64,
    p_hi: f64,
) -> Result<Image2> {
    let lo = percentile(&slice.values_in(myo), p_lo).ok_or(Error::EmptyRegion("myocardium"))?;
    let hi = percentile(&slice.values_in(bloodpool), p_hi).ok_or(Error::EmptyRegion("blood pool"))?;
    if !(hi > lo) {
        return Err(Error::DegenerateRange { lo, hi });
    }
    let scale = 255.0 / (hi - lo);
    Ok(Grid2::from_fn(slice.width(), slice.height(), |x, y| {
        if epi.get(x, y) {
            ((slice.get(x, y) - lo) * scale).clamp(0.0, 255.0)
        } else {
            0.0
        }
    }))
}

/// `255 · (v / 255)^γ`.
pub fn gamma_enhance(slice: &Image2, gamma: f64) -> Image2 {
    slice.map(|v| 255.0 * (v.clamp(0.0, 255.0) / 255.0).powf(gamma))
}

/// Full pipeline: denoise → reslice (masks nearest-neighbour) → per-slice
/// normalisation → gamma. Slices without myocardium or blood pool are zeroed.
pub fn preprocess_case(case: &LabeledCase, cfg: &PreprocessConfig) -> Result<LabeledCase> {
    cfg.validate()?;
    case.validate()?;
    let nz = case.nz();

    let mut denoised = case.volume.clone();
    if cfg.denoise {
        let slices: Vec<Image2> = crate::par::map_range(nz, |z| {
            let s = case.volume.slice(z);
            denoise_nlm(&s, estimate_noise_sigma(&s), &cfg.nlm)
        });
        for (z, s) in slices.iter().enumerate() {
            denoised.set_slice(z, s);
        }
    }

    let t = cfg.target_spacing;
    let allow = cfg.allow_through_plane;
    let volume = reslice(&denoised, t, allow)?;
    let rm = |m: &Mask| reslice_mask(m, t, allow);
    let ro = |m: &Option<Mask>| m.as_ref().map(rm).transpose();
    let myocardium = rm(&case.myocardium)?;
    let endocardium = rm(&case.endocardium)?;
    let epicardium = rm(&case.epicardium)?;

    let out_nz = volume.nz();
    let slices: Vec<Result<Image2>> = crate::par::map_range(out_nz, |z| {
        let (myo, bp, epi) = (myocardium.slice(z), endocardium.slice(z), epicardium.slice(z));
        let s = volume.slice(z);
        if !myo.any() || !bp.any() {
            return Ok(Grid2::new(s.width(), s.height(), 0.0));
        }
        let n = normalize_slice(&s, &myo, &bp, &epi, cfg.p_lo, cfg.p_hi)?;
        Ok(gamma_enhance(&n, cfg.gamma))
    });
    let mut out = volume.clone();
    for (z, s) in slices.into_iter().enumerate() {
        out.set_slice(z, &s?);
    }

    let slice_labels = match &case.slice_labels {
        Some(l) if out_nz == nz => Some(l.clone()),
        Some(l) => {
            let step = t[2] / case.volume.spacing()[2];
            Some((0..out_nz).map(|k| l[((k as f64 * step).round() as usize).min(nz - 1)]).collect())
        }
        None => None,
    };
    Ok(LabeledCase {
        case_id: case.case_id.clone(),
        volume: out,
        myocardium,
        endocardium,
        epicardium,
        gt_scar: ro(&case.gt_scar)?,
        gt_mvo: ro(&case.gt_mvo)?,
        remote: ro(&case.remote)?,
        slice_labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn noise(seed: u64, w: usize, h: usize, sigma: f64) -> Image2 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = Normal::new(0.0, sigma).unwrap();
        Grid2::from_fn(w, h, |_, _| n.sample(&mut rng))
    }

    #[test]
    fn noise_estimate_cases() {
        assert_eq!(estimate_noise_sigma(&Grid2::new(8, 8, 42.0)), 0.0);
        let mean: f64 = (0..20).map(|s| estimate_noise_sigma(&noise(s, 256, 256, 10.0))).sum::<f64>() / 20.0;
        assert!((mean - 10.0).abs() < 1.5, "mean estimate {mean}");
        for s in 0..20 {
            let e = estimate_noise_sigma(&noise(100 + s, 256, 256, 10.0));
            assert!((8.5..=11.5).contains(&e), "seed {s}: {e}");
        }
        // Laplacian of a ±1 checkerboard is ∓8 everywhere
        let cb = Grid2::from_fn(16, 16, |x, y| 100.0 + if (x + y) % 2 == 0 { 1.0 } else { -1.0 });
        let want = 8.0 / MAD_TO_SIGMA / 20f64.sqrt();
        assert!((estimate_noise_sigma(&cb) - want).abs() < 1e-12);
    }

    #[test]
    fn nlm_degenerate_cases() {
        let n = noise(1, 12, 12, 5.0);
        assert_eq!(denoise_nlm(&n, 0.0, &NlmConfig::default()), n);
        let c = Grid2::new(10, 10, 7.0);
        assert_eq!(denoise_nlm(&c, 3.0, &NlmConfig::default()), c);
    }

    #[test]
    fn nlm_reduces_error_on_step_edge() {
        for seed in 0..5 {
            let clean = Grid2::from_fn(32, 32, |x, _| if x < 16 { 50.0 } else { 150.0 });
            let nz = noise(seed, 32, 32, 10.0);
            let noisy = Grid2::from_vec(32, 32, clean.data().iter().zip(nz.data()).map(|(a, b)| a + b).collect());
            let out = denoise_nlm(&noisy, estimate_noise_sigma(&noisy), &NlmConfig::default());
            let mse = |g: &Image2| g.data().iter().zip(clean.data()).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
            assert!(mse(&out) < mse(&noisy), "seed {seed}");
            let (lo, hi) = noisy.min_max();
            let (olo, ohi) = out.min_max();
            assert!(olo >= lo && ohi <= hi);
        }
    }

    fn ramp_volume(n: usize, sp: f64) -> Volume {
        let mut v = Volume::new([n, n, 2], [sp, sp, 8.0], 0.0).unwrap();
        for z in 0..2 {
            for y in 0..n {
                for x in 0..n {
                    v.set(x, y, z, 3.0 * x as f64 * sp - 2.0 * y as f64 * sp + z as f64);
                }
            }
        }
        v
    }

    #[test]
    fn reslice_identity_and_downsample() {
        let v = ramp_volume(8, 1.25);
        assert_eq!(reslice(&v, CANONICAL_SPACING, false).unwrap(), v);
        let d = reslice(&v, [2.5, 2.5, 8.0], false).unwrap();
        assert_eq!(d.dims(), [4, 4, 2]);
        for (i, j) in [(0, 0), (1, 3), (3, 2)] {
            assert_eq!(d.get(i, j, 1), v.get(2 * i, 2 * j, 1));
        }
    }

    #[test]
    fn reslice_upsample_matches_affine_oracle() {
        let v = ramp_volume(16, 1.91);
        let u = reslice(&v, CANONICAL_SPACING, false).unwrap();
        let n = (16.0f64 * 1.91 / 1.25).round() as usize;
        assert_eq!(u.dims(), [n, n, 2]);
        for j in 0..n {
            for i in 0..n {
                // physical position of the output sample, clamped to the source extent
                let px = (i as f64 * 1.25).min(15.0 * 1.91);
                let py = (j as f64 * 1.25).min(15.0 * 1.91);
                let want = 3.0 * px - 2.0 * py + 1.0;
                assert!((u.get(i, j, 1) - want).abs() < 1e-9, "({i},{j})");
            }
        }
    }

    #[test]
    fn reslice_rejects_through_plane() {
        let v = Volume::new([4, 4, 3], [1.25, 1.25, 10.0], 0.0).unwrap();
        assert!(matches!(reslice(&v, CANONICAL_SPACING, false), Err(Error::Spacing(_))));
        let r = reslice(&v, CANONICAL_SPACING, true).unwrap();
        assert_eq!(r.dims(), [4, 4, 4]);
    }

    #[test]
    fn normalisation_examples() {
        let s = Grid2::from_fn(4, 1, |x, _| [10.0, 20.0, 30.0, 40.0][x]);
        let myo = Grid2::from_vec(4, 1, vec![true, true, false, false]);
        let bp = Grid2::from_vec(4, 1, vec![false, false, true, true]);
        let epi = Grid2::new(4, 1, true);
        let n = normalize_slice(&s, &myo, &bp, &epi, 0.0, 100.0).unwrap();
        assert_eq!(n.data(), &[0.0, 85.0, 170.0, 255.0]);

        let c = Grid2::new(4, 1, 5.0);
        assert!(matches!(normalize_slice(&c, &myo, &bp, &epi, 1.0, 99.0), Err(Error::DegenerateRange { .. })));
        let none = Grid2::new(4, 1, false);
        assert!(matches!(normalize_slice(&s, &none, &bp, &epi, 1.0, 99.0), Err(Error::EmptyRegion(_))));

        let partial_epi = Grid2::from_vec(4, 1, vec![true, true, true, false]);
        let n = normalize_slice(&s, &myo, &bp, &partial_epi, 0.0, 100.0).unwrap();
        assert_eq!(n.get(3, 0), 0.0);
    }

    #[test]
    fn gamma_examples() {
        let s = Grid2::from_vec(3, 1, vec![0.0, 127.5, 255.0]);
        assert_eq!(gamma_enhance(&s, 1.0), s);
        let g = gamma_enhance(&s, 2.0);
        assert_eq!(g.data(), &[0.0, 63.75, 255.0]);
        assert_eq!(gamma_enhance(&s, 0.3).get(2, 0), 255.0);
    }

    #[test]
    fn percentile_interpolates() {
        assert_eq!(percentile(&[4.0, 1.0, 3.0, 2.0], 50.0), Some(2.5));
        assert_eq!(percentile(&[4.0, 1.0], 0.0), Some(1.0));
        assert_eq!(percentile(&[], 10.0), None);
    }
}
