//! Synthetic LGE-like short-axis cases: an annular myocardium around a bright
//! blood pool, an optional endocardium-anchored scar sector and an optional
//! dark MVO core inside it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::case::{LabeledCase, SliceLabel};
use crate::error::{Error, Result};
use crate::volcore::{Grid2, Image2, Mask, Mask2, Volume};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntensityModel {
    /// Rayleigh scale of healthy myocardium.
    pub healthy_sigma: f64,
    pub scar_mean: f64,
    pub scar_sd: f64,
    pub blood_mean: f64,
    pub blood_sd: f64,
    pub mvo_mean: f64,
    pub mvo_sd: f64,
    /// Rayleigh scale of everything outside the heart.
    pub background_sigma: f64,
}

impl Default for IntensityModel {
    fn default() -> Self {
        Self {
            healthy_sigma: 40.0,
            scar_mean: 180.0,
            scar_sd: 25.0,
            blood_mean: 200.0,
            blood_sd: 25.0,
            mvo_mean: 50.0,
            mvo_sd: 15.0,
            background_sigma: 25.0,
        }
    }
}

impl IntensityModel {
    /// Mode of the healthy Rayleigh law.
    pub fn healthy_mode(&self) -> f64 {
        self.healthy_sigma
    }

    pub fn healthy_mean(&self) -> f64 {
        self.healthy_sigma * (std::f64::consts::PI / 2.0).sqrt()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScarSpec {
    /// Angular width of the sector in degrees.
    pub extent_deg: f64,
    /// Fraction of the wall thickness covered, measured from the endocardium.
    pub transmural: f64,
    /// Sector centre in degrees; drawn from the seed when absent.
    pub center_deg: Option<f64>,
    /// Inclusive slice range carrying scar; all slices when absent.
    pub slices: Option<[usize; 2]>,
    /// MVO core as a fraction of the scar sector area.
    pub mvo_fraction: Option<f64>,
}

impl Default for ScarSpec {
    fn default() -> Self {
        Self { extent_deg: 100.0, transmural: 0.7, center_deg: None, slices: None, mvo_fraction: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhantomSpec {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    /// Ring centre in mm; the field-of-view centre when absent.
    pub center_mm: Option<[f64; 2]>,
    /// Uniform per-slice jitter of the ring centre, in mm.
    pub center_jitter_mm: f64,
    pub inner_radius_mm: f64,
    pub outer_radius_mm: f64,
    /// Radius scale reached at the last slice (base at 1.0).
    pub apex_scale: f64,
    pub scar: Option<ScarSpec>,
    pub intensity: IntensityModel,
    /// Gaussian blur (pixels) of the tissue mean map; 0 disables it.
    pub blur_sigma_px: f64,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        Self {
            dims: [96, 96, 10],
            spacing: [1.25, 1.25, 8.0],
            center_mm: None,
            center_jitter_mm: 1.5,
            inner_radius_mm: 20.0,
            outer_radius_mm: 30.0,
            apex_scale: 0.75,
            scar: Some(ScarSpec::default()),
            intensity: IntensityModel::default(),
            blur_sigma_px: 0.7,
        }
    }
}

impl PhantomSpec {
    pub fn healthy() -> Self {
        Self { scar: None, ..Self::default() }
    }

    pub fn with_mvo(fraction: f64) -> Self {
        let scar = ScarSpec { mvo_fraction: Some(fraction), ..ScarSpec::default() };
        Self { scar: Some(scar), ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Spec(m));
        if self.dims.contains(&0) {
            return bad(format!("dims must be positive: {:?}", self.dims));
        }
        if self.spacing.iter().any(|&s| !(s > 0.0)) {
            return bad(format!("spacing must be positive: {:?}", self.spacing));
        }
        if !(self.inner_radius_mm > 0.0 && self.inner_radius_mm < self.outer_radius_mm) {
            return bad(format!(
                "need 0 < inner radius < outer radius, got {} / {}",
                self.inner_radius_mm, self.outer_radius_mm
            ));
        }
        if !(self.apex_scale > 0.0 && self.apex_scale <= 1.0) {
            return bad(format!("apex_scale must lie in (0, 1], got {}", self.apex_scale));
        }
        if !(self.center_jitter_mm >= 0.0) || !(self.blur_sigma_px >= 0.0) {
            return bad("jitter and blur must be non-negative".into());
        }
        let im = &self.intensity;
        let positive = [im.healthy_sigma, im.scar_sd, im.blood_sd, im.mvo_sd, im.background_sigma];
        if positive.iter().any(|&v| !(v > 0.0)) {
            return bad("intensity spreads must be positive".into());
        }
        if let Some(s) = &self.scar {
            if !(s.extent_deg > 0.0 && s.extent_deg <= 360.0) {
                return bad(format!("scar extent must lie in (0, 360], got {}", s.extent_deg));
            }
            if !(s.transmural > 0.0 && s.transmural <= 1.0) {
                return bad(format!("transmural fraction must lie in (0, 1], got {}", s.transmural));
            }
            if im.scar_mean <= im.healthy_mode() {
                return bad("scar mean must exceed the healthy mode".into());
            }
            if let Some([a, b]) = s.slices {
                if a > b || b >= self.dims[2] {
                    return bad(format!("scar slice range {a}..={b} outside 0..{}", self.dims[2]));
                }
            }
            if let Some(f) = s.mvo_fraction {
                if !(f > 0.0 && f < 1.0) {
                    return bad(format!("MVO fraction must lie in (0, 1), got {f}"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Tissue {
    Background,
    Blood,
    Healthy,
    Scar,
    Mvo,
}

fn rayleigh(rng: &mut ChaCha8Rng, sigma: f64) -> f64 {
    let u: f64 = rng.random();
    sigma * (-2.0 * (1.0 - u).ln()).sqrt()
}

fn angle_diff_deg(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

fn gaussian_blur(img: &Image2, sigma: f64) -> Image2 {
    if sigma <= 0.0 {
        return img.clone();
    }
    let r = (3.0 * sigma).ceil() as isize;
    let k: Vec<f64> = (-r..=r).map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let ks: f64 = k.iter().sum();
    let (w, h) = (img.width() as isize, img.height() as isize);
    let pass = |src: &Image2, dx: isize, dy: isize| {
        Grid2::from_fn(src.width(), src.height(), |x, y| {
            let mut acc = 0.0;
            for (j, kv) in k.iter().enumerate() {
                let o = j as isize - r;
                let sx = (x as isize + o * dx).clamp(0, w - 1) as usize;
                let sy = (y as isize + o * dy).clamp(0, h - 1) as usize;
                acc += kv * src.get(sx, sy);
            }
            acc / ks
        })
    };
    pass(&pass(img, 1, 0), 0, 1)
}

/// Drops MVO pixels until every 4-neighbour of the core lies in MVO, scar or
/// blood pool.
fn enclose_mvo(mvo: &mut Mask2, scar: &Mask2, endo: &Mask2) {
    loop {
        let mut changed = false;
        for y in 0..mvo.height() {
            for x in 0..mvo.width() {
                if !mvo.get(x, y) {
                    continue;
                }
                let open = [(-1, 0), (1, 0), (0, -1), (0, 1)].iter().any(|&(dx, dy)| {
                    let (nx, ny) = (x as isize + dx, y as isize + dy);
                    match mvo.get_signed(nx, ny) {
                        None => true,
                        Some(m) => {
                            let (ux, uy) = (nx as usize, ny as usize);
                            !(m || scar.get(ux, uy) || endo.get(ux, uy))
                        }
                    }
                });
                if open {
                    mvo.set(x, y, false);
                    changed = true;
                }
            }
        }
        if !changed {
            return;
        }
    }
}

/// Draws one case; identical `(spec, seed)` give bit-identical output.
pub fn generate_case(spec: &PhantomSpec, seed: u64) -> Result<LabeledCase> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let [nx, ny, nz] = spec.dims;
    let [sx, sy, _] = spec.spacing;
    let centre = spec.center_mm.unwrap_or([nx as f64 * sx / 2.0, ny as f64 * sy / 2.0]);
    let scar_centre = spec
        .scar
        .as_ref()
        .map(|s| s.center_deg.unwrap_or_else(|| rng.random_range(0.0..360.0)));
    let im = &spec.intensity;
    let scar_n = Normal::new(im.scar_mean, im.scar_sd).expect("validated");
    let blood_n = Normal::new(im.blood_mean, im.blood_sd).expect("validated");
    let mvo_n = Normal::new(im.mvo_mean, im.mvo_sd).expect("validated");

    let mut vol = Volume::new(spec.dims, spec.spacing, 0.0)?;
    let mut endo_v = Mask::new(spec.dims, spec.spacing, false)?;
    let mut epi_v = endo_v.clone();
    let mut myo_v = endo_v.clone();
    let mut scar_v = endo_v.clone();
    let mut mvo_v = endo_v.clone();
    let mut remote_v = endo_v.clone();
    let mut labels = Vec::with_capacity(nz);

    for z in 0..nz {
        let t = if nz > 1 { z as f64 / (nz - 1) as f64 } else { 0.0 };
        let scale = 1.0 + (spec.apex_scale - 1.0) * t;
        let ri = spec.inner_radius_mm * scale;
        let ro = spec.outer_radius_mm * scale;
        let j = spec.center_jitter_mm;
        let (jx, jy) = if j > 0.0 { (rng.random_range(-j..=j), rng.random_range(-j..=j)) } else { (0.0, 0.0) };
        let (cx, cy) = (centre[0] + jx, centre[1] + jy);
        let polar = |x: usize, y: usize| {
            let (dx, dy) = (x as f64 * sx - cx, y as f64 * sy - cy);
            ((dx * dx + dy * dy).sqrt(), dy.atan2(dx).to_degrees())
        };
        let endo = Grid2::from_fn(nx, ny, |x, y| polar(x, y).0 < ri);
        let epi = Grid2::from_fn(nx, ny, |x, y| polar(x, y).0 < ro);
        let myo = epi.minus(&endo);

        let scar_here = match (&spec.scar, scar_centre) {
            (Some(s), Some(c)) if s.slices.is_none_or(|[a, b]| (a..=b).contains(&z)) => Some((s, c)),
            _ => None,
        };
        let (mut scar, mut mvo) = (Grid2::new(nx, ny, false), Grid2::new(nx, ny, false));
        let mut remote = Grid2::new(nx, ny, false);
        if let Some((s, c)) = scar_here {
            let wall = ro - ri;
            scar = Grid2::from_fn(nx, ny, |x, y| {
                let (r, a) = polar(x, y);
                myo.get(x, y) && angle_diff_deg(a, c) <= s.extent_deg / 2.0 && r < ri + s.transmural * wall
            });
            if let Some(f) = s.mvo_fraction {
                let k = f.sqrt();
                mvo = Grid2::from_fn(nx, ny, |x, y| {
                    let (r, a) = polar(x, y);
                    scar.get(x, y) && angle_diff_deg(a, c) <= k * s.extent_deg / 2.0 && r < ri + k * s.transmural * wall
                });
                enclose_mvo(&mut mvo, &scar, &endo);
                scar = scar.minus(&mvo);
            }
        }
        if let Some(c) = scar_centre {
            remote = Grid2::from_fn(nx, ny, |x, y| myo.get(x, y) && angle_diff_deg(polar(x, y).1, c + 180.0) <= 30.0);
        }
        labels.push(if scar.any() || mvo.any() { SliceLabel::Diseased } else { SliceLabel::Healthy });

        let tissue = Grid2::from_fn(nx, ny, |x, y| {
            if mvo.get(x, y) {
                Tissue::Mvo
            } else if scar.get(x, y) {
                Tissue::Scar
            } else if myo.get(x, y) {
                Tissue::Healthy
            } else if endo.get(x, y) {
                Tissue::Blood
            } else {
                Tissue::Background
            }
        });
        let mean_of = |t: Tissue| match t {
            Tissue::Background => im.background_sigma * (std::f64::consts::PI / 2.0).sqrt(),
            Tissue::Blood => im.blood_mean,
            Tissue::Healthy => im.healthy_mean(),
            Tissue::Scar => im.scar_mean,
            Tissue::Mvo => im.mvo_mean,
        };
        let means = tissue.map(mean_of);
        let blurred = gaussian_blur(&means, spec.blur_sigma_px);
        for y in 0..ny {
            for x in 0..nx {
                let t = tissue.get(x, y);
                let sample = match t {
                    Tissue::Background => rayleigh(&mut rng, im.background_sigma),
                    Tissue::Blood => blood_n.sample(&mut rng),
                    Tissue::Healthy => rayleigh(&mut rng, im.healthy_sigma),
                    Tissue::Scar => scar_n.sample(&mut rng),
                    Tissue::Mvo => mvo_n.sample(&mut rng),
                };
                let v = (blurred.get(x, y) + sample - mean_of(t)).max(0.0);
                vol.set(x, y, z, v as f32 as f64);
            }
        }
        endo_v.set_slice(z, &endo);
        epi_v.set_slice(z, &epi);
        myo_v.set_slice(z, &myo);
        scar_v.set_slice(z, &scar);
        mvo_v.set_slice(z, &mvo);
        remote_v.set_slice(z, &remote);
    }

    let has_scar = spec.scar.is_some();
    let has_mvo = spec.scar.as_ref().is_some_and(|s| s.mvo_fraction.is_some());
    Ok(LabeledCase {
        case_id: format!("phantom_{seed:04}"),
        volume: vol,
        myocardium: myo_v,
        endocardium: endo_v,
        epicardium: epi_v,
        gt_scar: Some(scar_v),
        gt_mvo: has_mvo.then_some(mvo_v),
        remote: has_scar.then_some(remote_v),
        slice_labels: Some(labels),
    })
}
