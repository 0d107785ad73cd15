//! Reference thresholding methods: n-SD from remote myocardium, Otsu, FWHM
//! and a two-component Gaussian mixture.

mod gmm;

pub use gmm::{gmm_fit, gmm_segment, Gmm2, GMM_MAX_ITER, GMM_TOL};

use serde::{Deserialize, Serialize};

use crate::case::LabeledCase;
use crate::error::{Error, Result};
use crate::metrics::mean_sd;
use crate::volcore::{otsu_threshold, intensity_level, Grid2, Histogram, Image2, Mask, Mask2};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RemoteSource {
    Provided,
    Auto,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RemoteRegion {
    pub mask: Mask2,
    pub source: RemoteSource,
}

/// Sector index 0..6 of each myocardial pixel around `(cx, cy)`.
pub fn sector_of(x: usize, y: usize, cx: f64, cy: f64) -> usize {
    let a = (y as f64 - cy).atan2(x as f64 - cx).to_degrees().rem_euclid(360.0);
    ((a / 60.0) as usize).min(5)
}

/// Darkest of six 60° myocardial sectors about the blood-pool centroid
/// (myocardial centroid when the blood pool is empty); ties go to the
/// lowest sector index.
pub fn auto_remote_region(slice: &Image2, myo: &Mask2, endo: &Mask2) -> Result<RemoteRegion> {
    let (cx, cy) = endo.centroid().or_else(|| myo.centroid()).ok_or(Error::EmptyMask("myocardium"))?;
    let mut sum = [0.0; 6];
    let mut cnt = [0usize; 6];
    for (x, y, m) in myo.iter_xy() {
        if m {
            let s = sector_of(x, y, cx, cy);
            sum[s] += slice.get(x, y);
            cnt[s] += 1;
        }
    }
    let mut best: Option<(usize, f64)> = None;
    for s in 0..6 {
        if cnt[s] == 0 {
            continue;
        }
        let mean = sum[s] / cnt[s] as f64;
        if best.is_none_or(|(_, b)| mean < b) {
            best = Some((s, mean));
        }
    }
    let (s, _) = best.ok_or(Error::EmptyMask("myocardium"))?;
    let mask = Grid2::from_fn(myo.width(), myo.height(), |x, y| myo.get(x, y) && sector_of(x, y, cx, cy) == s);
    Ok(RemoteRegion { mask, source: RemoteSource::Auto })
}

fn above(slice: &Image2, myo: &Mask2, keep: impl Fn(f64) -> bool) -> Mask2 {
    Grid2::from_fn(slice.width(), slice.height(), |x, y| myo.get(x, y) && keep(slice.get(x, y)))
}

/// Remote mean and sample SD.
pub fn remote_stats(slice: &Image2, remote: &Mask2) -> Result<(f64, f64)> {
    let v = slice.values_in(remote);
    if v.is_empty() {
        return Err(Error::EmptyRegion("remote myocardium"));
    }
    Ok(mean_sd(&v))
}

/// `{v ∈ myo : I(v) > μ_r + n·σ_r}`.
pub fn nsd_segment(slice: &Image2, myo: &Mask2, remote: &Mask2, n: f64) -> Result<Mask2> {
    let (mu, sd) = remote_stats(slice, remote)?;
    let t = mu + n * sd;
    Ok(above(slice, myo, |v| v > t))
}

/// `{v ∈ myo : I(v) ≥ ½ max_myo I}`.
pub fn fwhm_segment(slice: &Image2, myo: &Mask2) -> Result<Mask2> {
    let v = slice.values_in(myo);
    if v.is_empty() {
        return Err(Error::EmptyMask("myocardium"));
    }
    let t = 0.5 * v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(above(slice, myo, |x| x >= t))
}

/// Otsu on the un-enhanced myocardial histogram, no opening.
pub fn otsu_segment(slice: &Image2, myo: &Mask2) -> Result<Mask2> {
    let v = slice.values_in(myo);
    if v.is_empty() {
        return Err(Error::EmptyRegion("myocardium"));
    }
    let t = otsu_threshold(&Histogram::from_values(v))?;
    Ok(above(slice, myo, |x| intensity_level(x) > t))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    Nsd(u8),
    Otsu,
    Fwhm,
    Gmm,
}

impl Method {
    /// The nine comparators: 1- to 6-SD, Otsu, FWHM, GMM.
    pub fn all() -> Vec<Method> {
        let mut m: Vec<Method> = (1..=6).map(Method::Nsd).collect();
        m.extend([Method::Otsu, Method::Fwhm, Method::Gmm]);
        m
    }

    pub fn name(&self) -> String {
        match self {
            Method::Nsd(n) => format!("{n}sd"),
            Method::Otsu => "otsu".into(),
            Method::Fwhm => "fwhm".into(),
            Method::Gmm => "gmm".into(),
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        match s.to_ascii_lowercase().as_str() {
            "otsu" => Some(Method::Otsu),
            "fwhm" => Some(Method::Fwhm),
            "gmm" => Some(Method::Gmm),
            other => other.strip_suffix("sd").and_then(|n| n.parse().ok()).filter(|n| (1..=6).contains(n)).map(Method::Nsd),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BaselineResult {
    pub method: Method,
    pub mask: Mask,
    /// Per-slice remote origin for n-SD (None elsewhere or when skipped).
    pub remote_source: Vec<Option<RemoteSource>>,
    pub warnings: Vec<(usize, String)>,
}

/// The provided remote mask on slice `z` when non-empty, else the auto sector.
pub fn remote_for_slice(case: &LabeledCase, z: usize) -> Result<RemoteRegion> {
    if let Some(r) = &case.remote {
        let s = r.slice(z).and(&case.myocardium.slice(z));
        if s.any() {
            return Ok(RemoteRegion { mask: s, source: RemoteSource::Provided });
        }
    }
    auto_remote_region(&case.volume.slice(z), &case.myocardium.slice(z), &case.endocardium.slice(z))
}

/// Applies `method` to every slice with myocardium; failing slices stay empty.
pub fn run_baseline(case: &LabeledCase, method: Method) -> Result<BaselineResult> {
    case.validate()?;
    let nz = case.nz();
    let per = crate::par::map_range(nz, |z| -> Option<(Result<Mask2>, Option<RemoteSource>)> {
        let myo = case.myocardium.slice(z);
        if !myo.any() {
            return None;
        }
        let img = case.volume.slice(z);
        Some(match method {
            Method::Nsd(n) => match remote_for_slice(case, z) {
                Ok(r) => (nsd_segment(&img, &myo, &r.mask, n as f64), Some(r.source)),
                Err(e) => (Err(e), None),
            },
            Method::Otsu => (otsu_segment(&img, &myo), None),
            Method::Fwhm => (fwhm_segment(&img, &myo), None),
            Method::Gmm => (gmm_fit(&img.values_in(&myo)).map(|g| gmm_segment(&img, &myo, &g)), None),
        })
    });
    let mut mask = Mask::empty_like(&case.volume);
    let mut remote_source = vec![None; nz];
    let mut warnings = Vec::new();
    for (z, r) in per.into_iter().enumerate() {
        match r {
            Some((Ok(m), src)) => {
                mask.set_slice(z, &m);
                remote_source[z] = src;
            }
            Some((Err(e), _)) => warnings.push((z, e.to_string())),
            None => {}
        }
    }
    Ok(BaselineResult { method, mask, remote_source, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantom::{generate_case, PhantomSpec, ScarSpec};

    #[test]
    fn nsd_threshold_formula() {
        // remote {40, 60}: mean 50, sample SD 14.142…
        let img = Grid2::from_vec(4, 1, vec![40.0, 60.0, 78.0, 79.0]);
        let remote = Grid2::from_vec(4, 1, vec![true, true, false, false]);
        let myo = Grid2::new(4, 1, true);
        let t = 50.0 + 2.0 * 200f64.sqrt();
        let m = nsd_segment(&img, &myo, &remote, 2.0).unwrap();
        assert_eq!(m.data(), &[false, false, 78.0 > t, 79.0 > t]);
        assert!(matches!(nsd_segment(&img, &myo, &Grid2::new(4, 1, false), 1.0), Err(Error::EmptyRegion(_))));
    }

    #[test]
    fn fwhm_examples() {
        let img = Grid2::from_vec(3, 1, vec![99.0, 100.0, 200.0]);
        let myo = Grid2::new(3, 1, true);
        assert_eq!(fwhm_segment(&img, &myo).unwrap().data(), &[false, true, true]);
        let flat = Grid2::new(3, 1, 7.0);
        assert!(fwhm_segment(&flat, &myo).unwrap().data().iter().all(|&b| b));
    }

    #[test]
    fn otsu_needs_myocardium() {
        let img = Grid2::new(3, 3, 1.0);
        assert!(otsu_segment(&img, &Grid2::new(3, 3, false)).is_err());
    }

    #[test]
    fn uniform_sectors_tie_to_zero() {
        let myo = Grid2::from_fn(21, 21, |x, y| {
            let r = ((x as f64 - 10.0).powi(2) + (y as f64 - 10.0).powi(2)).sqrt();
            (5.0..9.0).contains(&r)
        });
        let endo = Grid2::from_fn(21, 21, |x, y| ((x as f64 - 10.0).powi(2) + (y as f64 - 10.0).powi(2)).sqrt() < 5.0);
        let img = Grid2::new(21, 21, 30.0);
        let r = auto_remote_region(&img, &myo, &endo).unwrap();
        assert!(r.mask.iter_xy().filter(|p| p.2).all(|(x, y, _)| sector_of(x, y, 10.0, 10.0) == 0));
        // the six sectors partition the myocardium
        let mut total = 0;
        for s in 0..6 {
            total += myo.iter_xy().filter(|&(x, y, m)| m && sector_of(x, y, 10.0, 10.0) == s).count();
        }
        assert_eq!(total, myo.count());
    }

    #[test]
    fn auto_remote_avoids_scar() {
        for seed in 0..5 {
            let spec = PhantomSpec { dims: [96, 96, 2], scar: Some(ScarSpec { extent_deg: 60.0, ..ScarSpec::default() }), ..PhantomSpec::default() };
            let c = generate_case(&spec, seed).unwrap();
            for z in 0..2 {
                let r = auto_remote_region(&c.volume.slice(z), &c.myocardium.slice(z), &c.endocardium.slice(z)).unwrap();
                assert!(!r.mask.and(&c.gt_scar.as_ref().unwrap().slice(z)).any(), "seed {seed} slice {z}");
            }
        }
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::all() {
            assert_eq!(Method::parse(&m.name()), Some(m));
        }
        assert_eq!(Method::all().len(), 9);
        assert_eq!(Method::parse("7sd"), None);
    }
}
