//! Browser bindings: generate a phantom slice, show the oriented top-hat
//! enhancement, and compare the coarse cascade with a baseline threshold.

use scarseg::baselines::{run_baseline, Method};
use scarseg::metrics::dice2;
use scarseg::phantom::{generate_case, PhantomSpec, ScarSpec};
use scarseg::preprocess::{preprocess_case, PreprocessConfig};
use scarseg::segment::{boundary_region, segment_case, tophat_enhance, Gate, SegmentOptions};
use scarseg::{Grid2, Image2, LabeledCase, Mask2};
use wasm_bindgen::prelude::*;

const SCAR: [u8; 3] = [230, 40, 40];
const MVO: [u8; 3] = [60, 120, 255];
const TRUTH: [u8; 3] = [255, 220, 0];
const MYO: [u8; 3] = [40, 200, 90];

/// One preprocessed single-slice phantom and the latest segmentation.
#[wasm_bindgen]
pub struct Demo {
    case: LabeledCase,
    stats: String,
}

fn grey(img: &Image2) -> Vec<u8> {
    let mut out = Vec::with_capacity(img.len() * 4);
    for &v in img.data() {
        let g = v.clamp(0.0, 255.0).round() as u8;
        out.extend_from_slice(&[g, g, g, 255]);
    }
    out
}

fn tint(rgba: &mut [u8], mask: &Mask2, colour: [u8; 3], alpha: f64) {
    for (px, &m) in rgba.chunks_exact_mut(4).zip(mask.data()) {
        if m {
            for c in 0..3 {
                px[c] = (px[c] as f64 * (1.0 - alpha) + colour[c] as f64 * alpha).round() as u8;
            }
        }
    }
}

fn outline(mask: &Mask2) -> Mask2 {
    let band = boundary_region(mask);
    Grid2::from_fn(mask.width(), mask.height(), |x, y| band.get(x, y) && mask.get(x, y))
}

impl Demo {
    pub fn build(seed: u64, extent_deg: f64, transmural: f64, mvo_fraction: f64) -> Result<Demo, String> {
        let scar = (extent_deg > 0.0).then(|| ScarSpec {
            extent_deg,
            transmural,
            mvo_fraction: (mvo_fraction > 0.0).then_some(mvo_fraction),
            ..ScarSpec::default()
        });
        let spec = PhantomSpec { dims: [96, 96, 1], scar, ..PhantomSpec::default() };
        let raw = generate_case(&spec, seed).map_err(|e| e.to_string())?;
        let case = preprocess_case(&raw, &PreprocessConfig::default()).map_err(|e| e.to_string())?;
        Ok(Demo { case, stats: "{}".into() })
    }

    fn slice(&self) -> Image2 {
        self.case.volume.slice(0)
    }

    fn truth(&self) -> Mask2 {
        match self.case.gt_infarct() {
            Some(m) => m.slice(0),
            None => Mask2::new(self.case.volume.dims()[0], self.case.volume.dims()[1], false),
        }
    }

    /// Scar and MVO masks for `method`: `cascade` or a baseline name such as `3sd`.
    pub fn segment_masks(&self, method: &str) -> Result<(Mask2, Mask2), String> {
        if method == "cascade" {
            let r = segment_case(&self.case, Gate::All, None, SegmentOptions { refine: false, mvo: true })
                .map_err(|e| e.to_string())?;
            return Ok((r.hyper.slice(0), r.mvo.slice(0)));
        }
        let m = Method::parse(method).ok_or_else(|| format!("unknown method `{method}`"))?;
        let r = run_baseline(&self.case, m).map_err(|e| e.to_string())?;
        let empty = Mask2::new(r.mask.dims()[0], r.mask.dims()[1], false);
        Ok((r.mask.slice(0), empty))
    }

    pub fn segment_overlay(&mut self, method: &str) -> Result<Vec<u8>, String> {
        let (scar, mvo) = self.segment_masks(method)?;
        let truth = self.truth();
        let pred = scar.or(&mvo);
        let d = dice2(&pred, &truth).map_err(|e| e.to_string())?;
        self.stats = serde_json::json!({
            "method": method,
            "dice": d,
            "predicted_px": pred.count(),
            "truth_px": truth.count(),
            "mvo_px": mvo.count(),
        })
        .to_string();
        let mut rgba = grey(&self.slice());
        tint(&mut rgba, &scar, SCAR, 0.55);
        tint(&mut rgba, &mvo, MVO, 0.65);
        tint(&mut rgba, &outline(&truth), TRUTH, 1.0);
        Ok(rgba)
    }
}

#[wasm_bindgen]
impl Demo {
    /// Generates and preprocesses a 96×96 slice. `extent_deg = 0` gives a healthy slice.
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32, extent_deg: f64, transmural: f64, mvo_fraction: f64) -> Result<Demo, JsError> {
        Self::build(seed as u64, extent_deg, transmural, mvo_fraction).map_err(|e| JsError::new(&e))
    }

    pub fn width(&self) -> usize {
        self.case.volume.dims()[0]
    }

    pub fn height(&self) -> usize {
        self.case.volume.dims()[1]
    }

    /// Preprocessed slice with the myocardium outlined, as RGBA bytes.
    pub fn image_rgba(&self) -> Vec<u8> {
        let mut rgba = grey(&self.slice());
        tint(&mut rgba, &outline(&self.case.myocardium.slice(0)), MYO, 0.6);
        rgba
    }

    /// Myocardium after adding the six oriented bar top-hats.
    pub fn tophat_rgba(&self) -> Vec<u8> {
        let myo = self.case.myocardium.slice(0);
        let enhanced = tophat_enhance(&self.slice(), &myo);
        let masked = Grid2::from_fn(enhanced.width(), enhanced.height(), |x, y| if myo.get(x, y) { enhanced.get(x, y) } else { 0.0 });
        grey(&masked)
    }

    /// Segmentation overlay (scar red, MVO blue, reference outline yellow).
    pub fn segment_rgba(&mut self, method: &str) -> Result<Vec<u8>, JsError> {
        self.segment_overlay(method).map_err(|e| JsError::new(&e))
    }

    /// JSON statistics of the last segmentation.
    pub fn stats(&self) -> String {
        self.stats.clone()
    }
}
