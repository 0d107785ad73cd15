use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::mhd::{read_header, read_mask, read_volume, write_mask, write_volume, ElementType};
use crate::case::{LabeledCase, SliceLabel};
use crate::error::{Error, Result};

/// JSON description of one case. Relative paths resolve against the
/// manifest's own directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseManifest {
    pub case_id: String,
    pub volume: PathBuf,
    pub myocardium: PathBuf,
    pub endocardium: PathBuf,
    pub epicardium: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_scar: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_mvo: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub remote: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slice_labels: Option<Vec<SliceLabel>>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl CaseManifest {
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    fn masks(&self) -> Vec<(&'static str, &Path)> {
        let mut out: Vec<(&'static str, &Path)> = vec![
            ("myocardium", &self.myocardium),
            ("endocardium", &self.endocardium),
            ("epicardium", &self.epicardium),
        ];
        for (name, p) in [("gt_scar", &self.gt_scar), ("gt_mvo", &self.gt_mvo), ("remote", &self.remote)] {
            if let Some(p) = p {
                out.push((name, p));
            }
        }
        out
    }
}

/// Parses a manifest and checks every cross-file invariant from the headers.
pub fn read_manifest(path: &Path) -> Result<CaseManifest> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut m: CaseManifest =
        serde_json::from_str(&text).map_err(|e| Error::manifest(path, format!("invalid JSON: {e}")))?;
    m.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();

    let vol_path = m.resolve(&m.volume);
    if !vol_path.exists() {
        return Err(Error::manifest(path, format!("volume {} does not exist", vol_path.display())));
    }
    let vh = read_header(&vol_path).map_err(|e| Error::manifest(path, format!("volume: {e}")))?;
    for (name, p) in m.masks() {
        let mp = m.resolve(p);
        if !mp.exists() {
            return Err(Error::manifest(path, format!("{name} mask {} does not exist", mp.display())));
        }
        let mh = read_header(&mp).map_err(|e| Error::manifest(path, format!("{name}: {e}")))?;
        if mh.dims != vh.dims {
            return Err(Error::manifest(path, format!("{name} dims {:?} differ from volume dims {:?}", mh.dims, vh.dims)));
        }
        if mh.spacing != vh.spacing {
            return Err(Error::manifest(
                path,
                format!("{name} spacing {:?} differs from volume spacing {:?}", mh.spacing, vh.spacing),
            ));
        }
        if mh.element_type != ElementType::UChar {
            return Err(Error::manifest(path, format!("{name} must be MET_UCHAR")));
        }
    }
    if let Some(labels) = &m.slice_labels {
        if labels.len() != vh.dims[2] {
            return Err(Error::manifest(
                path,
                format!("slice_labels has {} entries but volume has {} slices", labels.len(), vh.dims[2]),
            ));
        }
    }
    Ok(m)
}

pub fn write_manifest(m: &CaseManifest, path: &Path) -> Result<()> {
    super::write_json(m, path)
}

/// Loads all payloads referenced by a validated manifest.
pub fn load_case(m: &CaseManifest) -> Result<LabeledCase> {
    let mask = |p: &Path| read_mask(&m.resolve(p));
    let opt = |p: &Option<PathBuf>| p.as_deref().map(mask).transpose();
    let case = LabeledCase {
        case_id: m.case_id.clone(),
        volume: read_volume(&m.resolve(&m.volume))?,
        myocardium: mask(&m.myocardium)?,
        endocardium: mask(&m.endocardium)?,
        epicardium: mask(&m.epicardium)?,
        gt_scar: opt(&m.gt_scar)?,
        gt_mvo: opt(&m.gt_mvo)?,
        remote: opt(&m.remote)?,
        slice_labels: m.slice_labels.clone(),
    };
    case.validate()?;
    Ok(case)
}

/// Writes `<dir>/<case_id>_*.mhd` payloads plus `<dir>/<case_id>.json`; returns the manifest path.
pub fn save_case(case: &LabeledCase, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let id = &case.case_id;
    let name = |suffix: &str| PathBuf::from(format!("{id}_{suffix}.mhd"));
    write_volume(&case.volume, &dir.join(name("image")))?;
    write_mask(&case.myocardium, &dir.join(name("myo")))?;
    write_mask(&case.endocardium, &dir.join(name("endo")))?;
    write_mask(&case.epicardium, &dir.join(name("epi")))?;
    let opt = |m: &Option<crate::volcore::Mask>, suffix: &str| -> Result<Option<PathBuf>> {
        match m {
            Some(m) => {
                write_mask(m, &dir.join(name(suffix)))?;
                Ok(Some(name(suffix)))
            }
            None => Ok(None),
        }
    };
    let manifest = CaseManifest {
        case_id: id.clone(),
        volume: name("image"),
        myocardium: name("myo"),
        endocardium: name("endo"),
        epicardium: name("epi"),
        gt_scar: opt(&case.gt_scar, "gt_scar")?,
        gt_mvo: opt(&case.gt_mvo, "gt_mvo")?,
        remote: opt(&case.remote, "remote")?,
        slice_labels: case.slice_labels.clone(),
        base_dir: dir.to_path_buf(),
    };
    let path = dir.join(format!("{id}.json"));
    write_manifest(&manifest, &path)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volcore::{Mask, Volume};

    fn tiny_case(nz: usize) -> LabeledCase {
        let sp = [1.25, 1.25, 8.0];
        let vol = Volume::new([4, 4, nz], sp, 1.0).unwrap();
        let m = Mask::new([4, 4, nz], sp, false).unwrap();
        LabeledCase {
            case_id: "c0".into(),
            volume: vol,
            myocardium: m.clone(),
            endocardium: m.clone(),
            epicardium: m,
            gt_scar: None,
            gt_mvo: None,
            remote: None,
            slice_labels: Some(vec![SliceLabel::Healthy; nz]),
        }
    }

    #[test]
    fn healthy_case_without_gt_is_valid() {
        let dir = tempfile::tempdir().unwrap();
        let p = save_case(&tiny_case(2), dir.path()).unwrap();
        let m = read_manifest(&p).unwrap();
        assert!(m.gt_scar.is_none());
        let c = load_case(&m).unwrap();
        assert_eq!(c, tiny_case(2));
    }

    #[test]
    fn rejects_dim_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let p = save_case(&tiny_case(2), dir.path()).unwrap();
        let other = Mask::new([4, 5, 2], [1.25, 1.25, 8.0], false).unwrap();
        write_mask(&other, &dir.path().join("c0_myo.mhd")).unwrap();
        let err = read_manifest(&p).unwrap_err();
        assert!(matches!(err, Error::Manifest { ref msg, .. } if msg.contains("myocardium")), "{err}");
    }

    #[test]
    fn rejects_label_count_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = tiny_case(2);
        c.slice_labels = Some(vec![SliceLabel::Healthy; 3]);
        let p = save_case(&c, dir.path()).unwrap();
        let err = read_manifest(&p).unwrap_err();
        assert!(matches!(err, Error::Manifest { ref msg, .. } if msg.contains("slice_labels")), "{err}");
    }

    #[test]
    fn rejects_missing_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = save_case(&tiny_case(1), dir.path()).unwrap();
        std::fs::remove_file(dir.path().join("c0_epi.mhd")).unwrap();
        assert!(matches!(read_manifest(&p), Err(Error::Manifest { .. })));
    }
}
