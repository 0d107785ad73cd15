//! On-disk formats: MetaImage volumes and masks, JSON case manifests and
//! model files, CSV metric reports.

pub mod b64;
mod manifest;
mod mhd;
mod report;

pub use manifest::{load_case, read_manifest, save_case, write_manifest, CaseManifest};
pub use mhd::{read_header, read_mask, read_volume, write_mask, write_volume, ElementType, MetaHeader};
pub use report::{read_report, write_report, MetricsReport, ReportRow, REPORT_COLUMNS};

use std::path::Path;

use serde::{de::DeserializeOwned, Serialize};

use crate::error::{Error, Result};

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Json { path: path.into(), source: e })?;
    s.push('\n');
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&s).map_err(|e| Error::Json { path: path.into(), source: e })
}
