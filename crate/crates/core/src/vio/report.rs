use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const REPORT_COLUMNS: [&str; 8] = [
    "case_id",
    "slice",
    "method",
    "dice_pct",
    "hausdorff_mm",
    "scar_volume_cm3",
    "pct_infarct",
    "mvo_sensitivity",
];

/// One evaluation row. `slice = None` marks a whole-case row. Undefined
/// metrics (e.g. Hausdorff with an empty operand) stay `None` and are
/// written as blank cells.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub case_id: String,
    pub slice: Option<usize>,
    pub method: String,
    pub dice_pct: Option<f64>,
    pub hausdorff_mm: Option<f64>,
    pub scar_volume_cm3: Option<f64>,
    pub pct_infarct: Option<f64>,
    pub mvo_sensitivity: Option<f64>,
}

impl ReportRow {
    pub fn new(case_id: impl Into<String>, slice: Option<usize>, method: impl Into<String>) -> Self {
        Self {
            case_id: case_id.into(),
            slice,
            method: method.into(),
            dice_pct: None,
            hausdorff_mm: None,
            scar_volume_cm3: None,
            pct_infarct: None,
            mvo_sensitivity: None,
        }
    }

    /// Sets Dice from a fraction in [0, 1].
    pub fn with_dice(mut self, dice: f64) -> Self {
        self.dice_pct = Some(100.0 * dice);
        self
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub rows: Vec<ReportRow>,
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_default()
}

pub fn write_report(report: &MetricsReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(REPORT_COLUMNS)?;
    for r in &report.rows {
        w.write_record([
            r.case_id.clone(),
            r.slice.map(|s| s.to_string()).unwrap_or_else(|| "all".into()),
            r.method.clone(),
            cell(r.dice_pct),
            cell(r.hausdorff_mm),
            cell(r.scar_volume_cm3),
            cell(r.pct_infarct),
            cell(r.mvo_sensitivity),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_report(path: &Path) -> Result<MetricsReport> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != REPORT_COLUMNS {
        return Err(Error::format(path, "unexpected report columns"));
    }
    let num = |s: &str| -> Result<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse().map(Some).map_err(|_| Error::format(path, format!("bad number `{s}`")))
        }
    };
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let slice = match &rec[1] {
            "all" => None,
            s => Some(s.parse().map_err(|_| Error::format(path, format!("bad slice `{s}`")))?),
        };
        rows.push(ReportRow {
            case_id: rec[0].to_string(),
            slice,
            method: rec[2].to_string(),
            dice_pct: num(&rec[3])?,
            hausdorff_mm: num(&rec[4])?,
            scar_volume_cm3: num(&rec[5])?,
            pct_infarct: num(&rec[6])?,
            mvo_sensitivity: num(&rec[7])?,
        });
    }
    Ok(MetricsReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_report_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        write_report(&MetricsReport::default(), &p).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), REPORT_COLUMNS.join(",") + "\n");
    }

    #[test]
    fn dice_rendered_in_percent() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        let report = MetricsReport { rows: vec![ReportRow::new("case1", None, "proposed").with_dice(0.5)] };
        write_report(&report, &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().nth(1).unwrap(), "case1,all,proposed,50.0000,,,,");
    }

    #[test]
    fn rows_reparse_at_four_decimals() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        let mut rows = Vec::new();
        for case in ["a", "b"] {
            for method in ["otsu", "fwhm"] {
                let mut r = ReportRow::new(case, Some(2), method).with_dice(0.73125);
                r.hausdorff_mm = Some(12.5);
                r.scar_volume_cm3 = Some(2.5);
                r.pct_infarct = Some(17.0);
                rows.push(r);
            }
        }
        let report = MetricsReport { rows };
        write_report(&report, &p).unwrap();
        let back = read_report(&p).unwrap();
        assert_eq!(back.rows.len(), 4);
        assert_eq!(back, report);
    }
}
