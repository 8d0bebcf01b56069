//! Plot-ready columnar text extracted from reports.

use std::fmt::Write;

use super::config::Experiment;
use super::report::{Analysis, Report};
use crate::error::{Error, Result};
use crate::qstate::BASIS_LABELS;

/// Comma-separated columns with a header row. Scans use the first
/// repetition; sweeps list one row per point.
pub fn emit_plot_data(report: &Report, kind: Experiment) -> Result<String> {
    if report.analysis.kind() != kind {
        return Err(Error::invalid(format!(
            "report holds a {} analysis, not {kind}",
            report.analysis.kind()
        )));
    }
    let mut out = String::new();
    let first = || Error::invalid("report has no runs");
    match &report.analysis {
        Analysis::Fringe(a) => {
            let run = a.runs.first().ok_or_else(first)?;
            out.push_str("hwp_deg,counts,fit\n");
            for ((x, c), f) in run.scan_hwp_deg.iter().zip(&run.counts).zip(&run.fit_curve) {
                let _ = writeln!(out, "{x},{c},{f}");
            }
        }
        Analysis::Hom(a) => {
            let run = a.runs.first().ok_or_else(first)?;
            out.push_str("gap_mm,counts,fit\n");
            for ((x, c), f) in run.gap_mm.iter().zip(&run.counts).zip(&run.fit_curve) {
                let _ = writeln!(out, "{x},{c},{f}");
            }
        }
        Analysis::SweepPower(a) | Analysis::SweepTemperature(a) => {
            out.push_str("sweep_value,visibility,sigma\n");
            for p in &a.points {
                let _ = writeln!(out, "{},{},{}", p.value, p.visibility.mean, p.visibility.std);
            }
        }
        Analysis::Chsh(a) => {
            let run = a.runs.first().ok_or_else(first)?;
            out.push_str("term,correlation\n");
            for (t, e) in run.result.correlations.iter().enumerate() {
                let _ = writeln!(out, "{t},{e}");
            }
        }
        Analysis::Tomography(a) => {
            let run = a.runs.first().ok_or_else(first)?;
            out.push_str("row,col,re,im\n");
            for i in 0..4 {
                for j in 0..4 {
                    let m = &run.density_matrix;
                    let _ = writeln!(out, "{},{},{},{}", BASIS_LABELS[i], BASIS_LABELS[j], m.re[i][j], m.im[i][j]);
                }
            }
        }
    }
    Ok(out)
}
