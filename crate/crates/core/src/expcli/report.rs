//! Analysis of count tables and the JSON report layout.
//!
//! A report has four parts: version information, a description of the input
//! (config digest and seeds, or the digest of an external count file), the
//! analysis, and for simulations the ground truth of the simulated source.
//! The analysis depends only on the count table and [`AnalysisOptions`], so
//! re-analyzing an exported table reproduces it exactly.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{Experiment, ExperimentConfig, TomographyConfig};
use super::table::{CountTable, HomRow, Row};
use crate::analysis::chsh::{chsh, ChshResult};
use crate::analysis::fringe::{fit_sinusoid, FixedArm, FringeFit};
use crate::analysis::hom::{fit_triangle, HomFit};
use crate::analysis::tomography::{mle_tomography, TomographyOptions};
use crate::detection::{coincidence_window_s, CountRecord};
use crate::error::{Error, Result};
use crate::qstate::{fidelity, phi_plus, purity, DensityMatrixReport};
use crate::source::{bandwidth_from_coherence_length, idler_wavelength, TuningCurve};

pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const LIBRARY_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Parameters of the analysis that are not contained in a count table.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOptions {
    /// Converts HOM coherence lengths to bandwidths.
    pub reference_wavelength_nm: f64,
    pub pump_wavelength_nm: f64,
    pub tuning: TuningCurve,
    pub tomography: TomographyConfig,
    /// Coincidence window for the accidental background in tomography.
    pub coincidence_window_s: Option<f64>,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self::from_config(&ExperimentConfig::paper_defaults(Experiment::Fringe))
    }
}

impl AnalysisOptions {
    pub fn from_config(c: &ExperimentConfig) -> Self {
        Self {
            reference_wavelength_nm: c.hom.reference_wavelength_nm,
            pump_wavelength_nm: c.source.pump_wavelength_nm,
            tuning: c.tuning.clone(),
            tomography: c.tomography.clone(),
            coincidence_window_s: c
                .tomography
                .subtract_accidentals
                .then(|| coincidence_window_s(&c.detector_a, &c.detector_b)),
        }
    }
}

/// Sample mean and standard deviation (zero for a single value).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { n, mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FringeRun {
    pub repeat: u32,
    pub fixed_arm: FixedArm,
    pub fixed_hwp_deg: f64,
    pub scan_hwp_deg: Vec<f64>,
    /// Coincidences scaled to the first record's duration.
    pub counts: Vec<f64>,
    pub fit: FringeFit,
    pub fit_curve: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FringeAnalysis {
    pub runs: Vec<FringeRun>,
    pub visibility: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomRun {
    pub repeat: u32,
    pub gap_mm: Vec<f64>,
    pub counts: Vec<f64>,
    pub fit: HomFit,
    pub bandwidth_nm: f64,
    pub fit_curve: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomAnalysis {
    pub reference_wavelength_nm: f64,
    pub runs: Vec<HomRun>,
    pub visibility: Summary,
    pub coherence_length_mm: Summary,
    pub bandwidth_nm: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChshRun {
    pub repeat: u32,
    pub result: ChshResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChshAnalysis {
    pub runs: Vec<ChshRun>,
    pub s: Summary,
    /// Mean of the per-run Poisson uncertainties.
    pub sigma_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomographyRun {
    pub repeat: u32,
    pub density_matrix: DensityMatrixReport,
    pub fidelity_phi_plus: f64,
    pub purity: f64,
    pub deviance: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomographyAnalysis {
    pub runs: Vec<TomographyRun>,
    pub fidelity_phi_plus: Summary,
    pub purity: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signal_wavelength_nm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub idler_wavelength_nm: Option<f64>,
    pub visibilities: Vec<f64>,
    pub visibility: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAnalysis {
    pub parameter: String,
    pub points: Vec<SweepPoint>,
    /// Largest minus smallest mean visibility across the sweep.
    pub visibility_spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Analysis {
    Fringe(FringeAnalysis),
    Hom(HomAnalysis),
    Chsh(ChshAnalysis),
    Tomography(TomographyAnalysis),
    SweepPower(SweepAnalysis),
    SweepTemperature(SweepAnalysis),
}

impl Analysis {
    pub fn kind(&self) -> Experiment {
        match self {
            Analysis::Fringe(_) => Experiment::Fringe,
            Analysis::Hom(_) => Experiment::Hom,
            Analysis::Chsh(_) => Experiment::Chsh,
            Analysis::Tomography(_) => Experiment::Tomography,
            Analysis::SweepPower(_) => Experiment::SweepPower,
            Analysis::SweepTemperature(_) => Experiment::SweepTemperature,
        }
    }
}

/// Where the counts came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "origin", rename_all = "kebab-case")]
pub enum Input {
    Simulation {
        config_sha256: String,
        master_seed: u64,
        repeats: usize,
        seed_scheme: String,
        counts_file: String,
    },
    File {
        counts_sha256: String,
        counts_file: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub library_version: String,
    pub input: Input,
    pub analysis: Analysis,
    /// Properties of the simulated source, absent for external data.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub truth: BTreeMap<String, f64>,
}

impl Report {
    pub fn new(input: Input, analysis: Analysis, truth: BTreeMap<String, f64>) -> Self {
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            library_version: LIBRARY_VERSION.to_string(),
            input,
            analysis,
            truth,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line() as u64,
            message: e.to_string(),
        })
    }

    /// The analysis section alone, as it appears in the report.
    pub fn analysis_json(&self) -> String {
        serde_json::to_string_pretty(&self.analysis).expect("analysis serializes")
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Groups rows by `(sweep_value, repeat)` in order of first appearance.
fn group_settings(rows: &[Row]) -> Vec<((Option<f64>, u32), Vec<CountRecord>)> {
    let mut groups: Vec<((Option<f64>, u32), Vec<CountRecord>)> = Vec::new();
    for r in rows {
        let key = (r.sweep_value, r.repeat);
        let same = |k: &(Option<f64>, u32)| k.0.map(f64::to_bits) == key.0.map(f64::to_bits) && k.1 == key.1;
        match groups.iter_mut().find(|(k, _)| same(k)) {
            Some((_, g)) => g.push(r.record),
            None => groups.push((key, vec![r.record])),
        }
    }
    groups
}

fn group_hom(rows: &[HomRow]) -> Vec<(u32, Vec<HomRow>)> {
    let mut groups: Vec<(u32, Vec<HomRow>)> = Vec::new();
    for r in rows {
        match groups.iter_mut().find(|(k, _)| *k == r.repeat) {
            Some((_, g)) => g.push(*r),
            None => groups.push((r.repeat, vec![*r])),
        }
    }
    groups
}

fn scaled(coincidences: u64, duration_s: f64, reference_s: f64) -> f64 {
    coincidences as f64 * reference_s / duration_s
}

fn fringe_run(repeat: u32, records: &[CountRecord]) -> Result<FringeRun> {
    let first = records
        .first()
        .ok_or_else(|| Error::Fit("empty fringe scan".into()))?;
    let a_fixed = records.iter().all(|r| r.setting_a == first.setting_a);
    let b_fixed = records.iter().all(|r| r.setting_b == first.setting_b);
    let (fixed_arm, fixed_hwp_deg) = match (a_fixed, b_fixed) {
        (true, false) => (FixedArm::A, first.setting_a.hwp_angle()),
        (false, true) => (FixedArm::B, first.setting_b.hwp_angle()),
        _ => {
            return Err(Error::invalid(
                "fringe scan needs exactly one arm with a fixed analyzer",
            ))
        }
    };
    let scan_hwp_deg: Vec<f64> = records
        .iter()
        .map(|r| match fixed_arm {
            FixedArm::A => r.setting_b.hwp_angle(),
            FixedArm::B => r.setting_a.hwp_angle(),
        })
        .collect();
    let counts: Vec<f64> = records
        .iter()
        .map(|r| scaled(r.coincidences, r.duration_s, first.duration_s))
        .collect();
    let fit = fit_sinusoid(&scan_hwp_deg, &counts)?;
    let fit_curve = scan_hwp_deg.iter().map(|&h| fit.model(h)).collect();
    Ok(FringeRun {
        repeat,
        fixed_arm,
        fixed_hwp_deg,
        scan_hwp_deg,
        counts,
        fit,
        fit_curve,
    })
}

fn analyze_fringe(rows: &[Row]) -> Result<FringeAnalysis> {
    let groups = group_settings(rows);
    let runs = groups
        .par_iter()
        .map(|((_, repeat), recs)| fringe_run(*repeat, recs))
        .collect::<Result<Vec<_>>>()?;
    let visibility = Summary::of(&runs.iter().map(|r| r.fit.visibility).collect::<Vec<_>>());
    Ok(FringeAnalysis { runs, visibility })
}

fn analyze_hom(rows: &[HomRow], opts: &AnalysisOptions) -> Result<HomAnalysis> {
    let runs = group_hom(rows)
        .par_iter()
        .map(|(repeat, rs)| {
            let gap_mm: Vec<f64> = rs.iter().map(|r| r.gap_mm).collect();
            let counts: Vec<f64> = rs
                .iter()
                .map(|r| scaled(r.counts.coincidences, r.duration_s, rs[0].duration_s))
                .collect();
            let fit = fit_triangle(&gap_mm, &counts)?;
            let bandwidth_nm =
                bandwidth_from_coherence_length(fit.coherence_length_mm, opts.reference_wavelength_nm)?;
            let fit_curve = gap_mm.iter().map(|&x| fit.model(x)).collect();
            Ok(HomRun {
                repeat: *repeat,
                gap_mm,
                counts,
                fit,
                bandwidth_nm,
                fit_curve,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let pick = |f: fn(&HomRun) -> f64| Summary::of(&runs.iter().map(f).collect::<Vec<_>>());
    Ok(HomAnalysis {
        reference_wavelength_nm: opts.reference_wavelength_nm,
        visibility: pick(|r| r.fit.visibility),
        coherence_length_mm: pick(|r| r.fit.coherence_length_mm),
        bandwidth_nm: pick(|r| r.bandwidth_nm),
        runs,
    })
}

fn analyze_chsh(rows: &[Row]) -> Result<ChshAnalysis> {
    let runs = group_settings(rows)
        .iter()
        .map(|((_, repeat), recs)| Ok(ChshRun { repeat: *repeat, result: chsh(recs)? }))
        .collect::<Result<Vec<_>>>()?;
    let s = Summary::of(&runs.iter().map(|r| r.result.s).collect::<Vec<_>>());
    let sigma_s = runs.iter().map(|r| r.result.sigma_s).sum::<f64>() / runs.len() as f64;
    Ok(ChshAnalysis { runs, s, sigma_s })
}

fn analyze_tomography(rows: &[Row], opts: &AnalysisOptions) -> Result<TomographyAnalysis> {
    let tomo = TomographyOptions {
        restarts: opts.tomography.restarts,
        seed: opts.tomography.optimizer_seed,
        accidental_window_s: opts.coincidence_window_s,
        ..TomographyOptions::default()
    };
    let target = phi_plus();
    let runs = group_settings(rows)
        .par_iter()
        .map(|((_, repeat), recs)| {
            let r = mle_tomography(recs, &tomo)?;
            Ok(TomographyRun {
                repeat: *repeat,
                density_matrix: r.state.to_report(),
                fidelity_phi_plus: fidelity(&r.state, &target)?,
                purity: purity(&r.state),
                deviance: r.deviance,
                iterations: r.iterations,
                gradient_norm: r.gradient_norm,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let pick = |f: fn(&TomographyRun) -> f64| Summary::of(&runs.iter().map(f).collect::<Vec<_>>());
    Ok(TomographyAnalysis {
        fidelity_phi_plus: pick(|r| r.fidelity_phi_plus),
        purity: pick(|r| r.purity),
        runs,
    })
}

fn analyze_sweep(rows: &[Row], kind: Experiment, opts: &AnalysisOptions) -> Result<SweepAnalysis> {
    let groups = group_settings(rows);
    let runs = groups
        .par_iter()
        .map(|((value, repeat), recs)| {
            let value = value.ok_or_else(|| Error::invalid("sweep table without sweep_value column"))?;
            Ok((value, fringe_run(*repeat, recs)?.fit.visibility))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut points: Vec<SweepPoint> = Vec::new();
    for (value, v) in runs {
        match points.iter_mut().find(|p| p.value.to_bits() == value.to_bits()) {
            Some(p) => p.visibilities.push(v),
            None => {
                let (signal, idler) = if kind == Experiment::SweepTemperature {
                    let s = opts.tuning.signal_wavelength(value)?;
                    (Some(s), Some(idler_wavelength(opts.pump_wavelength_nm, s)?))
                } else {
                    (None, None)
                };
                points.push(SweepPoint {
                    value,
                    signal_wavelength_nm: signal,
                    idler_wavelength_nm: idler,
                    visibilities: vec![v],
                    visibility: Summary::of(&[v]),
                });
            }
        }
    }
    for p in &mut points {
        p.visibility = Summary::of(&p.visibilities);
    }
    let means = points.iter().map(|p| p.visibility.mean);
    let spread = means.clone().fold(f64::NEG_INFINITY, f64::max) - means.fold(f64::INFINITY, f64::min);
    Ok(SweepAnalysis {
        parameter: match kind {
            Experiment::SweepPower => "pump_power_mw",
            _ => "crystal_temperature_c",
        }
        .into(),
        points,
        visibility_spread: spread,
    })
}

/// Runs the analysis of `kind` on a count table.
pub fn analyze_table(kind: Experiment, table: &CountTable, opts: &AnalysisOptions) -> Result<Analysis> {
    if table.is_empty() {
        return Err(Error::Fit("count table has no rows".into()));
    }
    match (kind, table) {
        (Experiment::Hom, CountTable::Hom(rows)) => Ok(Analysis::Hom(analyze_hom(rows, opts)?)),
        (Experiment::Hom, CountTable::Settings(_)) => {
            Err(Error::invalid("HOM analysis needs a gap_mm table"))
        }
        (_, CountTable::Hom(_)) => Err(Error::invalid(format!(
            "{kind} analysis needs analyzer-setting columns, got a HOM table"
        ))),
        (Experiment::Fringe, CountTable::Settings(rows)) => Ok(Analysis::Fringe(analyze_fringe(rows)?)),
        (Experiment::Chsh, CountTable::Settings(rows)) => Ok(Analysis::Chsh(analyze_chsh(rows)?)),
        (Experiment::Tomography, CountTable::Settings(rows)) => {
            Ok(Analysis::Tomography(analyze_tomography(rows, opts)?))
        }
        (Experiment::SweepPower, CountTable::Settings(rows)) => {
            Ok(Analysis::SweepPower(analyze_sweep(rows, kind, opts)?))
        }
        (Experiment::SweepTemperature, CountTable::Settings(rows)) => {
            Ok(Analysis::SweepTemperature(analyze_sweep(rows, kind, opts)?))
        }
    }
}
