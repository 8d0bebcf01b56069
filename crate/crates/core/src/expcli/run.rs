//! Simulated experiments and file-level entry points.
//!
//! Seeds: record `i` of repetition `r` at sweep point `k` is sampled with
//! `derive_seed(master_seed, (k << 32) | r, i)`; non-sweep experiments use
//! `k = 0`. Every record's seed depends only on these indices, so results do
//! not depend on thread scheduling.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::{Experiment, ExperimentConfig};
use super::report::{analyze_table, sha256_hex, AnalysisOptions, Input, Report};
use super::table::{CountTable, HomRow, Row};
use crate::analysis::chsh::{chsh_from_state, chsh_settings};
use crate::analysis::fringe::{diagonal_contrast, fit_sinusoid, fringe_settings};
use crate::detection::{
    derive_seed, expected_rates, sample_counts, CountRecord, DetectionProbabilities, Rates,
};
use crate::error::{Error, Result};
use crate::polarization::{
    joint_probability, marginal_probability_a, marginal_probability_b, tomography_settings,
    AnalyzerSetting,
};
use crate::qstate::{fidelity, phi_plus, purity, DensityMatrix};
use crate::source::{bandwidth_from_coherence_length, hom_coincidence_curve, output_state, SourceConfig};

pub const SEED_SCHEME: &str = "derive_seed(master_seed, (point << 32) | repeat, record)";

/// Counts and report of one simulated experiment, before anything is written.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub table: CountTable,
    pub report: Report,
}

/// Paths written by [`run_experiment`].
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub counts_path: PathBuf,
    pub report_path: PathBuf,
    pub report: Report,
}

fn stream(point: usize, repeat: usize) -> u64 {
    ((point as u64) << 32) | repeat as u64
}

fn rates_at(
    rho: &DensityMatrix,
    source: &SourceConfig,
    config: &ExperimentConfig,
    a: &AnalyzerSetting,
    b: &AnalyzerSetting,
) -> Result<Rates> {
    let probs = DetectionProbabilities {
        joint: joint_probability(rho, a, b)?,
        marginal_a: marginal_probability_a(rho, a),
        marginal_b: marginal_probability_b(rho, b),
    };
    expected_rates(probs, source, &config.detector_a, &config.detector_b)
}

/// Samples one pass over `settings`.
fn scan(
    config: &ExperimentConfig,
    source: &SourceConfig,
    settings: &[(AnalyzerSetting, AnalyzerSetting)],
    stream: u64,
) -> Result<Vec<CountRecord>> {
    let rho = output_state(source)?;
    settings
        .iter()
        .enumerate()
        .map(|(i, (a, b))| {
            let rates = rates_at(&rho, source, config, a, b)?;
            let seed = derive_seed(config.master_seed, stream, i as u64);
            let counts = sample_counts(&rates, config.duration_per_point_s, seed);
            Ok(CountRecord::new(*a, *b, config.duration_per_point_s, counts, seed))
        })
        .collect()
}

fn fringe_scan_settings(config: &ExperimentConfig) -> Result<Vec<(AnalyzerSetting, AnalyzerSetting)>> {
    let f = &config.fringe;
    f.angles()
        .into_iter()
        .map(|h| fringe_settings(f.fixed_arm, f.fixed_hwp_deg, h))
        .collect()
}

/// Visibility of the noiseless fringe (expected total coincidences).
fn expected_fringe_visibility(config: &ExperimentConfig, source: &SourceConfig) -> Result<f64> {
    let rho = output_state(source)?;
    let settings = fringe_scan_settings(config)?;
    let rates = settings
        .iter()
        .map(|(a, b)| Ok(rates_at(&rho, source, config, a, b)?.total_coinc()))
        .collect::<Result<Vec<_>>>()?;
    Ok(fit_sinusoid(&config.fringe.angles(), &rates)?.visibility)
}

fn settings_rows(
    config: &ExperimentConfig,
    points: &[(Option<f64>, SourceConfig)],
    settings: &[(AnalyzerSetting, AnalyzerSetting)],
) -> Result<Vec<Row>> {
    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|k| (0..config.repeats).map(move |r| (k, r)))
        .collect();
    let scans = jobs
        .par_iter()
        .map(|&(k, r)| {
            let (value, source) = &points[k];
            let recs = scan(config, source, settings, stream(k, r))?;
            Ok(recs
                .into_iter()
                .map(|record| Row { record, repeat: r as u32, sweep_value: *value })
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(scans.into_iter().flatten().collect())
}

fn hom_rows(config: &ExperimentConfig) -> Result<Vec<HomRow>> {
    let h = &config.hom;
    let source = SourceConfig {
        pump_power_mw: h.pump_power_mw,
        ..config.source.clone()
    };
    let gaps = h.gaps();
    let rates = gaps
        .iter()
        .map(|&x| {
            // a pair leaves through different ports with this probability
            let joint = hom_coincidence_curve(x, h.center_mm, source.coherence_length_mm, h.visibility, 0.5);
            let marginal = 0.5 * (1.0 + joint);
            let probs = DetectionProbabilities { joint, marginal_a: marginal, marginal_b: marginal };
            expected_rates(probs, &source, &config.detector_a, &config.detector_b)
        })
        .collect::<Result<Vec<_>>>()?;
    let t = config.duration_per_point_s;
    let runs: Vec<Vec<HomRow>> = (0..config.repeats)
        .into_par_iter()
        .map(|r| {
            gaps.iter()
                .zip(&rates)
                .enumerate()
                .map(|(i, (&gap_mm, rates))| {
                    let seed = derive_seed(config.master_seed, stream(0, r), i as u64);
                    HomRow {
                        gap_mm,
                        duration_s: t,
                        counts: sample_counts(rates, t, seed),
                        seed,
                        repeat: r as u32,
                    }
                })
                .collect()
        })
        .collect();
    Ok(runs.into_iter().flatten().collect())
}

fn sweep_points(config: &ExperimentConfig) -> Vec<(Option<f64>, SourceConfig)> {
    match config.experiment {
        Experiment::SweepPower => config
            .sweep
            .powers_mw
            .iter()
            .map(|&p| (Some(p), SourceConfig { pump_power_mw: p, ..config.source.clone() }))
            .collect(),
        Experiment::SweepTemperature => config
            .sweep
            .temperatures_c
            .iter()
            .map(|&t| (Some(t), SourceConfig { crystal_temperature_c: t, ..config.source.clone() }))
            .collect(),
        _ => vec![(None, config.source.clone())],
    }
}

fn truth(config: &ExperimentConfig) -> Result<BTreeMap<String, f64>> {
    let mut t = BTreeMap::new();
    let rho = output_state(&config.source)?;
    match config.experiment {
        Experiment::Fringe => {
            t.insert("expected_visibility".into(), expected_fringe_visibility(config, &config.source)?);
            t.insert("diagonal_contrast".into(), diagonal_contrast(&rho)?);
        }
        Experiment::Hom => {
            let lc = config.source.coherence_length_mm;
            t.insert("visibility".into(), config.hom.visibility);
            t.insert("coherence_length_mm".into(), lc);
            t.insert(
                "bandwidth_nm".into(),
                bandwidth_from_coherence_length(lc, config.hom.reference_wavelength_nm)?,
            );
        }
        Experiment::Chsh => {
            t.insert("s".into(), chsh_from_state(&rho)?.s);
        }
        Experiment::Tomography => {
            t.insert("fidelity_phi_plus".into(), fidelity(&rho, &phi_plus())?);
            t.insert("purity".into(), purity(&rho));
        }
        Experiment::SweepPower | Experiment::SweepTemperature => {
            for (value, source) in sweep_points(config) {
                let v = expected_fringe_visibility(config, &source)?;
                t.insert(format!("expected_visibility[{}]", value.unwrap_or_default()), v);
            }
        }
    }
    Ok(t)
}

/// Samples the configured experiment and analyzes the counts in memory.
pub fn simulate(config: &ExperimentConfig) -> Result<Simulation> {
    config.validate()?;
    let table = match config.experiment {
        Experiment::Hom => CountTable::Hom(hom_rows(config)?),
        Experiment::Chsh => CountTable::Settings(settings_rows(config, &sweep_points(config), &chsh_settings())?),
        Experiment::Tomography => {
            CountTable::Settings(settings_rows(config, &sweep_points(config), &tomography_settings())?)
        }
        Experiment::Fringe | Experiment::SweepPower | Experiment::SweepTemperature => CountTable::Settings(
            settings_rows(config, &sweep_points(config), &fringe_scan_settings(config)?)?,
        ),
    };
    let analysis = analyze_table(config.experiment, &table, &AnalysisOptions::from_config(config))?;
    let input = Input::Simulation {
        config_sha256: sha256_hex(config.to_toml().as_bytes()),
        master_seed: config.master_seed,
        repeats: config.repeats,
        seed_scheme: SEED_SCHEME.into(),
        counts_file: config.output.counts.clone(),
    };
    Ok(Simulation {
        report: Report::new(input, analysis, truth(config)?),
        table,
    })
}

/// Writes every file to a temporary name first and renames only after all
/// writes succeeded.
pub fn write_all(files: &[(PathBuf, String)]) -> Result<()> {
    let mut staged = Vec::with_capacity(files.len());
    for (path, content) in files {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let tmp = path.with_file_name(format!(".{name}.tmp"));
        if let Err(e) = std::fs::write(&tmp, content) {
            for t in &staged {
                let _ = std::fs::remove_file(t);
            }
            return Err(Error::io(&tmp, e));
        }
        staged.push(tmp);
    }
    for ((path, _), tmp) in files.iter().zip(&staged) {
        std::fs::rename(tmp, path).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

/// Simulates, analyzes and writes the counts CSV and JSON report into
/// `out_dir`.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<RunOutput> {
    let sim = simulate(config)?;
    let counts_path = out_dir.join(&config.output.counts);
    let report_path = out_dir.join(&config.output.report);
    write_all(&[
        (counts_path.clone(), sim.table.to_csv()),
        (report_path.clone(), sim.report.to_json()),
    ])?;
    Ok(RunOutput { counts_path, report_path, report: sim.report })
}

/// Analyzes an external count file.
pub fn analyze_file(kind: Experiment, path: &Path, opts: &AnalysisOptions) -> Result<Report> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let table = CountTable::from_csv(&text)?;
    let analysis = analyze_table(kind, &table, opts)?;
    let input = Input::File {
        counts_sha256: sha256_hex(text.as_bytes()),
        counts_file: path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
    };
    Ok(Report::new(input, analysis, BTreeMap::new()))
}
