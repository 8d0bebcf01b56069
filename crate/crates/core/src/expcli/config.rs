//! Experiment configuration, stored as TOML.
//!
//! Unknown keys are rejected everywhere, and every range check reports the
//! dotted path of the offending field.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::fringe::{grid, FixedArm};
use crate::defaults;
use crate::detection::DetectorConfig;
use crate::error::{Error, Result};
use crate::source::{SourceConfig, TuningCurve};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Fringe,
    Hom,
    Chsh,
    Tomography,
    SweepPower,
    SweepTemperature,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::Fringe,
        Experiment::Hom,
        Experiment::Chsh,
        Experiment::Tomography,
        Experiment::SweepPower,
        Experiment::SweepTemperature,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Fringe => "fringe",
            Experiment::Hom => "hom",
            Experiment::Chsh => "chsh",
            Experiment::Tomography => "tomography",
            Experiment::SweepPower => "sweep-power",
            Experiment::SweepTemperature => "sweep-temperature",
        }
    }

    pub fn is_sweep(self) -> bool {
        matches!(self, Experiment::SweepPower | Experiment::SweepTemperature)
    }
}

impl std::fmt::Display for Experiment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Experiment::ALL.iter().map(|e| e.name()).collect();
                Error::invalid(format!("unknown experiment `{s}`, expected one of {}", names.join(", ")))
            })
    }
}

/// Polarization fringe scan: one half-wave plate fixed, the other stepped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FringeConfig {
    pub fixed_arm: FixedArm,
    pub fixed_hwp_deg: f64,
    pub start_deg: f64,
    pub stop_deg: f64,
    pub step_deg: f64,
}

impl Default for FringeConfig {
    fn default() -> Self {
        Self {
            fixed_arm: FixedArm::A,
            fixed_hwp_deg: 22.5,
            start_deg: 0.0,
            stop_deg: 175.0,
            step_deg: 5.0,
        }
    }
}

impl FringeConfig {
    pub fn angles(&self) -> Vec<f64> {
        grid(self.start_deg, self.stop_deg, self.step_deg)
    }
}

/// HOM delay scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HomConfig {
    /// Dip visibility of the simulated source.
    pub visibility: f64,
    pub center_mm: f64,
    pub pump_power_mw: f64,
    pub start_mm: f64,
    pub stop_mm: f64,
    pub step_mm: f64,
    /// Wavelength used to turn the fitted coherence length into a bandwidth.
    pub reference_wavelength_nm: f64,
}

impl Default for HomConfig {
    fn default() -> Self {
        Self {
            visibility: defaults::HOM_VISIBILITY,
            center_mm: 0.0,
            pump_power_mw: defaults::HOM_PUMP_POWER_MW,
            start_mm: -1.0,
            stop_mm: 1.0,
            step_mm: defaults::HOM_STEP_MM,
            reference_wavelength_nm: defaults::REFERENCE_WAVELENGTH_NM,
        }
    }
}

impl HomConfig {
    pub fn gaps(&self) -> Vec<f64> {
        grid(self.start_mm, self.stop_mm, self.step_mm)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TomographyConfig {
    pub restarts: usize,
    pub optimizer_seed: u64,
    /// Treat accidentals as a known background in the likelihood.
    pub subtract_accidentals: bool,
}

impl Default for TomographyConfig {
    fn default() -> Self {
        Self {
            restarts: 3,
            optimizer_seed: 0,
            subtract_accidentals: true,
        }
    }
}

/// Fringe visibility versus pump power or crystal temperature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub powers_mw: Vec<f64>,
    pub temperatures_c: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            powers_mw: vec![15.0, 30.0, 60.0, 90.0, 120.0],
            temperatures_c: TuningCurve::default().points().iter().map(|p| p.0).collect(),
        }
    }
}

/// File names, relative to the output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub counts: String,
    pub report: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            counts: "counts.csv".into(),
            report: "report.json".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub experiment: Experiment,
    pub duration_per_point_s: f64,
    pub master_seed: u64,
    /// Independent repetitions of the whole scan.
    #[serde(default = "one")]
    pub repeats: usize,
    pub source: SourceConfig,
    #[serde(default)]
    pub tuning: TuningCurve,
    pub detector_a: DetectorConfig,
    pub detector_b: DetectorConfig,
    #[serde(default)]
    pub fringe: FringeConfig,
    #[serde(default)]
    pub hom: HomConfig,
    #[serde(default)]
    pub tomography: TomographyConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn one() -> usize {
    1
}

impl ExperimentConfig {
    /// The reference configuration: calibrated source, the two gated
    /// detectors and 10 s per point.
    pub fn paper_defaults(experiment: Experiment) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            experiment,
            duration_per_point_s: defaults::DURATION_S,
            master_seed: 0,
            repeats: 1,
            source: defaults::source(),
            tuning: TuningCurve::default(),
            detector_a: defaults::detector_a(),
            detector_b: defaults::detector_b(),
            fringe: FringeConfig::default(),
            hom: HomConfig::default(),
            tomography: TomographyConfig::default(),
            sweep: SweepConfig::default(),
            output: OutputConfig::default(),
        }
    }

    /// Parses and validates a TOML document.
    pub fn from_toml(text: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(text).map_err(|e| Error::config("<document>", e.to_string()))?;
        let config: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let path = if path == "." { "<document>".to_string() } else { path };
            Error::config(path, e.into_inner().message().trim().to_string())
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::config(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        positive("duration_per_point_s", self.duration_per_point_s)?;
        if self.repeats == 0 {
            return Err(Error::config("repeats", "must be at least 1"));
        }
        self.source
            .validate()
            .map_err(|(f, m)| Error::config(format!("source.{f}"), m))?;
        self.detector_a
            .validate()
            .map_err(|(f, m)| Error::config(format!("detector_a.{f}"), m))?;
        self.detector_b
            .validate()
            .map_err(|(f, m)| Error::config(format!("detector_b.{f}"), m))?;

        let f = &self.fringe;
        finite("fringe.fixed_hwp_deg", f.fixed_hwp_deg)?;
        scan("fringe", "deg", f.start_deg, f.stop_deg, f.step_deg)?;

        let h = &self.hom;
        if !(0.0..=1.0).contains(&h.visibility) {
            return Err(Error::config("hom.visibility", format!("must lie in [0, 1], got {}", h.visibility)));
        }
        finite("hom.center_mm", h.center_mm)?;
        positive("hom.pump_power_mw", h.pump_power_mw)?;
        positive("hom.reference_wavelength_nm", h.reference_wavelength_nm)?;
        scan("hom", "mm", h.start_mm, h.stop_mm, h.step_mm)?;
        if h.gaps().len() < 8 {
            return Err(Error::config("hom.step_mm", "scan needs at least 8 points"));
        }
        if !(self.source.coherence_length_mm > 0.0) {
            return Err(Error::config("source.coherence_length_mm", "must be > 0"));
        }

        if self.tomography.restarts > 100 {
            return Err(Error::config("tomography.restarts", "must be at most 100"));
        }

        strictly_increasing("sweep.powers_mw", &self.sweep.powers_mw)?;
        for (i, &p) in self.sweep.powers_mw.iter().enumerate() {
            positive(&format!("sweep.powers_mw[{i}]"), p)?;
        }
        strictly_increasing("sweep.temperatures_c", &self.sweep.temperatures_c)?;
        for (i, &t) in self.sweep.temperatures_c.iter().enumerate() {
            self.tuning
                .signal_wavelength(t)
                .map_err(|e| Error::config(format!("sweep.temperatures_c[{i}]"), e.to_string()))?;
        }
        Ok(())
    }
}

fn finite(path: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(path, format!("must be finite, got {v}")))
    }
}

fn positive(path: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(path, format!("must be > 0, got {v}")))
    }
}

fn scan(section: &str, unit: &str, start: f64, stop: f64, step: f64) -> Result<()> {
    finite(&format!("{section}.start_{unit}"), start)?;
    finite(&format!("{section}.stop_{unit}"), stop)?;
    positive(&format!("{section}.step_{unit}"), step)?;
    if !(stop > start) {
        return Err(Error::config(
            format!("{section}.stop_{unit}"),
            format!("must exceed start ({start}), got {stop}"),
        ));
    }
    Ok(())
}

fn strictly_increasing(path: &str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::config(path, "must not be empty"));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::config(format!("{path}[{i}]"), "must be finite"));
    }
    if let Some(i) = values.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::config(
            format!("{path}[{}]", i + 1),
            "values must be strictly increasing",
        ));
    }
    Ok(())
}
