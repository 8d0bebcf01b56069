//! Parameterized model of the Sagnac-loop pair source.
//!
//! The loop emits `|HV> + r e^{i theta} |VH>` (normalized), where `r` is the
//! amplitude ratio between the two pumping directions, mixed with white noise.
//! Pair rate is linear in pump power. Spectral properties come from the
//! two-photon coherence length, and the degenerate wavelength is interpolated
//! from a temperature calibration table.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::{mix_with_white_noise, DensityMatrix, KetState, HV, VH};

/// Ratio between the coherence-length/bandwidth product and `lambda^2 / pi`.
pub const BANDWIDTH_FACTOR: f64 = 1.39;

const NM_PER_MM: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub pump_power_mw: f64,
    pub pump_wavelength_nm: f64,
    pub crystal_temperature_c: f64,
    /// Relative phase between the two loop directions.
    pub theta_rad: f64,
    /// Amplitude ratio `|VH| / |HV|`; 1 is balanced.
    pub balance: f64,
    /// Weight of the pure state against white noise.
    pub noise_p: f64,
    /// Pairs per second per mW of pump, before collection losses.
    pub pair_rate_coeff: f64,
    /// Filter transmission.
    pub alpha1: f64,
    /// Fiber coupling.
    pub alpha2: f64,
    pub coherence_length_mm: f64,
}

impl SourceConfig {
    /// Checks every field, returning the offending field name on failure.
    pub fn validate(&self) -> std::result::Result<(), (&'static str, String)> {
        fn check(ok: bool, field: &'static str, msg: String) -> std::result::Result<(), (&'static str, String)> {
            if ok {
                Ok(())
            } else {
                Err((field, msg))
            }
        }
        check(
            self.pump_power_mw.is_finite() && self.pump_power_mw >= 0.0,
            "pump_power_mw",
            format!("must be >= 0, got {}", self.pump_power_mw),
        )?;
        check(
            self.pump_wavelength_nm.is_finite() && self.pump_wavelength_nm > 0.0,
            "pump_wavelength_nm",
            format!("must be > 0, got {}", self.pump_wavelength_nm),
        )?;
        check(
            self.crystal_temperature_c.is_finite(),
            "crystal_temperature_c",
            "must be finite".into(),
        )?;
        check(self.theta_rad.is_finite(), "theta_rad", "must be finite".into())?;
        check(
            self.balance.is_finite() && self.balance >= 0.0,
            "balance",
            format!("must be >= 0, got {}", self.balance),
        )?;
        check(
            (0.0..=1.0).contains(&self.noise_p),
            "noise_p",
            format!("must lie in [0, 1], got {}", self.noise_p),
        )?;
        check(
            self.pair_rate_coeff.is_finite() && self.pair_rate_coeff >= 0.0,
            "pair_rate_coeff",
            format!("must be >= 0, got {}", self.pair_rate_coeff),
        )?;
        check(
            self.alpha1 > 0.0 && self.alpha1 <= 1.0,
            "alpha1",
            format!("must lie in (0, 1], got {}", self.alpha1),
        )?;
        check(
            self.alpha2 > 0.0 && self.alpha2 <= 1.0,
            "alpha2",
            format!("must lie in (0, 1], got {}", self.alpha2),
        )?;
        check(
            self.coherence_length_mm.is_finite() && self.coherence_length_mm > 0.0,
            "coherence_length_mm",
            format!("must be > 0, got {}", self.coherence_length_mm),
        )
    }

    fn ensure_valid(&self) -> Result<()> {
        self.validate()
            .map_err(|(field, msg)| Error::invalid(format!("source.{field} {msg}")))
    }

    /// Pure part of the emitted state.
    pub fn ket(&self) -> Result<KetState> {
        self.ensure_valid()?;
        let mut amps = [Complex64::new(0.0, 0.0); 4];
        amps[HV] = Complex64::new(1.0, 0.0);
        amps[VH] = Complex64::from_polar(self.balance, self.theta_rad);
        KetState::new(amps)
    }

    /// Collection efficiency of a pair, `(alpha1 alpha2)^2`.
    pub fn pair_collection_efficiency(&self) -> f64 {
        (self.alpha1 * self.alpha2).powi(2)
    }
}

pub fn output_state(config: &SourceConfig) -> Result<DensityMatrix> {
    let psi = config.ket()?;
    mix_with_white_noise(&psi, config.noise_p)
}

/// Pairs per second delivered to the two fibers.
pub fn pair_rate(config: &SourceConfig) -> f64 {
    config.pair_rate_coeff * config.pump_power_mw * config.pair_collection_efficiency()
}

/// Degenerate signal wavelength versus crystal temperature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct TuningCurve {
    /// `(temperature C, wavelength nm)`, ascending in temperature.
    points: Vec<(f64, f64)>,
}

/// Margin outside the calibrated range where linear extrapolation is allowed.
pub const TUNING_EXTRAPOLATION_C: f64 = 5.0;

impl TuningCurve {
    /// Points must be strictly monotonic in temperature, either direction.
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::invalid("tuning curve needs at least two points"));
        }
        if points.iter().any(|(t, w)| !t.is_finite() || !w.is_finite()) {
            return Err(Error::invalid("tuning curve points must be finite"));
        }
        let increasing = points.windows(2).all(|w| w[1].0 > w[0].0);
        let decreasing = points.windows(2).all(|w| w[1].0 < w[0].0);
        let mut points = points;
        if decreasing {
            points.reverse();
        } else if !increasing {
            return Err(Error::invalid(
                "tuning curve temperatures must be strictly monotonic",
            ));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn temperature_range(&self) -> (f64, f64) {
        (self.points[0].0, self.points[self.points.len() - 1].0)
    }

    /// Piecewise-linear interpolation, extrapolating linearly up to
    /// [`TUNING_EXTRAPOLATION_C`] beyond either end.
    pub fn signal_wavelength(&self, temperature_c: f64) -> Result<f64> {
        let (lo, hi) = self.temperature_range();
        if !(temperature_c >= lo - TUNING_EXTRAPOLATION_C
            && temperature_c <= hi + TUNING_EXTRAPOLATION_C)
        {
            return Err(Error::OutOfRange(format!(
                "temperature {temperature_c} C outside calibrated range [{lo}, {hi}] C +/- {TUNING_EXTRAPOLATION_C}"
            )));
        }
        if let Some(&(_, w)) = self.points.iter().find(|(t, _)| *t == temperature_c) {
            return Ok(w);
        }
        let n = self.points.len();
        let seg = self
            .points
            .windows(2)
            .position(|w| temperature_c < w[1].0)
            .unwrap_or(n - 2);
        let (t0, w0) = self.points[seg];
        let (t1, w1) = self.points[seg + 1];
        let f = (temperature_c - t0) / (t1 - t0);
        Ok((1.0 - f) * w0 + f * w1)
    }
}

impl Default for TuningCurve {
    /// Five-point calibration of the PPKTP crystal near 1550 nm.
    fn default() -> Self {
        Self::new(vec![
            (17.5, 1560.31),
            (27.0, 1554.72),
            (32.0, 1550.09),
            (41.0, 1545.47),
            (51.0, 1539.90),
        ])
        .expect("static calibration is monotonic")
    }
}

impl TryFrom<Vec<[f64; 2]>> for TuningCurve {
    type Error = Error;

    fn try_from(v: Vec<[f64; 2]>) -> Result<Self> {
        Self::new(v.into_iter().map(|[t, w]| (t, w)).collect())
    }
}

impl From<TuningCurve> for Vec<[f64; 2]> {
    fn from(c: TuningCurve) -> Self {
        c.points.into_iter().map(|(t, w)| [t, w]).collect()
    }
}

pub fn degenerate_temperature_lookup(curve: &TuningCurve, temperature_c: f64) -> Result<f64> {
    curve.signal_wavelength(temperature_c)
}

/// Idler wavelength from energy conservation, `1/li = 1/lp - 1/ls`.
pub fn idler_wavelength(pump_nm: f64, signal_nm: f64) -> Result<f64> {
    if !(pump_nm > 0.0 && signal_nm > pump_nm) {
        return Err(Error::invalid(format!(
            "signal {signal_nm} nm must be longer than pump {pump_nm} nm"
        )));
    }
    Ok(1.0 / (1.0 / pump_nm - 1.0 / signal_nm))
}

/// `1.39 lambda^2 / (pi l_c)`, in nm for `l_c` in mm and `lambda` in nm.
pub fn bandwidth_from_coherence_length(coherence_length_mm: f64, wavelength_nm: f64) -> Result<f64> {
    if !(coherence_length_mm > 0.0 && wavelength_nm > 0.0) {
        return Err(Error::invalid(format!(
            "coherence length ({coherence_length_mm} mm) and wavelength ({wavelength_nm} nm) must be positive"
        )));
    }
    Ok(BANDWIDTH_FACTOR * wavelength_nm * wavelength_nm
        / (std::f64::consts::PI * coherence_length_mm * NM_PER_MM))
}

/// Inverse of [`bandwidth_from_coherence_length`].
pub fn coherence_length_from_bandwidth(bandwidth_nm: f64, wavelength_nm: f64) -> Result<f64> {
    if !(bandwidth_nm > 0.0 && wavelength_nm > 0.0) {
        return Err(Error::invalid(format!(
            "bandwidth ({bandwidth_nm} nm) and wavelength ({wavelength_nm} nm) must be positive"
        )));
    }
    Ok(BANDWIDTH_FACTOR * wavelength_nm * wavelength_nm
        / (std::f64::consts::PI * bandwidth_nm * NM_PER_MM))
}

/// Triangular HOM dip: `baseline (1 - V max(0, 1 - |x - x0| / l_c))`.
pub fn hom_coincidence_curve(
    gap_mm: f64,
    center_mm: f64,
    coherence_length_mm: f64,
    visibility: f64,
    baseline: f64,
) -> f64 {
    let tri = (1.0 - (gap_mm - center_mm).abs() / coherence_length_mm).max(0.0);
    baseline * (1.0 - visibility * tri)
}
