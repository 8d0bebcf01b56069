//! Reference configuration of the 1550 nm Sagnac source and its detectors,
//! with the calibrations that produced the free parameters.
//!
//! Fixed by the hardware: 60 mW pump at 775.04 nm, crystal at 32 C,
//! `alpha1 = 0.82`, `alpha2 = 0.32`, `l_c = 0.44 mm`; detector A with 15 %
//! efficiency, 1 ns gates at 90 MHz (duty cycle 0.09) and 5.6e-6 darks per
//! gate; detector B with 8 % efficiency, 2.5 ns gates and 2.0e-5 darks per
//! gate. Detector B is gated by detector A, so its own duty cycle is 1 and
//! the coincidence duty cycle is A's 0.09. B's gate rate is set to 25 MHz so
//! that its dark rate matches the quoted ~500 cps.
//!
//! Calibrated (see [`calibrate_pair_rate_coeff`](crate::detection::calibrate_pair_rate_coeff),
//! [`calibrate_noise_for_visibility`] and [`calibrate_balance_for_fidelity`]):
//! the pair-rate coefficient gives 150 true coincidences per second at the
//! fringe maximum, the white-noise weight gives a 0.964 diagonal-basis fringe
//! visibility including accidentals, and the loop imbalance brings the
//! fidelity to `|Phi+>` down to 0.935. White noise alone cannot do both:
//! a 0.964 fringe implies a fidelity of 0.973.

use crate::analysis::fringe::{fit_sinusoid, fringe_settings, grid, FixedArm};
use crate::detection::{expected_rates, DetectionProbabilities, DetectorConfig};
use crate::error::{Error, Result};
use crate::polarization::{joint_probability, marginal_probability_a, marginal_probability_b};
use crate::source::{output_state, SourceConfig};

pub const PUMP_POWER_MW: f64 = 60.0;
pub const PUMP_WAVELENGTH_NM: f64 = 775.04;
pub const CRYSTAL_TEMPERATURE_C: f64 = 32.0;
pub const ALPHA1: f64 = 0.82;
pub const ALPHA2: f64 = 0.32;
pub const COHERENCE_LENGTH_MM: f64 = 0.44;

pub const TARGET_COINCIDENCE_RATE: f64 = 150.0;
pub const TARGET_FRINGE_VISIBILITY: f64 = 0.964;
pub const TARGET_FIDELITY: f64 = 0.935;

/// Calibrated pairs/s/mW before collection losses.
pub const PAIR_RATE_COEFF: f64 = 67238.588417;
/// Calibrated white-noise weight.
pub const NOISE_P: f64 = 0.964757069;
/// Calibrated amplitude ratio between the two loop directions.
pub const BALANCE: f64 = 0.6610437524;

pub const HOM_VISIBILITY: f64 = 0.953;
pub const HOM_PUMP_POWER_MW: f64 = 50.0;
pub const HOM_STEP_MM: f64 = 0.01;
pub const REFERENCE_WAVELENGTH_NM: f64 = 1550.0;

/// Measurement time per point, seconds.
pub const DURATION_S: f64 = 10.0;

pub fn detector_a() -> DetectorConfig {
    DetectorConfig {
        efficiency: 0.15,
        gate_window_ns: 1.0,
        dark_prob_per_gate: 5.6e-6,
        trigger_rate_hz: 90e6,
        duty_cycle: 0.09,
    }
}

pub fn detector_b() -> DetectorConfig {
    DetectorConfig {
        efficiency: 0.08,
        gate_window_ns: 2.5,
        dark_prob_per_gate: 2.0e-5,
        trigger_rate_hz: 25e6,
        duty_cycle: 1.0,
    }
}

pub fn source() -> SourceConfig {
    SourceConfig {
        pump_power_mw: PUMP_POWER_MW,
        pump_wavelength_nm: PUMP_WAVELENGTH_NM,
        crystal_temperature_c: CRYSTAL_TEMPERATURE_C,
        theta_rad: 0.0,
        balance: BALANCE,
        noise_p: NOISE_P,
        pair_rate_coeff: PAIR_RATE_COEFF,
        alpha1: ALPHA1,
        alpha2: ALPHA2,
        coherence_length_mm: COHERENCE_LENGTH_MM,
    }
}

/// Visibility of the noiseless (expected-rate) fringe with arm A fixed at
/// `fixed_hwp_deg`, accidentals included.
pub fn expected_fringe_visibility(
    source: &SourceConfig,
    det_a: &DetectorConfig,
    det_b: &DetectorConfig,
    fixed_hwp_deg: f64,
) -> Result<f64> {
    let rho = output_state(source)?;
    let angles = grid(0.0, 180.0, 1.0);
    let mut rates = Vec::with_capacity(angles.len());
    for &h in &angles {
        let (a, b) = fringe_settings(FixedArm::A, fixed_hwp_deg, h)?;
        let probs = DetectionProbabilities {
            joint: joint_probability(&rho, &a, &b)?,
            marginal_a: marginal_probability_a(&rho, &a),
            marginal_b: marginal_probability_b(&rho, &b),
        };
        rates.push(expected_rates(probs, source, det_a, det_b)?.total_coinc());
    }
    Ok(fit_sinusoid(&angles, &rates)?.visibility)
}

/// White-noise weight giving `target` diagonal-basis fringe visibility.
pub fn calibrate_noise_for_visibility(
    target: f64,
    source: &SourceConfig,
    det_a: &DetectorConfig,
    det_b: &DetectorConfig,
) -> Result<f64> {
    let vis = |p: f64| {
        let s = SourceConfig {
            noise_p: p,
            ..source.clone()
        };
        expected_fringe_visibility(&s, det_a, det_b, 22.5)
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    if vis(hi)? < target {
        return Err(Error::invalid(format!(
            "visibility {target} unreachable with these detectors"
        )));
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if vis(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Amplitude ratio `r <= 1` at phase zero giving fidelity `target` to
/// `|Phi+>` for white-noise weight `noise_p`.
///
/// The pure-state fidelity is `(1 + r)^2 / (2 (1 + r^2)) = (1 + C) / 2` with
/// `C = 2r / (1 + r^2)`.
pub fn calibrate_balance_for_fidelity(target: f64, noise_p: f64) -> Result<f64> {
    let pure = (target - (1.0 - noise_p) / 4.0) / noise_p;
    let c = 2.0 * pure - 1.0;
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::invalid(format!(
            "fidelity {target} unreachable with noise weight {noise_p}"
        )));
    }
    Ok((1.0 - (1.0 - c * c).sqrt()) / c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::calibrate_pair_rate_coeff;
    use crate::qstate::{fidelity, phi_plus};

    #[test]
    fn pair_rate_coefficient_is_calibrated() {
        let c = calibrate_pair_rate_coeff(
            TARGET_COINCIDENCE_RATE,
            0.5,
            &source(),
            &detector_a(),
            &detector_b(),
        )
        .unwrap();
        assert!((c - PAIR_RATE_COEFF).abs() < 0.1, "{c}");
    }

    #[test]
    fn noise_weight_is_calibrated() {
        let p = calibrate_noise_for_visibility(
            TARGET_FRINGE_VISIBILITY,
            &source(),
            &detector_a(),
            &detector_b(),
        )
        .unwrap();
        assert!((p - NOISE_P).abs() < 1e-4, "{p}");
        let v = expected_fringe_visibility(&source(), &detector_a(), &detector_b(), 22.5).unwrap();
        assert!((v - TARGET_FRINGE_VISIBILITY).abs() < 2e-4, "{v}");
    }

    #[test]
    fn balance_is_calibrated() {
        let r = calibrate_balance_for_fidelity(TARGET_FIDELITY, NOISE_P).unwrap();
        assert!((r - BALANCE).abs() < 1e-4, "{r}");
        let f = fidelity(&output_state(&source()).unwrap(), &phi_plus()).unwrap();
        assert!((f - TARGET_FIDELITY).abs() < 1e-4, "{f}");
    }

    #[test]
    fn detector_dark_rates() {
        assert!((detector_a().dark_rate() - 504.0).abs() < 1e-9);
        assert!((detector_b().dark_rate() - 500.0).abs() < 1e-9);
        assert!((detector_a().trigger_rate_hz * detector_a().gate_window_ns * 1e-9 - detector_a().duty_cycle).abs() < 1e-12);
    }
}
