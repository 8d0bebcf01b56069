use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polarization::{joint_probability, AnalyzerSetting};
use crate::qstate::DensityMatrix;

/// Period of a two-photon fringe in half-wave-plate angle, degrees.
pub const FRINGE_PERIOD_DEG: f64 = 90.0;

/// Result of fitting `A + B cos(4 (phi - phi0))` to a fringe scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeFit {
    pub c_max: f64,
    pub c_min: f64,
    /// `phi0`, the HWP angle of the fringe maximum, in `[0, 90)` degrees.
    pub phase_deg: f64,
    pub visibility: f64,
    pub residual_rms: f64,
    /// Set when the fitted minimum was negative and clamped to zero.
    pub clamped: bool,
}

impl FringeFit {
    pub fn model(&self, hwp_deg: f64) -> f64 {
        let mean = 0.5 * (self.c_max + self.c_min);
        let amp = 0.5 * (self.c_max - self.c_min);
        mean + amp * (4.0 * (hwp_deg - self.phase_deg)).to_radians().cos()
    }
}

/// Poisson-weighted linear least squares for the fringe in HWP angle.
///
/// Weights are `1 / max(c, 1)`, so probabilities and other sub-unit inputs
/// are fitted unweighted.
pub fn fit_sinusoid(angles_deg: &[f64], counts: &[f64]) -> Result<FringeFit> {
    if angles_deg.len() != counts.len() {
        return Err(Error::invalid("angles and counts differ in length"));
    }
    if angles_deg.len() < 6 {
        return Err(Error::Fit(format!(
            "fringe fit needs at least 6 points, got {}",
            angles_deg.len()
        )));
    }
    if angles_deg.iter().chain(counts).any(|v| !v.is_finite()) || counts.iter().any(|&c| c < 0.0) {
        return Err(Error::invalid("fringe data must be finite and non-negative"));
    }
    let lo = angles_deg.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = angles_deg.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo < FRINGE_PERIOD_DEG - 1e-9 {
        return Err(Error::Fit(format!(
            "scan spans {:.3} deg, less than one {FRINGE_PERIOD_DEG} deg period",
            hi - lo
        )));
    }

    let mut normal = Matrix3::<f64>::zeros();
    let mut rhs = Vector3::<f64>::zeros();
    for (&a, &c) in angles_deg.iter().zip(counts) {
        let (s, co) = (4.0 * a).to_radians().sin_cos();
        let basis = Vector3::new(1.0, co, s);
        let w = 1.0 / c.max(1.0);
        normal += basis * basis.transpose() * w;
        rhs += basis * (w * c);
    }
    let coef = normal
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Fit("degenerate fringe design matrix".into()))?;
    let (mean, bc, bs) = (coef[0], coef[1], coef[2]);
    let amp = bc.hypot(bs);
    let phase = (bs.atan2(bc).to_degrees() / 4.0).rem_euclid(FRINGE_PERIOD_DEG);

    let residual_rms = (angles_deg
        .iter()
        .zip(counts)
        .map(|(&a, &c)| {
            let (s, co) = (4.0 * a).to_radians().sin_cos();
            (c - (mean + bc * co + bs * s)).powi(2)
        })
        .sum::<f64>()
        / counts.len() as f64)
        .sqrt();

    let c_max = (mean + amp).max(0.0);
    let raw_min = mean - amp;
    let clamped = raw_min < 0.0;
    let c_min = raw_min.max(0.0);
    let visibility = if c_max + c_min > 0.0 {
        ((c_max - c_min) / (c_max + c_min)).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Ok(FringeFit {
        c_max,
        c_min,
        phase_deg: phase,
        visibility,
        residual_rms,
        clamped,
    })
}

/// Which arm keeps its half-wave plate fixed during a fringe scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FixedArm {
    #[default]
    A,
    B,
}

/// Analyzer pair for one point of a fringe scan.
pub fn fringe_settings(
    fixed: FixedArm,
    fixed_hwp_deg: f64,
    scan_hwp_deg: f64,
) -> Result<(AnalyzerSetting, AnalyzerSetting)> {
    let f = AnalyzerSetting::hwp(fixed_hwp_deg)?;
    let s = AnalyzerSetting::hwp(scan_hwp_deg)?;
    Ok(match fixed {
        FixedArm::A => (f, s),
        FixedArm::B => (s, f),
    })
}

/// Exact joint probabilities along a fringe scan.
pub fn fringe_probabilities(
    rho: &DensityMatrix,
    fixed: FixedArm,
    fixed_hwp_deg: f64,
    scan_hwp_deg: &[f64],
) -> Result<Vec<f64>> {
    scan_hwp_deg
        .iter()
        .map(|&h| {
            let (a, b) = fringe_settings(fixed, fixed_hwp_deg, h)?;
            joint_probability(rho, &a, &b)
        })
        .collect()
}

/// Contrast between diagonal/diagonal and diagonal/antidiagonal coincidence
/// probabilities, `(P(D,D) - P(D,A)) / (P(D,D) + P(D,A))`.
///
/// This is the 45-degree-basis visibility read at the extrema positions of
/// `|Phi+>`; it measures the HV/VH coherence `2 |rho_{HV,VH}|` and falls to
/// zero for an unbalanced-to-product source.
pub fn diagonal_contrast(rho: &DensityMatrix) -> Result<f64> {
    let d = AnalyzerSetting::linear(45.0)?;
    let a = AnalyzerSetting::linear(135.0)?;
    let pdd = joint_probability(rho, &d, &d)?;
    let pda = joint_probability(rho, &d, &a)?;
    if pdd + pda <= 0.0 {
        return Ok(0.0);
    }
    Ok((pdd - pda) / (pdd + pda))
}

/// Uniform grid `start, start + step, ...` up to and including `stop`.
pub fn grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|k| start + step * k as f64).collect()
}
