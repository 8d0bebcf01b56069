//! Jones-calculus model of the per-arm polarization analyzers.
//!
//! An analyzer is an optional quarter-wave plate, a half-wave plate and a
//! polarizer that transmits horizontal light, in that order along the beam.
//! The transmitted input state is `QWP(q)^† HWP(h)^† |H>`; for a half-wave
//! plate alone at angle `h` this is linear polarization at `2h`.

use nalgebra::{Matrix2, Matrix4, Vector2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::{check_physical, DensityMatrix};

pub type Jones = Matrix2<Complex64>;

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Half-wave plate with its fast axis at `theta_deg` from horizontal.
pub fn hwp_jones(theta_deg: f64) -> Jones {
    let t = 2.0 * theta_deg.to_radians();
    let (s, c) = t.sin_cos();
    Matrix2::new(re(c), re(s), re(s), re(-c))
}

/// Quarter-wave plate with its fast axis at `theta_deg`, global phase
/// `e^{-i pi/4}` so that `qwp_jones(0) = e^{-i pi/4} diag(1, i)`.
pub fn qwp_jones(theta_deg: f64) -> Jones {
    let t = theta_deg.to_radians();
    let (s, c) = t.sin_cos();
    let i = Complex64::i();
    let phase = Complex64::from_polar(1.0, -std::f64::consts::FRAC_PI_4);
    let off = (re(1.0) - i) * (s * c);
    Matrix2::new(
        re(c * c) + i * (s * s),
        off,
        off,
        re(s * s) + i * (c * c),
    ) * phase
}

/// Settings of one arm's analyzer. Angles are in degrees and stored modulo 180.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyzerSetting {
    qwp: Option<f64>,
    hwp: f64,
}

fn wrap180(a: f64) -> f64 {
    let w = a.rem_euclid(180.0);
    // rem_euclid can return 180.0 for tiny negative inputs
    if w >= 180.0 {
        0.0
    } else {
        w
    }
}

impl AnalyzerSetting {
    pub fn new(qwp_deg: Option<f64>, hwp_deg: f64) -> Result<Self> {
        if !hwp_deg.is_finite() || qwp_deg.is_some_and(|q| !q.is_finite()) {
            return Err(Error::invalid("analyzer angles must be finite"));
        }
        Ok(Self {
            qwp: qwp_deg.map(wrap180),
            hwp: wrap180(hwp_deg),
        })
    }

    /// Half-wave plate only.
    pub fn hwp(hwp_deg: f64) -> Result<Self> {
        Self::new(None, hwp_deg)
    }

    /// Half-wave plate set to analyze linear polarization at `pol_deg`.
    pub fn linear(pol_deg: f64) -> Result<Self> {
        Self::new(None, pol_deg / 2.0)
    }

    pub fn qwp_angle(&self) -> Option<f64> {
        self.qwp
    }

    pub fn hwp_angle(&self) -> f64 {
        self.hwp
    }

    /// The analyzer that transmits the orthogonal polarization.
    pub fn orthogonal(&self) -> Self {
        Self {
            qwp: self.qwp,
            hwp: wrap180(self.hwp + 45.0),
        }
    }

    /// Jones vector of the polarization this analyzer transmits.
    pub fn transmitted_state(&self) -> Vector2<Complex64> {
        let h = Vector2::new(re(1.0), re(0.0));
        let after_hwp = hwp_jones(self.hwp).adjoint() * h;
        match self.qwp {
            Some(q) => qwp_jones(q).adjoint() * after_hwp,
            None => after_hwp,
        }
    }
}

/// Rank-one projector on a single photon's polarization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projector2(Jones);

impl Projector2 {
    pub fn onto(state: &Vector2<Complex64>) -> Result<Self> {
        let n = state.norm();
        if !(n > 0.0) {
            return Err(Error::invalid("cannot project onto a zero vector"));
        }
        let v = state.unscale(n);
        Ok(Self(v * v.adjoint()))
    }

    pub fn matrix(&self) -> &Jones {
        &self.0
    }

    pub fn complement(&self) -> Self {
        Self(Jones::identity() - self.0)
    }
}

pub fn analyzer_projector(setting: &AnalyzerSetting) -> Projector2 {
    Projector2::onto(&setting.transmitted_state()).expect("transmitted state has unit norm")
}

/// Joint operator `Pi_a (x) Pi_b` in the `(HH, HV, VH, VV)` basis.
pub fn joint_operator(a: &Projector2, b: &Projector2) -> Matrix4<Complex64> {
    a.matrix().kronecker(b.matrix())
}

/// `Tr(rho Pi_a (x) Pi_b)` for the projectors of two analyzer settings.
pub fn joint_probability(
    rho: &DensityMatrix,
    a: &AnalyzerSetting,
    b: &AnalyzerSetting,
) -> Result<f64> {
    if !check_physical(rho.matrix()).is_physical() {
        return Err(Error::InvalidState("joint probability of unphysical state".into()));
    }
    let op = joint_operator(&analyzer_projector(a), &analyzer_projector(b));
    Ok(rho.expectation(&op).clamp(0.0, 1.0))
}

/// Probability that the arm-A photon passes analyzer `a`, regardless of arm B.
pub fn marginal_probability_a(rho: &DensityMatrix, a: &AnalyzerSetting) -> f64 {
    let op = analyzer_projector(a).matrix().kronecker(&Jones::identity());
    rho.expectation(&op).clamp(0.0, 1.0)
}

/// Probability that the arm-B photon passes analyzer `b`, regardless of arm A.
pub fn marginal_probability_b(rho: &DensityMatrix, b: &AnalyzerSetting) -> f64 {
    let op = Jones::identity().kronecker(analyzer_projector(b).matrix());
    rho.expectation(&op).clamp(0.0, 1.0)
}

/// Single-photon polarization labels used by the tomography table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pol {
    H,
    V,
    D,
    R,
    L,
}

impl Pol {
    /// Waveplate angles `(qwp, hwp)` in degrees that make the analyzer
    /// transmit this polarization.
    pub fn setting(self) -> AnalyzerSetting {
        let (q, h) = match self {
            Pol::H => (0.0, 0.0),
            Pol::V => (0.0, 45.0),
            Pol::D => (45.0, 22.5),
            Pol::R => (135.0, 0.0),
            Pol::L => (45.0, 0.0),
        };
        AnalyzerSetting::new(Some(q), h).expect("finite table angles")
    }

    pub fn label(self) -> char {
        match self {
            Pol::H => 'H',
            Pol::V => 'V',
            Pol::D => 'D',
            Pol::R => 'R',
            Pol::L => 'L',
        }
    }
}

/// The sixteen two-photon projections used for tomography, as (arm A, arm B).
///
/// | # | proj | A (qwp, hwp)  | B (qwp, hwp)  |
/// |---|------|---------------|---------------|
/// | 1 | HH   | (0, 0)        | (0, 0)        |
/// | 2 | HV   | (0, 0)        | (0, 45)       |
/// | 3 | VV   | (0, 45)       | (0, 45)       |
/// | 4 | VH   | (0, 45)       | (0, 0)        |
/// | 5 | RH   | (135, 0)      | (0, 0)        |
/// | 6 | RV   | (135, 0)      | (0, 45)       |
/// | 7 | DV   | (45, 22.5)    | (0, 45)       |
/// | 8 | DH   | (45, 22.5)    | (0, 0)        |
/// | 9 | DR   | (45, 22.5)    | (135, 0)      |
/// |10 | DD   | (45, 22.5)    | (45, 22.5)    |
/// |11 | RD   | (135, 0)      | (45, 22.5)    |
/// |12 | HD   | (0, 0)        | (45, 22.5)    |
/// |13 | VD   | (0, 45)       | (45, 22.5)    |
/// |14 | VL   | (0, 45)       | (45, 0)       |
/// |15 | HL   | (0, 0)        | (45, 0)       |
/// |16 | RL   | (135, 0)      | (45, 0)       |
///
/// With `R = (H - iV)/sqrt(2)`, `L = (H + iV)/sqrt(2)`, `D = (H + V)/sqrt(2)`.
pub const TOMOGRAPHY_PROJECTIONS: [(Pol, Pol); 16] = [
    (Pol::H, Pol::H),
    (Pol::H, Pol::V),
    (Pol::V, Pol::V),
    (Pol::V, Pol::H),
    (Pol::R, Pol::H),
    (Pol::R, Pol::V),
    (Pol::D, Pol::V),
    (Pol::D, Pol::H),
    (Pol::D, Pol::R),
    (Pol::D, Pol::D),
    (Pol::R, Pol::D),
    (Pol::H, Pol::D),
    (Pol::V, Pol::D),
    (Pol::V, Pol::L),
    (Pol::H, Pol::L),
    (Pol::R, Pol::L),
];

pub fn tomography_settings() -> [(AnalyzerSetting, AnalyzerSetting); 16] {
    TOMOGRAPHY_PROJECTIONS.map(|(a, b)| (a.setting(), b.setting()))
}
