//! Two-qubit polarization states.
//!
//! Every vector and matrix in this crate uses the computational basis in the
//! fixed order `(HH, HV, VH, VV)`: index `2 * a + b` where `a` is the
//! polarization of the photon in arm A, `b` the one in arm B, and `H = 0`,
//! `V = 1`. The first tensor factor is always arm A.

use std::fmt;

use nalgebra::{Matrix4, SymmetricEigen, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Labels of the basis states in storage order.
pub const BASIS_LABELS: [&str; 4] = ["HH", "HV", "VH", "VV"];

pub const HH: usize = 0;
pub const HV: usize = 1;
pub const VH: usize = 2;
pub const VV: usize = 3;

/// Maximum elementwise deviation from Hermiticity accepted for a state.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Maximum deviation of the trace from one.
pub const TRACE_TOL: f64 = 1e-10;
/// Eigenvalues down to `-PSD_SLACK` are treated as numerical zeros.
pub const PSD_SLACK: f64 = 1e-9;

const NORM_TOL: f64 = 1e-12;

/// A normalized pure two-photon polarization state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KetState {
    amps: Vector4<Complex64>,
}

impl KetState {
    /// Normalizes `amps`. Fails on a zero or non-finite vector.
    pub fn new(amps: [Complex64; 4]) -> Result<Self> {
        let v = Vector4::from(amps);
        if v.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::invalid("ket amplitudes must be finite"));
        }
        let norm = v.norm();
        if norm <= f64::EPSILON {
            return Err(Error::invalid("ket has zero norm"));
        }
        Ok(Self {
            amps: v.unscale(norm),
        })
    }

    pub fn amplitudes(&self) -> [Complex64; 4] {
        [self.amps[0], self.amps[1], self.amps[2], self.amps[3]]
    }

    pub fn as_vector(&self) -> &Vector4<Complex64> {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &KetState) -> Complex64 {
        self.amps.dotc(&other.amps)
    }

    /// Phase-insensitive overlap `|<self|other>|`.
    pub fn overlap(&self, other: &KetState) -> f64 {
        self.inner(other).norm()
    }
}

/// `(|HV> + e^{i theta} |VH>) / sqrt(2)`, the state emitted by a balanced loop.
pub fn bell_state(theta: f64) -> Result<KetState> {
    if !theta.is_finite() {
        return Err(Error::invalid(format!("theta must be finite, got {theta}")));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut amps = [Complex64::new(0.0, 0.0); 4];
    amps[HV] = Complex64::new(s, 0.0);
    amps[VH] = Complex64::from_polar(s, theta);
    Ok(KetState {
        amps: Vector4::from(amps),
    })
}

/// `|Phi+> = (|HV> + |VH>) / sqrt(2)`.
pub fn phi_plus() -> KetState {
    bell_state(0.0).expect("finite phase")
}

/// Which of the state invariants a matrix violates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Violation {
    Hermitian,
    Trace,
    Positivity,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Violation::Hermitian => "hermitian",
            Violation::Trace => "trace",
            Violation::Positivity => "positivity",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalityReport {
    pub max_hermitian_deviation: f64,
    pub trace: Complex64,
    pub min_eigenvalue: f64,
    pub violations: Vec<Violation>,
}

impl PhysicalityReport {
    pub fn is_physical(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn flags(&self, v: Violation) -> bool {
        self.violations.contains(&v)
    }
}

/// Checks the three density-matrix invariants on an arbitrary 4x4 matrix.
pub fn check_physical(m: &Matrix4<Complex64>) -> PhysicalityReport {
    let herm_dev = (m - m.adjoint())
        .iter()
        .map(|c| c.norm())
        .fold(0.0, f64::max);
    let trace = m.trace();
    let mut violations = Vec::new();
    if !(herm_dev <= HERMITIAN_TOL) {
        violations.push(Violation::Hermitian);
    }
    if !((trace.re - 1.0).abs() <= TRACE_TOL && trace.im.abs() <= TRACE_TOL) {
        violations.push(Violation::Trace);
    }
    let herm = hermitian_part(m);
    let min_eig = SymmetricEigen::new(herm)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if !(min_eig >= -PSD_SLACK) {
        violations.push(Violation::Positivity);
    }
    PhysicalityReport {
        max_hermitian_deviation: herm_dev,
        trace,
        min_eigenvalue: min_eig,
        violations,
    }
}

fn hermitian_part(m: &Matrix4<Complex64>) -> Matrix4<Complex64> {
    (m + m.adjoint()).scale(0.5)
}

/// A physical two-qubit density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix {
    m: Matrix4<Complex64>,
}

impl DensityMatrix {
    /// Validates `m`. Eigenvalues inside `[-PSD_SLACK, 0)` are clipped to zero
    /// and the matrix is renormalized.
    pub fn new(m: Matrix4<Complex64>) -> Result<Self> {
        let report = check_physical(&m);
        if !report.is_physical() {
            let names: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
            return Err(Error::InvalidState(format!(
                "matrix is not a density matrix (failed: {})",
                names.join(", ")
            )));
        }
        let herm = hermitian_part(&m);
        if report.min_eigenvalue < 0.0 {
            return Ok(Self {
                m: clip_negative_eigenvalues(&herm),
            });
        }
        Ok(Self { m: herm })
    }

    /// Normalizes a positive semidefinite matrix by its trace.
    pub fn from_unnormalized(m: Matrix4<Complex64>) -> Result<Self> {
        let tr = m.trace().re;
        if !(tr > 0.0) || !tr.is_finite() {
            return Err(Error::InvalidState(format!("non-positive trace {tr}")));
        }
        Self::new(m.unscale(tr))
    }

    /// `I / 4`.
    pub fn maximally_mixed() -> Self {
        Self {
            m: Matrix4::identity().scale(0.25),
        }
    }

    pub fn matrix(&self) -> &Matrix4<Complex64> {
        &self.m
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.m[(row, col)]
    }

    /// Convex combination `w * self + (1 - w) * other`.
    pub fn mix(&self, other: &DensityMatrix, w: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::invalid(format!("mixing weight {w} outside [0, 1]")));
        }
        Ok(Self {
            m: self.m.scale(w) + other.m.scale(1.0 - w),
        })
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 4] {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.m).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        [ev[0], ev[1], ev[2], ev[3]]
    }

    /// `Tr(rho O)` for a Hermitian observable (real part).
    pub fn expectation(&self, op: &Matrix4<Complex64>) -> f64 {
        (self.m * op).trace().re
    }

    pub fn to_report(&self) -> DensityMatrixReport {
        let mut re = [[0.0; 4]; 4];
        let mut im = [[0.0; 4]; 4];
        for r in 0..4 {
            for c in 0..4 {
                re[r][c] = self.m[(r, c)].re;
                im[r][c] = self.m[(r, c)].im;
            }
        }
        DensityMatrixReport {
            basis: BASIS_LABELS.map(String::from),
            re,
            im,
        }
    }
}

fn clip_negative_eigenvalues(herm: &Matrix4<Complex64>) -> Matrix4<Complex64> {
    let eig = SymmetricEigen::new(*herm);
    let clipped = eig.eigenvalues.map(|l| l.max(0.0));
    let total: f64 = clipped.iter().sum();
    let mut out = Matrix4::zeros();
    for k in 0..4 {
        let v = eig.eigenvectors.column(k);
        out += (v * v.adjoint()).scale(clipped[k] / total);
    }
    out
}

/// Serialized form of a density matrix: real and imaginary parts plus the
/// basis labels they refer to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrixReport {
    pub basis: [String; 4],
    pub re: [[f64; 4]; 4],
    pub im: [[f64; 4]; 4],
}

impl DensityMatrixReport {
    pub fn to_density_matrix(&self) -> Result<DensityMatrix> {
        if self.basis != BASIS_LABELS.map(String::from) {
            return Err(Error::invalid(format!(
                "unsupported basis order {:?}",
                self.basis
            )));
        }
        let m = Matrix4::from_fn(|r, c| Complex64::new(self.re[r][c], self.im[r][c]));
        DensityMatrix::new(m)
    }
}

/// `|psi><psi|`.
pub fn pure_density(psi: &KetState) -> DensityMatrix {
    let v = psi.as_vector();
    DensityMatrix { m: v * v.adjoint() }
}

/// `p |psi><psi| + (1 - p) I / 4`.
pub fn mix_with_white_noise(psi: &KetState, p: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("noise parameter {p} outside [0, 1]")));
    }
    pure_density(psi).mix(&DensityMatrix::maximally_mixed(), p)
}

/// `<psi|rho|psi>`, clamped to `[0, 1]`.
pub fn fidelity(rho: &DensityMatrix, psi: &KetState) -> Result<f64> {
    let v = psi.as_vector();
    if (v.norm() - 1.0).abs() > NORM_TOL * 1e2 {
        return Err(Error::invalid("fidelity target is not normalized"));
    }
    let report = check_physical(rho.matrix());
    if !report.is_physical() {
        return Err(Error::InvalidState("fidelity of unphysical matrix".into()));
    }
    let f = v.dotc(&(rho.matrix() * v));
    Ok(f.re.clamp(0.0, 1.0))
}

/// Positive square root of a Hermitian PSD matrix, small negative
/// eigenvalues clipped.
fn psd_sqrt(m: &Matrix4<Complex64>) -> Matrix4<Complex64> {
    let eig = SymmetricEigen::new(*m);
    let d = Matrix4::from_diagonal(&eig.eigenvalues.map(|l| Complex64::new(l.max(0.0).sqrt(), 0.0)));
    eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

/// Uhlmann fidelity `(Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2` between two
/// density matrices. Reduces to [`fidelity`] when `sigma` is pure.
pub fn state_fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> f64 {
    let r = psd_sqrt(rho.matrix());
    let inner = r * sigma.matrix() * r;
    let inner = (inner + inner.adjoint()).scale(0.5);
    let root: f64 = SymmetricEigen::new(inner)
        .eigenvalues
        .iter()
        .map(|l| l.max(0.0).sqrt())
        .sum();
    (root * root).clamp(0.0, 1.0)
}

/// `Tr(rho^2)`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    (rho.matrix() * rho.matrix()).trace().re
}

pub fn is_physical(m: &Matrix4<Complex64>) -> PhysicalityReport {
    check_physical(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn theta_zero_is_phi_plus() {
        let a = bell_state(0.0).unwrap().amplitudes();
        assert_eq!(a[HH], c(0.0, 0.0));
        assert!((a[HV] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((a[VH] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert_eq!(a[VV], c(0.0, 0.0));
    }

    #[test]
    fn theta_pi_is_orthogonal_to_phi_plus() {
        let psi = bell_state(PI).unwrap();
        assert!(psi.overlap(&phi_plus()) < 1e-15);
    }

    #[test]
    fn theta_half_pi_amplitudes() {
        let a = bell_state(PI / 2.0).unwrap().amplitudes();
        assert!((a[HV] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((a[VH] - c(0.0, FRAC_1_SQRT_2)).norm() < 1e-15);
    }

    #[test]
    fn non_finite_theta_rejected() {
        assert!(matches!(bell_state(f64::NAN), Err(Error::InvalidArgument(_))));
        assert!(bell_state(f64::INFINITY).is_err());
    }

    #[test]
    fn phi_plus_outer_product_entries() {
        let rho = pure_density(&phi_plus());
        for r in 0..4 {
            for col in 0..4 {
                let expected = if [HV, VH].contains(&r) && [HV, VH].contains(&col) {
                    0.5
                } else {
                    0.0
                };
                assert!((rho.get(r, col) - c(expected, 0.0)).norm() < 1e-15);
            }
        }
        assert!((rho.matrix().trace() - c(1.0, 0.0)).norm() < 1e-15);
        assert!((purity(&rho) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn noise_extremes() {
        let psi = bell_state(0.3).unwrap();
        let p1 = mix_with_white_noise(&psi, 1.0).unwrap();
        assert_eq!(p1, pure_density(&psi));
        let p0 = mix_with_white_noise(&psi, 0.0).unwrap();
        assert!((purity(&p0) - 0.25).abs() < 1e-15);
        assert!(mix_with_white_noise(&psi, 1.01).is_err());
        assert!(mix_with_white_noise(&psi, -0.01).is_err());
    }

    #[test]
    fn werner_fidelity_by_direct_matrix_product() {
        // Build the Werner matrix entry by entry and contract with Phi+ by hand.
        let p = 0.913;
        let mut m = [[0.0f64; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = (1.0 - p) / 4.0;
        }
        for i in [HV, VH] {
            for j in [HV, VH] {
                m[i][j] += p * 0.5;
            }
        }
        let amp = [0.0, FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0];
        let mut oracle = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                oracle += amp[i] * m[i][j] * amp[j];
            }
        }
        let rho = mix_with_white_noise(&phi_plus(), p).unwrap();
        let f = fidelity(&rho, &phi_plus()).unwrap();
        assert!((f - oracle).abs() < 1e-12);
        assert!((f - (3.0 * p + 1.0) / 4.0).abs() < 1e-12);
        assert!((f - 0.935).abs() < 1e-3);
    }

    #[test]
    fn state_fidelity_oracles() {
        let psi = bell_state(0.7).unwrap();
        let pure = pure_density(&psi);
        for p in [0.0, 0.3, 0.964, 1.0] {
            let rho = mix_with_white_noise(&psi, p).unwrap();
            let want = fidelity(&rho, &psi).unwrap();
            assert!((state_fidelity(&rho, &pure) - want).abs() < 1e-7);
            assert!((state_fidelity(&pure, &rho) - want).abs() < 1e-7);
        }
        let mixed = DensityMatrix::maximally_mixed();
        assert!((state_fidelity(&mixed, &mixed) - 1.0).abs() < 1e-12);
        // commuting states: (sum sqrt(p_i q_i))^2
        let a = DensityMatrix::new(Matrix4::from_diagonal(&Vector4::new(0.4, 0.3, 0.2, 0.1).map(|x| Complex64::new(x, 0.0)))).unwrap();
        let b = DensityMatrix::new(Matrix4::from_diagonal(&Vector4::new(0.1, 0.2, 0.3, 0.4).map(|x| Complex64::new(x, 0.0)))).unwrap();
        let want = (0.04f64.sqrt() + 0.06f64.sqrt() + 0.06f64.sqrt() + 0.04f64.sqrt()).powi(2);
        assert!((state_fidelity(&a, &b) - want).abs() < 1e-12);
    }

    #[test]
    fn fidelity_of_mixed_state() {
        let rho = DensityMatrix::maximally_mixed();
        for theta in [0.0, 1.0, 2.5] {
            let f = fidelity(&rho, &bell_state(theta).unwrap()).unwrap();
            assert!((f - 0.25).abs() < 1e-15);
        }
        let pure = pure_density(&phi_plus());
        assert!((fidelity(&pure, &phi_plus()).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn trace_defect_is_flagged() {
        let m = Matrix4::<Complex64>::identity().scale(0.9 / 4.0);
        let report = is_physical(&m);
        assert!(!report.is_physical());
        assert!(report.flags(Violation::Trace));
        assert!(!report.flags(Violation::Hermitian));
        assert!(!report.flags(Violation::Positivity));
        assert!(matches!(DensityMatrix::new(m), Err(Error::InvalidState(_))));
    }

    #[test]
    fn non_hermitian_and_negative_flagged() {
        let mut m = Matrix4::<Complex64>::identity().scale(0.25);
        m[(0, 1)] = c(0.1, 0.0);
        assert!(is_physical(&m).flags(Violation::Hermitian));

        let m = Matrix4::from_diagonal(&Vector4::new(c(0.6, 0.0), c(0.6, 0.0), c(-0.1, 0.0), c(-0.1, 0.0)));
        assert!(is_physical(&m).flags(Violation::Positivity));
    }

    #[test]
    fn tiny_negative_eigenvalues_are_clipped() {
        let m = Matrix4::from_diagonal(&Vector4::new(
            c(0.5 + 5e-10, 0.0),
            c(0.5, 0.0),
            c(-5e-10, 0.0),
            c(0.0, 0.0),
        ));
        let rho = DensityMatrix::new(m).unwrap();
        assert!(rho.eigenvalues()[0] >= 0.0);
        assert!((rho.matrix().trace().re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn report_round_trip() {
        let rho = mix_with_white_noise(&bell_state(0.7).unwrap(), 0.8).unwrap();
        let rep = rho.to_report();
        let json = serde_json::to_string(&rep).unwrap();
        assert!(json.contains("\"basis\":[\"HH\",\"HV\",\"VH\",\"VV\"]"));
        let back: DensityMatrixReport = serde_json::from_str(&json).unwrap();
        let rho2 = back.to_density_matrix().unwrap();
        assert!((rho2.matrix() - rho.matrix()).norm() < 1e-15);
    }
}
