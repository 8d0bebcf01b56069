//! Maximum-likelihood reconstruction of a two-qubit state.
//!
//! The state is parameterized as `rho = T^† T / Tr(T^† T)` with `T` lower
//! triangular (four real diagonal entries, six complex off-diagonal ones),
//! which keeps every candidate physical. The unnormalized `T^† T` also
//! carries the count scale: the expected coincidences for record `k` are
//! `mu_k = (t_k / t_0) Tr(T^† T M_k) + b_k`, with `M_k` the joint projector,
//! `t_k` the accumulation time and `b_k` an optional accidental background.
//! The minimized objective is the Poisson deviance
//! `sum_k mu_k - n_k - n_k ln(mu_k / n_k)`.

use nalgebra::{Cholesky, DMatrix, DVector, Matrix2, Matrix4, SVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::optimize::{bfgs, BfgsOptions};
use crate::detection::CountRecord;
use crate::error::{Error, ReconstructionDiagnostics, Result};
use crate::polarization::{analyzer_projector, joint_operator};
use crate::qstate::DensityMatrix;

type Params = SVector<f64, 16>;
type CMat4 = Matrix4<Complex64>;

/// Lower-triangle positions of the complex off-diagonal entries of `T`.
const OFF_DIAGONAL: [(usize, usize); 6] = [(1, 0), (2, 0), (2, 1), (3, 0), (3, 1), (3, 2)];

#[derive(Debug, Clone)]
pub struct TomographyOptions {
    /// Extra optimizer runs from perturbed starting points.
    pub restarts: usize,
    pub seed: u64,
    /// Include accidentals `S_a S_b window / t` as a known background.
    pub accidental_window_s: Option<f64>,
    pub optimizer: BfgsOptions,
}

impl Default for TomographyOptions {
    fn default() -> Self {
        Self {
            restarts: 3,
            seed: 0,
            accidental_window_s: None,
            optimizer: BfgsOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TomographyResult {
    pub state: DensityMatrix,
    pub deviance: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
    /// Objective after each accepted step of the winning run.
    pub history: Vec<f64>,
    /// Final deviance of every run, the unperturbed start first.
    pub run_deviances: Vec<f64>,
}

struct Problem {
    ops: Vec<CMat4>,
    counts: Vec<f64>,
    exposure: Vec<f64>,
    background: Vec<f64>,
}

impl Problem {
    fn from_records(records: &[CountRecord], opts: &TomographyOptions) -> Result<Self> {
        if records.len() < 16 {
            return Err(Error::invalid(format!(
                "tomography needs at least 16 records, got {}",
                records.len()
            )));
        }
        let t0 = records[0].duration_s;
        if records.iter().any(|r| !(r.duration_s > 0.0)) {
            return Err(Error::invalid("tomography record with non-positive duration"));
        }
        let total: u64 = records.iter().map(|r| r.coincidences).sum();
        if total == 0 {
            return Err(Error::invalid("tomography records contain no coincidences"));
        }
        let ops = records
            .iter()
            .map(|r| {
                joint_operator(
                    &analyzer_projector(&r.setting_a),
                    &analyzer_projector(&r.setting_b),
                )
            })
            .collect();
        let background = records
            .iter()
            .map(|r| match opts.accidental_window_s {
                Some(w) => r.singles_a as f64 * r.singles_b as f64 * w / r.duration_s,
                None => 0.0,
            })
            .collect();
        Ok(Self {
            ops,
            counts: records.iter().map(|r| r.coincidences as f64).collect(),
            exposure: records.iter().map(|r| r.duration_s / t0).collect(),
            background,
        })
    }

    fn expected(&self, a: &CMat4) -> Vec<f64> {
        self.ops
            .iter()
            .zip(&self.exposure)
            .zip(&self.background)
            .map(|((m, e), b)| e * (a * m).trace().re + b)
            .collect()
    }

    fn deviance_and_gradient(&self, x: &Params) -> (f64, Params) {
        let t = t_from_params(x);
        let a = t.adjoint() * t;
        let mu = self.expected(&a);
        let mut f = 0.0;
        let mut g_op = CMat4::zeros();
        for k in 0..self.ops.len() {
            let (m, n) = (mu[k], self.counts[k]);
            if n > 0.0 {
                if !(m > 0.0) {
                    return (f64::INFINITY, Params::zeros());
                }
                f += m - n - n * (m / n).ln();
                g_op += self.ops[k] * Complex64::new(self.exposure[k] * (1.0 - n / m), 0.0);
            } else {
                f += m;
                g_op += self.ops[k] * Complex64::new(self.exposure[k], 0.0);
            }
        }
        // df = 2 Re Tr(G T^† dT)
        let gt = g_op * t.adjoint();
        let mut grad = Params::zeros();
        for k in 0..4 {
            grad[k] = 2.0 * gt[(k, k)].re;
        }
        for (idx, &(i, j)) in OFF_DIAGONAL.iter().enumerate() {
            grad[4 + 2 * idx] = 2.0 * gt[(j, i)].re;
            grad[5 + 2 * idx] = -2.0 * gt[(j, i)].im;
        }
        (f, grad)
    }
}

fn t_from_params(x: &Params) -> CMat4 {
    let mut t = CMat4::zeros();
    for k in 0..4 {
        t[(k, k)] = Complex64::new(x[k], 0.0);
    }
    for (idx, &(i, j)) in OFF_DIAGONAL.iter().enumerate() {
        t[(i, j)] = Complex64::new(x[4 + 2 * idx], x[5 + 2 * idx]);
    }
    t
}

fn params_from_t(t: &CMat4) -> Params {
    let mut x = Params::zeros();
    for k in 0..4 {
        x[k] = t[(k, k)].re;
    }
    for (idx, &(i, j)) in OFF_DIAGONAL.iter().enumerate() {
        x[4 + 2 * idx] = t[(i, j)].re;
        x[5 + 2 * idx] = t[(i, j)].im;
    }
    x
}

/// Lower-triangular `T` with `T^† T = a`, for positive definite `a`.
fn lower_factor(a: &CMat4) -> Option<CMat4> {
    // reverse the index order, take L L^†, reverse back: J L^† J is lower
    let rev = CMat4::from_fn(|r, c| a[(3 - r, 3 - c)]);
    let l = Cholesky::new(rev)?.l();
    let lh = l.adjoint();
    Some(CMat4::from_fn(|r, c| lh[(3 - r, 3 - c)]))
}

fn pauli(k: usize) -> Matrix2<Complex64> {
    let z = Complex64::new(0.0, 0.0);
    let o = Complex64::new(1.0, 0.0);
    let i = Complex64::i();
    match k {
        0 => Matrix2::new(o, z, z, o),
        1 => Matrix2::new(z, o, o, z),
        2 => Matrix2::new(z, -i, i, z),
        _ => Matrix2::new(o, z, z, -o),
    }
}

fn pauli_basis() -> Vec<CMat4> {
    (0..16).map(|k| pauli(k / 4).kronecker(&pauli(k % 4))).collect()
}

/// Unconstrained least-squares estimate of the (unnormalized) count-scale
/// matrix. May have negative eigenvalues.
fn linear_inversion(p: &Problem) -> Result<CMat4> {
    let basis = pauli_basis();
    let n = p.ops.len();
    let design = DMatrix::from_fn(n, 16, |r, c| {
        p.exposure[r] * (basis[c] * p.ops[r]).trace().re / 4.0
    });
    let y = DVector::from_fn(n, |r, _| p.counts[r] - p.background[r]);
    let normal = design.transpose() * &design;
    let rhs = design.transpose() * y;
    let svd_min = normal
        .clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let svd_max = normal
        .clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(0.0, f64::max);
    if !(svd_min > 1e-10 * svd_max) {
        return Err(Error::invalid(
            "measurement settings are not tomographically complete",
        ));
    }
    let coef = normal
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::invalid("singular tomography design"))?;
    let mut a = CMat4::zeros();
    for (k, b) in basis.iter().enumerate() {
        a += b * Complex64::new(coef[k] / 4.0, 0.0);
    }
    Ok(a)
}

/// Projects a Hermitian matrix onto positive definite ones by raising small
/// or negative eigenvalues to `floor * trace`.
fn regularize(a: &CMat4, floor: f64) -> CMat4 {
    let herm = (a + a.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(herm);
    let positive: f64 = eig.eigenvalues.iter().map(|l| l.max(0.0)).sum();
    let scale = if positive > 0.0 { positive } else { 1.0 };
    let mut out = CMat4::zeros();
    for k in 0..4 {
        let lam = eig.eigenvalues[k].max(floor * scale);
        let v = eig.eigenvectors.column(k);
        out += (v * v.adjoint()).scale(lam);
    }
    out
}

/// Maximum-likelihood density matrix from coincidence records.
pub fn mle_tomography(records: &[CountRecord], opts: &TomographyOptions) -> Result<TomographyResult> {
    let problem = Problem::from_records(records, opts)?;
    let start = regularize(&linear_inversion(&problem)?, 1e-3);
    let t0 = lower_factor(&start).ok_or_else(|| Error::InvalidState("starting point not positive definite".into()))?;
    let x0 = params_from_t(&t0);
    let scale = x0.amax();

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut starts = vec![x0];
    for _ in 0..opts.restarts {
        let mut x = x0;
        for v in x.iter_mut() {
            let g1: f64 = rng.random::<f64>() * 2.0 - 1.0;
            let g2: f64 = rng.random::<f64>() * 2.0 - 1.0;
            *v = *v * (1.0 + 0.1 * g1) + 0.05 * scale * g2;
        }
        starts.push(x);
    }

    let mut best: Option<super::optimize::BfgsOutcome<16>> = None;
    let mut run_deviances = Vec::with_capacity(starts.len());
    for x in starts {
        let out = bfgs(|p| problem.deviance_and_gradient(p), x, &opts.optimizer);
        if !out.converged {
            return Err(Error::Reconstruction(ReconstructionDiagnostics {
                iterations: out.iterations,
                gradient_norm: out.gradient_norm,
                objective: out.f,
            }));
        }
        run_deviances.push(out.f);
        if best.as_ref().is_none_or(|b| out.f < b.f) {
            best = Some(out);
        }
    }
    let best = best.expect("at least one run");
    let t = t_from_params(&best.x);
    let state = DensityMatrix::from_unnormalized(t.adjoint() * t)?;
    Ok(TomographyResult {
        state,
        deviance: best.f,
        iterations: best.iterations,
        gradient_norm: best.gradient_norm,
        history: best.history,
        run_deviances,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::Counts;
    use crate::polarization::{joint_probability, tomography_settings};
    use crate::qstate::{fidelity, mix_with_white_noise, phi_plus, pure_density, purity};

    fn exact_records(rho: &DensityMatrix, scale: f64) -> Vec<CountRecord> {
        tomography_settings()
            .iter()
            .map(|(a, b)| {
                let p = joint_probability(rho, a, b).unwrap();
                CountRecord::new(
                    *a,
                    *b,
                    1.0,
                    Counts {
                        singles_a: u64::MAX / 4,
                        singles_b: u64::MAX / 4,
                        coincidences: (p * scale).round() as u64,
                    },
                    0,
                )
            })
            .collect()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let rho = mix_with_white_noise(&phi_plus(), 0.7).unwrap();
        let recs = exact_records(&rho, 1e4);
        let p = Problem::from_records(&recs, &TomographyOptions::default()).unwrap();
        let mut x = Params::zeros();
        for k in 0..16 {
            x[k] = 20.0 + 3.0 * (k as f64 * 1.7).sin();
        }
        let (_, g) = p.deviance_and_gradient(&x);
        for k in 0..16 {
            let h = 1e-5;
            let mut xp = x;
            xp[k] += h;
            let mut xm = x;
            xm[k] -= h;
            let fd = (p.deviance_and_gradient(&xp).0 - p.deviance_and_gradient(&xm).0) / (2.0 * h);
            assert!((fd - g[k]).abs() < 1e-4 * fd.abs().max(1.0), "param {k}: {fd} vs {}", g[k]);
        }
    }

    #[test]
    fn lower_factor_reproduces_matrix() {
        let rho = mix_with_white_noise(&crate::qstate::bell_state(0.4).unwrap(), 0.6).unwrap();
        let t = lower_factor(rho.matrix()).unwrap();
        for r in 0..4 {
            for c in (r + 1)..4 {
                assert_eq!(t[(r, c)], Complex64::new(0.0, 0.0));
            }
        }
        assert!((t.adjoint() * t - rho.matrix()).norm() < 1e-12);
    }

    #[test]
    fn exact_phi_plus_counts() {
        let rho = pure_density(&phi_plus());
        let res = mle_tomography(&exact_records(&rho, 1e7), &TomographyOptions::default()).unwrap();
        let f = fidelity(&res.state, &phi_plus()).unwrap();
        assert!(f >= 0.9999, "fidelity {f}");
        assert!(res.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn exact_mixed_counts() {
        let rho = DensityMatrix::maximally_mixed();
        let res = mle_tomography(&exact_records(&rho, 1e7), &TomographyOptions::default()).unwrap();
        assert!((purity(&res.state) - 0.25).abs() < 1e-3);
    }

    #[test]
    fn incomplete_settings_rejected() {
        let rho = DensityMatrix::maximally_mixed();
        let mut recs = exact_records(&rho, 1e4);
        let first = recs[0];
        for r in recs.iter_mut() {
            r.setting_a = first.setting_a;
            r.setting_b = first.setting_b;
        }
        assert!(mle_tomography(&recs, &TomographyOptions::default()).is_err());
        assert!(mle_tomography(&recs[..10], &TomographyOptions::default()).is_err());
    }

    #[test]
    fn deterministic_given_seed() {
        let rho = mix_with_white_noise(&phi_plus(), 0.8).unwrap();
        let recs = exact_records(&rho, 1e3);
        let a = mle_tomography(&recs, &TomographyOptions::default()).unwrap();
        let b = mle_tomography(&recs, &TomographyOptions::default()).unwrap();
        assert_eq!(a.state, b.state);
    }
}
