//! Property tests for the invariants of each module.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use nalgebra::Vector2;
use num_complex::Complex64;
use proptest::prelude::*;
use sagnac::analysis::chsh::{chsh, chsh_from_state, chsh_settings};
use sagnac::analysis::fringe::{diagonal_contrast, fit_sinusoid, fringe_probabilities, grid, FixedArm};
use sagnac::analysis::tomography::{mle_tomography, TomographyOptions};
use sagnac::defaults;
use sagnac::detection::{expected_rates, sample_counts, CountRecord, DetectionProbabilities, DetectorConfig, Rates};
use sagnac::polarization::{
    analyzer_projector, joint_probability, marginal_probability_a, marginal_probability_b, tomography_settings,
    AnalyzerSetting,
};
use sagnac::qstate::{
    bell_state, fidelity, is_physical, mix_with_white_noise, pure_density, purity, state_fidelity, DensityMatrix,
    KetState, HH, HV, VH, VV,
};
use sagnac::source::{hom_coincidence_curve, output_state, SourceConfig};

fn ket() -> impl Strategy<Value = KetState> {
    prop::array::uniform8(-1.0f64..1.0)
        .prop_filter("non-zero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-3)
        .prop_map(|v| {
            KetState::new([
                Complex64::new(v[0], v[1]),
                Complex64::new(v[2], v[3]),
                Complex64::new(v[4], v[5]),
                Complex64::new(v[6], v[7]),
            ])
            .unwrap()
        })
}

fn mixed_state() -> impl Strategy<Value = DensityMatrix> {
    (ket(), 0.0f64..=1.0).prop_map(|(psi, p)| mix_with_white_noise(&psi, p).unwrap())
}

fn setting() -> impl Strategy<Value = AnalyzerSetting> {
    (prop::option::of(0.0f64..180.0), 0.0f64..180.0).prop_map(|(q, h)| AnalyzerSetting::new(q, h).unwrap())
}

fn source() -> impl Strategy<Value = SourceConfig> {
    (0.0f64..200.0, -10.0f64..10.0, 0.0f64..5.0, 0.0f64..=1.0, 0.01f64..=1.0, 0.01f64..=1.0).prop_map(
        |(power, theta, balance, noise_p, alpha1, alpha2)| SourceConfig {
            pump_power_mw: power,
            theta_rad: theta,
            balance,
            noise_p,
            alpha1,
            alpha2,
            ..defaults::source()
        },
    )
}

fn max_abs_diff(a: &nalgebra::Matrix2<Complex64>, b: &nalgebra::Matrix2<Complex64>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bell_states_live_on_hv_and_vh(theta in -20.0f64..20.0) {
        let a = bell_state(theta).unwrap().amplitudes();
        prop_assert_eq!(a[HH].norm(), 0.0);
        prop_assert_eq!(a[VV].norm(), 0.0);
        prop_assert!((a[HV].norm() - FRAC_1_SQRT_2).abs() < 1e-15);
        prop_assert!((a[VH].norm() - FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn werner_fidelity_and_purity(psi in ket(), p in 0.0f64..=1.0) {
        let rho = mix_with_white_noise(&psi, p).unwrap();
        prop_assert!((fidelity(&rho, &psi).unwrap() - (3.0 * p + 1.0) / 4.0).abs() < 1e-12);
        prop_assert!((purity(&rho) - (1.0 + 3.0 * p * p) / 4.0).abs() < 1e-12);
    }

    #[test]
    fn fidelity_is_linear(r1 in mixed_state(), r2 in mixed_state(), psi in ket(), a in 0.0f64..=1.0) {
        let mixed = r1.mix(&r2, a).unwrap();
        let lhs = fidelity(&mixed, &psi).unwrap();
        let rhs = a * fidelity(&r1, &psi).unwrap() + (1.0 - a) * fidelity(&r2, &psi).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn hwp_period_is_90_degrees(q in prop::option::of(0.0f64..180.0), h in -180.0f64..180.0) {
        let p0 = analyzer_projector(&AnalyzerSetting::new(q, h).unwrap());
        let p1 = analyzer_projector(&AnalyzerSetting::new(q, h + 90.0).unwrap());
        prop_assert!(max_abs_diff(p0.matrix(), p1.matrix()) < 1e-10);
    }

    #[test]
    fn projectors_are_hermitian_idempotent(s in setting()) {
        let p = *analyzer_projector(&s).matrix();
        prop_assert!(max_abs_diff(&(p * p), &p) < 1e-10);
        prop_assert!(max_abs_diff(&p.adjoint(), &p) < 1e-10);
        let v: Vector2<Complex64> = s.transmitted_state();
        prop_assert!(((p * v) - v).norm() < 1e-10);
    }

    #[test]
    fn complements_sum_to_marginals(rho in mixed_state(), a in setting(), b in setting()) {
        let (ac, bc) = (a.orthogonal(), b.orthogonal());
        let p = |x: &AnalyzerSetting, y: &AnalyzerSetting| joint_probability(&rho, x, y).unwrap();
        prop_assert!((p(&a, &b) + p(&a, &bc) - marginal_probability_a(&rho, &a)).abs() < 1e-10);
        prop_assert!((p(&a, &b) + p(&ac, &b) - marginal_probability_b(&rho, &b)).abs() < 1e-10);
        prop_assert!((p(&a, &b) + p(&a, &bc) + p(&ac, &b) + p(&ac, &bc) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn phi_plus_depends_on_angle_sum(alpha in 0.0f64..180.0, beta in 0.0f64..180.0, shift in -90.0f64..90.0) {
        let rho = pure_density(&bell_state(0.0).unwrap());
        let p = |x: f64, y: f64| {
            joint_probability(&rho, &AnalyzerSetting::linear(x).unwrap(), &AnalyzerSetting::linear(y).unwrap()).unwrap()
        };
        let base = p(alpha, beta);
        prop_assert!((base - p(alpha + shift, beta - shift)).abs() < 1e-10);
        prop_assert!((base - 0.5 * (alpha + beta).to_radians().sin().powi(2)).abs() < 1e-10);
    }

    #[test]
    fn output_state_is_physical(src in source()) {
        let rho = output_state(&src).unwrap();
        prop_assert!(is_physical(rho.matrix()).is_physical());
    }

    #[test]
    fn diagonal_contrast_matches_coherence(theta in -3.0f64..3.0, r in 0.0f64..3.0, p in 0.0f64..=1.0) {
        let src = SourceConfig { theta_rad: theta, balance: r, noise_p: p, ..defaults::source() };
        let rho = output_state(&src).unwrap();
        let want = p * 2.0 * r * theta.cos() / (1.0 + r * r);
        prop_assert!((diagonal_contrast(&rho).unwrap() - want).abs() < 1e-9);

        // full-scan visibility of the same state, from the fitted extrema
        let angles = grid(0.0, 175.0, 5.0);
        let probs = fringe_probabilities(&rho, FixedArm::A, 22.5, &angles).unwrap();
        let v = fit_sinusoid(&angles, &probs).unwrap().visibility;
        let full = p * ((1.0 - r * r).powi(2) + 4.0 * r * r * theta.cos().powi(2)).sqrt() / (1.0 + r * r);
        prop_assert!((v - full).abs() < 1e-9, "{} vs {}", v, full);
    }

    #[test]
    fn hom_curve_shape(x in -2.0f64..2.0, c in -0.5f64..0.5, lc in 0.05f64..1.0, v in 0.0f64..=1.0, b in 1.0f64..1e4) {
        let f = |x: f64| hom_coincidence_curve(x, c, lc, v, b);
        prop_assert!((f(c + x) - f(c - x)).abs() <= 1e-9 * b);
        let eps = 1e-7;
        prop_assert!((f(x + eps) - f(x)).abs() <= b * v * eps / lc * 1.0001 + 1e-9 * b);
        // linear on each side of the kinks at c and c +/- lc
        let kinks = [c - lc, c, c + lc];
        let h = 1e-3;
        if kinks.iter().all(|k| (x - k).abs() > 2.0 * h) {
            prop_assert!((f(x + h) - 2.0 * f(x) + f(x - h)).abs() < 1e-9 * b);
        }
    }

    #[test]
    fn rates_scale_with_power(joint in 0.0f64..=0.5, power in 1.0f64..200.0, k in 1.0f64..5.0) {
        let quiet = DetectorConfig { dark_prob_per_gate: 0.0, ..defaults::detector_a() };
        let quiet_b = DetectorConfig { dark_prob_per_gate: 0.0, ..defaults::detector_b() };
        let probs = DetectionProbabilities::with_half_marginals(joint);
        let at = |p: f64| {
            let src = SourceConfig { pump_power_mw: p, ..defaults::source() };
            expected_rates(probs, &src, &quiet, &quiet_b).unwrap()
        };
        let (r1, r2) = (at(power), at(k * power));
        prop_assert!((r2.true_coinc - k * r1.true_coinc).abs() <= 1e-9 * r2.true_coinc.max(1e-12));
        prop_assert!((r2.accidental_coinc - k * k * r1.accidental_coinc).abs() <= 1e-9 * r2.accidental_coinc.max(1e-12));
    }

    #[test]
    fn rates_grow_with_efficiency(joint in 0.0f64..=0.5, e1 in 0.01f64..1.0, de in 0.0f64..0.5, arm_b in any::<bool>()) {
        let e2 = (e1 + de).min(1.0);
        let probs = DetectionProbabilities::with_half_marginals(joint);
        let at = |e: f64| {
            let (mut a, mut b) = (defaults::detector_a(), defaults::detector_b());
            if arm_b { b.efficiency = e } else { a.efficiency = e }
            expected_rates(probs, &defaults::source(), &a, &b).unwrap()
        };
        let (lo, hi): (Rates, Rates) = (at(e1), at(e2));
        prop_assert!(hi.singles_a >= lo.singles_a && hi.singles_b >= lo.singles_b);
        prop_assert!(hi.true_coinc >= lo.true_coinc && hi.accidental_coinc >= lo.accidental_coinc);
    }

    #[test]
    fn exact_chsh_respects_tsirelson(rho in mixed_state()) {
        prop_assert!(chsh_from_state(&rho).unwrap().s.abs() <= 2.0 * SQRT_2 + 1e-9);
    }

    #[test]
    fn simulated_chsh_respects_tsirelson(rho in mixed_state(), seed in any::<u64>()) {
        let records: Vec<CountRecord> = chsh_settings()
            .iter()
            .enumerate()
            .map(|(i, (a, b))| {
                let p = joint_probability(&rho, a, b).unwrap();
                let rates = Rates { singles_a: 1e7, singles_b: 1e7, true_coinc: 400.0 * p + 1.0, accidental_coinc: 0.0 };
                let counts = sample_counts(&rates, 1.0, seed.wrapping_add(i as u64));
                CountRecord::new(*a, *b, 1.0, counts, 0)
            })
            .collect();
        let r = chsh(&records).unwrap();
        prop_assert!(r.s.abs() <= 2.0 * SQRT_2 + 5.0 * r.sigma_s);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn sinusoid_fit_recovers_noiseless_fringes(mean in 10.0f64..1e4, frac in 0.05f64..0.99, phase in 0.0f64..90.0) {
        let amp = frac * mean;
        let angles = grid(0.0, 175.0, 5.0);
        let counts: Vec<f64> = angles.iter().map(|h| mean + amp * (4.0 * (h - phase)).to_radians().cos()).collect();
        let fit = fit_sinusoid(&angles, &counts).unwrap();
        let rel = |x: f64, y: f64| (x - y).abs() / y.abs();
        prop_assert!(rel(0.5 * (fit.c_max + fit.c_min), mean) < 1e-6);
        prop_assert!(rel(0.5 * (fit.c_max - fit.c_min), amp) < 1e-6);
        let dphi = (fit.phase_deg - phase).rem_euclid(90.0);
        prop_assert!(dphi.min(90.0 - dphi) < 1e-6 * 90.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn tomography_output_is_physical_and_monotone(rho in mixed_state(), seed in any::<u64>()) {
        let records: Vec<CountRecord> = tomography_settings()
            .iter()
            .enumerate()
            .map(|(i, (a, b))| {
                let p = joint_probability(&rho, a, b).unwrap();
                let rates = Rates { singles_a: 1e7, singles_b: 1e7, true_coinc: 2000.0 * p, accidental_coinc: 0.0 };
                CountRecord::new(*a, *b, 1.0, sample_counts(&rates, 1.0, seed ^ i as u64), 0)
            })
            .collect();
        let out = mle_tomography(&records, &TomographyOptions { seed, ..Default::default() }).unwrap();
        prop_assert!(is_physical(out.state.matrix()).is_physical());
        prop_assert!(out.history.windows(2).all(|w| w[1] <= w[0]));
    }
}

/// Mean `1 - F(rho_hat, rho)` over `seeds` reconstructions from Poisson
/// counts with `pairs` expected pairs per basis.
fn mean_infidelity(rho: &DensityMatrix, pairs: f64, seeds: u64) -> f64 {
    let total: f64 = (0..seeds)
        .map(|seed| {
            let records: Vec<CountRecord> = tomography_settings()
                .iter()
                .enumerate()
                .map(|(i, (a, b))| {
                    let p = joint_probability(rho, a, b).unwrap();
                    let rates = Rates { singles_a: 1e9, singles_b: 1e9, true_coinc: pairs * p, accidental_coinc: 0.0 };
                    CountRecord::new(*a, *b, 1.0, sample_counts(&rates, 1.0, seed * 100 + i as u64), 0)
                })
                .collect();
            let out = mle_tomography(&records, &TomographyOptions { restarts: 1, ..Default::default() }).unwrap();
            1.0 - state_fidelity(&out.state, rho)
        })
        .sum();
    total / seeds as f64
}

#[test]
fn tomography_infidelity_shrinks_like_inverse_counts() {
    // full rank, so the positivity constraint is inactive at these count levels
    let rho = output_state(&SourceConfig { noise_p: 0.8, ..defaults::source() }).unwrap();
    let scales = [1e3, 1e4, 1e5, 1e6];
    let infid: Vec<f64> = scales.iter().map(|&n| mean_infidelity(&rho, n, 20)).collect();
    assert!(infid.windows(2).all(|w| w[1] < w[0]), "{infid:?}");
    let x: Vec<f64> = scales.iter().map(|n| 1.0 / n).collect();
    let slope = x.iter().zip(&infid).map(|(x, y)| x * y).sum::<f64>() / x.iter().map(|x| x * x).sum::<f64>();
    assert!(slope > 0.0);
    for (xi, yi) in x.iter().zip(&infid) {
        let ratio = yi / (slope * xi);
        assert!((0.5..2.0).contains(&ratio), "{infid:?}: ratio {ratio:.2} at 1/N = {xi:.0e}");
    }
}

#[test]
fn pure_state_infidelity_shrinks_with_counts() {
    let rho = pure_density(&SourceConfig { noise_p: 1.0, ..defaults::source() }.ket().unwrap());
    let infid: Vec<f64> = [1e2, 1e3, 1e4, 1e5].iter().map(|&n| mean_infidelity(&rho, n, 20)).collect();
    assert!(infid.windows(2).all(|w| w[1] < w[0]), "{infid:?}");
}
