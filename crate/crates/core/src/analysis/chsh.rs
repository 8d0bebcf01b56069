//! CHSH test from sixteen coincidence accumulations.
//!
//! Analyzers measure linear polarization at `a = 0`, `a' = 45` on arm A and
//! `b = 22.5`, `b' = 67.5` degrees on arm B (half-wave plates at half these
//! angles). Each correlation is
//! `E = (C(x,y) + C(x+,y+) - C(x,y+) - C(x+,y)) / sum`, where `+` is the
//! orthogonal analyzer, and
//! `S = -E(a,b) + E(a,b') + E(a',b) + E(a',b')`.

use serde::{Deserialize, Serialize};

use crate::detection::CountRecord;
use crate::error::{Error, Result};
use crate::polarization::{joint_probability, AnalyzerSetting};
use crate::qstate::DensityMatrix;

/// Polarization angles (degrees) of the two settings per arm.
pub const ARM_A_POL_DEG: [f64; 2] = [0.0, 45.0];
pub const ARM_B_POL_DEG: [f64; 2] = [22.5, 67.5];

/// Correlation terms in the order (a,b), (a,b'), (a',b), (a',b').
pub const TERMS: [(usize, usize); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)];

/// Sign of each term in `S`, chosen to maximize `|S|` for `|Phi+>` among
/// the CHSH combinations (odd number of minus signs); see the tests.
pub const CHSH_SIGNS: [f64; 4] = [-1.0, 1.0, 1.0, 1.0];

/// Orthogonal-complement combinations within one term, with their sign in E.
const OUTCOMES: [(bool, bool, f64); 4] = [
    (false, false, 1.0),
    (true, true, 1.0),
    (false, true, -1.0),
    (true, false, -1.0),
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshResult {
    pub correlations: [f64; 4],
    pub s: f64,
    pub sigma_s: f64,
}

impl ChshResult {
    /// Standard deviations by which `|S|` exceeds the local bound of 2.
    pub fn violation_sigmas(&self) -> f64 {
        if self.sigma_s > 0.0 {
            (self.s.abs() - 2.0) / self.sigma_s
        } else {
            f64::INFINITY
        }
    }
}

fn setting(pol_deg: f64, flip: bool) -> AnalyzerSetting {
    let s = AnalyzerSetting::linear(pol_deg).expect("finite angle");
    if flip {
        s.orthogonal()
    } else {
        s
    }
}

/// The sixteen analyzer pairs, grouped by term, four outcomes each.
pub fn chsh_settings() -> [(AnalyzerSetting, AnalyzerSetting); 16] {
    let mut out = [(setting(0.0, false), setting(0.0, false)); 16];
    for (t, &(i, j)) in TERMS.iter().enumerate() {
        for (k, &(fa, fb, _)) in OUTCOMES.iter().enumerate() {
            out[4 * t + k] = (setting(ARM_A_POL_DEG[i], fa), setting(ARM_B_POL_DEG[j], fb));
        }
    }
    out
}

/// Evaluates `S` from values ordered as [`chsh_settings`], with a sign pattern.
fn combine(values: &[f64; 16], signs: &[f64; 4]) -> Result<ChshResult> {
    let mut correlations = [0.0; 4];
    let mut var_s = 0.0;
    for t in 0..4 {
        let block = &values[4 * t..4 * t + 4];
        let total: f64 = block.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Fit(format!("no coincidences in CHSH term {t}")));
        }
        let e = block
            .iter()
            .zip(OUTCOMES)
            .map(|(c, (_, _, sign))| sign * c)
            .sum::<f64>()
            / total;
        // Poisson propagation: dE/dN_i = (sign_i - E) / N
        var_s += block
            .iter()
            .zip(OUTCOMES)
            .map(|(c, (_, _, sign))| c * (sign - e).powi(2))
            .sum::<f64>()
            / (total * total);
        correlations[t] = e;
    }
    let s = correlations.iter().zip(signs).map(|(e, s)| e * s).sum();
    Ok(ChshResult {
        correlations,
        s,
        sigma_s: var_s.sqrt(),
    })
}

fn angle_eq(x: f64, y: f64) -> bool {
    let d = (x - y).rem_euclid(180.0);
    d.min(180.0 - d) < 1e-9
}

fn same_setting(x: &AnalyzerSetting, y: &AnalyzerSetting) -> bool {
    let q = match (x.qwp_angle(), y.qwp_angle()) {
        (None, None) => true,
        (Some(p), Some(q)) => angle_eq(p, q),
        _ => false,
    };
    q && angle_eq(x.hwp_angle(), y.hwp_angle())
}

/// Picks the record for each required setting pair; duration-normalized
/// counts are used when accumulation times differ.
fn ordered_counts(records: &[CountRecord]) -> Result<[f64; 16]> {
    let settings = chsh_settings();
    let mut out = [0.0; 16];
    let ref_duration = records.first().map(|r| r.duration_s).unwrap_or(1.0);
    for (k, (a, b)) in settings.iter().enumerate() {
        let rec = records
            .iter()
            .find(|r| same_setting(&r.setting_a, a) && same_setting(&r.setting_b, b))
            .ok_or_else(|| {
                Error::invalid(format!(
                    "missing CHSH record for HWP angles ({}, {})",
                    a.hwp_angle(),
                    b.hwp_angle()
                ))
            })?;
        if !(rec.duration_s > 0.0) {
            return Err(Error::invalid("CHSH record with non-positive duration"));
        }
        out[k] = rec.coincidences as f64 * ref_duration / rec.duration_s;
    }
    Ok(out)
}

pub fn chsh(records: &[CountRecord]) -> Result<ChshResult> {
    combine(&ordered_counts(records)?, &CHSH_SIGNS)
}

/// `S` from exact joint probabilities of `rho`.
pub fn chsh_from_state(rho: &DensityMatrix) -> Result<ChshResult> {
    let mut probs = [0.0; 16];
    for (k, (a, b)) in chsh_settings().iter().enumerate() {
        probs[k] = joint_probability(rho, a, b)?;
    }
    let mut r = combine(&probs, &CHSH_SIGNS)?;
    r.sigma_s = 0.0;
    Ok(r)
}

/// `S` for every CHSH sign pattern (odd number of minus signs).
pub fn chsh_all_patterns(rho: &DensityMatrix) -> Result<Vec<([f64; 4], f64)>> {
    let mut probs = [0.0; 16];
    for (k, (a, b)) in chsh_settings().iter().enumerate() {
        probs[k] = joint_probability(rho, a, b)?;
    }
    let mut out = Vec::new();
    for mask in 0u8..16 {
        if mask.count_ones() % 2 == 1 {
            let signs: [f64; 4] = std::array::from_fn(|t| if mask >> t & 1 == 1 { -1.0 } else { 1.0 });
            out.push((signs, combine(&probs, &signs)?.s));
        }
    }
    Ok(out)
}
