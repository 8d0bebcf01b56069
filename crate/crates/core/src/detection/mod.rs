//! Gated single-photon detectors and Monte Carlo coincidence counting.
//!
//! Counting is rate-level: each accumulation draws its singles and
//! coincidences from Poisson distributions whose means follow from the
//! source pair rate, the analyzer probabilities and the detector parameters.
//! Dark counts feed the singles and, through them, the accidental
//! coincidences, never the true coincidences.

pub mod poisson;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polarization::AnalyzerSetting;
use crate::source::{pair_rate, SourceConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    pub efficiency: f64,
    pub gate_window_ns: f64,
    pub dark_prob_per_gate: f64,
    pub trigger_rate_hz: f64,
    pub duty_cycle: f64,
}

impl DetectorConfig {
    pub fn validate(&self) -> std::result::Result<(), (&'static str, String)> {
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(("efficiency", format!("must lie in (0, 1], got {}", self.efficiency)));
        }
        if !(self.gate_window_ns > 0.0 && self.gate_window_ns.is_finite()) {
            return Err(("gate_window_ns", format!("must be > 0, got {}", self.gate_window_ns)));
        }
        if !(self.dark_prob_per_gate >= 0.0 && self.dark_prob_per_gate < 1.0) {
            return Err((
                "dark_prob_per_gate",
                format!("must lie in [0, 1), got {}", self.dark_prob_per_gate),
            ));
        }
        if !(self.trigger_rate_hz >= 0.0 && self.trigger_rate_hz.is_finite()) {
            return Err(("trigger_rate_hz", format!("must be >= 0, got {}", self.trigger_rate_hz)));
        }
        if !(self.duty_cycle > 0.0 && self.duty_cycle <= 1.0) {
            return Err(("duty_cycle", format!("must lie in (0, 1], got {}", self.duty_cycle)));
        }
        Ok(())
    }

    /// Dark counts per second.
    pub fn dark_rate(&self) -> f64 {
        self.dark_prob_per_gate * self.trigger_rate_hz
    }
}

/// Probabilities that a pair passes both analyzers, or each one alone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionProbabilities {
    pub joint: f64,
    pub marginal_a: f64,
    pub marginal_b: f64,
}

impl DetectionProbabilities {
    /// Joint probability with the unpolarized marginals `1/2` of any state whose
    /// single-photon reduced states are maximally mixed.
    pub fn with_half_marginals(joint: f64) -> Self {
        Self {
            joint,
            marginal_a: 0.5,
            marginal_b: 0.5,
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("joint", self.joint),
            ("marginal_a", self.marginal_a),
            ("marginal_b", self.marginal_b),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(format!("{name} probability {p} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Expected count rates, all in counts per second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub singles_a: f64,
    pub singles_b: f64,
    pub true_coinc: f64,
    pub accidental_coinc: f64,
}

impl Rates {
    pub fn total_coinc(&self) -> f64 {
        self.true_coinc + self.accidental_coinc
    }
}

/// Fraction of time both detectors are live together.
pub fn coincidence_duty_cycle(det_a: &DetectorConfig, det_b: &DetectorConfig) -> f64 {
    det_a.duty_cycle * det_b.duty_cycle
}

/// Coincidence window in seconds, the wider of the two gates.
pub fn coincidence_window_s(det_a: &DetectorConfig, det_b: &DetectorConfig) -> f64 {
    det_a.gate_window_ns.max(det_b.gate_window_ns) * 1e-9
}

fn validate_all(source: &SourceConfig, det_a: &DetectorConfig, det_b: &DetectorConfig) -> Result<()> {
    source
        .validate()
        .map_err(|(f, m)| Error::invalid(format!("source.{f} {m}")))?;
    det_a
        .validate()
        .map_err(|(f, m)| Error::invalid(format!("detector_a.{f} {m}")))?;
    det_b
        .validate()
        .map_err(|(f, m)| Error::invalid(format!("detector_b.{f} {m}")))
}

pub fn expected_rates(
    probs: DetectionProbabilities,
    source: &SourceConfig,
    det_a: &DetectorConfig,
    det_b: &DetectorConfig,
) -> Result<Rates> {
    probs.validate()?;
    validate_all(source, det_a, det_b)?;
    let pairs = pair_rate(source);
    let singles_a = pairs * probs.marginal_a * det_a.efficiency * det_a.duty_cycle + det_a.dark_rate();
    let singles_b = pairs * probs.marginal_b * det_b.efficiency * det_b.duty_cycle + det_b.dark_rate();
    let true_coinc = pairs
        * probs.joint
        * det_a.efficiency
        * det_b.efficiency
        * coincidence_duty_cycle(det_a, det_b);
    let accidental_coinc = singles_a * singles_b * coincidence_window_s(det_a, det_b);
    Ok(Rates {
        singles_a,
        singles_b,
        true_coinc,
        accidental_coinc,
    })
}

/// Pair-rate coefficient (pairs/s/mW) that makes `expected_rates` return
/// `target_coinc` true coincidences per second at joint probability `p_joint`.
pub fn calibrate_pair_rate_coeff(
    target_coinc: f64,
    p_joint: f64,
    source: &SourceConfig,
    det_a: &DetectorConfig,
    det_b: &DetectorConfig,
) -> Result<f64> {
    validate_all(source, det_a, det_b)?;
    let per_coeff = source.pump_power_mw
        * source.pair_collection_efficiency()
        * p_joint
        * det_a.efficiency
        * det_b.efficiency
        * coincidence_duty_cycle(det_a, det_b);
    if !(per_coeff > 0.0) || !(target_coinc >= 0.0) {
        return Err(Error::invalid("cannot calibrate against a zero-rate chain"));
    }
    Ok(target_coinc / per_coeff)
}

/// Counts from one accumulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub singles_a: u64,
    pub singles_b: u64,
    pub coincidences: u64,
}

/// Draws one accumulation of `duration_s` seconds from `rates`.
///
/// Draw order is singles A, singles B, true coincidences, accidentals, all
/// from a ChaCha8 stream seeded with `seed`.
pub fn sample_counts(rates: &Rates, duration_s: f64, seed: u64) -> Counts {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = duration_s.max(0.0);
    let singles_a = poisson::sample(&mut rng, rates.singles_a * t);
    let singles_b = poisson::sample(&mut rng, rates.singles_b * t);
    let coinc = poisson::sample(&mut rng, rates.true_coinc * t)
        + poisson::sample(&mut rng, rates.accidental_coinc * t);
    Counts {
        singles_a,
        singles_b,
        coincidences: coinc.min(singles_a).min(singles_b),
    }
}

pub fn simulate_counts(
    probs: DetectionProbabilities,
    source: &SourceConfig,
    det_a: &DetectorConfig,
    det_b: &DetectorConfig,
    duration_s: f64,
    seed: u64,
) -> Result<Counts> {
    if !(duration_s >= 0.0 && duration_s.is_finite()) {
        return Err(Error::invalid(format!("duration {duration_s} s must be >= 0")));
    }
    let rates = expected_rates(probs, source, det_a, det_b)?;
    Ok(sample_counts(&rates, duration_s, seed))
}

/// One accumulation at a pair of analyzer settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountRecord {
    pub setting_a: AnalyzerSetting,
    pub setting_b: AnalyzerSetting,
    pub duration_s: f64,
    pub singles_a: u64,
    pub singles_b: u64,
    pub coincidences: u64,
    pub seed: u64,
}

impl CountRecord {
    pub fn new(
        setting_a: AnalyzerSetting,
        setting_b: AnalyzerSetting,
        duration_s: f64,
        counts: Counts,
        seed: u64,
    ) -> Self {
        Self {
            setting_a,
            setting_b,
            duration_s,
            singles_a: counts.singles_a,
            singles_b: counts.singles_b,
            coincidences: counts.coincidences,
            seed,
        }
    }
}

/// Derives independent per-record seeds from a master seed.
///
/// `derive_seed(master, stream, index)` mixes the three words through
/// SplitMix64 finalizers; `stream` separates repetitions or sweep points and
/// `index` the records inside one scan. The mapping is fixed, so results do
/// not depend on evaluation order.
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    let a = splitmix64(master);
    let b = splitmix64(a ^ stream.wrapping_mul(0xD1B5_4A32_D192_ED03));
    splitmix64(b ^ index.wrapping_mul(0x8CB9_2BA7_2F3D_8DD7))
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
