//! Detected and inferred spectral brightness from a coincidence rate, plus the
//! expected rates of the default source and detectors.

use sagnac::analysis::brightness::{brightness_detected, brightness_inferred};
use sagnac::defaults;
use sagnac::detection::{coincidence_duty_cycle, expected_rates, DetectionProbabilities};

fn main() -> sagnac::Result<()> {
    let (det_a, det_b) = (defaults::detector_a(), defaults::detector_b());
    let source = defaults::source();

    let rates = expected_rates(DetectionProbabilities::with_half_marginals(0.5), &source, &det_a, &det_b)?;
    println!(
        "expected rates at {} mW: singles {:.0} / {:.0} cps, coincidences {:.1} cps, accidentals {:.2} cps",
        source.pump_power_mw, rates.singles_a, rates.singles_b, rates.true_coinc, rates.accidental_coinc
    );

    let coinc = 150.0;
    let bandwidth = 2.4;
    let detected = brightness_detected(coinc, source.pump_power_mw, bandwidth)?;
    let inferred = brightness_inferred(
        coinc,
        source.alpha1,
        source.alpha2,
        coincidence_duty_cycle(&det_a, &det_b),
        det_a.efficiency,
        det_b.efficiency,
        source.pump_power_mw,
        bandwidth,
    )?;
    println!("detected brightness {detected:.3} pairs/(s mW nm)");
    println!("inferred brightness {inferred:.3e} pairs/(s mW nm)");
    Ok(())
}
