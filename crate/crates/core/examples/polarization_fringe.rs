//! Simulated polarization-correlation fringe from the default source with
//! Poisson counts, followed by a sinusoid fit.

use sagnac::analysis::fringe::{fit_sinusoid, fringe_settings, grid, FixedArm};
use sagnac::defaults;
use sagnac::detection::{derive_seed, simulate_counts, DetectionProbabilities};
use sagnac::polarization::{joint_probability, marginal_probability_a, marginal_probability_b};
use sagnac::source::output_state;

fn main() -> sagnac::Result<()> {
    let source = defaults::source();
    let (det_a, det_b) = (defaults::detector_a(), defaults::detector_b());
    let rho = output_state(&source)?;

    let angles = grid(0.0, 175.0, 5.0);
    let mut counts = Vec::with_capacity(angles.len());
    for (i, &h) in angles.iter().enumerate() {
        let (a, b) = fringe_settings(FixedArm::A, 22.5, h)?;
        let probs = DetectionProbabilities {
            joint: joint_probability(&rho, &a, &b)?,
            marginal_a: marginal_probability_a(&rho, &a),
            marginal_b: marginal_probability_b(&rho, &b),
        };
        let c = simulate_counts(probs, &source, &det_a, &det_b, defaults::DURATION_S, derive_seed(7, 0, i as u64))?;
        counts.push(c.coincidences as f64);
    }

    let fit = fit_sinusoid(&angles, &counts)?;
    for (h, c) in angles.iter().zip(&counts).step_by(3) {
        println!("hwp {h:5.1}  counts {c:6.0}  fit {:8.1}", fit.model(*h));
    }
    println!(
        "\nvisibility {:.4}, c_max {:.1}, c_min {:.1}, phase {:.2} deg",
        fit.visibility, fit.c_max, fit.c_min, fit.phase_deg
    );
    Ok(())
}
