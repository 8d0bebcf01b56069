//! Maximum-likelihood tomography of simulated counts from the default source.

use sagnac::analysis::tomography::{mle_tomography, TomographyOptions};
use sagnac::defaults;
use sagnac::detection::{
    coincidence_window_s, derive_seed, simulate_counts, CountRecord, DetectionProbabilities,
};
use sagnac::polarization::{joint_probability, marginal_probability_a, marginal_probability_b, tomography_settings};
use sagnac::qstate::{fidelity, phi_plus, purity, state_fidelity, BASIS_LABELS};
use sagnac::source::output_state;

fn main() -> sagnac::Result<()> {
    let source = defaults::source();
    let (det_a, det_b) = (defaults::detector_a(), defaults::detector_b());
    let truth = output_state(&source)?;

    let mut records = Vec::new();
    for (i, (a, b)) in tomography_settings().iter().enumerate() {
        let probs = DetectionProbabilities {
            joint: joint_probability(&truth, a, b)?,
            marginal_a: marginal_probability_a(&truth, a),
            marginal_b: marginal_probability_b(&truth, b),
        };
        let seed = derive_seed(11, 0, i as u64);
        let counts = simulate_counts(probs, &source, &det_a, &det_b, 100.0, seed)?;
        records.push(CountRecord::new(*a, *b, 100.0, counts, seed));
    }

    let opts = TomographyOptions {
        accidental_window_s: Some(coincidence_window_s(&det_a, &det_b)),
        ..TomographyOptions::default()
    };
    let result = mle_tomography(&records, &opts)?;
    let rho = &result.state;

    println!("reconstructed density matrix (real parts):");
    println!("      {}", BASIS_LABELS.map(|l| format!("{l:>8}")).join(""));
    for r in 0..4 {
        let row: String = (0..4).map(|c| format!("{:8.4}", rho.get(r, c).re)).collect();
        println!("  {}  {row}", BASIS_LABELS[r]);
    }
    println!("\nfidelity to Phi+      {:.4} (true {:.4})", fidelity(rho, &phi_plus())?, fidelity(&truth, &phi_plus())?);
    println!("fidelity to truth     {:.4}", state_fidelity(rho, &truth));
    println!("purity                {:.4}", purity(rho));
    println!("deviance {:.3} after {} iterations", result.deviance, result.iterations);
    Ok(())
}
