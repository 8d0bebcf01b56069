//! CHSH parameter: exact values for ideal and noisy states, and a simulated
//! measurement with its Poisson uncertainty.

use sagnac::analysis::chsh::chsh_from_state;
use sagnac::defaults;
use sagnac::expcli::report::Analysis;
use sagnac::expcli::{simulate, Experiment, ExperimentConfig};
use sagnac::qstate::{mix_with_white_noise, phi_plus, DensityMatrix};
use sagnac::source::output_state;

fn main() -> sagnac::Result<()> {
    println!("exact S:");
    println!("  Phi+           {:.4}", chsh_from_state(&mix_with_white_noise(&phi_plus(), 1.0)?)?.s);
    println!("  Werner p=0.8   {:.4}", chsh_from_state(&mix_with_white_noise(&phi_plus(), 0.8)?)?.s);
    println!("  I/4            {:.4}", chsh_from_state(&DensityMatrix::maximally_mixed())?.s);
    println!("  default source {:.4}", chsh_from_state(&output_state(&defaults::source())?)?.s);

    let mut config = ExperimentConfig::paper_defaults(Experiment::Chsh);
    config.repeats = 5;
    let sim = simulate(&config)?;
    if let Analysis::Chsh(c) = &sim.report.analysis {
        println!(
            "\nsimulated ({} runs): S = {:.3} +/- {:.3} (run spread {:.3})",
            c.s.n, c.s.mean, c.sigma_s, c.s.std
        );
    }
    Ok(())
}
