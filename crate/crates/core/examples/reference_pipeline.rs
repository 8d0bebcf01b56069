//! Every experiment at default settings, written to a temporary directory,
//! with the headline numbers of each report.

use sagnac::expcli::report::Analysis;
use sagnac::expcli::{run_experiment, Experiment, ExperimentConfig};

fn main() -> sagnac::Result<()> {
    let dir = std::env::temp_dir().join("sagnac-reference");
    for e in Experiment::ALL {
        let config = ExperimentConfig::paper_defaults(e);
        let out = run_experiment(&config, &dir.join(e.name()))?;
        let summary = match &out.report.analysis {
            Analysis::Fringe(f) => format!("V = {:.4}", f.visibility.mean),
            Analysis::Hom(h) => format!("V = {:.4}, l_c = {:.4} mm", h.visibility.mean, h.coherence_length_mm.mean),
            Analysis::Chsh(c) => format!("S = {:.3} +/- {:.3}", c.s.mean, c.sigma_s),
            Analysis::Tomography(t) => format!("F = {:.4}, purity = {:.4}", t.fidelity_phi_plus.mean, t.purity.mean),
            Analysis::SweepPower(s) | Analysis::SweepTemperature(s) => {
                format!("{} points, spread {:.4}", s.points.len(), s.visibility_spread)
            }
        };
        println!("{:<18} {summary}", e.name());
        println!("{:<18} {}", "", out.report_path.display());
    }
    Ok(())
}
