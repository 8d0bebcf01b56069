//! HOM dip: coherence length to bandwidth, a noisy simulated dip and the
//! triangle fit that recovers visibility and coherence length.

use sagnac::analysis::hom::fit_triangle;
use sagnac::expcli::report::Analysis;
use sagnac::expcli::{simulate, Experiment, ExperimentConfig};
use sagnac::source::{bandwidth_from_coherence_length, coherence_length_from_bandwidth};

fn main() -> sagnac::Result<()> {
    let bw = bandwidth_from_coherence_length(0.44, 1550.0)?;
    println!("l_c 0.44 mm at 1550 nm -> bandwidth {bw:.3} nm");
    println!("bandwidth 2.4 nm -> l_c {:.4} mm", coherence_length_from_bandwidth(2.4, 1550.0)?);

    let mut config = ExperimentConfig::paper_defaults(Experiment::Hom);
    config.master_seed = 3;
    let sim = simulate(&config)?;
    if let Analysis::Hom(h) = &sim.report.analysis {
        println!(
            "\nsimulated dip: V {:.4}, l_c {:.4} mm, bandwidth {:.3} nm",
            h.visibility.mean, h.coherence_length_mm.mean, h.bandwidth_nm.mean
        );
    }

    // the fitter also works directly on arrays
    let x: Vec<f64> = (-20..=20).map(|k| k as f64 * 0.05).collect();
    let c: Vec<f64> = x.iter().map(|&g| 1000.0 * (1.0 - 0.9 * (1.0 - (g - 0.1).abs() / 0.3).max(0.0))).collect();
    let fit = fit_triangle(&x, &c)?;
    println!(
        "synthetic dip: V {:.4}, l_c {:.4} mm, center {:.4} mm",
        fit.visibility, fit.coherence_length_mm, fit.center_mm
    );
    Ok(())
}
