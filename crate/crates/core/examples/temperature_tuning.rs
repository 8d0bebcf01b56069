//! Signal and idler wavelengths along the crystal tuning curve, and a
//! temperature sweep of the fringe visibility.

use sagnac::defaults;
use sagnac::expcli::report::Analysis;
use sagnac::expcli::{simulate, Experiment, ExperimentConfig};
use sagnac::source::{idler_wavelength, TuningCurve};

fn main() -> sagnac::Result<()> {
    let curve = TuningCurve::default();
    println!("  T (C)   signal (nm)  idler (nm)");
    for t in [25.0, 30.0, 32.0, 36.5, 40.0] {
        let s = curve.signal_wavelength(t)?;
        let i = idler_wavelength(defaults::PUMP_WAVELENGTH_NM, s)?;
        println!("  {t:5.1}   {s:10.3}   {i:10.3}");
    }

    let config = ExperimentConfig::paper_defaults(Experiment::SweepTemperature);
    if let Analysis::SweepTemperature(sweep) = simulate(&config)?.report.analysis {
        println!("\nvisibility across the table:");
        for p in &sweep.points {
            println!("  {:5.1} C: {:.4}", p.value, p.visibility.mean);
        }
        println!("spread {:.4}", sweep.visibility_spread);
    }
    Ok(())
}
