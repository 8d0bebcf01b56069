//! Bell states, white-noise mixtures and their fidelity and purity.

use sagnac::qstate::{bell_state, fidelity, mix_with_white_noise, phi_plus, pure_density, purity, BASIS_LABELS};

fn main() -> sagnac::Result<()> {
    let psi = phi_plus();
    println!("Phi+ amplitudes:");
    for (label, a) in BASIS_LABELS.iter().zip(psi.amplitudes()) {
        println!("  {label}: {:+.4}{:+.4}i", a.re, a.im);
    }

    println!("\n  p      fidelity  purity");
    for p in [1.0, 0.964, 0.9, 0.5, 0.0] {
        let rho = mix_with_white_noise(&psi, p)?;
        println!("  {p:<5}  {:.4}    {:.4}", fidelity(&rho, &psi)?, purity(&rho));
    }

    println!("\noverlap of Phi+ with bell_state(theta):");
    for theta in [0.0, 0.5, 1.0, std::f64::consts::PI] {
        let other = bell_state(theta)?;
        println!("  theta {theta:.3}: {:.4}", fidelity(&pure_density(&other), &psi)?);
    }
    Ok(())
}
