//! Wave-plate analyzers: transmitted polarization, projectors and joint
//! probabilities on Phi+.

use sagnac::polarization::{analyzer_projector, joint_probability, AnalyzerSetting, Pol};
use sagnac::qstate::{phi_plus, pure_density};

fn main() -> sagnac::Result<()> {
    for pol in [Pol::H, Pol::V, Pol::D, Pol::R, Pol::L] {
        let s = pol.setting();
        let v = s.transmitted_state();
        println!(
            "{}: qwp {:?}, hwp {:5.1} deg -> ({:+.3}{:+.3}i, {:+.3}{:+.3}i)",
            pol.label(),
            s.qwp_angle(),
            s.hwp_angle(),
            v[0].re,
            v[0].im,
            v[1].re,
            v[1].im
        );
    }

    let d = AnalyzerSetting::linear(45.0)?;
    let p = analyzer_projector(&d);
    let sum = p.matrix() + p.complement().matrix();
    println!("\nP(D) + P(A) = identity: {}", (sum - nalgebra::Matrix2::identity()).norm() < 1e-12);

    let rho = pure_density(&phi_plus());
    println!("\njoint probabilities on Phi+:");
    for a in [Pol::H, Pol::D] {
        for b in [Pol::H, Pol::V, Pol::D, Pol::R] {
            let pr = joint_probability(&rho, &a.setting(), &b.setting())?;
            println!("  {}{}: {pr:.4}", a.label(), b.label());
        }
    }
    Ok(())
}
