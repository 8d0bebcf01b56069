use crate::error::{Error, Result};

fn require_positive(values: &[(&str, f64)]) -> Result<()> {
    for &(name, v) in values {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::invalid(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(())
}

/// Pair brightness with all collection and detection losses backed out,
/// `2 N_c / (alpha1^2 alpha2^2 d eta1 eta2 P dlambda)` in `(s mW nm)^-1`.
#[allow(clippy::too_many_arguments)]
pub fn brightness_inferred(
    coinc_rate: f64,
    alpha1: f64,
    alpha2: f64,
    duty_cycle: f64,
    eta1: f64,
    eta2: f64,
    pump_mw: f64,
    bandwidth_nm: f64,
) -> Result<f64> {
    require_positive(&[
        ("alpha1", alpha1),
        ("alpha2", alpha2),
        ("duty_cycle", duty_cycle),
        ("eta1", eta1),
        ("eta2", eta2),
        ("pump power", pump_mw),
        ("bandwidth", bandwidth_nm),
    ])?;
    if !(coinc_rate >= 0.0) {
        return Err(Error::invalid("coincidence rate must be non-negative"));
    }
    let losses = (alpha1 * alpha2).powi(2) * duty_cycle * eta1 * eta2;
    Ok(2.0 * coinc_rate / (losses * pump_mw * bandwidth_nm))
}

/// Detected brightness `2 N_c / (P dlambda)` in `(s mW nm)^-1`.
pub fn brightness_detected(coinc_rate: f64, pump_mw: f64, bandwidth_nm: f64) -> Result<f64> {
    require_positive(&[("pump power", pump_mw), ("bandwidth", bandwidth_nm)])?;
    if !(coinc_rate >= 0.0) {
        return Err(Error::invalid("coincidence rate must be non-negative"));
    }
    Ok(2.0 * coinc_rate / (pump_mw * bandwidth_nm))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        let b = brightness_inferred(150.0, 0.82, 0.32, 0.09, 0.15, 0.08, 60.0, 2.4).unwrap();
        assert!((b - 2.80e4).abs() / 2.80e4 < 5e-3, "{b}");
        assert!((b - 3.0e4).abs() / 3.0e4 < 0.10);
        let d = brightness_detected(150.0, 60.0, 2.4).unwrap();
        assert!((d - 2.083).abs() < 1e-3);
    }

    #[test]
    fn linearity_and_degeneration() {
        let b1 = brightness_inferred(150.0, 0.82, 0.32, 0.09, 0.15, 0.08, 60.0, 2.4).unwrap();
        let b2 = brightness_inferred(300.0, 0.82, 0.32, 0.09, 0.15, 0.08, 60.0, 2.4).unwrap();
        assert!((b2 - 2.0 * b1).abs() < 1e-9 * b1);
        let lossless = brightness_inferred(150.0, 1.0, 1.0, 1.0, 1.0, 1.0, 60.0, 2.4).unwrap();
        assert_eq!(lossless, brightness_detected(150.0, 60.0, 2.4).unwrap());
        assert_eq!(brightness_detected(0.0, 60.0, 2.4).unwrap(), 0.0);
        let half = brightness_detected(150.0, 120.0, 2.4).unwrap();
        assert!((half - 0.5 * brightness_detected(150.0, 60.0, 2.4).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_positive_terms() {
        assert!(brightness_inferred(150.0, 0.0, 0.32, 0.09, 0.15, 0.08, 60.0, 2.4).is_err());
        assert!(brightness_inferred(150.0, 0.82, 0.32, 0.09, 0.15, 0.08, 60.0, -1.0).is_err());
        assert!(brightness_detected(150.0, 0.0, 2.4).is_err());
    }
}
