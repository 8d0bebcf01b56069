use nalgebra::{Matrix2, Matrix4, Vector2, Vector4};
use serde::{Deserialize, Serialize};

use super::optimize::nelder_mead;
use crate::error::{Error, Result};
use crate::source::hom_coincidence_curve;

/// Triangle fit of a HOM dip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomFit {
    pub baseline: f64,
    /// `(C_max - C_min) / C_max` of the fitted curve.
    pub visibility: f64,
    /// Half-width of the triangle at its base, equal to its FWHM.
    pub coherence_length_mm: f64,
    pub center_mm: f64,
    pub residual_rms: f64,
}

impl HomFit {
    pub fn model(&self, gap_mm: f64) -> f64 {
        hom_coincidence_curve(
            gap_mm,
            self.center_mm,
            self.coherence_length_mm,
            self.visibility,
            self.baseline,
        )
    }
}

/// Dips shallower than this fraction of the maximum are rejected.
pub const MIN_DIP_RATIO: f64 = 0.9;

fn triangle(x: f64, center: f64, width: f64) -> f64 {
    (1.0 - (x - center).abs() / width).max(0.0)
}

struct Data<'a> {
    x: &'a [f64],
    c: &'a [f64],
    w: Vec<f64>,
}

impl Data<'_> {
    /// Best `(baseline, depth)` and weighted SSR for a fixed dip shape.
    fn profile(&self, center: f64, width: f64) -> (f64, f64, f64) {
        let mut n = Matrix2::<f64>::zeros();
        let mut r = Vector2::<f64>::zeros();
        for ((&x, &c), &w) in self.x.iter().zip(self.c).zip(&self.w) {
            let basis = Vector2::new(1.0, -triangle(x, center, width));
            n += basis * basis.transpose() * w;
            r += basis * (w * c);
        }
        let Some(sol) = n.lu().solve(&r) else {
            return (0.0, 0.0, f64::INFINITY);
        };
        let (b, a) = (sol[0], sol[1]);
        (b, a, self.ssr(b, a, center, width))
    }

    fn ssr(&self, b: f64, a: f64, center: f64, width: f64) -> f64 {
        self.x
            .iter()
            .zip(self.c)
            .zip(&self.w)
            .map(|((&x, &c), &w)| w * (c - b + a * triangle(x, center, width)).powi(2))
            .sum()
    }
}

/// Least-squares fit of `baseline (1 - V max(0, 1 - |x - x0| / l_c))`.
///
/// The linear parameters are profiled out while a simplex search runs over
/// `(x0, ln l_c)`; a damped Gauss-Newton pass over all four parameters then
/// polishes the optimum. Weights are `1 / max(c, 1)`. When the minimum count
/// is shared by several points the search starts from the midpoint of that
/// plateau.
pub fn fit_triangle(positions_mm: &[f64], counts: &[f64]) -> Result<HomFit> {
    if positions_mm.len() != counts.len() {
        return Err(Error::invalid("positions and counts differ in length"));
    }
    if positions_mm.len() < 8 {
        return Err(Error::Fit(format!(
            "HOM fit needs at least 8 points, got {}",
            positions_mm.len()
        )));
    }
    if positions_mm.iter().chain(counts).any(|v| !v.is_finite()) || counts.iter().any(|&c| c < 0.0) {
        return Err(Error::invalid("HOM data must be finite and non-negative"));
    }
    let c_max = counts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let c_min = counts.iter().copied().fold(f64::INFINITY, f64::min);
    if !(c_max > 0.0) || c_min / c_max > MIN_DIP_RATIO {
        return Err(Error::Fit(format!(
            "no dip detected (min/max = {:.3})",
            if c_max > 0.0 { c_min / c_max } else { 1.0 }
        )));
    }

    let data = Data {
        x: positions_mm,
        c: counts,
        w: counts.iter().map(|c| 1.0 / c.max(1.0)).collect(),
    };

    let (center0, width0) = initial_guess(positions_mm, counts);
    let span = positions_mm.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - positions_mm.iter().copied().fold(f64::INFINITY, f64::min);

    let objective = |p: &Vector2<f64>| data.profile(p[0], p[1].exp()).2;
    let mut start = Vector2::new(center0, width0.ln());
    let mut step = Vector2::new(0.25 * width0, 0.25);
    let mut best = nelder_mead(objective, start, step, 0.0, 1e-13 * span.max(1.0), 4_000);
    // restart from the optimum to escape premature simplex collapse
    for _ in 0..2 {
        start = best.x;
        step = Vector2::new(0.05 * best.x[1].exp(), 0.05);
        let again = nelder_mead(objective, start, step, 0.0, 1e-13 * span.max(1.0), 4_000);
        if again.f <= best.f {
            best = again;
        }
    }

    let (b, a, _) = data.profile(best.x[0], best.x[1].exp());
    let params = polish(&data, Vector4::new(b, a, best.x[0], best.x[1].exp()));
    let (baseline, depth, center, width) = (params[0], params[1], params[2], params[3]);

    if !(baseline > 0.0) || !(width > 0.0) {
        return Err(Error::Fit("triangle fit collapsed".into()));
    }
    let visibility = (depth / baseline).clamp(0.0, 1.0);
    let residual_rms = (positions_mm
        .iter()
        .zip(counts)
        .map(|(&x, &c)| (c - hom_coincidence_curve(x, center, width, visibility, baseline)).powi(2))
        .sum::<f64>()
        / counts.len() as f64)
        .sqrt();
    Ok(HomFit {
        baseline,
        visibility,
        coherence_length_mm: width,
        center_mm: center,
        residual_rms,
    })
}

fn initial_guess(x: &[f64], c: &[f64]) -> (f64, f64) {
    let c_min = c.iter().copied().fold(f64::INFINITY, f64::min);
    let mut sorted = c.to_vec();
    sorted.sort_by(f64::total_cmp);
    let baseline = sorted[sorted.len() / 2].max(c_min + f64::EPSILON);

    let minima: Vec<usize> = (0..c.len()).filter(|&i| c[i] == c_min).collect();
    let center = if minima.len() > 1 {
        0.5 * (x[minima[0]] + x[minima[minima.len() - 1]])
    } else {
        let depth: Vec<f64> = c.iter().map(|&v| (baseline - v).max(0.0)).collect();
        let total: f64 = depth.iter().sum();
        if total > 0.0 {
            x.iter().zip(&depth).map(|(x, d)| x * d).sum::<f64>() / total
        } else {
            x[minima[0]]
        }
    };

    // dip area / dip depth approximates the half-width of a triangle
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&i, &j| x[i].total_cmp(&x[j]));
    let mut area = 0.0;
    for w in order.windows(2) {
        let (i, j) = (w[0], w[1]);
        let di = (baseline - c[i]).max(0.0);
        let dj = (baseline - c[j]).max(0.0);
        area += 0.5 * (di + dj) * (x[j] - x[i]);
    }
    let span = x[order[order.len() - 1]] - x[order[0]];
    let width = (area / (baseline - c_min)).clamp(span * 1e-3, span);
    (center, width)
}

/// Levenberg-Marquardt over `(baseline, depth, center, width)`.
fn polish(data: &Data<'_>, mut p: Vector4<f64>) -> Vector4<f64> {
    let mut cost = data.ssr(p[0], p[1], p[2], p[3]);
    let mut lambda = 1e-6;
    for _ in 0..200 {
        let mut jtj = Matrix4::<f64>::zeros();
        let mut jtr = Vector4::<f64>::zeros();
        for ((&x, &c), &w) in data.x.iter().zip(data.c).zip(&data.w) {
            let d = x - p[2];
            let inside = d.abs() < p[3];
            let tri = triangle(x, p[2], p[3]);
            let resid = c - (p[0] - p[1] * tri);
            // derivatives of the model
            let jac = if inside {
                Vector4::new(1.0, -tri, -p[1] * d.signum() / p[3], -p[1] * d.abs() / (p[3] * p[3]))
            } else {
                Vector4::new(1.0, -tri, 0.0, 0.0)
            };
            jtj += jac * jac.transpose() * w;
            jtr += jac * (w * resid);
        }
        let mut improved = false;
        for _ in 0..30 {
            let mut damped = jtj;
            for k in 0..4 {
                damped[(k, k)] *= 1.0 + lambda;
            }
            let Some(delta) = damped.lu().solve(&jtr) else {
                lambda *= 10.0;
                continue;
            };
            let trial = p + delta;
            if trial[3] > 0.0 {
                let c_trial = data.ssr(trial[0], trial[1], trial[2], trial[3]);
                if c_trial < cost {
                    let rel = (cost - c_trial) / cost.max(f64::MIN_POSITIVE);
                    p = trial;
                    cost = c_trial;
                    lambda = (lambda * 0.3).max(1e-12);
                    improved = rel > 1e-15;
                    break;
                }
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::fringe::grid;

    fn samples(v: f64, lc: f64, center: f64, base: f64) -> (Vec<f64>, Vec<f64>) {
        let x = grid(-1.0, 1.0, 0.01);
        let c = x.iter().map(|&x| hom_coincidence_curve(x, center, lc, v, base)).collect();
        (x, c)
    }

    #[test]
    fn noiseless_recovery() {
        let (x, c) = samples(0.953, 0.44, 0.0, 1250.0);
        let fit = fit_triangle(&x, &c).unwrap();
        assert!((fit.visibility - 0.953).abs() < 1e-9 * 0.953, "{fit:?}");
        assert!((fit.coherence_length_mm - 0.44).abs() < 1e-9 * 0.44, "{fit:?}");
        assert!((fit.baseline - 1250.0).abs() < 1e-9 * 1250.0);
        assert!(fit.center_mm.abs() < 1e-9);
    }

    #[test]
    fn noiseless_recovery_off_grid_center() {
        let (x, c) = samples(0.8, 0.3137, 0.1234, 500.0);
        let fit = fit_triangle(&x, &c).unwrap();
        assert!((fit.visibility - 0.8).abs() < 1e-9 * 0.8, "{fit:?}");
        assert!((fit.coherence_length_mm - 0.3137).abs() < 1e-9 * 0.3137, "{fit:?}");
        assert!((fit.center_mm - 0.1234).abs() < 1e-9, "{fit:?}");
    }

    #[test]
    fn flat_data_has_no_dip() {
        let x = grid(-1.0, 1.0, 0.1);
        let c = vec![100.0; x.len()];
        assert!(matches!(fit_triangle(&x, &c), Err(Error::Fit(_))));
    }

    #[test]
    fn too_few_points() {
        assert!(matches!(
            fit_triangle(&[0.0, 1.0, 2.0], &[1.0, 0.0, 1.0]),
            Err(Error::Fit(_))
        ));
    }

    #[test]
    fn flat_bottom_starts_from_plateau_midpoint() {
        let x = grid(-1.0, 1.0, 0.05);
        let c: Vec<f64> = x
            .iter()
            .map(|&x| if x.abs() < 0.21 { 10.0 } else { 100.0 })
            .collect();
        let (center, _) = initial_guess(&x, &c);
        assert!(center.abs() < 1e-6, "{center}");
        let fit = fit_triangle(&x, &c).unwrap();
        assert!(fit.center_mm.abs() < 0.05);
    }
}
