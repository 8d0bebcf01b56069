//! Small dense minimizers used by the fits.

use nalgebra::{SMatrix, SVector};

#[derive(Debug, Clone)]
pub struct BfgsOptions {
    /// Stop once an accepted step improves the objective by less than
    /// `rel_tol * max(|f|, abs_floor)`.
    pub rel_tol: f64,
    pub abs_floor: f64,
    pub grad_tol: f64,
    pub max_iter: usize,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_floor: 1e-12,
            grad_tol: 1e-12,
            max_iter: 100_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BfgsOutcome<const N: usize> {
    pub x: SVector<f64, N>,
    pub f: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after every accepted step, starting with the initial value.
    pub history: Vec<f64>,
}

/// Quasi-Newton minimization with an Armijo backtracking line search.
///
/// `fg` returns the objective and its gradient; non-finite objectives are
/// treated as infeasible and shrink the step.
pub fn bfgs<const N: usize, F>(
    mut fg: F,
    x0: SVector<f64, N>,
    opts: &BfgsOptions,
) -> BfgsOutcome<N>
where
    F: FnMut(&SVector<f64, N>) -> (f64, SVector<f64, N>),
{
    let mut x = x0;
    let (mut f, mut g) = fg(&x);
    let mut h = SMatrix::<f64, N, N>::identity();
    let mut history = vec![f];
    let mut iterations = 0;
    let mut converged = false;
    let mut fresh_h = true;

    while iterations < opts.max_iter {
        if g.norm() <= opts.grad_tol {
            converged = true;
            break;
        }
        let mut d = -(h * g);
        let mut slope = g.dot(&d);
        if !(slope < 0.0) {
            h = SMatrix::identity();
            fresh_h = true;
            d = -g;
            slope = -g.norm_squared();
        }
        if fresh_h {
            // first step from an identity metric: cap its length
            let scale = (1.0 / g.norm()).min(1.0);
            d *= scale;
            slope *= scale;
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..80 {
            let xn = x + d * step;
            let (fn_, gn) = fg(&xn);
            if fn_.is_finite() && fn_ <= f + 1e-4 * step * slope {
                accepted = Some((xn, fn_, gn));
                break;
            }
            step *= 0.5;
        }
        iterations += 1;

        let Some((xn, fn_, gn)) = accepted else {
            if fresh_h {
                // steepest descent cannot improve further at working precision
                converged = true;
                break;
            }
            h = SMatrix::identity();
            fresh_h = true;
            continue;
        };

        let s = xn - x;
        let y = gn - g;
        let improvement = f - fn_;
        x = xn;
        f = fn_;
        g = gn;
        history.push(f);

        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            if fresh_h {
                h *= sy / y.norm_squared();
            }
            let rho = 1.0 / sy;
            let i = SMatrix::<f64, N, N>::identity();
            let a = i - s * y.transpose() * rho;
            h = a * h * a.transpose() + s * s.transpose() * rho;
            fresh_h = false;
        }

        if improvement <= opts.rel_tol * f.abs().max(opts.abs_floor) {
            converged = true;
            break;
        }
    }

    BfgsOutcome {
        x,
        gradient_norm: g.norm(),
        f,
        iterations,
        converged,
        history,
    }
}

#[derive(Debug, Clone)]
pub struct NelderMeadOutcome<const N: usize> {
    pub x: SVector<f64, N>,
    pub f: f64,
    pub iterations: usize,
}

/// Derivative-free simplex minimization.
///
/// Stops when the spread of objective values across the simplex falls below
/// `f_tol` and the simplex diameter below `x_tol`, or after `max_iter`.
pub fn nelder_mead<const N: usize, F>(
    mut f: F,
    x0: SVector<f64, N>,
    step: SVector<f64, N>,
    f_tol: f64,
    x_tol: f64,
    max_iter: usize,
) -> NelderMeadOutcome<N>
where
    F: FnMut(&SVector<f64, N>) -> f64,
{
    let eval = |f: &mut F, x: &SVector<f64, N>| {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let mut pts: Vec<SVector<f64, N>> = Vec::with_capacity(N + 1);
    pts.push(x0);
    for k in 0..N {
        let mut p = x0;
        p[k] += step[k];
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| eval(&mut f, p)).collect();
    let mut iterations = 0;

    while iterations < max_iter {
        iterations += 1;
        let mut order: Vec<usize> = (0..=N).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = order.iter().map(|&i| pts[i]).collect();
        vals = order.iter().map(|&i| vals[i]).collect();

        let spread = vals[N] - vals[0];
        let diameter = pts[1..]
            .iter()
            .map(|p| (p - pts[0]).amax())
            .fold(0.0, f64::max);
        if spread.abs() <= f_tol && diameter <= x_tol {
            break;
        }

        let centroid = pts[..N].iter().fold(SVector::<f64, N>::zeros(), |acc, p| acc + p) / N as f64;
        let worst = pts[N];
        let xr = centroid + (centroid - worst);
        let fr = eval(&mut f, &xr);
        if fr < vals[0] {
            let xe = centroid + (centroid - worst) * 2.0;
            let fe = eval(&mut f, &xe);
            if fe < fr {
                pts[N] = xe;
                vals[N] = fe;
            } else {
                pts[N] = xr;
                vals[N] = fr;
            }
        } else if fr < vals[N - 1] {
            pts[N] = xr;
            vals[N] = fr;
        } else {
            let (xc, fc) = if fr < vals[N] {
                let xc = centroid + (xr - centroid) * 0.5;
                (xc, eval(&mut f, &xc))
            } else {
                let xc = centroid + (worst - centroid) * 0.5;
                (xc, eval(&mut f, &xc))
            };
            if fc < vals[N].min(fr) {
                pts[N] = xc;
                vals[N] = fc;
            } else {
                let best = pts[0];
                for i in 1..=N {
                    pts[i] = best + (pts[i] - best) * 0.5;
                    vals[i] = eval(&mut f, &pts[i]);
                }
            }
        }
    }

    let best = (0..=N).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    NelderMeadOutcome {
        x: pts[best],
        f: vals[best],
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector2;

    fn rosenbrock(x: &Vector2<f64>) -> f64 {
        (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
    }

    #[test]
    fn bfgs_rosenbrock() {
        let out = bfgs(
            |x: &Vector2<f64>| {
                let g = Vector2::new(
                    -2.0 * (1.0 - x[0]) - 400.0 * x[0] * (x[1] - x[0] * x[0]),
                    200.0 * (x[1] - x[0] * x[0]),
                );
                (rosenbrock(x), g)
            },
            Vector2::new(-1.2, 1.0),
            &BfgsOptions::default(),
        );
        assert!(out.converged);
        assert!((out.x - Vector2::new(1.0, 1.0)).norm() < 1e-5, "{:?}", out.x);
        assert!(out.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn nelder_mead_rosenbrock() {
        let out = nelder_mead(
            rosenbrock,
            Vector2::new(-1.2, 1.0),
            Vector2::new(0.1, 0.1),
            1e-20,
            1e-10,
            20_000,
        );
        assert!((out.x - Vector2::new(1.0, 1.0)).norm() < 1e-6, "{:?}", out.x);
    }
}
