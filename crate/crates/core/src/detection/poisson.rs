//! Poisson sampling by CDF inversion.
//!
//! Means up to [`NORMAL_THRESHOLD`] are inverted exactly: below
//! [`SMALL_MEAN`] by the sequential search from zero, above it by a search
//! that starts at the mode with `P(X <= mode)` taken from the regularized
//! incomplete gamma function, so the cost grows like `sqrt(mean)`. Larger
//! means use a rounded normal approximation.

use rand::Rng;
use statrs::function::gamma::{gamma_ur, ln_gamma};

pub const SMALL_MEAN: f64 = 30.0;
pub const NORMAL_THRESHOLD: f64 = 1e6;

pub fn sample<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    if !(mean > 0.0) {
        return 0;
    }
    if mean < SMALL_MEAN {
        inverse_small(rng.random::<f64>(), mean)
    } else if mean <= NORMAL_THRESHOLD {
        inverse_from_mode(rng.random::<f64>(), mean)
    } else {
        normal_approx(rng, mean)
    }
}

/// Smallest `k` with `P(X <= k) >= u`, for small means.
fn inverse_small(u: f64, mean: f64) -> u64 {
    let mut k = 0u64;
    let mut p = (-mean).exp();
    let mut cdf = p;
    while cdf < u {
        k += 1;
        p *= mean / k as f64;
        if p < f64::MIN_POSITIVE {
            break;
        }
        cdf += p;
    }
    k
}

fn ln_pmf(k: u64, mean: f64) -> f64 {
    let kf = k as f64;
    -mean + kf * mean.ln() - ln_gamma(kf + 1.0)
}

/// Smallest `k` with `P(X <= k) >= u`, searching outward from the mode.
fn inverse_from_mode(u: f64, mean: f64) -> u64 {
    let mode = mean.floor() as u64;
    let mut k = mode;
    let mut p = ln_pmf(mode, mean).exp();
    let mut cdf = gamma_ur(mode as f64 + 1.0, mean);
    if u <= cdf {
        // walk down while the previous CDF value still covers u
        while k > 0 {
            let below = cdf - p;
            if below < u {
                break;
            }
            cdf = below;
            p *= k as f64 / mean;
            k -= 1;
        }
    } else {
        while cdf < u {
            k += 1;
            p *= mean / k as f64;
            if p < f64::MIN_POSITIVE {
                break;
            }
            cdf += p;
        }
    }
    k
}

fn normal_approx<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    // Box-Muller; 1 - u keeps the log argument in (0, 1]
    let u1 = 1.0 - rng.random::<f64>();
    let u2 = rng.random::<f64>();
    let z = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
    (mean + mean.sqrt() * z).round().max(0.0) as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn exact_cdf(k: u64, mean: f64) -> f64 {
        (0..=k).map(|j| ln_pmf(j, mean).exp()).sum()
    }

    #[test]
    fn zero_and_negative_means() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(sample(&mut rng, 0.0), 0);
        assert_eq!(sample(&mut rng, -3.0), 0);
        assert_eq!(sample(&mut rng, f64::NAN), 0);
    }

    #[test]
    fn inversion_matches_cdf() {
        for &mean in &[0.7, 12.0, 45.0, 300.0, 2500.0] {
            for &u in &[1e-6, 0.01, 0.3, 0.5, 0.77, 0.999] {
                let k = if mean < SMALL_MEAN {
                    inverse_small(u, mean)
                } else {
                    inverse_from_mode(u, mean)
                };
                assert!(exact_cdf(k, mean) >= u - 1e-9, "mean {mean} u {u} k {k}");
                if k > 0 {
                    assert!(exact_cdf(k - 1, mean) < u + 1e-9, "mean {mean} u {u} k {k}");
                }
            }
        }
    }

    #[test]
    fn branches_agree_at_threshold() {
        for &u in &[0.05, 0.4, 0.6, 0.95] {
            assert_eq!(inverse_small(u, 29.5), inverse_from_mode(u, 29.5));
        }
    }

    #[test]
    fn sample_mean_and_variance() {
        let n = 20_000;
        for (i, &mean) in [0.5, 5.0, 50.0, 1234.5, 1e5, 2e6].iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + i as u64);
            let xs: Vec<f64> = (0..n).map(|_| sample(&mut rng, mean) as f64).collect();
            let m = xs.iter().sum::<f64>() / n as f64;
            let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
            let se_mean = (mean / n as f64).sqrt();
            let se_var = ((mean + 2.0 * mean * mean) / n as f64).sqrt();
            assert!((m - mean).abs() < 5.0 * se_mean, "mean {mean}: {m}");
            assert!((var - mean).abs() < 5.0 * se_var, "mean {mean}: var {var}");
        }
    }
}
