use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Gamma};

use crate::error::{Error, Result};

/// Silverman's rule-of-thumb bandwidth `0.9·min(σ, IQR/1.34)·n^(−1/5)`.
pub fn silverman_bandwidth(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let sd = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)).sqrt();
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    let iqr = quantile_sorted(&s, 0.75) - quantile_sorted(&s, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    0.9 * spread * n.powf(-0.2)
}

/// Linear-interpolation quantile of sorted data.
pub(crate) fn quantile_sorted(s: &[f64], q: f64) -> f64 {
    let pos = q * (s.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    s[lo] + (pos - lo as f64) * (s[hi] - s[lo])
}

/// Gaussian kernel density estimate on `points` evenly spaced grid values
/// covering the data plus three bandwidths either side.
pub fn kde(x: &[f64], points: usize) -> Result<Vec<(f64, f64)>> {
    if x.is_empty() {
        return Err(Error::EmptyInput("no values for density estimate".into()));
    }
    if points < 2 {
        return Err(Error::invalid("density grid needs at least two points"));
    }
    let mut h = silverman_bandwidth(x);
    if !(h > 0.0) {
        h = 1e-3 * x[0].abs().max(1.0);
    }
    let lo = x.iter().cloned().fold(f64::INFINITY, f64::min) - 3.0 * h;
    let hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 3.0 * h;
    let step = (hi - lo) / (points - 1) as f64;
    let norm = 1.0 / (x.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    Ok((0..points)
        .map(|i| {
            let g = lo + i as f64 * step;
            let d: f64 = x.iter().map(|v| (-0.5 * ((g - v) / h).powi(2)).exp()).sum();
            (g, d * norm)
        })
        .collect())
}

/// Method-of-moments Γ fit plus a Kolmogorov–Smirnov check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaFit {
    pub shape: f64,
    pub scale: f64,
    pub ks_statistic: f64,
    /// Asymptotic Kolmogorov p-value. Parameters are estimated from the same
    /// data, so this is conservative.
    pub p_value: f64,
}

pub fn gamma_moment_fit(x: &[f64]) -> Result<GammaFit> {
    if x.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            have: x.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::invalid("gamma fit needs finite nonnegative values"));
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if !(mean > 0.0 && var > 0.0) {
        return Err(Error::Degenerate("gamma fit needs positive mean and variance".into()));
    }
    let shape = mean * mean / var;
    let scale = var / mean;
    let dist = Gamma::new(shape, 1.0 / scale).map_err(|e| Error::Degenerate(e.to_string()))?;
    let d = ks_statistic(x, |v| dist.cdf(v));
    Ok(GammaFit {
        shape,
        scale,
        ks_statistic: d,
        p_value: kolmogorov_p(d, x.len()),
    })
}

/// One-sample KS distance `sup |F_n − F|`.
pub fn ks_statistic(x: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &v) in s.iter().enumerate() {
        let f = cdf(v);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    d
}

/// Asymptotic p-value of a KS distance with the Stephens small-sample
/// correction.
pub fn kolmogorov_p(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand_distr::{Distribution, Exp};

    #[test]
    fn kde_integrates_to_one() {
        let x = [0.0, 1.0, 1.5, 4.0, 4.2];
        let grid = kde(&x, 2001).unwrap();
        let step = grid[1].0 - grid[0].0;
        let area: f64 = grid.iter().map(|g| g.1).sum::<f64>() * step;
        assert!((area - 1.0).abs() < 1e-3, "{area}");
    }

    #[test]
    fn kolmogorov_tail_values() {
        // the 5% critical value of the limiting distribution is 1.358
        let n = 1_000_000;
        let d = 1.358 / (n as f64).sqrt();
        assert!((kolmogorov_p(d, n) - 0.05).abs() < 1e-3);
        assert_eq!(kolmogorov_p(0.0, 10), 1.0);
    }

    #[test]
    fn exponential_sample_fits_gamma() {
        let mut rng = stream(4, "test", 0);
        let x: Vec<f64> = Exp::new(0.5).unwrap().sample_iter(&mut rng).take(2000).collect();
        let fit = gamma_moment_fit(&x).unwrap();
        assert!((fit.shape - 1.0).abs() < 0.15);
        assert!((fit.scale - 2.0).abs() < 0.3);
        assert!(fit.p_value > 0.01);
    }

    #[test]
    fn bimodal_sample_fails_gamma() {
        let x: Vec<f64> = (0..1000)
            .map(|i| if i % 2 == 0 { 1.0 } else { 10.0 } + (i % 7) as f64 * 0.01)
            .collect();
        assert!(gamma_moment_fit(&x).unwrap().p_value < 0.01);
    }
}
