use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussComponent {
    pub weight: f64,
    pub mean: f64,
    pub variance: f64,
}

/// A fitted 1-D Gaussian mixture with hard assignments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeModel {
    /// Components sorted by mean, ascending.
    pub components: Vec<GaussComponent>,
    pub assignments: Vec<usize>,
    /// Row `i` holds the posterior of each component for sample `i`.
    pub responsibilities: Vec<Vec<f64>>,
    pub log_likelihood: f64,
    pub bic: f64,
    pub k: usize,
    pub iterations: usize,
    /// Set when every value is identical and the variance floor stood in for
    /// the (zero) sample variance.
    pub degenerate: bool,
    /// `(k, best BIC)` for every order tried by [`select_modes`]; a single
    /// entry for a direct fit.
    pub bic_table: Vec<(usize, f64)>,
}

impl ModeModel {
    pub fn members(&self, mode: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == mode)
            .collect()
    }

    pub fn counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.k];
        for &a in &self.assignments {
            c[a] += 1;
        }
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GmmOptions {
    pub max_iter: usize,
    /// EM stops when the mean per-sample log-likelihood improves by less
    /// than this.
    pub tol: f64,
    /// Seeded k-means++ initialisations per order; the best likelihood wins.
    pub restarts: usize,
}

impl Default for GmmOptions {
    fn default() -> Self {
        GmmOptions {
            max_iter: 500,
            tol: 1e-8,
            restarts: 10,
        }
    }
}

/// Variance floor relative to the data variance.
const VARIANCE_FLOOR: f64 = 1e-6;
/// Floor used when the data variance itself is zero.
const ABSOLUTE_FLOOR: f64 = 1e-12;

fn validate(x: &[f64]) -> Result<()> {
    if x.is_empty() {
        return Err(Error::EmptyInput("no values to fit".into()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("mixture input"));
    }
    Ok(())
}

fn moments(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var)
}

fn distinct_count(x: &[f64]) -> usize {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v.len()
}

fn log_normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -0.5 * ((2.0 * std::f64::consts::PI * var).ln() + d * d / var)
}

/// E-step: fills `resp` and returns the total log-likelihood.
fn e_step(x: &[f64], comps: &[GaussComponent], resp: &mut [Vec<f64>]) -> f64 {
    // ln w − ½ ln(2πv) and −1/(2v) per component
    let consts: Vec<(f64, f64, f64)> = comps
        .iter()
        .map(|c| {
            (
                c.weight.ln() - 0.5 * (2.0 * std::f64::consts::PI * c.variance).ln(),
                -0.5 / c.variance,
                c.mean,
            )
        })
        .collect();
    let mut total = 0.0;
    for (xi, row) in x.iter().zip(resp.iter_mut()) {
        let mut top = f64::NEG_INFINITY;
        for (r, &(a, b, mu)) in row.iter_mut().zip(&consts) {
            let d = xi - mu;
            *r = a + b * d * d;
            top = top.max(*r);
        }
        let mut sum = 0.0;
        for r in row.iter_mut() {
            *r = (*r - top).exp();
            sum += *r;
        }
        for r in row.iter_mut() {
            *r /= sum;
        }
        total += top + sum.ln();
    }
    total
}

/// M-step with the variance floor applied as a constraint.
fn m_step(x: &[f64], resp: &[Vec<f64>], floor: f64, comps: &mut [GaussComponent]) {
    let n = x.len() as f64;
    for (j, c) in comps.iter_mut().enumerate() {
        let nk: f64 = resp.iter().map(|r| r[j]).sum();
        if nk <= 0.0 {
            // an empty component keeps its place with negligible weight
            c.weight = f64::MIN_POSITIVE;
            continue;
        }
        let mean = x.iter().zip(resp).map(|(v, r)| r[j] * v).sum::<f64>() / nk;
        let var = x
            .iter()
            .zip(resp)
            .map(|(v, r)| r[j] * (v - mean) * (v - mean))
            .sum::<f64>()
            / nk;
        c.weight = nk / n;
        c.mean = mean;
        c.variance = var.max(floor);
    }
}

/// k-means++ seeding followed by one hard-assignment moment step.
fn init_components<R: Rng + ?Sized>(x: &[f64], k: usize, floor: f64, rng: &mut R) -> Vec<GaussComponent> {
    let mut centres = vec![x[rng.random_range(0..x.len())]];
    let mut d2: Vec<f64> = x.iter().map(|v| (v - centres[0]).powi(2)).collect();
    while centres.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut pick = x.len() - 1;
            for (i, d) in d2.iter().enumerate() {
                if u < *d {
                    pick = i;
                    break;
                }
                u -= d;
            }
            x[pick]
        } else {
            x[rng.random_range(0..x.len())]
        };
        centres.push(next);
        for (d, v) in d2.iter_mut().zip(x) {
            *d = d.min((v - next).powi(2));
        }
    }
    let mut sums = vec![(0.0f64, 0.0f64, 0.0f64); k];
    for &v in x {
        let j = (0..k)
            .min_by(|&a, &b| (v - centres[a]).abs().total_cmp(&(v - centres[b]).abs()))
            .unwrap();
        sums[j].0 += 1.0;
        sums[j].1 += v;
        sums[j].2 += v * v;
    }
    let n = x.len() as f64;
    let (_, global_var) = moments(x);
    sums.iter()
        .zip(&centres)
        .map(|(&(cnt, s, s2), &c)| {
            if cnt == 0.0 {
                GaussComponent {
                    weight: 1.0 / n,
                    mean: c,
                    variance: global_var.max(floor),
                }
            } else {
                let mean = s / cnt;
                GaussComponent {
                    weight: cnt / n,
                    mean,
                    variance: (s2 / cnt - mean * mean).max(floor),
                }
            }
        })
        .collect()
}

struct Fit {
    comps: Vec<GaussComponent>,
    resp: Vec<Vec<f64>>,
    ll: f64,
    iterations: usize,
}

fn run_em(x: &[f64], mut comps: Vec<GaussComponent>, floor: f64, opts: &GmmOptions) -> Fit {
    let m = x.len();
    let k = comps.len();
    let mut resp = vec![vec![0.0; k]; m];
    let mut ll = e_step(x, &comps, &mut resp);
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        m_step(x, &resp, floor, &mut comps);
        let next = e_step(x, &comps, &mut resp);
        debug_assert!(
            next >= ll - 1e-9 * ll.abs().max(1.0),
            "EM log-likelihood decreased: {ll} -> {next}"
        );
        let gain = (next - ll) / m as f64;
        ll = next;
        if gain < opts.tol {
            break;
        }
    }
    Fit {
        comps,
        resp,
        ll,
        iterations,
    }
}

fn finish(x: &[f64], fit: Fit, degenerate: bool) -> ModeModel {
    let k = fit.comps.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| fit.comps[a].mean.total_cmp(&fit.comps[b].mean).then(a.cmp(&b)));
    let components: Vec<GaussComponent> = order.iter().map(|&j| fit.comps[j]).collect();
    let responsibilities: Vec<Vec<f64>> = fit.resp.iter().map(|r| order.iter().map(|&j| r[j]).collect()).collect();
    let assignments = responsibilities
        .iter()
        .map(|r| {
            let mut best = 0;
            for j in 1..k {
                if r[j] > r[best] {
                    best = j;
                }
            }
            best
        })
        .collect();
    let params = (3 * k - 1) as f64;
    let bic = -2.0 * fit.ll + params * (x.len() as f64).ln();
    ModeModel {
        components,
        assignments,
        responsibilities,
        log_likelihood: fit.ll,
        bic,
        k,
        iterations: fit.iterations,
        degenerate,
        bic_table: vec![(k, bic)],
    }
}

/// Fits a `k`-component mixture by EM from `opts.restarts` seeded
/// k-means++ starts and keeps the highest likelihood.
pub fn fit_gmm_1d(x: &[f64], k: usize, seed: u64, opts: &GmmOptions) -> Result<ModeModel> {
    validate(x)?;
    if k == 0 {
        return Err(Error::invalid("mixture needs at least one component"));
    }
    let distinct = distinct_count(x);
    if k > distinct {
        return Err(Error::invalid(format!(
            "{k} components requested but only {distinct} distinct values"
        )));
    }
    let (mean, var) = moments(x);
    if var == 0.0 {
        let fit = Fit {
            comps: vec![GaussComponent {
                weight: 1.0,
                mean,
                variance: ABSOLUTE_FLOOR,
            }],
            resp: vec![vec![1.0]; x.len()],
            ll: x.len() as f64 * log_normal_pdf(mean, mean, ABSOLUTE_FLOOR),
            iterations: 0,
        };
        return Ok(finish(x, fit, true));
    }
    let floor = VARIANCE_FLOOR * var;
    let restarts = opts.restarts.max(1);
    let child = derive_seed(seed, "gmm", k as u64);
    let best = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(child, "restart", r as u64);
            let init = init_components(x, k, floor, &mut rng);
            (r, run_em(x, init, floor, opts))
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(None::<(usize, Fit)>, |acc, (r, f)| match acc {
            Some((br, bf)) if bf.ll >= f.ll => Some((br, bf)),
            _ => Some((r, f)),
        })
        .unwrap()
        .1;
    Ok(finish(x, best, false))
}

/// Fits orders `1..=k_max` and returns the minimum-BIC model; ties go to
/// the smaller order. Orders beyond the number of distinct values are
/// skipped.
pub fn select_modes(x: &[f64], k_max: usize, seed: u64, opts: &GmmOptions) -> Result<ModeModel> {
    validate(x)?;
    if k_max == 0 {
        return Err(Error::invalid("k_max must be at least 1"));
    }
    let top = k_max.min(distinct_count(x)).min(x.len());
    let fits = (1..=top)
        .into_par_iter()
        .map(|k| fit_gmm_1d(x, k, seed, opts))
        .collect::<Result<Vec<_>>>()?;
    let table: Vec<(usize, f64)> = fits.iter().map(|m| (m.k, m.bic)).collect();
    let mut best = fits
        .into_iter()
        .reduce(|a, b| if b.bic < a.bic { b } else { a })
        .unwrap();
    best.bic_table = table;
    Ok(best)
}

/// Values actually handed to the mixture: raw, or `ln(1 + δ)`.
pub fn transform_deltas(deltas: &[f64], log: bool) -> Vec<f64> {
    if log {
        deltas.iter().map(|d| d.ln_1p()).collect()
    } else {
        deltas.to_vec()
    }
}
