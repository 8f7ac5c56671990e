//! Two-component lognormal mixture, fitted by expectation-maximization on
//! log-speeds. Only used as a bimodality diagnostic; it never gates the
//! threshold.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::speed_grid::SpeedGrid;

pub const MIN_SAMPLES: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureFit {
    /// Weight of the low-speed component.
    pub lambda: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    /// Log-likelihood of the speeds (not the log-speeds) under the fit.
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Log-likelihood before the first and after every EM step.
    #[serde(skip)]
    pub trace: Vec<f64>,
}

#[derive(Clone, Copy)]
struct Params {
    lambda: f64,
    mu: [f64; 2],
    var: [f64; 2],
}

fn log_normal_pdf(x: f64, mu: f64, var: f64) -> f64 {
    -0.5 * ((x - mu) * (x - mu) / var + (2.0 * PI * var).ln())
}

fn log_sum_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Log-likelihood of the log-speeds, filling `resp` with the low-component
/// responsibilities.
fn e_step(xs: &[f64], p: &Params, resp: &mut [f64]) -> f64 {
    let (lw1, lw2) = (p.lambda.ln(), (1.0 - p.lambda).ln());
    let mut ll = 0.0;
    for (x, r) in xs.iter().zip(resp.iter_mut()) {
        let a = lw1 + log_normal_pdf(*x, p.mu[0], p.var[0]);
        let b = lw2 + log_normal_pdf(*x, p.mu[1], p.var[1]);
        let total = log_sum_exp(a, b);
        *r = (a - total).exp();
        ll += total;
    }
    ll
}

fn m_step(xs: &[f64], resp: &[f64], var_floor: f64) -> Params {
    let n = xs.len() as f64;
    let w1: f64 = resp.iter().sum();
    let w2 = n - w1;
    let (mut s1, mut s2) = (0.0, 0.0);
    for (x, r) in xs.iter().zip(resp) {
        s1 += r * x;
        s2 += (1.0 - r) * x;
    }
    let mu = [s1 / w1, s2 / w2];
    let (mut v1, mut v2) = (0.0, 0.0);
    for (x, r) in xs.iter().zip(resp) {
        v1 += r * (x - mu[0]).powi(2);
        v2 += (1.0 - r) * (x - mu[1]).powi(2);
    }
    Params {
        lambda: (w1 / n).clamp(1e-12, 1.0 - 1e-12),
        mu,
        var: [(v1 / w1).max(var_floor), (v2 / w2).max(var_floor)],
    }
}

/// Fits the mixture to every positive speed in the grid.
///
/// Stops once an iteration changes the mean per-sample log-likelihood by
/// less than `tolerance`; if `max_iterations` is reached first the best fit so far is
/// returned with `converged == false`.
pub fn fit_speed_mixture(grid: &SpeedGrid, max_iterations: usize, tolerance: f64) -> Result<MixtureFit> {
    let speeds: Vec<f64> = grid.present_values().filter(|&v| v > 0.0).collect();
    fit_samples(&speeds, max_iterations, tolerance)
}

pub(crate) fn fit_samples(speeds: &[f64], max_iterations: usize, tolerance: f64) -> Result<MixtureFit> {
    let speeds: Vec<f64> = speeds.iter().copied().filter(|&v| v > 0.0 && v.is_finite()).collect();
    if speeds.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: MIN_SAMPLES,
            found: speeds.len(),
        });
    }
    let mut xs: Vec<f64> = speeds.iter().map(|v| v.ln()).collect();
    let log_jacobian: f64 = xs.iter().sum();

    // Initialise from the lower and upper halves of the sorted sample.
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let total_var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
    let var_floor = (total_var * 1e-6).max(1e-12);
    let half = n / 2;
    let moments = |s: &[f64]| {
        let m = s.iter().sum::<f64>() / s.len() as f64;
        let v = s.iter().map(|x| (x - m).powi(2)).sum::<f64>() / s.len() as f64;
        (m, v.max(var_floor))
    };
    let (m1, v1) = moments(&xs[..half]);
    let (m2, v2) = moments(&xs[half..]);
    let mut params = Params {
        lambda: 0.5,
        mu: [m1, m2],
        var: [v1, v2],
    };

    let mut resp = vec![0.0; n];
    let mut ll = e_step(&xs, &params, &mut resp);
    let mut trace = vec![ll];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iterations {
        iterations += 1;
        let next = m_step(&xs, &resp, var_floor);
        let next_ll = e_step(&xs, &next, &mut resp);
        trace.push(next_ll);
        let gain = next_ll - ll;
        params = next;
        ll = next_ll;
        if gain.abs() / (n as f64) < tolerance {
            converged = true;
            break;
        }
    }

    let (lo, hi) = if params.mu[0] <= params.mu[1] { (0, 1) } else { (1, 0) };
    let lambda = if lo == 0 { params.lambda } else { 1.0 - params.lambda };
    Ok(MixtureFit {
        lambda,
        mu1: params.mu[lo],
        mu2: params.mu[hi],
        sigma1: params.var[lo].sqrt(),
        sigma2: params.var[hi].sqrt(),
        log_likelihood: ll - log_jacobian,
        iterations,
        converged,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, LogNormal};

    fn draws(seed: u64, parts: &[(usize, f64, f64)]) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        for &(n, mu, sigma) in parts {
            let d = LogNormal::new(mu, sigma).unwrap();
            out.extend((0..n).map(|_| d.sample(&mut rng)));
        }
        out
    }

    #[test]
    fn recovers_planted_mixture() {
        let (mu1, mu2) = (20f64.ln(), 58f64.ln());
        let xs = draws(7, &[(1000, mu1, 0.15), (1000, mu2, 0.05)]);
        let fit = fit_samples(&xs, 500, 1e-9).unwrap();
        assert!(fit.converged);
        assert!((fit.lambda - 0.5).abs() < 0.05, "{fit:?}");
        assert!((fit.mu1 - mu1).abs() / mu1 < 0.05);
        assert!((fit.mu2 - mu2).abs() / mu2 < 0.05);
        assert!((fit.sigma1 - 0.15).abs() < 0.03);
    }

    #[test]
    fn log_likelihood_never_decreases() {
        let xs = draws(11, &[(300, 25f64.ln(), 0.3), (700, 55f64.ln(), 0.1)]);
        let fit = fit_samples(&xs, 300, 0.0).unwrap();
        for pair in fit.trace.windows(2) {
            assert!(pair[1] >= pair[0] - 1e-9, "{} -> {}", pair[0], pair[1]);
        }
    }

    #[test]
    fn identical_components_stay_finite() {
        let xs = draws(3, &[(1000, 50f64.ln(), 0.1)]);
        let fit = fit_samples(&xs, 2000, 1e-6).unwrap();
        assert!(fit.converged, "{fit:?}");
        assert!(fit.log_likelihood.is_finite());
        assert!(fit.lambda > 0.0 && fit.lambda < 1.0);
        assert!(fit.sigma1 > 0.0 && fit.sigma2 > 0.0);
    }

    #[test]
    fn too_few_samples() {
        assert!(matches!(
            fit_samples(&[10.0, 20.0, 0.0], 10, 1e-6),
            Err(Error::TooFewSamples { found: 2, .. })
        ));
    }

    #[test]
    fn iteration_cap_reports_unconverged() {
        let xs = draws(5, &[(200, 25f64.ln(), 0.3), (200, 50f64.ln(), 0.1)]);
        let fit = fit_samples(&xs, 1, 0.0).unwrap();
        assert!(!fit.converged);
        assert_eq!(fit.iterations, 1);
    }
}
