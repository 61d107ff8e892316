//! Risk-set functionals, the Cox log partial likelihood with analytic
//! derivatives, and damped Newton optimization of the regression
//! coefficients.
//!
//! Tied event times are handled Breslow-style: every event at `t` uses the
//! full risk set `{T_i >= t}`, consistent with the sort tie policy.

use serde_json::json;

use crate::error::{Error, Result};
use crate::numeric::solve_dense;
use crate::sample::SortedSample;

/// Result of maximizing the partial likelihood.
#[derive(Debug, Clone)]
pub struct CoxFit {
    pub beta: Vec<f64>,
    pub log_partial_likelihood: f64,
    pub iterations: usize,
    /// Sup-norm of the score at the returned beta.
    pub gradient_norm: f64,
    /// Observed information (negative Hessian), row-major `p x p`.
    pub information: Vec<f64>,
    pub converged: bool,
}

impl CoxFit {
    /// JSON surface: `{"beta": [...], "loglik": v, "iterations": k, "converged": bool}`.
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "beta": self.beta,
            "loglik": self.log_partial_likelihood,
            "iterations": self.iterations,
            "converged": self.converged,
        })
    }
}

/// Options for [`fit_beta`].
#[derive(Debug, Clone)]
pub struct FitOptions {
    /// Convergence threshold on the sup-norm of the score.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Starting point; zero vector when absent.
    pub initial_beta: Option<Vec<f64>>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 50,
            initial_beta: None,
        }
    }
}

fn check_dim(sorted: &SortedSample, beta: &[f64]) -> Result<()> {
    if beta.len() != sorted.num_covariates() {
        return Err(Error::InvalidInput(format!(
            "beta has dimension {}, sample has {} covariates",
            beta.len(),
            sorted.num_covariates()
        )));
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// The empirical risk-set functional
/// `Phi_n(x; beta) = (1/n) sum_i 1{T_i >= x} exp(beta' Z_i)`.
pub fn phi_n(sorted: &SortedSample, x: f64, beta: &[f64]) -> Result<f64> {
    check_dim(sorted, beta)?;
    let n = sorted.len();
    let start = sorted.times().partition_point(|&t| t < x);
    let mut sum = 0.0;
    for k in start..n {
        sum += dot(beta, sorted.covariate_row(k)).exp();
    }
    Ok(sum / n as f64)
}

/// Sweep the sorted sample from the largest time down, maintaining the
/// risk-set sums S0, S1, S2 and invoking `on_event` for every event record
/// with the sums over `{T_i >= t_event}`.
#[allow(clippy::needless_range_loop)]
fn risk_sweep<F>(sorted: &SortedSample, beta: &[f64], mut on_event: F)
where
    F: FnMut(usize, f64, &[f64], &[f64]),
{
    let n = sorted.len();
    let p = beta.len();
    let times = sorted.times();
    let events = sorted.events();
    let mut s0 = 0.0;
    let mut s1 = vec![0.0; p];
    let mut s2 = vec![0.0; p * p];

    let mut hi = n;
    while hi > 0 {
        let t = times[hi - 1];
        let mut lo = hi;
        while lo > 0 && times[lo - 1] == t {
            lo -= 1;
        }
        for k in lo..hi {
            let z = sorted.covariate_row(k);
            let w = dot(beta, z).exp();
            s0 += w;
            for a in 0..p {
                s1[a] += w * z[a];
                for b in 0..p {
                    s2[a * p + b] += w * z[a] * z[b];
                }
            }
        }
        for k in lo..hi {
            if events[k] {
                on_event(k, s0, &s1, &s2);
            }
        }
        hi = lo;
    }
}

/// Cox log partial likelihood
/// `sum_{i: events} [beta' Z_i - log(n Phi_n(T_i; beta))]`.
pub fn log_partial_likelihood(sorted: &SortedSample, beta: &[f64]) -> Result<f64> {
    check_dim(sorted, beta)?;
    if sorted.num_events() == 0 {
        return Err(Error::NoEvents);
    }
    let mut lpl = 0.0;
    risk_sweep(sorted, beta, |k, s0, _, _| {
        lpl += dot(beta, sorted.covariate_row(k)) - s0.ln();
    });
    Ok(lpl)
}

/// Score vector and observed information matrix of the log partial
/// likelihood at `beta`.
pub fn score_and_information(sorted: &SortedSample, beta: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    check_dim(sorted, beta)?;
    if sorted.num_events() == 0 {
        return Err(Error::NoEvents);
    }
    let p = beta.len();
    let mut score = vec![0.0; p];
    let mut info = vec![0.0; p * p];
    risk_sweep(sorted, beta, |k, s0, s1, s2| {
        let z = sorted.covariate_row(k);
        for a in 0..p {
            let mean_a = s1[a] / s0;
            score[a] += z[a] - mean_a;
            for b in 0..p {
                info[a * p + b] += s2[a * p + b] / s0 - mean_a * s1[b] / s0;
            }
        }
    });
    Ok((score, info))
}

/// Maximize the partial likelihood by damped Newton iteration with
/// step-halving. The accepted log partial likelihood never decreases.
pub fn fit_beta(sorted: &SortedSample, options: &FitOptions) -> Result<CoxFit> {
    let p = sorted.num_covariates();
    if p == 0 {
        return Err(Error::InvalidInput(
            "p >= 1 required: the sample has no covariates".into(),
        ));
    }
    if sorted.num_events() == 0 {
        return Err(Error::NoEvents);
    }
    let mut beta = match &options.initial_beta {
        Some(b) => {
            check_dim(sorted, b)?;
            b.clone()
        }
        None => vec![0.0; p],
    };
    let mut lpl = log_partial_likelihood(sorted, &beta)?;
    let mut iterations = 0;

    loop {
        let (score, info) = score_and_information(sorted, &beta)?;
        let gradient_norm = score.iter().fold(0.0_f64, |m, g| m.max(g.abs()));
        let solved = solve_dense(&info, &score, p);

        if gradient_norm <= options.tolerance {
            if solved.is_none() {
                return Err(Error::SingularInformation(
                    "flat partial likelihood (constant or collinear covariates)".into(),
                ));
            }
            return Ok(CoxFit {
                beta,
                log_partial_likelihood: lpl,
                iterations,
                gradient_norm,
                information: info,
                converged: true,
            });
        }
        if iterations >= options.max_iterations {
            return Ok(CoxFit {
                beta,
                log_partial_likelihood: lpl,
                iterations,
                gradient_norm,
                information: info,
                converged: false,
            });
        }
        let delta = solved.ok_or_else(|| {
            Error::SingularInformation(
                "flat partial likelihood (constant or collinear covariates)".into(),
            )
        })?;

        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let candidate: Vec<f64> = beta.iter().zip(&delta).map(|(b, d)| b + step * d).collect();
            if let Ok(next) = log_partial_likelihood(sorted, &candidate) {
                // accept up to rounding noise: near the maximum the true
                // improvement is below f64 resolution of the sum
                if next.is_finite() && next >= lpl - 1e-11 * (1.0 + lpl.abs()) {
                    beta = candidate;
                    lpl = next.max(lpl);
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        iterations += 1;
        if !accepted {
            let (score, info) = score_and_information(sorted, &beta)?;
            let gradient_norm = score.iter().fold(0.0_f64, |m, g| m.max(g.abs()));
            return Ok(CoxFit {
                beta,
                log_partial_likelihood: lpl,
                iterations,
                gradient_norm,
                information: info,
                converged: false,
            });
        }
    }
}
