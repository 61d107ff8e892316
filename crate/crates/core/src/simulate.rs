//! Scenario generators and Monte Carlo studies: coverage and average length
//! of the pointwise confidence intervals, and empirical checks of the
//! limiting law of the smoothed estimators.
//!
//! Everything downstream of a master seed is bit-reproducible, including
//! parallel runs: replicate `i` draws from its own seed stream and results
//! are reduced in replicate order.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cox::{fit_beta, phi_n, FitOptions};
use crate::error::{Error, Result};
use crate::inference::{
    asymptotic_ci, bootstrap_ci, grenander_ci, grenander_slope_at, BootstrapMethod, BootstrapPlan,
    CiMethod, IntervalResult,
};
use crate::isotonic::{breslow, grenander, mle_baseline};
use crate::numeric::adaptive_simpson;
use crate::sample::{sort_sample, SortedSample, SurvivalSample};
use crate::seeds::{child_seed, stream_rng};
use crate::smooth::{
    naive_kernel_estimator, smooth_monotone, BoundaryPolicy, KernelFamily, KernelSpec,
};

// ── Scenario ────────────────────────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    Weibull { shape: f64, scale: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovariateLaw {
    Uniform01,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CensoringLaw {
    Uniform01,
}

/// A data-generating configuration: baseline event-time distribution,
/// regression coefficients, covariate and censoring laws, sample size, and
/// the evaluation point for pointwise studies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub baseline: Baseline,
    pub beta0: Vec<f64>,
    pub covariate_law: CovariateLaw,
    pub censoring_law: CensoringLaw,
    pub n: usize,
    pub x0: f64,
}

impl Scenario {
    /// Weibull(1.5, 1) baseline, Z and C uniform on (0, 1), beta0 = 0.5,
    /// evaluation point 0.5.
    pub fn weibull_uniform(n: usize) -> Self {
        Self {
            baseline: Baseline::Weibull {
                shape: 1.5,
                scale: 1.0,
            },
            beta0: vec![0.5],
            covariate_law: CovariateLaw::Uniform01,
            censoring_law: CensoringLaw::Uniform01,
            n,
            x0: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let Baseline::Weibull { shape, scale } = self.baseline;
        if !(shape > 0.0 && scale > 0.0) {
            return Err(Error::InvalidInput(
                "Weibull shape and scale must be positive".into(),
            ));
        }
        if self.n < 2 {
            return Err(Error::InvalidInput("scenario needs n >= 2".into()));
        }
        Ok(())
    }

    /// True baseline hazard `(shape/scale) (x/scale)^{shape-1}`.
    pub fn true_hazard(&self, x: f64) -> f64 {
        let Baseline::Weibull { shape, scale } = self.baseline;
        if x <= 0.0 {
            return if shape >= 1.0 { 0.0 } else { f64::INFINITY };
        }
        shape / scale * (x / scale).powf(shape - 1.0)
    }

    /// True cumulative baseline hazard `(x/scale)^shape`.
    pub fn true_cumulative_hazard(&self, x: f64) -> f64 {
        let Baseline::Weibull { shape, scale } = self.baseline;
        if x <= 0.0 {
            0.0
        } else {
            (x / scale).powf(shape)
        }
    }

    /// Second derivative of the baseline hazard, used by the bias oracle.
    pub fn true_hazard_second_derivative(&self, x: f64) -> f64 {
        let Baseline::Weibull { shape, scale } = self.baseline;
        shape * (shape - 1.0) * (shape - 2.0) / (scale * scale * scale)
            * (x / scale).powf(shape - 3.0)
    }

    /// Population risk-set functional
    /// `Phi(x; beta0) = E[1{T >= x} exp(beta0' Z)]`, evaluated by adaptive
    /// quadrature to 1e-10 for the uniform covariate / uniform censoring
    /// scenario (p <= 1), valid for `x` in `[0, 1)`.
    pub fn true_phi(&self, x: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&x) {
            return Err(Error::InvalidInput(format!(
                "population Phi is only identified for x in [0, 1), got {x}"
            )));
        }
        let cumhaz = self.true_cumulative_hazard(x);
        let censor_surv = 1.0 - x;
        match self.beta0.len() {
            0 => Ok(censor_surv * (-cumhaz).exp()),
            1 => {
                let beta = self.beta0[0];
                let value = adaptive_simpson(
                    |z| (beta * z).exp() * (-cumhaz * (beta * z).exp()).exp(),
                    0.0,
                    1.0,
                    1e-10,
                );
                Ok(censor_surv * value)
            }
            p => Err(Error::InvalidInput(format!(
                "population Phi oracle supports p <= 1, got p = {p}"
            ))),
        }
    }
}

/// Draw an i.i.d. sample: per record the covariates come first, then the
/// event-time uniform, then the censoring time.
/// `X = scale (-log(1-U) exp(-beta0' Z))^{1/shape}`, `C ~ U(0,1)`,
/// `T = min(X, C)`, `Delta = 1{X <= C}`.
pub fn generate_sample<R: Rng>(scenario: &Scenario, rng: &mut R) -> SurvivalSample {
    let Baseline::Weibull { shape, scale } = scenario.baseline;
    let p = scenario.beta0.len();
    let n = scenario.n;
    let mut times = Vec::with_capacity(n);
    let mut events = Vec::with_capacity(n);
    let mut covariates = Vec::with_capacity(n * p);
    for _ in 0..n {
        let mut linpred = 0.0;
        for &b in &scenario.beta0 {
            let z: f64 = rng.random();
            linpred += b * z;
            covariates.push(z);
        }
        let u: f64 = rng.random();
        let x = scale * (-(1.0 - u).ln() * (-linpred).exp()).powf(1.0 / shape);
        let c: f64 = rng.random();
        times.push(x.min(c));
        events.push(x <= c);
    }
    SurvivalSample::from_columns(times, events, covariates, p).expect("generated sample is valid")
}

// ── Coverage studies ────────────────────────────────────────────────────────

/// Interval configuration for a coverage study.
#[derive(Debug, Clone)]
pub struct CiConfig {
    pub alpha: f64,
    /// Undersmoothing constant for the asymptotic intervals
    /// (`b = c n^{-1/4}`); `None` takes the range of the data.
    pub c: Option<f64>,
    pub kernel: KernelFamily,
    pub boundary: BoundaryPolicy,
    /// Bootstrap sample count B.
    pub bootstrap_samples: usize,
    /// Bootstrap bandwidths; `None` means `n^{-1/5}`.
    pub bandwidth_resample: Option<f64>,
    pub bandwidth_estimate: Option<f64>,
}

impl Default for CiConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            c: None,
            kernel: KernelFamily::Triweight,
            boundary: BoundaryPolicy::LinearCorrection,
            bootstrap_samples: 1000,
            bandwidth_resample: None,
            bandwidth_estimate: None,
        }
    }
}

/// Aggregate of one Monte Carlo coverage study.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationReport {
    pub scenario: Scenario,
    pub method: String,
    pub replications: usize,
    pub average_length: f64,
    pub coverage: f64,
    pub failures: usize,
    pub seed: u64,
    /// Not serialized: wall time varies between runs while reports must be
    /// byte-identical for equal seeds.
    #[serde(skip)]
    pub wall_time_secs: f64,
}

impl SimulationReport {
    /// Table row in the `method,n,AL,CP` column layout.
    pub fn to_csv(&self) -> String {
        format!(
            "method,n,AL,CP\n{},{},{:.4},{:.4}\n",
            self.method, self.scenario.n, self.average_length, self.coverage
        )
    }
}

fn replicate_interval(
    scenario: &Scenario,
    method: CiMethod,
    config: &CiConfig,
    sorted: &SortedSample,
    replicate_seed: u64,
) -> Result<IntervalResult> {
    let n = sorted.len();
    let x0 = scenario.x0;
    let beta = if sorted.num_covariates() == 0 {
        Vec::new()
    } else {
        let fit = fit_beta(sorted, &FitOptions::default())?;
        if !fit.converged {
            return Err(Error::InvalidInput("fit did not converge".into()));
        }
        fit.beta
    };

    match method {
        CiMethod::AsymptoticSg | CiMethod::AsymptoticSmle | CiMethod::AsymptoticKernel => {
            let c = config
                .c
                .unwrap_or_else(|| sorted.last_time() - sorted.first_time());
            let bandwidth = c * (n as f64).powf(-0.25);
            let spec = KernelSpec::new(config.kernel.clone(), bandwidth, config.boundary)?;
            let estimate = match method {
                CiMethod::AsymptoticSg => smooth_monotone(&grenander(sorted, &beta)?, &spec, x0)?,
                CiMethod::AsymptoticSmle => {
                    smooth_monotone(&mle_baseline(sorted, &beta)?, &spec, x0)?
                }
                _ => naive_kernel_estimator(&breslow(sorted, &beta)?, &spec, x0),
            };
            let phi = phi_n(sorted, x0, &beta)?;
            asymptotic_ci(
                x0,
                estimate.max(0.0),
                phi,
                n,
                c,
                config.alpha,
                &spec,
                method,
            )
        }
        CiMethod::GrenanderChernoff => {
            let hazard = grenander(sorted, &beta)?;
            let value = hazard.eval(x0);
            let slope = grenander_slope_at(&hazard, sorted, x0)?;
            let phi = phi_n(sorted, x0, &beta)?;
            grenander_ci(x0, value, slope, phi, n, config.alpha)
        }
        CiMethod::BootstrapSg | CiMethod::BootstrapSmle => {
            let plan = BootstrapPlan {
                samples: config.bootstrap_samples,
                bandwidth_resample: config.bandwidth_resample,
                bandwidth_estimate: config.bandwidth_estimate,
                kernel: config.kernel.clone(),
                boundary: config.boundary,
                alpha: config.alpha,
                seed: replicate_seed,
            };
            let bm = if method == CiMethod::BootstrapSg {
                BootstrapMethod::Sg
            } else {
                BootstrapMethod::Smle
            };
            bootstrap_ci(sorted, bm, x0, &plan)
        }
    }
}

/// Run a Monte Carlo coverage study: per replication, generate data, fit,
/// build the interval, and record its length and whether it covers the true
/// hazard at `x0`. Lengths are unclamped; coverage uses the reported
/// interval. Errors when more than 5% of replications fail.
pub fn run_coverage_study(
    scenario: &Scenario,
    method: CiMethod,
    config: &CiConfig,
    replications: usize,
    seed: u64,
) -> Result<SimulationReport> {
    scenario.validate()?;
    if replications == 0 {
        return Err(Error::InvalidInput("need at least one replication".into()));
    }
    let start = std::time::Instant::now();
    let truth = scenario.true_hazard(scenario.x0);

    let outcomes: Vec<std::result::Result<(f64, bool), String>> = (0..replications)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64 + 1);
            let sorted = sort_sample(generate_sample(scenario, &mut rng));
            replicate_interval(
                scenario,
                method,
                config,
                &sorted,
                child_seed(seed, i as u64),
            )
            .map(|ci| (ci.unclamped_length(), ci.contains(truth)))
            .map_err(|e| e.to_string())
        })
        .collect();

    let failures = outcomes.iter().filter(|o| o.is_err()).count();
    if failures * 20 > replications {
        let first_failure = outcomes
            .iter()
            .find_map(|o| o.as_ref().err().cloned())
            .unwrap_or_default();
        return Err(Error::TooManyFailures {
            failed: failures,
            total: replications,
            first_failure,
        });
    }
    let ok: Vec<(f64, bool)> = outcomes.into_iter().filter_map(|o| o.ok()).collect();
    let average_length = ok.iter().map(|(l, _)| l).sum::<f64>() / ok.len() as f64;
    let coverage = ok.iter().filter(|(_, hit)| *hit).count() as f64 / ok.len() as f64;

    Ok(SimulationReport {
        scenario: scenario.clone(),
        method: method.as_str().to_string(),
        replications,
        average_length,
        coverage,
        failures,
        seed,
        wall_time_secs: start.elapsed().as_secs_f64(),
    })
}

// ── Limit-law checks ────────────────────────────────────────────────────────

/// Per-replicate values of both smoothed estimators at `x0`, using bandwidth
/// `bandwidth` for the smoothing step. Returns `(SG, SMLE)` pairs in
/// replicate order; errors when more than 5% of replications fail.
pub fn smoothed_estimates_study(
    scenario: &Scenario,
    bandwidth: f64,
    kernel: KernelFamily,
    boundary: BoundaryPolicy,
    replications: usize,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    scenario.validate()?;
    let spec = KernelSpec::new(kernel, bandwidth, boundary)?;
    let outcomes: Vec<std::result::Result<(f64, f64), String>> = (0..replications)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64 + 1);
            let sorted = sort_sample(generate_sample(scenario, &mut rng));
            let run = || -> Result<(f64, f64)> {
                let beta = if sorted.num_covariates() == 0 {
                    Vec::new()
                } else {
                    fit_beta(&sorted, &FitOptions::default())?.beta
                };
                let sg = smooth_monotone(&grenander(&sorted, &beta)?, &spec, scenario.x0)?;
                let sm = smooth_monotone(&mle_baseline(&sorted, &beta)?, &spec, scenario.x0)?;
                Ok((sg, sm))
            };
            run().map_err(|e| e.to_string())
        })
        .collect();

    let failures = outcomes.iter().filter(|o| o.is_err()).count();
    if failures * 20 > replications {
        let first_failure = outcomes
            .iter()
            .find_map(|o| o.as_ref().err().cloned())
            .unwrap_or_default();
        return Err(Error::TooManyFailures {
            failed: failures,
            total: replications,
            first_failure,
        });
    }
    Ok(outcomes.into_iter().filter_map(|o| o.ok()).collect())
}

/// Which estimator a pivot study tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PivotEstimator {
    Sg,
    Smle,
}

/// Sample moments of the pivot `n^{2/5} (estimate(x0) - lambda0(x0))`
/// alongside the limiting mean and variance implied by the kernel and the
/// population risk functional.
#[derive(Debug, Clone, Serialize)]
pub struct PivotSummary {
    pub replications: usize,
    pub sample_mean: f64,
    pub sample_variance: f64,
    pub mu_target: f64,
    pub sigma2_target: f64,
}

/// Simulate the pivot of a smoothed estimator at bandwidth `b = c n^{-1/5}`
/// and compare with the limit law: mean
/// `mu = (c^2 / 2) lambda0''(x0) int u^2 k(u) du` and variance
/// `sigma^2 = lambda0(x0) int k^2 / (c Phi(x0; beta0))`.
pub fn pivot_distribution_check(
    scenario: &Scenario,
    estimator: PivotEstimator,
    replications: usize,
    c: f64,
    seed: u64,
) -> Result<PivotSummary> {
    let n = scenario.n;
    let bandwidth = c * (n as f64).powf(-0.2);
    let pairs = smoothed_estimates_study(
        scenario,
        bandwidth,
        KernelFamily::Triweight,
        BoundaryPolicy::LinearCorrection,
        replications,
        seed,
    )?;
    let truth = scenario.true_hazard(scenario.x0);
    let rate = (n as f64).powf(0.4);
    let pivots: Vec<f64> = pairs
        .iter()
        .map(|&(sg, sm)| {
            let est = match estimator {
                PivotEstimator::Sg => sg,
                PivotEstimator::Smle => sm,
            };
            rate * (est - truth)
        })
        .collect();
    let m = pivots.len() as f64;
    let sample_mean = pivots.iter().sum::<f64>() / m;
    let sample_variance = pivots
        .iter()
        .map(|v| (v - sample_mean).powi(2))
        .sum::<f64>()
        / (m - 1.0);

    let spec = KernelSpec::triweight(bandwidth)?;
    let mu_target =
        c * c / 2.0 * scenario.true_hazard_second_derivative(scenario.x0) * spec.second_moment();
    let sigma2_target = scenario.true_hazard(scenario.x0) * spec.l2_norm_sq()
        / (c * scenario.true_phi(scenario.x0)?);

    Ok(PivotSummary {
        replications: pivots.len(),
        sample_mean,
        sample_variance,
        mu_target,
        sigma2_target,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn true_hazard_values() {
        let s = Scenario::weibull_uniform(100);
        assert!((s.true_hazard(0.5) - 1.0606601717798214).abs() < 1e-12);
        assert_eq!(s.true_hazard(0.0), 0.0);
        let mut prev = 0.0;
        for g in 1..20 {
            let x = g as f64 / 20.0;
            let h = s.true_hazard(x);
            assert!(h >= prev);
            prev = h;
        }
        // lambda0'' at 0.5 for Weibull(1.5, 1)
        let dd = s.true_hazard_second_derivative(0.5);
        assert!((dd + 0.375 * 0.5_f64.powf(-1.5)).abs() < 1e-12);
        assert!((dd + 1.0606601717798214).abs() < 1e-10);
    }

    #[test]
    fn true_phi_closed_forms() {
        let s = Scenario::weibull_uniform(100);
        // at x = 0: integral of exp(0.5 z) over (0,1) = 2 (e^{1/2} - 1)
        let phi0 = s.true_phi(0.0).unwrap();
        assert!((phi0 - 2.0 * (0.5_f64.exp() - 1.0)).abs() < 1e-9);

        // closed form for x > 0: (1-x) (e^{-L} - e^{-L e^beta}) / (beta L)
        let x = 0.5;
        let l = s.true_cumulative_hazard(x);
        let beta: f64 = 0.5;
        let want = (1.0 - x) * ((-l).exp() - (-l * beta.exp()).exp()) / (beta * l);
        assert!((s.true_phi(x).unwrap() - want).abs() < 1e-9);

        // nonincreasing on a grid
        let mut prev = f64::INFINITY;
        for g in 0..20 {
            let phi = s.true_phi(g as f64 / 20.0).unwrap();
            assert!(phi <= prev + 1e-12);
            prev = phi;
        }
        assert!(s.true_phi(1.0).is_err());
    }

    #[test]
    fn true_phi_without_covariates() {
        let mut s = Scenario::weibull_uniform(100);
        s.beta0 = vec![];
        let x = 0.3;
        let want = (1.0 - x) * (-s.true_cumulative_hazard(x)).exp();
        assert!((s.true_phi(x).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn generate_sample_inverse_cdf_formula() {
        let mut s = Scenario::weibull_uniform(4);
        s.beta0 = vec![0.0];
        let mut rng = stream_rng(3, 1);
        let sample = generate_sample(&s, &mut rng);
        // replay the draws: z, u, c per record
        let mut rng = stream_rng(3, 1);
        for i in 0..s.n {
            let _z: f64 = rng.random();
            let u: f64 = rng.random();
            let c: f64 = rng.random();
            let x = (-(1.0 - u).ln()).powf(2.0 / 3.0);
            assert_eq!(sample.time(i), x.min(c));
            assert_eq!(sample.event(i), x <= c);
        }
    }

    #[test]
    fn generate_sample_deterministic() {
        let s = Scenario::weibull_uniform(50);
        let mut r1 = stream_rng(11, 1);
        let mut r2 = stream_rng(11, 1);
        assert_eq!(generate_sample(&s, &mut r1), generate_sample(&s, &mut r2));
    }

    #[test]
    fn scenario_json_round_trip() {
        let s = Scenario::weibull_uniform(500);
        let json = serde_json::to_string(&s).unwrap();
        let back: Scenario = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn coverage_study_trivial_interval_covers() {
        let scenario = Scenario::weibull_uniform(60);
        let config = CiConfig {
            alpha: 1e-12,
            c: Some(1.0),
            ..CiConfig::default()
        };
        let report = run_coverage_study(&scenario, CiMethod::AsymptoticSg, &config, 3, 99).unwrap();
        assert_eq!(report.coverage, 1.0);
        assert_eq!(report.failures, 0);
    }

    #[test]
    fn coverage_study_reports_are_stable() {
        let scenario = Scenario::weibull_uniform(80);
        let config = CiConfig {
            c: Some(1.0),
            ..CiConfig::default()
        };
        let a = run_coverage_study(&scenario, CiMethod::AsymptoticSmle, &config, 5, 123).unwrap();
        let b = run_coverage_study(&scenario, CiMethod::AsymptoticSmle, &config, 5, 123).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        assert!(a.to_csv().starts_with("method,n,AL,CP\n"));
    }

    #[test]
    fn pivot_targets_use_exact_kernel_constants() {
        let scenario = Scenario::weibull_uniform(200);
        let spec = KernelSpec::triweight(0.5).unwrap();
        assert!((spec.second_moment() - 1.0 / 9.0).abs() < 1e-14);
        // sigma^2 target at c = 1
        let sigma2 =
            scenario.true_hazard(0.5) * spec.l2_norm_sq() / scenario.true_phi(0.5).unwrap();
        assert!(sigma2 > 0.0);
        let mu = 0.5 * scenario.true_hazard_second_derivative(0.5) * spec.second_moment();
        assert!(mu < 0.0);
    }
}
