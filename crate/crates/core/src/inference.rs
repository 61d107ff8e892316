//! Pointwise confidence intervals for the baseline hazard: undersmoothed
//! asymptotic plug-in intervals, the Chernoff-quantile interval for the
//! unsmoothed Grenander estimator, and smooth-bootstrap percentile intervals.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cox::{fit_beta, FitOptions};
use crate::error::{Error, Result};
use crate::isotonic::{breslow, grenander, mle_baseline, MonotoneHazard};
use crate::numeric::normal_quantile;
use crate::sample::{sort_sample, CensoringSurvival, SortedSample, StepFunction, SurvivalSample};
use crate::seeds::stream_rng;
use crate::smooth::{smooth_monotone, BoundaryPolicy, KernelFamily, KernelSpec};

/// The only Chernoff quantile on file; other levels are rejected rather than
/// approximated.
const CHERNOFF_QUANTILES: &[(f64, f64)] = &[(0.975, 0.998181)];

// ── Interval result ─────────────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CiMethod {
    #[serde(rename = "asymptotic-SG")]
    AsymptoticSg,
    #[serde(rename = "asymptotic-SMLE")]
    AsymptoticSmle,
    #[serde(rename = "asymptotic-kernel")]
    AsymptoticKernel,
    #[serde(rename = "grenander-chernoff")]
    GrenanderChernoff,
    #[serde(rename = "bootstrap-SG")]
    BootstrapSg,
    #[serde(rename = "bootstrap-SMLE")]
    BootstrapSmle,
}

impl CiMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            CiMethod::AsymptoticSg => "asymptotic-SG",
            CiMethod::AsymptoticSmle => "asymptotic-SMLE",
            CiMethod::AsymptoticKernel => "asymptotic-kernel",
            CiMethod::GrenanderChernoff => "grenander-chernoff",
            CiMethod::BootstrapSg => "bootstrap-SG",
            CiMethod::BootstrapSmle => "bootstrap-SMLE",
        }
    }
}

impl std::fmt::Display for CiMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Method metadata carried alongside an interval.
#[derive(Debug, Clone, Default, Serialize)]
pub struct CiMeta {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bandwidth_resample: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bootstrap_samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failures: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Lower endpoint before clamping at zero; interval lengths are reported
    /// from this value so clamping does not shorten them.
    pub lower_unclamped: f64,
}

/// A pointwise confidence interval with its provenance.
#[derive(Debug, Clone, Serialize)]
pub struct IntervalResult {
    pub x0: f64,
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    pub method: CiMethod,
    pub level: f64,
    pub meta: CiMeta,
}

impl IntervalResult {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("interval serializes")
    }

    /// Interval length before the zero clamp.
    pub fn unclamped_length(&self) -> f64 {
        self.upper - self.meta.lower_unclamped
    }

    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }
}

fn build_interval(
    x0: f64,
    estimate: f64,
    halfwidth: f64,
    method: CiMethod,
    level: f64,
    meta_base: CiMeta,
) -> IntervalResult {
    let lower_unclamped = estimate - halfwidth;
    IntervalResult {
        x0,
        estimate,
        lower: lower_unclamped.max(0.0),
        upper: estimate + halfwidth,
        method,
        level,
        meta: CiMeta {
            lower_unclamped,
            ..meta_base
        },
    }
}

// ── Asymptotic intervals ────────────────────────────────────────────────────

/// Undersmoothed asymptotic interval around a smoothed estimate produced with
/// bandwidth `b = c n^{-1/4}`:
/// `estimate -+ n^{-3/8} sigma_hat z_{1-alpha/2}` with
/// `sigma_hat = sqrt(estimate int k^2 / (c Phi_n(x0)))`.
#[allow(clippy::too_many_arguments)]
pub fn asymptotic_ci(
    x0: f64,
    estimate: f64,
    phi_at_x0: f64,
    n: usize,
    c: f64,
    alpha: f64,
    spec: &KernelSpec,
    method: CiMethod,
) -> Result<IntervalResult> {
    if phi_at_x0 <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "Phi_n(x0) must be positive, got {phi_at_x0}"
        )));
    }
    if estimate < 0.0 {
        return Err(Error::InvalidInput(format!(
            "estimate must be nonnegative, got {estimate}"
        )));
    }
    if c.is_nan() || c <= 0.0 || n == 0 || alpha <= 0.0 || alpha > 1.0 {
        return Err(Error::InvalidInput(
            "need c > 0, n >= 1 and alpha in (0, 1]".into(),
        ));
    }
    let sigma = (estimate * spec.l2_norm_sq() / (c * phi_at_x0)).sqrt();
    let halfwidth = (n as f64).powf(-0.375) * sigma * normal_quantile(1.0 - alpha / 2.0);
    let meta = CiMeta {
        bandwidth: Some(spec.bandwidth()),
        c: Some(c),
        ..CiMeta::default()
    };
    Ok(build_interval(
        x0,
        estimate,
        halfwidth,
        method,
        1.0 - alpha,
        meta,
    ))
}

/// Local slope of the step hazard at `x0`, used as the derivative plug-in
/// for the Chernoff interval: the level increase across the segment of the
/// estimator containing `x0`, divided by the segment length. Between two
/// successive jump locations `tau_i < x0 <= tau_{i+1}` this is
/// `(hazard(tau_{i+1}) - hazard(tau_i)) / (tau_{i+1} - tau_i)`; over the
/// first segment (no jump yet crossed) the slope is 0.
pub fn grenander_slope_at(hazard: &MonotoneHazard, sorted: &SortedSample, x0: f64) -> Result<f64> {
    if !(sorted.first_time() < x0 && x0 < sorted.last_time()) {
        return Err(Error::InvalidInput(format!(
            "x0 = {x0} outside the open observation range ({}, {})",
            sorted.first_time(),
            sorted.last_time()
        )));
    }
    let breakpoints = hazard.breakpoints();
    let levels = hazard.levels();
    let k = breakpoints
        .partition_point(|&bp| bp < x0)
        .min(breakpoints.len() - 1);
    if k == 0 {
        // x0 sits in the first segment: no jump crossed yet
        return Ok(0.0);
    }
    Ok((levels[k] - levels[k - 1]) / (breakpoints[k] - breakpoints[k - 1]))
}

/// Chernoff-quantile interval for the unsmoothed Grenander estimator:
/// `value -+ n^{-1/3} (4 value slope / Phi_n)^{1/3} q_{1-alpha/2}(Z)`.
pub fn grenander_ci(
    x0: f64,
    hazard_value: f64,
    slope: f64,
    phi_at_x0: f64,
    n: usize,
    alpha: f64,
) -> Result<IntervalResult> {
    if phi_at_x0 <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "Phi_n(x0) must be positive, got {phi_at_x0}"
        )));
    }
    if hazard_value < 0.0 || slope < 0.0 {
        return Err(Error::InvalidInput(
            "hazard value and slope must be nonnegative".into(),
        ));
    }
    let p = 1.0 - alpha / 2.0;
    let quantile = CHERNOFF_QUANTILES
        .iter()
        .find(|(level, _)| (level - p).abs() < 1e-12)
        .map(|&(_, q)| q)
        .ok_or(Error::UnsupportedAlpha { alpha })?;
    let c_n = (4.0 * hazard_value * slope / phi_at_x0).powf(1.0 / 3.0);
    let halfwidth = (n as f64).powf(-1.0 / 3.0) * c_n * quantile;
    Ok(build_interval(
        x0,
        hazard_value,
        halfwidth,
        CiMethod::GrenanderChernoff,
        1.0 - alpha,
        CiMeta::default(),
    ))
}

// ── Smooth bootstrap ────────────────────────────────────────────────────────

/// Invert the smooth conditional cdf
/// `F(x | z) = 1 - exp(-Lambda_s(x) e^{beta' z})` at `u`: the solution of
/// `Lambda_s(x) = -log(1-u) e^{-beta' z}` on `[0, tau]` by bisection to
/// absolute tolerance 1e-10 in `x`. Returns `None` when the target exceeds
/// `Lambda_s(tau)` (an event beyond the observable horizon).
pub fn invert_conditional_cdf(
    smoothed_cumhaz: impl Fn(f64) -> f64,
    tau: f64,
    z: &[f64],
    beta: &[f64],
    u: f64,
) -> Result<Option<f64>> {
    if !(0.0 < u && u < 1.0) {
        return Err(Error::InvalidInput(format!("u = {u} outside (0, 1)")));
    }
    if beta.len() != z.len() {
        return Err(Error::InvalidInput(format!(
            "beta has dimension {}, covariate has {}",
            beta.len(),
            z.len()
        )));
    }
    let linpred: f64 = beta.iter().zip(z).map(|(b, zi)| b * zi).sum();
    let target = -(1.0 - u).ln() * (-linpred).exp();
    if target > smoothed_cumhaz(tau) {
        return Ok(None);
    }
    let mut lo = 0.0;
    let mut hi = tau;
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if smoothed_cumhaz(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// Number of cells in the tabulated smoothed cumulative hazard the bootstrap
/// inverts against.
const INVERSION_GRID_CELLS: usize = 2048;

fn draw_bootstrap<R: Rng>(
    beta: &[f64],
    cumhaz_s: &impl Fn(f64) -> f64,
    horizon: f64,
    censoring: &CensoringSurvival,
    original: &SurvivalSample,
    rng: &mut R,
) -> Result<SurvivalSample> {
    let n = original.len();
    let p = original.num_covariates();
    let mut times = Vec::with_capacity(n);
    let mut events = Vec::with_capacity(n);
    let mut covariates = Vec::with_capacity(n * p);
    for i in 0..n {
        let z = original.covariates(i);
        let u_event = loop {
            let u: f64 = rng.random();
            if u > 0.0 {
                break u;
            }
        };
        let u_cens: f64 = rng.random();
        let x_star = invert_conditional_cdf(cumhaz_s, horizon, z, beta, u_event)?;
        let c_star = censoring.sample_time(u_cens);
        let (t, d) = match x_star {
            Some(x) => (x.min(c_star), x <= c_star),
            None => (c_star, false),
        };
        times.push(t);
        events.push(d);
        covariates.extend_from_slice(z);
    }
    SurvivalSample::from_columns(times, events, covariates, p)
}

/// Draw one bootstrap sample: covariates stay fixed, event times come from
/// the smooth conditional cdf built on the smoothed Breslow estimator
/// (tabulated on a fine grid over `[0, T_(n)]`), and censoring times are
/// drawn from the Kaplan-Meier censoring atoms. An event beyond the horizon
/// becomes a censored record at the drawn censoring time.
///
/// Per record, one uniform is consumed for the event time and one for the
/// censoring time, so the output is a pure function of the rng stream.
pub fn smooth_bootstrap_sample<R: Rng>(
    beta: &[f64],
    cumhaz: &StepFunction,
    censoring: &CensoringSurvival,
    spec: &KernelSpec,
    original: &SurvivalSample,
    rng: &mut R,
) -> Result<SurvivalSample> {
    let horizon = original.times().iter().fold(0.0_f64, |acc, &t| acc.max(t));
    let grid =
        crate::smooth::SmoothedCumulativeHazard::new(cumhaz, spec, horizon, INVERSION_GRID_CELLS);
    draw_bootstrap(beta, &|x| grid.eval(x), horizon, censoring, original, rng)
}

/// Empirical percentile interval: linear interpolation between order
/// statistics at rank `(B - 1) q + 1`.
pub fn percentile_ci(estimates: &[f64], alpha: f64) -> Result<(f64, f64)> {
    if estimates.is_empty() {
        return Err(Error::InvalidInput(
            "no estimates to take quantiles of".into(),
        ));
    }
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(Error::InvalidInput(format!(
            "alpha = {alpha} outside (0, 1)"
        )));
    }
    let mut sorted = estimates.to_vec();
    sorted.sort_by(f64::total_cmp);
    let quantile = |q: f64| -> f64 {
        let h = (sorted.len() - 1) as f64 * q;
        let i = h.floor() as usize;
        let frac = h - i as f64;
        if i + 1 < sorted.len() {
            sorted[i] + frac * (sorted[i + 1] - sorted[i])
        } else {
            sorted[sorted.len() - 1]
        }
    };
    Ok((quantile(alpha / 2.0), quantile(1.0 - alpha / 2.0)))
}

/// Which smoothed estimator a bootstrap interval targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BootstrapMethod {
    Sg,
    Smle,
}

/// Configuration of a smooth-bootstrap run.
#[derive(Debug, Clone)]
pub struct BootstrapPlan {
    /// Number of bootstrap samples B.
    pub samples: usize,
    /// Bandwidth of the smoothed Breslow estimator the event times are drawn
    /// from; `None` means `n^{-1/5}`.
    pub bandwidth_resample: Option<f64>,
    /// Bandwidth used to re-estimate the hazard on each bootstrap sample;
    /// `None` means `n^{-1/5}`.
    pub bandwidth_estimate: Option<f64>,
    pub kernel: KernelFamily,
    pub boundary: BoundaryPolicy,
    pub alpha: f64,
    pub seed: u64,
}

impl BootstrapPlan {
    pub fn new(seed: u64) -> Self {
        Self {
            samples: 1000,
            bandwidth_resample: None,
            bandwidth_estimate: None,
            kernel: KernelFamily::Triweight,
            boundary: BoundaryPolicy::LinearCorrection,
            alpha: 0.05,
            seed,
        }
    }
}

fn smoothed_estimate(
    sorted: &SortedSample,
    beta: &[f64],
    method: BootstrapMethod,
    spec: &KernelSpec,
    x0: f64,
) -> Result<f64> {
    let hazard = match method {
        BootstrapMethod::Sg => grenander(sorted, beta)?,
        BootstrapMethod::Smle => mle_baseline(sorted, beta)?,
    };
    smooth_monotone(&hazard, spec, x0)
}

fn fit_or_empty(sorted: &SortedSample) -> Result<Vec<f64>> {
    if sorted.num_covariates() == 0 {
        return Ok(Vec::new());
    }
    let fit = fit_beta(sorted, &FitOptions::default())?;
    if !fit.converged {
        return Err(Error::InvalidInput(format!(
            "partial likelihood fit did not converge (gradient norm {})",
            fit.gradient_norm
        )));
    }
    Ok(fit.beta)
}

/// Percentile bootstrap interval for a smoothed isotonic estimator at `x0`.
///
/// The regression coefficients and the full estimator pipeline are refit on
/// every bootstrap sample. Replicate `j` draws from stream `j + 1` of the
/// plan seed, so the interval is a pure function of `(data, plan)`, invariant
/// under parallel scheduling. Errors if more than 5% of replicates fail.
pub fn bootstrap_ci(
    sorted: &SortedSample,
    method: BootstrapMethod,
    x0: f64,
    plan: &BootstrapPlan,
) -> Result<IntervalResult> {
    if plan.samples == 0 {
        return Err(Error::InvalidInput(
            "need at least one bootstrap sample".into(),
        ));
    }
    let n = sorted.len();
    let b_res = plan
        .bandwidth_resample
        .unwrap_or_else(|| (n as f64).powf(-0.2));
    let b_est = plan
        .bandwidth_estimate
        .unwrap_or_else(|| (n as f64).powf(-0.2));
    let spec_res = KernelSpec::new(plan.kernel.clone(), b_res, plan.boundary)?;
    let spec_est = KernelSpec::new(plan.kernel.clone(), b_est, plan.boundary)?;

    let beta = fit_or_empty(sorted)?;
    let cumhaz = breslow(sorted, &beta)?;
    let censoring = crate::sample::kaplan_meier_censoring(sorted);
    let estimate = smoothed_estimate(sorted, &beta, method, &spec_est, x0)?;
    let horizon = sorted.last_time();
    let grid = crate::smooth::SmoothedCumulativeHazard::new(
        &cumhaz,
        &spec_res,
        horizon,
        INVERSION_GRID_CELLS,
    );

    let replicates: Vec<std::result::Result<f64, String>> = (0..plan.samples)
        .into_par_iter()
        .map(|j| {
            let mut rng = stream_rng(plan.seed, j as u64 + 1);
            let mut run = || -> Result<f64> {
                let resampled = draw_bootstrap(
                    &beta,
                    &|x| grid.eval(x),
                    horizon,
                    &censoring,
                    sorted.base(),
                    &mut rng,
                )?;
                let sorted_star = sort_sample(resampled);
                let beta_star = fit_or_empty(&sorted_star)?;
                smoothed_estimate(&sorted_star, &beta_star, method, &spec_est, x0)
            };
            run().map_err(|e| e.to_string())
        })
        .collect();

    let failures = replicates.iter().filter(|r| r.is_err()).count();
    if failures * 20 > plan.samples {
        let first_failure = replicates
            .iter()
            .find_map(|r| r.as_ref().err().cloned())
            .unwrap_or_default();
        return Err(Error::TooManyFailures {
            failed: failures,
            total: plan.samples,
            first_failure,
        });
    }
    let values: Vec<f64> = replicates.into_iter().filter_map(|r| r.ok()).collect();
    let (lower, upper) = percentile_ci(&values, plan.alpha)?;

    let method_tag = match method {
        BootstrapMethod::Sg => CiMethod::BootstrapSg,
        BootstrapMethod::Smle => CiMethod::BootstrapSmle,
    };
    Ok(IntervalResult {
        x0,
        estimate,
        lower,
        upper,
        method: method_tag,
        level: 1.0 - plan.alpha,
        meta: CiMeta {
            bandwidth: Some(b_est),
            bandwidth_resample: Some(b_res),
            bootstrap_samples: Some(plan.samples),
            failures: Some(failures),
            seed: Some(plan.seed),
            lower_unclamped: lower,
            ..CiMeta::default()
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isotonic::{gcm_left_slopes, CumSumDiagram};
    use crate::sample::{kaplan_meier_censoring, SurvivalSample};
    use crate::smooth::smoothed_breslow;

    fn triweight(b: f64) -> KernelSpec {
        KernelSpec::triweight(b).unwrap()
    }

    #[test]
    fn asymptotic_ci_arithmetic_example() {
        let spec = triweight(0.2);
        let ci =
            asymptotic_ci(0.5, 1.0, 0.5, 625, 1.0, 0.05, &spec, CiMethod::AsymptoticSg).unwrap();
        let sigma = (2.0 * 350.0 / 429.0_f64).sqrt();
        assert!((sigma - 1.27739).abs() < 1e-5);
        let halfwidth = ci.upper - ci.estimate;
        assert!((halfwidth - 0.2239).abs() < 5e-4, "halfwidth {halfwidth}");
        assert_eq!(ci.level, 0.95);
        assert!((ci.meta.lower_unclamped - (1.0 - halfwidth)).abs() < 1e-12);
    }

    #[test]
    fn asymptotic_ci_degenerate_cases() {
        let spec = triweight(0.2);
        let ci =
            asymptotic_ci(0.5, 0.0, 0.5, 100, 1.0, 0.05, &spec, CiMethod::AsymptoticSg).unwrap();
        assert_eq!((ci.lower, ci.upper), (0.0, 0.0));
        let ci =
            asymptotic_ci(0.5, 1.0, 0.5, 100, 1.0, 1.0, &spec, CiMethod::AsymptoticSg).unwrap();
        assert_eq!(ci.lower, ci.upper);
        assert!(
            asymptotic_ci(0.5, 1.0, 0.0, 100, 1.0, 0.05, &spec, CiMethod::AsymptoticSg).is_err()
        );
    }

    #[test]
    fn asymptotic_ci_width_scales_as_n_to_minus_three_eighths() {
        let spec = triweight(0.2);
        let w = |n: usize| {
            let ci =
                asymptotic_ci(0.5, 1.3, 0.4, n, 1.0, 0.05, &spec, CiMethod::AsymptoticSg).unwrap();
            ci.unclamped_length()
        };
        let (n1, n2) = (400, 2500);
        let ratio = w(n2) / w(n1);
        let want = (n1 as f64 / n2 as f64).powf(0.375);
        assert!((ratio - want).abs() < 1e-12);
    }

    fn hazard_of(points: Vec<(f64, f64)>) -> MonotoneHazard {
        gcm_left_slopes(&CumSumDiagram::new(points).unwrap()).unwrap()
    }

    fn sorted_plain(records: &[(f64, bool)]) -> SortedSample {
        sort_sample(
            SurvivalSample::from_records(records.iter().map(|&(t, d)| (t, d, vec![])).collect())
                .unwrap(),
        )
    }

    #[test]
    fn grenander_slope_examples() {
        let sorted = sorted_plain(&[(0.5, true), (1.0, true), (2.0, true)]);
        // levels 1 on (0,1], 2 on (1,2]
        let hazard = hazard_of(vec![(0.0, 0.0), (1.0, 1.0), (2.0, 3.0)]);
        let slope = grenander_slope_at(&hazard, &sorted, 1.5).unwrap();
        assert!((slope - 1.0).abs() < 1e-12);

        // constant across the containing interval: slope 0
        let flat = hazard_of(vec![(0.0, 0.0), (2.0, 2.0)]);
        assert_eq!(grenander_slope_at(&flat, &sorted, 1.5).unwrap(), 0.0);

        // locality: data outside the containing interval does not matter
        let sorted2 = sorted_plain(&[(0.2, true), (0.5, true), (1.0, true), (2.0, true)]);
        let slope2 = grenander_slope_at(&hazard, &sorted2, 1.5).unwrap();
        assert_eq!(slope, slope2);

        assert!(grenander_slope_at(&hazard, &sorted, 0.4).is_err());
        assert!(grenander_slope_at(&hazard, &sorted, 2.0).is_err());
    }

    #[test]
    fn grenander_ci_arithmetic() {
        let ci = grenander_ci(0.5, 1.0, 1.0, 0.5, 1000, 0.05).unwrap();
        let halfwidth = ci.upper - ci.estimate;
        assert!((halfwidth - 0.19964).abs() < 1e-4, "halfwidth {halfwidth}");

        let ci = grenander_ci(0.5, 1.0, 0.0, 0.5, 1000, 0.05).unwrap();
        assert_eq!(ci.lower, ci.upper);

        assert!(matches!(
            grenander_ci(0.5, 1.0, 1.0, 0.5, 1000, 0.1),
            Err(Error::UnsupportedAlpha { .. })
        ));
        assert!(grenander_ci(0.5, 1.0, 1.0, 0.0, 1000, 0.05).is_err());
    }

    #[test]
    fn invert_conditional_cdf_identity_and_range() {
        // Lambda(x) = x on [0, 10]
        let lin = |x: f64| x;
        let x = invert_conditional_cdf(lin, 10.0, &[], &[], 1.0 - (-1.0_f64).exp())
            .unwrap()
            .unwrap();
        assert!((x - 1.0).abs() < 1e-9);
        // target beyond the horizon
        let u_huge = 1.0 - (-20.0_f64).exp();
        assert!(
            invert_conditional_cdf(|x| x.min(5.0), 10.0, &[], &[], u_huge)
                .unwrap()
                .is_none()
        );
        assert!(invert_conditional_cdf(lin, 10.0, &[], &[], 0.0).is_err());
        assert!(invert_conditional_cdf(lin, 10.0, &[], &[], 1.0).is_err());
    }

    #[test]
    fn invert_conditional_cdf_round_trip() {
        use rand::Rng;
        let mut rng = crate::seeds::stream_rng(79, 1);
        for _ in 0..20 {
            // random monotone cumulative hazard: smoothed random staircase
            let mut knots = Vec::new();
            let mut values = Vec::new();
            let (mut t, mut v) = (0.0, 0.0);
            for _ in 0..rng.random_range(3..25) {
                t += rng.random::<f64>() * 0.4 + 0.02;
                v += rng.random::<f64>() * 0.8;
                knots.push(t);
                values.push(v);
            }
            let tau = t + 0.5;
            let cumhaz = StepFunction::new(knots, values, 0.0).unwrap();
            let spec = triweight(0.15);
            let f = |x: f64| smoothed_breslow(&cumhaz, &spec, x);
            let beta = [rng.random::<f64>() - 0.5];
            let z = [rng.random::<f64>()];
            let linpred = beta[0] * z[0];
            // u below the cdf value at 0 cannot be attained: the smoothed
            // cumulative hazard is already positive there
            let floor = 1.0 - (-f(0.0) * linpred.exp()).exp();
            for g in 1..10 {
                let u = g as f64 / 10.0;
                if u <= floor {
                    continue;
                }
                if let Some(x) = invert_conditional_cdf(f, tau, &z, &beta, u).unwrap() {
                    let back = 1.0 - (-f(x) * linpred.exp()).exp();
                    assert!((back - u).abs() < 1e-8, "round trip {back} vs {u}");
                }
            }
        }
    }

    #[test]
    fn percentile_ci_hand_values() {
        let (lo, hi) = percentile_ci(&[1.0, 2.0, 3.0, 4.0, 5.0], 0.2).unwrap();
        assert!((lo - 1.4).abs() < 1e-12);
        assert!((hi - 4.6).abs() < 1e-12);

        let (lo, hi) = percentile_ci(&[7.0, 7.0, 7.0], 0.1).unwrap();
        assert_eq!((lo, hi), (7.0, 7.0));

        // permutation invariance
        let (lo2, hi2) = percentile_ci(&[5.0, 3.0, 1.0, 4.0, 2.0], 0.2).unwrap();
        assert_eq!((lo2, hi2), (1.4, 4.6));

        // alpha -> 1: both endpoints approach the median
        let (lo, hi) = percentile_ci(&[1.0, 2.0, 3.0, 4.0, 5.0], 0.999).unwrap();
        assert!((lo - 3.0).abs() < 0.01);
        assert!((hi - 3.0).abs() < 0.01);

        assert!(percentile_ci(&[], 0.2).is_err());
    }

    #[test]
    fn percentile_ci_monotone_in_alpha() {
        use rand::Rng;
        let mut rng = crate::seeds::stream_rng(83, 1);
        let values: Vec<f64> = (0..40).map(|_| rng.random::<f64>() * 3.0).collect();
        let mut prev = (f64::NEG_INFINITY, f64::INFINITY);
        for g in 1..10 {
            let alpha = g as f64 / 10.0;
            let (lo, hi) = percentile_ci(&values, alpha).unwrap();
            assert!(lo >= prev.0 - 1e-12 && hi <= prev.1 + 1e-12);
            prev = (lo, hi);
        }
    }

    #[test]
    fn bootstrap_sample_reproducible_and_all_events_under_late_censoring() {
        // cumulative hazard reaching 20 by t=5: events virtually never pass
        // the horizon, censoring atom sits at the horizon
        let m = 500;
        let knots: Vec<f64> = (1..=m).map(|i| i as f64 / m as f64 * 5.0).collect();
        let values: Vec<f64> = knots.iter().map(|&t| 4.0 * t).collect();
        let cumhaz = StepFunction::new(knots, values, 0.0).unwrap();
        let spec = triweight(0.05);
        let original = SurvivalSample::from_records(
            (0..50)
                .map(|i| (5.0 * (i as f64 + 1.0) / 50.0, true, vec![]))
                .collect(),
        )
        .unwrap();
        let censoring = kaplan_meier_censoring(&sort_sample(original.clone()));
        assert_eq!(censoring.atoms(), &[(5.0, 1.0)]);

        let mut rng = crate::seeds::stream_rng(87, 1);
        let s1 =
            smooth_bootstrap_sample(&[], &cumhaz, &censoring, &spec, &original, &mut rng).unwrap();
        assert!(s1.events().iter().all(|&d| d));

        let mut rng = crate::seeds::stream_rng(87, 1);
        let s2 =
            smooth_bootstrap_sample(&[], &cumhaz, &censoring, &spec, &original, &mut rng).unwrap();
        assert_eq!(s1, s2);

        let mut rng = crate::seeds::stream_rng(87, 2);
        let s3 =
            smooth_bootstrap_sample(&[], &cumhaz, &censoring, &spec, &original, &mut rng).unwrap();
        assert_ne!(s1, s3);
    }

    #[test]
    fn bootstrap_sample_ks_check_against_min_exponential_censoring() {
        // beta = 0 and Lambda_s ~ identity: T* should follow min(Exp(1), C*)
        let m = 4000;
        let knots: Vec<f64> = (1..=m).map(|i| i as f64 / m as f64 * 10.0).collect();
        let values = knots.clone();
        let cumhaz = StepFunction::new(knots, values, 0.0).unwrap();
        let spec = triweight(0.005);
        let n = 10_000;
        let original = SurvivalSample::from_records(
            (0..n)
                .map(|i| (10.0 * (i as f64 + 1.0) / n as f64, true, vec![]))
                .collect(),
        )
        .unwrap();
        // single censoring atom at 0.8
        let censor_base =
            SurvivalSample::from_records(vec![(0.8, false, vec![]), (0.8, false, vec![])]).unwrap();
        let censoring = kaplan_meier_censoring(&sort_sample(censor_base));
        assert_eq!(censoring.atoms(), &[(0.8, 1.0)]);

        let mut rng = crate::seeds::stream_rng(91, 1);
        let s =
            smooth_bootstrap_sample(&[], &cumhaz, &censoring, &spec, &original, &mut rng).unwrap();
        // on t < 0.8 the cdf of T* is 1 - exp(-t)
        let mut draws: Vec<f64> = s.times().to_vec();
        draws.sort_by(f64::total_cmp);
        let mut d_max: f64 = 0.0;
        for g in 1..80 {
            let t = 0.8 * g as f64 / 80.0;
            let emp = draws.partition_point(|&x| x <= t) as f64 / n as f64;
            let want = 1.0 - (-t).exp();
            d_max = d_max.max((emp - want).abs());
        }
        assert!(d_max < 0.02, "KS distance {d_max}");
    }

    fn weibull_like_sample(n: usize, seed: u64) -> SortedSample {
        use rand::Rng;
        let mut rng = crate::seeds::stream_rng(seed, 1);
        let records: Vec<(f64, bool, Vec<f64>)> = (0..n)
            .map(|_| {
                let z = rng.random::<f64>();
                let u: f64 = rng.random();
                let x = (-(1.0 - u).ln() * (-0.5 * z).exp()).powf(2.0 / 3.0);
                let c = rng.random::<f64>();
                (x.min(c), x <= c, vec![z])
            })
            .collect();
        sort_sample(SurvivalSample::from_records(records).unwrap())
    }

    #[test]
    fn bootstrap_ci_single_replicate_collapses() {
        let sorted = weibull_like_sample(60, 95);
        let mut plan = BootstrapPlan::new(5);
        plan.samples = 1;
        plan.bandwidth_resample = Some(0.2);
        plan.bandwidth_estimate = Some(0.2);
        let ci = bootstrap_ci(&sorted, BootstrapMethod::Sg, 0.5, &plan).unwrap();
        assert_eq!(ci.lower, ci.upper);
        assert_eq!(ci.meta.bootstrap_samples, Some(1));
    }

    #[test]
    fn bootstrap_ci_deterministic_json() {
        let sorted = weibull_like_sample(80, 97);
        let mut plan = BootstrapPlan::new(42);
        plan.samples = 50;
        plan.bandwidth_resample = Some(0.2);
        plan.bandwidth_estimate = Some(0.2);
        let a = bootstrap_ci(&sorted, BootstrapMethod::Smle, 0.5, &plan).unwrap();
        let b = bootstrap_ci(&sorted, BootstrapMethod::Smle, 0.5, &plan).unwrap();
        assert_eq!(
            serde_json::to_string(&a.to_json()).unwrap(),
            serde_json::to_string(&b.to_json()).unwrap()
        );
        assert!(a.lower <= a.estimate && a.estimate <= a.upper);
    }

    #[test]
    fn interval_json_shape() {
        let spec = triweight(0.2);
        let ci = asymptotic_ci(
            0.5,
            1.0,
            0.5,
            625,
            1.0,
            0.05,
            &spec,
            CiMethod::AsymptoticSmle,
        )
        .unwrap();
        let json = ci.to_json();
        assert_eq!(json["method"], "asymptotic-SMLE");
        assert_eq!(json["x0"], 0.5);
        assert!(json["meta"]["lower_unclamped"].is_number());
        assert_eq!(json["level"], 0.95);
    }
}
