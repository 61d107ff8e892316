//! Kernel definitions, boundary correction, and exact convolution of kernels
//! against piecewise-constant hazards and jump measures.
//!
//! Kernels are polynomials supported on `[-1, 1]`, so every integral against
//! a step function telescopes through the closed-form antiderivative; no
//! quadrature enters the estimators. Kernel arguments follow the
//! `v = (u - x) / b` orientation (`u` data location, `x` evaluation point),
//! which coincides with the usual `k_b(x - u)` weighting for the symmetric
//! built-in families and fixes the sign convention of the boundary weights:
//! at the left domain edge the effective support is `[0, 1]`.

use crate::error::{Error, Result};
use crate::isotonic::MonotoneHazard;
use crate::sample::StepFunction;

// ── Polynomials ─────────────────────────────────────────────────────────────

/// Dense polynomial, ascending coefficients.
#[derive(Debug, Clone, PartialEq)]
struct Poly(Vec<f64>);

impl Poly {
    fn eval(&self, u: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * u + c)
    }

    fn antiderivative(&self) -> Poly {
        let mut c = vec![0.0];
        c.extend(self.0.iter().enumerate().map(|(i, &a)| a / (i + 1) as f64));
        Poly(c)
    }

    fn integral(&self, a: f64, b: f64) -> f64 {
        let p = self.antiderivative();
        p.eval(b) - p.eval(a)
    }

    fn mul(&self, other: &Poly) -> Poly {
        let mut c = vec![0.0; self.0.len() + other.0.len() - 1];
        for (i, &a) in self.0.iter().enumerate() {
            for (j, &b) in other.0.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Poly(c)
    }

    /// Multiply by the monomial `u`.
    fn times_u(&self) -> Poly {
        let mut c = vec![0.0];
        c.extend_from_slice(&self.0);
        Poly(c)
    }
}

// ── Kernel specification ────────────────────────────────────────────────────

/// Kernel family; all are polynomials on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelFamily {
    /// `(35/32)(1 - u^2)^3` on `[-1, 1]`.
    Triweight,
    /// `(3/4)(1 - u^2)` on `[-1, 1]`.
    Epanechnikov,
    /// User-supplied polynomial coefficients (ascending); must integrate to 1.
    Custom(Vec<f64>),
}

/// What to do when the smoothing window sticks out of the hazard domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryPolicy {
    /// Integrate the plain kernel over the clipped window.
    None,
    /// Replace `k(v)` by `(alpha + beta v) k(v)` with the two-moment
    /// correction solved per evaluation point.
    LinearCorrection,
}

/// A kernel family with bandwidth and boundary policy. The kernel order is
/// fixed at `m = 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    family: KernelFamily,
    bandwidth: f64,
    boundary: BoundaryPolicy,
    poly: Poly,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, bandwidth: f64, boundary: BoundaryPolicy) -> Result<Self> {
        if !(bandwidth.is_finite() && bandwidth > 0.0) {
            return Err(Error::InvalidInput(format!(
                "bandwidth must be positive, got {bandwidth}"
            )));
        }
        let poly = match &family {
            KernelFamily::Triweight => {
                let c = 35.0 / 32.0;
                Poly(vec![c, 0.0, -3.0 * c, 0.0, 3.0 * c, 0.0, -c])
            }
            KernelFamily::Epanechnikov => Poly(vec![0.75, 0.0, -0.75]),
            KernelFamily::Custom(coeffs) => {
                if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(Error::InvalidInput("invalid custom kernel".into()));
                }
                Poly(coeffs.clone())
            }
        };
        let mass = poly.integral(-1.0, 1.0);
        if (mass - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidInput(format!(
                "kernel mass over [-1, 1] is {mass}, expected 1"
            )));
        }
        Ok(Self {
            family,
            bandwidth,
            boundary,
            poly,
        })
    }

    /// Triweight kernel with bandwidth `b` and no boundary correction.
    pub fn triweight(bandwidth: f64) -> Result<Self> {
        Self::new(KernelFamily::Triweight, bandwidth, BoundaryPolicy::None)
    }

    pub fn family(&self) -> &KernelFamily {
        &self.family
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn boundary(&self) -> BoundaryPolicy {
        self.boundary
    }

    pub fn with_bandwidth(&self, bandwidth: f64) -> Result<Self> {
        Self::new(self.family.clone(), bandwidth, self.boundary)
    }

    /// Kernel order; fixed at 2 so nonnegative kernels preserve monotonicity.
    pub fn order(&self) -> usize {
        2
    }

    /// `k(u)`, zero outside `[-1, 1]`.
    pub fn eval(&self, u: f64) -> f64 {
        if !(-1.0..=1.0).contains(&u) {
            0.0
        } else {
            self.poly.eval(u)
        }
    }

    /// `K(u) = int_{-1}^{u} k`, clamped to `[K(-1), K(1)] = [0, 1]`.
    pub fn antiderivative(&self, u: f64) -> f64 {
        if u <= -1.0 {
            0.0
        } else if u >= 1.0 {
            self.poly.integral(-1.0, 1.0)
        } else {
            self.poly.integral(-1.0, u)
        }
    }

    /// `K1(u) = int_{-1}^{u} s k(s) ds`, needed by corrected telescoping.
    fn first_moment_antiderivative(&self, u: f64) -> f64 {
        let clamped = u.clamp(-1.0, 1.0);
        self.poly.times_u().integral(-1.0, clamped)
    }

    /// `int k^2` over the support, exact.
    pub fn l2_norm_sq(&self) -> f64 {
        self.poly.mul(&self.poly).integral(-1.0, 1.0)
    }

    /// `int u^2 k(u) du` over the support, exact.
    pub fn second_moment(&self) -> f64 {
        self.poly.times_u().times_u().integral(-1.0, 1.0)
    }

    /// Moments `(m0, m1, m2)` of the kernel restricted to `[a, b]`.
    fn moments_on(&self, a: f64, b: f64) -> (f64, f64, f64) {
        let uk = self.poly.times_u();
        let uuk = uk.times_u();
        (
            self.poly.integral(a, b),
            uk.integral(a, b),
            uuk.integral(a, b),
        )
    }
}

// ── Boundary correction ─────────────────────────────────────────────────────

/// Coefficients of the boundary-corrected kernel `(alpha + beta v) k(v)` on
/// the in-domain part of the support.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectedKernelWeights {
    pub alpha: f64,
    pub beta_coef: f64,
    /// Sub-interval of `[-1, 1]` (in `v = (u - x)/b` units) actually covered.
    pub effective_support: (f64, f64),
}

impl CorrectedKernelWeights {
    fn identity() -> Self {
        Self {
            alpha: 1.0,
            beta_coef: 0.0,
            effective_support: (-1.0, 1.0),
        }
    }
}

/// Solve the two-moment system so the truncated corrected kernel has unit
/// mass and zero first moment. Interior points return `(1, 0)`.
pub fn boundary_weights(
    spec: &KernelSpec,
    x: f64,
    domain: (f64, f64),
) -> Result<CorrectedKernelWeights> {
    let (lo, hi) = domain;
    let b = spec.bandwidth();
    if !(lo..=hi).contains(&x) {
        return Err(Error::InvalidInput(format!(
            "point {x} outside domain [{lo}, {hi}]"
        )));
    }
    let a = ((lo - x) / b).max(-1.0);
    let z = ((hi - x) / b).min(1.0);
    if a <= -1.0 && z >= 1.0 {
        return Ok(CorrectedKernelWeights::identity());
    }
    if b > (hi - lo) / 2.0 {
        return Err(Error::InvalidInput(format!(
            "bandwidth {b} exceeds half the domain length {}",
            (hi - lo) / 2.0
        )));
    }
    let (m0, m1, m2) = spec.moments_on(a, z);
    let det = m0 * m2 - m1 * m1;
    if det.abs() < 1e-14 {
        return Err(Error::InvalidInput(
            "singular moment matrix in boundary correction".into(),
        ));
    }
    Ok(CorrectedKernelWeights {
        alpha: m2 / det,
        beta_coef: -m1 / det,
        effective_support: (a, z),
    })
}

// ── Exact convolutions ──────────────────────────────────────────────────────

/// Weighted kernel mass over the `u`-interval `[u1, u2]`:
/// `int_{u1}^{u2} (alpha + beta (u-x)/b) k((u-x)/b) / b du`.
fn window_mass(spec: &KernelSpec, w: &CorrectedKernelWeights, x: f64, u1: f64, u2: f64) -> f64 {
    let b = spec.bandwidth();
    let v1 = (u1 - x) / b;
    let v2 = (u2 - x) / b;
    let mut mass = w.alpha * (spec.antiderivative(v2) - spec.antiderivative(v1));
    if w.beta_coef != 0.0 {
        mass += w.beta_coef
            * (spec.first_moment_antiderivative(v2) - spec.first_moment_antiderivative(v1));
    }
    mass
}

/// Kernel-smooth a monotone step hazard at `x`, exactly:
/// `int k_b(x-u) hazard(u) du` over the window clipped to the hazard domain,
/// telescoping the kernel antiderivative across the hazard breakpoints. With
/// [`BoundaryPolicy::LinearCorrection`] the two-moment corrected kernel is
/// used near the domain edges.
pub fn smooth_monotone(hazard: &MonotoneHazard, spec: &KernelSpec, x: f64) -> Result<f64> {
    let (lo, hi) = hazard.domain();
    if !(lo..=hi).contains(&x) {
        return Err(Error::InvalidInput(format!(
            "evaluation point {x} outside hazard domain [{lo}, {hi}]"
        )));
    }
    let b = spec.bandwidth();
    let w_lo = (x - b).max(lo);
    let w_hi = (x + b).min(hi);
    let weights = match spec.boundary() {
        BoundaryPolicy::None => CorrectedKernelWeights::identity(),
        BoundaryPolicy::LinearCorrection => boundary_weights(spec, x, (lo, hi))?,
    };

    let breakpoints = hazard.breakpoints();
    let levels = hazard.levels();
    let mut total = 0.0;
    let mut left = w_lo;
    let start = breakpoints.partition_point(|&bp| bp <= w_lo);
    for k in start..breakpoints.len() {
        if left >= w_hi {
            break;
        }
        let right = breakpoints[k].min(w_hi);
        if right > left {
            total += levels[k] * window_mass(spec, &weights, x, left, right);
            left = right;
        }
    }
    if left < w_hi {
        // beyond the last breakpoint (can only happen from rounding at hi)
        total += levels.last().copied().unwrap_or(0.0) * window_mass(spec, &weights, x, left, w_hi);
    }
    Ok(total)
}

/// The ordinary (non-monotone) kernel estimator: the kernel-weighted sum of
/// the jumps of the cumulative hazard, `sum_j k_b(x - t_j) dLambda(t_j)`.
pub fn naive_kernel_estimator(cumhaz: &StepFunction, spec: &KernelSpec, x: f64) -> f64 {
    let b = spec.bandwidth();
    let knots = cumhaz.knots();
    let start = knots.partition_point(|&t| t < x - b);
    let mut total = 0.0;
    for (i, &t) in knots.iter().enumerate().skip(start) {
        if t > x + b {
            break;
        }
        total += spec.eval((t - x) / b) / b * cumhaz.jump(i);
    }
    total
}

/// The smoothed cumulative hazard `int k_b(x - u) Lambda(u) du`, exact via
/// antiderivative telescoping over the knots; the step function is extended
/// by its boundary values outside its knot range.
pub fn smoothed_breslow(cumhaz: &StepFunction, spec: &KernelSpec, x: f64) -> f64 {
    let b = spec.bandwidth();
    let w = CorrectedKernelWeights::identity();
    let (w_lo, w_hi) = (x - b, x + b);
    let knots = cumhaz.knots();
    let mut total = 0.0;
    let mut left = w_lo;
    let start = knots.partition_point(|&t| t <= w_lo);
    for &t in &knots[start..] {
        if t >= w_hi {
            break;
        }
        total += cumhaz.eval(left) * window_mass(spec, &w, x, left, t);
        left = t;
    }
    total += cumhaz.eval(left) * window_mass(spec, &w, x, left, w_hi);
    total
}

/// The smoothed cumulative hazard tabulated on a uniform grid over
/// `[0, horizon]`, with monotone piecewise-linear interpolation between grid
/// points. Bootstrap resampling inverts this function tens of thousands of
/// times per dataset; the grid makes each evaluation O(1) while the grid
/// itself is filled with the exact telescoped values.
#[derive(Debug, Clone)]
pub struct SmoothedCumulativeHazard {
    step: f64,
    horizon: f64,
    values: Vec<f64>,
}

impl SmoothedCumulativeHazard {
    pub fn new(cumhaz: &StepFunction, spec: &KernelSpec, horizon: f64, grid_points: usize) -> Self {
        let cells = grid_points.max(2);
        let step = horizon / cells as f64;
        let values = (0..=cells)
            .map(|i| smoothed_breslow(cumhaz, spec, i as f64 * step))
            .collect();
        Self {
            step,
            horizon,
            values,
        }
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return self.values[0];
        }
        if x >= self.horizon {
            return *self.values.last().unwrap();
        }
        let pos = x / self.step;
        let i = (pos as usize).min(self.values.len() - 2);
        let frac = pos - i as f64;
        self.values[i] + frac * (self.values[i + 1] - self.values[i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isotonic::{gcm_left_slopes, CumSumDiagram};
    use crate::numeric::adaptive_simpson;
    use rand::Rng;

    fn hazard_from_steps(breakpoints: Vec<f64>, levels: Vec<f64>, lo: f64) -> MonotoneHazard {
        // build via a convex diagram so the public constructor path is used
        let mut points = vec![(lo, 0.0)];
        let mut y = 0.0;
        let mut left = lo;
        for (&bp, &l) in breakpoints.iter().zip(&levels) {
            y += l * (bp - left);
            points.push((bp, y));
            left = bp;
        }
        gcm_left_slopes(&CumSumDiagram::new(points).unwrap()).unwrap()
    }

    #[test]
    fn triweight_values() {
        let k = KernelSpec::triweight(1.0).unwrap();
        assert_eq!(k.eval(0.0), 35.0 / 32.0);
        assert_eq!(k.eval(1.0), 0.0);
        assert_eq!(k.eval(-1.0), 0.0);
        assert_eq!(k.eval(1.5), 0.0);
        assert!((k.l2_norm_sq() - 350.0 / 429.0).abs() < 1e-14);
        assert!((k.second_moment() - 1.0 / 9.0).abs() < 1e-14);
        assert_eq!(k.order(), 2);
    }

    #[test]
    fn epanechnikov_values() {
        let k = KernelSpec::new(KernelFamily::Epanechnikov, 0.5, BoundaryPolicy::None).unwrap();
        assert_eq!(k.eval(0.0), 0.75);
        assert!((k.l2_norm_sq() - 0.6).abs() < 1e-14);
        assert!((k.second_moment() - 0.2).abs() < 1e-14);
    }

    #[test]
    fn custom_kernels_validate_mass() {
        assert!(
            KernelSpec::new(KernelFamily::Custom(vec![0.5]), 1.0, BoundaryPolicy::None).is_ok()
        );
        assert!(
            KernelSpec::new(KernelFamily::Custom(vec![1.0]), 1.0, BoundaryPolicy::None).is_err()
        );
        assert!(KernelSpec::triweight(0.0).is_err());
        assert!(KernelSpec::triweight(-1.0).is_err());
    }

    #[test]
    fn antiderivative_normalization_and_symmetry() {
        let k = KernelSpec::triweight(1.0).unwrap();
        assert_eq!(k.antiderivative(-1.0), 0.0);
        assert_eq!(k.antiderivative(-2.0), 0.0);
        assert!((k.antiderivative(1.0) - 1.0).abs() < 1e-15);
        assert!((k.antiderivative(3.0) - 1.0).abs() < 1e-15);
        assert!((k.antiderivative(0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn antiderivative_matches_quadrature() {
        let k = KernelSpec::triweight(1.0).unwrap();
        let mut u = -1.0;
        while u <= 1.0 {
            let quad = adaptive_simpson(|s| k.eval(s), -1.0, u, 1e-12);
            assert!((k.antiderivative(u) - quad).abs() < 1e-9, "K({u}) mismatch");
            u += 1e-3 * 7.0; // a few thousand probes
        }
    }

    #[test]
    fn boundary_weights_interior_identity() {
        let k = KernelSpec::triweight(0.1).unwrap();
        let w = boundary_weights(&k, 0.5, (0.0, 1.0)).unwrap();
        assert_eq!(w.alpha, 1.0);
        assert_eq!(w.beta_coef, 0.0);
    }

    #[test]
    fn boundary_weights_left_edge_moment_conditions() {
        let k = KernelSpec::triweight(0.25).unwrap();
        let w = boundary_weights(&k, 0.0, (0.0, 1.0)).unwrap();
        assert_eq!(w.effective_support, (0.0, 1.0));
        let (a, b) = w.effective_support;
        let mass = adaptive_simpson(|v| (w.alpha + w.beta_coef * v) * k.eval(v), a, b, 1e-13);
        let first = adaptive_simpson(|v| v * (w.alpha + w.beta_coef * v) * k.eval(v), a, b, 1e-13);
        assert!((mass - 1.0).abs() < 1e-10, "mass {mass}");
        assert!(first.abs() < 1e-10, "first moment {first}");
    }

    #[test]
    fn boundary_weights_reflection_symmetry() {
        let k = KernelSpec::triweight(0.3).unwrap();
        let wl = boundary_weights(&k, 0.1, (0.0, 1.0)).unwrap();
        let wr = boundary_weights(&k, 0.9, (0.0, 1.0)).unwrap();
        assert!((wl.alpha - wr.alpha).abs() < 1e-12);
        assert!((wl.beta_coef + wr.beta_coef).abs() < 1e-12);
        assert!(boundary_weights(&k, 1.2, (0.0, 1.0)).is_err());
        assert!(boundary_weights(&k, 0.5, (0.0, 0.5)).is_err());
    }

    #[test]
    fn smoothing_a_constant_hazard_returns_it() {
        let hazard = hazard_from_steps(vec![2.0], vec![3.0], 0.0);
        let k = KernelSpec::triweight(0.5).unwrap();
        let v = smooth_monotone(&hazard, &k, 1.0).unwrap();
        assert!((v - 3.0).abs() < 1e-12);
    }

    #[test]
    fn smoothing_two_level_hazard_at_the_jump() {
        let hazard = hazard_from_steps(vec![1.0, 2.0], vec![1.0, 2.0], 0.0);
        let k = KernelSpec::triweight(0.5).unwrap();
        let v = smooth_monotone(&hazard, &k, 1.0).unwrap();
        assert!((v - 1.5).abs() < 1e-12, "got {v}");
    }

    #[test]
    fn smoothing_rejects_out_of_domain_points() {
        let hazard = hazard_from_steps(vec![2.0], vec![1.0], 0.5);
        let k = KernelSpec::triweight(0.5).unwrap();
        assert!(smooth_monotone(&hazard, &k, 0.4).is_err());
        assert!(smooth_monotone(&hazard, &k, 2.1).is_err());
    }

    #[test]
    fn exact_convolution_matches_quadrature_on_random_hazards() {
        let mut rng = crate::seeds::stream_rng(61, 1);
        for _ in 0..50 {
            let segs = rng.random_range(1..8);
            let mut bps = Vec::new();
            let mut lvls = Vec::new();
            let mut bp = 0.0;
            let mut lvl = 0.0;
            for _ in 0..segs {
                bp += rng.random::<f64>() + 0.1;
                lvl += rng.random::<f64>();
                bps.push(bp);
                lvls.push(lvl);
            }
            let hazard = hazard_from_steps(bps.clone(), lvls, 0.0);
            let b = rng.random::<f64>() * 0.3 + 0.05;
            let k = KernelSpec::new(KernelFamily::Triweight, b, BoundaryPolicy::None).unwrap();
            let (lo, hi) = hazard.domain();
            let x = lo + rng.random::<f64>() * (hi - lo);
            let got = smooth_monotone(&hazard, &k, x).unwrap();
            let w_lo = (x - b).max(lo);
            let w_hi = (x + b).min(hi);
            let want = adaptive_simpson(
                |u| k.eval((u - x) / b) / b * hazard.eval(u + 1e-13),
                w_lo,
                w_hi,
                1e-12,
            );
            assert!((got - want).abs() < 1e-9, "x={x}, b={b}: {got} vs {want}");
        }
    }

    #[test]
    fn corrected_smoothing_reproduces_constants_everywhere() {
        let hazard = hazard_from_steps(vec![1.0], vec![2.5], 0.0);
        let k = KernelSpec::new(
            KernelFamily::Triweight,
            0.3,
            BoundaryPolicy::LinearCorrection,
        )
        .unwrap();
        let mut x = 0.0;
        while x <= 1.0 {
            let v = smooth_monotone(&hazard, &k, x).unwrap();
            assert!((v - 2.5).abs() < 1e-9, "x={x}: {v}");
            x += 0.05;
        }
        // without correction the clipped window loses mass at the edge
        let plain = KernelSpec::triweight(0.3).unwrap();
        let v = smooth_monotone(&hazard, &plain, 0.0).unwrap();
        assert!((v - 1.25).abs() < 1e-12);
    }

    #[test]
    fn smoothed_estimates_are_monotone_in_the_interior() {
        let mut rng = crate::seeds::stream_rng(67, 1);
        for _ in 0..20 {
            let segs = rng.random_range(2..10);
            let mut bps = Vec::new();
            let mut lvls = Vec::new();
            let (mut bp, mut lvl) = (0.0, 0.0);
            for _ in 0..segs {
                bp += rng.random::<f64>() + 0.05;
                lvl += rng.random::<f64>();
                bps.push(bp);
                lvls.push(lvl);
            }
            let hazard = hazard_from_steps(bps, lvls, 0.0);
            let (lo, hi) = hazard.domain();
            let b = 0.2 * (hi - lo);
            let k = KernelSpec::new(KernelFamily::Triweight, b, BoundaryPolicy::None).unwrap();
            let mut prev = f64::NEG_INFINITY;
            for g in 0..=40 {
                let x = (lo + b) + (hi - lo - 2.0 * b) * g as f64 / 40.0;
                let v = smooth_monotone(&hazard, &k, x).unwrap();
                assert!(v >= prev - 1e-12, "monotonicity violated at {x}");
                prev = v;
            }
        }
    }

    #[test]
    fn naive_estimator_point_mass() {
        let cumhaz = StepFunction::new(vec![2.0], vec![1.0], 0.0).unwrap();
        let k = KernelSpec::triweight(0.5).unwrap();
        let v = naive_kernel_estimator(&cumhaz, &k, 2.0);
        assert!((v - (35.0 / 32.0) / 0.5).abs() < 1e-14);
        assert_eq!(naive_kernel_estimator(&cumhaz, &k, 3.0), 0.0);
    }

    #[test]
    fn naive_estimator_matches_direct_sum() {
        let mut rng = crate::seeds::stream_rng(71, 1);
        let mut knots: Vec<f64> = (0..30).map(|_| rng.random::<f64>() * 4.0).collect();
        knots.sort_by(f64::total_cmp);
        knots.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        let mut cum = 0.0;
        let values: Vec<f64> = knots
            .iter()
            .map(|_| {
                cum += rng.random::<f64>() * 0.2;
                cum
            })
            .collect();
        let cumhaz = StepFunction::new(knots.clone(), values.clone(), 0.0).unwrap();
        let k = KernelSpec::triweight(0.4).unwrap();
        for g in 0..20 {
            let x = 0.2 * g as f64;
            let mut want = 0.0;
            for (i, &t) in knots.iter().enumerate() {
                let jump = if i == 0 {
                    values[0]
                } else {
                    values[i] - values[i - 1]
                };
                want += k.eval((t - x) / 0.4) / 0.4 * jump;
            }
            let got = naive_kernel_estimator(&cumhaz, &k, x);
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn smoothed_breslow_constant_and_linear() {
        let k = KernelSpec::triweight(0.25).unwrap();
        let constant = StepFunction::constant(4.0);
        assert!((smoothed_breslow(&constant, &k, 1.0) - 4.0).abs() < 1e-12);

        // dense staircase approximating Lambda(u) = u
        let m = 4000;
        let knots: Vec<f64> = (1..=m).map(|i| i as f64 / m as f64 * 4.0).collect();
        let values: Vec<f64> = knots.clone();
        let ramp = StepFunction::new(knots, values, 0.0).unwrap();
        for &x in &[1.0, 2.0, 3.0] {
            let v = smoothed_breslow(&ramp, &k, x);
            assert!((v - x).abs() < 2.0 * 4.0 / m as f64, "x={x}: {v}");
        }
    }

    #[test]
    fn grid_interpolant_tracks_exact_values() {
        let mut rng = crate::seeds::stream_rng(77, 1);
        let mut knots: Vec<f64> = (0..25).map(|_| rng.random::<f64>() * 1.8 + 0.05).collect();
        knots.sort_by(f64::total_cmp);
        knots.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        let mut cum = 0.0;
        let values: Vec<f64> = knots
            .iter()
            .map(|_| {
                cum += rng.random::<f64>() * 0.2;
                cum
            })
            .collect();
        let cumhaz = StepFunction::new(knots, values, 0.0).unwrap();
        let spec = triweight_spec(0.3);
        let grid = SmoothedCumulativeHazard::new(&cumhaz, &spec, 2.0, 2048);
        for g in 0..=100 {
            let x = 2.0 * g as f64 / 100.0;
            let exact = smoothed_breslow(&cumhaz, &spec, x);
            assert!(
                (grid.eval(x) - exact).abs() < 1e-5,
                "grid deviates at {x}: {} vs {exact}",
                grid.eval(x)
            );
        }
        // monotone by construction
        let mut prev = f64::NEG_INFINITY;
        for g in 0..=400 {
            let v = grid.eval(2.0 * g as f64 / 400.0);
            assert!(v >= prev);
            prev = v;
        }
    }

    fn triweight_spec(b: f64) -> KernelSpec {
        KernelSpec::triweight(b).unwrap()
    }

    #[test]
    fn smoothed_breslow_is_monotone() {
        let mut rng = crate::seeds::stream_rng(73, 1);
        for _ in 0..20 {
            let n = rng.random_range(3..40);
            let mut knots: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0).collect();
            knots.sort_by(f64::total_cmp);
            knots.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
            let mut cum = 0.0;
            let values: Vec<f64> = knots
                .iter()
                .map(|_| {
                    cum += rng.random::<f64>() * 0.3;
                    cum
                })
                .collect();
            let cumhaz = StepFunction::new(knots, values, 0.0).unwrap();
            let k = KernelSpec::triweight(0.2).unwrap();
            let mut prev = f64::NEG_INFINITY;
            for g in 0..=50 {
                let x = 2.0 * g as f64 / 50.0;
                let v = smoothed_breslow(&cumhaz, &k, x);
                assert!(v >= prev - 1e-12);
                prev = v;
            }
        }
    }
}
