//! The Breslow estimator, greatest-convex-minorant machinery, and the two
//! isotonic baseline-hazard estimators, plus the inverse process used by the
//! switching-relation oracle.

use serde_json::json;

use crate::error::{Error, Result};
use crate::sample::{SortedSample, StepFunction};

/// Relative tolerance for slope comparisons in hull construction; collinear
/// points are merged rather than kept as micro-segments.
const SLOPE_TOL: f64 = 1e-12;

// ── Diagram and hazard types ────────────────────────────────────────────────

/// A cumulative sum diagram: points with strictly increasing x-coordinates,
/// the first being the designated origin.
#[derive(Debug, Clone, PartialEq)]
pub struct CumSumDiagram {
    points: Vec<(f64, f64)>,
}

impl CumSumDiagram {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput("diagram has no points".into()));
        }
        if points.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
            return Err(Error::InvalidInput("non-finite diagram point".into()));
        }
        for w in points.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidInput(format!(
                    "duplicate x-coordinate {} in diagram",
                    w[0].0
                )));
            }
            if w[0].0 > w[1].0 {
                return Err(Error::InvalidInput(
                    "diagram x-coordinates must be increasing".into(),
                ));
            }
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }
}

/// A nondecreasing left-continuous step function: the value at `x` is the
/// level of the first segment whose right endpoint is `>= x`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneHazard {
    /// Segment right endpoints, strictly increasing; the last one equals the
    /// upper end of the domain.
    breakpoints: Vec<f64>,
    /// Nondecreasing, nonnegative segment levels.
    levels: Vec<f64>,
    domain: (f64, f64),
}

impl MonotoneHazard {
    fn new(breakpoints: Vec<f64>, levels: Vec<f64>, domain: (f64, f64)) -> Result<Self> {
        debug_assert_eq!(breakpoints.len(), levels.len());
        if levels.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidInput("levels must be nondecreasing".into()));
        }
        if levels.first().is_some_and(|&l| l < 0.0) {
            return Err(Error::InvalidInput("negative hazard level".into()));
        }
        Ok(Self {
            breakpoints,
            levels,
            domain,
        })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// `(lower, upper)` endpoints of the time interval the hazard lives on.
    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    /// Left-continuous evaluation; clamps to the boundary levels outside the
    /// breakpoint range.
    pub fn eval(&self, x: f64) -> f64 {
        let idx = self.breakpoints.partition_point(|&b| b < x);
        if idx == self.breakpoints.len() {
            *self.levels.last().unwrap()
        } else {
            self.levels[idx]
        }
    }

    /// Integral of the hazard from the lower domain endpoint to `x`.
    pub fn integral_to(&self, x: f64) -> f64 {
        let mut total = 0.0;
        let mut left = self.domain.0;
        for (&bp, &level) in self.breakpoints.iter().zip(&self.levels) {
            let right = bp.min(x);
            if right > left {
                total += level * (right - left);
                left = right;
            }
            if bp >= x {
                break;
            }
        }
        total
    }

    /// JSON surface: `{"breakpoints": [...], "levels": [...], "domain": [lo, hi]}`.
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "breakpoints": self.breakpoints,
            "levels": self.levels,
            "domain": [self.domain.0, self.domain.1],
        })
    }
}

// ── Breslow estimator ───────────────────────────────────────────────────────

/// The Breslow estimator of the cumulative baseline hazard: right-continuous,
/// jumping `d(t) / (n Phi_n(t; beta))` at each distinct event time `t`.
/// Zero events give the zero function.
pub fn breslow(sorted: &SortedSample, beta: &[f64]) -> Result<StepFunction> {
    if beta.len() != sorted.num_covariates() {
        return Err(Error::InvalidInput(format!(
            "beta has dimension {}, sample has {} covariates",
            beta.len(),
            sorted.num_covariates()
        )));
    }
    let n = sorted.len();
    let times = sorted.times();
    let events = sorted.events();

    // suffix sums of exp(beta' Z) over sorted ranks: n * Phi_n(T_(k))
    let mut suffix = vec![0.0; n + 1];
    for k in (0..n).rev() {
        let w: f64 = beta
            .iter()
            .zip(sorted.covariate_row(k))
            .map(|(b, z)| b * z)
            .sum::<f64>()
            .exp();
        suffix[k] = suffix[k + 1] + w;
    }

    let mut knots = Vec::new();
    let mut values = Vec::new();
    let mut cum = 0.0;
    let mut i = 0;
    while i < n {
        let t = times[i];
        let mut d = 0usize;
        let mut j = i;
        while j < n && times[j] == t {
            if events[j] {
                d += 1;
            }
            j += 1;
        }
        if d > 0 {
            cum += d as f64 / suffix[i];
            knots.push(t);
            values.push(cum);
        }
        i = j;
    }
    StepFunction::new(knots, values, 0.0)
}

// ── Greatest convex minorant ────────────────────────────────────────────────

fn slope(a: (f64, f64), b: (f64, f64)) -> f64 {
    (b.1 - a.1) / (b.0 - a.0)
}

fn slopes_merge(s1: f64, s2: f64) -> bool {
    // pop the middle vertex when s1 >= s2 up to relative tolerance
    s1 >= s2 - SLOPE_TOL * s1.abs().max(s2.abs()).max(1.0)
}

/// Indices of the lower convex hull vertices of x-ordered points, single
/// stack pass, O(#points).
fn lower_hull(points: &[(f64, f64)]) -> Vec<usize> {
    let mut hull: Vec<usize> = Vec::with_capacity(points.len());
    for i in 0..points.len() {
        while hull.len() >= 2 {
            let a = points[hull[hull.len() - 2]];
            let b = points[hull[hull.len() - 1]];
            if slopes_merge(slope(a, b), slope(b, points[i])) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    hull
}

fn hull_to_hazard(
    points: &[(f64, f64)],
    hull: &[usize],
    axis: impl Fn(usize) -> f64,
    domain: (f64, f64),
) -> Result<MonotoneHazard> {
    let mut breakpoints = Vec::with_capacity(hull.len() - 1);
    let mut levels = Vec::with_capacity(hull.len() - 1);
    for w in hull.windows(2) {
        let s = slope(points[w[0]], points[w[1]]);
        // rounding can leave a slope at -epsilon; a genuinely decreasing
        // diagram is rejected
        if s < -1e-9 {
            return Err(Error::InvalidInput(format!(
                "diagram yields negative left slope {s}"
            )));
        }
        breakpoints.push(axis(w[1]));
        levels.push(s.max(0.0));
    }
    MonotoneHazard::new(breakpoints, levels, domain)
}

/// Left derivative of the greatest convex minorant of the diagram, one level
/// per hull segment, evaluated on the diagram's own x-axis.
pub fn gcm_left_slopes(diagram: &CumSumDiagram) -> Result<MonotoneHazard> {
    let points = diagram.points();
    if points.len() < 2 {
        return Err(Error::InvalidInput(
            "diagram needs at least two points".into(),
        ));
    }
    let hull = lower_hull(points);
    let domain = (points[0].0, points[points.len() - 1].0);
    hull_to_hazard(points, &hull, |i| points[i].0, domain)
}

// ── Grenander-type estimator ────────────────────────────────────────────────

/// The Grenander-type estimator: left slope of the GCM of the Breslow
/// estimator over the diagram `(0, 0), (t, Lambda_n(t)), ..., (T_(n),
/// Lambda_n(T_(n)))`, with domain `[0, T_(n)]`.
pub fn grenander(sorted: &SortedSample, beta: &[f64]) -> Result<MonotoneHazard> {
    let cumhaz = breslow(sorted, beta)?;
    if cumhaz.knots().is_empty() {
        return Err(Error::NoEvents);
    }
    if cumhaz.knots()[0] == 0.0 {
        return Err(Error::Degenerate(
            "event at time 0 leaves no room for the origin".into(),
        ));
    }
    let mut points = vec![(0.0, 0.0)];
    points.extend(
        cumhaz
            .knots()
            .iter()
            .zip(cumhaz.values())
            .map(|(&k, &v)| (k, v)),
    );
    let last_time = sorted.last_time();
    if last_time > *cumhaz.knots().last().unwrap() {
        points.push((last_time, *cumhaz.values().last().unwrap()));
    }
    let hull = lower_hull(&points);
    hull_to_hazard(&points, &hull, |i| points[i].0, (0.0, last_time))
}

// ── Maximum likelihood estimator ────────────────────────────────────────────

/// Diagram points together with the time label behind each point.
type LabeledPoints = (Vec<(f64, f64)>, Vec<f64>);

fn mle_points(sorted: &SortedSample, beta: &[f64]) -> Result<LabeledPoints> {
    if beta.len() != sorted.num_covariates() {
        return Err(Error::InvalidInput(format!(
            "beta has dimension {}, sample has {} covariates",
            beta.len(),
            sorted.num_covariates()
        )));
    }
    let n = sorted.len();
    if n < 2 {
        return Err(Error::InvalidInput(
            "the cumulative sum diagram needs n >= 2".into(),
        ));
    }
    let times = sorted.times();
    let events = sorted.events();

    let mut suffix = vec![0.0; n + 1];
    for k in (0..n).rev() {
        let w: f64 = beta
            .iter()
            .zip(sorted.covariate_row(k))
            .map(|(b, z)| b * z)
            .sum::<f64>()
            .exp();
        suffix[k] = suffix[k + 1] + w;
    }

    // P_0 = (0, 0) anchored at T_(1); P_j = (W_n(T_(j+1)), V_n(T_(j+1)))
    let mut points = vec![(0.0, 0.0)];
    let mut labels = vec![times[0]];
    let inv_n = 1.0 / n as f64;
    let mut w_cum = 0.0;
    let mut v_cum = 0usize;
    for j in 1..n {
        // on (T_(j-1), T_(j)) the integrand min(T_i, x) grows for ranks >= j
        w_cum += (times[j] - times[j - 1]) * suffix[j] * inv_n;
        if events[j - 1] {
            v_cum += 1;
        }
        // count events strictly before T_(j), including ties within the group
        let mut k = j;
        let mut v_here = v_cum;
        while k >= 1 && times[k - 1] == times[j] {
            if events[k - 1] {
                v_here -= 1;
            }
            k -= 1;
        }
        let point = (w_cum, v_here as f64 * inv_n);
        if point.0 > points.last().unwrap().0 {
            points.push(point);
            labels.push(times[j]);
        }
    }
    if points.len() < 2 {
        return Err(Error::Degenerate(
            "all follow-up times are equal; the diagram has a single point".into(),
        ));
    }
    Ok((points, labels))
}

/// The cumulative sum diagram whose GCM left slope is the isotonic MLE:
/// `P_0 = (0, 0)`, `P_j = (W_n(T_(j+1)), V_n(T_(j+1)))` with
/// `W_n(x) = (1/n) sum_i exp(beta' Z_i) (min(T_i, x) - T_(1))_+` and
/// `V_n(x) = (1/n) sum_i Delta_i 1{T_i < x}`. Tied times collapse onto one
/// point; a diagram with fewer than two distinct points is degenerate.
pub fn mle_diagram(sorted: &SortedSample, beta: &[f64]) -> Result<CumSumDiagram> {
    let (points, _) = mle_points(sorted, beta)?;
    CumSumDiagram::new(points)
}

/// The isotonic MLE of a nondecreasing baseline hazard: GCM left slopes of
/// [`mle_diagram`] mapped back to the time axis, with domain
/// `[T_(1), T_(n)]`.
pub fn mle_baseline(sorted: &SortedSample, beta: &[f64]) -> Result<MonotoneHazard> {
    if sorted.num_events() == 0 {
        return Err(Error::NoEvents);
    }
    let (points, labels) = mle_points(sorted, beta)?;
    let hull = lower_hull(&points);
    hull_to_hazard(
        &points,
        &hull,
        |i| labels[i],
        (sorted.first_time(), sorted.last_time()),
    )
}

// ── Inverse process ─────────────────────────────────────────────────────────

/// The inverse process of the Grenander-type estimator: the largest minimizer
/// of `x -> Lambda_n(x) - a x` over the candidate set `{0}` and the knots of
/// the Breslow estimator up to `T_(n)`.
///
/// Ties in the objective resolve to the larger location, which makes the
/// switching relation `grenander(x) <= a  iff  inverse_process(a) >= x` exact
/// on the knot grid.
pub fn inverse_process(sorted: &SortedSample, beta: &[f64], a: f64) -> Result<f64> {
    if a < 0.0 {
        return Err(Error::InvalidInput(format!("slope level {a} is negative")));
    }
    let cumhaz = breslow(sorted, beta)?;
    let last = sorted.last_time();
    let mut candidates: Vec<f64> = Vec::with_capacity(cumhaz.knots().len() + 2);
    candidates.push(0.0);
    candidates.extend(cumhaz.knots().iter().copied().filter(|&k| k <= last));
    if candidates.last() != Some(&last) {
        candidates.push(last);
    }
    let mut best_x = candidates[0];
    let mut best_val = cumhaz.eval(candidates[0]) - a * candidates[0];
    for &x in &candidates[1..] {
        let val = cumhaz.eval(x) - a * x;
        if val <= best_val {
            best_val = val;
            best_x = x;
        }
    }
    Ok(best_x)
}
