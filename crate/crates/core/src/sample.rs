//! Right-censored regression data, sorted views, step-function algebra, and
//! the Kaplan-Meier estimator of the censoring distribution.
//!
//! All types are immutable after construction and safe to share across
//! worker threads.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

// ── SurvivalSample ──────────────────────────────────────────────────────────

/// Raw right-censored records: follow-up time, event indicator, covariates.
///
/// Covariates are stored row-major (`n x p`). `p = 0` is allowed and models
/// the no-covariate reduction.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalSample {
    times: Vec<f64>,
    events: Vec<bool>,
    covariates: Vec<f64>,
    p: usize,
}

impl SurvivalSample {
    /// Build a sample from columns. `covariates` is row-major `n x p`.
    pub fn from_columns(
        times: Vec<f64>,
        events: Vec<bool>,
        covariates: Vec<f64>,
        p: usize,
    ) -> Result<Self> {
        let n = times.len();
        if n == 0 {
            return Err(Error::InvalidInput("sample size must be at least 1".into()));
        }
        if events.len() != n {
            return Err(Error::InvalidInput(format!(
                "events length {} does not match times length {}",
                events.len(),
                n
            )));
        }
        if covariates.len() != n * p {
            return Err(Error::InvalidInput(format!(
                "covariate matrix has {} entries, expected {} ({} x {})",
                covariates.len(),
                n * p,
                n,
                p
            )));
        }
        for (i, &t) in times.iter().enumerate() {
            if !t.is_finite() || t < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "time {t} at record {i} is not a finite nonnegative number"
                )));
            }
        }
        if covariates.iter().any(|z| !z.is_finite()) {
            return Err(Error::InvalidInput("non-finite covariate value".into()));
        }
        Ok(Self {
            times,
            events,
            covariates,
            p,
        })
    }

    /// Build a sample from `(time, event, covariates)` records.
    pub fn from_records(records: Vec<(f64, bool, Vec<f64>)>) -> Result<Self> {
        let p = records.first().map_or(0, |r| r.2.len());
        let mut times = Vec::with_capacity(records.len());
        let mut events = Vec::with_capacity(records.len());
        let mut covariates = Vec::with_capacity(records.len() * p);
        for (i, (t, d, z)) in records.into_iter().enumerate() {
            if z.len() != p {
                return Err(Error::InvalidInput(format!(
                    "record {i} has {} covariates, expected {p}",
                    z.len()
                )));
            }
            times.push(t);
            events.push(d);
            covariates.extend_from_slice(&z);
        }
        Self::from_columns(times, events, covariates, p)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        false // n >= 1 by construction
    }

    /// Number of covariates per record.
    pub fn num_covariates(&self) -> usize {
        self.p
    }

    pub fn time(&self, i: usize) -> f64 {
        self.times[i]
    }

    pub fn event(&self, i: usize) -> bool {
        self.events[i]
    }

    pub fn covariates(&self, i: usize) -> &[f64] {
        &self.covariates[i * self.p..(i + 1) * self.p]
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn events(&self) -> &[bool] {
        &self.events
    }
}

/// Parse a sample from CSV text with header `time,event,z1,...,zp`.
///
/// `event` must be 0 or 1; all other fields must parse as finite reals.
/// Errors report the 1-based data-row index.
pub fn load_sample<R: Read>(mut source: R) -> Result<SurvivalSample> {
    let mut text = String::new();
    source
        .read_to_string(&mut text)
        .map_err(|e| Error::InvalidInput(format!("cannot read input: {e}")))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidInput("empty file".into()))?;
    let cols: Vec<&str> = header.trim().split(',').map(str::trim).collect();
    if cols.len() < 2 || cols[0] != "time" || cols[1] != "event" {
        return Err(Error::InvalidInput(format!(
            "header must start with \"time,event\", got \"{header}\""
        )));
    }
    for (j, col) in cols[2..].iter().enumerate() {
        let expected = format!("z{}", j + 1);
        if *col != expected {
            return Err(Error::InvalidInput(format!(
                "covariate column {} must be named \"{expected}\", got \"{col}\"",
                j + 3
            )));
        }
    }
    let p = cols.len() - 2;

    let mut times = Vec::new();
    let mut events = Vec::new();
    let mut covariates = Vec::new();
    for (idx, line) in lines.enumerate() {
        let row = idx + 1;
        let fields: Vec<&str> = line.trim().split(',').map(str::trim).collect();
        if fields.len() != p + 2 {
            return Err(Error::Parse {
                row,
                message: format!("expected {} fields, found {}", p + 2, fields.len()),
            });
        }
        let time: f64 = fields[0].parse().map_err(|_| Error::Parse {
            row,
            message: format!("cannot parse time \"{}\"", fields[0]),
        })?;
        if !time.is_finite() {
            return Err(Error::Parse {
                row,
                message: format!("time \"{}\" is not finite", fields[0]),
            });
        }
        if time < 0.0 {
            return Err(Error::Parse {
                row,
                message: format!("negative time {time}"),
            });
        }
        let event = match fields[1] {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::Parse {
                    row,
                    message: format!("event must be 0 or 1, got \"{other}\""),
                })
            }
        };
        for f in &fields[2..] {
            let z: f64 = f.parse().map_err(|_| Error::Parse {
                row,
                message: format!("cannot parse covariate \"{f}\""),
            })?;
            if !z.is_finite() {
                return Err(Error::Parse {
                    row,
                    message: format!("covariate \"{f}\" is not finite"),
                });
            }
            covariates.push(z);
        }
        times.push(time);
        events.push(event);
    }
    if times.is_empty() {
        return Err(Error::InvalidInput("empty file: no data rows".into()));
    }
    SurvivalSample::from_columns(times, events, covariates, p)
}

// ── SortedSample ────────────────────────────────────────────────────────────

/// A sample together with the permutation that sorts it by time.
///
/// Tie policy: within a tie group, event records precede censored records;
/// within equal `(time, event)`, original index ascending. The sorted columns
/// are materialized so downstream sweeps are cache-friendly.
#[derive(Debug, Clone)]
pub struct SortedSample {
    base: SurvivalSample,
    order: Vec<usize>,
    times: Vec<f64>,
    events: Vec<bool>,
    covariates: Vec<f64>,
}

/// Sort a sample by time with the deterministic tie policy.
pub fn sort_sample(sample: SurvivalSample) -> SortedSample {
    let n = sample.len();
    let p = sample.num_covariates();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        sample.times[a]
            .total_cmp(&sample.times[b])
            .then_with(|| sample.events[b].cmp(&sample.events[a]))
            .then_with(|| a.cmp(&b))
    });
    let mut times = Vec::with_capacity(n);
    let mut events = Vec::with_capacity(n);
    let mut covariates = Vec::with_capacity(n * p);
    for &i in &order {
        times.push(sample.times[i]);
        events.push(sample.events[i]);
        covariates.extend_from_slice(sample.covariates(i));
    }
    SortedSample {
        base: sample,
        order,
        times,
        events,
        covariates,
    }
}

impl SortedSample {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn num_covariates(&self) -> usize {
        self.base.p
    }

    /// The sorting permutation: `order()[k]` is the original index of rank `k`.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Times in nondecreasing order.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Event indicators in sorted order.
    pub fn events(&self) -> &[bool] {
        &self.events
    }

    /// Covariate row of the record with sorted rank `k`.
    pub fn covariate_row(&self, k: usize) -> &[f64] {
        let p = self.base.p;
        &self.covariates[k * p..(k + 1) * p]
    }

    pub fn base(&self) -> &SurvivalSample {
        &self.base
    }

    /// Smallest observed time T_(1).
    pub fn first_time(&self) -> f64 {
        self.times[0]
    }

    /// Largest observed time T_(n).
    pub fn last_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn num_events(&self) -> usize {
        self.events.iter().filter(|&&d| d).count()
    }
}

// ── StepFunction ────────────────────────────────────────────────────────────

/// Right-continuous piecewise-constant function: value at `x` is the value of
/// the largest knot `<= x`, or `before` when `x` lies before every knot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFunction {
    knots: Vec<f64>,
    values: Vec<f64>,
    #[serde(default)]
    before: f64,
}

impl StepFunction {
    pub fn new(knots: Vec<f64>, values: Vec<f64>, before: f64) -> Result<Self> {
        if knots.len() != values.len() {
            return Err(Error::InvalidInput(format!(
                "{} knots but {} values",
                knots.len(),
                values.len()
            )));
        }
        if knots.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput(
                "knots must be strictly increasing".into(),
            ));
        }
        if knots.iter().chain(values.iter()).any(|v| !v.is_finite()) || !before.is_finite() {
            return Err(Error::InvalidInput("non-finite step function data".into()));
        }
        Ok(Self {
            knots,
            values,
            before,
        })
    }

    /// The constant function `value`.
    pub fn constant(value: f64) -> Self {
        Self {
            knots: Vec::new(),
            values: Vec::new(),
            before: value,
        }
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn before(&self) -> f64 {
        self.before
    }

    /// Right-continuous evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        let idx = self.knots.partition_point(|&k| k <= x);
        if idx == 0 {
            self.before
        } else {
            self.values[idx - 1]
        }
    }

    /// Left limit at `x`: the value just before `x`.
    pub fn eval_left(&self, x: f64) -> f64 {
        let idx = self.knots.partition_point(|&k| k < x);
        if idx == 0 {
            self.before
        } else {
            self.values[idx - 1]
        }
    }

    /// Jump size at knot `i`.
    pub fn jump(&self, i: usize) -> f64 {
        if i == 0 {
            self.values[0] - self.before
        } else {
            self.values[i] - self.values[i - 1]
        }
    }

    /// Exact Lebesgue integral over `[a, b]`.
    pub fn integral(&self, a: f64, b: f64) -> Result<f64> {
        if a > b {
            return Err(Error::InvalidInput(format!(
                "integration bounds out of order: {a} > {b}"
            )));
        }
        // walk the knots intersecting (a, b); each piece is constant
        let mut total = 0.0;
        let mut left = a;
        let start = self.knots.partition_point(|&k| k <= a);
        for i in start..self.knots.len() {
            let k = self.knots[i];
            if k >= b {
                break;
            }
            total += self.eval(left) * (k - left);
            left = k;
        }
        total += self.eval(left) * (b - left);
        Ok(total)
    }
}

// ── Censoring distribution ──────────────────────────────────────────────────

/// Kaplan-Meier estimate of the censoring survival function, with the atom
/// list used to draw bootstrap censoring times. A residual atom at T_(n)
/// absorbs any remaining mass so the atoms form a proper distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct CensoringSurvival {
    curve: StepFunction,
    atoms: Vec<(f64, f64)>,
}

impl CensoringSurvival {
    /// Survival curve (right-continuous, starts at 1, nonincreasing).
    pub fn curve(&self) -> &StepFunction {
        &self.curve
    }

    /// `(time, mass)` pairs, masses summing to 1.
    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    /// Inverse-cdf draw: map `u` in `[0, 1)` to an atom time.
    pub fn sample_time(&self, u: f64) -> f64 {
        let mut cum = 0.0;
        for &(t, m) in &self.atoms {
            cum += m;
            if u < cum {
                return t;
            }
        }
        self.atoms.last().unwrap().0
    }
}

/// Product-limit estimator of the censoring distribution: censorings are
/// treated as events and events as censorings.
pub fn kaplan_meier_censoring(sorted: &SortedSample) -> CensoringSurvival {
    let n = sorted.len();
    let times = sorted.times();
    let events = sorted.events();

    let mut knots = Vec::new();
    let mut values = Vec::new();
    let mut atoms: Vec<(f64, f64)> = Vec::new();
    let mut survival = 1.0;

    let mut i = 0;
    while i < n {
        let t = times[i];
        let at_risk = n - i;
        let mut censored_here = 0usize;
        let mut j = i;
        while j < n && times[j] == t {
            if !events[j] {
                censored_here += 1;
            }
            j += 1;
        }
        if censored_here > 0 {
            let prev = survival;
            survival *= 1.0 - censored_here as f64 / at_risk as f64;
            knots.push(t);
            values.push(survival);
            atoms.push((t, prev - survival));
        }
        i = j;
    }

    // redistribute-to-the-right: leftover mass sits at the largest time
    if survival > 0.0 {
        let last = sorted.last_time();
        match atoms.last_mut() {
            Some((t, m)) if *t == last => *m += survival,
            _ => atoms.push((last, survival)),
        }
    }

    let curve = StepFunction::new(knots, values, 1.0).expect("distinct censoring times");
    CensoringSurvival { curve, atoms }
}
