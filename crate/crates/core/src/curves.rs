//! Sampled curves on uniform time grids.
//!
//! A curve may consist of several smooth segments joined at junction
//! samples (kinks). Derivatives are taken per segment and never difference
//! across a junction.

use std::ops::RangeInclusive;

use crate::error::{Error, Result};
use crate::linalg::{frobenius, CMat, DEFAULT_GAP_TOL};
use crate::spectra::{validate_with, DegeneracySpectrum, EigenvalueSpectrum};

/// Endpoint tolerance for concatenation.
pub const JUNCTION_TOL: f64 = 1e-9;

/// Uniform grid `t_k = k τ / (N − 1)`, `k = 0..N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    tau: f64,
    n: usize,
}

impl TimeGrid {
    pub fn new(tau: f64, n: usize) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::OutOfRange { value: tau, range: "(0, inf)" });
        }
        if n < 2 {
            return Err(Error::OutOfRange { value: n as f64, range: "N >= 2" });
        }
        Ok(Self { tau, n })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dt(&self) -> f64 {
        self.tau / (self.n - 1) as f64
    }

    pub fn t(&self, k: usize) -> f64 {
        if k + 1 == self.n {
            self.tau
        } else {
            k as f64 * self.dt()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.t(k)).collect()
    }
}

/// Values that finite differences can combine linearly.
pub trait Linear: Clone {
    fn combine(terms: &[(f64, &Self)]) -> Self;
}

impl Linear for f64 {
    fn combine(terms: &[(f64, &Self)]) -> Self {
        terms.iter().map(|(c, x)| c * **x).sum()
    }
}

impl Linear for CMat {
    fn combine(terms: &[(f64, &Self)]) -> Self {
        let mut out = terms[0].1.scale(terms[0].0);
        for (c, x) in &terms[1..] {
            out += x.scale(*c);
        }
        out
    }
}

/// Derivative estimates on each segment. Segments of five or more samples
/// use fourth order stencils (central inside, one-sided near the ends);
/// shorter ones fall back to second order, or first order on two samples.
pub fn differentiate<T: Linear>(values: &[T], dt: f64, segments: &[RangeInclusive<usize>]) -> Vec<T> {
    let mut out: Vec<Option<T>> = vec![None; values.len()];
    let h = 1.0 / dt;
    let q = h / 12.0;
    for seg in segments {
        let (a, b) = (*seg.start(), *seg.end());
        // stencils on differences from a reference sample
        let stencil = |r: usize, w: &[(f64, usize)]| -> T {
            let diffs: Vec<T> = w.iter().map(|&(_, i)| T::combine(&[(1.0, &values[i]), (-1.0, &values[r])])).collect();
            let terms: Vec<(f64, &T)> = w.iter().zip(&diffs).map(|(&(c, _), d)| (c, d)).collect();
            T::combine(&terms)
        };
        let d = |k: usize| -> T {
            if b - a == 1 {
                stencil(a, &[(h, b)])
            } else if b - a < 4 {
                if k == a {
                    stencil(a, &[(2.0 * h, a + 1), (-0.5 * h, a + 2)])
                } else if k == b {
                    stencil(b, &[(-2.0 * h, b - 1), (0.5 * h, b - 2)])
                } else {
                    stencil(k, &[(0.5 * h, k + 1), (-0.5 * h, k - 1)])
                }
            } else if k == a {
                stencil(a, &[(48.0 * q, a + 1), (-36.0 * q, a + 2), (16.0 * q, a + 3), (-3.0 * q, a + 4)])
            } else if k == a + 1 {
                stencil(a + 1, &[(-3.0 * q, a), (18.0 * q, a + 2), (-6.0 * q, a + 3), (q, a + 4)])
            } else if k == b {
                stencil(b, &[(-48.0 * q, b - 1), (36.0 * q, b - 2), (-16.0 * q, b - 3), (3.0 * q, b - 4)])
            } else if k == b - 1 {
                stencil(b - 1, &[(3.0 * q, b), (-18.0 * q, b - 2), (6.0 * q, b - 3), (-q, b - 4)])
            } else {
                stencil(k, &[(-q, k + 2), (8.0 * q, k + 1), (-8.0 * q, k - 1), (q, k - 2)])
            }
        };
        // a junction sample belongs to two segments; keep the left one-sided value
        for k in a..=b {
            if out[k].is_none() {
                out[k] = Some(d(k));
            }
        }
    }
    out.into_iter().map(|v| v.expect("segments cover the grid")).collect()
}

/// Composite trapezoid rule on a uniform grid.
pub fn trapezoid(values: &[f64], dt: f64) -> f64 {
    match values {
        [] | [_] => 0.0,
        [first, inner @ .., last] => dt * (0.5 * (first + last) + inner.iter().sum::<f64>()),
    }
}

/// Running trapezoid integral, starting at 0.
pub fn cumulative_trapezoid(values: &[f64], dt: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    for (k, v) in values.iter().enumerate() {
        if k > 0 {
            acc += 0.5 * dt * (values[k - 1] + v);
        }
        out.push(acc);
    }
    out
}

/// A matrix-valued curve sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorCurve {
    grid: TimeGrid,
    samples: Vec<CMat>,
    junctions: Vec<usize>,
}

impl OperatorCurve {
    pub fn new(tau: f64, samples: Vec<CMat>) -> Result<Self> {
        let grid = TimeGrid::new(tau, samples.len())?;
        let (r, c) = samples[0].shape();
        if let Some(bad) = samples.iter().find(|s| s.shape() != (r, c)) {
            return Err(Error::ShapeMismatch(format!(
                "sample of shape {:?} in a curve of {r}x{c} matrices",
                bad.shape()
            )));
        }
        Ok(Self { grid, samples, junctions: Vec::new() })
    }

    pub fn from_fn(tau: f64, n: usize, f: impl Fn(f64) -> CMat) -> Result<Self> {
        let grid = TimeGrid::new(tau, n)?;
        Self::new(tau, grid.times().into_iter().map(f).collect())
    }

    pub fn constant(m: CMat, tau: f64, n: usize) -> Result<Self> {
        Self::new(tau, vec![m; n])
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn tau(&self) -> f64 {
        self.grid.tau
    }

    pub fn dt(&self) -> f64 {
        self.grid.dt()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[CMat] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<CMat> {
        self.samples
    }

    pub fn first(&self) -> &CMat {
        &self.samples[0]
    }

    pub fn last(&self) -> &CMat {
        &self.samples[self.samples.len() - 1]
    }

    pub fn shape(&self) -> (usize, usize) {
        self.samples[0].shape()
    }

    /// Sample indices at which two smooth pieces meet.
    pub fn junctions(&self) -> &[usize] {
        &self.junctions
    }

    /// Index ranges of the smooth segments; adjacent segments share their
    /// junction sample.
    pub fn segments(&self) -> Vec<RangeInclusive<usize>> {
        let mut out = Vec::new();
        let mut start = 0;
        for &j in &self.junctions {
            out.push(start..=j);
            start = j;
        }
        out.push(start..=self.len() - 1);
        out
    }

    /// `‖c(τ) − c(0)‖`.
    pub fn closure_gap(&self) -> f64 {
        frobenius(&(self.last() - self.first()))
    }

    pub fn derivatives(&self) -> Vec<CMat> {
        differentiate(&self.samples, self.dt(), &self.segments())
    }

    pub fn map(&self, f: impl Fn(&CMat) -> CMat) -> Result<Self> {
        let mut out = Self::new(self.tau(), self.samples.iter().map(f).collect())?;
        out.junctions = self.junctions.clone();
        Ok(out)
    }
}

/// `c1 ∗ c2`: traverse `c1`, then `c2`. Both grids must share the step size.
pub fn concatenate(c1: &OperatorCurve, c2: &OperatorCurve) -> Result<OperatorCurve> {
    if c1.shape() != c2.shape() {
        return Err(Error::ShapeMismatch(format!("{:?} vs {:?}", c1.shape(), c2.shape())));
    }
    let gap = frobenius(&(c1.last() - c2.first()));
    if !(gap <= JUNCTION_TOL) {
        return Err(Error::EndpointMismatch { gap });
    }
    let (h1, h2) = (c1.dt(), c2.dt());
    if (h1 - h2).abs() > 1e-12 * h1.max(h2) {
        return Err(Error::GridMismatch(format!("step sizes {h1} and {h2} differ")));
    }
    let mut samples = c1.samples.clone();
    samples.extend(c2.samples[1..].iter().cloned());
    let offset = c1.len() - 1;
    let mut junctions = c1.junctions.clone();
    junctions.push(offset);
    junctions.extend(c2.junctions.iter().map(|j| j + offset));
    let mut out = OperatorCurve::new(c1.tau() + c2.tau(), samples)?;
    out.junctions = junctions;
    Ok(out)
}

/// The time-reversed curve `t ↦ c(τ − t)`.
pub fn reverse(c: &OperatorCurve) -> OperatorCurve {
    let last = c.len() - 1;
    let mut junctions: Vec<usize> = c.junctions.iter().map(|j| last - j).collect();
    junctions.reverse();
    OperatorCurve {
        grid: c.grid,
        samples: c.samples.iter().rev().cloned().collect(),
        junctions,
    }
}

/// Original-time values `t(s_k)` at which a curve with the given speed
/// profile has travelled the fraction `k / (N − 1)` of its length.
pub fn arclength_times(grid: TimeGrid, speed: &[f64]) -> Result<Vec<f64>> {
    if speed.len() != grid.len() {
        return Err(Error::LengthMismatch { left: speed.len(), right: grid.len() });
    }
    if let Some(&bad) = speed.iter().find(|s| !(**s >= 0.0)) {
        return Err(Error::OutOfRange { value: bad, range: "speed >= 0" });
    }
    let s = cumulative_trapezoid(speed, grid.dt());
    let total = s[s.len() - 1];
    if !(total > 0.0) {
        return Err(Error::ZeroLength);
    }
    let n = grid.len();
    let mut out = Vec::with_capacity(n);
    let mut i = 0;
    for k in 0..n {
        let target = total * k as f64 / (n - 1) as f64;
        while i + 2 < n && s[i + 1] < target {
            i += 1;
        }
        let ds = s[i + 1] - s[i];
        let frac = if ds > 0.0 { ((target - s[i]) / ds).clamp(0.0, 1.0) } else { 0.0 };
        out.push(grid.t(i) + frac * grid.dt());
    }
    out[0] = 0.0;
    out[n - 1] = grid.tau();
    Ok(out)
}

/// Resamples `c` proportionally to arc length by linear interpolation
/// between neighbouring samples. The result has the same grid; junction
/// markers are dropped.
pub fn reparam_arclength(c: &OperatorCurve, speed: &[f64]) -> Result<OperatorCurve> {
    let times = arclength_times(c.grid, speed)?;
    let dt = c.dt();
    let last = c.len() - 1;
    let samples = times
        .iter()
        .map(|&t| {
            let x = t / dt;
            let i = (x.floor() as usize).min(last - 1);
            let frac = x - i as f64;
            c.samples[i].scale(1.0 - frac) + c.samples[i + 1].scale(frac)
        })
        .collect();
    OperatorCurve::new(c.tau(), samples)
}

/// A path of eigenvalue spectra with fixed multiplicities.
///
/// Samples must be positive, normalized and non-increasing; neighbouring
/// eigenvalues may touch one another.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityPath {
    grid: TimeGrid,
    p: Vec<Vec<f64>>,
    m: DegeneracySpectrum,
}

/// Normalization tolerance for sampled spectra.
pub const PATH_NORM_TOL: f64 = 1e-8;

impl ProbabilityPath {
    pub fn new(tau: f64, p: Vec<Vec<f64>>, m: DegeneracySpectrum) -> Result<Self> {
        let grid = TimeGrid::new(tau, p.len())?;
        for sample in &p {
            validate_with(&EigenvalueSpectrum(sample.clone()), &m, -DEFAULT_GAP_TOL, PATH_NORM_TOL)?;
        }
        Ok(Self { grid, p, m })
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.p
    }

    pub fn degeneracy(&self) -> &DegeneracySpectrum {
        &self.m
    }

    /// Squared Fisher–Rao speed `¼ Σ m_j ṗ_j² / p_j` at every sample.
    pub fn speed_squared(&self) -> Vec<f64> {
        let l = self.m.len();
        let dt = self.grid.dt();
        let seg = [0..=self.p.len() - 1];
        let rates: Vec<Vec<f64>> = (0..l)
            .map(|j| {
                let series: Vec<f64> = self.p.iter().map(|s| s[j]).collect();
                differentiate(&series, dt, &seg)
            })
            .collect();
        (0..self.p.len())
            .map(|k| {
                0.25 * (0..l)
                    .map(|j| self.m.as_slice()[j] as f64 * rates[j][k].powi(2) / self.p[k][j])
                    .sum::<f64>()
            })
            .collect()
    }
}

/// Fisher–Rao length and kinetic energy `(L_FR, E_FR)` of an eigenvalue path.
pub fn fisher_rao(path: &ProbabilityPath) -> (f64, f64) {
    let v2 = path.speed_squared();
    let dt = path.grid.dt();
    let speed: Vec<f64> = v2.iter().map(|v| v.sqrt()).collect();
    (trapezoid(&speed, dt), 0.5 * trapezoid(&v2, dt))
}
