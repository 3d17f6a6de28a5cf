//! Unitary evolution, the state-coherent/state-incoherent split of a
//! Hamiltonian, energy uncertainties and the cyclic speed limit.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bundle::{holonomy_of_lift, horizontal_lift_with, Amplitude, GaugeElement, CLOSURE_TOL};
use crate::curves::{trapezoid, OperatorCurve, TimeGrid};
use crate::error::{Error, Result};
use crate::invariants::{eigenphases_with, ihb_isospectral, speeds_squared, DEFAULT_PHASE_TOL, SLACK_TOL};
use crate::linalg::{c, eye, frobenius, hermitian_deviation, propagator_step, real, CMat, DEFAULT_GAP_TOL};
use crate::spectra::{spectral_decompose, DensityOperator, EigenvalueSpectrum};

/// Hermiticity tolerance for schedule samples.
pub const SCHEDULE_TOL: f64 = 1e-10;
/// Relative tolerance of the speed identity check with finite-difference
/// velocities.
pub const SPEED_IDENTITY_TOL: f64 = 1e-6;

/// Hamiltonians `H_k` sampled on a uniform grid (`ħ = 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianSchedule {
    curve: OperatorCurve,
}

impl HamiltonianSchedule {
    pub fn new(tau: f64, samples: Vec<CMat>) -> Result<Self> {
        let curve = OperatorCurve::new(tau, samples)?;
        for h in curve.samples() {
            let deviation = hermitian_deviation(h);
            if !(deviation <= SCHEDULE_TOL * (1.0 + frobenius(h))) {
                return Err(Error::NonHermitian { deviation });
            }
        }
        Ok(Self { curve })
    }

    /// The time-independent schedule `H_t = h` on `N` samples of `[0, τ]`.
    pub fn constant(h: CMat, tau: f64, n: usize) -> Result<Self> {
        Self::new(tau, vec![h; n])
    }

    pub fn grid(&self) -> TimeGrid {
        self.curve.grid()
    }

    pub fn samples(&self) -> &[CMat] {
        self.curve.samples()
    }

    pub fn dim(&self) -> usize {
        self.curve.shape().0
    }

    /// `H` at `t_k + dt/2` by linear interpolation.
    pub fn midpoint(&self, k: usize) -> CMat {
        let s = self.curve.samples();
        (&s[k] + &s[k + 1]).scale(0.5)
    }

    /// Whether all samples are identical.
    pub fn is_constant(&self) -> bool {
        let s = self.curve.samples();
        s.iter().all(|h| h == &s[0])
    }
}

/// Propagators `U_k` and states `ρ_k = U_k ρ_0 U_k†` of a unitary run.
#[derive(Debug, Clone)]
pub struct Evolution {
    pub propagators: OperatorCurve,
    pub states: OperatorCurve,
}

/// Steps `U_{k+1} = exp(−i H(t_k + dt/2) dt) U_k` from `U_0 = 1`.
pub fn evolve(rho0: &DensityOperator, sched: &HamiltonianSchedule) -> Result<Evolution> {
    let n = rho0.dim();
    if sched.dim() != n {
        return Err(Error::DimMismatch { expected: n, found: sched.dim() });
    }
    let grid = sched.grid();
    let dt = grid.dt();
    let mut u = eye(n);
    let mut props = Vec::with_capacity(grid.len());
    props.push(u.clone());
    // a constant schedule needs one exponential
    let fixed = if sched.is_constant() { Some(propagator_step(&sched.samples()[0], dt)?) } else { None };
    for k in 0..grid.len() - 1 {
        let step = match &fixed {
            Some(s) => s.clone(),
            None => propagator_step(&sched.midpoint(k), dt)?,
        };
        u = step * u;
        props.push(u.clone());
    }
    let states = props.iter().map(|u| u * &rho0.matrix * u.adjoint()).collect();
    Ok(Evolution {
        propagators: OperatorCurve::new(grid.tau(), props)?,
        states: OperatorCurve::new(grid.tau(), states)?,
    })
}

/// `(H_in, H_co)` with `H_in = Σ_{j=0..l} Π_j H Π_j` (kernel projector
/// included) and `H_co = H − H_in`.
pub fn split_hamiltonian(h: &CMat, rho: &DensityOperator) -> Result<(CMat, CMat)> {
    if h.shape() != (rho.dim(), rho.dim()) {
        return Err(Error::DimMismatch { expected: rho.dim(), found: h.nrows() });
    }
    let pk = rho.kernel_projector();
    let mut h_in = &pk * h * &pk;
    for j in 0..rho.p.len() {
        let pj = rho.projector(j);
        h_in += &pj * h * &pj;
    }
    let h_co = h - &h_in;
    Ok((h_in, h_co))
}

/// Energy uncertainties `(ΔH, ΔH_co, ΔH_in)` of `H` in `ρ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Uncertainty {
    pub total: f64,
    pub coherent: f64,
    pub incoherent: f64,
}

fn variance(rho: &CMat, h: &CMat) -> f64 {
    let rh = rho * h;
    let mean = rh.trace().re;
    ((&rh * h).trace().re - mean * mean).max(0.0)
}

pub fn uncertainty(rho: &DensityOperator, h: &CMat) -> Result<Uncertainty> {
    let (h_in, h_co) = split_hamiltonian(h, rho)?;
    Ok(Uncertainty {
        total: variance(&rho.matrix, h).sqrt(),
        coherent: variance(&rho.matrix, &h_co).sqrt(),
        incoherent: variance(&rho.matrix, &h_in).sqrt(),
    })
}

/// Cyclic speed-limit accounting for a closed unitary run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedLimitReport {
    pub tau: f64,
    /// `ΔE = (1/τ) ∫ ΔH_t dt`.
    #[serde(rename = "delta_E")]
    pub delta_e: f64,
    #[serde(rename = "iHB")]
    pub ihb: f64,
    /// `iHB / ΔE`.
    pub bound: f64,
    /// `τ − bound`.
    pub margin: f64,
    /// `L[ρ_t]`.
    #[serde(rename = "L")]
    pub length: f64,
    #[serde(rename = "delta_H")]
    pub delta_h: Vec<f64>,
    #[serde(rename = "delta_H_co")]
    pub delta_h_co: Vec<f64>,
    #[serde(rename = "delta_H_in")]
    pub delta_h_in: Vec<f64>,
    /// Largest relative deviation between `√g(ρ̇, ρ̇)` and `ΔH_co`.
    pub speed_identity_error: f64,
}

/// Speed-limit report for the closed curve `states` generated by `sched`.
pub fn speed_limit(states: &OperatorCurve, sched: &HamiltonianSchedule, w0: &Amplitude) -> Result<SpeedLimitReport> {
    speed_limit_with(states, sched, w0, DEFAULT_GAP_TOL, DEFAULT_PHASE_TOL)
}

pub fn speed_limit_with(
    states: &OperatorCurve,
    sched: &HamiltonianSchedule,
    w0: &Amplitude,
    gap_tol: f64,
    phase_tol: f64,
) -> Result<SpeedLimitReport> {
    let gap = states.closure_gap();
    if !(gap <= CLOSURE_TOL) {
        return Err(Error::NotClosed { gap });
    }
    if states.len() != sched.grid().len() || (states.tau() - sched.grid().tau()).abs() > 1e-12 * states.tau() {
        return Err(Error::GridMismatch("state curve and schedule use different grids".into()));
    }
    let lift = horizontal_lift_with(states, w0, gap_tol)?;
    let gamma = holonomy_of_lift(&lift)?;
    let phases = eigenphases_with(&gamma, phase_tol)?;
    let ihb = ihb_isospectral(&EigenvalueSpectrum(lift.spectra[0].clone()), &phases)?;

    let mut delta_h = Vec::with_capacity(states.len());
    let mut delta_h_co = Vec::with_capacity(states.len());
    let mut delta_h_in = Vec::with_capacity(states.len());
    for (rho, h) in states.samples().iter().zip(sched.samples()) {
        let d = spectral_decompose(rho, gap_tol)?;
        let u = uncertainty(&d, h)?;
        delta_h.push(u.total);
        delta_h_co.push(u.coherent);
        delta_h_in.push(u.incoherent);
    }
    let g = speeds_squared(states, gap_tol)?;
    let speed: Vec<f64> = g.iter().map(|v| v.sqrt()).collect();
    let scale = delta_h_co.iter().copied().fold(0.0, f64::max);
    let speed_identity_error = speed
        .iter()
        .zip(&delta_h_co)
        .map(|(v, d)| (v - d).abs() / scale.max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    if scale > 0.0 && speed_identity_error > SPEED_IDENTITY_TOL {
        return Err(Error::BoundViolated(format!(
            "metric speed deviates from the coherent uncertainty by {speed_identity_error:.3e} (relative)"
        )));
    }

    let dt = states.dt();
    let tau = states.tau();
    let length = trapezoid(&speed, dt);
    let delta_e = trapezoid(&delta_h, dt) / tau;
    let bound = if ihb == 0.0 { 0.0 } else { ihb / delta_e };
    let margin = tau - bound;
    if margin < -SLACK_TOL || tau * delta_e - length < -SLACK_TOL {
        return Err(Error::BoundViolated(format!("tau = {tau}, bound = {bound}, tau*dE = {}, L = {length}", tau * delta_e)));
    }
    Ok(SpeedLimitReport {
        tau,
        delta_e,
        ihb,
        bound,
        margin,
        length,
        delta_h,
        delta_h_co,
        delta_h_in,
        speed_identity_error,
    })
}

/// Lift of a unitary run driven only by the state-coherent part,
/// `Ẇ = −i H_co W`, in the interaction picture `W_t = U_t W_0 V_t` with
/// `V̇ = i M_t V`, `M_t = Σ_j Λ_j W_0⁺ U_t† H_t U_t W_0 Λ_j`. `V` is stepped
/// with midpoint exponentials.
pub fn coherent_lift(w0: &Amplitude, sched: &HamiltonianSchedule) -> Result<Vec<CMat>> {
    let n = w0.matrix().nrows();
    if sched.dim() != n {
        return Err(Error::DimMismatch { expected: n, found: sched.dim() });
    }
    let grid = sched.grid();
    let dt = grid.dt();
    let w = w0.matrix();
    let winv = crate::linalg::pinv(w)?;
    let projectors = w0.basis().projectors();
    let block_generator = |u: &CMat, h: &CMat| -> CMat {
        let x = &winv * u.adjoint() * h * u * w;
        let mut m = CMat::zeros(x.nrows(), x.ncols());
        for l in &projectors {
            m += l * &x * l;
        }
        crate::linalg::hermitian_part(&m)
    };
    let mut u = eye(n);
    let mut v = eye(w.ncols());
    let mut out = Vec::with_capacity(grid.len());
    out.push(w.clone());
    for k in 0..grid.len() - 1 {
        let h_mid = sched.midpoint(k);
        let half = propagator_step(&h_mid, 0.5 * dt)? * &u;
        let m = block_generator(&half, &h_mid);
        v = propagator_step(&(-m), dt)? * v;
        u = propagator_step(&h_mid, dt)? * u;
        out.push(&u * w * &v);
    }
    Ok(out)
}

/// Analytic values for a qubit driven by `H = (ω/2) n·σ` from
/// `ρ = diag(p0, 1 − p0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubitReference {
    pub n: [f64; 3],
    pub omega: f64,
    pub p0: f64,
    /// `2π/ω`.
    pub period: f64,
    /// `(π(1 + n3), π(1 − n3))` reduced to `[0, 2π)`.
    pub phases: [f64; 2],
    #[serde(rename = "iHB")]
    pub ihb: f64,
    #[serde(rename = "delta_E")]
    pub delta_e: f64,
    pub bound: f64,
    /// `τ ΔH_co`.
    #[serde(rename = "L")]
    pub length: f64,
    pub geometric_phase: f64,
    pub wilson_loop: [f64; 2],
}

/// Largest accepted deviation of `|n|` from 1.
pub const AXIS_TOL: f64 = 1e-9;

pub fn qubit_reference(n: [f64; 3], omega: f64, p0: f64) -> Result<QubitReference> {
    let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    if !((norm - 1.0).abs() <= AXIS_TOL) {
        return Err(Error::OutOfRange { value: norm, range: "|n| = 1" });
    }
    if n[0].hypot(n[1]) <= AXIS_TOL {
        return Err(Error::StationaryAxis);
    }
    if !(p0 > 0.5 && p0 < 1.0) {
        return Err(Error::InvalidP(p0));
    }
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::OutOfRange { value: omega, range: "(0, inf)" });
    }
    let n3 = n[2];
    let p1 = 1.0 - p0;
    let period = 2.0 * PI / omega;
    let phases = [(PI * (1.0 + n3)).rem_euclid(2.0 * PI), (PI * (1.0 - n3)).rem_euclid(2.0 * PI)];
    let ihb = PI * (1.0 - n3 * n3).sqrt();
    let delta_e = 0.5 * omega * (1.0 - n3 * n3 * (p0 - p1).powi(2)).sqrt();
    let z = num_complex::Complex64::from_polar(p0, phases[0]) + num_complex::Complex64::from_polar(p1, phases[1]);
    let wl = num_complex::Complex64::from_polar(1.0, phases[0]) + num_complex::Complex64::from_polar(1.0, phases[1]);
    Ok(QubitReference {
        n,
        omega,
        p0,
        period,
        phases,
        ihb,
        delta_e,
        bound: ihb / delta_e,
        length: period * 0.5 * omega * (1.0 - n3 * n3).sqrt(),
        geometric_phase: z.arg(),
        wilson_loop: [wl.re, wl.im],
    })
}

/// Unit axis `(√(1 − n3²), 0, n3)`.
pub fn qubit_axis(n3: f64) -> [f64; 3] {
    [(1.0 - n3 * n3).max(0.0).sqrt(), 0.0, n3]
}

/// `(ω/2) n·σ`.
pub fn qubit_hamiltonian(n: [f64; 3], omega: f64) -> CMat {
    CMat::from_row_slice(2, 2, &[real(n[2]), c(n[0], -n[1]), c(n[0], n[1]), real(-n[2])]).scale(0.5 * omega)
}

/// `diag(p0, 1 − p0)` on a qubit.
pub fn qubit_state(p0: f64) -> Result<DensityOperator> {
    spectral_decompose(&crate::linalg::diag_real(&[p0, 1.0 - p0]), DEFAULT_GAP_TOL)
}

/// Numerical run for one period of the qubit model.
#[derive(Debug, Clone)]
pub struct QubitRun {
    pub evolution: Evolution,
    pub holonomy: GaugeElement,
    pub report: SpeedLimitReport,
}

pub fn qubit_run(n: [f64; 3], omega: f64, p0: f64, samples: usize) -> Result<QubitRun> {
    let reference = qubit_reference(n, omega, p0)?;
    let rho = qubit_state(p0)?;
    let sched = HamiltonianSchedule::constant(qubit_hamiltonian(n, omega), reference.period, samples)?;
    let evolution = evolve(&rho, &sched)?;
    let basis = crate::spectra::EigenprojectorBasis::standard(rho.m.clone());
    let w0 = crate::bundle::canonical_amplitude(&rho, &basis)?;
    let lift = horizontal_lift_with(&evolution.states, &w0, DEFAULT_GAP_TOL)?;
    let holonomy = holonomy_of_lift(&lift)?;
    let report = speed_limit(&evolution.states, &sched, &w0)?;
    Ok(QubitRun { evolution, holonomy, report })
}
