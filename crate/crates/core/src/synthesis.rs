//! Closed evolutions whose length equals the isoholonomic bound of a
//! prescribed holonomy.
//!
//! Each eigenvector `|ψ_ja⟩` of the base state is moved around an optimal
//! pure-state loop in its own two-dimensional plane `H_ja`, spanned by
//! `|ψ_ja⟩` and a partner vector from the kernel of the state. The planes are
//! mutually orthogonal, so the loops do not interact.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bundle::{holonomy_of_lift, horizontal_lift, project, Amplitude, GaugeElement, CLOSURE_TOL};
use crate::curves::{trapezoid, OperatorCurve, TimeGrid};
use crate::dynamics::{evolve, split_hamiltonian, uncertainty, HamiltonianSchedule};
use crate::error::{Error, Result};
use crate::invariants::{curve_length_energy, ihb_isospectral, wrap_phase, PhaseSpectrum, DEFAULT_PHASE_TOL};
use crate::linalg::{commutator, frobenius, orthonormal_columns, propagator_step, real, unitary_eig, CMat, CVec, DEFAULT_GAP_TOL};
use crate::spectra::{join_columns, spectral_decompose, DensityOperator, EigenprojectorBasis};

/// Default number of samples for synthesized runs.
pub const DEFAULT_SAMPLES: usize = 4001;

pub const HOLONOMY_TOL: f64 = 1e-6;
pub const LENGTH_TOL: f64 = 1e-5;
pub const INCOHERENT_TOL: f64 = 1e-9;
pub const UNCERTAINTY_TOL: f64 = 1e-6;

/// Optimal loop in the plane `span{ψ, φ}` that returns `ψ` with the phase
/// `e^{iθ}` after time `τ`.
///
/// The generator is `a₊|e₊⟩⟨e₊| + a₋|e₋⟩⟨e₋|` with `a₊ = (2π − θ)/τ`,
/// `a₋ = −θ/τ`, `|e₊⟩ = cos χ|ψ⟩ + sin χ|φ⟩`, `|e₋⟩ = sin χ|ψ⟩ − cos χ|φ⟩`
/// and `cos²χ = θ/2π`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureLoopSpec {
    theta: f64,
    tau: f64,
    psi: CVec,
    phi: CVec,
}

impl PureLoopSpec {
    pub fn new(theta: f64, tau: f64, psi: CVec, phi: CVec) -> Result<Self> {
        if !(0.0..2.0 * PI).contains(&theta) {
            return Err(Error::OutOfRange { value: theta, range: "[0, 2pi)" });
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::OutOfRange { value: tau, range: "(0, inf)" });
        }
        if psi.len() != phi.len() {
            return Err(Error::LengthMismatch { left: psi.len(), right: phi.len() });
        }
        let deviation = (psi.norm() - 1.0).abs().max((phi.norm() - 1.0).abs()).max(psi.dotc(&phi).norm());
        if deviation > 1e-10 {
            return Err(Error::ShapeMismatch(format!("plane vectors are not orthonormal (deviation {deviation:.3e})")));
        }
        Ok(Self { theta, tau, psi, phi })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn psi(&self) -> &CVec {
        &self.psi
    }

    pub fn phi(&self) -> &CVec {
        &self.phi
    }

    pub fn a_plus(&self) -> f64 {
        (2.0 * PI - self.theta) / self.tau
    }

    pub fn a_minus(&self) -> f64 {
        -self.theta / self.tau
    }

    /// `χ ∈ [0, π/2]` with `cos²χ = θ/2π`.
    pub fn chi(&self) -> f64 {
        (self.theta / (2.0 * PI)).sqrt().acos()
    }

    pub fn e_plus(&self) -> CVec {
        let chi = self.chi();
        &self.psi * real(chi.cos()) + &self.phi * real(chi.sin())
    }

    pub fn e_minus(&self) -> CVec {
        let chi = self.chi();
        &self.psi * real(chi.sin()) - &self.phi * real(chi.cos())
    }

    /// The generator on the ambient space (zero off the plane).
    pub fn generator(&self) -> CMat {
        if self.theta == 0.0 {
            return CMat::zeros(self.psi.len(), self.psi.len());
        }
        let (ep, em) = (self.e_plus(), self.e_minus());
        &ep * ep.adjoint() * real(self.a_plus()) + &em * em.adjoint() * real(self.a_minus())
    }

    /// `√(θ(2π − θ)) / τ`.
    pub fn speed(&self) -> f64 {
        (self.theta * (2.0 * PI - self.theta)).sqrt() / self.tau
    }
}

/// Generator and the sampled loop `ψ_t = e^{−iGt} ψ` (as `n x 1` matrices).
pub fn optimal_pure_loop(spec: &PureLoopSpec, samples: usize) -> Result<(CMat, OperatorCurve)> {
    let g = spec.generator();
    let psi = CMat::from_column_slice(spec.psi.len(), 1, spec.psi.as_slice());
    let curve = OperatorCurve::from_fn(spec.tau, samples, |t| propagator_step(&g, t).expect("Hermitian generator") * &psi)?;
    Ok((g, curve))
}

/// One partner vector per basis slot, orthonormal and orthogonal to the
/// support of `rho`, obtained by orthonormalizing the standard basis.
fn partners(rho: &DensityOperator, count: usize) -> CMat {
    let n = rho.dim();
    let support = rho.support_frame();
    let mut candidates = CMat::zeros(n, support.ncols() + n);
    candidates.view_mut((0, 0), support.shape()).copy_from(&support);
    candidates.view_mut((0, support.ncols()), (n, n)).copy_from(&CMat::identity(n, n));
    let q = orthonormal_columns(&candidates, 1e-8);
    q.columns(support.ncols(), count).into_owned()
}

/// Mutually orthogonal planes `(ψ_ja, φ_ja)` with `ψ_ja = p_j^{−1/2} W|ja⟩`
/// in basis order.
pub fn choose_planes(rho: &DensityOperator, w: &Amplitude, ambient_dim: usize) -> Result<Vec<(CVec, CVec)>> {
    let r = rho.rank();
    if ambient_dim < 2 * r || rho.dim() < 2 * r {
        return Err(Error::DimensionTooSmall { ambient: ambient_dim.min(rho.dim()), rank: r });
    }
    if rho.dim() != ambient_dim {
        return Err(Error::DimMismatch { expected: ambient_dim, found: rho.dim() });
    }
    let p = w.spectrum();
    let phi = partners(rho, r);
    let frame = w.basis().frame();
    let mut out = Vec::with_capacity(r);
    for (k, (j, _)) in w.basis().labels().into_iter().enumerate() {
        let psi: CVec = (w.matrix() * frame.column(k)).unscale(p[j].sqrt());
        out.push((psi, phi.column(k).into_owned()));
    }
    Ok(out)
}

/// A saturating evolution together with everything needed to verify it.
#[derive(Debug, Clone)]
pub struct SaturatingPlan {
    /// Base state on the ambient space.
    pub rho: DensityOperator,
    /// Base amplitude (zero padded) in the original basis.
    pub amplitude: Amplitude,
    /// Eigenbasis of the target, adapted to the blocks.
    pub adapted_basis: EigenprojectorBasis,
    pub target: GaugeElement,
    pub tau: f64,
    /// One loop per slot of the adapted basis.
    pub loops: Vec<PureLoopSpec>,
    pub phases: PhaseSpectrum,
    #[doc(alias = "iHB")]
    pub ihb: f64,
    /// Time-independent generator `Σ G_ja`.
    pub generator: CMat,
    pub schedule: HamiltonianSchedule,
    /// `H − Π_0 H Π_0` along the run: same state curve, state coherent.
    pub coherent_schedule: HamiltonianSchedule,
}

/// Builds a closed curve through `ρ` with holonomy `target` at `W` whose
/// length equals `iHB(p; target)`.
pub fn synthesize(
    rho: &DensityOperator,
    w: &Amplitude,
    target: &GaugeElement,
    tau: f64,
    ambient_dim: usize,
    samples: usize,
) -> Result<SaturatingPlan> {
    let r = rho.rank();
    if ambient_dim < 2 * r {
        return Err(Error::DimensionTooSmall { ambient: ambient_dim, rank: r });
    }
    if ambient_dim < rho.dim() {
        return Err(Error::DimMismatch { expected: rho.dim(), found: ambient_dim });
    }
    if target.basis() != w.basis() {
        return Err(Error::GaugeViolation { deviation: frobenius(&(target.basis().frame() - w.basis().frame())) });
    }
    let gap = frobenius(&(project(w).matrix - &rho.matrix));
    if !(gap <= CLOSURE_TOL) {
        return Err(Error::EndpointMismatch { gap });
    }
    let grid = TimeGrid::new(tau, samples)?;

    let amplitude = w.padded(ambient_dim);
    let rho = project(&amplitude);
    let basis = w.basis();
    let m = basis.degeneracy().clone();

    let mut adapted_blocks = Vec::with_capacity(m.len());
    let mut phases = Vec::with_capacity(m.len());
    for j in 0..m.len() {
        let (values, q) = unitary_eig(&target.block(j))?;
        adapted_blocks.push(basis.block(j) * q);
        phases.push(values.iter().map(|z| wrap_phase(z.arg(), DEFAULT_PHASE_TOL)).collect::<Vec<_>>());
    }
    let adapted_frame = join_columns(&adapted_blocks, basis.dim());
    let adapted_basis = EigenprojectorBasis::with_frame(m.clone(), crate::linalg::polar_unitary(&adapted_frame)?)?;
    let adapted = Amplitude::new(amplitude.matrix().clone(), adapted_basis.clone())?;
    let planes = choose_planes(&rho, &adapted, ambient_dim)?;

    let flat: Vec<f64> = phases.iter().flatten().copied().collect();
    let loops = planes
        .into_iter()
        .zip(&flat)
        .map(|((psi, phi), &theta)| PureLoopSpec::new(theta, tau, psi, phi))
        .collect::<Result<Vec<_>>>()?;
    let mut generator = CMat::zeros(ambient_dim, ambient_dim);
    for l in &loops {
        generator += l.generator();
    }
    let phases = PhaseSpectrum(phases);
    let ihb = ihb_isospectral(&rho.p, &phases)?;

    let schedule = HamiltonianSchedule::constant(generator.clone(), tau, samples)?;
    let pk = rho.kernel_projector();
    let coherent = grid
        .times()
        .into_iter()
        .map(|t| {
            let u = propagator_step(&generator, t)?;
            let p0 = &u * &pk * u.adjoint();
            let h = &generator - &p0 * &generator * &p0;
            Ok(crate::linalg::hermitian_part(&h))
        })
        .collect::<Result<Vec<_>>>()?;
    let coherent_schedule = HamiltonianSchedule::new(tau, coherent)?;

    log::info!("synthesized plan: rank {r}, ambient {ambient_dim}, iHB {ihb:.6}");
    Ok(SaturatingPlan {
        rho,
        amplitude,
        adapted_basis,
        target: target.clone(),
        tau,
        loops,
        phases,
        ihb,
        generator,
        schedule,
        coherent_schedule,
    })
}

/// Measured quantities of a synthesized run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaturationReport {
    pub tau: f64,
    #[serde(rename = "iHB")]
    pub ihb: f64,
    #[serde(rename = "L")]
    pub length: f64,
    /// `‖Γ − target‖`.
    pub holonomy_error: f64,
    /// `|L − iHB|`.
    pub length_error: f64,
    /// Largest `‖H_in‖` of the coherent schedule.
    pub max_h_in: f64,
    /// Largest `‖[H'_t − H, ρ_t]‖`: both generators move the state alike.
    pub max_generator_mismatch: f64,
    /// Largest `|ΔH_t − iHB/τ|`.
    pub uncertainty_error: f64,
    #[serde(rename = "delta_E")]
    pub delta_e: f64,
    /// `|τ ΔE − L|`.
    pub energy_length_error: f64,
    /// `|τ − iHB/ΔE|` (0 when both vanish).
    pub speed_limit_error: f64,
}

impl SaturationReport {
    /// Violated assertions, empty when the plan saturates the bound.
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut check = |ok: bool, what: String| {
            if !ok {
                out.push(what);
            }
        };
        check(self.holonomy_error <= HOLONOMY_TOL, format!("holonomy error {:.3e}", self.holonomy_error));
        check(self.length_error <= LENGTH_TOL, format!("|L - iHB| = {:.3e}", self.length_error));
        check(self.max_h_in <= INCOHERENT_TOL, format!("|H_in| = {:.3e}", self.max_h_in));
        check(self.max_generator_mismatch <= INCOHERENT_TOL, format!("generator mismatch {:.3e}", self.max_generator_mismatch));
        check(self.uncertainty_error <= UNCERTAINTY_TOL, format!("|dH - iHB/tau| = {:.3e}", self.uncertainty_error));
        check(self.energy_length_error <= LENGTH_TOL, format!("|tau dE - L| = {:.3e}", self.energy_length_error));
        check(self.speed_limit_error <= LENGTH_TOL, format!("|tau - iHB/dE| = {:.3e}", self.speed_limit_error));
        out
    }
}

/// Runs the plan and measures holonomy, length and uncertainties.
pub fn saturation_report(plan: &SaturatingPlan) -> Result<SaturationReport> {
    let ev = evolve(&plan.rho, &plan.schedule)?;
    let lift = horizontal_lift(&ev.states, &plan.amplitude)?;
    let gamma = holonomy_of_lift(&lift)?;
    let holonomy_error = gamma.distance(&plan.target);
    let (length, _) = curve_length_energy(&ev.states)?;

    let tau = plan.tau;
    let expected = plan.ihb / tau;
    let (mut max_h_in, mut mismatch, mut uncertainty_error) = (0.0f64, 0.0f64, 0.0f64);
    let mut delta_h = Vec::with_capacity(ev.states.len());
    for (rho, h) in ev.states.samples().iter().zip(plan.coherent_schedule.samples()) {
        let d = spectral_decompose(rho, DEFAULT_GAP_TOL)?;
        let (h_in, _) = split_hamiltonian(h, &d)?;
        max_h_in = max_h_in.max(frobenius(&h_in));
        mismatch = mismatch.max(frobenius(&commutator(&(h - &plan.generator), rho)));
        let u = uncertainty(&d, h)?;
        uncertainty_error = uncertainty_error.max((u.total - expected).abs());
        delta_h.push(u.total);
    }
    let delta_e = trapezoid(&delta_h, ev.states.dt()) / tau;
    let bound = if plan.ihb == 0.0 && delta_e == 0.0 { tau } else { plan.ihb / delta_e };
    Ok(SaturationReport {
        tau,
        ihb: plan.ihb,
        length,
        holonomy_error,
        length_error: (length - plan.ihb).abs(),
        max_h_in,
        max_generator_mismatch: mismatch,
        uncertainty_error,
        delta_e,
        energy_length_error: (tau * delta_e - length).abs(),
        speed_limit_error: if plan.ihb == 0.0 { 0.0 } else { (tau - bound).abs() },
    })
}

/// [`saturation_report`], failing with [`Error::SaturationFailed`] when any
/// assertion is violated.
pub fn verify_saturation(plan: &SaturatingPlan) -> Result<SaturationReport> {
    let report = saturation_report(plan)?;
    let failures = report.failures();
    if failures.is_empty() {
        Ok(report)
    } else {
        Err(Error::SaturationFailed(failures.join("; ")))
    }
}
