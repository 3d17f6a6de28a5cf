//! Holonomy invariants and the isoholonomic inequalities.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bundle::{
    decompose_curve, holonomy_of_lift, horizontal_lift_with, metric_g_with, Amplitude, GaugeElement,
    HorizontalLift, CLOSURE_TOL,
};
use crate::curves::{fisher_rao, trapezoid, OperatorCurve, ProbabilityPath};
use crate::error::{Error, Result};
use crate::linalg::{unitary_eig, C64, DEFAULT_GAP_TOL};
use crate::spectra::{check_bound, spectral_decompose, EigenvalueSpectrum, SpectralBound};

/// Eigenphases this close to `2π` are reported as 0.
pub const DEFAULT_PHASE_TOL: f64 = 1e-7;
/// Geometric phases are undefined when `|tr| ≤` this.
pub const TRACE_TOL: f64 = 1e-9;
/// Allowed negative slack before an inequality is reported as violated.
pub const SLACK_TOL: f64 = 1e-6;
/// Relative tangency tolerance for finite-difference velocities.
pub const FD_TANGENT_TOL: f64 = 1e-2;
/// Spectra varying by less than this along a curve count as constant.
pub const ISOSPECTRAL_TOL: f64 = 1e-8;

/// Holonomy eigenphases per block, each in `[0, 2π)`, descending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PhaseSpectrum(pub Vec<Vec<f64>>);

impl PhaseSpectrum {
    pub fn blocks(&self) -> &[Vec<f64>] {
        &self.0
    }

    pub fn flat(&self) -> Vec<f64> {
        self.0.iter().flatten().copied().collect()
    }

    pub fn is_trivial(&self) -> bool {
        self.0.iter().flatten().all(|&t| t == 0.0)
    }
}

/// Maps an angle to `[0, 2π)`, sending values within `phase_tol` of `2π` to 0.
pub fn wrap_phase(theta: f64, phase_tol: f64) -> f64 {
    let t = theta.rem_euclid(2.0 * PI);
    if t >= 2.0 * PI - phase_tol || t < 0.0 {
        0.0
    } else {
        t
    }
}

pub fn eigenphases(u: &GaugeElement) -> Result<PhaseSpectrum> {
    eigenphases_with(u, DEFAULT_PHASE_TOL)
}

pub fn eigenphases_with(u: &GaugeElement, phase_tol: f64) -> Result<PhaseSpectrum> {
    let blocks = (0..u.basis().degeneracy().len())
        .map(|j| {
            let (values, _) = unitary_eig(&u.block(j))?;
            let mut theta: Vec<f64> = values.iter().map(|z| wrap_phase(z.arg(), phase_tol)).collect();
            theta.sort_by(|a, b| b.total_cmp(a));
            Ok(theta)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PhaseSpectrum(blocks))
}

/// `√(θ(2π − θ))`.
pub fn pure_ihb(theta: f64) -> Result<f64> {
    if !(0.0..2.0 * PI).contains(&theta) {
        return Err(Error::OutOfRange { value: theta, range: "[0, 2pi)" });
    }
    Ok((theta * (2.0 * PI - theta)).sqrt())
}

fn weighted_bound(weights: &[f64], phases: &PhaseSpectrum) -> Result<f64> {
    if weights.len() != phases.0.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} weights for {} phase blocks",
            weights.len(),
            phases.0.len()
        )));
    }
    let sum: f64 = weights
        .iter()
        .zip(&phases.0)
        .map(|(w, block)| w * block.iter().map(|t| t * (2.0 * PI - t)).sum::<f64>())
        .sum();
    Ok(sum.max(0.0).sqrt())
}

/// `iHB(p; U) = √(Σ_j Σ_a p_j θ_ja (2π − θ_ja))`.
pub fn ihb_isospectral(p: &EigenvalueSpectrum, phases: &PhaseSpectrum) -> Result<f64> {
    weighted_bound(p.as_slice(), phases)
}

/// `iHB(α; U) = √(Σ_j Σ_a α_j θ_ja (2π − θ_ja))`.
pub fn ihb_constrained(alpha: &SpectralBound, phases: &PhaseSpectrum) -> Result<f64> {
    weighted_bound(alpha.as_slice(), phases)
}

/// `tr U`.
pub fn wilson_loop(u: &GaugeElement) -> C64 {
    u.matrix().trace()
}

/// `arg tr(W_0† W_τ)` on a completed lift, in `(−π, π]`.
pub fn geometric_phase_of_lift(lift: &HorizontalLift) -> Result<f64> {
    principal_arg((lift.first().adjoint() * lift.last()).trace())
}

/// The blockwise form `arg Σ_j √(p_{j;0} p_{j;τ}) Σ_a ⟨ψ_ja;0|ψ_ja;τ⟩` on the
/// transported frames of a lift.
pub fn geometric_phase_frames(lift: &HorizontalLift) -> Result<f64> {
    let (f0, f1) = (&lift.frames[0], &lift.frames[lift.frames.len() - 1]);
    let (p0, p1) = (&lift.spectra[0], &lift.spectra[lift.spectra.len() - 1]);
    let z: C64 = (0..f0.len())
        .map(|j| (f0[j].adjoint() * &f1[j]).trace() * (p0[j] * p1[j]).sqrt())
        .sum();
    principal_arg(z)
}

fn principal_arg(z: C64) -> Result<f64> {
    if !(z.norm() > TRACE_TOL) {
        return Err(Error::UndefinedPhase { modulus: z.norm() });
    }
    let a = z.arg();
    Ok(if a <= -PI { PI } else { a })
}

/// `θ_geo = arg tr(W_0† W_τ)` for the horizontal lift of `curve` through `w0`.
pub fn geometric_phase(curve: &OperatorCurve, w0: &Amplitude) -> Result<f64> {
    let lift = horizontal_lift_with(curve, w0, DEFAULT_GAP_TOL)?;
    geometric_phase_of_lift(&lift)
}

/// Metric speeds `√g(ρ̇, ρ̇)` at every sample, using finite-difference velocities.
pub fn speeds(curve: &OperatorCurve, gap_tol: f64) -> Result<Vec<f64>> {
    Ok(speeds_squared(curve, gap_tol)?.into_iter().map(f64::sqrt).collect())
}

pub fn speeds_squared(curve: &OperatorCurve, gap_tol: f64) -> Result<Vec<f64>> {
    let first = spectral_decompose(curve.first(), gap_tol)?;
    let decomps = decompose_curve(curve, &first.m, gap_tol)?;
    decomps
        .iter()
        .zip(curve.derivatives())
        .map(|(d, rhodot)| metric_g_with(d, &rhodot, &rhodot, FD_TANGENT_TOL))
        .collect()
}

/// `(L, E)` with `L = ∫ √g(ρ̇, ρ̇) dt` and `E = ½ ∫ g(ρ̇, ρ̇) dt`.
pub fn curve_length_energy(curve: &OperatorCurve) -> Result<(f64, f64)> {
    curve_length_energy_with(curve, DEFAULT_GAP_TOL)
}

pub fn curve_length_energy_with(curve: &OperatorCurve, gap_tol: f64) -> Result<(f64, f64)> {
    let g = speeds_squared(curve, gap_tol)?;
    let speed: Vec<f64> = g.iter().map(|v| v.sqrt()).collect();
    Ok((trapezoid(&speed, curve.dt()), 0.5 * trapezoid(&g, curve.dt())))
}

/// Result of [`check_isoholonomic`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsoReport {
    #[serde(rename = "L")]
    pub length: f64,
    #[serde(rename = "L_FR")]
    pub length_fr: f64,
    /// `iHB(p_0; Γ)` with the spectrum at the base point.
    #[serde(rename = "iHB")]
    pub ihb: f64,
    #[serde(rename = "iHB_alpha")]
    pub ihb_alpha: Option<f64>,
    /// `L − iHB`.
    pub slack: f64,
    /// `L² − (L_FR² + iHB_α²)`, present when a bound is given.
    pub strong_slack: Option<f64>,
    /// Holonomy matrix as `[re, im]` rows.
    pub holonomy: Vec<Vec<[f64; 2]>>,
    pub phases: PhaseSpectrum,
    /// Whether the spectrum stays constant along the curve.
    pub isospectral: bool,
    pub geometric_phase: Option<f64>,
}

/// Options for [`check_isoholonomic_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckOptions {
    pub gap_tol: f64,
    pub phase_tol: f64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self { gap_tol: DEFAULT_GAP_TOL, phase_tol: DEFAULT_PHASE_TOL }
    }
}

pub fn check_isoholonomic(
    curve: &OperatorCurve,
    w0: &Amplitude,
    alpha: Option<&SpectralBound>,
) -> Result<IsoReport> {
    check_isoholonomic_with(curve, w0, alpha, CheckOptions::default())
}

/// Holonomy, length, Fisher–Rao length and isoholonomic bounds of a closed
/// curve, with the inequalities `L ≥ iHB(p; Γ)` (constant spectrum) and
/// `L² ≥ L_FR² + iHB(α; Γ)²` (given `α`) enforced up to [`SLACK_TOL`].
pub fn check_isoholonomic_with(
    curve: &OperatorCurve,
    w0: &Amplitude,
    alpha: Option<&SpectralBound>,
    opts: CheckOptions,
) -> Result<IsoReport> {
    let gap = curve.closure_gap();
    if !(gap <= CLOSURE_TOL) {
        return Err(Error::NotClosed { gap });
    }
    let lift = horizontal_lift_with(curve, w0, opts.gap_tol)?;
    let gamma = holonomy_of_lift(&lift)?;
    let phases = eigenphases_with(&gamma, opts.phase_tol)?;

    let g = speeds_squared(curve, opts.gap_tol)?;
    let speed: Vec<f64> = g.iter().map(|v| v.sqrt()).collect();
    let length = trapezoid(&speed, curve.dt());

    let m = w0.basis().degeneracy().clone();
    let path = ProbabilityPath::new(curve.tau(), lift.spectra.clone(), m)?;
    let (length_fr, _) = fisher_rao(&path);
    let p0 = EigenvalueSpectrum(lift.spectra[0].clone());
    let isospectral = lift
        .spectra
        .iter()
        .all(|p| p.iter().zip(p0.as_slice()).all(|(a, b)| (a - b).abs() <= ISOSPECTRAL_TOL));

    let ihb = ihb_isospectral(&p0, &phases)?;
    let slack = length - ihb;
    if isospectral && slack < -SLACK_TOL {
        return Err(Error::BoundViolated(format!("L = {length} < iHB = {ihb}")));
    }

    let (ihb_alpha, strong_slack) = match alpha {
        Some(a) => {
            for p in &lift.spectra {
                let bad = check_bound(&EigenvalueSpectrum(p.clone()), a)?;
                if !bad.is_empty() {
                    return Err(Error::SpectralBoundViolated { blocks: bad });
                }
            }
            let ia = ihb_constrained(a, &phases)?;
            let strong = length * length - (length_fr * length_fr + ia * ia);
            if strong < -SLACK_TOL {
                return Err(Error::BoundViolated(format!(
                    "L^2 = {} < L_FR^2 + iHB_alpha^2 = {}",
                    length * length,
                    length_fr * length_fr + ia * ia
                )));
            }
            if length - ia < -SLACK_TOL {
                return Err(Error::BoundViolated(format!("L = {length} < iHB_alpha = {ia}")));
            }
            (Some(ia), Some(strong))
        }
        None => (None, None),
    };

    Ok(IsoReport {
        length,
        length_fr,
        ihb,
        ihb_alpha,
        slack,
        strong_slack,
        holonomy: crate::io::matrix_to_rows(gamma.matrix()),
        phases,
        isospectral,
        geometric_phase: geometric_phase_of_lift(&lift).ok(),
    })
}
