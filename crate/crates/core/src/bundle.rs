//! The bundle `W ↦ W W†` from amplitudes onto density operators: gauge
//! group, connection form, horizontal/vertical splitting, the induced metric
//! and discrete horizontal lifts.
//!
//! Amplitudes are `dim H x dim K` matrices. The auxiliary space `K` carries
//! an [`EigenprojectorBasis`]; all block operations on `K` go through it.

use crate::curves::{OperatorCurve, TimeGrid};
use crate::error::{Error, Result};
use crate::linalg::{
    eye, frobenius, hs_inner, orthonormal_columns, pinv, polar_unitary, real, unitarity_deviation, CMat,
    DEFAULT_GAP_TOL, I,
};
use crate::spectra::{join_columns, spectral_decompose, DensityOperator, EigenprojectorBasis, EigenvalueSpectrum};

/// Tolerance on the block structure of `W†W` and of gauge elements.
pub const BLOCK_TOL: f64 = 1e-9;
/// Closure tolerance for holonomies.
pub const CLOSURE_TOL: f64 = 1e-8;
/// Off-block mass of a computed holonomy above which it is rejected.
pub const GAUGE_TOL: f64 = 1e-6;
/// Multiplicity changes are reported when a gap falls below this multiple of
/// the clustering tolerance.
pub const GAP_GUARD: f64 = 10.0;

/// Splits `m` (on `K`, in coordinates) into its block-diagonal part with
/// respect to `basis` and the norm of the remainder.
fn block_part(m: &CMat, basis: &EigenprojectorBasis) -> (CMat, f64) {
    let projectors = basis.projectors();
    let mut diag = CMat::zeros(m.nrows(), m.ncols());
    for l in &projectors {
        diag += l * m * l;
    }
    let off = frobenius(&(m - &diag));
    (diag, off)
}

/// An amplitude `W: K → H` whose `W†W` has eigenprojectors `Λ_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Amplitude {
    w: CMat,
    basis: EigenprojectorBasis,
}

impl Amplitude {
    /// Checks that `W†W = Σ p_j Λ_j` with strictly descending `p_j > 0`.
    pub fn new(w: CMat, basis: EigenprojectorBasis) -> Result<Self> {
        if w.ncols() != basis.dim() {
            return Err(Error::DimMismatch { expected: basis.dim(), found: w.ncols() });
        }
        let amp = Self { w, basis };
        let gram = amp.w.adjoint() * &amp.w;
        let p = amp.spectrum();
        let residual = frobenius(&(&gram - amp.basis.weighted(&p)));
        if !(residual <= BLOCK_TOL * (1.0 + frobenius(&gram))) {
            return Err(Error::NotAState(format!(
                "W\u{2020}W does not have the eigenprojector spectrum of the basis (residual {residual:.3e})"
            )));
        }
        if let Some(index) = p.windows(2).position(|w| !(w[0] > w[1])) {
            return Err(Error::NotDescending { index });
        }
        if let Some((block, &value)) = p.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Err(Error::NonPositiveEigenvalue { block, value });
        }
        Ok(amp)
    }

    pub(crate) fn unchecked(w: CMat, basis: EigenprojectorBasis) -> Self {
        Self { w, basis }
    }

    pub fn matrix(&self) -> &CMat {
        &self.w
    }

    pub fn basis(&self) -> &EigenprojectorBasis {
        &self.basis
    }

    /// Block eigenvalues `p_j = tr(Λ_j W†W) / m_j`.
    pub fn spectrum(&self) -> Vec<f64> {
        let m = self.basis.degeneracy().as_slice();
        (0..m.len())
            .map(|j| {
                let b = &self.w * self.basis.block(j);
                b.norm_squared() / m[j] as f64
            })
            .collect()
    }

    /// `W U` for a gauge element `U`.
    pub fn gauge(&self, u: &GaugeElement) -> Amplitude {
        Self { w: &self.w * &u.u, basis: self.basis.clone() }
    }

    /// Embeds `W` into a Hilbert space of dimension `dim` by zero padding.
    pub fn padded(&self, dim: usize) -> Amplitude {
        let mut w = CMat::zeros(dim, self.w.ncols());
        w.view_mut((0, 0), self.w.shape()).copy_from(&self.w);
        Self { w, basis: self.basis.clone() }
    }
}

/// A unitary on `K` commuting with every `Λ_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeElement {
    u: CMat,
    basis: EigenprojectorBasis,
}

impl GaugeElement {
    pub fn new(u: CMat, basis: EigenprojectorBasis) -> Result<Self> {
        if u.shape() != (basis.dim(), basis.dim()) {
            return Err(Error::DimMismatch { expected: basis.dim(), found: u.nrows() });
        }
        let (_, off) = block_part(&u, &basis);
        let deviation = off.max(unitarity_deviation(&u));
        if !(deviation <= BLOCK_TOL) {
            return Err(Error::GaugeViolation { deviation });
        }
        Ok(Self { u, basis })
    }

    pub fn identity(basis: EigenprojectorBasis) -> Self {
        Self { u: eye(basis.dim()), basis }
    }

    pub fn matrix(&self) -> &CMat {
        &self.u
    }

    pub fn basis(&self) -> &EigenprojectorBasis {
        &self.basis
    }

    /// Block `j` as an `m_j x m_j` unitary in the coordinates of the basis.
    pub fn block(&self, j: usize) -> CMat {
        let f = self.basis.block(j);
        f.adjoint() * &self.u * f
    }

    /// `self · other`.
    pub fn compose(&self, other: &GaugeElement) -> GaugeElement {
        Self { u: &self.u * &other.u, basis: self.basis.clone() }
    }

    pub fn inverse(&self) -> GaugeElement {
        Self { u: self.u.adjoint(), basis: self.basis.clone() }
    }

    /// `V† U V` on the auxiliary space `K'` related by `V: K' → K`.
    pub fn pulled_back(&self, v: &CMat) -> Result<GaugeElement> {
        let basis = self.basis.pulled_back(v)?;
        GaugeElement::new(v.adjoint() * &self.u * v, basis)
    }

    pub fn distance(&self, other: &GaugeElement) -> f64 {
        frobenius(&(&self.u - &other.u))
    }
}

/// True iff `u` is unitary and commutes with every `Λ_j` (within 1e-9).
pub fn gauge_membership(u: &CMat, basis: &EigenprojectorBasis) -> bool {
    GaugeElement::new(u.clone(), basis.clone()).is_ok()
}

/// A value of the connection form: a skew-Hermitian operator on `K` that
/// commutes with all `Λ_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionValue(pub CMat);

impl ConnectionValue {
    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        frobenius(&self.0)
    }
}

/// `ρ = W W†` with its spectral data read off the basis.
pub fn project(w: &Amplitude) -> DensityOperator {
    let p = w.spectrum();
    let n = w.w.nrows();
    let frames: Vec<CMat> = (0..p.len())
        .map(|j| (&w.w * w.basis.block(j)).unscale(p[j].sqrt()))
        .collect();
    let support = join_columns(&frames, n);
    let kernel = orthonormal_columns(&(eye(n) - &support * support.adjoint()), 1e-6);
    DensityOperator {
        matrix: &w.w * w.w.adjoint(),
        p: EigenvalueSpectrum(p),
        m: w.basis.degeneracy().clone(),
        frames,
        kernel,
    }
}

/// `W = Σ_j √p_j Ψ_j F_j†`, where `Ψ_j` are the eigenframes of `ρ` and `F_j`
/// the basis vectors of block `j`.
pub fn canonical_amplitude(rho: &DensityOperator, basis: &EigenprojectorBasis) -> Result<Amplitude> {
    if &rho.m != basis.degeneracy() {
        return Err(Error::DegeneracyMismatch {
            expected: basis.degeneracy().as_slice().to_vec(),
            found: rho.m.as_slice().to_vec(),
        });
    }
    Ok(Amplitude::unchecked(assemble(&rho.frames, rho.p.as_slice(), basis), basis.clone()))
}

fn assemble(frames: &[CMat], p: &[f64], basis: &EigenprojectorBasis) -> CMat {
    let n = frames[0].nrows();
    let mut w = CMat::zeros(n, basis.dim());
    for (j, f) in frames.iter().enumerate() {
        w += (f * basis.block(j).adjoint()).scale(p[j].sqrt());
    }
    w
}

fn require_same_shape(w: &Amplitude, wdot: &CMat) -> Result<()> {
    if w.w.shape() != wdot.shape() {
        return Err(Error::ShapeMismatch(format!("{:?} vs {:?}", w.w.shape(), wdot.shape())));
    }
    Ok(())
}

/// `A(Ẇ) = ½ Σ_j Λ_j (W⁺Ẇ − (W⁺Ẇ)†) Λ_j`.
pub fn connection_form(w: &Amplitude, wdot: &CMat) -> Result<ConnectionValue> {
    require_same_shape(w, wdot)?;
    let x = pinv(&w.w)? * wdot;
    let skew = (&x - x.adjoint()).scale(0.5);
    Ok(ConnectionValue(block_part(&skew, &w.basis).0))
}

/// `A(Ẇ) = Σ_j p_j⁻¹ Λ_j W†Ẇ Λ_j`, valid for tangents of the isospectral
/// amplitude space (`Ẇ†W = −W†Ẇ`).
pub fn connection_form_isospectral(w: &Amplitude, wdot: &CMat) -> Result<ConnectionValue> {
    require_same_shape(w, wdot)?;
    let x = w.w.adjoint() * wdot;
    let residual = frobenius(&(x.adjoint() + &x));
    if !(residual <= 1e-8 * (1.0 + frobenius(&x))) {
        return Err(Error::NotTangent { residual });
    }
    let p = w.spectrum();
    let mut a = CMat::zeros(x.nrows(), x.ncols());
    for (j, l) in w.basis.projectors().iter().enumerate() {
        a += (l * &x * l).unscale(p[j]);
    }
    Ok(ConnectionValue(a))
}

/// `(W A(Ẇ), Ẇ − W A(Ẇ))`.
pub fn split(w: &Amplitude, wdot: &CMat) -> Result<(CMat, CMat)> {
    let a = connection_form(w, wdot)?;
    let vertical = &w.w * a.0;
    let horizontal = wdot - &vertical;
    Ok((vertical, horizontal))
}

/// Basis of the real Lie algebra u(K; Λ).
pub fn gauge_algebra_basis(basis: &EigenprojectorBasis) -> Vec<CMat> {
    let mut out = Vec::new();
    let f = basis.frame();
    for j in 0..basis.degeneracy().len() {
        let r = basis.block_range(j);
        for a in r.clone() {
            for b in r.clone() {
                if a == b {
                    let mut x = CMat::zeros(basis.dim(), basis.dim());
                    x[(a, a)] = I;
                    out.push(f * x * f.adjoint());
                } else if a < b {
                    for z in [real(1.0), I] {
                        let mut x = CMat::zeros(basis.dim(), basis.dim());
                        x[(a, b)] = z;
                        x[(b, a)] = -z.conj();
                        out.push(f * x * f.adjoint());
                    }
                }
            }
        }
    }
    out
}

/// `G(Ẇ1, Ẇ2) = ½ tr(Ẇ1†Ẇ2 + Ẇ2†Ẇ1)`.
pub fn metric_g_total(wdot1: &CMat, wdot2: &CMat) -> f64 {
    hs_inner(wdot1, wdot2).re
}

/// Default tangency tolerance for [`metric_g`].
pub const TANGENT_TOL: f64 = 1e-8;

/// Horizontal vector over `ρ̇` at the canonical amplitude of `ρ`.
///
/// In the eigenbasis of `ρ` with `R = E†ρ̇E`, the lift has coefficients
/// `R_αβ / (2√p)` inside a block and `√λ_β R_αβ / (λ_β − λ_α)` between
/// different eigenvalues (kernel included). `ρ̇` must be tangent to the
/// isodegenerate manifold: no kernel-kernel block and scalar diagonal
/// blocks. The part violating this is discarded and its norm checked
/// against `tol · (1 + ‖ρ̇‖)`.
pub fn horizontal_vector(
    rho: &DensityOperator,
    basis: &EigenprojectorBasis,
    rhodot: &CMat,
    tol: f64,
) -> Result<CMat> {
    let n = rho.dim();
    if rhodot.shape() != (n, n) {
        return Err(Error::DimMismatch { expected: n, found: rhodot.nrows() });
    }
    let mut blocks = rho.frames.clone();
    blocks.push(rho.kernel.clone());
    let e = join_columns(&blocks, n);
    let r = e.adjoint() * rhodot * &e;
    let sizes: Vec<usize> = blocks.iter().map(|b| b.ncols()).collect();
    let mut eig = Vec::with_capacity(n);
    let mut block_of = Vec::with_capacity(n);
    for (j, &s) in sizes.iter().enumerate() {
        let value = if j < rho.p.len() { rho.p.0[j] } else { 0.0 };
        eig.extend(std::iter::repeat_n(value, s));
        block_of.extend(std::iter::repeat_n(j, s));
    }
    let rank = rho.rank();
    let l = rho.p.len();

    let mut residual = 0.0;
    let mut c = CMat::zeros(n, rank);
    let mut start = 0;
    for (j, &s) in sizes.iter().enumerate() {
        let range = start..start + s;
        start += s;
        if j == l {
            residual += r.view((range.start, range.start), (s, s)).norm_squared();
            continue;
        }
        let block = r.view((range.start, range.start), (s, s));
        let mean = block.trace() / s as f64;
        residual += (block - CMat::identity(s, s) * mean).norm_squared();
        let scale = 0.5 / eig[range.start].sqrt();
        for a in range.clone() {
            c[(a, a)] = mean * scale;
        }
    }
    for beta in 0..rank {
        for alpha in 0..n {
            if block_of[alpha] != block_of[beta] {
                c[(alpha, beta)] = r[(alpha, beta)] * (eig[beta].sqrt() / (eig[beta] - eig[alpha]));
            }
        }
    }
    let residual = residual.sqrt();
    if !(residual <= tol * (1.0 + frobenius(rhodot))) {
        return Err(Error::NotTangent { residual });
    }
    // back from the eigenbasis: K coordinates follow the blocks of the basis
    let support_basis = join_columns(&(0..l).map(|j| basis.block(j)).collect::<Vec<_>>(), basis.dim());
    Ok(&e * c * support_basis.adjoint())
}

/// Horizontal lift of `ρ̇` at an arbitrary amplitude `W` of `ρ`.
pub fn horizontal_vector_at(w: &Amplitude, rhodot: &CMat, tol: f64) -> Result<CMat> {
    let rho = project(w);
    let can = canonical_amplitude(&rho, &w.basis)?;
    let u = pinv(&can.w)? * &w.w;
    Ok(horizontal_vector(&rho, &w.basis, rhodot, tol)? * u)
}

/// The induced metric `g(ρ̇1, ρ̇2) = G(Ẇ1, Ẇ2)` for horizontal lifts `Ẇi`.
pub fn metric_g(rho: &DensityOperator, rhodot1: &CMat, rhodot2: &CMat) -> Result<f64> {
    metric_g_with(rho, rhodot1, rhodot2, TANGENT_TOL)
}

pub fn metric_g_with(rho: &DensityOperator, rhodot1: &CMat, rhodot2: &CMat, tol: f64) -> Result<f64> {
    let basis = EigenprojectorBasis::standard(rho.m.clone());
    let a = horizontal_vector(rho, &basis, rhodot1, tol)?;
    let b = horizontal_vector(rho, &basis, rhodot2, tol)?;
    Ok(metric_g_total(&a, &b))
}

/// A discrete horizontal lift together with the transported eigenframes.
#[derive(Debug, Clone)]
pub struct HorizontalLift {
    pub grid: TimeGrid,
    pub basis: EigenprojectorBasis,
    /// Amplitudes `W_k`.
    pub amplitudes: Vec<CMat>,
    /// `frames[k][j]`: transported eigenframe of block `j` at sample `k`.
    pub frames: Vec<Vec<CMat>>,
    /// Block eigenvalues at every sample.
    pub spectra: Vec<Vec<f64>>,
}

impl HorizontalLift {
    pub fn first(&self) -> &CMat {
        &self.amplitudes[0]
    }

    pub fn last(&self) -> &CMat {
        &self.amplitudes[self.amplitudes.len() - 1]
    }

    pub fn curve(&self) -> OperatorCurve {
        OperatorCurve::new(self.grid.tau(), self.amplitudes.clone()).expect("lift samples share a shape")
    }

    /// Largest connection residual `‖A(Ẇ_k)‖` with finite-difference `Ẇ`.
    pub fn connection_residual(&self) -> Result<f64> {
        let curve = self.curve();
        let mut worst: f64 = 0.0;
        for (w, wdot) in self.amplitudes.iter().zip(curve.derivatives()) {
            let amp = Amplitude::unchecked(w.clone(), self.basis.clone());
            worst = worst.max(connection_form(&amp, &wdot)?.norm());
        }
        Ok(worst)
    }
}

/// Spectral decompositions of all samples, checking that the multiplicities
/// match `expected` and that no gap comes within `GAP_GUARD · gap_tol`.
pub fn decompose_curve(
    curve: &OperatorCurve,
    expected: &crate::spectra::DegeneracySpectrum,
    gap_tol: f64,
) -> Result<Vec<DensityOperator>> {
    curve
        .samples()
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let d = spectral_decompose(s, gap_tol)?;
            let p = d.p.as_slice();
            let squeezed = p.windows(2).any(|w| w[0] - w[1] < GAP_GUARD * gap_tol)
                || p.last().is_some_and(|&v| v < GAP_GUARD * gap_tol);
            if &d.m != expected || squeezed {
                return Err(Error::MultiplicityChange { sample: k });
            }
            Ok(d)
        })
        .collect()
}

/// Polar parallel transport of blockwise eigenframes along decomposed samples.
fn transport(decomps: &[DensityOperator], initial: Vec<CMat>) -> Result<Vec<Vec<CMat>>> {
    let mut frames = Vec::with_capacity(decomps.len());
    frames.push(initial);
    for d in &decomps[1..] {
        let prev = frames.last().expect("nonempty");
        let next = prev
            .iter()
            .zip(&d.frames)
            .map(|(psi, e)| {
                let overlap = psi.adjoint() * e;
                Ok(e * polar_unitary(&overlap)?.adjoint())
            })
            .collect::<Result<Vec<_>>>()?;
        frames.push(next);
    }
    Ok(frames)
}

/// Parallel transport of eigenframes along `curve`, starting from frames that
/// diagonalize the first sample blockwise.
pub fn transported_frame(curve: &OperatorCurve, initial: &[CMat], gap_tol: f64) -> Result<Vec<Vec<CMat>>> {
    let first = spectral_decompose(curve.first(), gap_tol)?;
    if initial.len() != first.m.len() {
        return Err(Error::LengthMismatch { left: initial.len(), right: first.m.len() });
    }
    for (j, f) in initial.iter().enumerate() {
        let pj = first.projector(j);
        let gap = frobenius(&(&pj * f - f)).max(unitarity_like(f));
        if !(gap <= CLOSURE_TOL) || f.ncols() != first.m.as_slice()[j] {
            return Err(Error::EndpointMismatch { gap });
        }
    }
    let decomps = decompose_curve(curve, &first.m, gap_tol)?;
    transport(&decomps, initial.to_vec())
}

fn unitarity_like(f: &CMat) -> f64 {
    frobenius(&(f.adjoint() * f - eye(f.ncols())))
}

/// Discrete horizontal lift of `curve` through the amplitude `w0`.
pub fn horizontal_lift(curve: &OperatorCurve, w0: &Amplitude) -> Result<HorizontalLift> {
    horizontal_lift_with(curve, w0, DEFAULT_GAP_TOL)
}

pub fn horizontal_lift_with(curve: &OperatorCurve, w0: &Amplitude, gap_tol: f64) -> Result<HorizontalLift> {
    if curve.shape() != (w0.w.nrows(), w0.w.nrows()) {
        return Err(Error::DimMismatch { expected: w0.w.nrows(), found: curve.shape().0 });
    }
    let start = project(w0);
    let gap = frobenius(&(&start.matrix - curve.first()));
    if !(gap <= CLOSURE_TOL) {
        return Err(Error::EndpointMismatch { gap });
    }
    let decomps = decompose_curve(curve, w0.basis.degeneracy(), gap_tol)?;
    let frames = transport(&decomps, start.frames)?;
    let spectra: Vec<Vec<f64>> = decomps.iter().map(|d| d.p.0.clone()).collect();
    let amplitudes = frames
        .iter()
        .zip(&spectra)
        .map(|(f, p)| assemble(f, p, &w0.basis))
        .collect();
    Ok(HorizontalLift { grid: curve.grid(), basis: w0.basis.clone(), amplitudes, frames, spectra })
}

/// `Γ = W_0⁺ W_τ` for the horizontal lift of a closed curve, projected onto
/// the gauge group.
pub fn holonomy(curve: &OperatorCurve, w0: &Amplitude) -> Result<GaugeElement> {
    holonomy_with(curve, w0, DEFAULT_GAP_TOL)
}

pub fn holonomy_with(curve: &OperatorCurve, w0: &Amplitude, gap_tol: f64) -> Result<GaugeElement> {
    let gap = curve.closure_gap();
    if !(gap <= CLOSURE_TOL) {
        return Err(Error::NotClosed { gap });
    }
    let lift = horizontal_lift_with(curve, w0, gap_tol)?;
    holonomy_of_lift(&lift)
}

/// Holonomy read off a completed lift of a closed curve.
pub fn holonomy_of_lift(lift: &HorizontalLift) -> Result<GaugeElement> {
    let raw = pinv(lift.first())? * lift.last();
    let (diag, off) = block_part(&raw, &lift.basis);
    if !(off <= GAUGE_TOL) {
        return Err(Error::GaugeViolation { deviation: off });
    }
    let u = polar_unitary(&diag)?;
    let residual = frobenius(&(&u - &raw));
    log::debug!("holonomy re-unitarization residual {residual:.3e} (off-block {off:.3e})");
    Ok(GaugeElement { u, basis: lift.basis.clone() })
}
