//! Dense complex-matrix kernel.
//!
//! Everything here works on small dense matrices (dimensions up to a few
//! tens), which is all the bundle computations need. Eigen- and singular
//! value decompositions come from `nalgebra`; this module adds the ordering,
//! phase and clustering conventions the rest of the crate relies on.

use std::ops::Range;

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Default absolute gap below which two eigenvalues are considered equal.
pub const DEFAULT_GAP_TOL: f64 = 1e-9;
/// Eigenvalues at or below this are the (excluded) zero eigenvalue.
pub const ZERO_TOL: f64 = 1e-10;
/// Smallest admissible singular value / eigenvalue for inversions.
pub const SINGULAR_TOL: f64 = 1e-12;
/// Default Hermiticity tolerance used by [`propagator_step`].
pub const HERMITIAN_TOL: f64 = 1e-10;

const EIG_MAX_ITER: usize = 10_000;

pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn real(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn zeros(rows: usize, cols: usize) -> CMat {
    CMat::zeros(rows, cols)
}

pub fn diag_real(values: &[f64]) -> CMat {
    CMat::from_diagonal(&CVec::from_iterator(values.len(), values.iter().map(|&v| real(v))))
}

pub fn diag(values: &[C64]) -> CMat {
    CMat::from_diagonal(&CVec::from_column_slice(values))
}

/// Frobenius norm.
pub fn frobenius(m: &CMat) -> f64 {
    m.norm()
}

pub fn trace(m: &CMat) -> C64 {
    m.trace()
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

/// Hilbert–Schmidt product `tr(a† b)`.
pub fn hs_inner(a: &CMat, b: &CMat) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// `‖M − M†‖` in Frobenius norm.
pub fn hermitian_deviation(m: &CMat) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    frobenius(&(m - m.adjoint()))
}

/// `‖U†U − 1‖` in Frobenius norm.
pub fn unitarity_deviation(u: &CMat) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    frobenius(&(u.adjoint() * u - eye(u.nrows())))
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

pub fn is_finite(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

fn require_square(m: &CMat, what: &str) -> Result<()> {
    if m.is_square() {
        Ok(())
    } else {
        Err(Error::ShapeMismatch(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )))
    }
}

/// Spectral decomposition of a Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EigResult {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors; column `j` pairs with `values[j]`.
    pub frame: CMat,
}

impl EigResult {
    pub fn reconstruct(&self) -> CMat {
        &self.frame * diag_real(&self.values) * self.frame.adjoint()
    }

    /// Eigenvectors for the index range, as a `n x range.len()` matrix.
    pub fn columns(&self, range: Range<usize>) -> CMat {
        self.frame.columns(range.start, range.len()).into_owned()
    }
}

/// Hermitian eigendecomposition with descending eigenvalues.
///
/// Each eigenvector is normalized so that its largest-modulus component is
/// real and positive, which makes the frame of a diagonal matrix the
/// identity.
pub fn hermitian_eig(m: &CMat, tol: f64) -> Result<EigResult> {
    require_square(m, "hermitian_eig input")?;
    let deviation = hermitian_deviation(m);
    if !(deviation <= tol) {
        return Err(Error::NonHermitian { deviation });
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(EigResult { values: vec![], frame: zeros(0, 0) });
    }
    let eig = SymmetricEigen::try_new(hermitian_part(m), f64::EPSILON, EIG_MAX_ITER)
        .ok_or(Error::NoConvergence)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut frame = zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).into_owned();
        let norm = col.norm();
        col.unscale_mut(norm);
        let max = col.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if let Some(pivot) = col.iter().find(|z| z.norm() >= max * (1.0 - 1e-9)).copied() {
            let phase = pivot.conj() / pivot.norm();
            col *= phase;
        }
        frame.set_column(dst, &col);
    }
    Ok(EigResult { values, frame })
}

/// Partitions descending `values` into runs whose consecutive differences
/// are at most `gap_tol`.
pub fn cluster(values: &[f64], gap_tol: f64) -> Vec<Range<usize>> {
    let mut blocks = Vec::new();
    let mut start = 0;
    for k in 1..=values.len() {
        if k == values.len() || values[k - 1] - values[k] > gap_tol {
            if k > start {
                blocks.push(start..k);
            }
            start = k;
        }
    }
    blocks
}

/// Unitary factor `U` of the polar decomposition `M = U P`.
pub fn polar_unitary(m: &CMat) -> Result<CMat> {
    require_square(m, "polar_unitary input")?;
    if m.nrows() == 0 {
        return Ok(zeros(0, 0));
    }
    let svd = m.clone().svd(true, true);
    let smallest = svd.singular_values.iter().copied().fold(f64::INFINITY, f64::min);
    if !(smallest > SINGULAR_TOL) {
        return Err(Error::Singular { smallest });
    }
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::NoConvergence),
    };
    Ok(u * v_t)
}

/// Applies a real function to the spectrum of a Hermitian matrix.
pub fn hermitian_map(m: &CMat, tol: f64, f: impl Fn(f64) -> C64) -> Result<CMat> {
    let eig = hermitian_eig(m, tol)?;
    let d = diag(&eig.values.iter().map(|&x| f(x)).collect::<Vec<_>>());
    Ok(&eig.frame * d * eig.frame.adjoint())
}

/// Moore–Penrose pseudoinverse `(W†W)⁻¹W†` of a full-column-rank matrix.
pub fn pinv(w: &CMat) -> Result<CMat> {
    let gram = w.adjoint() * w;
    let eig = hermitian_eig(&gram, 1e-8 * (1.0 + frobenius(&gram)))?;
    let smallest = eig.values.last().copied().unwrap_or(f64::INFINITY);
    if !(smallest > SINGULAR_TOL) {
        return Err(Error::RankDeficient { smallest });
    }
    let inv = &eig.frame
        * diag_real(&eig.values.iter().map(|v| 1.0 / v).collect::<Vec<_>>())
        * eig.frame.adjoint();
    Ok(inv * w.adjoint())
}

/// `exp(−i H dt)` for Hermitian `H`.
pub fn propagator_step(h: &CMat, dt: f64) -> Result<CMat> {
    require_square(h, "Hamiltonian")?;
    let tol = HERMITIAN_TOL * (1.0 + frobenius(h));
    hermitian_map(h, tol, |e| C64::from_polar(1.0, -e * dt))
}

/// Eigen-decomposition of a unitary (more generally, normal) matrix via a
/// complex Schur factorization. Returns eigenvalues and an orthonormal
/// eigenvector frame.
pub fn unitary_eig(u: &CMat) -> Result<(Vec<C64>, CMat)> {
    require_square(u, "unitary_eig input")?;
    let n = u.nrows();
    if n == 0 {
        return Ok((vec![], zeros(0, 0)));
    }
    let schur = Schur::try_new(u.clone(), f64::EPSILON, EIG_MAX_ITER).ok_or(Error::NoConvergence)?;
    let (q, t) = schur.unpack();
    let values = (0..n).map(|k| t[(k, k)]).collect();
    Ok((values, q))
}

/// Gram–Schmidt orthonormalization of the columns of `m`; columns whose
/// residual norm falls below `tol` are dropped.
pub fn orthonormal_columns(m: &CMat, tol: f64) -> CMat {
    let mut kept: Vec<CVec> = Vec::new();
    for j in 0..m.ncols() {
        let mut v = m.column(j).into_owned();
        // two passes for numerical orthogonality
        for _ in 0..2 {
            for q in &kept {
                let proj = q.dotc(&v);
                v -= q * proj;
            }
        }
        let norm = v.norm();
        if norm > tol {
            kept.push(v.unscale(norm));
        }
    }
    let mut out = zeros(m.nrows(), kept.len());
    for (j, q) in kept.iter().enumerate() {
        out.set_column(j, q);
    }
    out
}

/// Block-diagonal embedding of square blocks.
pub fn block_diag(blocks: &[CMat]) -> CMat {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = zeros(n, n);
    let mut at = 0;
    for b in blocks {
        out.view_mut((at, at), (b.nrows(), b.ncols())).copy_from(b);
        at += b.nrows();
    }
    out
}
