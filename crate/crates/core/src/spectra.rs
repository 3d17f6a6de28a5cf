//! Spectral data of density operators: eigenvalue spectrum `p`, degeneracy
//! spectrum `m`, spectral bounds `α`, and Λ-adapted bases of the auxiliary
//! space.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    self, cluster, eye, frobenius, hermitian_deviation, hermitian_eig, unitarity_deviation, CMat,
    DEFAULT_GAP_TOL, ZERO_TOL,
};

/// Tolerance on `Σ m_j p_j = 1` for user supplied spectra.
pub const NORMALIZATION_TOL: f64 = 1e-12;
/// Tolerances for accepting a matrix as a density operator.
pub const STATE_TOL: f64 = 1e-10;

/// Multiplicities `(m_1, …, m_l)` of the distinct positive eigenvalues.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct DegeneracySpectrum(Vec<usize>);

impl DegeneracySpectrum {
    pub fn new(m: Vec<usize>) -> Result<Self> {
        if m.is_empty() || m.contains(&0) {
            return Err(Error::Parse(format!("degeneracy spectrum must have positive entries, got {m:?}")));
        }
        Ok(Self(m))
    }

    /// Nondegenerate spectrum with `l` blocks.
    pub fn nondegenerate(l: usize) -> Self {
        Self(vec![1; l.max(1)])
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// Number of distinct positive eigenvalues.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn rank(&self) -> usize {
        self.0.iter().sum()
    }

    /// Index ranges of the blocks in an ordering `11, 12, …, 21, …`.
    pub fn block_ranges(&self) -> Vec<Range<usize>> {
        let mut at = 0;
        self.0
            .iter()
            .map(|&k| {
                let r = at..at + k;
                at += k;
                r
            })
            .collect()
    }
}

impl TryFrom<Vec<usize>> for DegeneracySpectrum {
    type Error = Error;
    fn try_from(m: Vec<usize>) -> Result<Self> {
        Self::new(m)
    }
}

impl From<DegeneracySpectrum> for Vec<usize> {
    fn from(m: DegeneracySpectrum) -> Self {
        m.0
    }
}

/// Distinct positive eigenvalues `p_1 > p_2 > … > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EigenvalueSpectrum(pub Vec<f64>);

impl EigenvalueSpectrum {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Lower bounds `α_j ≥ 0` on the eigenvalues.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SpectralBound(Vec<f64>);

impl SpectralBound {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if let Some(&bad) = alpha.iter().find(|a| !(**a >= 0.0 && a.is_finite())) {
            return Err(Error::OutOfRange { value: bad, range: "[0, inf)" });
        }
        Ok(Self(alpha))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Checks strict descent, positivity and unit trace of `(p, m)`.
pub fn validate(p: &EigenvalueSpectrum, m: &DegeneracySpectrum) -> Result<()> {
    validate_with(p, m, DEFAULT_GAP_TOL, NORMALIZATION_TOL)
}

pub fn validate_with(
    p: &EigenvalueSpectrum,
    m: &DegeneracySpectrum,
    gap_tol: f64,
    norm_tol: f64,
) -> Result<()> {
    if p.len() != m.len() {
        return Err(Error::LengthMismatch { left: p.len(), right: m.len() });
    }
    for (block, &value) in p.0.iter().enumerate() {
        if !(value > 0.0) {
            return Err(Error::NonPositiveEigenvalue { block, value });
        }
    }
    if let Some(index) = p.0.windows(2).position(|w| !(w[0] - w[1] > gap_tol)) {
        return Err(Error::NotDescending { index });
    }
    let sum: f64 = p.0.iter().zip(m.as_slice()).map(|(p, &k)| p * k as f64).sum();
    if !((sum - 1.0).abs() <= norm_tol) {
        return Err(Error::NotNormalized { sum });
    }
    Ok(())
}

/// Indices `j` (zero based) with `p_j < α_j`. An empty list means `p` is
/// spectrally bounded by `α`.
pub fn check_bound(p: &EigenvalueSpectrum, alpha: &SpectralBound) -> Result<Vec<usize>> {
    if p.len() != alpha.len() {
        return Err(Error::LengthMismatch { left: p.len(), right: alpha.len() });
    }
    Ok(p.0
        .iter()
        .zip(alpha.as_slice())
        .enumerate()
        .filter(|(_, (p, a))| p < a)
        .map(|(j, _)| j)
        .collect())
}

/// Coordinates of `p` in the open simplex `{x : x_j > x_{j+1} > 0, Σ x_j m_j = 1}`.
pub fn simplex_coords(p: &EigenvalueSpectrum, m: &DegeneracySpectrum) -> Result<Vec<f64>> {
    if p.len() != m.len() {
        return Err(Error::LengthMismatch { left: p.len(), right: m.len() });
    }
    let sum: f64 = p.0.iter().zip(m.as_slice()).map(|(p, &k)| p * k as f64).sum();
    if !((sum - 1.0).abs() <= NORMALIZATION_TOL) {
        return Err(Error::NotNormalized { sum });
    }
    Ok(p.0.clone())
}

/// Real dimension of the isospectral orbit `D(p, m)` in an `n`-dimensional
/// Hilbert space.
pub fn dim_isospectral(n: usize, m: &DegeneracySpectrum) -> usize {
    let r = m.rank();
    let sq: usize = m.as_slice().iter().map(|k| k * k).sum();
    2 * n * r - r * r - sq
}

/// Real dimension of `D(Π, m)`.
pub fn dim_fixed_projectors(m: &DegeneracySpectrum) -> usize {
    m.len() - 1
}

/// Real dimension of `D(m)`.
pub fn dim_isodegenerate(n: usize, m: &DegeneracySpectrum) -> usize {
    dim_isospectral(n, m) + dim_fixed_projectors(m)
}

/// A Λ-adapted orthonormal basis `{|ja⟩}` of the auxiliary space `K`.
///
/// The basis vectors are the columns of `frame`, grouped block by block;
/// `Λ_j` is the projector onto the columns of block `j`. The standard choice
/// uses the coordinate basis of `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenprojectorBasis {
    m: DegeneracySpectrum,
    frame: CMat,
}

impl EigenprojectorBasis {
    pub fn standard(m: DegeneracySpectrum) -> Self {
        let r = m.rank();
        Self { m, frame: eye(r) }
    }

    /// Basis whose vectors are the columns of the unitary `frame`.
    pub fn with_frame(m: DegeneracySpectrum, frame: CMat) -> Result<Self> {
        if frame.nrows() != m.rank() || frame.ncols() != m.rank() {
            return Err(Error::DimMismatch { expected: m.rank(), found: frame.ncols() });
        }
        let deviation = unitarity_deviation(&frame);
        if deviation > 1e-9 {
            return Err(Error::NotAState(format!("basis frame is not unitary (deviation {deviation:.3e})")));
        }
        Ok(Self { m, frame })
    }

    /// The basis `{V†|ja⟩}` of a second auxiliary space related by the
    /// unitary `V: K' → K`, so that `Λ'_j = V† Λ_j V`.
    pub fn pulled_back(&self, v: &CMat) -> Result<Self> {
        Self::with_frame(self.m.clone(), v.adjoint() * &self.frame)
    }

    pub fn degeneracy(&self) -> &DegeneracySpectrum {
        &self.m
    }

    pub fn frame(&self) -> &CMat {
        &self.frame
    }

    pub fn dim(&self) -> usize {
        self.m.rank()
    }

    pub fn is_standard(&self) -> bool {
        self.frame == eye(self.dim())
    }

    /// `(j, a)` label of every basis index.
    pub fn labels(&self) -> Vec<(usize, usize)> {
        self.m
            .as_slice()
            .iter()
            .enumerate()
            .flat_map(|(j, &k)| (0..k).map(move |a| (j, a)))
            .collect()
    }

    pub fn block_range(&self, j: usize) -> Range<usize> {
        self.m.block_ranges()[j].clone()
    }

    /// The `r x m_j` matrix of basis vectors of block `j`.
    pub fn block(&self, j: usize) -> CMat {
        let r = self.block_range(j);
        self.frame.columns(r.start, r.len()).into_owned()
    }

    /// `Λ_j`.
    pub fn projector(&self, j: usize) -> CMat {
        let b = self.block(j);
        &b * b.adjoint()
    }

    pub fn projectors(&self) -> Vec<CMat> {
        (0..self.m.len()).map(|j| self.projector(j)).collect()
    }

    /// `Σ_j w_j Λ_j`.
    pub fn weighted(&self, weights: &[f64]) -> CMat {
        let mut out = CMat::zeros(self.dim(), self.dim());
        for (j, w) in weights.iter().enumerate() {
            out += self.projector(j).scale(*w);
        }
        out
    }
}

/// A density operator together with its spectral data.
///
/// `frames[j]` holds an orthonormal basis of the `p_j` eigenspace as the
/// columns of an `n x m_j` matrix; `kernel` spans the zero eigenspace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    pub matrix: CMat,
    pub p: EigenvalueSpectrum,
    pub m: DegeneracySpectrum,
    pub frames: Vec<CMat>,
    pub kernel: CMat,
}

impl DensityOperator {
    /// `ρ = Σ_j p_j Ψ_j Ψ_j†` from validated spectral data.
    pub fn assemble(p: EigenvalueSpectrum, m: DegeneracySpectrum, frames: Vec<CMat>) -> Result<Self> {
        validate(&p, &m)?;
        if frames.len() != m.len() {
            return Err(Error::LengthMismatch { left: frames.len(), right: m.len() });
        }
        let n = frames[0].nrows();
        let support = join_columns(&frames, n);
        for (j, f) in frames.iter().enumerate() {
            if f.ncols() != m.as_slice()[j] || f.nrows() != n {
                return Err(Error::ShapeMismatch(format!("frame {j} has shape {}x{}", f.nrows(), f.ncols())));
            }
        }
        let ortho = frobenius(&(support.adjoint() * &support - eye(support.ncols())));
        if ortho > 1e-9 {
            return Err(Error::NotAState(format!("frames are not orthonormal (deviation {ortho:.3e})")));
        }
        let mut matrix = CMat::zeros(n, n);
        for (f, &pj) in frames.iter().zip(p.as_slice()) {
            matrix += (f * f.adjoint()).scale(pj);
        }
        let complement = eye(n) - &support * support.adjoint();
        let kernel = linalg::orthonormal_columns(&complement, 1e-6);
        Ok(Self { matrix, p, m, frames, kernel })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn rank(&self) -> usize {
        self.m.rank()
    }

    /// Orthogonal projector `Π_j` onto the `p_j` eigenspace.
    pub fn projector(&self, j: usize) -> CMat {
        &self.frames[j] * self.frames[j].adjoint()
    }

    /// `Π_0`, the projector onto the kernel (zero for full rank).
    pub fn kernel_projector(&self) -> CMat {
        &self.kernel * self.kernel.adjoint()
    }

    /// All eigenvectors of the support, block by block, as an `n x r` matrix.
    pub fn support_frame(&self) -> CMat {
        join_columns(&self.frames, self.dim())
    }
}

pub(crate) fn join_columns(blocks: &[CMat], rows: usize) -> CMat {
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMat::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        out.view_mut((0, at), (rows, b.ncols())).copy_from(b);
        at += b.ncols();
    }
    out
}

/// Spectral decomposition of a density matrix into degenerate blocks.
///
/// Eigenvalues at or below [`ZERO_TOL`] form the kernel; the remaining ones
/// are clustered with `gap_tol` and each block eigenvalue is the mean of its
/// cluster.
pub fn spectral_decompose(rho: &CMat, gap_tol: f64) -> Result<DensityOperator> {
    if !rho.is_square() {
        return Err(Error::NotAState(format!("matrix is {}x{}", rho.nrows(), rho.ncols())));
    }
    let deviation = hermitian_deviation(rho);
    if !(deviation <= STATE_TOL) {
        return Err(Error::NotAState(format!("not Hermitian (deviation {deviation:.3e})")));
    }
    let tr = rho.trace().re;
    if !((tr - 1.0).abs() <= STATE_TOL) {
        return Err(Error::NotAState(format!("trace is {tr}")));
    }
    let eig = hermitian_eig(rho, STATE_TOL).map_err(|e| Error::NotAState(e.to_string()))?;
    if let Some(&min) = eig.values.last() {
        if min < -STATE_TOL {
            return Err(Error::NotAState(format!("negative eigenvalue {min:.3e}")));
        }
    }
    let rank = eig.values.iter().take_while(|&&v| v > ZERO_TOL).count();
    let blocks = cluster(&eig.values[..rank], gap_tol);
    let p: Vec<f64> = blocks
        .iter()
        .map(|b| eig.values[b.clone()].iter().sum::<f64>() / b.len() as f64)
        .collect();
    let m = DegeneracySpectrum::new(blocks.iter().map(|b| b.len()).collect())?;
    let frames = blocks.iter().map(|b| eig.columns(b.clone())).collect();
    let kernel = eig.columns(rank..rho.nrows());
    Ok(DensityOperator { matrix: rho.clone(), p: EigenvalueSpectrum(p), m, frames, kernel })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{commutator, diag_real, I};
    use crate::random;

    fn p(v: &[f64]) -> EigenvalueSpectrum {
        EigenvalueSpectrum(v.to_vec())
    }

    fn m(v: &[usize]) -> DegeneracySpectrum {
        DegeneracySpectrum::new(v.to_vec()).unwrap()
    }

    #[test]
    fn validate_examples() {
        assert!(validate(&p(&[1.0]), &m(&[1])).is_ok());
        assert!(validate(&p(&[0.5, 0.25]), &m(&[1, 2])).is_ok());
        assert!(matches!(validate(&p(&[0.25, 0.5]), &m(&[2, 1])), Err(Error::NotDescending { index: 0 })));
        assert!(matches!(validate(&p(&[0.5, 0.25]), &m(&[1, 1])), Err(Error::NotNormalized { .. })));
        assert!(matches!(validate(&p(&[0.5]), &m(&[1, 1])), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn degeneracy_rejects_zero_multiplicity() {
        assert!(DegeneracySpectrum::new(vec![1, 0]).is_err());
        assert!(DegeneracySpectrum::new(vec![]).is_err());
    }

    #[test]
    fn decompose_examples() {
        let d = spectral_decompose(&diag_real(&[0.7, 0.3]), DEFAULT_GAP_TOL).unwrap();
        assert_eq!(d.m.as_slice(), &[1, 1]);
        assert!((d.p.0[0] - 0.7).abs() < 1e-15 && (d.p.0[1] - 0.3).abs() < 1e-15);

        let d = spectral_decompose(&diag_real(&[0.5, 0.25, 0.25, 0.0]), DEFAULT_GAP_TOL).unwrap();
        assert_eq!(d.m.as_slice(), &[1, 2]);
        assert_eq!(d.rank(), 3);
        assert_eq!(d.dim(), 4);
        assert_eq!(d.kernel.ncols(), 1);
    }

    #[test]
    fn decompose_rotated_state() {
        let mut rng = random::rng(1);
        let u = random::unitary(&mut rng, 2);
        let rho = &u * diag_real(&[0.7, 0.3]) * u.adjoint();
        let d = spectral_decompose(&rho, DEFAULT_GAP_TOL).unwrap();
        assert_eq!(d.m.as_slice(), &[1, 1]);
        assert!((d.p.0[0] - 0.7).abs() < 1e-12);
        // frames are U's columns up to phase
        for j in 0..2 {
            let overlap = (u.column(j).adjoint() * &d.frames[j])[(0, 0)];
            assert!((overlap.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn decompose_rejects_non_states() {
        assert!(matches!(spectral_decompose(&diag_real(&[0.7, 0.7]), 1e-9), Err(Error::NotAState(_))));
        assert!(matches!(spectral_decompose(&diag_real(&[1.2, -0.2]), 1e-9), Err(Error::NotAState(_))));
        let mut h = diag_real(&[0.5, 0.5]);
        h[(0, 1)] = I * 0.1;
        assert!(matches!(spectral_decompose(&h, 1e-9), Err(Error::NotAState(_))));
    }

    #[test]
    fn check_bound_examples() {
        let alpha = |v: &[f64]| SpectralBound::new(v.to_vec()).unwrap();
        assert!(check_bound(&p(&[0.7, 0.3]), &alpha(&[0.5, 0.1])).unwrap().is_empty());
        assert!(check_bound(&p(&[0.7, 0.3]), &alpha(&[0.0, 0.0])).unwrap().is_empty());
        assert_eq!(check_bound(&p(&[0.7, 0.3]), &alpha(&[0.8, 0.0])).unwrap(), vec![0]);
        assert!(check_bound(&p(&[0.7, 0.3]), &alpha(&[0.8])).is_err());
        assert!(SpectralBound::new(vec![-0.1]).is_err());
    }

    #[test]
    fn simplex_examples() {
        assert_eq!(simplex_coords(&p(&[1.0]), &m(&[1])).unwrap(), vec![1.0]);
        assert_eq!(simplex_coords(&p(&[0.5, 0.25]), &m(&[1, 2])).unwrap(), vec![0.5, 0.25]);
        assert_eq!(simplex_coords(&p(&[0.4, 0.2]), &m(&[2, 1])).unwrap(), vec![0.4, 0.2]);
        assert!(simplex_coords(&p(&[0.4, 0.4]), &m(&[2, 1])).is_err());
        // one linear constraint on l coordinates
        assert_eq!(dim_fixed_projectors(&m(&[1, 2, 3])), 2);
    }

    #[test]
    fn assemble_round_trips_through_decompose() {
        let mut rng = random::rng(9);
        for spec in [(vec![0.5, 0.25], vec![1, 2]), (vec![0.4, 0.2], vec![2, 1]), (vec![1.0], vec![1])] {
            let mm = m(&spec.1);
            let q = random::isometry(&mut rng, 5, mm.rank());
            let frames: Vec<CMat> = mm
                .block_ranges()
                .into_iter()
                .map(|r| q.columns(r.start, r.len()).into_owned())
                .collect();
            let rho = DensityOperator::assemble(p(&spec.0), mm.clone(), frames).unwrap();
            let again = spectral_decompose(&rho.matrix, DEFAULT_GAP_TOL).unwrap();
            assert_eq!(again.m, mm);
            for j in 0..mm.len() {
                assert!((again.p.0[j] - spec.0[j]).abs() < 1e-9);
                assert!(frobenius(&(again.projector(j) - rho.projector(j))) < 1e-9);
            }
            assert!(frobenius(&(again.kernel_projector() - rho.kernel_projector())) < 1e-9);
        }
    }

    #[test]
    fn degeneracy_is_conjugation_invariant() {
        let mut rng = random::rng(42);
        let spectra: [&[f64]; 3] = [&[0.5, 0.25, 0.25], &[0.3, 0.3, 0.2, 0.2, 0.0, 0.0], &[0.4, 0.4, 0.1, 0.1]];
        for trial in 0..100 {
            let s = spectra[trial % 3];
            let rho = random::state_with_spectrum(&mut rng, s);
            let base = spectral_decompose(&diag_real(s), DEFAULT_GAP_TOL).unwrap();
            let d = spectral_decompose(&rho, DEFAULT_GAP_TOL).unwrap();
            assert_eq!(d.m, base.m);
        }
    }

    /// The image of `X ↦ −i[X, ρ]` over Hermitian `X` is the tangent space of
    /// the unitary orbit; its real rank must match `dim D(p, m)`.
    #[test]
    fn isospectral_dimension_count() {
        let mut rng = random::rng(5);
        for (spectrum, n) in [(vec![0.5, 0.25, 0.25], 4usize), (vec![0.7, 0.3], 2), (vec![1.0], 3)] {
            let mut s = spectrum.clone();
            s.resize(n, 0.0);
            let rho = random::state_with_spectrum(&mut rng, &s);
            let d = spectral_decompose(&rho, DEFAULT_GAP_TOL).unwrap();
            // real basis of Hermitian matrices
            let mut columns: Vec<Vec<f64>> = Vec::new();
            for a in 0..n {
                for b in a..n {
                    for imag in [false, true] {
                        if a == b && imag {
                            continue;
                        }
                        let mut x = CMat::zeros(n, n);
                        let z = if imag { I } else { linalg::real(1.0) };
                        x[(a, b)] = z;
                        x[(b, a)] = z.conj();
                        let t = commutator(&x, &rho) * (-I);
                        columns.push(t.iter().flat_map(|z| [z.re, z.im]).collect());
                    }
                }
            }
            let mat = nalgebra::DMatrix::from_fn(2 * n * n, columns.len(), |i, j| columns[j][i]);
            let rank = mat.svd(false, false).rank(1e-9);
            assert_eq!(rank, dim_isospectral(n, &d.m));
            assert_eq!(dim_isodegenerate(n, &d.m), rank + d.m.len() - 1);
        }
    }
}
