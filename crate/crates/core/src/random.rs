//! Seeded random matrices for property suites and randomized gauges.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

use crate::linalg::{block_diag, diag_real, CMat, C64};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn complex_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    let a = complex_matrix(rng, n, n);
    (&a + a.adjoint()).scale(0.5)
}

/// Haar-distributed unitary (QR of a Gaussian matrix with the phase fix).
pub fn unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    isometry(rng, n, n)
}

/// Random `rows x cols` matrix with orthonormal columns.
pub fn isometry<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    let qr = complex_matrix(rng, rows, cols).qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..cols {
        let d = r[(j, j)];
        if d.norm() > 0.0 {
            let phase = d / d.norm();
            let mut col = q.column_mut(j);
            col *= phase;
        }
    }
    q
}

/// Random unitary that is block diagonal with the given block sizes.
pub fn block_unitary<R: Rng + ?Sized>(rng: &mut R, sizes: &[usize]) -> CMat {
    let blocks: Vec<CMat> = sizes.iter().map(|&m| unitary(rng, m)).collect();
    block_diag(&blocks)
}

/// Random state `V diag(spectrum) V†` on a space of dimension `spectrum.len()`.
pub fn state_with_spectrum<R: Rng + ?Sized>(rng: &mut R, spectrum: &[f64]) -> CMat {
    let v = unitary(rng, spectrum.len());
    &v * diag_real(spectrum) * v.adjoint()
}
