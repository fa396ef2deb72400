//! Seeded random Hermitian block matrices with subordinated diagonal spectra.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::block::{identity, operator_norm, BlockMatrix, DenseMatrix};
use crate::error::{Error, Result};
use crate::io::ProblemFile;

/// Width of the random eigenvalue spread on each side of the gap.
pub const SPREAD: f64 = 2.0;

fn gaussian(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DenseMatrix {
    DenseMatrix::from_fn(r, c, |_, _| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

/// Haar-distributed unitary: QR of a complex Gaussian matrix with the
/// phases of `R`'s diagonal moved into `Q`.
fn unitary(rng: &mut ChaCha8Rng, n: usize) -> DenseMatrix {
    let qr = gaussian(rng, n, n).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    q
}

fn hermitian_from(q: &DenseMatrix, eigenvalues: &[f64]) -> DenseMatrix {
    let d = DenseMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        eigenvalues.len(),
        eigenvalues.iter().map(|&x| Complex64::new(x, 0.0)),
    ));
    let m = q * d * q.adjoint();
    (&m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

fn projector_onto_leading(q: &DenseMatrix, k: usize) -> DenseMatrix {
    let lead = q.columns(0, k);
    lead * lead.adjoint()
}

/// Random Hermitian `B` with `spec(A0) ⊆ [−gap/2 − 2, −gap/2]`,
/// `spec(A1) ⊆ [gap/2, gap/2 + 2]`, `‖W1‖ = coupling` and `W0 = W1*`.
///
/// With `gap = 0` and `kernel_dim > 0`, that many vectors are planted in
/// `Ker B`: `⌈k/2⌉` eigenvectors of `A0` for the eigenvalue 0 annihilated by
/// `W1*`, and the rest in `A1` annihilated by `W1`.
pub fn random_case(n0: usize, n1: usize, gap: f64, coupling: f64, seed: u64, kernel_dim: usize) -> Result<ProblemFile> {
    if n0 == 0 || n1 == 0 {
        return Err(Error::Contract("both blocks must be non-empty".into()));
    }
    if !(gap >= 0.0 && gap.is_finite()) || !(coupling >= 0.0 && coupling.is_finite()) {
        return Err(Error::Contract(format!("gap and coupling must be non-negative, got {gap} and {coupling}")));
    }
    if kernel_dim > n0.min(n1) {
        return Err(Error::Contract(format!("kernel_dim = {kernel_dim} exceeds min(n0, n1) = {}", n0.min(n1))));
    }
    if kernel_dim > 0 && gap > 0.0 {
        return Err(Error::Contract("a planted kernel at 0 requires gap = 0".into()));
    }
    let k0 = kernel_dim.div_ceil(2);
    let k1 = kernel_dim - k0;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spec0: Vec<f64> = (0..n0).map(|_| -gap / 2.0 - SPREAD * rng.random::<f64>()).collect();
    let mut spec1: Vec<f64> = (0..n1).map(|_| gap / 2.0 + SPREAD * rng.random::<f64>()).collect();
    spec0[..k0].fill(0.0);
    spec1[..k1].fill(0.0);
    let q0 = unitary(&mut rng, n0);
    let q1 = unitary(&mut rng, n1);
    let a0 = hermitian_from(&q0, &spec0);
    let a1 = hermitian_from(&q1, &spec1);

    let mut w1 = gaussian(&mut rng, n0, n1);
    if kernel_dim > 0 {
        let p0 = identity(n0) - projector_onto_leading(&q0, k0);
        let p1 = identity(n1) - projector_onto_leading(&q1, k1);
        w1 = p0 * w1 * p1;
    }
    let norm = operator_norm(&w1);
    w1 *= Complex64::new(if norm > 0.0 { coupling / norm } else { 0.0 }, 0.0);
    let w0 = w1.adjoint();
    let b = BlockMatrix::new(a0, a1, w0, w1)?;

    let mut metadata = BTreeMap::new();
    metadata.insert("generator".to_string(), "random_case".to_string());
    metadata.insert("seed".to_string(), seed.to_string());
    metadata.insert("gap".to_string(), gap.to_string());
    metadata.insert("coupling".to_string(), coupling.to_string());
    metadata.insert("kernel_dim".to_string(), kernel_dim.to_string());
    Ok(ProblemFile::from_block(&b, Some(0.0), metadata))
}
