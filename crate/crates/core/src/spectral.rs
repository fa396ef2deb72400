//! Eigendecompositions, spectral subspaces, numerical kernels and invariant
//! subspaces selected by eigenvalue regions.

use nalgebra::SymmetricEigen;
use num_complex::Complex64;

use crate::block::{hermitian_defect, identity, operator_norm, sigma_min, singular_values, svd, BlockMatrix, DenseMatrix};
use crate::error::{Error, Result};
use crate::schur::{schur, triangular_eigenvectors};

/// Relative Hermitian defect accepted by the Hermitian code paths.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Eigenvalues of a matrix. For Hermitian input the imaginary parts are
/// exactly zero and the values are sorted ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<Complex64>,
    pub is_hermitian_input: bool,
}

impl Spectrum {
    /// Real parts, for Hermitian spectra.
    pub fn real(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|z| z.re).collect()
    }
}

#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub spectrum: Spectrum,
    /// Unit-norm eigenvectors as columns, aligned with `spectrum`.
    pub vectors: DenseMatrix,
    /// Set when the eigenvector matrix is numerically singular (defective
    /// or nearly defective input).
    pub degenerate: bool,
}

/// Eigendecomposition of a square matrix.
///
/// The Hermitian path returns orthonormal eigenvectors and real ascending
/// eigenvalues; it rejects input whose relative Hermitian defect exceeds
/// [`HERMITIAN_TOL`]. The general path goes through the complex Schur form.
pub fn eigendecompose(m: &DenseMatrix, hermitian: bool) -> Result<EigenDecomposition> {
    if !m.is_square() {
        return Err(Error::Shape(format!("{}x{} matrix has no eigendecomposition", m.nrows(), m.ncols())));
    }
    if hermitian {
        hermitian_eigen(m)
    } else {
        general_eigen(m)
    }
}

fn hermitian_eigen(m: &DenseMatrix) -> Result<EigenDecomposition> {
    let defect = hermitian_defect(m);
    if defect > HERMITIAN_TOL {
        return Err(Error::Contract(format!("matrix is not Hermitian (relative defect {defect:e})")));
    }
    let n = m.nrows();
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 1000 * n.max(1))
        .ok_or_else(|| Error::EigenFailure(format!("Hermitian eigensolver did not converge (n = {n})")))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues = order.iter().map(|&i| Complex64::new(eig.eigenvalues[i], 0.0)).collect();
    let mut vectors = DenseMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(EigenDecomposition {
        spectrum: Spectrum { eigenvalues, is_hermitian_input: true },
        vectors,
        degenerate: false,
    })
}

fn general_eigen(m: &DenseMatrix) -> Result<EigenDecomposition> {
    let s = schur(m)?;
    let vectors = &s.q * triangular_eigenvectors(&s.t);
    let degenerate = m.nrows() > 0 && sigma_min(&vectors) < 1e-8;
    Ok(EigenDecomposition {
        spectrum: Spectrum { eigenvalues: s.eigenvalues(), is_hermitian_input: false },
        vectors,
        degenerate,
    })
}

/// Eigenvalues only; Hermitian path when `hermitian` is set.
pub fn eigenvalues(m: &DenseMatrix, hermitian: bool) -> Result<Spectrum> {
    if !hermitian {
        let s = schur(m)?;
        return Ok(Spectrum { eigenvalues: s.eigenvalues(), is_hermitian_input: false });
    }
    let defect = hermitian_defect(m);
    if defect > HERMITIAN_TOL {
        return Err(Error::Contract(format!("matrix is not Hermitian (relative defect {defect:e})")));
    }
    let sym = (m + m.adjoint()).scale(0.5);
    let mut vals: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    Ok(Spectrum {
        eigenvalues: vals.into_iter().map(|x| Complex64::new(x, 0.0)).collect(),
        is_hermitian_input: true,
    })
}

/// Orthonormal basis of a subspace of `C^d`, carrying the block partition
/// `d = n0 + n1` of the ambient space.
#[derive(Clone, Debug, PartialEq)]
pub struct Subspace {
    basis: DenseMatrix,
    n0: usize,
}

impl Subspace {
    /// Wraps a basis that is already orthonormal.
    pub(crate) fn from_orthonormal(basis: DenseMatrix, n0: usize) -> Self {
        debug_assert!(n0 <= basis.nrows());
        Self { basis, n0 }
    }

    /// Orthonormalizes the columns of `spanning` (which must have full
    /// column rank).
    pub fn from_spanning(spanning: &DenseMatrix, n0: usize) -> Result<Self> {
        if n0 > spanning.nrows() {
            return Err(Error::Shape(format!("partition n0 = {n0} exceeds dimension {}", spanning.nrows())));
        }
        if spanning.ncols() == 0 {
            return Ok(Self::empty(spanning.nrows(), n0));
        }
        if spanning.ncols() > spanning.nrows() {
            return Err(Error::Shape("more spanning vectors than the ambient dimension".into()));
        }
        let qr = spanning.clone().qr();
        let r = qr.r();
        let rmax = (0..r.ncols()).map(|i| r[(i, i)].norm()).fold(0.0, f64::max);
        let rmin = (0..r.ncols()).map(|i| r[(i, i)].norm()).fold(f64::INFINITY, f64::min);
        if rmin <= 1e-13 * rmax.max(f64::MIN_POSITIVE) {
            return Err(Error::Contract("spanning set is rank deficient".into()));
        }
        Ok(Self { basis: qr.q(), n0 })
    }

    pub fn empty(d: usize, n0: usize) -> Self {
        Self { basis: DenseMatrix::zeros(d, 0), n0 }
    }

    pub fn basis(&self) -> &DenseMatrix {
        &self.basis
    }

    pub fn into_basis(self) -> DenseMatrix {
        self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn n0(&self) -> usize {
        self.n0
    }

    pub fn with_partition(mut self, n0: usize) -> Self {
        assert!(n0 <= self.ambient_dim(), "partition exceeds ambient dimension");
        self.n0 = n0;
        self
    }

    /// Orthogonal projector `Q·Q*`.
    pub fn projector(&self) -> DenseMatrix {
        &self.basis * self.basis.adjoint()
    }

    /// Orthonormal basis of the orthogonal complement.
    pub fn complement(&self) -> Subspace {
        let d = self.ambient_dim();
        let k = self.dim();
        if k == 0 {
            return Self { basis: identity(d), n0: self.n0 };
        }
        if k == d {
            return Self::empty(d, self.n0);
        }
        // Columns of the full SVD's U beyond rank k span the complement.
        let u = svd(&self.basis).expect("SVD of an orthonormal basis").u;
        let comp = u.columns(k, d - k).into_owned();
        Self { basis: comp, n0: self.n0 }
    }

    /// Concatenation of two mutually orthogonal subspaces.
    pub fn direct_sum(&self, other: &Subspace) -> Subspace {
        let d = self.ambient_dim();
        let mut basis = DenseMatrix::zeros(d, self.dim() + other.dim());
        basis.view_mut((0, 0), (d, self.dim())).copy_from(&self.basis);
        basis.view_mut((0, self.dim()), (d, other.dim())).copy_from(&other.basis);
        Self { basis, n0: self.n0 }
    }
}

/// `‖(I − QQ*)·m·Q‖`: zero iff `span(Q)` is invariant for `m`.
pub fn invariance_residual(m: &DenseMatrix, u: &Subspace) -> f64 {
    if u.dim() == 0 {
        return 0.0;
    }
    let q = u.basis();
    let mq = m * q;
    let coeff = q.adjoint() * &mq;
    operator_norm(&(mq - q * coeff))
}

/// Sine of the largest angle between `span(u)` and `span(v)` seen from `u`:
/// `‖(I − P_v)·Q_u‖`. Zero iff `u ⊆ v`.
pub fn containment_residual(u: &Subspace, v: &Subspace) -> f64 {
    if u.dim() == 0 {
        return 0.0;
    }
    if v.dim() == 0 {
        return 1.0;
    }
    let qu = u.basis();
    let qv = v.basis();
    operator_norm(&(qu - qv * (qv.adjoint() * qu)))
}

/// Gap `‖P_u − P_v‖` between two subspaces; this is the sine of the largest
/// principal angle when dimensions agree, and 1 otherwise.
pub fn subspace_distance(u: &Subspace, v: &Subspace) -> f64 {
    if u.dim() != v.dim() {
        return 1.0;
    }
    containment_residual(u, v).min(1.0)
}

/// Principal angles (radians, ascending) between two subspaces.
pub fn principal_angles(u: &Subspace, v: &Subspace) -> Vec<f64> {
    if u.dim() == 0 || v.dim() == 0 {
        return Vec::new();
    }
    let (u, v) = if u.dim() <= v.dim() { (u, v) } else { (v, u) };
    let (qu, qv) = (u.basis(), v.basis());
    let cross = qu.adjoint() * qv;
    // Cosines resolve large angles, sines of (I − P_v)·Q_u resolve small ones.
    let mut cosines: Vec<f64> = singular_values(&cross).iter().map(|s| s.clamp(0.0, 1.0)).collect();
    let mut sines: Vec<f64> =
        singular_values(&(qu - qv * cross.adjoint())).iter().map(|s| s.clamp(0.0, 1.0)).collect();
    cosines.sort_by(|a, b| b.total_cmp(a));
    sines.sort_by(f64::total_cmp);
    cosines
        .iter()
        .zip(&sines)
        .map(|(&c, &s)| if c * c < 0.5 { c.acos() } else { s.asin() })
        .collect()
}

fn require_hermitian(b: &BlockMatrix, tol: f64) -> Result<DenseMatrix> {
    let m = b.assemble();
    let defect = hermitian_defect(&m);
    if defect > tol.max(HERMITIAN_TOL) {
        return Err(Error::Contract(format!("block matrix is not Hermitian (relative defect {defect:e})")));
    }
    Ok(m)
}

fn select_columns(vectors: &DenseMatrix, keep: &[usize], n0: usize) -> Subspace {
    let mut basis = DenseMatrix::zeros(vectors.nrows(), keep.len());
    for (dst, &src) in keep.iter().enumerate() {
        basis.set_column(dst, &vectors.column(src));
    }
    Subspace::from_orthonormal(basis, n0)
}

/// Spectral subspace of the Hermitian `B` for eigenvalues below `mu`.
///
/// With `strict`, eigenvalues `λ < μ − tol·‖B‖` are kept; otherwise
/// `λ ≤ μ + tol·‖B‖`. Eigenvalues inside the band around `μ` are never
/// assigned by ordering.
pub fn spectral_subspace_below(b: &BlockMatrix, mu: f64, strict: bool, tol: f64) -> Result<Subspace> {
    spectral_subspace(b, mu, strict, tol, Side::Below)
}

/// Mirror of [`spectral_subspace_below`] for eigenvalues above `mu`.
pub fn spectral_subspace_above(b: &BlockMatrix, mu: f64, strict: bool, tol: f64) -> Result<Subspace> {
    spectral_subspace(b, mu, strict, tol, Side::Above)
}

#[derive(Clone, Copy)]
enum Side {
    Below,
    Above,
}

fn spectral_subspace(b: &BlockMatrix, mu: f64, strict: bool, tol: f64, side: Side) -> Result<Subspace> {
    let m = require_hermitian(b, tol)?;
    let eig = hermitian_eigen(&m)?;
    let vals = eig.spectrum.real();
    let norm = vals.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let band = tol * norm;
    let keep: Vec<usize> = (0..vals.len())
        .filter(|&i| {
            let x = vals[i];
            match (side, strict) {
                (Side::Below, true) => x < mu - band,
                (Side::Below, false) => x <= mu + band,
                (Side::Above, true) => x > mu + band,
                (Side::Above, false) => x >= mu - band,
            }
        })
        .collect();
    Ok(select_columns(&eig.vectors, &keep, b.n0()))
}

/// Numerical null space of `m − μI`: right singular vectors with
/// `σ ≤ tol·‖m − μI‖` (absolute `tol` when `m = μI`).
///
/// The returned subspace carries no partition (`n0` equals the dimension);
/// use [`Subspace::with_partition`] to attach one.
pub fn kernel(m: &DenseMatrix, mu: Complex64, tol: f64) -> Result<Subspace> {
    if !m.is_square() {
        return Err(Error::Shape("kernel of a non-square matrix; use null_space".into()));
    }
    let shifted = m - identity(m.nrows()) * mu;
    null_space(&shifted, tol)
}

/// Numerical null space of a (possibly rectangular, tall or square) matrix.
pub(crate) fn null_space(m: &DenseMatrix, tol: f64) -> Result<Subspace> {
    let c = m.ncols();
    if c == 0 {
        return Ok(Subspace::empty(0, 0));
    }
    let svd = svd(m)?;
    let norm = svd.s.first().copied().unwrap_or(0.0);
    let threshold = if norm > 0.0 { tol * norm } else { tol };
    // Right singular vectors beyond min(r, c) have singular value zero.
    let keep: Vec<usize> = (0..c).filter(|&i| svd.s.get(i).is_none_or(|&s| s <= threshold)).collect();
    let mut basis = DenseMatrix::zeros(c, keep.len());
    for (dst, &src) in keep.iter().enumerate() {
        basis.set_column(dst, &svd.v.column(src));
    }
    Ok(Subspace::from_orthonormal(basis, c))
}

/// Region of the complex plane selecting eigenvalues.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Region {
    /// `Re λ < x`
    RealBelow(f64),
    /// `Re λ > x`
    RealAbove(f64),
    /// `|λ − center| < radius`
    Disk { center: Complex64, radius: f64 },
}

impl Region {
    pub fn contains(&self, z: Complex64) -> bool {
        match *self {
            Region::RealBelow(x) => z.re < x,
            Region::RealAbove(x) => z.re > x,
            Region::Disk { center, radius } => (z - center).norm() < radius,
        }
    }

    fn boundary_distance(&self, z: Complex64) -> f64 {
        match *self {
            Region::RealBelow(x) | Region::RealAbove(x) => (z.re - x).abs(),
            Region::Disk { center, radius } => ((z - center).norm() - radius).abs(),
        }
    }
}

/// Relative gap required between selected eigenvalues and the region
/// boundary.
pub const REGION_GAP: f64 = 1e-8;

/// Invariant subspace of `m` belonging to the eigenvalues inside `region`.
///
/// Hermitian input uses the eigenvector basis; otherwise the complex Schur
/// form is reordered so the selected eigenvalues lead, and the leading
/// Schur vectors are returned.
pub fn invariant_subspace_by_region(m: &DenseMatrix, region: Region, hermitian: bool) -> Result<Subspace> {
    let n = m.nrows();
    if !m.is_square() {
        return Err(Error::Shape("invariant subspace of a non-square matrix".into()));
    }
    let scale = operator_norm(m).max(f64::MIN_POSITIVE);
    let band = REGION_GAP * scale;
    let check = |z: Complex64| {
        if region.boundary_distance(z) <= band {
            Err(Error::IllPosedRegion { eigenvalue: z, band })
        } else {
            Ok(())
        }
    };
    if hermitian {
        let eig = hermitian_eigen(m)?;
        let mut keep = Vec::new();
        for (i, &z) in eig.spectrum.eigenvalues.iter().enumerate() {
            check(z)?;
            if region.contains(z) {
                keep.push(i);
            }
        }
        return Ok(select_columns(&eig.vectors, &keep, n));
    }
    let mut s = schur(m)?;
    let eigs = s.eigenvalues();
    for &z in &eigs {
        check(z)?;
    }
    let select: Vec<bool> = eigs.iter().map(|&z| region.contains(z)).collect();
    let k = s.reorder(&select);
    let basis = s.q.view((0, 0), (n, k)).into_owned();
    Ok(Subspace::from_orthonormal(basis, n))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn real(r: usize, cc: usize, v: &[f64]) -> DenseMatrix {
        DenseMatrix::from_row_iterator(r, cc, v.iter().map(|&x| c(x)))
    }

    fn analytic() -> BlockMatrix {
        BlockMatrix::split(&real(2, 2, &[0.0, 1.0, 1.0, 2.0]), 1).unwrap()
    }

    fn span(vectors: &[&[f64]], n0: usize) -> Subspace {
        let d = vectors[0].len();
        let m = DenseMatrix::from_fn(d, vectors.len(), |i, j| c(vectors[j][i]));
        Subspace::from_spanning(&m, n0).unwrap()
    }

    #[test]
    fn eigendecompose_diagonal() {
        let m = real(3, 3, &[1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 3.0]);
        let e = eigendecompose(&m, true).unwrap();
        assert_eq!(e.spectrum.real(), vec![1.0, 2.0, 3.0]);
        for i in 0..3 {
            assert!((e.vectors[(i, i)].norm() - 1.0).abs() <= 1e-15);
        }
    }

    #[test]
    fn eigendecompose_two_by_two() {
        // Roots of λ² − 2λ − 1.
        let (lo, hi) = (1.0 - 2f64.sqrt(), 1.0 + 2f64.sqrt());
        let m = real(2, 2, &[0.0, 1.0, 1.0, 2.0]);
        for hermitian in [true, false] {
            let e = eigendecompose(&m, hermitian).unwrap();
            let mut vals = e.spectrum.real();
            vals.sort_by(f64::total_cmp);
            assert!((vals[0] - lo).abs() <= 1e-14 && (vals[1] - hi).abs() <= 1e-14);
            for (i, &lambda) in e.spectrum.eigenvalues.iter().enumerate() {
                let v = e.vectors.column(i);
                assert!((&m * v - v * lambda).norm() <= 1e-10 * 2.5);
            }
        }
    }

    #[test]
    fn eigendecompose_flags_jordan_block() {
        let m = real(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let e = eigendecompose(&m, false).unwrap();
        assert!(e.spectrum.eigenvalues.iter().all(|z| z.norm() == 0.0));
        assert!(e.degenerate);
    }

    #[test]
    fn eigendecompose_rejects_non_hermitian() {
        let m = real(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(eigendecompose(&m, true), Err(Error::Contract(_))));
    }

    #[test]
    fn subspace_below_examples() {
        let b = BlockMatrix::diagonal(real(1, 1, &[-1.0]), real(1, 1, &[1.0])).unwrap();
        let u = spectral_subspace_below(&b, 0.0, true, 1e-10).unwrap();
        assert!(subspace_distance(&u, &span(&[&[1.0, 0.0]], 1)) <= 1e-15);

        let u = spectral_subspace_below(&analytic(), 1.0, true, 1e-10).unwrap();
        let expected = span(&[&[1.0, 1.0 - 2f64.sqrt()]], 1);
        assert!(subspace_distance(&u, &expected) <= 1e-14);

        let zero = BlockMatrix::diagonal(real(1, 1, &[0.0]), real(1, 1, &[0.0])).unwrap();
        assert_eq!(spectral_subspace_below(&zero, 0.0, true, 1e-10).unwrap().dim(), 0);
    }

    #[test]
    fn subspace_below_rejects_non_hermitian() {
        let b = BlockMatrix::new(real(1, 1, &[0.0]), real(1, 1, &[1.0]), real(1, 1, &[0.0]), real(1, 1, &[1.0])).unwrap();
        assert!(matches!(spectral_subspace_below(&b, 0.5, true, 1e-10), Err(Error::Contract(_))));
    }

    #[test]
    fn kernel_examples() {
        let k = kernel(&real(2, 2, &[0.0, 0.0, 0.0, 1.0]), c(0.0), 1e-10).unwrap();
        assert!(subspace_distance(&k, &span(&[&[1.0, 0.0]], 2)) <= 1e-15);

        let k = kernel(&identity(3), c(0.0), 1e-10).unwrap();
        assert_eq!(k.dim(), 0);

        let b = BlockMatrix::new(
            real(2, 2, &[0.0, 0.0, 0.0, -1.0]),
            real(2, 2, &[0.0, 0.0, 0.0, 2.0]),
            real(2, 2, &[0.0, 0.0, 0.0, 1.0]),
            real(2, 2, &[0.0, 0.0, 0.0, 1.0]),
        )
        .unwrap();
        let k = kernel(&b.assemble(), c(0.0), 1e-10).unwrap();
        let expected = span(&[&[1.0, 0.0, 0.0, 0.0], &[0.0, 0.0, 1.0, 0.0]], 4);
        assert_eq!(k.dim(), 2);
        assert!(subspace_distance(&k, &expected) <= 1e-14);
    }

    #[test]
    fn kernel_of_multiple_of_identity_is_everything() {
        let k = kernel(&(identity(3) * c(2.0)), c(2.0), 1e-10).unwrap();
        assert_eq!(k.dim(), 3);
    }

    #[test]
    fn region_examples() {
        let m = real(2, 2, &[1.0, 0.0, 0.0, 5.0]);
        let u = invariant_subspace_by_region(&m, Region::RealBelow(3.0), false).unwrap();
        assert!(subspace_distance(&u, &span(&[&[1.0, 0.0]], 2)) <= 1e-15);

        // Schur route against the Hermitian spectral route.
        let m = analytic().assemble();
        let u = invariant_subspace_by_region(&m, Region::RealBelow(1.0), false).unwrap();
        let v = spectral_subspace_below(&analytic(), 1.0, true, 1e-10).unwrap();
        assert!(subspace_distance(&u, &v) <= 1e-14);

        let jordan = real(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let u = invariant_subspace_by_region(&jordan, Region::RealBelow(2.0), false).unwrap();
        assert_eq!(u.dim(), 2);
    }

    #[test]
    fn region_boundary_on_spectrum_is_ill_posed() {
        let m = real(2, 2, &[1.0, 0.0, 0.0, 5.0]);
        let e = invariant_subspace_by_region(&m, Region::RealBelow(5.0), false);
        assert!(matches!(e, Err(Error::IllPosedRegion { .. })));
        let e = invariant_subspace_by_region(&m, Region::Disk { center: c(0.0), radius: 1.0 }, true);
        assert!(matches!(e, Err(Error::IllPosedRegion { .. })));
    }

    #[test]
    fn complement_is_orthogonal_and_complete() {
        let u = span(&[&[1.0, 1.0, 0.0], &[0.0, 1.0, 1.0]], 1);
        let w = u.complement();
        assert_eq!(w.dim(), 1);
        assert!((u.basis().adjoint() * w.basis()).norm() <= 1e-15);
        assert_eq!(u.direct_sum(&w).dim(), 3);
    }
}
