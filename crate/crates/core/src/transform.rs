//! Similarity transforms built from an angular pair: the two block
//! diagonalizations `(I−Y)·B·(I−Y)⁻¹ = A − YV` and
//! `(I+Y)⁻¹·B·(I+Y) = A + VY`, the block triangularization by a single
//! angular operator, resolvent invariance of graphs, and the spectral
//! identities.

use num_complex::Complex64;
use serde::Serialize;

use crate::angular::{from_graph, AngularPair, GraphSubspace};
use crate::block::{blocks_of, identity, join_blocks, offdiag_norm, operator_norm, sigma_min, zeros, BlockMatrix, DenseMatrix};
use crate::error::{Error, Result};
use crate::spectral::{eigenvalues, HERMITIAN_TOL};

/// Condition number of `I ± Y` above which results are flagged unreliable.
pub const KAPPA_UNRELIABLE: f64 = 1e12;

/// `σ_min(I ± Y)` at or below which the pair is refused as non-complementary.
const SINGULAR_FLOOR: f64 = 1e-14;

#[derive(Clone, Debug)]
pub struct DiagonalizationResult {
    pub transformed: DenseMatrix,
    /// Operator norm of the off-diagonal blocks of `transformed` over `‖B‖`.
    pub offdiag_rel_norm: f64,
    /// Diagonal blocks of `transformed`.
    pub diag_blocks: (DenseMatrix, DenseMatrix),
    /// `‖transformed − formula‖ / ‖B‖`, where the formula is `A − YV`
    /// (left) or `A + VY` (right).
    pub formula_residual: f64,
    /// Condition number `κ(I ± Y)`.
    pub conditioning: f64,
    pub unreliable: bool,
}

struct Factor {
    inverse: DenseMatrix,
    conditioning: f64,
}

fn invert(m: &DenseMatrix) -> Result<Factor> {
    let (smax, smin) = (operator_norm(m), sigma_min(m));
    if smin <= SINGULAR_FLOOR * smax.max(1.0) {
        return Err(Error::NotComplementary { sigma_min: smin });
    }
    let inverse = m.clone().lu().try_inverse().ok_or(Error::NotComplementary { sigma_min: smin })?;
    Ok(Factor { inverse, conditioning: smax / smin })
}

fn check_pair(b: &BlockMatrix, p: &AngularPair) -> Result<()> {
    if p.n0() != b.n0() || p.n1() != b.n1() {
        return Err(Error::Shape(format!(
            "pair is for ({}, {}), block matrix is ({}, {})",
            p.n0(),
            p.n1(),
            b.n0(),
            b.n1()
        )));
    }
    Ok(())
}

fn rel(x: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        x / scale
    } else {
        x
    }
}

/// `A − YV = diag(A0 − X1·W0, A1 − X0·W1)`.
pub fn a_minus_yv(b: &BlockMatrix, p: &AngularPair) -> DenseMatrix {
    join_blocks(
        &(b.a0() - p.x1() * b.w0()),
        &zeros(b.n0(), b.n1()),
        &zeros(b.n1(), b.n0()),
        &(b.a1() - p.x0() * b.w1()),
    )
}

/// `A + VY = diag(A0 + W1·X0, A1 + W0·X1)`.
pub fn a_plus_vy(b: &BlockMatrix, p: &AngularPair) -> DenseMatrix {
    join_blocks(
        &(b.a0() + b.w1() * p.x0()),
        &zeros(b.n0(), b.n1()),
        &zeros(b.n1(), b.n0()),
        &(b.a1() + b.w0() * p.x1()),
    )
}

fn finish(b: &BlockMatrix, transformed: DenseMatrix, formula: DenseMatrix, conditioning: f64) -> DiagonalizationResult {
    let norm_b = operator_norm(&b.assemble());
    let n0 = b.n0();
    let [d0, _, _, d1] = blocks_of(&transformed, n0);
    DiagonalizationResult {
        offdiag_rel_norm: rel(offdiag_norm(&transformed, n0), norm_b),
        formula_residual: rel(operator_norm(&(&transformed - formula)), norm_b),
        diag_blocks: (d0, d1),
        transformed,
        conditioning,
        unreliable: conditioning > KAPPA_UNRELIABLE,
    }
}

/// `(I − Y)·B·(I − Y)⁻¹`, which equals `A − YV` when `Y` solves the block
/// Riccati equation.
pub fn diagonalize_left(b: &BlockMatrix, p: &AngularPair) -> Result<DiagonalizationResult> {
    check_pair(b, p)?;
    let m = identity(b.dim()) - p.y();
    let f = invert(&m)?;
    let transformed = &m * b.assemble() * &f.inverse;
    Ok(finish(b, transformed, a_minus_yv(b, p), f.conditioning))
}

/// `(I + Y)⁻¹·B·(I + Y)`, which equals `A + VY` when `Y` solves the block
/// Riccati equation.
pub fn diagonalize_right(b: &BlockMatrix, p: &AngularPair) -> Result<DiagonalizationResult> {
    check_pair(b, p)?;
    let m = identity(b.dim()) + p.y();
    let f = invert(&m)?;
    let transformed = &f.inverse * b.assemble() * &m;
    Ok(finish(b, transformed, a_plus_vy(b, p), f.conditioning))
}

/// Residuals of the extended block identity.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ExtendedIdentity {
    /// `‖(I+Y)⁻¹·B·(I+Y) − (I−Y²)⁻¹·(A−YV)·(I−Y²)‖ / ‖B‖`
    pub identity_residual: f64,
    /// `‖(I−Y²)⁻¹·(A−YV)·(I−Y²) − (A+VY)‖ / ‖B‖`
    pub diag_similar_residual: f64,
}

pub fn verify_extended_identity(b: &BlockMatrix, p: &AngularPair) -> Result<ExtendedIdentity> {
    check_pair(b, p)?;
    let n = b.dim();
    let y = p.y();
    let plus = identity(n) + y;
    let sq = identity(n) - y * y;
    let plus_inv = invert(&plus)?.inverse;
    let sq_inv = invert(&sq)?.inverse;
    let lhs = &plus_inv * b.assemble() * &plus;
    let rhs = &sq_inv * a_minus_yv(b, p) * &sq;
    let norm_b = operator_norm(&b.assemble());
    Ok(ExtendedIdentity {
        identity_residual: rel(operator_norm(&(&lhs - &rhs)), norm_b),
        diag_similar_residual: rel(operator_norm(&(&rhs - a_plus_vy(b, p))), norm_b),
    })
}

#[derive(Clone, Debug)]
pub struct TriangularizationResult {
    pub transformed: DenseMatrix,
    /// The `(1,0)` block of `transformed`; equals the Riccati residual of `X0`.
    pub lower_left: DenseMatrix,
    /// `‖lower_left‖ / ‖B‖`
    pub lower_left_rel_norm: f64,
    /// `(A0 + W1·X0, A1 − X0·W1)` computed from the inputs.
    pub diag_blocks: (DenseMatrix, DenseMatrix),
}

/// `L·B·L⁻¹` with `L = [[I, 0], [−X0, I]]`.
pub fn triangularize(b: &BlockMatrix, x0: &DenseMatrix) -> Result<TriangularizationResult> {
    let (n0, n1) = (b.n0(), b.n1());
    if x0.shape() != (n1, n0) {
        return Err(Error::Shape(format!("X0 is {}x{}, expected {n1}x{n0}", x0.nrows(), x0.ncols())));
    }
    let l = join_blocks(&identity(n0), &zeros(n0, n1), &(-x0), &identity(n1));
    let l_inv = join_blocks(&identity(n0), &zeros(n0, n1), x0, &identity(n1));
    let transformed = &l * b.assemble() * &l_inv;
    let lower_left = transformed.view((n0, 0), (n1, n0)).into_owned();
    let norm_b = operator_norm(&b.assemble());
    Ok(TriangularizationResult {
        lower_left_rel_norm: rel(operator_norm(&lower_left), norm_b),
        lower_left,
        diag_blocks: (b.a0() + b.w1() * x0, b.a1() - x0 * b.w1()),
        transformed,
    })
}

/// Relative distance below which `λ` counts as a spectral point.
pub const RESOLVENT_GAP: f64 = 1e-8;

/// `‖(I − P_G)·(B − λ)⁻¹·Q_G‖` for the graph `G`; zero iff `G` is invariant
/// for the resolvent at `λ`.
///
/// The distance of `λ` to the spectrum is measured by `σ_min(B − λ)`.
pub fn verify_resolvent_invariance(b: &BlockMatrix, g: &GraphSubspace, lambda: Complex64) -> Result<f64> {
    let (n0, n1) = g.partition();
    if (n0, n1) != (b.n0(), b.n1()) {
        return Err(Error::Shape(format!("graph is for ({n0}, {n1}), block matrix is ({}, {})", b.n0(), b.n1())));
    }
    let m = b.assemble();
    let shifted = &m - identity(b.dim()) * lambda;
    let distance = sigma_min(&shifted);
    let norm_b = operator_norm(&m);
    if distance <= RESOLVENT_GAP * norm_b.max(f64::MIN_POSITIVE) {
        return Err(Error::Resolvent { lambda, distance });
    }
    let q = from_graph(g).into_basis();
    let r = shifted
        .lu()
        .solve(&q)
        .ok_or(Error::Resolvent { lambda, distance })?;
    let coeff = q.adjoint() * &r;
    Ok(operator_norm(&(r - &q * coeff)))
}

/// Greedy matching distance between two eigenvalue multisets after sorting
/// by `(Re, Im)`: each value of `a` in order is paired with the nearest
/// unused value of `b`, and the largest pair distance is returned.
/// Multisets of different sizes are infinitely far apart.
pub fn spectra_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let lex = |x: &Complex64, y: &Complex64| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im));
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(lex);
    b.sort_by(lex);
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for x in &a {
        let (best, dist) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .expect("equal lengths");
        used[best] = true;
        worst = worst.max(dist);
    }
    worst
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralIdentityReport {
    pub holds: bool,
    /// Distance of spec(B) to spec(A0 − X1·W0) ∪ spec(A1 − X0·W1), over ‖B‖.
    pub left_distance: f64,
    /// Distance of spec(B) to spec(A0 + W1·X0) ∪ spec(A1 + W0·X1), over ‖B‖.
    pub right_distance: f64,
    pub spectrum_b: Vec<Complex64>,
    pub spectrum_left: Vec<Complex64>,
    pub spectrum_right: Vec<Complex64>,
}

/// Checks `spec(B) = spec(A0 − X1·W0) ∪ spec(A1 − X0·W1)` and the analogous
/// identity for `A + VY`, as multisets up to `tol·‖B‖`.
pub fn verify_spectral_identity(b: &BlockMatrix, p: &AngularPair, tol: f64) -> Result<SpectralIdentityReport> {
    check_pair(b, p)?;
    let m = b.assemble();
    let hermitian = b.is_hermitian(HERMITIAN_TOL);
    let spectrum_b = eigenvalues(&m, hermitian)?.eigenvalues;
    let union = |d0: &DenseMatrix, d1: &DenseMatrix| -> Result<Vec<Complex64>> {
        let mut v = eigenvalues(d0, false)?.eigenvalues;
        v.extend(eigenvalues(d1, false)?.eigenvalues);
        Ok(v)
    };
    let spectrum_left = union(&(b.a0() - p.x1() * b.w0()), &(b.a1() - p.x0() * b.w1()))?;
    let spectrum_right = union(&(b.a0() + b.w1() * p.x0()), &(b.a1() + b.w0() * p.x1()))?;
    let norm_b = operator_norm(&m);
    let left_distance = rel(spectra_distance(&spectrum_b, &spectrum_left), norm_b);
    let right_distance = rel(spectra_distance(&spectrum_b, &spectrum_right), norm_b);
    Ok(SpectralIdentityReport {
        holds: left_distance <= tol && right_distance <= tol,
        left_distance,
        right_distance,
        spectrum_b,
        spectrum_left,
        spectrum_right,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angular::{form_pair, Base};
    use crate::riccati::residual_x0;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn real(r: usize, cc: usize, v: &[f64]) -> DenseMatrix {
        DenseMatrix::from_row_iterator(r, cc, v.iter().map(|&x| c(x)))
    }

    fn analytic() -> (BlockMatrix, AngularPair) {
        let b = BlockMatrix::split(&real(2, 2, &[0.0, 1.0, 1.0, 2.0]), 1).unwrap();
        let x = 1.0 - 2f64.sqrt();
        (b, form_pair(real(1, 1, &[x]), real(1, 1, &[-x])).unwrap())
    }

    #[test]
    fn trivial_pair_leaves_diagonal_matrix_alone() {
        let b = BlockMatrix::diagonal(real(1, 1, &[1.0]), real(2, 2, &[2.0, 1.0, 0.0, 3.0])).unwrap();
        let p = form_pair(zeros(2, 1), zeros(1, 2)).unwrap();
        for r in [diagonalize_left(&b, &p).unwrap(), diagonalize_right(&b, &p).unwrap()] {
            assert_eq!(r.transformed, b.assemble());
            assert_eq!(r.offdiag_rel_norm, 0.0);
        }
        let e = verify_extended_identity(&b, &p).unwrap();
        assert_eq!(e.identity_residual, 0.0);
        assert_eq!(e.diag_similar_residual, 0.0);
    }

    #[test]
    fn analytic_diagonalizations() {
        let (b, p) = analytic();
        let (lo, hi) = (1.0 - 2f64.sqrt(), 1.0 + 2f64.sqrt());
        let expected = real(2, 2, &[lo, 0.0, 0.0, hi]);
        let left = diagonalize_left(&b, &p).unwrap();
        assert!((&left.transformed - &expected).norm() <= 1e-12);
        assert!((a_minus_yv(&b, &p) - &expected).norm() <= 1e-14);
        let right = diagonalize_right(&b, &p).unwrap();
        assert!((&right.transformed - &expected).norm() <= 1e-12);
        assert!(verify_extended_identity(&b, &p).unwrap().identity_residual <= 1e-12);
    }

    #[test]
    fn non_complementary_pair_is_refused() {
        let (b, _) = analytic();
        let p = form_pair(real(1, 1, &[1.0]), real(1, 1, &[1.0])).unwrap();
        assert!(matches!(diagonalize_left(&b, &p), Err(Error::NotComplementary { .. })));
        assert!(matches!(diagonalize_right(&b, &p), Err(Error::NotComplementary { .. })));
    }

    #[test]
    fn triangularize_examples() {
        let (b, p) = analytic();
        let t = triangularize(&b, &zeros(1, 1)).unwrap();
        assert_eq!(t.transformed, b.assemble());

        let t = triangularize(&b, p.x0()).unwrap();
        let (lo, hi) = (1.0 - 2f64.sqrt(), 1.0 + 2f64.sqrt());
        assert!((&t.transformed - real(2, 2, &[lo, 1.0, 0.0, hi])).norm() <= 1e-12);

        let x0 = real(1, 1, &[0.25]);
        let t = triangularize(&b, &x0).unwrap();
        let r = residual_x0(&b, &x0).unwrap();
        assert!((&t.lower_left - &r.residual).norm() <= 1e-15);
    }

    #[test]
    fn resolvent_invariance_examples() {
        let b = BlockMatrix::diagonal(real(1, 1, &[1.0]), real(1, 1, &[-1.0])).unwrap();
        let g = GraphSubspace::new(Base::H0, zeros(1, 1));
        assert!(verify_resolvent_invariance(&b, &g, Complex64::new(0.0, 1.0)).unwrap() <= 1e-12);

        let (b, p) = analytic();
        assert!(verify_resolvent_invariance(&b, &p.graph0(), c(0.0)).unwrap() <= 1e-12);

        // H0 is not invariant: (B − 0)⁻¹·e1 = (−2, 1) has a component off H0.
        let v = verify_resolvent_invariance(&b, &GraphSubspace::new(Base::H0, zeros(1, 1)), c(0.0)).unwrap();
        assert!((v - 1.0).abs() <= 1e-14);

        let e = verify_resolvent_invariance(&b, &p.graph0(), c(1.0 + 2f64.sqrt()));
        assert!(matches!(e, Err(Error::Resolvent { .. })));
    }

    #[test]
    fn spectral_identity_examples() {
        let b = BlockMatrix::diagonal(real(1, 1, &[3.0]), real(1, 1, &[-2.0])).unwrap();
        let p = form_pair(zeros(1, 1), zeros(1, 1)).unwrap();
        let r = verify_spectral_identity(&b, &p, 0.0).unwrap();
        assert!(r.holds);
        assert_eq!(r.left_distance, 0.0);

        let (b, p) = analytic();
        let r = verify_spectral_identity(&b, &p, 1e-12).unwrap();
        assert!(r.holds, "{r:?}");

        let bad = form_pair(real(1, 1, &[0.1]), real(1, 1, &[-0.1])).unwrap();
        assert!(!verify_spectral_identity(&b, &bad, 1e-8).unwrap().holds);
    }

    #[test]
    fn spectra_distance_handles_multisets() {
        let a = [c(1.0), c(1.0), c(2.0)];
        assert_eq!(spectra_distance(&a, &[c(2.0), c(1.0), c(1.0)]), 0.0);
        assert_eq!(spectra_distance(&a, &[c(1.0), c(2.0), c(2.0)]), 1.0);
        assert_eq!(spectra_distance(&a, &[c(1.0)]), f64::INFINITY);
    }
}
