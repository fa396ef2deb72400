//! Block matrices with subordinated diagonal spectra,
//! `sup spec(A0) ≤ μ ≤ inf spec(A1)`, and symmetric coupling `W0 = W1*`.
//!
//! The subspace `L = Ran E_B((−∞, μ)) ⊕ (Ker(B − μ) ∩ H0)` reduces `B` and
//! is the graph of a contraction `X: H0 → H1`. The skew pair
//! `X0 = X`, `X1 = −X*` then block diagonalizes `B`, and the two diagonal
//! forms `A − YV` and `A + VY` are mutually adjoint.

use num_complex::Complex64;
use serde::Serialize;

use crate::angular::{form_pair, to_graph, AngularPair, Base, GRAPH_TOL};
use crate::block::{hermitian_defect, operator_norm, svd, zeros, BlockMatrix, DenseMatrix};
use crate::error::{Error, Result};
use crate::riccati::residual_x0;
use crate::spectral::{
    containment_residual, eigendecompose, eigenvalues, invariance_residual, kernel, null_space,
    spectral_subspace_below, subspace_distance, Subspace, HERMITIAN_TOL,
};
use crate::transform::{a_minus_yv, a_plus_vy, diagonalize_left, diagonalize_right, DiagonalizationResult};

/// Relative width of the band around `μ` for the subordination test.
pub const SUBORDINATION_BAND: f64 = 1e-10;

/// Relative width of the band of eigenvalues of `B` treated as equal to `μ`.
pub const KERNEL_BAND: f64 = 1e-9;

/// Slack on `‖X‖ ≤ 1`.
pub const CONTRACTION_SLACK: f64 = 1e-9;

/// Tolerance on the principal angles of the spectral sandwich.
pub const SANDWICH_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SubordinationCheck {
    pub mu: f64,
    pub sup_spec_a0: f64,
    pub inf_spec_a1: f64,
    pub subordinated: bool,
    pub symmetric_v: bool,
    /// `inf spec(A1) − sup spec(A0)`
    pub gap: f64,
}

fn extreme_eigenvalues(b: &BlockMatrix) -> Result<(f64, f64)> {
    for (name, a) in [("A0", b.a0()), ("A1", b.a1())] {
        let defect = hermitian_defect(a);
        if defect > HERMITIAN_TOL {
            return Err(Error::Contract(format!("{name} is not Hermitian (relative defect {defect:e})")));
        }
    }
    let top = eigenvalues(b.a0(), true)?.real().last().copied().expect("n0 > 0");
    let bottom = eigenvalues(b.a1(), true)?.real()[0];
    Ok((top, bottom))
}

/// Evaluates `sup spec(A0) ≤ μ ≤ inf spec(A1)` within `10⁻¹⁰·‖A‖`.
pub fn check_subordination(b: &BlockMatrix, mu: f64) -> Result<SubordinationCheck> {
    let (sup_spec_a0, inf_spec_a1) = extreme_eigenvalues(b)?;
    let band = SUBORDINATION_BAND * b.norm_diagonal();
    Ok(SubordinationCheck {
        mu,
        sup_spec_a0,
        inf_spec_a1,
        subordinated: sup_spec_a0 <= mu + band && mu <= inf_spec_a1 + band,
        symmetric_v: b.is_symmetric_offdiag(HERMITIAN_TOL),
        gap: inf_spec_a1 - sup_spec_a0,
    })
}

/// Midpoint `(sup spec(A0) + inf spec(A1)) / 2`; the common value when the
/// spectra touch.
pub fn default_mu(b: &BlockMatrix) -> Result<f64> {
    let (top, bottom) = extreme_eigenvalues(b)?;
    Ok(0.5 * (top + bottom))
}

fn require_hypotheses(b: &BlockMatrix, mu: f64) -> Result<SubordinationCheck> {
    let check = check_subordination(b, mu)?;
    if !check.subordinated {
        return Err(Error::Hypothesis(format!(
            "spectra are not subordinated at mu = {mu}: sup spec(A0) = {}, inf spec(A1) = {}",
            check.sup_spec_a0, check.inf_spec_a1
        )));
    }
    if !check.symmetric_v {
        return Err(Error::Hypothesis("off-diagonal part is not symmetric (W0 != W1*)".into()));
    }
    Ok(check)
}

#[derive(Clone, Debug)]
pub struct KernelSplitReport {
    /// `Ker(B − μ)`
    pub kernel: Subspace,
    /// `Ker(A0 − μ) ∩ Ker W1*`, embedded in `H0`.
    pub kernel0: Subspace,
    /// `Ker(A1 − μ) ∩ Ker W1`, embedded in `H1`.
    pub kernel1: Subspace,
    /// Largest principal-angle sine between `kernel` and `kernel0 ⊕ kernel1`.
    pub split_distance: f64,
    /// `‖(A − μ)·Q_K‖ / ‖A‖`
    pub diagonal_residual: f64,
    pub split_ok: bool,
}

fn embed(s: &Subspace, offset: usize, d: usize, n0: usize) -> Subspace {
    let mut q = zeros(d, s.dim());
    q.view_mut((offset, 0), (s.ambient_dim(), s.dim())).copy_from(s.basis());
    Subspace::from_orthonormal(q, n0)
}

fn stack(top: &DenseMatrix, bottom: &DenseMatrix) -> DenseMatrix {
    let mut m = zeros(top.nrows() + bottom.nrows(), top.ncols());
    m.view_mut((0, 0), top.shape()).copy_from(top);
    m.view_mut((top.nrows(), 0), bottom.shape()).copy_from(bottom);
    m
}

/// Checks `Ker(B − μ) = (Ker(A0 − μ) ∩ Ker W1*) ⊕ (Ker(A1 − μ) ∩ Ker W1)`
/// by dimension count and principal angles.
pub fn verify_kernel_split(b: &BlockMatrix, mu: f64, tol: f64) -> Result<KernelSplitReport> {
    require_hypotheses(b, mu).map_err(|e| match e {
        Error::Hypothesis(msg) => Error::Contract(msg),
        other => other,
    })?;
    let (n0, d) = (b.n0(), b.dim());
    let mu_c = Complex64::new(mu, 0.0);
    let shift = |a: &DenseMatrix| a - DenseMatrix::identity(a.nrows(), a.nrows()) * mu_c;
    let k = kernel(&b.assemble(), mu_c, tol)?.with_partition(n0);
    let k0 = null_space(&stack(&shift(b.a0()), &b.w1().adjoint()), tol)?;
    let k1 = null_space(&stack(&shift(b.a1()), b.w1()), tol)?;
    let kernel0 = embed(&k0, 0, d, n0);
    let kernel1 = embed(&k1, n0, d, n0);
    let mut sum = zeros(d, k0.dim() + k1.dim());
    sum.view_mut((0, 0), (d, k0.dim())).copy_from(kernel0.basis());
    sum.view_mut((0, k0.dim()), (d, k1.dim())).copy_from(kernel1.basis());
    let sum = Subspace::from_orthonormal(sum, n0);
    let split_distance = subspace_distance(&k, &sum);
    let a_shift = b.diagonal_part() - DenseMatrix::identity(d, d) * mu_c;
    let diagonal_residual = if k.dim() == 0 {
        0.0
    } else {
        operator_norm(&(a_shift * k.basis())) / b.norm_diagonal().max(f64::MIN_POSITIVE)
    };
    let angle_tol = tol.max(1e-9);
    Ok(KernelSplitReport {
        split_ok: k.dim() == k0.dim() + k1.dim() && split_distance <= angle_tol && diagonal_residual <= angle_tol,
        kernel: k,
        kernel0,
        kernel1,
        split_distance,
        diagonal_residual,
    })
}

/// Threshold on the `H1` part of combinations of near-`μ` eigenvectors
/// accepted as lying in `H0`.
const H0_SUPPORT_TOL: f64 = 1e-8;

/// Orthonormal basis of `L = Ran E_B((−∞, μ)) ⊕ (Ker(B − μ) ∩ H0)`.
///
/// Eigenvalues within `10⁻⁹·‖B‖` of `μ` are treated as kernel; among their
/// eigenvectors, the combinations with vanishing `H1` part span
/// `Ker(B − μ) ∩ H0`. Fails with [`Error::TheoremViolation`] when
/// `dim L ≠ n0`.
pub fn build_l(b: &BlockMatrix, mu: f64, tol: f64) -> Result<Subspace> {
    require_hypotheses(b, mu)?;
    let (n0, d) = (b.n0(), b.dim());
    let eig = eigendecompose(&b.assemble(), true)?;
    let vals = eig.spectrum.real();
    let norm_b = vals.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let band = KERNEL_BAND * norm_b;
    let below: Vec<usize> = (0..d).filter(|&i| vals[i] < mu - band).collect();
    let at: Vec<usize> = (0..d).filter(|&i| (vals[i] - mu).abs() <= band).collect();

    let mut kb = zeros(d, at.len());
    for (dst, &src) in at.iter().enumerate() {
        kb.set_column(dst, &eig.vectors.column(src));
    }
    // Combinations c with (K_band·c) restricted to H1 equal to zero.
    let h1_rows = kb.view((n0, 0), (d - n0, at.len())).into_owned();
    let coeffs = null_space_abs(&h1_rows, H0_SUPPORT_TOL.max(tol))?;
    let in_h0 = &kb * coeffs;

    let dim = below.len() + in_h0.ncols();
    if dim != n0 {
        return Err(Error::TheoremViolation(format!(
            "dim L = {} + {} = {dim}, expected n0 = {n0}",
            below.len(),
            in_h0.ncols()
        )));
    }
    let mut basis = zeros(d, dim);
    for (dst, &src) in below.iter().enumerate() {
        basis.set_column(dst, &eig.vectors.column(src));
    }
    basis.view_mut((0, below.len()), (d, in_h0.ncols())).copy_from(&in_h0);
    Ok(Subspace::from_orthonormal(basis, n0))
}

/// Right singular vectors of `m` with singular values at most `threshold`
/// (absolute).
fn null_space_abs(m: &DenseMatrix, threshold: f64) -> Result<DenseMatrix> {
    let c = m.ncols();
    let svd = svd(m)?;
    let keep: Vec<usize> = (0..c).filter(|&i| svd.s.get(i).is_none_or(|&s| s <= threshold)).collect();
    let mut out = zeros(c, keep.len());
    for (dst, &src) in keep.iter().enumerate() {
        out.set_column(dst, &svd.v.column(src));
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct TheoremResult {
    pub mu: f64,
    pub check: SubordinationCheck,
    pub l: Subspace,
    /// Angular operator of `L` over `H0`.
    pub x: DenseMatrix,
    pub norm_x: f64,
    /// `X0 = X`, `X1 = −X*`.
    pub pair: AngularPair,
    pub kernel_split: KernelSplitReport,
    pub kernel_split_ok: bool,
    /// Invariance residuals of `L` and `L⊥`, over `‖B‖`.
    pub invariance_l: f64,
    pub invariance_l_perp: f64,
    pub reduces_ok: bool,
    /// `‖Y* + Y‖`
    pub skew_defect: f64,
    /// `‖(A + VY)* − (A − YV)‖ / ‖B‖`
    pub adjointness_residual: f64,
    /// Relative Riccati residual of `X`.
    pub riccati_rel: f64,
    /// `(left, right)` diagonalizations.
    pub diag_results: (DiagonalizationResult, DiagonalizationResult),
    /// `E_B((−∞, μ)) ⊆ L ⊆ E_B((−∞, μ])` up to [`SANDWICH_TOL`].
    pub sandwich_ok: bool,
    /// `1 − ‖X‖`
    pub contraction_margin: f64,
}

/// Runs the full subordinated pipeline at `μ`.
pub fn run_theorem(b: &BlockMatrix, mu: f64, tol: f64) -> Result<TheoremResult> {
    let check = require_hypotheses(b, mu)?;
    let l = build_l(b, mu, tol)?;
    let g = to_graph(&l, Base::H0, GRAPH_TOL).map_err(|e| match e {
        Error::NotAGraph { sigma_min, .. } => {
            Error::TheoremViolation(format!("L is not a graph over H0 (sigma_min = {sigma_min:e})"))
        }
        other => other,
    })?;
    let x = g.x;
    let norm_x = operator_norm(&x);
    if norm_x > 1.0 + CONTRACTION_SLACK {
        return Err(Error::TheoremViolation(format!("angular operator is not a contraction: ||X|| = {norm_x}")));
    }
    let pair = form_pair(x.clone(), -x.adjoint())?;
    let m = b.assemble();
    let norm_b = operator_norm(&m).max(f64::MIN_POSITIVE);
    let l_perp = l.complement();
    let invariance_l = invariance_residual(&m, &l) / norm_b;
    let invariance_l_perp = invariance_residual(&m, &l_perp) / norm_b;
    let kernel_split = verify_kernel_split(b, mu, tol)?;
    let left = diagonalize_left(b, &pair)?;
    let right = diagonalize_right(b, &pair)?;
    let adjointness_residual = operator_norm(&(a_plus_vy(b, &pair).adjoint() - a_minus_yv(b, &pair))) / norm_b;
    let riccati_rel = residual_x0(b, &x)?.rel_norm;
    let strict_below = spectral_subspace_below(b, mu, true, KERNEL_BAND)?;
    let closed_below = spectral_subspace_below(b, mu, false, KERNEL_BAND)?;
    let sandwich_ok =
        containment_residual(&strict_below, &l) <= SANDWICH_TOL && containment_residual(&l, &closed_below) <= SANDWICH_TOL;
    Ok(TheoremResult {
        mu,
        check,
        kernel_split_ok: kernel_split.split_ok,
        kernel_split,
        reduces_ok: invariance_l <= tol && invariance_l_perp <= tol,
        invariance_l,
        invariance_l_perp,
        skew_defect: pair.skew_defect(),
        adjointness_residual,
        riccati_rel,
        diag_results: (left, right),
        sandwich_ok,
        contraction_margin: 1.0 - norm_x,
        l,
        x,
        norm_x,
        pair,
    })
}
