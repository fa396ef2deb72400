//! Resolvent criteria: `‖V(A−λ)⁻¹‖`, the Neumann certificate for a point
//! `λ` to lie in the resolvent sets of both `B` and `A − YV`, and
//! estimation of the `A`-bound of `V`.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::angular::AngularPair;
use crate::block::{hermitian_defect, identity, operator_norm, sigma_min, BlockMatrix, DenseMatrix};
use crate::error::{Error, Result};
use crate::spectral::HERMITIAN_TOL;
use crate::transform::a_minus_yv;

/// Relative distance of `λ` to `spec(A)` below which the resolvent of `A`
/// is refused.
pub const RESOLVENT_FLOOR: f64 = 1e-10;

/// Number of random unit vectors used to validate a relative bound.
pub const VALIDATION_SAMPLES: usize = 256;

/// `W·(Ai − λ)⁻¹` via a solve against the adjoint: `X·S = W ⇔ S*·X* = W*`.
fn right_divide(w: &DenseMatrix, a: &DenseMatrix, lambda: Complex64) -> Result<DenseMatrix> {
    let shifted = a - identity(a.nrows()) * lambda;
    let xt = shifted
        .adjoint()
        .lu()
        .solve(&w.adjoint())
        .ok_or(Error::Resolvent { lambda, distance: 0.0 })?;
    Ok(xt.adjoint())
}

/// `‖V·(A − λ)⁻¹‖ = max(‖W1·(A1 − λ)⁻¹‖, ‖W0·(A0 − λ)⁻¹‖)`.
pub fn resolvent_norm(b: &BlockMatrix, lambda: Complex64) -> Result<f64> {
    let norm_a = b.norm_diagonal();
    for a in [b.a0(), b.a1()] {
        let distance = sigma_min(&(a - identity(a.nrows()) * lambda));
        if distance <= RESOLVENT_FLOOR * norm_a || distance == 0.0 {
            return Err(Error::Resolvent { lambda, distance });
        }
    }
    let upper = right_divide(b.w1(), b.a1(), lambda)?;
    let lower = right_divide(b.w0(), b.a0(), lambda)?;
    Ok(operator_norm(&upper).max(operator_norm(&lower)))
}

#[derive(Clone, Debug, Serialize)]
pub struct NeumannCertificate {
    pub lambda: Complex64,
    pub norm_v_resolvent: f64,
    pub norm_y: f64,
    /// `max{1, ‖Y‖}·‖V(A−λ)⁻¹‖`
    pub product: f64,
    pub holds: bool,
    /// `σ_min(B − λ)`, evaluated when the certificate holds.
    pub dist_b: Option<f64>,
    /// `σ_min(A − YV − λ)`, evaluated when the certificate holds.
    pub dist_ayv: Option<f64>,
    /// Lower bound `(1 − ‖V(A−λ)⁻¹‖)·σ_min(A − λ)` for `dist_b`.
    pub floor_b: Option<f64>,
    /// Lower bound `(1 − product)·σ_min(A − λ)` for `dist_ayv`.
    pub floor_ayv: Option<f64>,
}

impl NeumannCertificate {
    /// Both computed distances respect their Neumann-series floors up to
    /// the relative `slack`. Vacuously true when the certificate fails.
    pub fn floors_respected(&self, slack: f64) -> bool {
        let ok = |d: Option<f64>, f: Option<f64>| match (d, f) {
            (Some(d), Some(f)) => d >= f * (1.0 - slack),
            _ => true,
        };
        ok(self.dist_b, self.floor_b) && ok(self.dist_ayv, self.floor_ayv)
    }
}

/// Evaluates `max{1, ‖Y‖}·‖V(A−λ)⁻¹‖ < 1`. When it holds, `λ` lies in the
/// resolvent sets of `B` and `A − YV`; both distances are then measured and
/// reported next to their floors.
pub fn neumann_certificate(b: &BlockMatrix, p: &AngularPair, lambda: Complex64) -> Result<NeumannCertificate> {
    if p.n0() != b.n0() || p.n1() != b.n1() {
        return Err(Error::Shape(format!(
            "pair is for ({}, {}), block matrix is ({}, {})",
            p.n0(),
            p.n1(),
            b.n0(),
            b.n1()
        )));
    }
    let norm_v_resolvent = resolvent_norm(b, lambda)?;
    let norm_y = operator_norm(p.y());
    let product = norm_y.max(1.0) * norm_v_resolvent;
    let holds = product < 1.0;
    let mut cert = NeumannCertificate {
        lambda,
        norm_v_resolvent,
        norm_y,
        product,
        holds,
        dist_b: None,
        dist_ayv: None,
        floor_b: None,
        floor_ayv: None,
    };
    if holds {
        let shift = identity(b.dim()) * lambda;
        let dist_a = sigma_min(&(b.diagonal_part() - &shift));
        cert.dist_b = Some(sigma_min(&(b.assemble() - &shift)));
        cert.dist_ayv = Some(sigma_min(&(a_minus_yv(b, p) - &shift)));
        cert.floor_b = Some((1.0 - norm_v_resolvent) * dist_a);
        cert.floor_ayv = Some((1.0 - product) * dist_a);
    }
    Ok(cert)
}

#[derive(Clone, Debug, Serialize)]
pub struct RelativeBoundEstimate {
    /// Constant term; `‖V‖`.
    pub a: f64,
    /// Relative term; equal to `b_star`.
    pub b: f64,
    /// Smallest `‖V(A−λ)⁻¹‖` over the sweep.
    pub b_star: f64,
    /// `(λ, ‖V(A−λ)⁻¹‖)` for each point of the sweep.
    pub lambda_sweep: Vec<(Complex64, f64)>,
    /// `|λ|·‖(A−λ)⁻¹‖` along the sweep.
    pub sector_products: Vec<f64>,
    /// `max(‖Vx‖ − a − b‖Ax‖)` over random unit vectors `x`; non-positive
    /// when the bound holds on the sample.
    pub validation_excess: f64,
    pub validated: bool,
}

/// `A`-bound estimate from the imaginary-axis sweep `λ = iτ`, for Hermitian
/// `A`. `tau_grid` must be non-empty, positive and ascending.
pub fn estimate_relative_bound(b: &BlockMatrix, tau_grid: &[f64]) -> Result<RelativeBoundEstimate> {
    if tau_grid.is_empty() {
        return Err(Error::Contract("empty tau grid".into()));
    }
    if tau_grid.iter().any(|&t| !(t > 0.0 && t.is_finite())) || tau_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Contract("tau grid must be positive, finite and strictly ascending".into()));
    }
    for (name, a) in [("A0", b.a0()), ("A1", b.a1())] {
        let defect = hermitian_defect(a);
        if defect > HERMITIAN_TOL {
            return Err(Error::Contract(format!("{name} is not Hermitian (relative defect {defect:e})")));
        }
    }
    let lambdas: Vec<Complex64> = tau_grid.iter().map(|&t| Complex64::new(0.0, t)).collect();
    estimate_relative_bound_on(b, &lambdas)
}

/// Same estimate over a caller-chosen list of resolvent points, for
/// diagonal parts that are not Hermitian (e.g. accretive ones).
pub fn estimate_relative_bound_on(b: &BlockMatrix, lambdas: &[Complex64]) -> Result<RelativeBoundEstimate> {
    if lambdas.is_empty() {
        return Err(Error::Contract("empty lambda list".into()));
    }
    let a_diag = b.diagonal_part();
    let mut lambda_sweep = Vec::with_capacity(lambdas.len());
    let mut sector_products = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        lambda_sweep.push((lambda, resolvent_norm(b, lambda)?));
        let dist = sigma_min(&(&a_diag - identity(b.dim()) * lambda));
        sector_products.push(lambda.norm() / dist);
    }
    let b_star = lambda_sweep.iter().map(|&(_, v)| v).fold(f64::INFINITY, f64::min);
    let a = operator_norm(&b.offdiagonal_part());
    let validation_excess = validate_bound(&b.offdiagonal_part(), &a_diag, a, b_star);
    Ok(RelativeBoundEstimate {
        a,
        b: b_star,
        b_star,
        lambda_sweep,
        sector_products,
        validation_excess,
        validated: validation_excess <= 1e-12 * a.max(1.0),
    })
}

fn validate_bound(v: &DenseMatrix, a: &DenseMatrix, ca: f64, cb: f64) -> f64 {
    let n = v.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0b0d);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..VALIDATION_SAMPLES {
        let mut x = DenseMatrix::from_fn(n, 1, |_, _| {
            Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
        });
        let norm = x.norm();
        if norm == 0.0 {
            continue;
        }
        x /= Complex64::new(norm, 0.0);
        worst = worst.max((v * &x).norm() - ca - cb * (a * &x).norm());
    }
    worst
}
