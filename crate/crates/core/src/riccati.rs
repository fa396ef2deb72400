//! Riccati residuals for the angular operators, a Schur-based Sylvester
//! solver, and a Newton iteration for `A1·X − X·A0 − X·W1·X + W0 = 0`.
//!
//! The Newton solver never looks at eigenvectors of `B`, so it serves as an
//! independent route to the angular operator obtained from spectral
//! subspaces.

use num_complex::Complex64;
use serde::Serialize;

use crate::angular::AngularPair;
use crate::block::{operator_norm, BlockMatrix, DenseMatrix};
use crate::error::{Error, Result};
use crate::schur::schur;

/// A Riccati residual and its normalized size
/// `‖R‖ / ((‖A‖ + ‖V‖)·(1 + ‖X‖)²)`.
#[derive(Clone, Debug)]
pub struct RiccatiResidual {
    pub residual: DenseMatrix,
    pub rel_norm: f64,
}

fn normalized(b: &BlockMatrix, residual: DenseMatrix, x_norm: f64) -> RiccatiResidual {
    let scale = (b.norm_diagonal() + b.norm_offdiagonal()) * (1.0 + x_norm).powi(2);
    let r = operator_norm(&residual);
    let rel_norm = if scale > 0.0 { r / scale } else { r };
    RiccatiResidual { residual, rel_norm }
}

fn check_shape(name: &str, m: &DenseMatrix, shape: (usize, usize)) -> Result<()> {
    if m.shape() != shape {
        return Err(Error::Shape(format!(
            "{name} is {}x{}, expected {}x{}",
            m.nrows(),
            m.ncols(),
            shape.0,
            shape.1
        )));
    }
    Ok(())
}

fn raw_x0(b: &BlockMatrix, x0: &DenseMatrix) -> DenseMatrix {
    b.a1() * x0 - x0 * b.a0() - (x0 * b.w1()) * x0 + b.w0()
}

/// `A1·X0 − X0·A0 − X0·W1·X0 + W0`; vanishes iff the graph of `X0` over
/// `H0` is invariant for `B`.
pub fn residual_x0(b: &BlockMatrix, x0: &DenseMatrix) -> Result<RiccatiResidual> {
    check_shape("X0", x0, (b.n1(), b.n0()))?;
    Ok(normalized(b, raw_x0(b, x0), operator_norm(x0)))
}

/// `A0·X1 − X1·A1 − X1·W0·X1 + W1`; vanishes iff the graph of `X1` over
/// `H1` is invariant for `B`.
pub fn residual_x1(b: &BlockMatrix, x1: &DenseMatrix) -> Result<RiccatiResidual> {
    check_shape("X1", x1, (b.n0(), b.n1()))?;
    let r = b.a0() * x1 - x1 * b.a1() - (x1 * b.w0()) * x1 + b.w1();
    Ok(normalized(b, r, operator_norm(x1)))
}

/// The block Riccati residual `A·Y − Y·A − Y·V·Y + V` on the full space.
/// Its off-diagonal blocks are the residuals of `X0` and `X1`; its diagonal
/// blocks vanish identically.
pub fn residual_block(b: &BlockMatrix, p: &AngularPair) -> Result<RiccatiResidual> {
    if p.n0() != b.n0() || p.n1() != b.n1() {
        return Err(Error::Shape(format!(
            "pair is for ({}, {}), block matrix is ({}, {})",
            p.n0(),
            p.n1(),
            b.n0(),
            b.n1()
        )));
    }
    let a = b.diagonal_part();
    let v = b.offdiagonal_part();
    let y = p.y();
    let r = &a * y - y * &a - (y * &v) * y + &v;
    Ok(normalized(b, r, operator_norm(y)))
}

/// Solves `P·Z − Z·Q = C` by reducing `P` and `Q` to complex Schur form
/// and back-substituting column by column.
///
/// Fails with [`Error::SylvesterSingular`] when some eigenvalues of `P`
/// and `Q` are closer than `1e-10·(‖P‖ + ‖Q‖)`.
pub fn solve_sylvester(p: &DenseMatrix, q: &DenseMatrix, c: &DenseMatrix) -> Result<DenseMatrix> {
    let (m, n) = c.shape();
    check_shape("P", p, (m, m))?;
    check_shape("Q", q, (n, n))?;
    let threshold = 1e-10 * (operator_norm(p) + operator_norm(q));
    let sp = schur(p)?;
    let sq = schur(q)?;
    let (tp, tq) = (&sp.t, &sq.t);

    let mut separation = f64::INFINITY;
    for i in 0..m {
        for j in 0..n {
            separation = separation.min((tp[(i, i)] - tq[(j, j)]).norm());
        }
    }
    if m > 0 && n > 0 && separation <= threshold {
        return Err(Error::SylvesterSingular { separation, threshold });
    }

    // Tp·Z' − Z'·Tq = U*·C·V
    let rhs = sp.q.adjoint() * c * &sq.q;
    let mut z = DenseMatrix::zeros(m, n);
    for j in 0..n {
        let mut col: Vec<Complex64> = (0..m).map(|i| rhs[(i, j)]).collect();
        for k in 0..j {
            let t = tq[(k, j)];
            if t != Complex64::new(0.0, 0.0) {
                for i in 0..m {
                    col[i] += z[(i, k)] * t;
                }
            }
        }
        let shift = tq[(j, j)];
        for i in (0..m).rev() {
            let mut acc = col[i];
            for l in (i + 1)..m {
                acc -= tp[(i, l)] * z[(l, j)];
            }
            z[(i, j)] = acc / (tp[(i, i)] - shift);
        }
    }
    Ok(&sp.q * z * sq.q.adjoint())
}

/// Convergence history of [`solve_newton_x0`].
#[derive(Clone, Debug, Default, Serialize)]
pub struct NewtonTrace {
    /// Normalized residual of every iterate, starting with the initial guess.
    pub iterates: Vec<f64>,
    pub converged: bool,
    /// Newton steps taken.
    pub iterations: usize,
}

impl NewtonTrace {
    /// Largest observed `r_{k+1} / r_k²` over steps with `r_k ≤ 1e-2` and
    /// `r_{k+1}` above the rounding floor `floor`.
    pub fn quadratic_constant(&self, floor: f64) -> Option<f64> {
        self.iterates
            .windows(2)
            .filter(|w| w[0] <= 1e-2 && w[0] > 0.0 && w[1] > floor)
            .map(|w| w[1] / (w[0] * w[0]))
            .fold(None, |acc: Option<f64>, c| Some(acc.map_or(c, |a| a.max(c))))
    }
}

/// Newton's method for the Riccati equation of `X0`.
///
/// Each step solves `(A1 − X·W1)·Δ − Δ·(A0 + W1·X) = −F(X)` and sets
/// `X ← X + Δ`. Stops once the normalized residual is `≤ tol`; running out
/// of iterations is reported through the trace, not as an error.
pub fn solve_newton_x0(
    b: &BlockMatrix,
    x0_init: &DenseMatrix,
    tol: f64,
    max_iter: usize,
) -> Result<(DenseMatrix, NewtonTrace)> {
    check_shape("X0_init", x0_init, (b.n1(), b.n0()))?;
    let mut x = x0_init.clone();
    let mut trace = NewtonTrace::default();
    loop {
        let f = residual_x0(b, &x)?;
        trace.iterates.push(f.rel_norm);
        if f.rel_norm <= tol {
            trace.converged = true;
            return Ok((x, trace));
        }
        if trace.iterations == max_iter {
            return Ok((x, trace));
        }
        let p = b.a1() - &x * b.w1();
        let q = b.a0() + b.w1() * &x;
        let delta = solve_sylvester(&p, &q, &(-f.residual))?;
        x += delta;
        trace.iterations += 1;
    }
}
