//! Dense matrices and the 2×2 block structure `B = [[A0, W1], [W0, A1]]`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix; the numeric carrier for every operator.
pub type DenseMatrix = DMatrix<Complex64>;

/// Largest singular value of `m` (zero for empty matrices, NaN if the SVD
/// fails to converge).
pub fn operator_norm(m: &DenseMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Smallest singular value of `m` (zero for empty matrices, NaN if the SVD
/// fails to converge).
pub fn sigma_min(m: &DenseMatrix) -> f64 {
    singular_values(m).last().copied().unwrap_or(0.0)
}

fn to_faer(m: &DenseMatrix) -> faer::Mat<Complex64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, Complex64>) -> DenseMatrix {
    DenseMatrix::from_fn(m.nrows(), m.ncols(), |i, j| *m.get(i, j))
}

/// Singular values in descending order.
pub(crate) fn singular_values(m: &DenseMatrix) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    match to_faer(m).singular_values() {
        Ok(s) => s,
        Err(_) => vec![f64::NAN; m.nrows().min(m.ncols())],
    }
}

/// Full SVD `m = u·diag(s)·v*` with square unitary `u`, `v` and `s`
/// descending, of length `min(rows, cols)`.
pub(crate) struct Svd {
    pub u: DenseMatrix,
    pub s: Vec<f64>,
    pub v: DenseMatrix,
}

pub(crate) fn svd(m: &DenseMatrix) -> Result<Svd> {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return Ok(Svd { u: identity(r), s: Vec::new(), v: identity(c) });
    }
    let f = to_faer(m)
        .svd()
        .map_err(|e| Error::EigenFailure(format!("SVD of a {r}x{c} matrix failed: {e:?}")))?;
    let s = f.S().column_vector().iter().map(|x| x.re).collect();
    Ok(Svd { u: from_faer(f.U()), s, v: from_faer(f.V()) })
}

pub(crate) fn identity(n: usize) -> DenseMatrix {
    DenseMatrix::identity(n, n)
}

pub(crate) fn zeros(r: usize, c: usize) -> DenseMatrix {
    DenseMatrix::zeros(r, c)
}

pub(crate) fn is_finite(m: &DenseMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Maximal entrywise distance between `m` and its adjoint, relative to the
/// Frobenius norm of `m`.
pub(crate) fn hermitian_defect(m: &DenseMatrix) -> f64 {
    let scale = m.norm().max(f64::MIN_POSITIVE);
    (m - m.adjoint()).norm() / scale
}

/// Places four blocks into one matrix `[[m00, m01], [m10, m11]]`.
pub(crate) fn join_blocks(
    m00: &DenseMatrix,
    m01: &DenseMatrix,
    m10: &DenseMatrix,
    m11: &DenseMatrix,
) -> DenseMatrix {
    let (n0, n1) = (m00.nrows(), m11.nrows());
    let mut out = zeros(n0 + n1, m00.ncols() + m11.ncols());
    let c0 = m00.ncols();
    out.view_mut((0, 0), m00.shape()).copy_from(m00);
    out.view_mut((0, c0), m01.shape()).copy_from(m01);
    out.view_mut((n0, 0), m10.shape()).copy_from(m10);
    out.view_mut((n0, c0), m11.shape()).copy_from(m11);
    out
}

/// Splits a square matrix into its four blocks with respect to `n0`.
pub(crate) fn blocks_of(m: &DenseMatrix, n0: usize) -> [DenseMatrix; 4] {
    let n1 = m.nrows() - n0;
    [
        m.view((0, 0), (n0, n0)).into_owned(),
        m.view((0, n0), (n0, n1)).into_owned(),
        m.view((n0, 0), (n1, n0)).into_owned(),
        m.view((n0, n0), (n1, n1)).into_owned(),
    ]
}

/// Operator norm of the off-diagonal part of `m` with respect to `n0`.
///
/// The off-diagonal part is block anti-diagonal, so its norm is the larger
/// of the two block norms.
pub(crate) fn offdiag_norm(m: &DenseMatrix, n0: usize) -> f64 {
    let [_, m01, m10, _] = blocks_of(m, n0);
    operator_norm(&m01).max(operator_norm(&m10))
}

/// A 2×2 block matrix on `H0 ⊕ H1`.
///
/// `A0` is `n0×n0`, `A1` is `n1×n1`, `W0: H0 → H1` is `n1×n0` and
/// `W1: H1 → H0` is `n0×n1`. All entries are finite.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockMatrix {
    a0: DenseMatrix,
    a1: DenseMatrix,
    w0: DenseMatrix,
    w1: DenseMatrix,
}

impl BlockMatrix {
    pub fn new(a0: DenseMatrix, a1: DenseMatrix, w0: DenseMatrix, w1: DenseMatrix) -> Result<Self> {
        let n0 = a0.nrows();
        let n1 = a1.nrows();
        if n0 == 0 || n1 == 0 {
            return Err(Error::Shape("both diagonal blocks must be non-empty".into()));
        }
        let expect = [
            ("A0", &a0, (n0, n0)),
            ("A1", &a1, (n1, n1)),
            ("W0", &w0, (n1, n0)),
            ("W1", &w1, (n0, n1)),
        ];
        for (name, m, shape) in expect {
            if m.shape() != shape {
                return Err(Error::Shape(format!(
                    "{name} is {}x{}, expected {}x{}",
                    m.nrows(),
                    m.ncols(),
                    shape.0,
                    shape.1
                )));
            }
            if !is_finite(m) {
                return Err(Error::NonFinite(name.into()));
            }
        }
        Ok(Self { a0, a1, w0, w1 })
    }

    /// Block matrix with zero off-diagonal part.
    pub fn diagonal(a0: DenseMatrix, a1: DenseMatrix) -> Result<Self> {
        let (n0, n1) = (a0.nrows(), a1.nrows());
        Self::new(a0, a1, zeros(n1, n0), zeros(n0, n1))
    }

    /// Inverse of [`assemble`](Self::assemble): reads the four blocks of a
    /// square matrix. Requires `0 < n0 < rows`.
    pub fn split(m: &DenseMatrix, n0: usize) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Shape(format!("matrix is {}x{}, not square", m.nrows(), m.ncols())));
        }
        if n0 == 0 || n0 >= m.nrows() {
            return Err(Error::Shape(format!("n0 = {n0} out of range for dimension {}", m.nrows())));
        }
        let [a0, w1, w0, a1] = blocks_of(m, n0);
        Self::new(a0, a1, w0, w1)
    }

    pub fn n0(&self) -> usize {
        self.a0.nrows()
    }

    pub fn n1(&self) -> usize {
        self.a1.nrows()
    }

    pub fn dim(&self) -> usize {
        self.n0() + self.n1()
    }

    pub fn a0(&self) -> &DenseMatrix {
        &self.a0
    }

    pub fn a1(&self) -> &DenseMatrix {
        &self.a1
    }

    pub fn w0(&self) -> &DenseMatrix {
        &self.w0
    }

    pub fn w1(&self) -> &DenseMatrix {
        &self.w1
    }

    /// The full matrix `[[A0, W1], [W0, A1]]`.
    pub fn assemble(&self) -> DenseMatrix {
        join_blocks(&self.a0, &self.w1, &self.w0, &self.a1)
    }

    /// The diagonal part `A = diag(A0, A1)`.
    pub fn diagonal_part(&self) -> DenseMatrix {
        join_blocks(&self.a0, &zeros(self.n0(), self.n1()), &zeros(self.n1(), self.n0()), &self.a1)
    }

    /// The off-diagonal part `V = [[0, W1], [W0, 0]]`.
    pub fn offdiagonal_part(&self) -> DenseMatrix {
        join_blocks(&zeros(self.n0(), self.n0()), &self.w1, &self.w0, &zeros(self.n1(), self.n1()))
    }

    /// Blockwise adjoint: `(B*)00 = A0*`, `(B*)01 = W0*`, `(B*)10 = W1*`,
    /// `(B*)11 = A1*`.
    pub fn adjoint(&self) -> Self {
        Self {
            a0: self.a0.adjoint(),
            a1: self.a1.adjoint(),
            w0: self.w1.adjoint(),
            w1: self.w0.adjoint(),
        }
    }

    /// Exchanges the roles of `H0` and `H1`.
    pub fn swap_roles(&self) -> Self {
        Self {
            a0: self.a1.clone(),
            a1: self.a0.clone(),
            w0: self.w1.clone(),
            w1: self.w0.clone(),
        }
    }

    /// `‖A‖ = max(‖A0‖, ‖A1‖)`.
    pub fn norm_diagonal(&self) -> f64 {
        operator_norm(&self.a0).max(operator_norm(&self.a1))
    }

    /// `‖V‖ = max(‖W0‖, ‖W1‖)`.
    pub fn norm_offdiagonal(&self) -> f64 {
        operator_norm(&self.w0).max(operator_norm(&self.w1))
    }

    /// Whether `W0 = W1*` holds up to `tol·(1 + ‖W1‖)` in operator norm.
    pub fn is_symmetric_offdiag(&self, tol: f64) -> bool {
        let defect = operator_norm(&(&self.w0 - self.w1.adjoint()));
        defect <= tol * (1.0 + operator_norm(&self.w1))
    }

    /// Whether the assembled matrix is Hermitian up to relative `tol`
    /// (Frobenius).
    pub fn is_hermitian(&self, tol: f64) -> bool {
        hermitian_defect(&self.assemble()) <= tol
    }
}

/// The signature operator `J = diag(I, −I)` on `H0 ⊕ H1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SignatureJ {
    pub n0: usize,
    pub n1: usize,
}

impl SignatureJ {
    pub fn new(n0: usize, n1: usize) -> Self {
        Self { n0, n1 }
    }

    pub fn to_matrix(&self) -> DenseMatrix {
        let n = self.n0 + self.n1;
        DenseMatrix::from_fn(n, n, |i, j| {
            if i != j {
                Complex64::new(0.0, 0.0)
            } else if i < self.n0 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(-1.0, 0.0)
            }
        })
    }

    /// `J·m·J`, computed by sign flips of the off-diagonal blocks.
    pub fn conjugate(&self, m: &DenseMatrix) -> DenseMatrix {
        let mut out = m.clone();
        for i in 0..out.nrows() {
            for j in 0..out.ncols() {
                if (i < self.n0) != (j < self.n0) {
                    out[(i, j)] = -out[(i, j)];
                }
            }
        }
        out
    }
}
