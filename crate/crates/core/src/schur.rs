//! Complex Schur form, reordering of diagonal entries, and eigenvectors of
//! triangular factors.

use nalgebra::Schur;
use num_complex::Complex64;

use crate::block::DenseMatrix;
use crate::error::{Error, Result};

/// `m = q·t·q*` with `q` unitary and `t` upper triangular.
pub(crate) struct ComplexSchur {
    pub q: DenseMatrix,
    pub t: DenseMatrix,
}

pub(crate) fn schur(m: &DenseMatrix) -> Result<ComplexSchur> {
    let n = m.nrows();
    if n == 0 {
        return Ok(ComplexSchur { q: m.clone(), t: m.clone() });
    }
    let max_iter = 200 * n.max(4);
    let (q, mut t) = Schur::try_new(m.clone(), f64::EPSILON, max_iter)
        .ok_or_else(|| Error::EigenFailure(format!("Schur iteration did not converge in {max_iter} sweeps (n = {n})")))?
        .unpack();
    // The complex QR iteration leaves the strictly lower part at exact or
    // deflated-negligible values; clear it.
    for j in 0..n {
        for i in (j + 1)..n {
            t[(i, j)] = Complex64::new(0.0, 0.0);
        }
    }
    Ok(ComplexSchur { q, t })
}

/// Returns `(c, s)` with `[[c, s], [-conj(s), c]]·[f; g] = [r; 0]`, `c` real.
fn givens(f: Complex64, g: Complex64) -> (f64, Complex64) {
    let gn = g.norm();
    if gn == 0.0 {
        return (1.0, Complex64::new(0.0, 0.0));
    }
    let fn_ = f.norm();
    if fn_ == 0.0 {
        return (0.0, g.conj() / gn);
    }
    let norm = fn_.hypot(gn);
    let c = fn_ / norm;
    let s = (f / fn_) * g.conj() / norm;
    (c, s)
}

impl ComplexSchur {
    /// Swaps the adjacent diagonal entries `k` and `k+1`.
    fn swap(&mut self, k: usize) {
        let n = self.t.nrows();
        let t11 = self.t[(k, k)];
        let t22 = self.t[(k + 1, k + 1)];
        let (c, s) = givens(self.t[(k, k + 1)], t22 - t11);
        for j in (k + 2)..n {
            let x = self.t[(k, j)];
            let y = self.t[(k + 1, j)];
            self.t[(k, j)] = x * c + s * y;
            self.t[(k + 1, j)] = y * c - s.conj() * x;
        }
        for i in 0..k {
            let x = self.t[(i, k)];
            let y = self.t[(i, k + 1)];
            self.t[(i, k)] = x * c + s.conj() * y;
            self.t[(i, k + 1)] = y * c - s * x;
        }
        self.t[(k, k)] = t22;
        self.t[(k + 1, k + 1)] = t11;
        for i in 0..n {
            let x = self.q[(i, k)];
            let y = self.q[(i, k + 1)];
            self.q[(i, k)] = x * c + s.conj() * y;
            self.q[(i, k + 1)] = y * c - s * x;
        }
    }

    /// Moves the selected diagonal entries to the leading positions,
    /// keeping relative order. Returns the number of selected entries.
    pub fn reorder(&mut self, select: &[bool]) -> usize {
        let mut select = select.to_vec();
        let mut head = 0;
        for k in 0..select.len() {
            if !select[k] {
                continue;
            }
            for pos in (head..k).rev() {
                self.swap(pos);
                select.swap(pos, pos + 1);
            }
            head += 1;
        }
        head
    }

    pub fn eigenvalues(&self) -> Vec<Complex64> {
        (0..self.t.nrows()).map(|i| self.t[(i, i)]).collect()
    }
}

/// Unit-norm eigenvectors of the upper triangular `t`, one per diagonal
/// entry, by back substitution. Near-zero pivots are replaced by a small
/// floor, so defective eigenvalues produce (nearly) parallel vectors.
pub(crate) fn triangular_eigenvectors(t: &DenseMatrix) -> DenseMatrix {
    let n = t.nrows();
    let scale = t.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let floor = f64::EPSILON * scale;
    let mut v = DenseMatrix::zeros(n, n);
    for i in 0..n {
        let lambda = t[(i, i)];
        let mut y = vec![Complex64::new(0.0, 0.0); n];
        y[i] = Complex64::new(1.0, 0.0);
        for j in (0..i).rev() {
            let mut acc = Complex64::new(0.0, 0.0);
            for l in (j + 1)..=i {
                acc += t[(j, l)] * y[l];
            }
            let mut pivot = t[(j, j)] - lambda;
            if pivot.norm() < floor {
                pivot = Complex64::new(floor, 0.0);
            }
            y[j] = -acc / pivot;
        }
        let norm = y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for (j, yj) in y.into_iter().enumerate() {
            v[(j, i)] = yj / norm;
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg_matrix(n: usize, seed: u64) -> DenseMatrix {
        let mut s = seed;
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        DenseMatrix::from_fn(n, n, |_, _| Complex64::new(next(), next()))
    }

    #[test]
    fn reorder_preserves_similarity_and_moves_selection() {
        let m = lcg_matrix(7, 3);
        let mut s = schur(&m).unwrap();
        let before = s.eigenvalues();
        let select: Vec<bool> = before.iter().map(|z| z.re < 0.0).collect();
        let k = s.reorder(&select);
        assert_eq!(k, select.iter().filter(|&&b| b).count());
        let recon = &s.q * &s.t * s.q.adjoint();
        assert!((recon - &m).norm() <= 1e-12);
        for i in 0..7 {
            assert_eq!(s.t[(i, i)].re < 0.0, i < k);
            for j in 0..i {
                assert_eq!(s.t[(i, j)], Complex64::new(0.0, 0.0));
            }
        }
        assert!((s.q.adjoint() * &s.q - DenseMatrix::identity(7, 7)).norm() <= 1e-13);
    }

    #[test]
    fn triangular_eigenvectors_satisfy_eigen_equation() {
        let m = lcg_matrix(6, 11);
        let s = schur(&m).unwrap();
        let v = &s.q * triangular_eigenvectors(&s.t);
        for (i, lambda) in s.eigenvalues().into_iter().enumerate() {
            let col = v.column(i);
            let r = &m * col - col * lambda;
            assert!(r.norm() <= 1e-12, "pair {i}: {}", r.norm());
        }
    }
}
