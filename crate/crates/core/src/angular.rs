//! Graph subspaces, angular operators and the off-diagonal operator `Y`.

use serde::{Deserialize, Serialize};

use crate::block::{identity, join_blocks, operator_norm, sigma_min, svd, zeros, DenseMatrix};
use crate::error::{Error, Result};
use crate::spectral::Subspace;

/// Default threshold on `σ_min` of the base block below which a subspace
/// is not treated as a graph.
pub const GRAPH_TOL: f64 = 1e-8;

/// Which summand of `H = H0 ⊕ H1` a graph is taken over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Base {
    H0,
    H1,
}

/// The graph `{f ⊕ Xf}` of an angular operator `X` over `H0`
/// (`X` is `n1×n0`), or `{Xg ⊕ g}` over `H1` (`X` is `n0×n1`).
#[derive(Clone, Debug, PartialEq)]
pub struct GraphSubspace {
    pub base: Base,
    pub x: DenseMatrix,
}

impl GraphSubspace {
    pub fn new(base: Base, x: DenseMatrix) -> Self {
        Self { base, x }
    }

    /// `(n0, n1)` of the ambient partition.
    pub fn partition(&self) -> (usize, usize) {
        match self.base {
            Base::H0 => (self.x.ncols(), self.x.nrows()),
            Base::H1 => (self.x.nrows(), self.x.ncols()),
        }
    }

    /// Non-orthonormal spanning matrix `[I; X]` or `[X; I]`.
    pub fn spanning_matrix(&self) -> DenseMatrix {
        let (n0, n1) = self.partition();
        match self.base {
            Base::H0 => {
                let mut m = zeros(n0 + n1, n0);
                m.view_mut((0, 0), (n0, n0)).copy_from(&identity(n0));
                m.view_mut((n0, 0), (n1, n0)).copy_from(&self.x);
                m
            }
            Base::H1 => {
                let mut m = zeros(n0 + n1, n1);
                m.view_mut((0, 0), (n0, n1)).copy_from(&self.x);
                m.view_mut((n0, 0), (n1, n1)).copy_from(&identity(n1));
                m
            }
        }
    }
}

/// Represents `u` as a graph over `base`.
///
/// With `Q = [Q_base; Q_other]` the orthonormal basis split by rows,
/// `X = Q_other·Q_base⁻¹`, obtained from the SVD of `Q_base`. Fails with
/// [`Error::NotAGraph`] when `σ_min(Q_base) ≤ tol`.
pub fn to_graph(u: &Subspace, base: Base, tol: f64) -> Result<GraphSubspace> {
    let n0 = u.n0();
    let d = u.ambient_dim();
    let n1 = d - n0;
    let (base_rows, base_dim, other_rows, other_dim) = match base {
        Base::H0 => (0, n0, n0, n1),
        Base::H1 => (n0, n1, 0, n0),
    };
    if u.dim() != base_dim {
        return Err(Error::Shape(format!(
            "subspace has dimension {}, but a graph over {base:?} has dimension {base_dim}",
            u.dim()
        )));
    }
    let q = u.basis();
    let q_base = q.view((base_rows, 0), (base_dim, base_dim)).into_owned();
    let q_other = q.view((other_rows, 0), (other_dim, base_dim)).into_owned();
    if base_dim == 0 {
        return Ok(GraphSubspace::new(base, zeros(other_dim, 0)));
    }
    let svd = svd(&q_base)?;
    let smin = *svd.s.last().expect("non-empty base block");
    if smin <= tol {
        return Err(Error::NotAGraph { base, sigma_min: smin });
    }
    // Q_base⁻¹ = V·Σ⁻¹·U*
    let mut w = svd.v;
    for (j, s) in svd.s.iter().enumerate() {
        w.column_mut(j).scale_mut(1.0 / s);
    }
    let x = q_other * w * svd.u.adjoint();
    Ok(GraphSubspace::new(base, x))
}

/// Orthonormal basis of the graph of `g`.
pub fn from_graph(g: &GraphSubspace) -> Subspace {
    let (n0, _) = g.partition();
    Subspace::from_spanning(&g.spanning_matrix(), n0).expect("graph spanning matrices have full column rank")
}

/// The angular operators `X0: H0 → H1`, `X1: H1 → H0` and
/// `Y = [[0, X1], [X0, 0]]`.
#[derive(Clone, Debug, PartialEq)]
pub struct AngularPair {
    x0: DenseMatrix,
    x1: DenseMatrix,
    y: DenseMatrix,
}

impl AngularPair {
    pub fn x0(&self) -> &DenseMatrix {
        &self.x0
    }

    pub fn x1(&self) -> &DenseMatrix {
        &self.x1
    }

    pub fn y(&self) -> &DenseMatrix {
        &self.y
    }

    pub fn n0(&self) -> usize {
        self.x0.ncols()
    }

    pub fn n1(&self) -> usize {
        self.x0.nrows()
    }

    pub fn graph0(&self) -> GraphSubspace {
        GraphSubspace::new(Base::H0, self.x0.clone())
    }

    pub fn graph1(&self) -> GraphSubspace {
        GraphSubspace::new(Base::H1, self.x1.clone())
    }

    /// `‖Y* + Y‖`; zero for skew pairs `X1 = −X0*`.
    pub fn skew_defect(&self) -> f64 {
        operator_norm(&(self.y.adjoint() + &self.y))
    }
}

/// Assembles `Y` from `X0` (`n1×n0`) and `X1` (`n0×n1`).
pub fn form_pair(x0: DenseMatrix, x1: DenseMatrix) -> Result<AngularPair> {
    let (n1, n0) = x0.shape();
    if x1.shape() != (n0, n1) {
        return Err(Error::Shape(format!(
            "X0 is {n1}x{n0}, so X1 must be {n0}x{n1}; got {}x{}",
            x1.nrows(),
            x1.ncols()
        )));
    }
    let y = join_blocks(&zeros(n0, n0), &x1, &x0, &zeros(n1, n1));
    Ok(AngularPair { x0, x1, y })
}

/// Outcome of [`check_complementary`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Complementarity {
    pub complementary: bool,
    /// `σ_min(I + Y)`
    pub sigma_min: f64,
    /// `σ_min(I − Y)`; equal to `sigma_min` by the J-similarity.
    pub sigma_min_minus: f64,
    pub norm_y: f64,
}

/// Decides whether the graphs of `X0` and `X1` are complementary, i.e.
/// whether `I + Y` is invertible (`σ_min(I + Y) > tol`).
pub fn check_complementary(p: &AngularPair, tol: f64) -> Complementarity {
    let n = p.y.nrows();
    let plus = identity(n) + &p.y;
    let minus = identity(n) - &p.y;
    let smin_plus = sigma_min(&plus);
    let smin_minus = sigma_min(&minus);
    let norm_y = operator_norm(&p.y);
    // σ_min(I + Y) ≥ 1 − ‖Y‖
    debug_assert!(norm_y >= 1.0 || smin_plus >= (1.0 - norm_y) * (1.0 - 1e-12) - 1e-14);
    Complementarity {
        complementary: smin_plus > tol,
        sigma_min: smin_plus,
        sigma_min_minus: smin_minus,
        norm_y,
    }
}
