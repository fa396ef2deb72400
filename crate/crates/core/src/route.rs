//! Extraction of an angular pair from spectral data.

use serde::Serialize;

use crate::angular::{form_pair, to_graph, AngularPair, Base, GRAPH_TOL};
use crate::block::BlockMatrix;
use crate::error::{Error, Result};
use crate::spectral::{eigenvalues, invariant_subspace_by_region, Region, Subspace, HERMITIAN_TOL};
use crate::subordinated::{build_l, check_subordination, default_mu};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RouteKind {
    /// `L = Ran E_B((−∞, μ)) ⊕ (Ker(B − μ) ∩ H0)` with the skew pair
    /// `(X, −X*)`.
    Subordinated,
    /// Eigenvalues split by real part; each half represented as a graph.
    Region,
}

#[derive(Clone, Debug)]
pub struct SpectralRoute {
    pub pair: AngularPair,
    pub kind: RouteKind,
    /// Threshold separating the two halves of the spectrum.
    pub mu: f64,
    /// Invariant subspace represented over `H0`.
    pub lower: Subspace,
    /// Complementary invariant subspace represented over `H1`.
    pub upper: Subspace,
}

/// Angular pair whose graphs are complementary invariant subspaces of `B`.
///
/// Hermitian `B` with symmetric coupling and subordinated diagonal spectra
/// at `μ` (the midpoint of the diagonal spectra when `mu` is `None`) uses the
/// subordinated construction. Everything else splits the spectrum of `B` by
/// real part at `μ`, defaulting to the midpoint between the `n0`-th and
/// `(n0+1)`-th real parts.
pub fn spectral_pair(b: &BlockMatrix, mu: Option<f64>, tol: f64) -> Result<SpectralRoute> {
    if b.is_hermitian(HERMITIAN_TOL) {
        let mu_sub = match mu {
            Some(m) => m,
            None => default_mu(b)?,
        };
        let check = check_subordination(b, mu_sub)?;
        if check.subordinated && check.symmetric_v {
            let l = build_l(b, mu_sub, tol)?;
            let g = to_graph(&l, Base::H0, GRAPH_TOL)?;
            let pair = form_pair(g.x.clone(), -g.x.adjoint())?;
            let upper = l.complement();
            return Ok(SpectralRoute { pair, kind: RouteKind::Subordinated, mu: mu_sub, lower: l, upper });
        }
    }
    region_pair(b, mu)
}

fn region_pair(b: &BlockMatrix, mu: Option<f64>) -> Result<SpectralRoute> {
    let m = b.assemble();
    let hermitian = b.is_hermitian(HERMITIAN_TOL);
    let n0 = b.n0();
    let threshold = match mu {
        Some(t) => t,
        None => {
            let mut re: Vec<f64> = eigenvalues(&m, hermitian)?.eigenvalues.iter().map(|z| z.re).collect();
            re.sort_by(f64::total_cmp);
            0.5 * (re[n0 - 1] + re[n0])
        }
    };
    let lower = invariant_subspace_by_region(&m, Region::RealBelow(threshold), hermitian)?.with_partition(n0);
    let upper = invariant_subspace_by_region(&m, Region::RealAbove(threshold), hermitian)?.with_partition(n0);
    if lower.dim() != n0 {
        return Err(Error::Contract(format!(
            "{} eigenvalues have real part below {threshold}, need n0 = {n0}",
            lower.dim()
        )));
    }
    let x0 = to_graph(&lower, Base::H0, GRAPH_TOL)?.x;
    let x1 = to_graph(&upper, Base::H1, GRAPH_TOL)?.x;
    Ok(SpectralRoute { pair: form_pair(x0, x1)?, kind: RouteKind::Region, mu: threshold, lower, upper })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::block::DenseMatrix;
    use crate::riccati::{residual_x0, residual_x1};
    use crate::Complex64;

    fn real(r: usize, cc: usize, v: &[f64]) -> DenseMatrix {
        DenseMatrix::from_row_iterator(r, cc, v.iter().map(|&x| Complex64::new(x, 0.0)))
    }

    #[test]
    fn analytic_fixture_takes_subordinated_route() {
        let b = BlockMatrix::split(&real(2, 2, &[0.0, 1.0, 1.0, 2.0]), 1).unwrap();
        let r = spectral_pair(&b, None, 1e-12).unwrap();
        assert_eq!(r.kind, RouteKind::Subordinated);
        assert_eq!(r.mu, 1.0);
        assert!((r.pair.x0()[(0, 0)].re - (1.0 - 2f64.sqrt())).abs() <= 1e-14);
        assert!((r.pair.x1()[(0, 0)].re + (1.0 - 2f64.sqrt())).abs() <= 1e-14);
    }

    #[test]
    fn non_hermitian_uses_region_route() {
        let b = BlockMatrix::split(&real(3, 3, &[-2.0, 0.3, 0.1, 0.2, 1.0, 0.5, -0.1, 0.0, 2.0]), 1).unwrap();
        let r = spectral_pair(&b, None, 1e-12).unwrap();
        assert_eq!(r.kind, RouteKind::Region);
        assert!(residual_x0(&b, r.pair.x0()).unwrap().rel_norm <= 1e-14);
        assert!(residual_x1(&b, r.pair.x1()).unwrap().rel_norm <= 1e-14);
    }

    #[test]
    fn overlapping_hermitian_spectra_use_region_route() {
        // A0 = [3] lies above A1 = [0], so the diagonal spectra are not
        // subordinated; the lower eigenvector is still a graph over H0.
        let b = BlockMatrix::split(&real(2, 2, &[3.0, 1.0, 1.0, 0.0]), 1).unwrap();
        let r = spectral_pair(&b, None, 1e-12).unwrap();
        assert_eq!(r.kind, RouteKind::Region);
        assert!(residual_x0(&b, r.pair.x0()).unwrap().rel_norm <= 1e-14);
        assert!(r.pair.skew_defect() <= 1e-14);
    }

    #[test]
    fn region_with_wrong_count_fails() {
        let b = BlockMatrix::split(&real(2, 2, &[-1.0, 0.0, 0.0, -2.0]), 1).unwrap();
        assert!(matches!(spectral_pair(&b, Some(5.0), 1e-12), Err(Error::Contract(_))));
    }
}
