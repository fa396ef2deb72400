//! Massless two-dimensional Dirac operator `H = σ·(−i∇) + U` with a scalar
//! impurity on a periodic box, discretized as a Fourier multiplier on an
//! `N×N` grid.
//!
//! The Foldy–Wouthuysen transform `T = (1/√2)·[[Θ, I], [Θ, −I]]`, with `Θ`
//! the multiplier by `θ(k) = |k| / (k_x − i·k_y)`, maps `H` to the block
//! form
//!
//! ```text
//! [[ √(−Δ) + (U + ΘUΘ*)/2,   (ΘUΘ* − U)/2          ],
//!  [ (ΘUΘ* − U)/2,           −√(−Δ) + (U + ΘUΘ*)/2 ]]
//! ```
//!
//! whose diagonal blocks are subordinated at `μ = 0` for small `U`.
//!
//! Matrices are indexed spinor-major: component `s ∈ {0, 1}` at grid point
//! `(m_x, m_y)` sits at `s·N² + m_x·N + m_y`.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::block::{hermitian_defect, identity, join_blocks, operator_norm, zeros, BlockMatrix, DenseMatrix};
use crate::error::{Error, Result};
use crate::spectral::{eigenvalues, spectral_subspace_above, spectral_subspace_below, subspace_distance, Subspace};
use crate::subordinated::{run_theorem, TheoremResult, KERNEL_BAND};

/// Tolerance on the principal angles between back-mapped graphs and the
/// spectral subspaces of `H`.
pub const BACKMAP_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Points per axis.
    pub n: usize,
    /// Side length of the box.
    pub length: f64,
    /// Half-integer momentum offset, which keeps `k = 0` off the grid.
    pub shifted: bool,
}

impl GridSpec {
    pub fn new(n: usize, length: f64, shifted: bool) -> Result<Self> {
        if n < 4 || !n.is_multiple_of(2) {
            return Err(Error::Contract(format!("grid size must be even and at least 4, got {n}")));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::Contract(format!("box length must be positive, got {length}")));
        }
        Ok(Self { n, length, shifted })
    }

    /// Momentum components `(2π/L)·(j + s)` for `j = −N/2, …, N/2 − 1`.
    pub fn axis_momenta(&self) -> Vec<f64> {
        let s = if self.shifted { 0.5 } else { 0.0 };
        let half = (self.n / 2) as f64;
        (0..self.n).map(|j| 2.0 * PI / self.length * (j as f64 - half + s)).collect()
    }

    /// All `(k_x, k_y)`, indexed `j_x·N + j_y`.
    pub fn momenta(&self) -> Vec<(f64, f64)> {
        let axis = self.axis_momenta();
        axis.iter().flat_map(|&kx| axis.iter().map(move |&ky| (kx, ky))).collect()
    }

    /// Positions `m·L/N` along one axis.
    pub fn axis_positions(&self) -> Vec<f64> {
        (0..self.n).map(|m| m as f64 * self.length / self.n as f64).collect()
    }

    /// Smallest `|k|` on the grid.
    pub fn k_min(&self) -> f64 {
        self.momenta().into_iter().map(|(x, y)| x.hypot(y)).fold(f64::INFINITY, f64::min)
    }

    pub fn points(&self) -> usize {
        self.n * self.n
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// `u₀` inside the disk of the given radius, zero outside.
    Disk,
    /// `u₀·exp(−d²/(2r²))`.
    Gaussian,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImpurityPotential {
    pub amplitude: f64,
    pub profile: Profile,
    pub radius: f64,
    pub center: (f64, f64),
}

impl ImpurityPotential {
    pub fn new(amplitude: f64, profile: Profile, radius: f64, center: (f64, f64)) -> Result<Self> {
        if !(amplitude >= 0.0 && amplitude.is_finite()) {
            return Err(Error::Contract(format!("amplitude must be non-negative, got {amplitude}")));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Contract(format!("radius must be positive, got {radius}")));
        }
        if !(center.0.is_finite() && center.1.is_finite()) {
            return Err(Error::NonFinite("impurity center".into()));
        }
        Ok(Self { amplitude, profile, radius, center })
    }

    pub fn zero() -> Self {
        Self { amplitude: 0.0, profile: Profile::Disk, radius: 1.0, center: (0.0, 0.0) }
    }

    /// Values at the grid points, indexed `m_x·N + m_y`. Distances use the
    /// periodic minimum image.
    pub fn sample(&self, grid: &GridSpec) -> Vec<f64> {
        let xs = grid.axis_positions();
        let l = grid.length;
        let wrap = |d: f64| {
            let d = d.rem_euclid(l);
            d.min(l - d)
        };
        let mut out = Vec::with_capacity(grid.points());
        for &x in &xs {
            for &y in &xs {
                let d = wrap(x - self.center.0).hypot(wrap(y - self.center.1));
                out.push(match self.profile {
                    Profile::Disk => {
                        if d <= self.radius {
                            self.amplitude
                        } else {
                            0.0
                        }
                    }
                    Profile::Gaussian => self.amplitude * (-d * d / (2.0 * self.radius * self.radius)).exp(),
                });
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiracProblem {
    pub grid: GridSpec,
    pub potential: ImpurityPotential,
}

impl DiracProblem {
    pub fn new(grid: GridSpec, potential: ImpurityPotential) -> Self {
        Self { grid, potential }
    }

    /// `θ(k) = |k| / (k_x − i·k_y)` at every grid momentum.
    pub fn theta(&self) -> Result<Vec<Complex64>> {
        self.grid
            .momenta()
            .into_iter()
            .map(|(kx, ky)| {
                let r = kx.hypot(ky);
                if r == 0.0 {
                    Err(Error::SingularSymbol("theta is undefined at k = 0; use a shifted grid".into()))
                } else {
                    Ok(Complex64::new(r, 0.0) / Complex64::new(kx, -ky))
                }
            })
            .collect()
    }

    /// `sup |U|` over the grid.
    pub fn u_inf(&self) -> f64 {
        self.potential.sample(&self.grid).into_iter().fold(0.0, |a, u| a.max(u.abs()))
    }
}

/// Unitary discrete Fourier matrix `F[x, k] = e^{i k·x} / N`.
fn fourier(grid: &GridSpec) -> DenseMatrix {
    let xs = grid.axis_positions();
    let ks = grid.axis_momenta();
    let n = grid.n;
    let scale = 1.0 / n as f64;
    // The 2D kernel factors into two 1D phases.
    let phase = DenseMatrix::from_fn(n, n, |m, j| Complex64::from_polar(1.0, ks[j] * xs[m]));
    DenseMatrix::from_fn(n * n, n * n, |row, col| {
        let (mx, my) = (row / n, row % n);
        let (jx, jy) = (col / n, col % n);
        phase[(mx, jx)] * phase[(my, jy)] * scale
    })
}

fn multiplier(f: &DenseMatrix, symbol: &[Complex64]) -> DenseMatrix {
    let mut fd = f.clone();
    for (j, s) in symbol.iter().enumerate() {
        let mut col = fd.column_mut(j);
        col *= *s;
    }
    fd * f.adjoint()
}

fn hermitian_part(m: &DenseMatrix) -> DenseMatrix {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

fn potential_matrix(problem: &DiracProblem) -> DenseMatrix {
    let u = problem.potential.sample(&problem.grid);
    DenseMatrix::from_diagonal(&nalgebra::DVector::from_iterator(u.len(), u.into_iter().map(|x| Complex64::new(x, 0.0))))
}

/// Position-space `σ·(−i∇)`: the multiplier `[[0, k_x − i·k_y], [k_x + i·k_y, 0]]`
/// conjugated by the discrete Fourier transform.
pub fn build_free_dirac(grid: &GridSpec) -> DenseMatrix {
    let f = fourier(grid);
    let momenta = grid.momenta();
    let minus: Vec<Complex64> = momenta.iter().map(|&(x, y)| Complex64::new(x, -y)).collect();
    let plus: Vec<Complex64> = momenta.iter().map(|&(x, y)| Complex64::new(x, y)).collect();
    let upper = multiplier(&f, &minus);
    let lower = upper.adjoint();
    debug_assert!((&lower - multiplier(&f, &plus)).norm() <= 1e-10 * (1.0 + upper.norm()));
    let p = grid.points();
    join_blocks(&zeros(p, p), &upper, &lower, &zeros(p, p))
}

/// Position-space `H = σ·(−i∇) + U`.
pub fn build_hamiltonian(problem: &DiracProblem) -> DenseMatrix {
    let u = potential_matrix(problem);
    let p = problem.grid.points();
    build_free_dirac(&problem.grid) + join_blocks(&u, &zeros(p, p), &zeros(p, p), &u)
}

/// Foldy–Wouthuysen conjugation of a [`DiracProblem`].
#[derive(Clone, Debug)]
pub struct FwTransform {
    /// Block form of `T·H·T*`, positive-energy block first.
    pub block: BlockMatrix,
    /// Position-space `H`.
    pub hamiltonian: DenseMatrix,
    pub t_fw: DenseMatrix,
    /// `√(−Δ)`
    pub s: DenseMatrix,
    pub theta: DenseMatrix,
    pub u: DenseMatrix,
    /// `‖T*·T − I‖`
    pub unitarity_residual: f64,
    /// `‖T·H·T* − assemble(block)‖ / ‖H‖`
    pub conjugation_residual: f64,
}

pub fn fw_transform(problem: &DiracProblem) -> Result<FwTransform> {
    let theta_symbol = problem.theta()?;
    let grid = &problem.grid;
    let f = fourier(grid);
    let abs_k: Vec<Complex64> = grid.momenta().iter().map(|&(x, y)| Complex64::new(x.hypot(y), 0.0)).collect();
    let s = hermitian_part(&multiplier(&f, &abs_k));
    let theta = multiplier(&f, &theta_symbol);
    let u = potential_matrix(problem);
    let p = grid.points();

    let conj = &theta * &u * theta.adjoint();
    let half = Complex64::new(0.5, 0.0);
    let mean = hermitian_part(&((&u + &conj) * half));
    let w1 = hermitian_part(&((&conj - &u) * half));
    let block = BlockMatrix::new(&s + &mean, &mean - &s, w1.adjoint(), w1)?;

    let r = Complex64::new(1.0 / SQRT_2, 0.0);
    let t_fw = join_blocks(&(&theta * r), &(identity(p) * r), &(&theta * r), &(identity(p) * (-r)));
    let hamiltonian = build_hamiltonian(problem);
    let unitarity_residual = operator_norm(&(t_fw.adjoint() * &t_fw - identity(2 * p)));
    let norm_h = operator_norm(&hamiltonian);
    let conjugation_residual = operator_norm(&(&t_fw * &hamiltonian * t_fw.adjoint() - block.assemble())) / norm_h;
    Ok(FwTransform { block, hamiltonian, t_fw, s, theta, u, unitarity_residual, conjugation_residual })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SplitReport {
    /// Residual of `±√(−Δ) + (U + ΘUΘ*)/2 = ½((±√(−Δ) + U) + Θ(±√(−Δ) + U)Θ*)`,
    /// worst sign, over `‖√(−Δ)‖ + ‖U‖`.
    pub identity_residual: f64,
    /// `inf spec` of the positive-energy block.
    pub inf_spec_plus: f64,
    /// `sup spec` of the negative-energy block.
    pub sup_spec_minus: f64,
    pub subordinated: bool,
    /// Sufficient-condition margin `k_min − u_inf`.
    pub margin: f64,
    pub k_min: f64,
    pub u_inf: f64,
}

/// Verifies the split identity for both diagonal blocks and decides
/// `sup spec(minus block) ≤ 0 ≤ inf spec(plus block)` by eigensolve.
pub fn check_subordination_split(fw: &FwTransform, u_inf: f64, k_min: f64) -> Result<SplitReport> {
    let scale = operator_norm(&fw.s) + operator_norm(&fw.u);
    let half = Complex64::new(0.5, 0.0);
    let mut identity_residual = 0.0f64;
    for (sign, block) in [(1.0, fw.block.a0()), (-1.0, fw.block.a1())] {
        let inner = &fw.s * Complex64::new(sign, 0.0) + &fw.u;
        let rhs = (&inner + &fw.theta * &inner * fw.theta.adjoint()) * half;
        identity_residual = identity_residual.max(operator_norm(&(block - rhs)) / scale.max(f64::MIN_POSITIVE));
    }
    let inf_spec_plus = eigenvalues(fw.block.a0(), true)?.real()[0];
    let sup_spec_minus = *eigenvalues(fw.block.a1(), true)?.real().last().expect("non-empty block");
    let band = 1e-10 * fw.block.norm_diagonal();
    Ok(SplitReport {
        identity_residual,
        inf_spec_plus,
        sup_spec_minus,
        subordinated: sup_spec_minus <= band && -band <= inf_spec_plus,
        margin: k_min - u_inf,
        k_min,
        u_inf,
    })
}

#[derive(Clone, Debug)]
pub struct DiracPipelineResult {
    pub fw: FwTransform,
    pub split: SplitReport,
    /// Subordinated pipeline on the role-swapped block form
    /// (negative-energy block as `H0`).
    pub theorem: TheoremResult,
    /// Principal-angle distance of `T*·L` to `E_H((−∞, 0))`.
    pub backmap_negative: f64,
    /// Principal-angle distance of `T*·L⊥` to `E_H((0, ∞))`.
    pub backmap_positive: f64,
    pub backmap_ok: bool,
    pub norm_h: f64,
}

/// FW-transforms the problem, checks subordination at zero, runs the
/// subordinated pipeline, and compares the back-transformed invariant
/// subspaces with the spectral subspaces of `H`.
pub fn run_dirac_pipeline(problem: &DiracProblem, tol: f64) -> Result<DiracPipelineResult> {
    let fw = fw_transform(problem)?;
    let split = check_subordination_split(&fw, problem.u_inf(), problem.grid.k_min())?;
    complete_pipeline(problem, fw, split, tol)
}

/// The part of [`run_dirac_pipeline`] after the FW transform and the
/// subordination check, for callers that inspect the split report first.
pub fn complete_pipeline(problem: &DiracProblem, fw: FwTransform, split: SplitReport, tol: f64) -> Result<DiracPipelineResult> {
    if !split.subordinated {
        return Err(Error::Hypothesis(format!(
            "FW blocks are not subordinated at 0: inf spec(+) = {}, sup spec(-) = {}",
            split.inf_spec_plus, split.sup_spec_minus
        )));
    }
    let swapped = fw.block.swap_roles();
    let theorem = run_theorem(&swapped, 0.0, tol)?;

    // Undo the role swap: swapped coordinates are (minus, plus), the FW
    // form is (plus, minus).
    let p = problem.grid.points();
    let reorder = |q: &DenseMatrix| {
        let mut out = zeros(q.nrows(), q.ncols());
        out.view_mut((0, 0), (p, q.ncols())).copy_from(&q.view((p, 0), (p, q.ncols())));
        out.view_mut((p, 0), (p, q.ncols())).copy_from(&q.view((0, 0), (p, q.ncols())));
        out
    };
    let back = |s: &Subspace| Subspace::from_spanning(&(fw.t_fw.adjoint() * reorder(s.basis())), p);
    let negative = back(&theorem.l)?;
    let positive = back(&theorem.l.complement())?;

    let h = BlockMatrix::split(&fw.hamiltonian, p)?;
    let e_minus = spectral_subspace_below(&h, 0.0, true, KERNEL_BAND)?;
    let e_plus = spectral_subspace_above(&h, 0.0, true, KERNEL_BAND)?;
    let backmap_negative = subspace_distance(&negative, &e_minus);
    let backmap_positive = subspace_distance(&positive, &e_plus);
    let norm_h = operator_norm(&fw.hamiltonian);
    debug_assert!(hermitian_defect(&fw.hamiltonian) <= 1e-12);
    Ok(DiracPipelineResult {
        backmap_ok: backmap_negative <= BACKMAP_TOL && backmap_positive <= BACKMAP_TOL,
        fw,
        split,
        theorem,
        backmap_negative,
        backmap_positive,
        norm_h,
    })
}
