//! Command pipelines behind the `blockdiag` binary.
//!
//! Every command turns parsed inputs into a [`Report`] plus optional
//! columnar data files. Nothing here touches the filesystem; the binary
//! owns all I/O.
//!
//! Exit codes: 0 pass, 1 numeric-tolerance failure, 2 hypothesis failure,
//! 3 input or parse error.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::angular::{check_complementary, AngularPair};
use crate::block::{blocks_of, operator_norm, sigma_min, BlockMatrix, DenseMatrix};
use crate::criteria::{estimate_relative_bound, estimate_relative_bound_on, neumann_certificate};
use crate::dirac::{
    check_subordination_split, complete_pipeline, fw_transform, DiracProblem, GridSpec, ImpurityPotential, Profile,
    BACKMAP_TOL,
};
use crate::error::{Error, Result};
use crate::io::{digest, PairFile, ProblemFile, Report};
use crate::riccati::{residual_block, residual_x0, residual_x1, solve_newton_x0};
use crate::route::{spectral_pair, RouteKind};
use crate::spectral::{eigenvalues, HERMITIAN_TOL};
use crate::subordinated::{check_subordination, default_mu, run_theorem};
use crate::transform::{
    diagonalize_left, diagonalize_right, triangularize as triangularize_block, verify_extended_identity, verify_resolvent_invariance,
    verify_spectral_identity,
};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_NUMERIC: i32 = 1;
pub const EXIT_HYPOTHESIS: i32 = 2;
pub const EXIT_INPUT: i32 = 3;

/// Number of resolvent points sampled by `check` when none are given.
pub const SAMPLED_LAMBDAS: usize = 3;

/// Agreement required between the Newton and spectral solutions.
pub const NEWTON_AGREEMENT: f64 = 1e-8;

pub const NEWTON_MAX_ITER: usize = 50;

/// Exit code for an error that aborted a command.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Hypothesis(_) => EXIT_HYPOTHESIS,
        Error::Shape(_)
        | Error::NonFinite(_)
        | Error::Contract(_)
        | Error::Parse(_)
        | Error::Io(_)
        | Error::SingularSymbol(_) => EXIT_INPUT,
        _ => EXIT_NUMERIC,
    }
}

/// Machine-readable error object printed when a command aborts.
pub fn error_json(e: &Error) -> String {
    serde_json::json!({
        "error": {
            "kind": e.kind(),
            "message": e.to_string(),
            "exit_code": exit_code(e),
        }
    })
    .to_string()
}

#[derive(Clone, Debug, Serialize)]
pub struct Options {
    pub tol: f64,
    pub mu: Option<f64>,
    pub lambdas: Vec<Complex64>,
    pub seed: u64,
    pub emit_data: bool,
}

impl Default for Options {
    fn default() -> Self {
        Self { tol: crate::DEFAULT_TOL, mu: None, lambdas: Vec::new(), seed: 0, emit_data: false }
    }
}

/// Whitespace-separated text table with a `#` header line.
#[derive(Clone, Debug, PartialEq)]
pub struct DataFile {
    pub name: String,
    pub contents: String,
}

impl DataFile {
    fn table(name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Self {
        let mut contents = format!("# {}\n", header.join(" "));
        for row in rows {
            let line: Vec<String> = row.iter().map(|x| format!("{x:e}")).collect();
            let _ = writeln!(contents, "{}", line.join(" "));
        }
        Self { name: name.into(), contents }
    }
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub report: Report,
    pub data: Vec<DataFile>,
}

impl Outcome {
    fn new(mut report: Report, pass: bool, data: Vec<DataFile>) -> Self {
        if report.exit_code == EXIT_PASS && !pass {
            report.exit_code = EXIT_NUMERIC;
        }
        if report.sanitize() && report.exit_code == EXIT_PASS {
            report.exit_code = EXIT_NUMERIC;
        }
        Self { report, data }
    }
}

fn timed<T>(report: &mut Report, stage: &str, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let out = f();
    report.timings.insert(stage.into(), start.elapsed().as_secs_f64() * 1e3);
    out
}

fn start_report(command: &str, inputs: &[&str], opts: &Options) -> Report {
    let opts_json = serde_json::to_string(opts).expect("options serialize");
    let mut parts: Vec<&[u8]> = vec![command.as_bytes()];
    parts.extend(inputs.iter().map(|s| s.as_bytes()));
    parts.push(opts_json.as_bytes());
    Report::new(command, digest(&parts))
}

fn problem_inputs<'a>(problem: &'a str, pair: Option<&'a str>) -> Vec<&'a str> {
    let mut v = vec![problem];
    v.extend(pair);
    v
}

/// The injected pair, or the spectral route's pair.
fn obtain_pair(b: &BlockMatrix, pair: Option<&PairFile>, mu: Option<f64>, opts: &Options, report: &mut Report) -> Result<AngularPair> {
    match pair {
        Some(p) => {
            let p = p.to_pair()?;
            if (p.n0(), p.n1()) != (b.n0(), b.n1()) {
                return Err(Error::Shape(format!(
                    "pair is for ({}, {}), problem is ({}, {})",
                    p.n0(),
                    p.n1(),
                    b.n0(),
                    b.n1()
                )));
            }
            report.flag("pair_injected", true);
            Ok(p)
        }
        None => {
            let route = timed(report, "spectral_route", || spectral_pair(b, mu, opts.tol))?;
            report.flag("pair_injected", false);
            report.flag("route_subordinated", route.kind == RouteKind::Subordinated);
            report.scalar("route_mu", route.mu);
            Ok(route.pair)
        }
    }
}

fn pass_all(report: &Report, tol: f64) -> bool {
    report.max_residual() <= tol
}

/// Resolvent points for the invariance checks: the given ones, or
/// `SAMPLED_LAMBDAS` seeded points in the box `|Re λ| ≤ ‖B‖`,
/// `‖B‖/4 ≤ Im λ ≤ ‖B‖` that keep a relative distance to the spectrum.
fn resolvent_points(b: &BlockMatrix, opts: &Options) -> Vec<Complex64> {
    if !opts.lambdas.is_empty() {
        return opts.lambdas.clone();
    }
    let m = b.assemble();
    let scale = operator_norm(&m).max(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut out = Vec::new();
    for _ in 0..1000 {
        if out.len() == SAMPLED_LAMBDAS {
            break;
        }
        let re = scale * (2.0 * rng.random::<f64>() - 1.0);
        let im = scale * (0.25 + 0.75 * rng.random::<f64>());
        let lambda = Complex64::new(re, im);
        let shifted = &m - DenseMatrix::identity(m.nrows(), m.ncols()) * lambda;
        if sigma_min(&shifted) > 1e-3 * scale {
            out.push(lambda);
        }
    }
    out
}

/// Full verification of a problem: spectral route (or injected pair),
/// Riccati residuals, both diagonalizations, the extended identity,
/// resolvent invariance at sampled points and the spectral identities.
pub fn check(problem: &ProblemFile, pair: Option<&PairFile>, opts: &Options) -> Result<Outcome> {
    let problem_json = problem.to_json();
    let pair_json = pair.map(PairFile::to_json);
    let mut report = start_report("check", &problem_inputs(&problem_json, pair_json.as_deref()), opts);
    let b = problem.to_block()?;
    let mu = opts.mu.or(problem.mu);
    let p = obtain_pair(&b, pair, mu, opts, &mut report)?;
    report.flag("hermitian", b.is_hermitian(HERMITIAN_TOL));
    report.scalar("norm_b", operator_norm(&b.assemble()));
    report.scalar("norm_y", operator_norm(p.y()));

    report.residual("riccati_x0", residual_x0(&b, p.x0())?.rel_norm);
    report.residual("riccati_x1", residual_x1(&b, p.x1())?.rel_norm);
    report.residual("riccati_block", residual_block(&b, &p)?.rel_norm);

    let comp = check_complementary(&p, opts.tol);
    report.flag("complementary", comp.complementary);
    report.scalar("sigma_min_i_plus_y", comp.sigma_min);
    if !comp.complementary {
        report.notes.push("graphs are not complementary; diagonalizations skipped".into());
        return Ok(Outcome::new(report, false, Vec::new()));
    }

    let (left, right) = timed(&mut report, "diagonalize", || -> Result<_> {
        Ok((diagonalize_left(&b, &p)?, diagonalize_right(&b, &p)?))
    })?;
    report.residual("left_offdiag", left.offdiag_rel_norm);
    report.residual("right_offdiag", right.offdiag_rel_norm);
    report.residual("left_formula", left.formula_residual);
    report.residual("right_formula", right.formula_residual);
    report.scalar("conditioning", left.conditioning);
    report.flag("unreliable", left.unreliable);

    let ext = verify_extended_identity(&b, &p)?;
    report.residual("extended_identity", ext.identity_residual);
    report.residual("extended_diag_similar", ext.diag_similar_residual);

    let m = b.assemble();
    let points = resolvent_points(&b, opts);
    let start = Instant::now();
    {
        for (i, &lambda) in points.iter().enumerate() {
            let dist = sigma_min(&(&m - DenseMatrix::identity(m.nrows(), m.ncols()) * lambda));
            let g0 = verify_resolvent_invariance(&b, &p.graph0(), lambda)?;
            let g1 = verify_resolvent_invariance(&b, &p.graph1(), lambda)?;
            // ‖(B − λ)⁻¹‖ = 1/dist, so multiplying by dist makes the value
            // scale free.
            report.residual(&format!("resolvent_invariance_{i}_graph0"), g0 * dist);
            report.residual(&format!("resolvent_invariance_{i}_graph1"), g1 * dist);
            report.scalar(&format!("lambda_{i}_re"), lambda.re);
            report.scalar(&format!("lambda_{i}_im"), lambda.im);
        }
    }
    report.timings.insert("resolvent_invariance".into(), start.elapsed().as_secs_f64() * 1e3);

    let spec = timed(&mut report, "spectral_identity", || verify_spectral_identity(&b, &p, opts.tol))?;
    report.residual("spectral_identity_left", spec.left_distance);
    report.residual("spectral_identity_right", spec.right_distance);
    report.spectrum("B", &spec.spectrum_b);
    report.spectrum("left_blocks", &spec.spectrum_left);
    report.spectrum("right_blocks", &spec.spectrum_right);

    let pass = pass_all(&report, opts.tol);
    let data = if opts.emit_data { vec![spectra_table(&spec.spectrum_b, &spec.spectrum_left)] } else { Vec::new() };
    Ok(Outcome::new(report, pass, data))
}

fn spectra_table(b: &[Complex64], blocks: &[Complex64]) -> DataFile {
    let lex = |x: &Complex64, y: &Complex64| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im));
    let mut b = b.to_vec();
    let mut blocks = blocks.to_vec();
    b.sort_by(lex);
    blocks.sort_by(lex);
    DataFile::table(
        "spectra.dat",
        &["index", "b_re", "b_im", "blocks_re", "blocks_im"],
        b.iter().zip(&blocks).enumerate().map(|(i, (x, y))| vec![i as f64, x.re, x.im, y.re, y.im]),
    )
}

/// Both block diagonalizations.
pub fn diagonalize(problem: &ProblemFile, pair: Option<&PairFile>, opts: &Options) -> Result<Outcome> {
    let problem_json = problem.to_json();
    let pair_json = pair.map(PairFile::to_json);
    let mut report = start_report("diagonalize", &problem_inputs(&problem_json, pair_json.as_deref()), opts);
    let b = problem.to_block()?;
    let p = obtain_pair(&b, pair, opts.mu.or(problem.mu), opts, &mut report)?;
    let left = diagonalize_left(&b, &p)?;
    let right = diagonalize_right(&b, &p)?;
    report.residual("left_offdiag", left.offdiag_rel_norm);
    report.residual("right_offdiag", right.offdiag_rel_norm);
    report.residual("left_formula", left.formula_residual);
    report.residual("right_formula", right.formula_residual);
    report.scalar("conditioning_left", left.conditioning);
    report.scalar("conditioning_right", right.conditioning);
    report.flag("unreliable", left.unreliable || right.unreliable);

    let mut block_spectra = Vec::new();
    for (name, m) in [("left_block0", &left.diag_blocks.0), ("left_block1", &left.diag_blocks.1)] {
        let s = eigenvalues(m, false)?.eigenvalues;
        report.spectrum(name, &s);
        block_spectra.extend(s);
    }
    let data = if opts.emit_data {
        let sb = eigenvalues(&b.assemble(), b.is_hermitian(HERMITIAN_TOL))?.eigenvalues;
        vec![spectra_table(&sb, &block_spectra)]
    } else {
        Vec::new()
    };
    let pass = pass_all(&report, opts.tol);
    Ok(Outcome::new(report, pass, data))
}

/// Block triangularization by `X0`.
pub fn triangularize(problem: &ProblemFile, pair: Option<&PairFile>, opts: &Options) -> Result<Outcome> {
    let problem_json = problem.to_json();
    let pair_json = pair.map(PairFile::to_json);
    let mut report = start_report("triangularize", &problem_inputs(&problem_json, pair_json.as_deref()), opts);
    let b = problem.to_block()?;
    let p = obtain_pair(&b, pair, opts.mu.or(problem.mu), opts, &mut report)?;
    let t = triangularize_block(&b, p.x0())?;
    let norm_b = operator_norm(&b.assemble()).max(f64::MIN_POSITIVE);
    let [t00, _, _, t11] = blocks_of(&t.transformed, b.n0());
    report.residual("lower_left", t.lower_left_rel_norm);
    report.residual("block0_formula", operator_norm(&(t00 - &t.diag_blocks.0)) / norm_b);
    report.residual("block1_formula", operator_norm(&(t11 - &t.diag_blocks.1)) / norm_b);
    let pass = pass_all(&report, opts.tol);
    Ok(Outcome::new(report, pass, Vec::new()))
}

/// Newton–Sylvester solve for `X0`, compared against the spectral route
/// when one exists. The solved pair `(X0, −X0*)` is emitted as `pair.json`
/// with `emit_data`.
pub fn riccati_solve(problem: &ProblemFile, init: Option<&PairFile>, opts: &Options) -> Result<Outcome> {
    let problem_json = problem.to_json();
    let init_json = init.map(PairFile::to_json);
    let mut report = start_report("riccati-solve", &problem_inputs(&problem_json, init_json.as_deref()), opts);
    let b = problem.to_block()?;
    let x_init = match init {
        Some(p) => p.to_pair()?.x0().clone(),
        None => DenseMatrix::zeros(b.n1(), b.n0()),
    };
    let (x, trace) = timed(&mut report, "newton", || solve_newton_x0(&b, &x_init, opts.tol, NEWTON_MAX_ITER))?;
    report.flag("converged", trace.converged);
    report.scalar("iterations", trace.iterations as f64);
    for (k, r) in trace.iterates.iter().enumerate() {
        report.scalar(&format!("newton_residual_{k:02}"), *r);
    }
    if let Some(c) = trace.quadratic_constant(1e-13) {
        report.scalar("quadratic_constant", c);
    }
    report.residual("riccati_x0", residual_x0(&b, &x)?.rel_norm);
    report.scalar("norm_x", operator_norm(&x));
    match spectral_pair(&b, opts.mu.or(problem.mu), opts.tol) {
        Ok(route) => {
            let xs = route.pair.x0();
            let diff = operator_norm(&(&x - xs)) / (1.0 + operator_norm(xs));
            report.scalar("newton_vs_spectral", diff);
            report.flag("agrees_with_spectral", diff <= NEWTON_AGREEMENT);
        }
        Err(e) => report.notes.push(format!("no spectral comparison: {e}")),
    }
    let data = if opts.emit_data {
        let pair = crate::angular::form_pair(x.clone(), -x.adjoint())?;
        vec![DataFile { name: "pair.json".into(), contents: PairFile::from_pair(&pair).to_json() }]
    } else {
        Vec::new()
    };
    let pass = trace.converged && pass_all(&report, opts.tol);
    Ok(Outcome::new(report, pass, data))
}

/// Default imaginary-axis sweep for relative-bound estimates:
/// `τ = 10^{-2}, 10^{-1.75}, …, 10^{6}`.
pub fn default_tau_grid() -> Vec<f64> {
    (0..=32).map(|k| 10f64.powf(-2.0 + 0.25 * k as f64)).collect()
}

/// Subordinated pipeline. Exits with 2 when the hypotheses fail.
pub fn subordinated(problem: &ProblemFile, opts: &Options) -> Result<Outcome> {
    let problem_json = problem.to_json();
    let mut report = start_report("subordinated", &[&problem_json], opts);
    let b = problem.to_block()?;
    let mu = match opts.mu.or(problem.mu) {
        Some(m) => m,
        None => default_mu(&b)?,
    };
    let check = check_subordination(&b, mu)?;
    report.scalar("mu", mu);
    report.scalar("sup_spec_a0", check.sup_spec_a0);
    report.scalar("inf_spec_a1", check.inf_spec_a1);
    report.scalar("gap", check.gap);
    report.flag("subordinated", check.subordinated);
    report.flag("symmetric_v", check.symmetric_v);
    if !(check.subordinated && check.symmetric_v) {
        report.exit_code = EXIT_HYPOTHESIS;
        return Ok(Outcome::new(report, false, Vec::new()));
    }
    let r = timed(&mut report, "theorem", || run_theorem(&b, mu, opts.tol))?;
    report.scalar("norm_x", r.norm_x);
    report.scalar("contraction_margin", r.contraction_margin);
    report.scalar("dim_kernel", r.kernel_split.kernel.dim() as f64);
    report.scalar("dim_kernel0", r.kernel_split.kernel0.dim() as f64);
    report.scalar("dim_kernel1", r.kernel_split.kernel1.dim() as f64);
    report.residual("riccati_x0", r.riccati_rel);
    report.residual("adjointness", r.adjointness_residual);
    report.residual("invariance_l", r.invariance_l);
    report.residual("invariance_l_perp", r.invariance_l_perp);
    report.residual("left_offdiag", r.diag_results.0.offdiag_rel_norm);
    report.residual("right_offdiag", r.diag_results.1.offdiag_rel_norm);
    report.residual("skew_defect", r.skew_defect);
    report.flag("kernel_split_ok", r.kernel_split_ok);
    report.flag("reduces_ok", r.reduces_ok);
    report.flag("sandwich_ok", r.sandwich_ok);
    match estimate_relative_bound(&b, &default_tau_grid()) {
        Ok(est) => {
            report.scalar("relbound_a", est.a);
            report.scalar("relbound_b_star", est.b_star);
        }
        Err(e) => report.notes.push(format!("relative bound not estimated: {e}")),
    }
    let pass = pass_all(&report, opts.tol) && r.kernel_split_ok && r.reduces_ok && r.sandwich_ok;
    Ok(Outcome::new(report, pass, Vec::new()))
}

/// Neumann certificates at the given `λ` values.
pub fn neumann(problem: &ProblemFile, pair: Option<&PairFile>, opts: &Options) -> Result<Outcome> {
    if opts.lambdas.is_empty() {
        return Err(Error::Contract("neumann needs at least one --lambda".into()));
    }
    let problem_json = problem.to_json();
    let pair_json = pair.map(PairFile::to_json);
    let mut report = start_report("neumann", &problem_inputs(&problem_json, pair_json.as_deref()), opts);
    let b = problem.to_block()?;
    let p = obtain_pair(&b, pair, opts.mu.or(problem.mu), opts, &mut report)?;
    let mut certs = Vec::new();
    let mut pass = true;
    for (i, &lambda) in opts.lambdas.iter().enumerate() {
        let cert = neumann_certificate(&b, &p, lambda)?;
        report.scalar(&format!("product_{i}"), cert.product);
        report.scalar(&format!("norm_v_resolvent_{i}"), cert.norm_v_resolvent);
        report.flag(&format!("holds_{i}"), cert.holds);
        let floors = cert.floors_respected(0.1);
        report.flag(&format!("floors_respected_{i}"), floors);
        pass &= cert.holds && floors;
        certs.push(cert);
    }
    report.certificates = Some(serde_json::to_value(&certs)?);
    Ok(Outcome::new(report, pass, Vec::new()))
}

/// Relative-bound estimate along `λ = iτ`, or along the given `λ` list.
pub fn relbound(problem: &ProblemFile, opts: &Options) -> Result<Outcome> {
    let problem_json = problem.to_json();
    let mut report = start_report("relbound", &[&problem_json], opts);
    let b = problem.to_block()?;
    let est = if opts.lambdas.is_empty() {
        estimate_relative_bound(&b, &default_tau_grid())?
    } else {
        estimate_relative_bound_on(&b, &opts.lambdas)?
    };
    report.scalar("a", est.a);
    report.scalar("b", est.b);
    report.scalar("b_star", est.b_star);
    report.scalar("validation_excess", est.validation_excess);
    report.flag("validated", est.validated);
    let data = if opts.emit_data {
        vec![DataFile::table(
            "relbound_sweep.dat",
            &["lambda_re", "lambda_im", "norm_v_resolvent", "sector_product"],
            est.lambda_sweep.iter().zip(&est.sector_products).map(|(&(l, v), &s)| vec![l.re, l.im, v, s]),
        )]
    } else {
        Vec::new()
    };
    Ok(Outcome::new(report, est.validated, data))
}

/// Amplitude of the impurity, absolute or in units of the smallest grid
/// momentum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Amplitude {
    Absolute(f64),
    KMin(f64),
}

#[derive(Clone, Debug, Serialize)]
pub struct DiracParams {
    pub n: usize,
    pub length: f64,
    pub amplitude: Amplitude,
    pub profile: Profile,
    /// Defaults to `L/8`.
    pub radius: Option<f64>,
    /// Defaults to the box center.
    pub center: Option<(f64, f64)>,
}

impl Default for DiracParams {
    fn default() -> Self {
        Self {
            n: 16,
            length: 2.0 * PI,
            amplitude: Amplitude::KMin(0.05),
            profile: Profile::Disk,
            radius: None,
            center: None,
        }
    }
}

impl DiracParams {
    pub fn problem(&self) -> Result<DiracProblem> {
        let grid = GridSpec::new(self.n, self.length, true)?;
        let amplitude = match self.amplitude {
            Amplitude::Absolute(a) => a,
            Amplitude::KMin(f) => f * grid.k_min(),
        };
        let radius = self.radius.unwrap_or(self.length / 8.0);
        let center = self.center.unwrap_or((self.length / 2.0, self.length / 2.0));
        Ok(DiracProblem::new(grid, ImpurityPotential::new(amplitude, self.profile, radius, center)?))
    }
}

/// Dirac pipeline. Exits with 2 (and the margins) when the FW blocks are
/// not subordinated at zero.
pub fn dirac(params: &DiracParams, opts: &Options) -> Result<Outcome> {
    let params_json = serde_json::to_string(params)?;
    let mut report = start_report("dirac", &[&params_json], opts);
    let problem = params.problem()?;
    let grid = problem.grid;
    report.scalar("n", grid.n as f64);
    report.scalar("dim", (2 * grid.points()) as f64);
    report.scalar("amplitude", problem.potential.amplitude);

    let fw = timed(&mut report, "fw_transform", || fw_transform(&problem))?;
    let split = timed(&mut report, "subordination", || check_subordination_split(&fw, problem.u_inf(), grid.k_min()))?;
    report.residual("fw_unitarity", fw.unitarity_residual);
    report.residual("fw_conjugation", fw.conjugation_residual);
    report.residual("split_identity", split.identity_residual);
    report.scalar("k_min", split.k_min);
    report.scalar("u_inf", split.u_inf);
    report.scalar("margin", split.margin);
    report.scalar("inf_spec_plus", split.inf_spec_plus);
    report.scalar("sup_spec_minus", split.sup_spec_minus);
    report.flag("subordinated", split.subordinated);
    report.flag("margin_positive", split.margin > 0.0);

    let mut data = Vec::new();
    if opts.emit_data {
        let theta = problem.theta()?;
        data.push(DataFile::table(
            "momenta.dat",
            &["kx", "ky", "abs_k", "theta_re", "theta_im"],
            grid.momenta().iter().zip(&theta).map(|(&(kx, ky), t)| vec![kx, ky, kx.hypot(ky), t.re, t.im]),
        ));
    }
    if !split.subordinated {
        report.exit_code = EXIT_HYPOTHESIS;
        return Ok(Outcome::new(report, false, data));
    }

    let r = timed(&mut report, "pipeline", || complete_pipeline(&problem, fw, split, opts.tol))?;
    let t = &r.theorem;
    report.scalar("norm_h", r.norm_h);
    report.scalar("norm_x", t.norm_x);
    report.scalar("contraction_margin", t.contraction_margin);
    report.residual("riccati_x0", t.riccati_rel);
    report.residual("adjointness", t.adjointness_residual);
    report.residual("left_offdiag", t.diag_results.0.offdiag_rel_norm);
    report.residual("right_offdiag", t.diag_results.1.offdiag_rel_norm);
    report.residual("invariance_l", t.invariance_l);
    report.residual("invariance_l_perp", t.invariance_l_perp);
    report.scalar("backmap_negative", r.backmap_negative);
    report.scalar("backmap_positive", r.backmap_positive);
    report.flag("backmap_ok", r.backmap_ok);
    report.flag("reduces_ok", t.reduces_ok);
    report.flag("kernel_split_ok", t.kernel_split_ok);

    // Role-swapped coordinates: block 0 carries the negative energies.
    let minus = eigenvalues(&t.diag_results.0.diag_blocks.0, false)?.eigenvalues;
    let plus = eigenvalues(&t.diag_results.0.diag_blocks.1, false)?.eigenvalues;
    report.spectrum("minus_block", &minus);
    report.spectrum("plus_block", &plus);
    if opts.emit_data {
        let lex = |x: &Complex64, y: &Complex64| x.re.total_cmp(&y.re);
        let (mut minus, mut plus) = (minus, plus);
        minus.sort_by(lex);
        plus.sort_by(lex);
        data.push(DataFile::table(
            "block_spectra.dat",
            &["index", "minus_re", "minus_im", "plus_re", "plus_im"],
            minus.iter().zip(&plus).enumerate().map(|(i, (m, p))| vec![i as f64, m.re, m.im, p.re, p.im]),
        ));
    }
    let pass = pass_all(&report, opts.tol) && r.backmap_negative <= BACKMAP_TOL && r.backmap_positive <= BACKMAP_TOL;
    Ok(Outcome::new(report, pass, data))
}
