//! Newton solvers for the amplitude equations, their full-dispersion
//! versions and the truncated travelling-wave equation.
//!
//! Every residual map is written once over [`FieldOps`]; Jacobian columns
//! and Jacobian-vector products come from forward-mode jets. Unknowns live
//! in a symmetric subspace, which removes the translation (and phase)
//! kernels: cosine coefficients for even real fields, real Fourier
//! coefficients for complex envelopes with zeta(-Z) = conj zeta(Z).

use crate::dispersion::Regime;
use crate::dno::DnoSolver;
use crate::error::{Error, Result};
use crate::linalg::{gmres, lu_solve, smallest_singular_value, GmresOptions};
use crate::operators::{call_from_dno, calk, check_geometry, commensurate_half_length, residual_gzcs_generic, GzcsParams, KMode};
use crate::spectral::{CutoffSpec, FieldOps, Jet, Parity, SpectralField, SpectralGrid, Symbol};
use crate::wnl::{coeffs_for, kdv_coeffs, nls_coeffs, zeta_kdv, zeta_nls, MagnetizationLaw, WnlCoeffs};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use std::sync::Arc;

/// Half length of the scaled (Z) grid used by the reduced equations.
pub const SCALED_HALF_LENGTH: f64 = 40.0;
/// Default size of the scaled grid.
pub const SCALED_N: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Kdv,
    NlsPlus,
    NlsMinus,
    Gzcs,
}

/// Sign of the NLS branch (and of the weak-regime full solution).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    fn branch(self) -> Branch {
        match self {
            Sign::Plus => Branch::NlsPlus,
            Sign::Minus => Branch::NlsMinus,
        }
    }
}

/// Coordinates of a symmetric subspace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    /// Real even fields: x_m = c_m = c_{-m}, 0 <= m < N/2.
    Even,
    /// Real coefficients: x_j = c_m, m = j - N/2 + 1 in (-N/2, N/2).
    RealTransform,
}

impl Basis {
    pub fn dim(self, n: usize) -> usize {
        match self {
            Basis::Even => n / 2,
            Basis::RealTransform => n - 1,
        }
    }

    /// Integer mode of coordinate j.
    pub fn mode(self, n: usize, j: usize) -> i64 {
        match self {
            Basis::Even => j as i64,
            Basis::RealTransform => j as i64 - (n / 2) as i64 + 1,
        }
    }

    pub fn parity(self) -> Parity {
        match self {
            Basis::Even => Parity::Even,
            Basis::RealTransform => Parity::RealTransform,
        }
    }

    pub fn to_coords(self, f: &SpectralField) -> Vec<f64> {
        let g = f.grid();
        let n = g.len();
        (0..self.dim(n)).map(|j| f.coeffs()[g.index(self.mode(n, j)).unwrap()].re).collect()
    }

    pub fn from_coords(self, grid: &Arc<SpectralGrid>, x: &[f64]) -> SpectralField {
        let n = grid.len();
        let mut c = vec![Complex64::new(0.0, 0.0); n];
        for (j, &v) in x.iter().enumerate() {
            let m = self.mode(n, j);
            c[grid.index(m).unwrap()] = Complex64::new(v, 0.0);
            if self == Basis::Even && m > 0 {
                c[grid.index(-m).unwrap()] = Complex64::new(v, 0.0);
            }
        }
        SpectralField::from_coeffs(grid, c, self.parity())
    }

    /// Project a field onto the subspace.
    pub fn project(self, f: &SpectralField) -> SpectralField {
        self.from_coords(f.grid(), &self.to_coords(f))
    }
}

/// Largest violation of the reflection symmetry on the nodes, relative to
/// max |u|: u(-z) = u(z) (Even) or u(-z) = conj u(z) (RealTransform).
pub fn mirror_defect(f: &SpectralField, basis: Basis) -> f64 {
    let s = f.samples();
    let n = s.len();
    let d = (0..n)
        .map(|j| {
            let m = s[(n - j) % n];
            let m = if basis == Basis::Even { m } else { m.conj() };
            (s[j] - m).norm()
        })
        .fold(0.0, f64::max);
    d / f.max_abs().max(1e-300)
}

/// A residual map on a symmetric subspace with its linearization.
pub trait ResidualMap: Sync {
    fn grid(&self) -> &Arc<SpectralGrid>;
    fn basis(&self) -> Basis;
    fn residual(&self, u: &SpectralField) -> Result<SpectralField>;
    /// Value and directional derivative (possibly of an approximating map).
    fn jet(&self, u: &Jet) -> Jet;
    /// Diagonal right preconditioner in coordinates, for matrix-free solves.
    fn preconditioner(&self) -> Option<Vec<f64>> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Nonlinearity {
    /// + q zeta^2
    Quadratic(f64),
    /// - a3 |zeta|^2 zeta
    Cubic(f64),
}

/// L zeta + s zeta + N(zeta), N optionally filtered by chi_0(eps D).
pub struct AmplitudeProblem {
    grid: Arc<SpectralGrid>,
    basis: Basis,
    lin: Symbol,
    shift: f64,
    nonlinearity: Nonlinearity,
    cutoff: Option<Symbol>,
}

impl AmplitudeProblem {
    /// (gamma/8 - 9/8) zeta'' + 2 c0^2 zeta + 2 c0^2 d0 zeta^2.
    pub fn basic_kdv(c: &WnlCoeffs, grid: &Arc<SpectralGrid>) -> Result<Self> {
        let k = c.kdv_part()?;
        let disp = k.dispersion;
        Ok(AmplitudeProblem {
            grid: grid.clone(),
            basis: Basis::Even,
            lin: Symbol::real_even(grid, |q| -disp * q * q),
            shift: 2.0 * c.c0_squared,
            nonlinearity: Nonlinearity::Quadratic(2.0 * c.c0_squared * k.d0),
            cutoff: None,
        })
    }

    /// eps^-2 g(eps D) zeta + 2 c0^2 zeta + 2 c0^2 d0 chi_0(eps D) zeta^2.
    pub fn pfdkdv(c: &WnlCoeffs, eps: f64, cutoff: CutoffSpec, grid: &Arc<SpectralGrid>) -> Result<Self> {
        let k = c.kdv_part()?;
        let p = c.profile();
        Ok(AmplitudeProblem {
            grid: grid.clone(),
            basis: Basis::Even,
            lin: Symbol::real_even(grid, |q| p.g(eps * q) / (eps * eps)),
            shift: 2.0 * c.c0_squared,
            nonlinearity: Nonlinearity::Quadratic(2.0 * c.c0_squared * k.d0),
            cutoff: Some(cutoff.chi0_scaled(grid, eps)),
        })
    }

    /// -a1 zeta'' + a2 zeta - a3 |zeta|^2 zeta.
    pub fn basic_nls(c: &WnlCoeffs, grid: &Arc<SpectralGrid>) -> Result<Self> {
        let n = c.nls_part()?;
        let a1 = n.a1;
        Ok(AmplitudeProblem {
            grid: grid.clone(),
            basis: Basis::RealTransform,
            lin: Symbol::real_even(grid, |q| a1 * q * q),
            shift: n.a2,
            nonlinearity: Nonlinearity::Cubic(n.a3),
            cutoff: None,
        })
    }

    /// eps^-2 g(omega + eps D) zeta + c0^2 f(omega) zeta - a3 chi_0(eps D)(|zeta|^2 zeta).
    pub fn pfdnls(c: &WnlCoeffs, eps: f64, cutoff: CutoffSpec, grid: &Arc<SpectralGrid>) -> Result<Self> {
        let n = c.nls_part()?;
        let p = c.profile();
        let w = c.omega;
        Ok(AmplitudeProblem {
            grid: grid.clone(),
            basis: Basis::RealTransform,
            lin: Symbol::real(grid, |q| p.g(w + eps * q) / (eps * eps)),
            shift: n.a2,
            nonlinearity: Nonlinearity::Cubic(n.a3),
            cutoff: Some(cutoff.chi0_scaled(grid, eps)),
        })
    }

    fn eval<F: FieldOps>(&self, u: &F) -> F {
        let lin = u.apply(&self.lin).add(&u.scale(self.shift));
        let nl = match self.nonlinearity {
            Nonlinearity::Quadratic(q) => u.sq().scale(q),
            Nonlinearity::Cubic(a3) => u.mul(&u.conj()).mul(u).scale(-a3),
        };
        let nl = match &self.cutoff {
            Some(c) => nl.apply(c),
            None => nl,
        };
        lin.add(&nl)
    }
}

impl ResidualMap for AmplitudeProblem {
    fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    fn basis(&self) -> Basis {
        self.basis
    }

    fn residual(&self, u: &SpectralField) -> Result<SpectralField> {
        Ok(self.eval(u))
    }

    fn jet(&self, u: &Jet) -> Jet {
        self.eval(u)
    }
}

/// K(eta) - c^2 L(eta) on even fields.
pub struct GzcsProblem {
    grid: Arc<SpectralGrid>,
    params: GzcsParams,
    /// Expansion order used for L in the linearization (and in the
    /// residual unless an oracle is attached).
    order: usize,
    oracle: Option<DnoSolver>,
    precond: Vec<f64>,
}

impl GzcsProblem {
    pub fn new(grid: &Arc<SpectralGrid>, gamma: f64, law: MagnetizationLaw, c_squared: f64, mode: KMode) -> Result<Self> {
        let (order, oracle) = match mode {
            KMode::Expansion(o) if o <= 2 => (o, None),
            KMode::Expansion(o) => return Err(Error::Parameter(format!("expansion order must be at most 2, got {o}"))),
            KMode::Oracle(opts) => (2, Some(DnoSolver::new(grid.clone(), opts)?)),
        };
        let n = grid.len();
        let precond = (0..Basis::Even.dim(n))
            .map(|j| {
                let k = grid.dk() * j as f64;
                1.0 / (gamma - 1.0 + k * k - c_squared * crate::specfun::f_ratio(k))
            })
            .collect();
        Ok(GzcsProblem { grid: grid.clone(), params: GzcsParams { gamma, law, c_squared }, order, oracle, precond })
    }

    pub fn params(&self) -> &GzcsParams {
        &self.params
    }
}

impl ResidualMap for GzcsProblem {
    fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    fn basis(&self) -> Basis {
        Basis::Even
    }

    fn residual(&self, u: &SpectralField) -> Result<SpectralField> {
        check_geometry(u)?;
        match &self.oracle {
            None => Ok(residual_gzcs_generic(u, &self.params, self.order)),
            Some(dno) => {
                let (a, b) = dno.k_eta_pair(u)?;
                let l = call_from_dno(u, &a, &b);
                Ok(calk(u, self.params.gamma, &self.params.law).sub(&l.scale(self.params.c_squared)))
            }
        }
    }

    fn jet(&self, u: &Jet) -> Jet {
        residual_gzcs_generic(u, &self.params, self.order)
    }

    fn preconditioner(&self) -> Option<Vec<f64>> {
        Some(self.precond.clone())
    }
}

/// Jacobian-vector product in coordinates.
pub fn jacobian_action(map: &dyn ResidualMap, u: &SpectralField, v: &[f64]) -> Vec<f64> {
    let b = map.basis();
    let d = b.from_coords(map.grid(), v);
    b.to_coords(&map.jet(&Jet::new(u.clone(), d)).d)
}

/// Dense Jacobian in coordinates, column by column.
pub fn dense_jacobian(map: &dyn ResidualMap, u: &SpectralField) -> DMatrix<f64> {
    let dim = map.basis().dim(map.grid().len());
    let cols: Vec<Vec<f64>> = (0..dim)
        .into_par_iter()
        .map(|j| {
            let mut e = vec![0.0; dim];
            e[j] = 1.0;
            jacobian_action(map, u, &e)
        })
        .collect();
    DMatrix::from_fn(dim, dim, |i, j| cols[j][i])
}

/// Smallest singular value of the subspace Jacobian at u.
pub fn jacobian_smallest_singular_value(map: &dyn ResidualMap, u: &SpectralField) -> f64 {
    smallest_singular_value(&dense_jacobian(map, u))
}

/// Relative errors between the Jacobian action and central differences of
/// the residual along `count` smooth random directions. With `assembled`
/// the action is taken from the dense matrix.
pub fn jacobian_fd_check(map: &dyn ResidualMap, u: &SpectralField, count: usize, seed: u64, assembled: bool) -> Result<Vec<f64>> {
    let b = map.basis();
    let n = map.grid().len();
    let dim = b.dim(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = b.to_coords(u);
    let dense = if assembled { Some(dense_jacobian(map, u)) } else { None };
    let width = (dim as f64 / 16.0).max(2.0);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let v: Vec<f64> = (0..dim)
            .map(|j| {
                let m = b.mode(n, j) as f64;
                rng.gen_range(-1.0..1.0) * (-(m / width).powi(2)).exp()
            })
            .collect();
        let vmax = v.iter().fold(0.0f64, |a, c| a.max(c.abs()));
        let h = 1e-6 * u.max_abs().max(1e-2) / vmax;
        let shifted = |s: f64| -> Result<Vec<f64>> {
            let y: Vec<f64> = x.iter().zip(&v).map(|(a, c)| a + s * c).collect();
            Ok(b.to_coords(&map.residual(&b.from_coords(map.grid(), &y))?))
        };
        let (rp, rm) = (shifted(h)?, shifted(-h)?);
        let fd: Vec<f64> = rp.iter().zip(&rm).map(|(p, m)| (p - m) / (2.0 * h)).collect();
        let jv = match &dense {
            Some(j) => (j * DVector::from_column_slice(&v)).as_slice().to_vec(),
            None => jacobian_action(map, u, &v),
        };
        let scale = jv.iter().fold(0.0f64, |a, c| a.max(c.abs())).max(1e-300);
        let err = jv.iter().zip(&fd).map(|(a, c)| (a - c).abs()).fold(0.0, f64::max) / scale;
        out.push(err);
    }
    Ok(out)
}

/// How Newton steps are solved.
#[derive(Debug, Clone, Copy)]
pub enum LinearSolver {
    Dense,
    Gmres(GmresOptions),
}

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    /// Converged when max |residual| <= tol.
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
    pub linear: LinearSolver,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { tol: 1e-10, max_iter: 30, max_halvings: 12, linear: LinearSolver::Dense }
    }
}

/// Result of one solve. The profile itself is not serialized; see the
/// CSV writers in the command-line front end.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub branch: Branch,
    pub gamma: f64,
    pub epsilon: Option<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub tol: f64,
    pub final_residual_max: f64,
    pub final_residual_l2: f64,
    /// max |residual| of the seed and of every accepted iterate
    pub history: Vec<f64>,
    pub linear_iterations: usize,
    /// largest reflection-symmetry defect over all iterates
    pub max_mirror_defect: f64,
    /// max |solution - reference| (zeta_KdV, +-zeta_NLS, or the seed)
    pub reference_error: Option<f64>,
    /// reference_error / eps^2 (strong) or / eps (weak), full equation only
    pub normalized_deviation: Option<f64>,
    pub grid_half_length: f64,
    pub grid_n: usize,
    pub message: Option<String>,
    #[serde(skip)]
    pub solution: SpectralField,
    #[serde(skip)]
    pub reference: Option<SpectralField>,
}

struct NewtonOutcome {
    u: SpectralField,
    converged: bool,
    iterations: usize,
    history: Vec<f64>,
    linear_iterations: usize,
    max_mirror_defect: f64,
    final_residual: SpectralField,
    message: Option<String>,
}

/// Damped Newton iteration in the coordinates of `map.basis()`.
fn newton(map: &dyn ResidualMap, seed: &SpectralField, opts: &NewtonOptions) -> Result<NewtonOutcome> {
    let b = map.basis();
    let grid = map.grid().clone();
    let mut x = b.to_coords(seed);
    let mut u = b.from_coords(&grid, &x);
    let mut r = map.residual(&u)?;
    let mut rnorm = r.max_abs();
    let mut history = vec![rnorm];
    let mut linear_iterations = 0;
    let mut max_mirror_defect = mirror_defect(&u, b);
    let mut message = None;
    let mut iterations = 0;
    while rnorm > opts.tol && iterations < opts.max_iter {
        iterations += 1;
        let rc = b.to_coords(&r);
        let delta: Vec<f64> = match opts.linear {
            LinearSolver::Dense => {
                let j = dense_jacobian(map, &u);
                let rhs = DVector::from_iterator(rc.len(), rc.iter().map(|v| -v));
                lu_solve(j, &rhs)?.as_slice().to_vec()
            }
            LinearSolver::Gmres(gopts) => {
                let pre = map.preconditioner().unwrap_or_else(|| vec![1.0; rc.len()]);
                let rhs: Vec<f64> = rc.iter().map(|v| -v).collect();
                let uu = u.clone();
                let mut apply = |v: &[f64]| jacobian_action(map, &uu, v);
                let precond = |v: &[f64]| v.iter().zip(&pre).map(|(a, p)| a * p).collect();
                let out = gmres(&mut apply, &precond, &rhs, gopts);
                linear_iterations += out.iterations;
                if !out.converged && out.residual > 0.5 {
                    message = Some(format!("GMRES stalled at relative residual {:.3e}", out.residual));
                    break;
                }
                out.x
            }
        };
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..=opts.max_halvings {
            let xt: Vec<f64> = x.iter().zip(&delta).map(|(a, d)| a + lambda * d).collect();
            let ut = b.from_coords(&grid, &xt);
            match map.residual(&ut) {
                Ok(rt) if rt.max_abs() < rnorm => {
                    x = xt;
                    u = ut;
                    r = rt;
                    rnorm = r.max_abs();
                    accepted = true;
                    break;
                }
                Ok(_) | Err(Error::Geometry { .. }) => lambda *= 0.5,
                Err(e) => return Err(e),
            }
        }
        if !accepted {
            message = Some(format!("no decrease after {} step halvings at residual {rnorm:.3e}", opts.max_halvings));
            break;
        }
        history.push(rnorm);
        max_mirror_defect = max_mirror_defect.max(mirror_defect(&u, b));
    }
    let converged = rnorm <= opts.tol;
    if !converged && message.is_none() {
        message = Some(format!("iteration limit {} reached at residual {rnorm:.3e}", opts.max_iter));
    }
    Ok(NewtonOutcome { u, converged, iterations, history, linear_iterations, max_mirror_defect, final_residual: r, message })
}

fn report(
    branch: Branch,
    gamma: f64,
    epsilon: Option<f64>,
    opts: &NewtonOptions,
    out: NewtonOutcome,
    reference: Option<SpectralField>,
) -> SolveReport {
    let reference_error = reference.as_ref().map(|r| out.u.sub(r).max_abs());
    let g = out.u.grid().clone();
    SolveReport {
        branch,
        gamma,
        epsilon,
        converged: out.converged,
        iterations: out.iterations,
        tol: opts.tol,
        final_residual_max: out.final_residual.max_abs(),
        final_residual_l2: out.final_residual.l2_norm(),
        history: out.history,
        linear_iterations: out.linear_iterations,
        max_mirror_defect: out.max_mirror_defect,
        reference_error,
        normalized_deviation: None,
        grid_half_length: g.half_length(),
        grid_n: g.len(),
        message: out.message,
        solution: out.u,
        reference,
    }
}

/// Default scaled grid for the reduced equations.
pub fn scaled_grid() -> Result<Arc<SpectralGrid>> {
    SpectralGrid::new(SCALED_HALF_LENGTH, SCALED_N)
}

/// zeta_KdV sampled on a grid.
pub fn kdv_profile(c: &WnlCoeffs, grid: &Arc<SpectralGrid>) -> Result<SpectralField> {
    zeta_kdv(0.0, c)?;
    Ok(SpectralField::from_fn(grid, |z| zeta_kdv(z, c).unwrap(), Parity::Even))
}

/// zeta_NLS sampled on a grid, as a real-transform field.
pub fn nls_profile(c: &WnlCoeffs, grid: &Arc<SpectralGrid>) -> Result<SpectralField> {
    zeta_nls(0.0, c)?;
    Ok(SpectralField::from_fn(grid, |z| zeta_nls(z, c).unwrap(), Parity::Even).with_parity(Parity::RealTransform))
}

/// Stationary KdV equation from a given seed (default 0.9 zeta_KdV).
pub fn solve_stationary_kdv(c: &WnlCoeffs, grid: &Arc<SpectralGrid>, seed: Option<&SpectralField>) -> Result<SolveReport> {
    let map = AmplitudeProblem::basic_kdv(c, grid)?;
    let exact = kdv_profile(c, grid)?;
    let seed = seed.cloned().unwrap_or_else(|| exact.scale(0.9));
    let opts = NewtonOptions::default();
    let out = newton(&map, &seed, &opts)?;
    Ok(report(Branch::Kdv, c.gamma, None, &opts, out, Some(exact)))
}

/// Stationary NLS equation from +-0.9 zeta_NLS.
pub fn solve_stationary_nls(c: &WnlCoeffs, grid: &Arc<SpectralGrid>, sign: Sign) -> Result<SolveReport> {
    let map = AmplitudeProblem::basic_nls(c, grid)?;
    let exact = nls_profile(c, grid)?.scale(sign.value());
    let opts = NewtonOptions::default();
    let out = newton(&map, &exact.scale(0.9), &opts)?;
    Ok(report(sign.branch(), c.gamma, None, &opts, out, Some(exact)))
}

/// Settings shared by the full-dispersion reduced solves.
#[derive(Debug, Clone, Copy)]
pub struct ReducedConfig {
    /// Cutoff width; regime default when None.
    pub delta: Option<f64>,
    pub newton: NewtonOptions,
}

impl Default for ReducedConfig {
    fn default() -> Self {
        ReducedConfig { delta: None, newton: NewtonOptions::default() }
    }
}

fn check_epsilon(eps: f64, max: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= max) {
        return Err(Error::Parameter(format!("epsilon must lie in (0, {max}], got {eps}")));
    }
    Ok(())
}

fn cutoff_for(c: &WnlCoeffs, delta: Option<f64>) -> Result<CutoffSpec> {
    match delta {
        Some(d) => CutoffSpec::new(d, c.omega),
        None => Ok(CutoffSpec::default_for(c.omega)),
    }
}

/// Full-dispersion KdV equation, seeded with zeta_KdV.
pub fn solve_pfdkdv(
    gamma: f64,
    law: &MagnetizationLaw,
    eps: f64,
    grid: &Arc<SpectralGrid>,
    cfg: &ReducedConfig,
) -> Result<SolveReport> {
    check_epsilon(eps, 0.3)?;
    let c = kdv_coeffs(gamma, law)?;
    let map = AmplitudeProblem::pfdkdv(&c, eps, cutoff_for(&c, cfg.delta)?, grid)?;
    let exact = kdv_profile(&c, grid)?;
    let out = newton(&map, &exact, &cfg.newton)?;
    Ok(report(Branch::Kdv, gamma, Some(eps), &cfg.newton, out, Some(exact)))
}

/// Full-dispersion NLS equation, seeded with +-zeta_NLS.
pub fn solve_pfdnls(
    gamma: f64,
    law: &MagnetizationLaw,
    eps: f64,
    sign: Sign,
    grid: &Arc<SpectralGrid>,
    cfg: &ReducedConfig,
) -> Result<SolveReport> {
    check_epsilon(eps, 0.5)?;
    let c = nls_coeffs(gamma, law)?;
    let map = AmplitudeProblem::pfdnls(&c, eps, cutoff_for(&c, cfg.delta)?, grid)?;
    let exact = nls_profile(&c, grid)?.scale(sign.value());
    let out = newton(&map, &exact, &cfg.newton)?;
    Ok(report(sign.branch(), gamma, Some(eps), &cfg.newton, out, Some(exact)))
}

/// Unscaled surface from an envelope given on a scaled grid:
/// eps^2 zeta(eps z) (strong) or eps Re(zeta(eps z) e^{i omega z}) (weak).
/// The envelope is continued by zero outside its box.
pub fn reconstruct_eta(
    zeta: &SpectralField,
    eps: f64,
    regime: Regime,
    omega: f64,
    target: &Arc<SpectralGrid>,
) -> Result<SpectralField> {
    if !(eps > 0.0) {
        return Err(Error::Parameter(format!("epsilon must be positive, got {eps}")));
    }
    let lz = zeta.grid().half_length();
    let dk = zeta.grid().dk();
    let n = zeta.grid().len();
    // ordered by |m| so the powers below are built incrementally
    let mut coeffs: Vec<(i64, Complex64)> =
        (0..n).map(|i| (zeta.grid().mode(i), zeta.coeffs()[i])).filter(|(_, c)| c.norm() > 0.0).collect();
    coeffs.sort_by_key(|(m, _)| m.abs());
    let env = |zz: f64| -> Complex64 {
        if zz.abs() > lz {
            return Complex64::new(0.0, 0.0);
        }
        let w = Complex64::from_polar(1.0, dk * zz);
        let wi = w.conj();
        let (mut pos, mut neg) = (Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0));
        let mut sum = Complex64::new(0.0, 0.0);
        let mut sorted_pos = 0i64;
        let mut sorted_neg = 0i64;
        for &(m, c) in &coeffs {
            if m >= 0 {
                while sorted_pos < m {
                    pos *= w;
                    sorted_pos += 1;
                }
                sum += c * pos;
            } else {
                while sorted_neg > m {
                    neg *= wi;
                    sorted_neg -= 1;
                }
                sum += c * neg;
            }
        }
        sum
    };
    let z = target.nodes();
    let vals: Vec<f64> = match regime {
        Regime::Strong => z.iter().map(|&zz| eps * eps * env(eps * zz).re).collect(),
        Regime::Weak => {
            if target.index_of_wavenumber(omega).is_none() {
                return Err(Error::GridMismatch(format!("omega = {omega} is not a wavenumber of {target:?}")));
            }
            z.iter().map(|&zz| eps * (env(eps * zz) * Complex64::from_polar(1.0, omega * zz)).re).collect()
        }
        Regime::Critical => return Err(Error::Regime("no reconstruction at gamma = 9".into())),
    };
    Ok(Basis::Even.project(&SpectralField::from_real_samples(target, &vals, Parity::Even)))
}

/// Box and size for the unscaled problem: L >= 40/eps (a multiple of
/// pi/omega in the weak regime) and resolution up to k = 3 (strong) or
/// 7 omega (weak).
pub fn gzcs_grid(gamma: f64, eps: f64) -> Result<(f64, usize)> {
    let c = coeffs_for(gamma, &MagnetizationLaw::linear())?;
    let min_l = SCALED_HALF_LENGTH / eps;
    let l = match c.regime {
        Regime::Weak => commensurate_half_length(min_l, c.omega),
        _ => min_l,
    };
    Ok((l, gzcs_resolution(gamma, l)?))
}

/// Smallest power of two resolving the full equation on half length `l`.
pub fn gzcs_resolution(gamma: f64, l: f64) -> Result<usize> {
    let c = coeffs_for(gamma, &MagnetizationLaw::linear())?;
    let kmax = if c.regime == Regime::Weak { 7.0 * c.omega } else { 3.0 };
    Ok(((2.0 * l * kmax / PI).ceil() as usize).next_power_of_two().max(64))
}

/// A full-equation solve.
#[derive(Debug, Clone)]
pub struct GzcsSpec {
    pub gamma: f64,
    pub law: MagnetizationLaw,
    pub epsilon: f64,
    pub mode: KMode,
    pub sign: Sign,
    /// (L, N); derived from gamma and epsilon when None.
    pub grid: Option<(f64, usize)>,
    pub newton: NewtonOptions,
}

impl GzcsSpec {
    pub fn new(gamma: f64, epsilon: f64) -> Self {
        GzcsSpec {
            gamma,
            law: MagnetizationLaw::linear(),
            epsilon,
            mode: KMode::Expansion(2),
            sign: Sign::Plus,
            grid: None,
            newton: NewtonOptions {
                tol: 1e-11,
                max_iter: 30,
                max_halvings: 12,
                linear: LinearSolver::Gmres(GmresOptions { restart: 100, max_iter: 3000, rel_tol: 1e-9 }),
            },
        }
    }
}

/// Leading-order seed of the full equation on its grid.
pub fn gzcs_seed(spec: &GzcsSpec, grid: &Arc<SpectralGrid>) -> Result<SpectralField> {
    let c = coeffs_for(spec.gamma, &spec.law)?;
    let sg = scaled_grid()?;
    let zeta = match c.regime {
        Regime::Strong => kdv_profile(&c, &sg)?,
        _ => nls_profile(&c, &sg)?.scale(spec.sign.value()),
    };
    reconstruct_eta(&zeta, spec.epsilon, c.regime, c.omega, grid)
}

/// Newton (matrix-free, GMRES) on K(eta) - c0^2 (1 - eps^2) L(eta) = 0 in
/// the even subspace, seeded by the reconstructed amplitude profile.
pub fn solve_truncated_gzcs(spec: &GzcsSpec) -> Result<SolveReport> {
    check_epsilon(spec.epsilon, 0.5)?;
    let c = coeffs_for(spec.gamma, &spec.law)?;
    let (l, n) = match spec.grid {
        Some(g) => g,
        None => gzcs_grid(spec.gamma, spec.epsilon)?,
    };
    if l < SCALED_HALF_LENGTH / spec.epsilon * (1.0 - 1e-12) {
        return Err(Error::Parameter(format!("box half length {l} is below 40/eps = {}", SCALED_HALF_LENGTH / spec.epsilon)));
    }
    let grid = SpectralGrid::new(l, n)?;
    let c2 = c.c0_squared * (1.0 - spec.epsilon * spec.epsilon);
    let map = GzcsProblem::new(&grid, spec.gamma, spec.law.clone(), c2, spec.mode)?;
    let seed = gzcs_seed(spec, &grid)?;
    let out = newton(&map, &seed, &spec.newton)?;
    let mut rep = report(Branch::Gzcs, spec.gamma, Some(spec.epsilon), &spec.newton, out, Some(seed));
    let p = if c.regime == Regime::Strong { 2 } else { 1 };
    rep.normalized_deviation = rep.reference_error.map(|e| e / spec.epsilon.powi(p));
    Ok(rep)
}

/// Least-squares fit log(err) = slope log(eps) + intercept.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// root-mean-square residual of the fit in log space
    pub rms_residual: f64,
}

pub fn fit_slope(eps: &[f64], err: &[f64]) -> Result<SlopeFit> {
    if eps.len() != err.len() || eps.len() < 2 {
        return Err(Error::Parameter("slope fit needs at least two matching points".into()));
    }
    if eps.iter().chain(err).any(|v| !(*v > 0.0)) {
        return Err(Error::Parameter("slope fit needs positive data".into()));
    }
    let x: Vec<f64> = eps.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = err.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (x.iter().zip(&y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum::<f64>() / n).sqrt();
    Ok(SlopeFit { slope, intercept, rms_residual: rms })
}

/// Which family a convergence study runs.
#[derive(Debug, Clone)]
pub enum StudySpec {
    Pfdkdv { gamma: f64, law: MagnetizationLaw, cfg: ReducedConfig },
    Pfdnls { gamma: f64, law: MagnetizationLaw, sign: Sign, cfg: ReducedConfig },
    Gzcs(GzcsSpec),
}

impl StudySpec {
    pub fn solve(&self, eps: f64) -> Result<SolveReport> {
        match self {
            StudySpec::Pfdkdv { gamma, law, cfg } => solve_pfdkdv(*gamma, law, eps, &scaled_grid()?, cfg),
            StudySpec::Pfdnls { gamma, law, sign, cfg } => solve_pfdnls(*gamma, law, eps, *sign, &scaled_grid()?, cfg),
            StudySpec::Gzcs(s) => solve_truncated_gzcs(&GzcsSpec { epsilon: eps, ..s.clone() }),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StudyRow {
    pub epsilon: f64,
    pub error: Option<f64>,
    pub residual: Option<f64>,
    pub iterations: Option<usize>,
    pub converged: bool,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceTable {
    pub rows: Vec<StudyRow>,
    pub fit: Option<SlopeFit>,
    /// false if any member failed to converge
    pub complete: bool,
    #[serde(skip)]
    pub reports: Vec<Option<SolveReport>>,
}

/// Solve along a geometric ladder of epsilons (concurrently), then fit the
/// log-log slope of the error (normalized deviation for the full equation).
pub fn convergence_study(spec: &StudySpec, eps_list: &[f64]) -> Result<ConvergenceTable> {
    if eps_list.len() < 3 {
        return Err(Error::Parameter("a convergence study needs at least three epsilons".into()));
    }
    let mut eps: Vec<f64> = eps_list.to_vec();
    eps.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let results: Vec<Result<SolveReport>> = eps.par_iter().map(|&e| spec.solve(e)).collect();
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for (&e, r) in eps.iter().zip(results) {
        match r {
            Ok(rep) => {
                let err = if matches!(spec, StudySpec::Gzcs(_)) { rep.normalized_deviation } else { rep.reference_error };
                rows.push(StudyRow {
                    epsilon: e,
                    error: err,
                    residual: Some(rep.final_residual_max),
                    iterations: Some(rep.iterations),
                    converged: rep.converged,
                    failure: rep.message.clone().filter(|_| !rep.converged),
                });
                reports.push(Some(rep));
            }
            Err(err) => {
                rows.push(StudyRow { epsilon: e, error: None, residual: None, iterations: None, converged: false, failure: Some(err.to_string()) });
                reports.push(None);
            }
        }
    }
    let complete = rows.iter().all(|r| r.converged);
    let good: Vec<(f64, f64)> = rows.iter().filter(|r| r.converged).filter_map(|r| r.error.map(|e| (r.epsilon, e))).collect();
    let fit = if good.len() >= 2 {
        let (x, y): (Vec<f64>, Vec<f64>) = good.into_iter().unzip();
        fit_slope(&x, &y).ok()
    } else {
        None
    };
    Ok(ConvergenceTable { rows, fit, complete, reports })
}

/// Largest epsilon among `candidates` whose solve converges.
pub fn largest_converging_epsilon(spec: &StudySpec, candidates: &[f64]) -> Option<f64> {
    let mut c = candidates.to_vec();
    c.sort_by(|a, b| b.partial_cmp(a).unwrap());
    c.into_iter().find(|&e| matches!(spec.solve(e), Ok(r) if r.converged))
}
