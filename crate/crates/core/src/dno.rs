//! Axisymmetric potential problem on the flattened strip (0,1) x R.
//!
//! Per Fourier mode the radial problem D1 D0 u - k^2 u = D1 F1 + i k F2 with
//! D0 u = F1 + xi_z at r = 1 is solved through the Neumann Green's kernel
//! G and its derivatives:
//!
//! ```text
//! u(r)    = int r' [ i k G(r,r') F2 - H2(r,r') F1 ] dr' - i k G(r,1) xi
//! D0 u(r) = int r' [ i k H1(r,r') F2 - H3(r,r') F1 ] dr' + F1(r) - i k H1(r,1) xi
//! ```
//!
//! With F1 = r(1+eta) eta_z u_z - r^2 eta_z^2 D0 u and
//! F2 = r(1+eta) eta_z D0 u - eta(eta+2) u_z the fixed point gives the
//! Dirichlet–Neumann operator K(eta) xi = -u_z at r = 1.
//!
//! Radial integrals are split at the target radius and evaluated with
//! Gauss–Legendre rules on each side, the data being interpolated from the
//! radial nodes by the Legendre interpolant. All Bessel products are formed
//! from exponentially scaled values.

use crate::error::{Error, Result};
use crate::operators::check_geometry;
use crate::quadrature::{gauss_legendre_on, integrate};
use crate::specfun::{bessel_i_minus_struve, i_scaled, k_scaled};
use crate::spectral::{check_same_grid, FieldOps, Parity, SpectralField, SpectralGrid};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use std::sync::Arc;

/// G and the derivative kernels H1..H3 at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelValues {
    pub g: f64,
    pub h1: f64,
    pub h2: f64,
    pub h3: f64,
}

/// Scaled Bessel values at k x.
#[derive(Clone, Copy)]
struct Scaled {
    x: f64,
    i0: f64,
    i1: f64,
    k0: f64,
    k1: f64,
}

impl Scaled {
    fn at(k: f64, x: f64) -> Self {
        let a = k * x;
        let (k0, k1) = if a > 0.0 { (k_scaled(0, a), k_scaled(1, a)) } else { (f64::INFINITY, f64::INFINITY) };
        Scaled { x, i0: i_scaled(0, a), i1: i_scaled(1, a), k0, k1 }
    }
}

/// Per-wavenumber constants: |k| and rho = e^k K1(k) / (e^{-k} I1(k)).
#[derive(Clone, Copy)]
struct ModeConst {
    k: f64,
    rho: f64,
}

impl ModeConst {
    fn new(k: f64) -> Self {
        ModeConst { k, rho: k_scaled(1, k) / i_scaled(1, k) }
    }

    fn eval(&self, r: &Scaled, rt: &Scaled) -> KernelValues {
        let k = self.k;
        // I_n(k a) [K_m(k b) + s c I_m(k b)] for a <= b, from scaled values
        let pair = |ia: f64, a: f64, kb: f64, ib: f64, bx: f64, s: f64| {
            ia * (kb * (k * (a - bx)).exp() + s * self.rho * ib * (k * (a + bx - 2.0)).exp())
        };
        if r.x <= rt.x {
            let (a, b) = (r, rt);
            KernelValues {
                g: -pair(a.i0, a.x, b.k0, b.i0, b.x, 1.0),
                h1: -k * pair(a.i1, a.x, b.k0, b.i0, b.x, 1.0),
                h2: k * pair(a.i0, a.x, b.k1, b.i1, b.x, -1.0),
                h3: k * k * pair(a.i1, a.x, b.k1, b.i1, b.x, -1.0),
            }
        } else {
            let (a, b) = (rt, r);
            KernelValues {
                g: -pair(a.i0, a.x, b.k0, b.i0, b.x, 1.0),
                h1: k * pair(a.i0, a.x, b.k1, b.i1, b.x, -1.0),
                h2: -k * pair(a.i1, a.x, b.k0, b.i0, b.x, 1.0),
                h3: k * k * pair(a.i1, a.x, b.k1, b.i1, b.x, -1.0),
            }
        }
    }

    /// G(r, 1) and H1(r, 1).
    fn boundary(&self, r: &Scaled) -> (f64, f64) {
        let k = self.k;
        let e = (k * (r.x - 1.0)).exp();
        let i1k = i_scaled(1, k);
        (-r.i0 / (k * i1k) * e, -r.i1 / i1k * e)
    }
}

/// Green's kernel G(r, r') and derivative kernels at wavenumber k.
pub fn greens_kernel(k: f64, r: f64, r_tilde: f64) -> Result<KernelValues> {
    if k == 0.0 {
        return Err(Error::SingularMode("the Green's kernel is singular at k = 0".into()));
    }
    if !k.is_finite() || !(0.0..=1.0).contains(&r) || !(r_tilde > 0.0 && r_tilde <= 1.0) {
        return Err(Error::Domain(format!("kernel arguments out of range: k={k}, r={r}, r'={r_tilde}")));
    }
    let m = ModeConst::new(k.abs());
    let v = m.eval(&Scaled::at(m.k, r), &Scaled::at(m.k, r_tilde));
    if [v.g, v.h1, v.h2, v.h3].iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical(format!("non-finite kernel value at k={k}, r={r}, r'={r_tilde}")));
    }
    Ok(v)
}

/// Integrals behind the kernel estimates at one (k, r).
#[derive(Debug, Clone, Serialize)]
pub struct KernelIdentity {
    pub k: f64,
    pub r: f64,
    /// int r'|G| dr' against 1/k^2
    pub g_integral: f64,
    pub g_expected: f64,
    /// k int r'|H1| dr' against its closed form
    pub h1_integral: f64,
    pub h1_expected: f64,
    /// int r' H3 dr' against its closed form
    pub h3_integral: f64,
    pub h3_expected: f64,
    /// int r |H1(r, r')| dr (integration in the first variable)
    pub h1_dual_integral: f64,
    /// int r'|H3| dr'
    pub h3_abs_integral: f64,
}

impl KernelIdentity {
    pub fn max_rel_err(&self) -> f64 {
        let e = |a: f64, b: f64| (a - b).abs() / b.abs();
        e(self.g_integral, self.g_expected).max(e(self.h1_integral, self.h1_expected)).max(e(self.h3_integral, self.h3_expected))
    }
}

/// Evaluate the kernel identities by adaptive quadrature split at r.
/// Fails if G is found to change sign, since |G| = -G is relied upon.
pub fn kernel_identity(k: f64, r: f64) -> Result<KernelIdentity> {
    if !(k > 0.0) || !(r > 0.0 && r < 1.0) {
        return Err(Error::Domain(format!("identity check needs k > 0 and 0 < r < 1, got k={k}, r={r}")));
    }
    let m = ModeConst::new(k);
    let sr = Scaled::at(k, r);
    let ker = |rt: f64| m.eval(&sr, &Scaled::at(k, rt));
    for j in 1..=200 {
        let rt = j as f64 / 200.0;
        let g = ker(rt).g;
        if g > 0.0 {
            return Err(Error::Numerical(format!("G(r={r}, r'={rt}) = {g:e} is positive at k = {k}")));
        }
    }
    let quad = |f: &dyn Fn(f64) -> f64| integrate(f, 0.0, r, 1e-13, 0.0) + integrate(f, r, 1.0, 1e-13, 0.0);
    let g_integral = quad(&|rt| rt * ker(rt).g.abs());
    let h1_integral = k * quad(&|rt| rt * ker(rt).h1.abs());
    let h3_integral = quad(&|rt| rt * ker(rt).h3);
    let h3_abs_integral = quad(&|rt| rt * ker(rt).h3.abs());
    let srt = Scaled::at(k, r);
    let h1_dual_integral = quad(&|rr| rr * m.eval(&Scaled::at(k, rr), &srt).h1.abs());
    let i1k = i_scaled(1, k);
    let h1_expected = -2.0 * k * r * sr.i1 * sr.i1 * m.rho * (2.0 * k * (r - 1.0)).exp() + 2.0 * k * r * sr.i1 * sr.k1;
    let ratio = sr.i1 / i1k * (k * (r - 1.0)).exp();
    let h3_expected = 0.5 * PI * (bessel_i_minus_struve(1, k * r) - ratio * bessel_i_minus_struve(1, k));
    Ok(KernelIdentity {
        k,
        r,
        g_integral,
        g_expected: 1.0 / (k * k),
        h1_integral,
        h1_expected,
        h3_integral,
        h3_expected,
        h1_dual_integral,
        h3_abs_integral,
    })
}

/// Split quadrature for one target radius, with interpolation rows.
#[derive(Debug, Clone)]
struct SubRule {
    points: Vec<f64>,
    /// quadrature weight times r'
    weights: Vec<f64>,
    /// row-major points x nr
    interp: Vec<f64>,
}

/// Radial discretization: Gauss–Legendre nodes on (0,1) plus r = 1.
#[derive(Debug, Clone)]
pub struct RadialGrid {
    nr: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    bary: Vec<f64>,
    sub: Vec<SubRule>,
}

impl RadialGrid {
    pub fn new(nr: usize) -> Result<Self> {
        if !(4..=512).contains(&nr) {
            return Err(Error::Parameter(format!("radial node count must lie in [4, 512], got {nr}")));
        }
        let (nodes, weights) = gauss_legendre_on(nr, 0.0, 1.0);
        let bary: Vec<f64> = (0..nr)
            .map(|j| {
                let p: f64 = (0..nr).filter(|&i| i != j).map(|i| 4.0 * (nodes[j] - nodes[i])).product();
                1.0 / p
            })
            .collect();
        let mut g = RadialGrid { nr, nodes, weights, bary, sub: Vec::new() };
        let targets: Vec<f64> = g.targets();
        g.sub = targets
            .iter()
            .map(|&r| {
                let (mut pts, mut ws) = gauss_legendre_on(nr, 0.0, r);
                if r < 1.0 {
                    let (p2, w2) = gauss_legendre_on(nr, r, 1.0);
                    pts.extend(p2);
                    ws.extend(w2);
                }
                let weights = pts.iter().zip(&ws).map(|(p, w)| p * w).collect();
                let interp = pts.iter().flat_map(|&x| g.interpolation_row(x)).collect();
                SubRule { points: pts, weights, interp }
            })
            .collect();
        Ok(g)
    }

    pub fn nr(&self) -> usize {
        self.nr
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Weights for dr on (0,1).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Radial nodes followed by the surface r = 1.
    pub fn targets(&self) -> Vec<f64> {
        let mut t = self.nodes.clone();
        t.push(1.0);
        t
    }

    /// Weights of the Legendre interpolant through the nodes evaluated at x.
    pub fn interpolation_row(&self, x: f64) -> Vec<f64> {
        if let Some(j) = self.nodes.iter().position(|&n| n == x) {
            let mut row = vec![0.0; self.nr];
            row[j] = 1.0;
            return row;
        }
        let t: Vec<f64> = self.nodes.iter().zip(&self.bary).map(|(n, b)| b / (x - n)).collect();
        let s: f64 = t.iter().sum();
        t.into_iter().map(|v| v / s).collect()
    }

    /// Weights of the derivative of the interpolant at x (x off the nodes).
    pub fn derivative_row(&self, x: f64) -> Vec<f64> {
        let l = self.interpolation_row(x);
        let s: f64 = self.nodes.iter().map(|n| 1.0 / (x - n)).sum();
        l.iter().zip(&self.nodes).map(|(lj, n)| lj * (s - 1.0 / (x - n))).collect()
    }

    /// Differentiation matrix of the interpolant on the nodes.
    pub fn diff_matrix(&self) -> DMatrix<f64> {
        let n = self.nr;
        let mut d = DMatrix::zeros(n, n);
        for i in 0..n {
            let mut diag = 0.0;
            for j in 0..n {
                if i != j {
                    let v = (self.bary[j] / self.bary[i]) / (self.nodes[i] - self.nodes[j]);
                    d[(i, j)] = v;
                    diag -= v;
                }
            }
            d[(i, i)] = diag;
        }
        d
    }
}

/// Kernel matrices of one |k|: rows are targets (nodes then r = 1),
/// columns are node values of the data.
struct ModeMatrices {
    g: Vec<f64>,
    h1: Vec<f64>,
    h2: Vec<f64>,
    h3: Vec<f64>,
    g_bnd: Vec<f64>,
    h1_bnd: Vec<f64>,
}

impl ModeMatrices {
    fn build(rg: &RadialGrid, k: f64) -> Self {
        let nr = rg.nr;
        let nt = nr + 1;
        let m = ModeConst::new(k);
        let targets = rg.targets();
        let mut out = ModeMatrices {
            g: vec![0.0; nt * nr],
            h1: vec![0.0; nt * nr],
            h2: vec![0.0; nt * nr],
            h3: vec![0.0; nt * nr],
            g_bnd: Vec::with_capacity(nt),
            h1_bnd: Vec::with_capacity(nt),
        };
        for (t, &r) in targets.iter().enumerate() {
            let sr = Scaled::at(k, r);
            let (gb, hb) = m.boundary(&sr);
            out.g_bnd.push(gb);
            out.h1_bnd.push(hb);
            let rule = &rg.sub[t];
            for (s, (&p, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
                let kv = m.eval(&sr, &Scaled::at(k, p));
                let row = &rule.interp[s * nr..(s + 1) * nr];
                let base = t * nr;
                for j in 0..nr {
                    let l = w * row[j];
                    out.g[base + j] += kv.g * l;
                    out.h1[base + j] += kv.h1 * l;
                    out.h2[base + j] += kv.h2 * l;
                    out.h3[base + j] += kv.h3 * l;
                }
            }
        }
        out
    }
}

/// Options of the flattened-problem solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DnoOptions {
    /// Radial Gauss–Legendre nodes.
    pub nr: usize,
    /// Stop when successive iterates differ by less than tol (relative).
    pub tol: f64,
    pub max_iter: usize,
    /// Anderson depth; 0 is plain Picard iteration.
    pub anderson: usize,
}

impl Default for DnoOptions {
    fn default() -> Self {
        DnoOptions { nr: 64, tol: 1e-14, max_iter: 200, anderson: 0 }
    }
}

/// Radial fields level by level (radial nodes, then r = 1), each a
/// coefficient vector in FFT order.
#[derive(Debug, Clone)]
pub struct RadialField {
    pub levels: Vec<Vec<Complex64>>,
}

impl RadialField {
    pub fn zeros(levels: usize, n: usize) -> Self {
        RadialField { levels: vec![vec![Complex64::new(0.0, 0.0); n]; levels] }
    }

    fn max_abs(&self) -> f64 {
        self.levels.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max)
    }

    fn max_diff(&self, o: &Self) -> f64 {
        self.levels
            .iter()
            .flatten()
            .zip(o.levels.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Solution of the flattened problem on all radial levels.
#[derive(Debug, Clone)]
pub struct RadialSolution {
    grid: Arc<SpectralGrid>,
    radial: Arc<RadialGrid>,
    pub u: RadialField,
    pub d0u: RadialField,
    pub iterations: usize,
    pub last_difference: f64,
    /// successive differences, one per iteration
    pub history: Vec<f64>,
}

impl RadialSolution {
    fn level(&self, f: &RadialField, t: usize) -> SpectralField {
        SpectralField::from_coeffs(&self.grid, f.levels[t].clone(), Parity::None)
    }

    /// u on r = 1.
    pub fn surface(&self) -> SpectralField {
        self.level(&self.u, self.radial.nr)
    }

    /// u_z on r = 1.
    pub fn uz_surface(&self) -> SpectralField {
        self.surface().dz()
    }

    /// D0 u on r = 1.
    pub fn d0u_surface(&self) -> SpectralField {
        self.level(&self.d0u, self.radial.nr)
    }

    /// Largest difference between u(1) and the node interpolant extended
    /// to r = 1, relative to max |u|.
    pub fn trace_interpolation_defect(&self) -> f64 {
        let row = self.radial.interpolation_row(1.0);
        self.end_defect(&self.u, &row, &self.u)
    }

    /// Same for D0 u(1) against the derivative of the u interpolant.
    pub fn d0_trace_defect(&self) -> f64 {
        let row = self.radial.derivative_row(1.0);
        self.end_defect(&self.u, &row, &self.d0u)
    }

    fn end_defect(&self, src: &RadialField, row: &[f64], target: &RadialField) -> f64 {
        let nr = self.radial.nr;
        let n = self.grid.len();
        let scale = target.max_abs().max(1e-300);
        (0..n)
            .map(|i| {
                let v: Complex64 = (0..nr).map(|j| src.levels[j][i] * row[j]).sum();
                (v - target.levels[nr][i]).norm()
            })
            .fold(0.0, f64::max)
            / scale
    }
}

/// Flattened-problem solver bound to one spectral grid.
pub struct DnoSolver {
    grid: Arc<SpectralGrid>,
    radial: Arc<RadialGrid>,
    opts: DnoOptions,
    /// indexed by |m|, entry 0 unused
    mats: Vec<Option<ModeMatrices>>,
}

impl DnoSolver {
    pub fn new(grid: Arc<SpectralGrid>, opts: DnoOptions) -> Result<Self> {
        if !(opts.tol > 0.0) || opts.max_iter == 0 {
            return Err(Error::Parameter(format!("invalid iteration controls: tol={}, max_iter={}", opts.tol, opts.max_iter)));
        }
        let radial = Arc::new(RadialGrid::new(opts.nr)?);
        let half = grid.len() / 2;
        let dk = grid.dk();
        let mut mats: Vec<Option<ModeMatrices>> =
            (1..half).into_par_iter().map(|m| Some(ModeMatrices::build(&radial, m as f64 * dk))).collect();
        mats.insert(0, None);
        Ok(DnoSolver { grid, radial, opts, mats })
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn radial(&self) -> &Arc<RadialGrid> {
        &self.radial
    }

    pub fn options(&self) -> DnoOptions {
        self.opts
    }

    fn solution(&self, u: RadialField, d0u: RadialField) -> RadialSolution {
        RadialSolution {
            grid: self.grid.clone(),
            radial: self.radial.clone(),
            u,
            d0u,
            iterations: 0,
            last_difference: 0.0,
            history: Vec::new(),
        }
    }

    /// Closed-form solution with F1 = F2 = 0.
    pub fn solve_flat(&self, xi: &SpectralField) -> Result<RadialSolution> {
        check_same_grid(&[xi])?;
        if !self.grid.same_as(xi.grid()) {
            return Err(Error::GridMismatch(format!("{:?} vs {:?}", self.grid, xi.grid())));
        }
        let nt = self.radial.nr + 1;
        let n = self.grid.len();
        let targets = self.radial.targets();
        let mut u = RadialField::zeros(nt, n);
        let mut d = RadialField::zeros(nt, n);
        for i in 0..n {
            let m = self.grid.mode(i);
            if m == 0 || m == -(n as i64 / 2) {
                continue;
            }
            let k = self.grid.wavenumbers()[i];
            let ka = k.abs();
            let i1k = i_scaled(1, ka);
            let ikxi = Complex64::new(0.0, k) * xi.coeffs()[i];
            for (t, &r) in targets.iter().enumerate() {
                let e = (ka * (r - 1.0)).exp();
                u.levels[t][i] = ikxi * (i_scaled(0, ka * r) / (ka * i1k) * e);
                d.levels[t][i] = ikxi * (i_scaled(1, ka * r) / i1k * e);
            }
        }
        Ok(self.solution(u, d))
    }

    /// The solution operator S(F1, F2, xi) by per-mode quadrature.
    pub fn apply_s(&self, f1: &RadialField, f2: &RadialField, xi: &SpectralField) -> Result<RadialSolution> {
        let nt = self.radial.nr + 1;
        let n = self.grid.len();
        let ok = |f: &RadialField| f.levels.len() == nt && f.levels.iter().all(|l| l.len() == n);
        if !ok(f1) || !ok(f2) || !self.grid.same_as(xi.grid()) {
            return Err(Error::GridMismatch("radial data do not match the solver grids".into()));
        }
        let (u, d) = self.apply_s_raw(f1, f2, xi.coeffs());
        if u.levels.iter().chain(&d.levels).flatten().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Numerical("non-finite value in the solution operator".into()));
        }
        Ok(self.solution(u, d))
    }

    fn apply_s_raw(&self, f1: &RadialField, f2: &RadialField, xi: &[Complex64]) -> (RadialField, RadialField) {
        let nr = self.radial.nr;
        let nt = nr + 1;
        let n = self.grid.len();
        let mut u = RadialField::zeros(nt, n);
        let mut d = RadialField::zeros(nt, n);
        let mut a1 = vec![Complex64::new(0.0, 0.0); nr];
        let mut a2 = vec![Complex64::new(0.0, 0.0); nr];
        for i in 0..n {
            let m = self.grid.mode(i);
            if m == -(n as i64 / 2) {
                continue;
            }
            if m == 0 {
                for t in 0..nt {
                    d.levels[t][i] = f1.levels[t][i];
                }
                continue;
            }
            let mats = self.mats[m.unsigned_abs() as usize].as_ref().expect("mode matrices");
            let ik = Complex64::new(0.0, self.grid.wavenumbers()[i]);
            for j in 0..nr {
                a1[j] = f1.levels[j][i];
                a2[j] = ik * f2.levels[j][i];
            }
            let ikxi = ik * xi[i];
            for t in 0..nt {
                let base = t * nr;
                let mut su = Complex64::new(0.0, 0.0);
                let mut sd = Complex64::new(0.0, 0.0);
                for j in 0..nr {
                    su += a2[j] * mats.g[base + j] - a1[j] * mats.h2[base + j];
                    sd += a2[j] * mats.h1[base + j] - a1[j] * mats.h3[base + j];
                }
                u.levels[t][i] = su - ikxi * mats.g_bnd[t];
                d.levels[t][i] = sd + f1.levels[t][i] - ikxi * mats.h1_bnd[t];
            }
        }
        (u, d)
    }

    /// F1(eta, u) and F2(eta, u) on every level.
    /// Mean over z of the cross-sectional flux carried by the periodic part
    /// of u: (1+eta)^2 int r u_z dr - (1+eta) eta_z int r^2 D0u dr.
    fn mean_flux(&self, coef: &Coefficients, r2: &SpectralField, u: &RadialField, d: &RadialField) -> f64 {
        let n = self.grid.len();
        let mut a = vec![Complex64::new(0.0, 0.0); n];
        let mut b = vec![Complex64::new(0.0, 0.0); n];
        for (j, (&r, &w)) in self.radial.nodes().iter().zip(self.radial.weights()).enumerate() {
            for i in 0..n {
                a[i] += u.levels[j][i] * (w * r);
                b[i] += d.levels[j][i] * (w * r * r);
            }
        }
        let a = SpectralField::from_coeffs(&self.grid, a, Parity::None).dz();
        let b = SpectralField::from_coeffs(&self.grid, b, Parity::None);
        r2.mul(&a).sub(&coef.a.mul(&b)).coeffs()[0].re
    }

    /// `beta` is the slope of the axial ramp carried by u (see [`DnoSolver::solve`]).
    fn forcing(&self, coef: &Coefficients, u: &RadialField, d: &RadialField, beta: f64) -> (RadialField, RadialField) {
        let targets = self.radial.targets();
        let mut f1 = Vec::with_capacity(targets.len());
        let mut f2 = Vec::with_capacity(targets.len());
        for (t, &r) in targets.iter().enumerate() {
            let uz = SpectralField::from_coeffs(&self.grid, u.levels[t].clone(), Parity::None).dz().add_const(beta);
            let du = SpectralField::from_coeffs(&self.grid, d.levels[t].clone(), Parity::None);
            f1.push(coef.a.mul(&uz).scale(r).sub(&coef.b.mul(&du).scale(r * r)).coeffs().to_vec());
            f2.push(coef.a.mul(&du).scale(r).sub(&coef.c.mul(&uz)).coeffs().to_vec());
        }
        (RadialField { levels: f1 }, RadialField { levels: f2 })
    }

    /// Fixed-point solution of the flattened problem; returns the radial
    /// solution and K(eta) xi = -u_z(r = 1).
    ///
    /// A periodic potential cannot see the mean of xi (only xi_z enters), so
    /// the box would annihilate constants although the real-line symbol has
    /// f(0) = 2. On the line the axial flux through a cross-section obeys
    /// Q(z) + xi(z) = 0 (its derivative is -G(eta)Phi = -xi_z and both sides
    /// decay). The potential is therefore taken as u = beta z + (periodic),
    /// with beta updated each sweep so that mean(Q + xi) = 0; for eta = 0
    /// this gives beta = -2 mean(xi), i.e. the multiplier f(0) on the mean.
    /// The returned radial solution holds the periodic part.
    pub fn solve(&self, eta: &SpectralField, xi: &SpectralField) -> Result<(RadialSolution, SpectralField)> {
        check_same_grid(&[eta, xi])?;
        if !self.grid.same_as(eta.grid()) {
            return Err(Error::GridMismatch(format!("{:?} vs {:?}", self.grid, eta.grid())));
        }
        check_geometry(eta)?;
        let ez = eta.dz();
        let coef = Coefficients { a: ez.add(&eta.mul(&ez)), b: ez.sq(), c: eta.mul(&eta.add_const(2.0)) };
        let r2 = eta.add_const(1.0).sq();
        let r2_mean = r2.coeffs()[0].re;
        let xi_mean = xi.coeffs()[0].re;
        let flat = self.solve_flat(xi)?;
        let (mut u, mut d) = (flat.u, flat.d0u);
        let mut history = Vec::new();
        let mut growth = 0;
        let mut anderson = Anderson::new(self.opts.anderson);
        for it in 1..=self.opts.max_iter {
            let q = self.mean_flux(&coef, &r2, &u, &d);
            let beta = -(xi_mean + q) / (0.5 * r2_mean);
            let (f1, f2) = self.forcing(&coef, &u, &d, beta);
            let (un, dn) = self.apply_s_raw(&f1, &f2, xi.coeffs());
            let scale = un.max_abs().max(dn.max_abs()).max(1e-300);
            let diff = un.max_diff(&u).max(dn.max_diff(&d)) / scale;
            if !diff.is_finite() {
                return Err(Error::Divergence { iterations: it, detail: "non-finite iterate; reduce the amplitude of eta".into() });
            }
            if let Some(&prev) = history.last() {
                growth = if diff > prev { growth + 1 } else { 0 };
            }
            history.push(diff);
            if growth >= 3 {
                return Err(Error::Divergence {
                    iterations: it,
                    detail: format!("successive differences grew three times (last {diff:.3e}); reduce the amplitude of eta"),
                });
            }
            let converged = diff < self.opts.tol;
            if converged || anderson.depth == 0 {
                u = un;
                d = dn;
            } else {
                (u, d) = anderson.step(&u, &d, un, dn);
            }
            if converged {
                let mut sol = self.solution(u, d);
                sol.iterations = it;
                sol.last_difference = diff;
                sol.history = history;
                let k_xi = sol.uz_surface().add_const(beta).scale(-1.0);
                let parity = if eta.parity() == Parity::Even && xi.parity() == Parity::Even { Parity::Even } else { Parity::None };
                return Ok((sol, k_xi.with_parity(parity)));
            }
        }
        Err(Error::Convergence { iterations: self.opts.max_iter, residual: *history.last().unwrap_or(&f64::NAN) })
    }

    /// K(eta) xi.
    pub fn k_eta_xi(&self, eta: &SpectralField, xi: &SpectralField) -> Result<SpectralField> {
        Ok(self.solve(eta, xi)?.1)
    }

    /// (K(eta) eta, K(eta) eta^2), the two evaluations inside L(eta).
    pub fn k_eta_pair(&self, eta: &SpectralField) -> Result<(SpectralField, SpectralField)> {
        let a = self.k_eta_xi(eta, eta)?;
        let b = self.k_eta_xi(eta, &eta.sq())?;
        Ok((a, b))
    }
}

struct Coefficients {
    a: SpectralField,
    b: SpectralField,
    c: SpectralField,
}

/// Anderson mixing on the stacked real vector of (u, D0 u).
struct Anderson {
    depth: usize,
    xs: Vec<DVector<f64>>,
    gs: Vec<DVector<f64>>,
}

impl Anderson {
    fn new(depth: usize) -> Self {
        Anderson { depth, xs: Vec::new(), gs: Vec::new() }
    }

    fn pack(u: &RadialField, d: &RadialField) -> DVector<f64> {
        DVector::from_iterator(
            2 * u.levels.len() * u.levels[0].len() * 2,
            u.levels.iter().chain(&d.levels).flatten().flat_map(|c| [c.re, c.im]),
        )
    }

    fn unpack(v: &DVector<f64>, like: &RadialField) -> (RadialField, RadialField) {
        let nt = like.levels.len();
        let n = like.levels[0].len();
        let mut it = v.as_slice().chunks(2).map(|p| Complex64::new(p[0], p[1]));
        let mut take = || RadialField { levels: (0..nt).map(|_| (0..n).map(|_| it.next().unwrap()).collect()).collect() };
        let u = take();
        let d = take();
        (u, d)
    }

    fn step(&mut self, u: &RadialField, d: &RadialField, un: RadialField, dn: RadialField) -> (RadialField, RadialField) {
        let x = Self::pack(u, d);
        let g = Self::pack(&un, &dn);
        self.xs.push(x);
        self.gs.push(g.clone());
        if self.xs.len() > self.depth + 1 {
            self.xs.remove(0);
            self.gs.remove(0);
        }
        let m = self.xs.len() - 1;
        if m == 0 {
            return (un, dn);
        }
        let f: Vec<DVector<f64>> = self.xs.iter().zip(&self.gs).map(|(x, g)| g - x).collect();
        let df = DMatrix::from_fn(f[0].len(), m, |r, c| f[c + 1][r] - f[c][r]);
        let dg = DMatrix::from_fn(g.len(), m, |r, c| self.gs[c + 1][r] - self.gs[c][r]);
        let svd = df.svd(true, true);
        match svd.solve(&f[m], 1e-12) {
            Ok(theta) => {
                let mixed = &g - dg * theta;
                Self::unpack(&mixed, &un)
            }
            Err(_) => (un, dn),
        }
    }
}

/// One-call form of the flattened solve.
pub fn solve_flattened_bvp(
    eta: &SpectralField,
    xi: &SpectralField,
    tol: f64,
    max_iter: usize,
) -> Result<(RadialSolution, SpectralField)> {
    let opts = DnoOptions { tol, max_iter, ..DnoOptions::default() };
    DnoSolver::new(eta.grid().clone(), opts)?.solve(eta, xi)
}
