//! Linear solvers for Newton steps: dense LU on reduced bases and
//! restarted, right-preconditioned GMRES for the matrix-free case.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Solve J x = b by LU with partial pivoting.
pub fn lu_solve(j: DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let n = j.nrows();
    j.lu()
        .solve(b)
        .filter(|x| x.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::Numerical(format!("singular {n}x{n} Jacobian")))
}

/// Smallest singular value of a dense matrix.
pub fn smallest_singular_value(j: &DMatrix<f64>) -> f64 {
    j.clone().singular_values().iter().cloned().fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy)]
pub struct GmresOptions {
    pub restart: usize,
    pub max_iter: usize,
    /// Stop when ||b - A x|| <= rel_tol ||b||.
    pub rel_tol: f64,
}

impl Default for GmresOptions {
    fn default() -> Self {
        GmresOptions { restart: 80, max_iter: 2000, rel_tol: 1e-8 }
    }
}

#[derive(Debug, Clone)]
pub struct GmresOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Final relative residual.
    pub residual: f64,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Restarted GMRES for A x = b with right preconditioner M^{-1}
/// (solves A M^{-1} y = b, x = M^{-1} y), Givens-rotation least squares.
pub fn gmres(
    apply: &mut dyn FnMut(&[f64]) -> Vec<f64>,
    precond: &dyn Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    opts: GmresOptions,
) -> GmresOutcome {
    let n = b.len();
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return GmresOutcome { x, iterations: 0, residual: 0.0, converged: true };
    }
    let m = opts.restart.max(1);
    let mut total = 0;
    let mut rel = 1.0;
    while total < opts.max_iter {
        let ax = apply(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm(&r);
        rel = beta / bnorm;
        if rel <= opts.rel_tol {
            return GmresOutcome { x, iterations: total, residual: rel, converged: true };
        }
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|ri| ri / beta).collect()];
        let mut h = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..m {
            if total >= opts.max_iter {
                break;
            }
            total += 1;
            let mut w = apply(&precond(&v[k]));
            for i in 0..=k {
                h[i][k] = dot(&w, &v[i]);
                axpy(&mut w, -h[i][k], &v[i]);
            }
            // one reorthogonalization pass keeps the basis orthogonal
            for i in 0..=k {
                let c = dot(&w, &v[i]);
                h[i][k] += c;
                axpy(&mut w, -c, &v[i]);
            }
            let hn = norm(&w);
            h[k + 1][k] = hn;
            for i in 0..k {
                let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let d = h[k][k].hypot(hn);
            if d == 0.0 {
                break;
            }
            cs[k] = h[k][k] / d;
            sn[k] = hn / d;
            h[k][k] = d;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            rel = g[k + 1].abs() / bnorm;
            if rel <= opts.rel_tol || hn == 0.0 {
                break;
            }
            v.push(w.iter().map(|wi| wi / hn).collect());
        }
        // back substitution and update
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let s: f64 = (i + 1..k_used).map(|j| h[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        let mut z = vec![0.0; n];
        for (i, yi) in y.iter().enumerate() {
            axpy(&mut z, *yi, &v[i]);
        }
        let dx = precond(&z);
        axpy(&mut x, 1.0, &dx);
        if rel <= opts.rel_tol {
            let ax = apply(&x);
            let true_rel = norm(&b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect::<Vec<_>>()) / bnorm;
            if true_rel <= 10.0 * opts.rel_tol {
                return GmresOutcome { x, iterations: total, residual: true_rel, converged: true };
            }
        }
    }
    GmresOutcome { x, iterations: total, residual: rel, converged: false }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gmres_matches_lu() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 60;
        let a = DMatrix::from_fn(n, n, |i, j| if i == j { 2.0 + i as f64 * 0.1 } else { 0.3 * rng.gen_range(-1.0..1.0) / n as f64 * 5.0 });
        let b = DVector::from_fn(n, |i, _| (i as f64).sin());
        let x_lu = lu_solve(a.clone(), &b).unwrap();
        let diag: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
        let mut apply = |x: &[f64]| (&a * DVector::from_column_slice(x)).as_slice().to_vec();
        let pre = |x: &[f64]| x.iter().zip(&diag).map(|(v, d)| v / d).collect();
        for restart in [5, 80] {
            let out = gmres(&mut apply, &pre, b.as_slice(), GmresOptions { restart, max_iter: 500, rel_tol: 1e-12 });
            assert!(out.converged, "restart {restart}: {out:?}");
            let err = out.x.iter().zip(x_lu.iter()).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            assert!(err < 1e-10, "restart {restart}: {err}");
        }
    }

    #[test]
    fn singular_systems_are_reported() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(lu_solve(a.clone(), &DVector::from_vec(vec![1.0, 0.0])).is_err());
        assert!(smallest_singular_value(&a) < 1e-12);
        let mut apply = |x: &[f64]| vec![0.0 * x[0]];
        let out = gmres(&mut apply, &|x: &[f64]| x.to_vec(), &[0.0], GmresOptions::default());
        assert!(out.converged && out.x == vec![0.0]);
    }
}
