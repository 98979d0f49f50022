//! Linear dispersion relation c^2(k) = (gamma - 1 + k^2) / f(k), the symbol
//! g(k) = gamma - 1 + k^2 - c0^2 f(k), the auxiliary function h whose inverse
//! gives the critical wavenumber omega, and regime classification.

use crate::error::{Error, Result};
use crate::specfun::{f_ratio, i_scaled};
use serde::Serialize;

/// Step of the central differences used for g' at omega.
pub const FD_STEP: f64 = 1e-5;
/// Default bisection tolerance for omega.
pub const OMEGA_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// 1 < gamma < 9: long-wave bifurcation at k = 0.
    Strong,
    /// gamma = 9: boundary case, classified but not solvable.
    Critical,
    /// gamma > 9: bifurcation at the finite wavenumber omega.
    Weak,
}

impl Regime {
    pub fn classify(gamma: f64) -> Result<Self> {
        if !(gamma > 1.0) || !gamma.is_finite() {
            return Err(Error::Parameter(format!("gamma must exceed 1, got {gamma}")));
        }
        Ok(if gamma < 9.0 {
            Regime::Strong
        } else if gamma == 9.0 {
            Regime::Critical
        } else {
            Regime::Weak
        })
    }
}

/// Derivative of f: f'(k) = k - k I0 I2 / I1^2 (odd in k).
pub fn f_prime(k: f64) -> f64 {
    let a = k.abs();
    let v = if a < 1e-4 {
        0.5 * a - a * a * a / 24.0
    } else {
        let i0 = i_scaled(0, a);
        let i1 = i_scaled(1, a);
        let i2 = i_scaled(2, a);
        a - a * i0 * i2 / (i1 * i1)
    };
    v.copysign(k)
}

/// Phase speed squared of a linear wave of wavenumber k.
pub fn c_squared(k: f64, gamma: f64) -> Result<f64> {
    if !(gamma > 1.0) {
        return Err(Error::Parameter(format!("gamma must exceed 1, got {gamma}")));
    }
    Ok(c_squared_unchecked(k, gamma))
}

fn c_squared_unchecked(k: f64, gamma: f64) -> f64 {
    (gamma - 1.0 + k * k) / f_ratio(k)
}

/// h(k) = 1 - k^2 + 2 k f(k) / f'(k), with limit 9 at the origin.
pub fn h_function(k: f64) -> f64 {
    let a = k.abs();
    if a == 0.0 {
        return 9.0;
    }
    1.0 - a * a + 2.0 * a * f_ratio(a) / f_prime(a)
}

/// Invert h: the unique omega > 0 with h(omega) = gamma, for gamma > 9.
pub fn omega_of_gamma(gamma: f64, tol: f64) -> Result<f64> {
    if !(gamma > 9.0) || !gamma.is_finite() {
        return Err(Error::Regime(format!("omega exists only for gamma > 9, got {gamma}")));
    }
    let mut lo = 1e-6;
    let mut hi = 1.0;
    if h_function(lo) > gamma {
        return Err(Error::Numerical(format!(
            "gamma = {gamma} is too close to 9: h({lo}) = {} already exceeds it",
            h_function(lo)
        )));
    }
    let mut doublings = 0;
    while h_function(hi) < gamma {
        hi *= 2.0;
        doublings += 1;
        if doublings > 60 || !hi.is_finite() {
            return Err(Error::Numerical(format!(
                "failed to bracket h(k) = {gamma}; last upper end {hi}, h = {}",
                h_function(hi)
            )));
        }
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if h_function(mid) < gamma {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Immutable description of the linear problem at a given gamma.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DispersionProfile {
    pub gamma: f64,
    pub regime: Regime,
    /// 0 in the strong and critical regimes.
    pub omega: f64,
    pub c0_squared: f64,
}

impl DispersionProfile {
    /// Classify gamma, locate the minimum of c^2 and check the profile.
    pub fn new(gamma: f64) -> Result<Self> {
        let regime = Regime::classify(gamma)?;
        let (omega, c0_squared) = match regime {
            Regime::Strong | Regime::Critical => (0.0, 0.5 * (gamma - 1.0)),
            Regime::Weak => {
                let omega = omega_of_gamma(gamma, OMEGA_TOL)?;
                (omega, 2.0 * omega / f_prime(omega))
            }
        };
        let p = DispersionProfile { gamma, regime, omega, c0_squared };
        p.verify()?;
        Ok(p)
    }

    pub fn is_solvable(&self) -> bool {
        self.regime != Regime::Critical
    }

    pub fn f(&self, k: f64) -> f64 {
        f_ratio(k)
    }

    pub fn f_prime(&self, k: f64) -> f64 {
        f_prime(k)
    }

    pub fn c_squared(&self, k: f64) -> f64 {
        c_squared_unchecked(k, self.gamma)
    }

    pub fn h(&self, k: f64) -> f64 {
        h_function(k)
    }

    /// g(k) = gamma - 1 + k^2 - c0^2 f(k).
    pub fn g(&self, k: f64) -> f64 {
        self.gamma - 1.0 + k * k - self.c0_squared * f_ratio(k)
    }

    /// Central difference of g with step `FD_STEP`.
    pub fn g_prime_fd(&self, k: f64) -> f64 {
        (self.g(k + FD_STEP) - self.g(k - FD_STEP)) / (2.0 * FD_STEP)
    }

    /// Richardson-extrapolated second central difference of g.
    pub fn g_second_fd(&self, k: f64) -> f64 {
        let d2 = |h: f64| (self.g(k + h) - 2.0 * self.g(k) + self.g(k - h)) / (h * h);
        let (h1, h2) = (2e-3, 1e-3);
        (4.0 * d2(h2) - d2(h1)) / 3.0
    }

    fn verify(&self) -> Result<()> {
        if self.regime != Regime::Weak {
            return Ok(());
        }
        let w = self.omega;
        let g0 = self.g(w);
        let g1 = self.g_prime_fd(w);
        let g2 = self.g_second_fd(w);
        if g0.abs() > 1e-9 || g1.abs() > 1e-6 || !(g2 > 0.0) {
            return Err(Error::Numerical(format!(
                "dispersion profile check failed at omega = {w}: g = {g0:.3e}, g' = {g1:.3e}, g'' = {g2:.3e}"
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn speed_at_origin_and_growth() {
        assert!((c_squared(0.0, 5.0).unwrap() - 2.0).abs() < 1e-15);
        let h = 1e-4;
        let d = (c_squared(h, 5.0).unwrap() - c_squared(-h, 5.0).unwrap()) / (2.0 * h);
        assert!(d.abs() < 1e-6);
        assert!(c_squared(100.0, 5.0).unwrap() > c_squared(10.0, 5.0).unwrap());
        assert!(c_squared(1.0, 1.0).is_err());
    }

    #[test]
    fn f_prime_against_central_difference() {
        assert_eq!(f_prime(0.0), 0.0);
        let h = 1e-5;
        let fd = (f_ratio(2.0 + h) - f_ratio(2.0 - h)) / (2.0 * h);
        assert!((f_prime(2.0) - fd).abs() < 1e-8);
        for j in 0..60 {
            let k = 0.1 + 29.9 * j as f64 / 59.0;
            let h = 1e-4 * k.max(1.0);
            let fd = (f_ratio(k + h) - f_ratio(k - h)) / (2.0 * h);
            assert!((f_prime(k) - fd).abs() < 1e-7, "k = {k}");
        }
        for k in [1.0, 5.0, 10.0] {
            assert!(f_prime(k) > 0.0);
        }
    }

    #[test]
    fn h_limit_and_monotonicity() {
        assert!((h_function(1e-4) - 9.0).abs() < 1e-6);
        assert!(h_function(2.0) > h_function(1.0));
        let mut prev = h_function(10.0 / 500.0);
        for j in 2..=500 {
            let v = h_function(10.0 * j as f64 / 500.0);
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn omega_round_trips() {
        let w = omega_of_gamma(15.0, OMEGA_TOL).unwrap();
        assert!((h_function(w) - 15.0).abs() < 1e-10);
        let w1 = omega_of_gamma(h_function(1.0), OMEGA_TOL).unwrap();
        assert!((w1 - 1.0).abs() < 1e-11);
        let a = omega_of_gamma(9.01, OMEGA_TOL).unwrap();
        let b = omega_of_gamma(10.0, OMEGA_TOL).unwrap();
        let c = omega_of_gamma(20.0, OMEGA_TOL).unwrap();
        assert!(a < b && b < c);
        assert!(matches!(omega_of_gamma(9.0, OMEGA_TOL), Err(Error::Regime(_))));
    }

    #[test]
    fn profiles_by_regime() {
        let p = DispersionProfile::new(5.0).unwrap();
        assert_eq!(p.regime, Regime::Strong);
        assert_eq!(p.c0_squared, 2.0);
        assert_eq!(p.omega, 0.0);
        let c = DispersionProfile::new(9.0).unwrap();
        assert_eq!(c.regime, Regime::Critical);
        assert!(!c.is_solvable());
        assert!(DispersionProfile::new(0.5).is_err());
        for gamma in [10.0, 15.0, 30.0] {
            let p = DispersionProfile::new(gamma).unwrap();
            assert_eq!(p.regime, Regime::Weak);
            assert!(p.g(p.omega).abs() <= 1e-9);
            assert!(p.g_prime_fd(p.omega).abs() <= 1e-6);
            assert!(p.g_second_fd(p.omega) > 0.0);
            let alt = p.c_squared(p.omega);
            assert!((alt / p.c0_squared - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn g_nonnegative_with_minimum_at_omega() {
        for gamma in [5.0, 9.5, 15.0, 30.0] {
            let p = DispersionProfile::new(gamma).unwrap();
            let kmax = 3.0 * p.omega + 5.0;
            let n = 2000;
            let mut best = (f64::INFINITY, 0.0);
            for j in 0..n {
                let k = -kmax + 2.0 * kmax * j as f64 / (n - 1) as f64;
                let v = p.g(k);
                assert!(v >= -1e-12, "gamma {gamma}, k {k}: {v}");
                if v < best.0 {
                    best = (v, k);
                }
            }
            let spacing = 2.0 * kmax / (n - 1) as f64;
            assert!((best.1.abs() - p.omega).abs() <= spacing, "gamma {gamma}");
        }
    }

    #[test]
    fn strong_regime_symbol_is_coercive_off_the_cutoff() {
        let p = DispersionProfile::new(5.0).unwrap();
        let delta = 0.5;
        let c = (0..400)
            .map(|j| delta + 0.1 * j as f64)
            .map(|k| p.g(k) / (k * k))
            .fold(f64::INFINITY, f64::min);
        assert!(c > 0.05, "measured coercivity constant {c}");
    }

    proptest! {
        #[test]
        fn c_squared_even_and_positive(k in -50.0f64..50.0, gamma in 1.01f64..40.0) {
            let a = c_squared(k, gamma).unwrap();
            prop_assert!(a > 0.0);
            prop_assert_eq!(a, c_squared(-k, gamma).unwrap());
        }
    }
}
