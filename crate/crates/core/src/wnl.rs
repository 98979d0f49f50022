//! Weakly nonlinear constants and the explicit sech-type solitary waves.
//!
//! Strong regime: the KdV equation
//! `((gamma - 9)/8) zeta'' + 2 c0^2 zeta + 2 c0^2 d0 zeta^2 = 0`.
//! Weak regime: the NLS equation `-a1 zeta'' + a2 zeta - a3 |zeta|^2 zeta = 0`
//! whose cubic coefficient collects the second-harmonic and mean-flow
//! corrections through A(omega)..E(omega).

use crate::dispersion::{DispersionProfile, Regime};
use crate::error::{Error, Result};
use crate::specfun::f_ratio;
use serde::Serialize;
use std::fmt;
use std::sync::Arc;

type Callable = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LawKind {
    Linear,
    Cubic,
    Custom,
}

/// Nondimensional magnetization law nu with nu'(1) = 1.
#[derive(Clone)]
pub struct MagnetizationLaw {
    pub kind: LawKind,
    nu: Callable,
    nu_prime: Callable,
    pub nu1: f64,
    pub nu2: f64,
    pub nu3: f64,
}

impl fmt::Debug for MagnetizationLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MagnetizationLaw")
            .field("kind", &self.kind)
            .field("nu1", &self.nu1)
            .field("nu2", &self.nu2)
            .field("nu3", &self.nu3)
            .finish()
    }
}

impl Default for MagnetizationLaw {
    fn default() -> Self {
        Self::linear()
    }
}

impl MagnetizationLaw {
    /// nu(s) = s^2 / 2.
    pub fn linear() -> Self {
        MagnetizationLaw {
            kind: LawKind::Linear,
            nu: Arc::new(|s| 0.5 * s * s),
            nu_prime: Arc::new(|s| s),
            nu1: 1.0,
            nu2: 1.0,
            nu3: 0.0,
        }
    }

    /// Cubic law through s = 1 with prescribed nu''(1) and nu'''(1).
    pub fn cubic(nu2: f64, nu3: f64) -> Self {
        MagnetizationLaw {
            kind: LawKind::Cubic,
            nu: Arc::new(move |s| {
                let t = s - 1.0;
                0.5 + t + 0.5 * nu2 * t * t + nu3 * t * t * t / 6.0
            }),
            nu_prime: Arc::new(move |s| {
                let t = s - 1.0;
                1.0 + nu2 * t + 0.5 * nu3 * t * t
            }),
            nu1: 1.0,
            nu2,
            nu3,
        }
    }

    /// Arbitrary smooth law; derivatives at 1 are obtained by finite
    /// differences and nu'(1) = 1 is enforced.
    pub fn custom(
        nu: impl Fn(f64) -> f64 + Send + Sync + 'static,
        nu_prime: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let nu: Callable = Arc::new(nu);
        let (d1, d2, d3) = fd_derivatives(&*nu);
        if (d1 - 1.0).abs() > 1e-8 {
            return Err(Error::Parameter(format!("magnetization law must satisfy nu'(1) = 1, got {d1}")));
        }
        Ok(MagnetizationLaw { kind: LawKind::Custom, nu, nu_prime: Arc::new(nu_prime), nu1: 1.0, nu2: d2, nu3: d3 })
    }

    pub fn nu(&self, s: f64) -> f64 {
        (self.nu)(s)
    }

    pub fn nu_prime(&self, s: f64) -> f64 {
        (self.nu_prime)(s)
    }

    /// Check the stored derivatives against finite differences of the callable.
    pub fn verify(&self) -> Result<()> {
        let (d1, d2, d3) = fd_derivatives(&*self.nu);
        let bad = (d1 - 1.0).abs() > 1e-8
            || (d2 - self.nu2).abs() > 1e-6 * (1.0 + self.nu2.abs())
            || (d3 - self.nu3).abs() > 1e-6 * (1.0 + self.nu3.abs());
        if bad {
            return Err(Error::Parameter(format!(
                "magnetization law derivatives disagree with its callable: fd ({d1}, {d2}, {d3}) vs ({}, {}, {})",
                self.nu1, self.nu2, self.nu3
            )));
        }
        Ok(())
    }
}

/// Richardson-extrapolated central differences of nu at s = 1.
fn fd_derivatives(nu: &dyn Fn(f64) -> f64) -> (f64, f64, f64) {
    let d1 = |h: f64| (nu(1.0 + h) - nu(1.0 - h)) / (2.0 * h);
    let d2 = |h: f64| (nu(1.0 + h) - 2.0 * nu(1.0) + nu(1.0 - h)) / (h * h);
    let d3 = |h: f64| (nu(1.0 + 2.0 * h) - 2.0 * nu(1.0 + h) + 2.0 * nu(1.0 - h) - nu(1.0 - 2.0 * h)) / (2.0 * h * h * h);
    let rich = |d: &dyn Fn(f64) -> f64, h: f64| (4.0 * d(0.5 * h) - d(h)) / 3.0;
    (rich(&d1, 1e-3), rich(&d2, 2e-3), rich(&d3, 2e-2))
}

/// Strong-regime constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KdvPart {
    pub d0: f64,
    /// Coefficient of zeta_ZZ, gamma/8 - 9/8.
    pub dispersion: f64,
}

/// Weak-regime constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NlsPart {
    pub a1: f64,
    /// a1 from the second difference of c^2 times f(omega).
    pub a1_check: f64,
    pub a2: f64,
    pub a3: f64,
    pub cap_a: f64,
    pub cap_b: f64,
    pub cap_c: f64,
    pub cap_d: f64,
    pub cap_e: f64,
    pub zeta0_coeff: f64,
    pub zeta2_coeff: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WnlCoeffs {
    pub gamma: f64,
    pub regime: Regime,
    pub omega: f64,
    pub c0_squared: f64,
    pub nu2: f64,
    pub nu3: f64,
    #[serde(rename = "A0")]
    pub a0: f64,
    #[serde(rename = "B0")]
    pub b0: f64,
    pub kdv: Option<KdvPart>,
    pub nls: Option<NlsPart>,
}

impl WnlCoeffs {
    pub fn profile(&self) -> DispersionProfile {
        DispersionProfile { gamma: self.gamma, regime: self.regime, omega: self.omega, c0_squared: self.c0_squared }
    }

    pub fn kdv_part(&self) -> Result<&KdvPart> {
        self.kdv.as_ref().ok_or_else(|| Error::Regime("KdV constants need 1 < gamma < 9".into()))
    }

    pub fn nls_part(&self) -> Result<&NlsPart> {
        self.nls.as_ref().ok_or_else(|| Error::Regime("NLS constants need gamma > 9".into()))
    }
}

/// A0 = 1 - gamma - gamma nu''(1) / 2.
pub fn coeff_a0(gamma: f64, law: &MagnetizationLaw) -> f64 {
    -gamma - 0.5 * gamma * law.nu2 + 1.0
}

/// B0 = gamma + gamma nu''(1) + gamma nu'''(1) / 6 - 1.
pub fn coeff_b0(gamma: f64, law: &MagnetizationLaw) -> f64 {
    gamma + gamma * law.nu2 + gamma * law.nu3 / 6.0 - 1.0
}

/// Coefficient functions A..E at omega (D with the f(omega)^2 reading).
pub fn cap_coefficients(omega: f64) -> [f64; 5] {
    let w2 = omega * omega;
    let f = f_ratio(omega);
    let f2 = f_ratio(2.0 * omega);
    let a = 1.5 * w2 - 0.5 * f * f - f * f2 + 0.5 * f2;
    let b = w2 - f * f - 4.0 * f + 2.0;
    let c = 1.5 * w2 - f * f2 + 0.5 * f - 0.5 * f * f;
    let d = 0.5 * w2 - 1.5 * f - 0.5 * f * f;
    let e = 2.0 * f * f * f2 - 6.0 * f * w2 + 6.5 * f * f - f * f2 - 4.0 * f + 0.5 * w2;
    [a, b, c, d, e]
}

/// The competing reading of D(omega) with f evaluated at omega^2.
pub fn cap_d_alternative(omega: f64) -> f64 {
    0.5 * omega * omega - 1.5 * f_ratio(omega) - 0.5 * f_ratio(omega * omega)
}

/// 4 a3 assembled from A..E, A0, B0.
pub fn four_a3(p: &DispersionProfile, a0: f64, b0: f64, caps: [f64; 5]) -> f64 {
    let [a, b, c, d, e] = caps;
    let w2 = p.omega * p.omega;
    let c0 = p.c0_squared;
    2.0 / p.g(2.0 * p.omega) * (c0 * c - a0 + w2) * (c0 * a - a0 - 0.5 * w2)
        + 2.0 / p.g(0.0) * (c0 * d - a0) * (c0 * b - 2.0 * a0 + w2)
        - 3.0 * b0
        - 0.5 * w2
        + 1.5 * w2 * w2
        + c0 * e
}

/// Strong-regime coefficients.
pub fn kdv_coeffs(gamma: f64, law: &MagnetizationLaw) -> Result<WnlCoeffs> {
    if !(gamma > 1.0 && gamma < 9.0) {
        return Err(Error::Regime(format!("KdV scaling needs 1 < gamma < 9, got {gamma}")));
    }
    let p = DispersionProfile::new(gamma)?;
    let c0 = p.c0_squared;
    let d0 = (1.5 * gamma - 0.5 * gamma * law.nu2 - 1.5) / (2.0 * c0);
    Ok(WnlCoeffs {
        gamma,
        regime: p.regime,
        omega: 0.0,
        c0_squared: c0,
        nu2: law.nu2,
        nu3: law.nu3,
        a0: coeff_a0(gamma, law),
        b0: coeff_b0(gamma, law),
        kdv: Some(KdvPart { d0, dispersion: gamma / 8.0 - 9.0 / 8.0 }),
        nls: None,
    })
}

/// Weak-regime coefficients; fails if a3 <= 0 (no NLS soliton).
pub fn nls_coeffs(gamma: f64, law: &MagnetizationLaw) -> Result<WnlCoeffs> {
    let c = nls_coeffs_unchecked(gamma, law)?;
    let n = c.nls_part()?;
    if !(n.a1 > 0.0 && n.a2 > 0.0) {
        return Err(Error::Existence(format!("a1 = {}, a2 = {} must be positive", n.a1, n.a2)));
    }
    if !(n.a3 > 0.0) {
        return Err(Error::Existence(format!("a3 = {} is not positive; no NLS solitary wave", n.a3)));
    }
    Ok(c)
}

/// Weak-regime coefficients without the sign conditions.
pub fn nls_coeffs_unchecked(gamma: f64, law: &MagnetizationLaw) -> Result<WnlCoeffs> {
    if !(gamma > 9.0) {
        return Err(Error::Regime(format!("NLS scaling needs gamma > 9, got {gamma}")));
    }
    let p = DispersionProfile::new(gamma)?;
    let w = p.omega;
    let c0 = p.c0_squared;
    let a0 = coeff_a0(gamma, law);
    let b0 = coeff_b0(gamma, law);
    let caps = cap_coefficients(w);
    let a3 = 0.25 * four_a3(&p, a0, b0, caps);
    let a1 = 0.5 * p.g_second_fd(w);
    // g = f (c^2 - c0^2) and (c^2)'(omega) = 0, so g''(omega) = f(omega) (c^2)''(omega).
    let h = 1e-3;
    let c2dd = (p.c_squared(w + h) - 2.0 * p.c_squared(w) + p.c_squared(w - h)) / (h * h);
    let a1_check = 0.5 * f_ratio(w) * c2dd;
    let [ca, cb, cc, cd, ce] = caps;
    let w2 = w * w;
    Ok(WnlCoeffs {
        gamma,
        regime: p.regime,
        omega: w,
        c0_squared: c0,
        nu2: law.nu2,
        nu3: law.nu3,
        a0,
        b0,
        kdv: None,
        nls: Some(NlsPart {
            a1,
            a1_check,
            a2: c0 * f_ratio(w),
            a3,
            cap_a: ca,
            cap_b: cb,
            cap_c: cc,
            cap_d: cd,
            cap_e: ce,
            zeta0_coeff: (w2 - 2.0 * a0 + c0 * cb) / p.g(0.0),
            zeta2_coeff: (c0 * ca - a0 - 0.5 * w2) / p.g(2.0 * w),
        }),
    })
}

/// Coefficients for either regime.
pub fn coeffs_for(gamma: f64, law: &MagnetizationLaw) -> Result<WnlCoeffs> {
    match Regime::classify(gamma)? {
        Regime::Strong => kdv_coeffs(gamma, law),
        Regime::Weak => nls_coeffs(gamma, law),
        Regime::Critical => Err(Error::Regime("gamma = 9 admits neither scaling".into())),
    }
}

/// KdV solitary wave -3/(2 d0) sech^2(2 sqrt(c0^2/(9 - gamma)) Z).
pub fn zeta_kdv(z: f64, c: &WnlCoeffs) -> Result<f64> {
    let k = c.kdv_part()?;
    if k.d0 == 0.0 {
        return Err(Error::Degenerate("d0 = 0: the KdV equation has no quadratic term".into()));
    }
    let b = 2.0 * (c.c0_squared / (9.0 - c.gamma)).sqrt();
    let s = 1.0 / (b * z).cosh();
    Ok(-1.5 / k.d0 * s * s)
}

/// NLS solitary wave sqrt(2 a2/a3) sech(sqrt(a2/a1) Z).
pub fn zeta_nls(z: f64, c: &WnlCoeffs) -> Result<f64> {
    let n = c.nls_part()?;
    if !(n.a1 > 0.0 && n.a2 > 0.0 && n.a3 > 0.0) {
        return Err(Error::Existence("NLS solitary wave needs a1, a2, a3 > 0".into()));
    }
    Ok((2.0 * n.a2 / n.a3).sqrt() / ((n.a2 / n.a1).sqrt() * z).cosh())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_law_and_kdv_example() {
        let law = MagnetizationLaw::linear();
        law.verify().unwrap();
        let c = kdv_coeffs(5.0, &law).unwrap();
        let k = c.kdv_part().unwrap();
        assert!((k.d0 - 0.875).abs() < 1e-15);
        assert!((k.dispersion + 0.5).abs() < 1e-15);
        assert!(kdv_coeffs(9.5, &law).is_err());
        assert!(nls_coeffs(5.0, &law).is_err());
    }

    #[test]
    fn strong_identity_holds() {
        let law = MagnetizationLaw::linear();
        for g in [3.0, 5.0, 7.0, 1.5, 8.5] {
            let c = kdv_coeffs(g, &law).unwrap();
            let lhs = 2.0 * c.c0_squared * c.kdv.unwrap().d0;
            let rhs = c.a0 + 5.0 * c.c0_squared;
            assert!((lhs - rhs).abs() < 1e-12, "gamma {g}");
        }
        let law = MagnetizationLaw::cubic(0.3, -2.0);
        let c = kdv_coeffs(4.0, &law).unwrap();
        assert!((2.0 * c.c0_squared * c.kdv.unwrap().d0 - c.a0 - 5.0 * c.c0_squared).abs() < 1e-12);
    }

    #[test]
    fn custom_law_derivatives() {
        let law = MagnetizationLaw::custom(|s| s.ln() + 2.0, |s| 1.0 / s).unwrap();
        assert!((law.nu2 + 1.0).abs() < 1e-6);
        assert!((law.nu3 - 2.0).abs() < 1e-6);
        law.verify().unwrap();
        assert!(MagnetizationLaw::custom(|s| s * s, |s| 2.0 * s).is_err());
        MagnetizationLaw::cubic(0.7, 1.3).verify().unwrap();
    }

    #[test]
    fn weak_constants_are_positive_and_consistent() {
        let law = MagnetizationLaw::linear();
        for g in [10.0, 15.0, 30.0] {
            let c = nls_coeffs(g, &law).unwrap();
            let n = c.nls_part().unwrap();
            assert!(n.a1 > 0.0 && n.a2 > 0.0 && n.a3 > 0.0);
            assert!((n.a1 - n.a1_check).abs() < 1e-5 * n.a1.abs().max(1.0), "gamma {g}: {} vs {}", n.a1, n.a1_check);
            assert!((n.a2 - c.c0_squared * f_ratio(c.omega)).abs() < 1e-14);
        }
    }

    #[test]
    fn zeta0_coefficient_independent_evaluation() {
        let law = MagnetizationLaw::linear();
        let c = nls_coeffs(15.0, &law).unwrap();
        let n = c.nls_part().unwrap();
        // Re-evaluate from scratch: g(0) = gamma - 1 - 2 c0^2.
        let w = c.omega;
        let f = f_ratio(w);
        let b = w * w - f * f - 4.0 * f + 2.0;
        let g0 = c.gamma - 1.0 - 2.0 * c.c0_squared;
        let want = (w * w - 2.0 * c.a0 + c.c0_squared * b) / g0;
        assert!((n.zeta0_coeff - want).abs() <= 1e-12 * want.abs());
    }

    #[test]
    fn explicit_profiles() {
        let law = MagnetizationLaw::linear();
        let k = kdv_coeffs(5.0, &law).unwrap();
        assert!((zeta_kdv(0.0, &k).unwrap() + 1.5 / 0.875).abs() < 1e-15);
        for z in [0.3, 1.0, 4.0] {
            assert_eq!(zeta_kdv(z, &k).unwrap(), zeta_kdv(-z, &k).unwrap());
        }
        let w = nls_coeffs(15.0, &law).unwrap();
        let n = w.nls_part().unwrap();
        assert!((zeta_nls(0.0, &w).unwrap() - (2.0 * n.a2 / n.a3).sqrt()).abs() < 1e-15);
        let far = 10.0 * (n.a1 / n.a2).sqrt();
        assert!(zeta_nls(far, &w).unwrap() > 0.0);
        assert!(zeta_nls(far, &w).unwrap() < 1e-3 * zeta_nls(0.0, &w).unwrap());
        assert!(zeta_kdv(0.0, &w).is_err());
        assert!(zeta_nls(0.0, &k).is_err());
    }

    #[test]
    fn degenerate_d0_is_reported() {
        // d0 = 0 when nu''(1) = 3 - 3/gamma.
        let g = 5.0;
        let law = MagnetizationLaw::cubic(3.0 - 3.0 / g, 0.0);
        let c = kdv_coeffs(g, &law).unwrap();
        assert!(matches!(zeta_kdv(0.0, &c), Err(Error::Degenerate(_))));
    }
}
