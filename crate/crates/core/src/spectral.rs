//! Periodic spectral grid and grid functions.
//!
//! Convention: the box is z in [-L, L) with nodes z_j = -L + 2Lj/N and
//! wavenumbers k_m = pi m / L, m in [-N/2, N/2). Coefficients are taken
//! relative to z (not to the array index):
//!
//! ```text
//! c_m = (1/N) sum_j u_j exp(-i k_m z_j),     u_j = sum_m c_m exp(i k_m z_j)
//! ```
//!
//! so that an even real function has real, even coefficients. Arrays of
//! coefficients are stored in FFT order (m = 0, 1, .., N/2-1, -N/2, .., -1).
//!
//! Products are dealiased by 3/2 zero padding: each binary product is the
//! exact product of the two band-limited inputs truncated to |m| < N/2, so
//! nested (cubic and higher) products carry no aliasing either. Pointwise
//! nonlinear maps are evaluated on the padded grid and truncated back.

use crate::error::{Error, Result};
use crate::specfun::f_ratio;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

/// A periodic box with cached FFT plans and common symbols.
pub struct SpectralGrid {
    half_length: f64,
    n: usize,
    m_pad: usize,
    k: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    fwd_pad: Arc<dyn Fft<f64>>,
    inv_pad: Arc<dyn Fft<f64>>,
    dz: OnceLock<Symbol>,
    dzz: OnceLock<Symbol>,
    k0: OnceLock<Symbol>,
}

impl fmt::Debug for SpectralGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SpectralGrid {{ L: {}, N: {} }}", self.half_length, self.n)
    }
}

impl SpectralGrid {
    pub fn new(half_length: f64, n: usize) -> Result<Arc<Self>> {
        if !(half_length > 0.0) || !half_length.is_finite() {
            return Err(Error::Parameter(format!("half length must be positive, got {half_length}")));
        }
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::Parameter(format!("grid size must be a power of two >= 4, got {n}")));
        }
        let m_pad = 3 * n / 2;
        let mut planner = FftPlanner::new();
        let k = (0..n).map(|i| PI * mode_of_index(i, n) as f64 / half_length).collect();
        Ok(Arc::new(SpectralGrid {
            half_length,
            n,
            m_pad,
            k,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
            fwd_pad: planner.plan_fft_forward(m_pad),
            inv_pad: planner.plan_fft_inverse(m_pad),
            dz: OnceLock::new(),
            dzz: OnceLock::new(),
            k0: OnceLock::new(),
        }))
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.k
    }

    pub fn dk(&self) -> f64 {
        PI / self.half_length
    }

    pub fn nodes(&self) -> Vec<f64> {
        let h = 2.0 * self.half_length / self.n as f64;
        (0..self.n).map(|j| -self.half_length + h * j as f64).collect()
    }

    /// Integer mode m of array position i.
    pub fn mode(&self, i: usize) -> i64 {
        mode_of_index(i, self.n)
    }

    /// Array position of integer mode m, if representable.
    pub fn index(&self, m: i64) -> Option<usize> {
        let half = (self.n / 2) as i64;
        if m < -half || m >= half {
            None
        } else if m >= 0 {
            Some(m as usize)
        } else {
            Some((m + self.n as i64) as usize)
        }
    }

    /// Array position of the wavenumber k, if k is an exact grid wavenumber.
    pub fn index_of_wavenumber(&self, k: f64) -> Option<usize> {
        let m = k / self.dk();
        let r = m.round();
        if (m - r).abs() > 1e-9 {
            return None;
        }
        self.index(r as i64)
    }

    pub fn same_as(&self, other: &SpectralGrid) -> bool {
        self.n == other.n && self.half_length == other.half_length
    }

    /// Spectral first derivative symbol ik (zero at the Nyquist mode).
    pub fn dz_symbol(&self) -> &Symbol {
        self.dz.get_or_init(|| {
            let nyq = self.n / 2;
            let v = (0..self.n)
                .map(|i| if i == nyq { Complex64::new(0.0, 0.0) } else { Complex64::new(0.0, self.k[i]) })
                .collect();
            Symbol { values: v, even: false, real: false }
        })
    }

    /// Second derivative symbol -k^2.
    pub fn dzz_symbol(&self) -> &Symbol {
        self.dzz.get_or_init(|| Symbol::real_even(self, |k| -k * k))
    }

    /// Flat Dirichlet–Neumann symbol f(k) = |k| I0(|k|)/I1(|k|).
    pub fn k0_symbol(&self) -> &Symbol {
        self.k0.get_or_init(|| Symbol::real_even(self, f_ratio))
    }

    fn forward(&self, samples: &[Complex64]) -> Vec<Complex64> {
        let mut buf = samples.to_vec();
        self.fwd.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        for (i, c) in buf.iter_mut().enumerate() {
            *c *= if i % 2 == 0 { scale } else { -scale };
        }
        buf
    }

    fn inverse(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> =
            coeffs.iter().enumerate().map(|(i, &c)| if i % 2 == 0 { c } else { -c }).collect();
        self.inv.process(&mut buf);
        buf
    }

    /// Samples on the 3/2-padded grid (Nyquist mode dropped).
    fn to_padded(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.m_pad];
        let half = (self.n / 2) as i64;
        for (i, &c) in coeffs.iter().enumerate() {
            let m = mode_of_index(i, self.n);
            if m == -half {
                continue;
            }
            let pos = if m >= 0 { m as usize } else { (m + self.m_pad as i64) as usize };
            buf[pos] = if m % 2 == 0 { c } else { -c };
        }
        self.inv_pad.process(&mut buf);
        buf
    }

    /// Coefficients from padded samples, truncated to |m| < N/2.
    fn from_padded(&self, mut buf: Vec<Complex64>) -> Vec<Complex64> {
        self.fwd_pad.process(&mut buf);
        let scale = 1.0 / self.m_pad as f64;
        let half = (self.n / 2) as i64;
        (0..self.n)
            .map(|i| {
                let m = mode_of_index(i, self.n);
                if m == -half {
                    return Complex64::new(0.0, 0.0);
                }
                let pos = if m >= 0 { m as usize } else { (m + self.m_pad as i64) as usize };
                let c = buf[pos] * scale;
                if m % 2 == 0 {
                    c
                } else {
                    -c
                }
            })
            .collect()
    }
}

fn mode_of_index(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Values of a Fourier multiplier on the grid wavenumbers (FFT order).
#[derive(Debug, Clone)]
pub struct Symbol {
    pub values: Vec<Complex64>,
    /// symbol(-k) = symbol(k)
    pub even: bool,
    /// purely real values
    pub real: bool,
}

impl Symbol {
    pub fn real_even(grid: &SpectralGrid, f: impl Fn(f64) -> f64) -> Self {
        let v = grid.k.iter().map(|&k| Complex64::new(f(k.abs()), 0.0)).collect();
        Symbol { values: v, even: true, real: true }
    }

    /// Real symbol without symmetry, e.g. g(omega + eps k).
    pub fn real(grid: &SpectralGrid, f: impl Fn(f64) -> f64) -> Self {
        let v = grid.k.iter().map(|&k| Complex64::new(f(k), 0.0)).collect();
        Symbol { values: v, even: false, real: true }
    }

    pub fn complex(grid: &SpectralGrid, f: impl Fn(f64) -> Complex64) -> Self {
        let v = grid.k.iter().map(|&k| f(k)).collect();
        Symbol { values: v, even: false, real: false }
    }

    /// Pointwise product of two symbols.
    pub fn compose(&self, other: &Symbol) -> Symbol {
        Symbol {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect(),
            even: self.even && other.even,
            real: self.real && other.real,
        }
    }
}

/// Symmetry class of a field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    None,
    /// Real and even in z: coefficients real and even in m.
    Even,
    /// Real coefficients: u(-z) = conj u(z).
    RealTransform,
}

impl Parity {
    fn join(self, other: Parity) -> Parity {
        if self == other {
            self
        } else {
            Parity::None
        }
    }
}

/// A periodic grid function held by its Fourier coefficients.
#[derive(Clone)]
pub struct SpectralField {
    grid: Arc<SpectralGrid>,
    coeffs: Vec<Complex64>,
    parity: Parity,
    samples: OnceLock<Vec<Complex64>>,
}

impl fmt::Debug for SpectralField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralField").field("grid", &self.grid).field("parity", &self.parity).finish()
    }
}

impl SpectralField {
    pub fn zeros(grid: &Arc<SpectralGrid>) -> Self {
        Self::from_coeffs(grid, vec![Complex64::new(0.0, 0.0); grid.n], Parity::Even)
    }

    pub fn constant(grid: &Arc<SpectralGrid>, c: f64) -> Self {
        let mut v = vec![Complex64::new(0.0, 0.0); grid.n];
        v[0] = Complex64::new(c, 0.0);
        Self::from_coeffs(grid, v, Parity::Even)
    }

    pub fn from_coeffs(grid: &Arc<SpectralGrid>, coeffs: Vec<Complex64>, parity: Parity) -> Self {
        assert_eq!(coeffs.len(), grid.n, "coefficient count must match the grid");
        SpectralField { grid: grid.clone(), coeffs, parity, samples: OnceLock::new() }
    }

    pub fn from_samples(grid: &Arc<SpectralGrid>, samples: Vec<Complex64>, parity: Parity) -> Self {
        assert_eq!(samples.len(), grid.n, "sample count must match the grid");
        let coeffs = grid.forward(&samples);
        let cell = OnceLock::new();
        let _ = cell.set(samples);
        SpectralField { grid: grid.clone(), coeffs, parity, samples: cell }
    }

    pub fn from_real_samples(grid: &Arc<SpectralGrid>, samples: &[f64], parity: Parity) -> Self {
        Self::from_samples(grid, samples.iter().map(|&x| Complex64::new(x, 0.0)).collect(), parity)
    }

    /// Sample a real function at the nodes.
    pub fn from_fn(grid: &Arc<SpectralGrid>, f: impl Fn(f64) -> f64, parity: Parity) -> Self {
        let s: Vec<f64> = grid.nodes().into_iter().map(f).collect();
        Self::from_real_samples(grid, &s, parity)
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn with_parity(mut self, parity: Parity) -> Self {
        self.parity = parity;
        self
    }

    pub fn samples(&self) -> &[Complex64] {
        self.samples.get_or_init(|| self.grid.inverse(&self.coeffs))
    }

    pub fn real_samples(&self) -> Vec<f64> {
        self.samples().iter().map(|c| c.re).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.samples().iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Discrete L2 norm, (2L/N sum |u_j|^2)^{1/2}.
    pub fn l2_norm(&self) -> f64 {
        let h = 2.0 * self.grid.half_length / self.grid.n as f64;
        (h * self.samples().iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// Largest violation of the symmetry recorded in the parity tag.
    pub fn parity_defect(&self) -> f64 {
        match self.parity {
            Parity::None => 0.0,
            Parity::Even => self.even_defect(),
            Parity::RealTransform => self.coeffs.iter().map(|c| c.im.abs()).fold(0.0, f64::max),
        }
    }

    /// max |c_m - c_{-m}| + max |Im c_m|, regardless of the tag.
    pub fn even_defect(&self) -> f64 {
        let n = self.grid.n;
        let mut d: f64 = 0.0;
        for i in 1..n / 2 {
            d = d.max((self.coeffs[i] - self.coeffs[n - i]).norm());
        }
        let im = self.coeffs.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
        d + im
    }

    /// Evaluate the trigonometric interpolant at arbitrary z.
    pub fn eval(&self, z: f64) -> Complex64 {
        self.coeffs
            .iter()
            .zip(&self.grid.k)
            .map(|(c, &k)| c * Complex64::from_polar(1.0, k * z))
            .sum()
    }

    /// Zero every coefficient whose wavenumber fails `keep`.
    pub fn project(&self, keep: impl Fn(f64) -> bool) -> Self {
        let c = self.coeffs.iter().zip(&self.grid.k).map(|(&c, &k)| if keep(k) { c } else { 0.0 * c }).collect();
        SpectralField::from_coeffs(&self.grid, c, self.parity)
    }

    fn zip(&self, o: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        debug_assert!(self.grid.same_as(&o.grid), "grid mismatch");
        let c = self.coeffs.iter().zip(&o.coeffs).map(|(&a, &b)| f(a, b)).collect();
        SpectralField::from_coeffs(&self.grid, c, self.parity.join(o.parity))
    }

    fn from_padded_product(&self, buf: Vec<Complex64>, parity: Parity) -> Self {
        SpectralField::from_coeffs(&self.grid, self.grid.from_padded(buf), parity)
    }
}

/// Check that all fields live on the same grid.
pub fn check_same_grid(fields: &[&SpectralField]) -> Result<()> {
    if let Some(first) = fields.first() {
        for f in &fields[1..] {
            if !first.grid.same_as(&f.grid) {
                return Err(Error::GridMismatch(format!("{:?} vs {:?}", first.grid, f.grid)));
            }
        }
    }
    Ok(())
}

fn parity_after_symbol(p: Parity, s: &Symbol) -> Parity {
    match p {
        Parity::Even if s.even && s.real => Parity::Even,
        Parity::RealTransform if s.real => Parity::RealTransform,
        _ => Parity::None,
    }
}

fn parity_after_product(a: Parity, b: Parity) -> Parity {
    a.join(b)
}

/// Field algebra shared by plain fields and forward-mode jets, so that each
/// operator is written once and its exact linearization comes for free.
pub trait FieldOps: Clone {
    fn grid(&self) -> &Arc<SpectralGrid>;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn scale(&self, a: f64) -> Self;
    fn add_const(&self, c: f64) -> Self;
    /// Dealiased product.
    fn mul(&self, o: &Self) -> Self;
    fn apply(&self, s: &Symbol) -> Self;
    fn conj(&self) -> Self;
    /// Pointwise real function `f(x) -> (value, derivative)` of the real part.
    fn map_real(&self, f: &dyn Fn(f64) -> (f64, f64)) -> Self;
    /// Value part as a plain field.
    fn value(&self) -> &SpectralField;

    fn dz(&self) -> Self {
        let s = self.grid().clone();
        self.apply(s.dz_symbol())
    }
    fn dzz(&self) -> Self {
        let s = self.grid().clone();
        self.apply(s.dzz_symbol())
    }
    fn k0(&self) -> Self {
        let s = self.grid().clone();
        self.apply(s.k0_symbol())
    }
    fn sq(&self) -> Self {
        self.mul(self)
    }
}

impl FieldOps for SpectralField {
    fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    fn add(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a + b)
    }

    fn sub(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a - b)
    }

    fn scale(&self, a: f64) -> Self {
        let c = self.coeffs.iter().map(|&c| c * a).collect();
        SpectralField::from_coeffs(&self.grid, c, self.parity)
    }

    fn add_const(&self, c: f64) -> Self {
        let mut v = self.coeffs.clone();
        v[0] += c;
        let parity = if self.parity == Parity::Even || self.parity == Parity::RealTransform { self.parity } else { Parity::None };
        SpectralField::from_coeffs(&self.grid, v, parity)
    }

    fn mul(&self, o: &Self) -> Self {
        debug_assert!(self.grid.same_as(&o.grid), "grid mismatch");
        let a = self.grid.to_padded(&self.coeffs);
        let b = if std::ptr::eq(self, o) { a.clone() } else { self.grid.to_padded(&o.coeffs) };
        let p: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
        self.from_padded_product(p, parity_after_product(self.parity, o.parity))
    }

    fn apply(&self, s: &Symbol) -> Self {
        let c = self.coeffs.iter().zip(&s.values).map(|(a, b)| a * b).collect();
        SpectralField::from_coeffs(&self.grid, c, parity_after_symbol(self.parity, s))
    }

    fn conj(&self) -> Self {
        let n = self.grid.n;
        // coefficient of conj(u) at m is conj(c_{-m})
        let c = (0..n)
            .map(|i| {
                let m = self.grid.mode(i);
                match self.grid.index(-m) {
                    Some(j) => self.coeffs[j].conj(),
                    None => Complex64::new(0.0, 0.0),
                }
            })
            .collect();
        SpectralField::from_coeffs(&self.grid, c, self.parity)
    }

    fn map_real(&self, f: &dyn Fn(f64) -> (f64, f64)) -> Self {
        let p: Vec<Complex64> = self.grid.to_padded(&self.coeffs).iter().map(|z| Complex64::new(f(z.re).0, 0.0)).collect();
        let parity = if self.parity == Parity::Even { Parity::Even } else { Parity::None };
        self.from_padded_product(p, parity)
    }

    fn value(&self) -> &SpectralField {
        self
    }
}

/// A field together with a tangent direction (forward-mode derivative).
#[derive(Clone, Debug)]
pub struct Jet {
    pub v: SpectralField,
    pub d: SpectralField,
}

impl Jet {
    pub fn new(v: SpectralField, d: SpectralField) -> Self {
        Jet { v, d }
    }
}

impl FieldOps for Jet {
    fn grid(&self) -> &Arc<SpectralGrid> {
        &self.v.grid
    }

    fn add(&self, o: &Self) -> Self {
        Jet { v: self.v.add(&o.v), d: self.d.add(&o.d) }
    }

    fn sub(&self, o: &Self) -> Self {
        Jet { v: self.v.sub(&o.v), d: self.d.sub(&o.d) }
    }

    fn scale(&self, a: f64) -> Self {
        Jet { v: self.v.scale(a), d: self.d.scale(a) }
    }

    fn add_const(&self, c: f64) -> Self {
        Jet { v: self.v.add_const(c), d: self.d.clone() }
    }

    fn mul(&self, o: &Self) -> Self {
        let g = &self.v.grid;
        let av = g.to_padded(&self.v.coeffs);
        let ad = g.to_padded(&self.d.coeffs);
        let (bv, bd) = if std::ptr::eq(self, o) {
            (av.clone(), ad.clone())
        } else {
            (g.to_padded(&o.v.coeffs), g.to_padded(&o.d.coeffs))
        };
        let pv: Vec<Complex64> = av.iter().zip(&bv).map(|(x, y)| x * y).collect();
        let pd: Vec<Complex64> = (0..av.len()).map(|j| av[j] * bd[j] + ad[j] * bv[j]).collect();
        Jet {
            v: self.v.from_padded_product(pv, parity_after_product(self.v.parity, o.v.parity)),
            d: self.v.from_padded_product(pd, parity_after_product(self.d.parity, o.d.parity)),
        }
    }

    fn apply(&self, s: &Symbol) -> Self {
        Jet { v: self.v.apply(s), d: self.d.apply(s) }
    }

    fn conj(&self) -> Self {
        Jet { v: self.v.conj(), d: self.d.conj() }
    }

    fn map_real(&self, f: &dyn Fn(f64) -> (f64, f64)) -> Self {
        let g = &self.v.grid;
        let pv = g.to_padded(&self.v.coeffs);
        let pd = g.to_padded(&self.d.coeffs);
        let mut outv = Vec::with_capacity(pv.len());
        let mut outd = Vec::with_capacity(pv.len());
        for (x, dx) in pv.iter().zip(&pd) {
            let (y, dy) = f(x.re);
            outv.push(Complex64::new(y, 0.0));
            outd.push(Complex64::new(dy * dx.re, 0.0));
        }
        let pe = |p: Parity| if p == Parity::Even { Parity::Even } else { Parity::None };
        Jet {
            v: self.v.from_padded_product(outv, pe(self.v.parity)),
            d: self.v.from_padded_product(outd, pe(self.d.parity)),
        }
    }

    fn value(&self) -> &SpectralField {
        &self.v
    }
}

/// Strong-regime default cutoff width.
pub const STRONG_DEFAULT_DELTA: f64 = 2.0;

/// Sharp spectral cutoffs: chi_0 keeps |k| < delta; chi keeps the
/// neighbourhoods (+-omega - delta, +-omega + delta).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffSpec {
    pub delta: f64,
    pub omega: f64,
}

impl CutoffSpec {
    pub fn new(delta: f64, omega: f64) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::Parameter(format!("cutoff width must be positive, got {delta}")));
        }
        if omega > 0.0 && !(delta < omega / 3.0) {
            return Err(Error::Parameter(format!("cutoff width {delta} must be below omega/3 = {}", omega / 3.0)));
        }
        Ok(CutoffSpec { delta, omega })
    }

    /// Default widths: omega/6 for the weak regime; 2 for the strong regime,
    /// wide enough that the cutoff of zeta^2 stays below the O(eps^2)
    /// approach to the KdV profile over eps in [0.05, 0.3].
    pub fn default_for(omega: f64) -> Self {
        let delta = if omega > 0.0 { omega / 6.0 } else { STRONG_DEFAULT_DELTA };
        CutoffSpec { delta, omega }
    }

    pub fn chi0(&self, k: f64) -> bool {
        k.abs() < self.delta
    }

    pub fn chi(&self, k: f64) -> bool {
        (k.abs() - self.omega).abs() < self.delta
    }

    /// chi_0(eps D) as a 0/1 symbol.
    pub fn chi0_scaled(&self, grid: &SpectralGrid, eps: f64) -> Symbol {
        Symbol::real_even(grid, |k| if self.chi0(eps * k) { 1.0 } else { 0.0 })
    }
}
