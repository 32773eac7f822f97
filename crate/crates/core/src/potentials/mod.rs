//! Periodic coefficient functions (`V`, `W`, `σ`) stored as finite Fourier
//! series with exact rational wavenumber bookkeeping.
//!
//! A [`PeriodicFunction`] lives on a lattice with reciprocal constant
//! `g = 2π/P`. Its harmonic `n` has physical wavenumber `n · base · g`, where
//! `base` is a [`Wavenumber`] measured in units of `g`. On the primary path
//! `base` is an exact [`Rational`], so questions such as "is `n·k_W` an
//! integer" are answered without floating point.

mod elliptic;

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use num_integer::Integer;
use rayon::prelude::*;
use rustfft::FftPlanner;

pub use elliptic::{complete_k, jacobi_sn, jacobi_sn_cn_dn, EllipticParams};

use crate::error::{Error, Result};

/// Reduced fraction; the denominator is always positive.
pub type Rational = num_rational::Rational64;

/// Tolerance for integrality tests when a wavenumber is only known as a float.
pub const INTEGRALITY_TOL: f64 = 1e-9;

/// Default number of retained harmonics for potentials built from samples.
pub const DEFAULT_HARMONICS: usize = 32;

/// Parse `"p/q"`, `"p"` or `"-p/q"` into a reduced rational.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let t = text.trim();
    let (num, den) = match t.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim()),
        None => (t, "1"),
    };
    let num: i64 = num
        .parse()
        .map_err(|_| Error::Potential(format!("malformed rational `{text}`")))?;
    let den: i64 = den
        .parse()
        .map_err(|_| Error::Potential(format!("malformed rational `{text}`")))?;
    if den == 0 {
        return Err(Error::Potential(format!("zero denominator in `{text}`")));
    }
    Ok(Rational::new(num, den))
}

/// Wavenumber in units of the reciprocal lattice constant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Wavenumber {
    Exact(Rational),
    Approx(f64),
}

impl Wavenumber {
    pub fn value(&self) -> f64 {
        match *self {
            Wavenumber::Exact(r) => *r.numer() as f64 / *r.denom() as f64,
            Wavenumber::Approx(v) => v,
        }
    }

    /// `n · self`, kept exact when possible.
    pub fn times(&self, n: i64) -> Wavenumber {
        match *self {
            Wavenumber::Exact(r) => Wavenumber::Exact(r * n),
            Wavenumber::Approx(v) => Wavenumber::Approx(v * n as f64),
        }
    }

    pub fn plus(&self, other: Rational) -> Wavenumber {
        match *self {
            Wavenumber::Exact(r) => Wavenumber::Exact(r + other),
            Wavenumber::Approx(v) => {
                Wavenumber::Approx(v + *other.numer() as f64 / *other.denom() as f64)
            }
        }
    }

    /// Integer value if `self ∈ ℤ` (exactly, or within [`INTEGRALITY_TOL`]).
    pub fn as_integer(&self) -> Option<i64> {
        match *self {
            Wavenumber::Exact(r) => r.is_integer().then(|| r.to_integer()),
            Wavenumber::Approx(v) => {
                let r = v.round();
                ((v - r).abs() < INTEGRALITY_TOL).then_some(r as i64)
            }
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Wavenumber::Exact(_))
    }
}

impl std::fmt::Display for Wavenumber {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Wavenumber::Exact(r) => write!(f, "{r}"),
            Wavenumber::Approx(v) => write!(f, "{v}"),
        }
    }
}

/// Finite Fourier series `f(x) = Σ_n a_n exp(i n·base·g x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicFunction {
    lattice: f64,
    base: Wavenumber,
    coeffs: BTreeMap<i64, Complex64>,
    real: bool,
    truncated: bool,
}

impl PeriodicFunction {
    /// Build from harmonics. With `real` set, missing negative partners are
    /// filled in as conjugates and inconsistent ones are rejected.
    pub fn new(
        lattice: f64,
        base: Wavenumber,
        harmonics: impl IntoIterator<Item = (i64, Complex64)>,
        real: bool,
    ) -> Result<Self> {
        if !(lattice > 0.0 && lattice.is_finite()) {
            return Err(Error::Potential(format!("lattice constant {lattice} must be positive")));
        }
        let mut coeffs = BTreeMap::new();
        for (n, a) in harmonics {
            if !(a.re.is_finite() && a.im.is_finite()) {
                return Err(Error::Potential(format!("non-finite coefficient at n = {n}")));
            }
            *coeffs.entry(n).or_insert(Complex64::new(0.0, 0.0)) += a;
        }
        if real {
            let scale = coeffs.values().map(|a| a.norm()).fold(0.0, f64::max).max(1.0);
            if let Some(a0) = coeffs.get_mut(&0) {
                if a0.im.abs() > 1e-12 * scale {
                    return Err(Error::Potential("real function with complex mean".into()));
                }
                a0.im = 0.0;
            }
            let keys: Vec<i64> = coeffs.keys().copied().filter(|&n| n > 0).collect();
            for n in keys {
                let a = coeffs[&n];
                match coeffs.get(&-n) {
                    Some(b) if (b - a.conj()).norm() > 1e-12 * scale => {
                        return Err(Error::Potential(format!(
                            "real function needs a_-n = conj(a_n) at n = {n}"
                        )))
                    }
                    _ => {
                        coeffs.insert(-n, a.conj());
                    }
                }
            }
            let neg: Vec<i64> = coeffs.keys().copied().filter(|&n| n < 0).collect();
            for n in neg {
                if !coeffs.contains_key(&-n) {
                    let a = coeffs[&n];
                    coeffs.insert(-n, a.conj());
                }
            }
        }
        coeffs.retain(|_, a| a.norm() != 0.0);
        Ok(Self {
            lattice,
            base,
            coeffs,
            real,
            truncated: false,
        })
    }

    pub fn zero(lattice: f64) -> Self {
        Self {
            lattice,
            base: Wavenumber::Exact(Rational::from_integer(1)),
            coeffs: BTreeMap::new(),
            real: true,
            truncated: false,
        }
    }

    pub fn constant(lattice: f64, value: f64) -> Self {
        let mut f = Self::zero(lattice);
        if value != 0.0 {
            f.coeffs.insert(0, Complex64::new(value, 0.0));
        }
        f
    }

    /// `Σ amp_j cos(n_j · base · g x)`.
    pub fn cosines(lattice: f64, base: Wavenumber, terms: &[(i64, f64)]) -> Result<Self> {
        let mut h = Vec::new();
        for &(n, amp) in terms {
            if n == 0 {
                h.push((0, Complex64::new(amp, 0.0)));
            } else {
                h.push((n, Complex64::new(0.5 * amp, 0.0)));
                h.push((-n, Complex64::new(0.5 * amp, 0.0)));
            }
        }
        Self::new(lattice, base, h, true)
    }

    /// `amplitude · (cos x + offset)` on the 2π lattice.
    pub fn cos_shifted(amplitude: f64, offset: f64) -> Self {
        Self::cosines(
            1.0,
            Wavenumber::Exact(Rational::from_integer(1)),
            &[(0, amplitude * offset), (1, amplitude)],
        )
        .expect("finite coefficients")
    }

    /// `sn²(x | m)` with period `2K(m)`, truncated to `n_max` harmonics.
    pub fn sn_squared(params: EllipticParams, n_max: usize) -> Result<Self> {
        let period = 2.0 * params.quarter_period();
        let n = (4 * n_max + 4).next_power_of_two().max(256);
        let h = period / n as f64;
        let samples: Vec<Complex64> = (0..n)
            .map(|j| {
                let s = jacobi_sn(j as f64 * h, params);
                Complex64::new(s * s, 0.0)
            })
            .collect();
        fourier_coefficients_from_samples(&samples, period, n_max)
    }

    pub fn lattice(&self) -> f64 {
        self.lattice
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.lattice
    }

    pub fn base(&self) -> Wavenumber {
        self.base
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    /// True when the series is a truncation of a possibly infinite one.
    pub fn is_truncated(&self) -> bool {
        self.truncated
    }

    pub fn coefficients(&self) -> &BTreeMap<i64, Complex64> {
        &self.coeffs
    }

    pub fn coefficient(&self, n: i64) -> Complex64 {
        self.coeffs.get(&n).copied().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn abs_sum(&self) -> f64 {
        self.coeffs.values().map(|a| a.norm()).sum()
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.coeffs.values().map(|a| a.norm()).fold(0.0, f64::max)
    }

    /// Physical wavenumber of harmonic `n`.
    pub fn wavenumber(&self, n: i64) -> f64 {
        n as f64 * self.base.value() * self.lattice
    }

    pub fn value_at(&self, x: f64) -> Complex64 {
        let kb = self.base.value() * self.lattice;
        if self.real {
            let mut s = self.coefficient(0).re;
            for (&n, a) in self.coeffs.range(1..) {
                let (sn, cn) = (n as f64 * kb * x).sin_cos();
                s += 2.0 * (a.re * cn - a.im * sn);
            }
            Complex64::new(s, 0.0)
        } else {
            self.coeffs
                .iter()
                .map(|(&n, a)| a * Complex64::from_polar(1.0, n as f64 * kb * x))
                .sum()
        }
    }

    /// Samples at every point of `x`.
    pub fn evaluate(&self, x: &[f64]) -> Vec<Complex64> {
        if x.len() > 4096 {
            x.par_iter().map(|&xi| self.value_at(xi)).collect()
        } else {
            x.iter().map(|&xi| self.value_at(xi)).collect()
        }
    }

    /// Real parts of [`evaluate`](Self::evaluate).
    pub fn evaluate_real(&self, x: &[f64]) -> Vec<f64> {
        self.evaluate(x).into_iter().map(|z| z.re).collect()
    }

    /// Harmonics re-indexed by integer multiples of the lattice constant.
    /// Fails unless every `n · base` is an integer.
    pub fn lattice_harmonics(&self) -> Result<BTreeMap<i64, Complex64>> {
        let mut out = BTreeMap::new();
        for (&n, &a) in &self.coeffs {
            let j = self.base.times(n).as_integer().ok_or_else(|| {
                Error::Potential(format!(
                    "harmonic {n} (wavenumber {} in lattice units) is not lattice periodic",
                    self.base.times(n)
                ))
            })?;
            *out.entry(j).or_insert(Complex64::new(0.0, 0.0)) += a;
        }
        Ok(out)
    }

    /// Smallest number of lattice cells over which the function is periodic,
    /// or `None` for an irrational base.
    pub fn cells_per_period(&self) -> Option<i64> {
        match self.base {
            Wavenumber::Exact(b) => Some(
                self.coeffs
                    .keys()
                    .map(|&n| (b * n).denom().to_owned())
                    .fold(1, |acc, d| acc.lcm(&d)),
            ),
            Wavenumber::Approx(_) => None,
        }
    }

    /// Whether a domain of the given length is a whole number of periods.
    pub fn is_commensurate(&self, length: f64) -> bool {
        self.coeffs.keys().all(|&n| {
            let turns = self.wavenumber(n) * length / (2.0 * PI);
            (turns - turns.round()).abs() < 1e-9 * turns.abs().max(1.0)
        })
    }
}

/// Discrete Fourier coefficients of samples `s_j = f(j·P/N)`, `j = 0..N`.
///
/// The result keeps `|n| ≤ n_max`. When every sample is real the output is
/// flagged real and the coefficient pairs are symmetrised.
pub fn fourier_coefficients_from_samples(
    samples: &[Complex64],
    period: f64,
    n_max: usize,
) -> Result<PeriodicFunction> {
    let n = samples.len();
    if n < 2 * n_max + 1 {
        return Err(Error::Potential(format!(
            "{n} samples cannot resolve {n_max} harmonics (need {})",
            2 * n_max + 1
        )));
    }
    if !(period > 0.0) {
        return Err(Error::Potential(format!("period {period} must be positive")));
    }
    let mut buf = samples.to_vec();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let scale = samples.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let real = samples.iter().all(|z| z.im.abs() <= 1e-14 * scale.max(1e-300));
    let nm = n_max as i64;
    let coef = |j: i64| buf[j.rem_euclid(n as i64) as usize] / n as f64;
    let mut h: Vec<(i64, Complex64)> = Vec::with_capacity(2 * n_max + 1);
    if real {
        h.push((0, Complex64::new(coef(0).re, 0.0)));
        for j in 1..=nm {
            let a = 0.5 * (coef(j) + coef(-j).conj());
            h.push((j, a));
        }
    } else {
        h.extend((-nm..=nm).map(|j| (j, coef(j))));
    }
    let mut f = PeriodicFunction::new(
        2.0 * PI / period,
        Wavenumber::Exact(Rational::from_integer(1)),
        h,
        real,
    )?;
    f.truncated = true;
    Ok(f)
}
