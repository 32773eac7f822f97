use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

/// Periodic part of a Bloch wave, `p(x) = Σ_m c_m exp(i m g x)`, with the
/// coefficients stored on a contiguous index window starting at `first`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlochFunction {
    lattice: f64,
    first: i64,
    coeffs: Vec<Complex64>,
}

impl BlochFunction {
    pub fn new(lattice: f64, first: i64, coeffs: Vec<Complex64>) -> Self {
        Self { lattice, first, coeffs }
    }

    /// From a unit eigenvector of the plane-wave matrix with indices
    /// `-cutoff..=cutoff`; rescaled so that `⟨p, p⟩_{L²(0,P)} = 1`.
    pub fn from_eigenvector(lattice: f64, cutoff: usize, v: &[Complex64]) -> Self {
        let scale = (lattice / (2.0 * PI)).sqrt();
        Self {
            lattice,
            first: -(cutoff as i64),
            coeffs: v.iter().map(|z| z * scale).collect(),
        }
    }

    pub fn lattice(&self) -> f64 {
        self.lattice
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.lattice
    }

    /// Inclusive index range `(first, last)`.
    pub fn index_range(&self) -> (i64, i64) {
        (self.first, self.first + self.coeffs.len() as i64 - 1)
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coefficient(&self, m: i64) -> Complex64 {
        let i = m - self.first;
        if i < 0 || i >= self.coeffs.len() as i64 {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[i as usize]
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.coeffs.iter().enumerate().map(move |(i, &c)| (self.first + i as i64, c))
    }

    /// `⟨self, other⟩_P = ∫_0^P self · conj(other)`, exact by Parseval.
    pub fn inner(&self, other: &BlochFunction) -> Complex64 {
        let s: Complex64 = self.iter().map(|(m, c)| c * other.coefficient(m).conj()).sum();
        s * self.period()
    }

    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.period()
    }

    pub fn scaled(&self, z: Complex64) -> Self {
        Self {
            lattice: self.lattice,
            first: self.first,
            coeffs: self.coeffs.iter().map(|c| c * z).collect(),
        }
    }

    /// Complex conjugate `conj(p(x))`.
    pub fn conj(&self) -> Self {
        let (_, last) = self.index_range();
        Self {
            lattice: self.lattice,
            first: -last,
            coeffs: self.coeffs.iter().rev().map(|c| c.conj()).collect(),
        }
    }

    /// `p(x) · exp(i j g x)`.
    pub fn shifted(&self, j: i64) -> Self {
        Self {
            lattice: self.lattice,
            first: self.first + j,
            coeffs: self.coeffs.clone(),
        }
    }

    /// `∂_x p`.
    pub fn derivative(&self) -> Self {
        Self {
            lattice: self.lattice,
            first: self.first,
            coeffs: self
                .iter()
                .map(|(m, c)| c * Complex64::new(0.0, m as f64 * self.lattice))
                .collect(),
        }
    }

    /// `2 ⟨(k - i∂_x) p, p⟩_P` for a physical wavenumber `k`.
    pub fn velocity(&self, k: f64) -> f64 {
        2.0 * self
            .iter()
            .map(|(m, c)| (k + m as f64 * self.lattice) * c.norm_sqr())
            .sum::<f64>()
            * self.period()
    }

    pub fn value_at(&self, x: f64) -> Complex64 {
        let step = Complex64::from_polar(1.0, self.lattice * x);
        let mut phase = Complex64::from_polar(1.0, self.first as f64 * self.lattice * x);
        let mut s = Complex64::new(0.0, 0.0);
        for (i, c) in self.coeffs.iter().enumerate() {
            if i % 32 == 0 {
                phase = Complex64::from_polar(1.0, (self.first + i as i64) as f64 * self.lattice * x);
            }
            s += c * phase;
            phase *= step;
        }
        s
    }

    pub fn evaluate(&self, x: &[f64]) -> Vec<Complex64> {
        x.iter().map(|&xi| self.value_at(xi)).collect()
    }

    /// Samples on `x_j = j P / n`, `j = 0..n`, by a single inverse FFT.
    /// Requires `n` to exceed the index span so no harmonics alias.
    pub fn sample_cell(&self, n: usize) -> Vec<Complex64> {
        let (lo, hi) = self.index_range();
        assert!(
            (hi - lo + 1) as usize <= n && lo.abs().max(hi.abs()) < (n / 2) as i64,
            "sampling grid of {n} points aliases harmonics {lo}..={hi}"
        );
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for (m, c) in self.iter() {
            buf[m.rem_euclid(n as i64) as usize] += c;
        }
        FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
        buf
    }
}
