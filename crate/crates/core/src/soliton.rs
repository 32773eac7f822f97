//! Explicit two-parameter gap soliton family of the CME with `β = γ = 0`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::cme::{cme_residual, CmeSystem, EnvelopePair};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolitonParams {
    pub v: f64,
    pub delta: f64,
    pub system: CmeSystem,
}

impl SolitonParams {
    pub fn new(v: f64, delta: f64, system: CmeSystem) -> Result<Self> {
        if !(v.abs() < 1.0) {
            return Err(Error::Soliton(format!("velocity v = {v} must lie in (-1, 1)")));
        }
        if !(0.0..=PI).contains(&delta) {
            return Err(Error::Soliton(format!("detuning delta = {delta} must lie in [0, pi]")));
        }
        if system.kappa * system.alpha == 0.0 || !(system.kappa * system.alpha).is_finite() {
            return Err(Error::Soliton("family needs kappa * alpha != 0".into()));
        }
        if system.c_g == 0.0 {
            return Err(Error::Soliton("family needs c_g != 0".into()));
        }
        if system.has_beta_gamma() {
            return Err(Error::Soliton("explicit family only exists for beta = gamma = 0".into()));
        }
        Ok(Self { v, delta, system })
    }

    /// `sin δ = 0` gives the zero solution.
    pub fn is_degenerate(&self) -> bool {
        self.delta.sin().abs() < 1e-12
    }

    pub fn mu(&self) -> f64 {
        1.0 / (1.0 - self.v * self.v).sqrt()
    }

    /// Spatial decay rate in `X`: `μ |κ sin δ| / |c_g|`.
    pub fn decay_rate(&self) -> f64 {
        self.mu() * (self.system.kappa * self.delta.sin()).abs() / self.system.c_g.abs()
    }

    /// Envelope speed in `X` per unit `T`.
    pub fn speed(&self) -> f64 {
        self.system.c_g * self.v
    }

    /// Half-width of the default `X` window: 20 decay lengths.
    pub fn default_half_width(&self) -> f64 {
        20.0 / self.decay_rate()
    }
}

/// `sech z = 2 / (e^z + e^{-z})`, evaluated without overflow.
fn sech(z: Complex64) -> Complex64 {
    let r = z.re.abs();
    if r > 700.0 {
        // |sech| < 1e-300
        return Complex64::new(0.0, 0.0);
    }
    // 2 e^{-|Re z|} / (e^{z - |Re z|} + e^{-z - |Re z|})
    let a = (z - r).exp();
    let b = (-z - r).exp();
    2.0 * (-r).exp() / (a + b)
}

/// Evaluate `(A_+, A_-)` at time `T` on the points `x`.
pub fn gap_soliton(p: &SolitonParams, x: &[f64], t: f64) -> (Vec<Complex64>, Vec<Complex64>) {
    if p.is_degenerate() {
        let z = vec![Complex64::new(0.0, 0.0); x.len()];
        return (z.clone(), z);
    }
    let s = &p.system;
    let v = p.v;
    let nu = (s.kappa * s.alpha).signum();
    let mu = p.mu();
    let a = (2.0 * (1.0 - v * v) / (3.0 - v * v)).sqrt();
    let big_delta = ((1.0 - v) / (1.0 + v)).powf(0.25);
    let amp = a * (s.kappa.abs() / (2.0 * s.alpha.abs())).sqrt() * p.delta.sin();
    let expo = 2.0 * v / (3.0 - v * v);
    let (sd, cd) = (nu * p.delta).sin_cos();
    let i = Complex64::i();
    let rot = Complex64::from_polar(1.0, s.kappa_s * t);
    let eval = |&xx: &f64| {
        let theta = mu * s.kappa * p.delta.sin() * (xx / s.c_g - v * t);
        let zeta = mu * s.kappa * p.delta.cos() * (v * xx / s.c_g - t);
        // D = e^{2θ} + e^{iνδ}; Im D = sin νδ keeps one sign, so arg D is continuous
        let arg_d = sd.atan2((2.0 * theta).exp() + cd);
        let eta = expo * (PI - 2.0 * arg_d);
        let common = amp * Complex64::from_polar(1.0, eta + nu * zeta) * rot;
        let ap = nu * common / big_delta * sech(theta - i * nu * p.delta / 2.0);
        let am = -common * big_delta * sech(theta + i * nu * p.delta / 2.0);
        (ap, am)
    };
    if x.len() > 4096 {
        x.par_iter().map(eval).unzip()
    } else {
        x.iter().map(eval).unzip()
    }
}

/// Tabulate the soliton on an `(X, T)` grid.
pub fn envelope_pair(p: &SolitonParams, x: &[f64], t: &[f64]) -> EnvelopePair {
    let (a_plus, a_minus) = t.iter().map(|&tt| gap_soliton(p, x, tt)).unzip();
    EnvelopePair {
        x: x.to_vec(),
        t: t.to_vec(),
        a_plus,
        a_minus,
    }
}

/// Uniform grid with `n` points on `[a, b]`.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    let h = (b - a) / (n - 1) as f64;
    (0..n).map(|j| a + j as f64 * h).collect()
}

#[derive(Clone, Debug)]
pub struct SolitonCheck {
    /// `(points per width, relative residual)` from coarse to fine.
    pub levels: Vec<(usize, f64)>,
    /// Observed order between successive levels.
    pub orders: Vec<f64>,
    pub max_abs: f64,
}

impl SolitonCheck {
    pub fn finest(&self) -> f64 {
        self.levels.last().map(|l| l.1).unwrap_or(f64::NAN)
    }

    pub fn min_order(&self) -> f64 {
        self.orders.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Residual of the explicit family on grids with `points_per_width`, twice and
/// four times that, over `half_widths` decay lengths either side of the
/// centre at time `t0`. The `T` step follows the `X` step scaled by the
/// envelope speed.
pub fn verify_soliton(p: &SolitonParams, points_per_width: usize, half_widths: f64, t0: f64) -> Result<SolitonCheck> {
    if p.is_degenerate() {
        return Err(Error::Soliton("degenerate detuning gives the zero solution".into()));
    }
    let width = 1.0 / p.decay_rate();
    let centre = p.speed() * t0;
    let mut levels = Vec::new();
    let mut max_abs = 0.0f64;
    for level in 0..3 {
        let ppw = points_per_width << level;
        let hx = width / ppw as f64;
        let nx = (2.0 * half_widths * ppw as f64).round() as usize + 1;
        let x = linspace(centre - half_widths * width, centre + half_widths * width, nx);
        // time step resolving the fastest phase/transport scale
        let rate = (p.system.c_g.abs() + p.speed().abs()) / hx;
        let ht = 1.0 / rate.max(p.system.kappa.abs() * p.mu() * ppw as f64);
        let t = linspace(t0 - 3.0 * ht, t0 + 3.0 * ht, 7);
        let env = envelope_pair(p, &x, &t);
        let m = env.max_abs();
        max_abs = max_abs.max(m);
        let r = cme_residual(&env, &p.system)?;
        levels.push((ppw, r.sup() / m));
    }
    let orders = levels.windows(2).map(|w| (w[0].1 / w[1].1).log2()).collect();
    Ok(SolitonCheck { levels, orders, max_abs })
}
