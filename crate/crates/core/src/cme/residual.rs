use num_complex::Complex64;
use rayon::prelude::*;

use super::coefficients::CmeSystem;
use crate::error::{Error, Result};

/// Envelopes on a uniform slow grid. Fields are indexed `[it][ix]`.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvelopePair {
    pub x: Vec<f64>,
    pub t: Vec<f64>,
    pub a_plus: Vec<Vec<Complex64>>,
    pub a_minus: Vec<Vec<Complex64>>,
}

impl EnvelopePair {
    pub fn max_abs(&self) -> f64 {
        self.a_plus
            .iter()
            .chain(&self.a_minus)
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.a_plus
            .iter()
            .chain(&self.a_minus)
            .flatten()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Multiply both envelopes by `e^{iωT}`.
    pub fn with_phase_rotation(mut self, omega: f64) -> Self {
        for (it, &t) in self.t.iter().enumerate() {
            let e = Complex64::from_polar(1.0, omega * t);
            self.a_plus[it].iter_mut().for_each(|z| *z *= e);
            self.a_minus[it].iter_mut().for_each(|z| *z *= e);
        }
        self
    }
}

/// Residual fields on the interior of the grid (two points dropped at every
/// edge) and their sup norms.
#[derive(Clone, Debug)]
pub struct ResidualReport {
    pub r_plus: Vec<Vec<Complex64>>,
    pub r_minus: Vec<Vec<Complex64>>,
    pub sup_plus: f64,
    pub sup_minus: f64,
}

impl ResidualReport {
    pub fn sup(&self) -> f64 {
        self.sup_plus.max(self.sup_minus)
    }
}

fn uniform_step(v: &[f64], what: &str) -> Result<f64> {
    if v.len() < 2 * R + 1 {
        return Err(Error::Cme(format!("{what} grid needs at least {} points, got {}", 2 * R + 1, v.len())));
    }
    let h = (v[v.len() - 1] - v[0]) / (v.len() - 1) as f64;
    if !(h > 0.0) || v.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h.abs().max(1.0)) {
        return Err(Error::Cme(format!("{what} grid must be uniform and increasing")));
    }
    Ok(h)
}

/// Stencil half-width. Sixth order: the explicit soliton has complex poles
/// close to the real axis, and fourth order needs roughly twice the points
/// for the same residual.
const R: usize = 3;

fn d6(f: &[Complex64], i: usize, h: f64) -> Complex64 {
    (45.0 * (f[i + 1] - f[i - 1]) - 9.0 * (f[i + 2] - f[i - 2]) + (f[i + 3] - f[i - 3])) / (60.0 * h)
}

/// Both CME residuals at one point given envelope values and derivatives.
fn pointwise(sys: &CmeSystem, ap: Complex64, am: Complex64, dt: (Complex64, Complex64), dx: (Complex64, Complex64)) -> (Complex64, Complex64) {
    let i = Complex64::i();
    let (p2, m2) = (ap.norm_sqr(), am.norm_sqr());
    let (b, g) = (sys.beta, sys.gamma);
    let rp = i * (dt.0 + sys.c_g * dx.0)
        + sys.kappa * am
        + sys.kappa_s * ap
        + sys.alpha * (p2 + 2.0 * m2) * ap
        + b * (m2 + 2.0 * p2) * am
        + b.conj() * ap * ap * am.conj()
        + g * am * am * ap.conj();
    let rm = i * (dt.1 - sys.c_g * dx.1)
        + sys.kappa * ap
        + sys.kappa_s * am
        + sys.alpha * (m2 + 2.0 * p2) * am
        + b.conj() * (p2 + 2.0 * m2) * ap
        + b * am * am * ap.conj()
        + g.conj() * ap * ap * am.conj();
    (rp, rm)
}

/// Evaluate both CME equations with sixth-order centred differences on the
/// interior points of the grid.
pub fn cme_residual(env: &EnvelopePair, sys: &CmeSystem) -> Result<ResidualReport> {
    let hx = uniform_step(&env.x, "X")?;
    let ht = uniform_step(&env.t, "T")?;
    let (nx, nt) = (env.x.len(), env.t.len());
    if env.a_plus.len() != nt
        || env.a_minus.len() != nt
        || env.a_plus.iter().chain(&env.a_minus).any(|r| r.len() != nx)
    {
        return Err(Error::Cme("envelope arrays do not match the (X, T) grid".into()));
    }
    // resolution: the half-maximum region must hold at least 5 points
    let mid = nt / 2;
    let mag: Vec<f64> = env.a_plus[mid]
        .iter()
        .zip(&env.a_minus[mid])
        .map(|(a, b)| a.norm().max(b.norm()))
        .collect();
    let peak = mag.iter().copied().fold(0.0, f64::max);
    if peak > 0.0 {
        let wide = mag.iter().filter(|&&m| m >= 0.5 * peak).count();
        if wide < 5 {
            return Err(Error::Cme(format!(
                "X grid too coarse: only {wide} points across the envelope half-width"
            )));
        }
    }
    let rows: Vec<(Vec<Complex64>, Vec<Complex64>)> = (R..nt - R)
        .into_par_iter()
        .map(|it| {
            let (ap, am) = (&env.a_plus[it], &env.a_minus[it]);
            (R..nx - R)
                .map(|ix| {
                    let col_p: [Complex64; 2 * R + 1] = std::array::from_fn(|j| env.a_plus[it + j - R][ix]);
                    let col_m: [Complex64; 2 * R + 1] = std::array::from_fn(|j| env.a_minus[it + j - R][ix]);
                    pointwise(
                        sys,
                        ap[ix],
                        am[ix],
                        (d6(&col_p, R, ht), d6(&col_m, R, ht)),
                        (d6(ap, ix, hx), d6(am, ix, hx)),
                    )
                })
                .unzip()
        })
        .collect();
    let (r_plus, r_minus): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    let sup = |r: &[Vec<Complex64>]| r.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(ResidualReport {
        sup_plus: sup(&r_plus),
        sup_minus: sup(&r_minus),
        r_plus,
        r_minus,
    })
}
