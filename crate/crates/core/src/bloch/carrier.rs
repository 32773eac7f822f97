//! Choice of the two carrier Bloch waves, their phases and group velocity.

use std::f64::consts::PI;

use num_complex::Complex64;
use num_traits::{Signed, Zero};

use super::{solve_at, BlochFunction, BlochProblem};
use crate::cme::WSplitting;
use crate::error::{Error, Result};
use crate::potentials::Rational;
use crate::quadrature::{product, CellQuadrature};

/// Relative eigenvalue gap below which two eigenvalues count as one double one.
pub const GAP_TOL: f64 = 1e-6;
/// Relative gap above which an eigenvalue counts as clearly simple.
const SIMPLE_TOL: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CarrierCase {
    /// Simple eigenvalues at `k_+ = -k_-` inside `(0, 1/2)`.
    SimplePair,
    /// Double eigenvalue at `k_+ = k_- ∈ {0, 1/2}` where two curves cross.
    DoublePoint,
}

/// The two selected Bloch modes. Wavenumbers are fractions of the lattice
/// constant `g`; the physical carrier is `p_±(x) exp(i k_± g x)`.
#[derive(Clone, Debug)]
pub struct CarrierPair {
    pub case: CarrierCase,
    pub k_plus: Rational,
    pub k_minus: Rational,
    pub omega0: f64,
    /// `n_0` in case (a), `n_*` (the lower of the crossing pair) in case (b); from 1.
    pub band: usize,
    pub p_plus: BlochFunction,
    pub p_minus: BlochFunction,
    pub c_g: f64,
}

impl CarrierPair {
    pub fn lattice(&self) -> f64 {
        self.p_plus.lattice()
    }

    pub fn period(&self) -> f64 {
        self.p_plus.period()
    }

    pub fn k_plus_physical(&self) -> f64 {
        rational_value(self.k_plus) * self.lattice()
    }

    pub fn k_minus_physical(&self) -> f64 {
        rational_value(self.k_minus) * self.lattice()
    }

    /// `p_- = conj(p_+) exp(-2 i k_+ x)`, the partner fixed by `p_+`.
    fn partner(&self, p_plus: &BlochFunction) -> BlochFunction {
        partner_of(p_plus, self.k_plus)
    }

    /// Rotate `p_+` by `exp(iθ)` and rebuild `p_-`.
    pub fn rotated(&self, theta: f64) -> CarrierPair {
        let p_plus = self.p_plus.scaled(Complex64::from_polar(1.0, theta));
        let p_minus = self.partner(&p_plus);
        CarrierPair {
            p_plus,
            p_minus,
            ..self.clone()
        }
    }
}

pub(crate) fn rational_value(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn partner_of(p_plus: &BlochFunction, k_plus: Rational) -> BlochFunction {
    let shift = -(k_plus * 2);
    debug_assert!(shift.is_integer() || k_plus.abs() < Rational::new(1, 2));
    if shift.is_integer() {
        p_plus.conj().shifted(shift.to_integer())
    } else {
        // case (a): k_- = -k_+, the partner is the plain conjugate
        p_plus.conj()
    }
}

fn reduce_to_zone(k: Rational) -> Rational {
    let half = Rational::new(1, 2);
    let mut r = k - k.floor();
    if r > half {
        r -= Rational::from_integer(1);
    }
    r
}

fn rel_gap(a: f64, b: f64) -> f64 {
    (b - a).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Select the carrier pair at wavenumber `k0` (fraction of `g`) near band
/// `band_hint` (counted from 1).
pub fn select_carrier_pair(problem: &BlochProblem, k0: Rational, band_hint: usize) -> Result<CarrierPair> {
    if band_hint == 0 {
        return Err(Error::Carrier("band index counts from 1".into()));
    }
    let g = problem.lattice();
    let kr = reduce_to_zone(k0);
    let half = Rational::new(1, 2);
    let n_solve = (band_hint + 3).min(problem.dimension());
    if kr.is_zero() || kr == half {
        return select_double(problem, kr, band_hint, n_solve);
    }
    let k_plus = kr.abs();
    let kp = rational_value(k_plus) * g;
    let (omega, modes) = solve_at(problem, kp, n_solve)?;
    let n = band_hint;
    let w = omega[n - 1];
    let below = if n >= 2 { rel_gap(omega[n - 2], w) } else { f64::INFINITY };
    let above = rel_gap(w, omega[n]);
    if below.min(above) < SIMPLE_TOL {
        return Err(if below.min(above) <= GAP_TOL {
            Error::Carrier(format!("eigenvalue {w} at interior k = {k_plus} is not simple"))
        } else {
            Error::AmbiguousMultiplicity { k: kp, gap_below: below, gap_above: above }
        });
    }
    let p_plus = modes[n - 1].clone();
    let p_minus = p_plus.conj();
    let c_g = p_plus.velocity(kp);
    Ok(CarrierPair {
        case: CarrierCase::SimplePair,
        k_plus,
        k_minus: -k_plus,
        omega0: w,
        band: n,
        p_plus,
        p_minus,
        c_g,
    })
}

fn select_double(problem: &BlochProblem, k0: Rational, band_hint: usize, n_solve: usize) -> Result<CarrierPair> {
    let g = problem.lattice();
    let k = rational_value(k0) * g;
    let (omega, modes) = solve_at(problem, k, n_solve)?;
    let n = band_hint;
    let below = if n >= 2 { rel_gap(omega[n - 2], omega[n - 1]) } else { f64::INFINITY };
    let above = rel_gap(omega[n - 1], omega[n]);
    let lower = if above <= GAP_TOL {
        n
    } else if below <= GAP_TOL {
        n - 1
    } else if below.min(above) >= SIMPLE_TOL {
        return Err(Error::Carrier(format!(
            "eigenvalue {} at k = {k0} is simple; case (b) needs a double point",
            omega[n - 1]
        )));
    } else {
        return Err(Error::AmbiguousMultiplicity { k, gap_below: below, gap_above: above });
    };
    if lower + 1 < omega.len() && rel_gap(omega[lower], omega[lower + 1]) <= GAP_TOL {
        return Err(Error::Carrier(format!("eigenvalue at k = {k0} has multiplicity above two")));
    }
    let (v1, v2) = (&modes[lower - 1], &modes[lower]);
    // First-order degenerate perturbation: the velocity operator 2(k - i∂_x)
    // restricted to the eigenspace has eigenvalues ±c_g.
    let mixed = |a: &BlochFunction, b: &BlochFunction| -> Complex64 {
        let s: Complex64 = a
            .iter()
            .map(|(m, c)| 2.0 * (k + g * m as f64) * c * b.coefficient(m).conj())
            .sum();
        s * a.period()
    };
    let a11 = v1.velocity(k);
    let a22 = v2.velocity(k);
    let a12 = mixed(v2, v1); // ⟨D v2, v1⟩
    let mean = 0.5 * (a11 + a22);
    let rad = (0.25 * (a11 - a22).powi(2) + a12.norm_sqr()).sqrt();
    let lam = mean + rad;
    let (x1, x2) = if a12.norm() > 1e-14 * rad.max(1.0) {
        (a12, Complex64::new(lam - a11, 0.0))
    } else if a11 >= a22 {
        (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
    } else {
        (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0))
    };
    let norm = (x1.norm_sqr() + x2.norm_sqr()).sqrt();
    let (x1, x2) = (x1 / norm, x2 / norm);
    let coeffs: Vec<Complex64> = v1
        .coefficients()
        .iter()
        .zip(v2.coefficients())
        .map(|(a, b)| a * x1 + b * x2)
        .collect();
    let (first, _) = v1.index_range();
    let p_plus = BlochFunction::new(g, first, coeffs);
    let p_minus = partner_of(&p_plus, k0);
    let c_g = p_plus.velocity(k);
    if c_g <= 0.0 {
        return Err(Error::Carrier(format!("crossing at k = {k0} has no positive group velocity")));
    }
    // The branch through (k0, ω0) with slope +c_g continues as band n_*+1 for k > k0.
    let dk = 1e-3 / problem.period();
    if let Some(kr) = [k + dk, k - dk].into_iter().find(|q| q.abs() <= 0.5 * g) {
        let (_, right) = solve_at(problem, kr, lower + 1)?;
        let idx = if kr > k { lower } else { lower - 1 };
        let overlap = right[idx].inner(&p_plus).norm();
        if overlap < 0.9 {
            return Err(Error::Carrier(format!(
                "crossing relabel inconsistent at k = {k0}: overlap {overlap:.3} with the continued branch"
            )));
        }
    }
    let omega0 = 0.5 * (omega[lower - 1] + omega[lower]);
    Ok(CarrierPair {
        case: CarrierCase::DoublePoint,
        k_plus: k0,
        k_minus: k0,
        omega0,
        band: lower,
        p_plus,
        p_minus,
        c_g,
    })
}

/// `c_g = 2⟨k_+ p_+ - i∂_x p_+, p_+⟩_P`.
pub fn group_velocity(pair: &CarrierPair) -> f64 {
    pair.p_plus.velocity(pair.k_plus_physical())
}

/// Centred difference of the smooth eigenvalue branch through `k_+`.
pub fn group_velocity_fd(problem: &BlochProblem, pair: &CarrierPair, h: f64) -> Result<f64> {
    let k = pair.k_plus_physical();
    match pair.case {
        CarrierCase::SimplePair => {
            let (wp, _) = solve_at(problem, k + h, pair.band)?;
            let (wm, _) = solve_at(problem, k - h, pair.band)?;
            Ok((wp[pair.band - 1] - wm[pair.band - 1]) / (2.0 * h))
        }
        CarrierCase::DoublePoint => {
            // branch: band n_* for k < k0, band n_*+1 for k > k0; ω is even about k0
            let inside = if k + h <= 0.5 * problem.lattice() { k + h } else { k - h };
            let (w, _) = solve_at(problem, inside, pair.band + 1)?;
            Ok((w[pair.band] - w[pair.band - 1]) / (2.0 * h))
        }
    }
}

/// Fix the free phase of `p_+` (and with it `p_- = conj(p_+) e^{-2ik_+x}`) so
/// the coupling product `⟨C p_+, p_-⟩` is real and non-positive, i.e. `κ ≥ 0`.
/// `C` is `W⁽²⁾_+` in case (a) and `W⁽¹⁾` in case (b).
pub fn fix_phases(pair: &CarrierPair, split: &WSplitting) -> Result<CarrierPair> {
    let coupling = match pair.case {
        CarrierCase::SimplePair => &split.w2_plus,
        CarrierCase::DoublePoint => &split.w1,
    };
    let quad = CellQuadrature::for_cutoff(pair.period(), coupling_cutoff(pair));
    let c = quad.function(coupling);
    let pp = quad.mode(&pair.p_plus);
    let pm = quad.mode(&pair.p_minus);
    let z = quad.inner(&product(&c, &pp), &pm);
    if z.norm() < 1e-12 {
        return Err(Error::NoCoupling(format!("|<C p+, p->| = {:e}", z.norm())));
    }
    let phi = 0.5 * (PI - z.arg());
    Ok(pair.rotated(phi))
}

pub(crate) fn coupling_cutoff(pair: &CarrierPair) -> usize {
    let (lo, hi) = pair.p_plus.index_range();
    let (lo2, hi2) = pair.p_minus.index_range();
    [lo, hi, lo2, hi2].iter().map(|m| m.unsigned_abs() as usize).max().unwrap_or(0) + 2
}
