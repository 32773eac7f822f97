use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::bloch::{CarrierCase, CarrierPair};
use crate::error::{Error, Result};
use crate::potentials::{PeriodicFunction, Rational, Wavenumber};

/// Partition of the harmonics of `W` relative to a carrier pair.
///
/// `W = W1 + W2_± e^{-2ik_± x} + W3_±`, where `W1` and `W2_±` are lattice
/// periodic (stored on integer lattice indices) and `W3_±` keeps the
/// remaining harmonics on the original base wavenumber.
#[derive(Clone, Debug)]
pub struct WSplitting {
    pub w1: PeriodicFunction,
    pub w2_plus: PeriodicFunction,
    pub w2_minus: PeriodicFunction,
    pub w3_plus: PeriodicFunction,
    pub w3_minus: PeriodicFunction,
    /// Harmonic indices `n` of `W` in each class.
    pub z1: Vec<i64>,
    pub z2_plus: Vec<i64>,
    pub z2_minus: Vec<i64>,
    pub z3_plus: Vec<i64>,
    pub z3_minus: Vec<i64>,
    pub k_plus: Rational,
    pub k_minus: Rational,
    base: Wavenumber,
}

fn integer_base() -> Wavenumber {
    Wavenumber::Exact(Rational::from_integer(1))
}

type Classified = (BTreeMap<i64, Complex64>, Vec<i64>, BTreeMap<i64, Complex64>, Vec<i64>, Vec<(i64, Complex64)>, Vec<i64>);

fn classify(w: &PeriodicFunction, k: Rational) -> Classified {
    let base = w.base();
    let (mut h1, mut z1) = (BTreeMap::new(), Vec::new());
    let (mut h2, mut z2) = (BTreeMap::new(), Vec::new());
    let (mut h3, mut z3) = (Vec::new(), Vec::new());
    for (&n, &a) in w.coefficients() {
        let nk = base.times(n);
        if let Some(j) = nk.as_integer() {
            h1.insert(j, a);
            z1.push(n);
        } else if let Some(j) = nk.plus(k * 2).as_integer() {
            h2.insert(j, a);
            z2.push(n);
        } else {
            h3.push((n, a));
            z3.push(n);
        }
    }
    (h1, z1, h2, z2, h3, z3)
}

/// Split `W` for the given carrier pair.
pub fn split_w(w: &PeriodicFunction, pair: &CarrierPair) -> Result<WSplitting> {
    if !w.is_real() {
        return Err(Error::Cme("perturbation W must be real".into()));
    }
    if w.coefficient(0).norm() != 0.0 {
        return Err(Error::Cme("perturbation W must have zero mean (a_0 = 0)".into()));
    }
    if !w.base().is_exact() && w.is_truncated() {
        return Err(Error::Cme(
            "irrational base wavenumber needs a finite harmonic set, got a truncated series".into(),
        ));
    }
    if (w.lattice() - pair.lattice()).abs() > 1e-12 * pair.lattice() {
        return Err(Error::Cme(format!(
            "W lattice constant {} differs from the carrier lattice {}",
            w.lattice(),
            pair.lattice()
        )));
    }
    let g = w.lattice();
    let (h1, z1, h2p, z2p, h3p, z3p) = classify(w, pair.k_plus);
    let (h1m, _, h2m, z2m, h3m, z3m) = classify(w, pair.k_minus);
    debug_assert_eq!(h1, h1m);
    let w1 = PeriodicFunction::new(g, integer_base(), h1, true)?;
    let w2_plus = PeriodicFunction::new(g, integer_base(), h2p, false)?;
    let w2_minus = PeriodicFunction::new(g, integer_base(), h2m, false)?;
    let w3_plus = PeriodicFunction::new(g, w.base(), h3p, false)?;
    let w3_minus = PeriodicFunction::new(g, w.base(), h3m, false)?;
    let split = WSplitting {
        w1,
        w2_plus,
        w2_minus,
        w3_plus,
        w3_minus,
        z1,
        z2_plus: z2p,
        z2_minus: z2m,
        z3_plus: z3p,
        z3_minus: z3m,
        k_plus: pair.k_plus,
        k_minus: pair.k_minus,
        base: w.base(),
    };
    if pair.case == CarrierCase::DoublePoint && !(split.w2_plus.is_zero() && split.w2_minus.is_zero()) {
        return Err(Error::Cme("double-point splitting produced a nonzero W2".into()));
    }
    Ok(split)
}

impl WSplitting {
    /// Spectrum of `W1 + W2_± e^{-2ik_± x} + W3_±` keyed by exact wavenumber in
    /// lattice units. `plus` selects the `+` reassembly.
    pub fn reassembled_spectrum(&self, plus: bool) -> Result<BTreeMap<Rational, Complex64>> {
        let Wavenumber::Exact(b) = self.base else {
            return Err(Error::Cme("exact reassembly needs a rational base wavenumber".into()));
        };
        let (k, w2, w3) = if plus {
            (self.k_plus, &self.w2_plus, &self.w3_plus)
        } else {
            (self.k_minus, &self.w2_minus, &self.w3_minus)
        };
        let mut out = BTreeMap::new();
        let mut add = |q: Rational, a: Complex64| {
            *out.entry(q).or_insert(Complex64::new(0.0, 0.0)) += a;
        };
        for (&j, &a) in self.w1.coefficients() {
            add(Rational::from_integer(j), a);
        }
        for (&j, &a) in w2.coefficients() {
            add(Rational::from_integer(j) - k * 2, a);
        }
        for (&n, &a) in w3.coefficients() {
            add(b * n, a);
        }
        Ok(out)
    }

    /// Whether `W2_- = conj(W2_+)` coefficient by coefficient.
    pub fn w2_conjugate_symmetric(&self) -> bool {
        let p = self.w2_plus.coefficients();
        let m = self.w2_minus.coefficients();
        p.len() == m.len()
            && p.iter().all(|(&j, &a)| m.get(&-j).is_some_and(|&b| b == a.conj()))
    }

    /// Harmonics of `W` with `n k_W ∈ (1/N) ℤ`, the part that survives on a cell of
    /// `N` lattice periods.
    pub fn q_cell_part(w: &PeriodicFunction, cells: i64) -> Result<PeriodicFunction> {
        let h: Vec<(i64, Complex64)> = w
            .coefficients()
            .iter()
            .filter(|(&n, _)| w.base().times(n * cells).as_integer().is_some())
            .map(|(&n, &a)| (n, a))
            .collect();
        PeriodicFunction::new(w.lattice(), w.base(), h, w.is_real())
    }
}

/// Arithmetic necessary condition plus the computed coupling.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapReport {
    /// Case (a): some harmonic has `n k_W + 2k_+ ∈ ℤ`. Case (b): some `n ≠ 0` has `n k_W ∈ ℤ`.
    pub necessary_ok: bool,
    pub kappa: f64,
    pub kappa_nonzero: bool,
}

pub const KAPPA_THRESHOLD: f64 = 1e-8;

/// Report the gap (coupling) conditions. `kappa` is the coupling computed
/// from phase-fixed carriers.
pub fn check_gap_conditions(split: &WSplitting, pair: &CarrierPair, kappa: f64) -> GapReport {
    let necessary_ok = match pair.case {
        CarrierCase::SimplePair => !split.z2_plus.is_empty(),
        CarrierCase::DoublePoint => split.z1.iter().any(|&n| n != 0),
    };
    GapReport {
        necessary_ok,
        kappa,
        kappa_nonzero: kappa.abs() > KAPPA_THRESHOLD,
    }
}
