//! Coupled mode equations: splitting of the perturbation `W`, coupling
//! conditions, coefficients, period reduction and residual evaluation.

mod coefficients;
mod reduction;
mod residual;
mod split;

pub use coefficients::{
    compute_coefficients, coupling_product, CmeCoefficients, CmeSystem, CrossCheck, QScaled, CHECK_TOL,
};
pub use reduction::{minimal_cells, rational_reduction};
pub use residual::{cme_residual, EnvelopePair, ResidualReport};
pub use split::{check_gap_conditions, split_w, GapReport, WSplitting, KAPPA_THRESHOLD};

use crate::bloch::{fix_phases, select_carrier_pair, BlochProblem, CarrierPair};
use crate::error::Result;
use crate::potentials::{PeriodicFunction, Rational};

/// Phase-fixed carriers, the splitting and the coefficients for one setup.
#[derive(Clone, Debug)]
pub struct CmeSetup {
    pub pair: CarrierPair,
    pub split: WSplitting,
    pub coeffs: CmeCoefficients,
    pub gap: GapReport,
}

/// Carrier selection, splitting, phase fixing and coefficients in one go.
/// With `cells > 1` (or a non-integer `k_+`) the rational reduction is applied
/// as well; `cells = None` picks the smallest admissible cell.
pub fn build_cme(
    problem: &BlochProblem,
    k0: Rational,
    band_hint: usize,
    w: &PeriodicFunction,
    sigma: &PeriodicFunction,
    cells: Option<i64>,
) -> Result<CmeSetup> {
    let raw = select_carrier_pair(problem, k0, band_hint)?;
    let split = split_w(w, &raw)?;
    let pair = fix_phases(&raw, &split)?;
    let coeffs = compute_coefficients(&pair, &split, sigma)?;
    let cells = cells.unwrap_or_else(|| minimal_cells(&pair));
    let coeffs = rational_reduction(&pair, &coeffs, w, sigma, cells)?;
    let gap = check_gap_conditions(&split, &pair, coeffs.kappa);
    Ok(CmeSetup { pair, split, coeffs, gap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloch::{CarrierCase, DEFAULT_CUTOFF};
    use crate::potentials::{EllipticParams, Wavenumber};
    use num_complex::Complex64;

    fn cosine() -> BlochProblem {
        BlochProblem::new(PeriodicFunction::cos_shifted(2.0, 1.0), DEFAULT_CUTOFF).unwrap()
    }

    fn w_of(terms: &[(i64, f64)]) -> PeriodicFunction {
        PeriodicFunction::cosines(1.0, Wavenumber::Exact(Rational::new(2, 5)), terms).unwrap()
    }

    fn sigma() -> PeriodicFunction {
        PeriodicFunction::constant(1.0, -1.0)
    }

    #[test]
    fn split_single_cosine() {
        let pair = select_carrier_pair(&cosine(), Rational::new(1, 5), 2).unwrap();
        let s = split_w(&w_of(&[(1, 1.0)]), &pair).unwrap();
        assert!(s.w1.is_zero());
        assert_eq!(s.w2_plus.coefficients().len(), 1);
        assert_eq!(s.w2_plus.coefficient(0), Complex64::new(0.5, 0.0));
        assert_eq!(s.w2_minus.coefficient(0), Complex64::new(0.5, 0.0));
        assert_eq!(s.z3_plus, vec![1]);
        assert!(s.w2_conjugate_symmetric());
    }

    #[test]
    fn split_three_terms() {
        let pair = select_carrier_pair(&cosine(), Rational::new(1, 5), 2).unwrap();
        let w = w_of(&[(1, 1.0), (2, 0.5), (5, 1.0 / 3.0)]);
        let s = split_w(&w, &pair).unwrap();
        assert_eq!(s.w1.coefficient(2), Complex64::new(1.0 / 6.0, 0.0));
        assert_eq!(s.w1.coefficient(-2), Complex64::new(1.0 / 6.0, 0.0));
        assert_eq!(s.z3_plus, vec![-2, 1, 2]);
        for plus in [true, false] {
            let spec = s.reassembled_spectrum(plus).unwrap();
            let want: std::collections::BTreeMap<Rational, Complex64> = w
                .coefficients()
                .iter()
                .map(|(&n, &a)| (Rational::new(2, 5) * n, a))
                .collect();
            assert_eq!(spec, want);
        }
    }

    #[test]
    fn nonzero_mean_rejected() {
        let pair = select_carrier_pair(&cosine(), Rational::new(1, 5), 2).unwrap();
        assert!(split_w(&w_of(&[(0, 1.0), (1, 1.0)]), &pair).is_err());
    }

    #[test]
    fn coefficients_single_cosine() {
        let set = build_cme(&cosine(), Rational::new(1, 5), 2, &w_of(&[(1, 1.0)]), &sigma(), None).unwrap();
        let c = &set.coeffs;
        assert!((c.c_g + 0.3341).abs() < 2e-3, "{}", c.c_g);
        assert!((c.kappa - 0.3826).abs() < 2e-3, "{}", c.kappa);
        assert!(c.kappa_s.abs() < 1e-12);
        assert!((c.alpha - 0.2509).abs() < 2e-3, "{}", c.alpha);
        assert_eq!(c.beta, Complex64::new(0.0, 0.0));
        assert_eq!(c.gamma, Complex64::new(0.0, 0.0));
        assert!(c.max_check() < 1e-9, "{:?}", c.checks);
        let q = c.scaled.unwrap();
        assert_eq!(q.cells, 5);
        assert!((q.alpha_q - c.alpha / 5.0).abs() < 1e-15);
        assert!(set.gap.necessary_ok && set.gap.kappa_nonzero);
    }

    #[test]
    fn coupling_is_real_after_phase_fix() {
        let set = build_cme(&cosine(), Rational::new(1, 5), 2, &w_of(&[(1, 1.0)]), &sigma(), None).unwrap();
        let z = coupling_product(&set.pair, &set.split).unwrap();
        assert!(z.im.abs() < 1e-10 && z.re < 0.0);
    }

    #[test]
    fn gap_fails_for_incommensurate_w() {
        let pair = select_carrier_pair(&cosine(), Rational::new(1, 5), 2).unwrap();
        let w = PeriodicFunction::cosines(1.0, Wavenumber::Exact(Rational::from_integer(3)), &[(1, 1.0)]).unwrap();
        let s = split_w(&w, &pair).unwrap();
        let report = check_gap_conditions(&s, &pair, 0.0);
        assert!(!report.necessary_ok);
        assert!(fix_phases(&pair, &s).is_err());
    }

    #[test]
    fn finite_band_case() {
        let v = PeriodicFunction::sn_squared(EllipticParams::new(0.5).unwrap(), 32).unwrap();
        let g = v.lattice();
        let prob = BlochProblem::new(v, DEFAULT_CUTOFF).unwrap();
        let w = PeriodicFunction::cosines(g, Wavenumber::Exact(Rational::from_integer(2)), &[(1, 1.0)]).unwrap();
        let s = PeriodicFunction::constant(g, -1.0);
        let set = build_cme(&prob, Rational::from_integer(0), 2, &w, &s, Some(2)).unwrap();
        assert_eq!(set.pair.case, CarrierCase::DoublePoint);
        assert!(set.split.w2_plus.is_zero());
        let q = set.coeffs.scaled.unwrap();
        assert!((q.beta_q.norm() - 6.5e-4).abs() < 0.5 * 6.5e-4, "{}", q.beta_q);
        assert!(q.gamma_q.norm() < 5e-5);
        assert!(set.coeffs.max_check() < 1e-8, "{:?}", set.coeffs.checks);
    }

    #[test]
    fn residual_of_constants() {
        let sys = CmeSystem {
            c_g: -0.3,
            kappa: 0.4,
            kappa_s: 0.0,
            alpha: 0.25,
            beta: Complex64::new(0.0, 0.0),
            gamma: Complex64::new(0.0, 0.0),
        };
        let c = 0.7;
        let x: Vec<f64> = (0..9).map(|j| j as f64 * 0.1).collect();
        let t = x.clone();
        let field = vec![vec![Complex64::new(c, 0.0); 9]; 9];
        let env = EnvelopePair { x, t, a_plus: field.clone(), a_minus: field };
        let r = cme_residual(&env, &sys).unwrap();
        let want = (sys.kappa * c + 3.0 * sys.alpha * c * c * c).abs();
        assert!((r.sup_plus - want).abs() < 1e-14 && (r.sup_minus - want).abs() < 1e-14);
        let zero = EnvelopePair {
            a_plus: vec![vec![Complex64::new(0.0, 0.0); 9]; 9],
            a_minus: vec![vec![Complex64::new(0.0, 0.0); 9]; 9],
            ..env
        };
        assert_eq!(cme_residual(&zero, &sys).unwrap().sup(), 0.0);
    }
}
