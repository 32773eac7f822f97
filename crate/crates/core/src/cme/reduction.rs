use num_complex::Complex64;

use super::coefficients::{lattice_extent, Checks, CmeCoefficients, QScaled};
use super::split::WSplitting;
use crate::bloch::{coupling_cutoff, CarrierPair};
use crate::error::{Error, Result};
use crate::potentials::PeriodicFunction;
use crate::quadrature::{product, CellQuadrature};

/// Smallest number of lattice periods over which both carriers are periodic:
/// the denominator of `k_+`.
pub fn minimal_cells(pair: &CarrierPair) -> i64 {
    *pair.k_plus.denom()
}

/// Carrier `q = p e^{ikx} / √N` sampled on the nodes of a `Q = N P` cell,
/// together with its derivative.
fn q_samples(quad: &CellQuadrature, p: &crate::bloch::BlochFunction, k: f64, cells: i64) -> (Vec<Complex64>, Vec<Complex64>) {
    let s = 1.0 / (cells as f64).sqrt();
    let pv = quad.mode(p);
    let dpv = quad.mode(&p.derivative());
    let mut q = Vec::with_capacity(pv.len());
    let mut dq = Vec::with_capacity(pv.len());
    for ((&x, a), da) in quad.points().iter().zip(&pv).zip(&dpv) {
        let e = Complex64::from_polar(s, k * x);
        q.push(a * e);
        dq.push((da + Complex64::i() * k * a) * e);
    }
    (q, dq)
}

/// Renormalise the nonlinear coefficients to a cell of `cells` lattice
/// periods, `(α, β, γ)_Q = (α, β, γ) / N`. The linear coefficients and the
/// scaled nonlinear ones are recomputed directly on the large cell with
/// `q_± = p_± e^{ik_± x} / √N` as a cross-check.
pub fn rational_reduction(
    pair: &CarrierPair,
    coeffs: &CmeCoefficients,
    w: &PeriodicFunction,
    sigma: &PeriodicFunction,
    cells: i64,
) -> Result<CmeCoefficients> {
    let n0 = minimal_cells(pair);
    if cells < 1 || cells % n0 != 0 {
        return Err(Error::Cme(format!(
            "cell count {cells} must be a positive multiple of {n0}, the denominator of k+ = {}",
            pair.k_plus
        )));
    }
    if !w.base().is_exact() {
        return Err(Error::Cme("rational reduction needs a rational W wavenumber".into()));
    }
    let wq = WSplitting::q_cell_part(w, cells)?;
    let w_extent = wq
        .coefficients()
        .keys()
        .map(|&n| (w.base().times(n * cells).value().abs().round()) as usize)
        .max()
        .unwrap_or(0);
    let extent = cells as usize * (coupling_cutoff(pair) + 2 + lattice_extent(sigma)?) + w_extent;
    let q_len = cells as f64 * pair.period();
    let quad = CellQuadrature::for_cutoff(q_len, extent);
    let (qp, dqp) = q_samples(&quad, &pair.p_plus, pair.k_plus_physical(), cells);
    let (qm, dqm) = q_samples(&quad, &pair.p_minus, pair.k_minus_physical(), cells);
    let s = quad.function(sigma);
    let wv = quad.function(&wq);
    let i = Complex64::i();
    let mut checks = Checks(coeffs.checks.clone());

    let vel = |q: &[Complex64], dq: &[Complex64]| -> Complex64 {
        let f: Vec<Complex64> = dq.iter().map(|d| -i * d).collect();
        2.0 * quad.inner(&f, q)
    };
    checks.push("q_c_g", (vel(&qp, &dqp) - coeffs.c_g).norm())?;
    checks.push("q_c_g_minus", (-vel(&qm, &dqm) - coeffs.c_g).norm())?;
    let ks = -quad.inner(&product(&wv, &qp), &qp);
    checks.push("q_kappa_s", (ks - coeffs.kappa_s).norm())?;
    let ks_m = -quad.inner(&product(&wv, &qm), &qm);
    checks.push("q_kappa_s_minus", (ks_m - coeffs.kappa_s).norm())?;
    let k1 = -quad.inner(&product(&wv, &qm), &qp);
    let k2 = -quad.inner(&product(&wv, &qp), &qm);
    checks.push("q_kappa", (k1 - coeffs.kappa).norm().max((k2 - coeffs.kappa).norm()))?;

    let nf = cells as f64;
    let sq = |a: &[Complex64]| product(a, a);
    let conj = |a: &[Complex64]| -> Vec<Complex64> { a.iter().map(|z| z.conj()).collect() };
    let abs2 = |a: &[Complex64]| -> Vec<Complex64> { a.iter().map(|z| Complex64::new(z.norm_sqr(), 0.0)).collect() };
    let qp2 = sq(&qp);
    let alpha_q = -quad.inner(&product(&s, &qp2), &qp2);
    checks.push("q_alpha", (alpha_q - coeffs.alpha / nf).norm())?;
    let beta_q = -quad.inner(&product(&product(&s, &abs2(&qp)), &qm), &qp);
    checks.push("q_beta", (beta_q - coeffs.beta / nf).norm())?;
    let gamma_q = -quad.inner(&product(&product(&s, &sq(&qm)), &conj(&qp)), &qp);
    checks.push("q_gamma", (gamma_q - coeffs.gamma / nf).norm())?;

    Ok(CmeCoefficients {
        scaled: Some(QScaled {
            cells,
            alpha_q: coeffs.alpha / nf,
            beta_q: coeffs.beta / nf,
            gamma_q: coeffs.gamma / nf,
        }),
        checks: checks.0,
        ..coeffs.clone()
    })
}
