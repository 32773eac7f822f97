use num_complex::Complex64;

use super::split::WSplitting;
use crate::bloch::{CarrierCase, CarrierPair};
use crate::error::{Error, Result};
use crate::potentials::{PeriodicFunction, Rational};
use crate::quadrature::{product, CellQuadrature};

/// Largest tolerated disagreement between redundant expressions of a
/// coefficient, and largest tolerated imaginary part of a real coefficient.
pub const CHECK_TOL: f64 = 1e-6;

/// The scalar CME coefficients, as used by the residual and soliton code.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CmeSystem {
    pub c_g: f64,
    pub kappa: f64,
    pub kappa_s: f64,
    pub alpha: f64,
    pub beta: Complex64,
    pub gamma: Complex64,
}

impl CmeSystem {
    /// Same system with the `β`, `γ` terms dropped.
    pub fn without_beta_gamma(self) -> Self {
        Self {
            beta: Complex64::new(0.0, 0.0),
            gamma: Complex64::new(0.0, 0.0),
            ..self
        }
    }

    pub fn has_beta_gamma(&self) -> bool {
        self.beta.norm() != 0.0 || self.gamma.norm() != 0.0
    }
}

/// Nonlinear coefficients renormalised to a cell of `cells` lattice periods.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QScaled {
    pub cells: i64,
    pub alpha_q: f64,
    pub beta_q: Complex64,
    pub gamma_q: Complex64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrossCheck {
    pub name: &'static str,
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CmeCoefficients {
    pub case: CarrierCase,
    pub c_g: f64,
    pub kappa: f64,
    pub kappa_s: f64,
    pub alpha: f64,
    pub beta: Complex64,
    pub gamma: Complex64,
    pub scaled: Option<QScaled>,
    /// Differences between redundant expressions and imaginary parts of real
    /// coefficients.
    pub checks: Vec<CrossCheck>,
}

impl CmeCoefficients {
    pub fn system(&self) -> CmeSystem {
        CmeSystem {
            c_g: self.c_g,
            kappa: self.kappa,
            kappa_s: self.kappa_s,
            alpha: self.alpha,
            beta: self.beta,
            gamma: self.gamma,
        }
    }

    /// System with the cell-scaled nonlinear coefficients, if reduced.
    pub fn scaled_system(&self) -> Option<CmeSystem> {
        self.scaled.map(|q| CmeSystem {
            alpha: q.alpha_q,
            beta: q.beta_q,
            gamma: q.gamma_q,
            ..self.system()
        })
    }

    pub fn max_check(&self) -> f64 {
        self.checks.iter().map(|c| c.delta).fold(0.0, f64::max)
    }

    /// `key=value` lines for the coefficient table.
    pub fn to_table(&self, with_checks: bool) -> String {
        let f = crate::fmt_f64;
        let mut rows = vec![
            ("c_g", f(self.c_g)),
            ("kappa", f(self.kappa)),
            ("kappa_s", f(self.kappa_s)),
            ("alpha", f(self.alpha)),
            ("beta_re", f(self.beta.re)),
            ("beta_im", f(self.beta.im)),
            ("gamma_re", f(self.gamma.re)),
            ("gamma_im", f(self.gamma.im)),
        ];
        let mut out = String::new();
        match self.scaled {
            Some(q) => {
                rows.push(("N", q.cells.to_string()));
                rows.push(("alpha_q", f(q.alpha_q)));
                rows.push(("beta_q_re", f(q.beta_q.re)));
                rows.push(("beta_q_im", f(q.beta_q.im)));
                rows.push(("gamma_q_re", f(q.gamma_q.re)));
                rows.push(("gamma_q_im", f(q.gamma_q.im)));
            }
            None => rows.push(("N", "1".into())),
        }
        for (k, v) in rows {
            out.push_str(&format!("{k}={v}\n"));
        }
        if with_checks {
            for c in &self.checks {
                out.push_str(&format!("delta_{}={}\n", c.name, f(c.delta)));
            }
        }
        out
    }
}

pub(crate) struct Checks(pub Vec<CrossCheck>);

impl Checks {
    pub fn push(&mut self, name: &'static str, delta: f64) -> Result<()> {
        self.0.push(CrossCheck { name, delta });
        if !(delta <= CHECK_TOL) {
            return Err(Error::Inconsistent { name, delta });
        }
        Ok(())
    }

    /// Real part of `z`, recording its imaginary part as a check.
    pub fn real(&mut self, name: &'static str, z: Complex64) -> Result<f64> {
        self.push(name, z.im.abs())?;
        Ok(z.re)
    }
}

/// Widest lattice index appearing in a lattice-periodic function.
pub(crate) fn lattice_extent(f: &PeriodicFunction) -> Result<usize> {
    Ok(f.lattice_harmonics()?
        .keys()
        .map(|j| j.unsigned_abs() as usize)
        .max()
        .unwrap_or(0))
}

fn sigma_check(sigma: &PeriodicFunction, pair: &CarrierPair) -> Result<()> {
    if !sigma.is_real() {
        return Err(Error::Cme("nonlinearity coefficient sigma must be real".into()));
    }
    if (sigma.lattice() - pair.lattice()).abs() > 1e-12 * pair.lattice() {
        return Err(Error::Cme("sigma must share the lattice of V".into()));
    }
    Ok(())
}

fn is_quarter(k: Rational) -> bool {
    k == Rational::new(1, 4)
}

/// Coupling product `⟨C p_+, p_-⟩` with `C = W2_+` (case a) or `W1` (case b).
pub fn coupling_product(pair: &CarrierPair, split: &WSplitting) -> Result<Complex64> {
    let c = match pair.case {
        CarrierCase::SimplePair => &split.w2_plus,
        CarrierCase::DoublePoint => &split.w1,
    };
    let extent = crate::bloch::coupling_cutoff(pair) + lattice_extent(c)?;
    let quad = CellQuadrature::for_cutoff(pair.period(), extent);
    let cs = quad.function(c);
    Ok(quad.inner(&product(&cs, &quad.mode(&pair.p_plus)), &quad.mode(&pair.p_minus)))
}

/// All CME coefficients for a phase-fixed carrier pair.
pub fn compute_coefficients(
    pair: &CarrierPair,
    split: &WSplitting,
    sigma: &PeriodicFunction,
) -> Result<CmeCoefficients> {
    sigma_check(sigma, pair)?;
    let extent = crate::bloch::coupling_cutoff(pair)
        + lattice_extent(&split.w1)?
            .max(lattice_extent(&split.w2_plus)?)
            .max(lattice_extent(&split.w2_minus)?)
            .max(lattice_extent(sigma)?);
    let quad = CellQuadrature::for_cutoff(pair.period(), extent);
    let pp = quad.mode(&pair.p_plus);
    let pm = quad.mode(&pair.p_minus);
    let dpp = quad.mode(&pair.p_plus.derivative());
    let dpm = quad.mode(&pair.p_minus.derivative());
    let s = quad.function(sigma);
    let w1 = quad.function(&split.w1);
    let i = Complex64::i();
    let (kp, km) = (pair.k_plus_physical(), pair.k_minus_physical());
    let mut checks = Checks(Vec::new());

    let vel = |p: &[Complex64], dp: &[Complex64], k: f64| -> Complex64 {
        let f: Vec<Complex64> = p.iter().zip(dp).map(|(a, d)| k * a - i * d).collect();
        2.0 * quad.inner(&f, p)
    };
    let c_g = checks.real("c_g_imag", vel(&pp, &dpp, kp))?;
    let c_g_minus = checks.real("c_g_minus_imag", -vel(&pm, &dpm, km))?;
    checks.push("c_g", (c_g - c_g_minus).abs())?;
    let c_g_spectral = pair.p_plus.velocity(kp);
    checks.push("c_g_spectral", (c_g - c_g_spectral).abs())?;

    let kappa_s = checks.real("kappa_s_imag", -quad.inner(&product(&w1, &pp), &pp))?;
    let kappa_s_minus = checks.real("kappa_s_minus_imag", -quad.inner(&product(&w1, &pm), &pm))?;
    checks.push("kappa_s", (kappa_s - kappa_s_minus).abs())?;

    let (c_plus, c_minus) = match pair.case {
        CarrierCase::SimplePair => (quad.function(&split.w2_plus), quad.function(&split.w2_minus)),
        CarrierCase::DoublePoint => (w1.clone(), w1.clone()),
    };
    let kappa_a = -quad.inner(&product(&c_plus, &pp), &pm);
    let kappa_b = -quad.inner(&product(&c_minus, &pm), &pp);
    let kappa = checks.real("kappa_imag", kappa_a)?;
    checks.push("kappa", (kappa_a - kappa_b).norm())?;

    let sq = |a: &[Complex64]| product(a, a);
    let abs2 = |a: &[Complex64]| -> Vec<Complex64> { a.iter().map(|z| Complex64::new(z.norm_sqr(), 0.0)).collect() };
    let conj = |a: &[Complex64]| -> Vec<Complex64> { a.iter().map(|z| z.conj()).collect() };
    let (pp2, pm2, app, apm) = (sq(&pp), sq(&pm), abs2(&pp), abs2(&pm));
    let alpha_z = -quad.inner(&product(&s, &pp2), &pp2);
    let alpha = checks.real("alpha_imag", alpha_z)?;
    let alt = [
        -quad.inner(&product(&s, &pm2), &pm2),
        -quad.inner(&product(&product(&s, &apm), &pp), &pp),
        -quad.inner(&product(&product(&s, &app), &pm), &pm),
    ];
    checks.push("alpha", alt.iter().map(|z| (z - alpha_z).norm()).fold(0.0, f64::max))?;

    let zero = Complex64::new(0.0, 0.0);
    let (beta, gamma) = match pair.case {
        CarrierCase::SimplePair => {
            let gamma = if is_quarter(pair.k_plus) {
                // γ couples A_-² conj(A_+) into the A_+ equation through e^{-i g x}
                let em = pair.p_plus.shifted(1);
                let ep = pair.p_minus.shifted(-1);
                let g1 = -quad.inner(&product(&product(&s, &pm2), &conj(&quad.mode(&em))), &pp);
                let g2 = -quad.inner(&product(&product(&s, &pp2), &conj(&quad.mode(&ep))), &pm).conj();
                checks.push("gamma", (g1 - g2).norm())?;
                g1
            } else {
                zero
            };
            (zero, gamma)
        }
        CarrierCase::DoublePoint => {
            let b = [
                -quad.inner(&product(&product(&s, &app), &pm), &pp),
                -quad.inner(&product(&product(&s, &apm), &pm), &pp),
                -quad.inner(&product(&product(&s, &app), &pp), &pm).conj(),
                -quad.inner(&product(&product(&s, &apm), &pp), &pm).conj(),
            ];
            checks.push("beta", b.iter().map(|z| (z - b[0]).norm()).fold(0.0, f64::max))?;
            let g1 = -quad.inner(&product(&product(&s, &pm2), &conj(&pp)), &pp);
            let g2 = -quad.inner(&product(&product(&s, &pp2), &conj(&pm)), &pm).conj();
            checks.push("gamma", (g1 - g2).norm())?;
            (b[0], g1)
        }
    };

    Ok(CmeCoefficients {
        case: pair.case,
        c_g,
        kappa,
        kappa_s,
        alpha,
        beta,
        gamma,
        scaled: None,
        checks: checks.0,
    })
}
