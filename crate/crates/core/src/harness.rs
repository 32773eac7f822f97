//! Approximate solutions built from envelopes and carriers, and the
//! ε-convergence studies comparing them with the full equation.

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::bloch::{BlochFunction, BlochProblem, CarrierCase, CarrierPair};
use crate::cme::{build_cme, CmeSetup, EnvelopePair};
use crate::error::{Error, Result};
use crate::fmt_f64;
use crate::pnls::{commensurate_cell, simulate, SimulationConfig};
use crate::potentials::{PeriodicFunction, Rational};
use crate::soliton::{gap_soliton, SolitonParams};

/// Source of the envelopes `A_±(X, T)`.
#[derive(Clone, Debug)]
pub enum EnvelopeSource {
    Soliton(SolitonParams),
    /// Tabulated envelopes; evaluated at tabulated times only, linear in `X`.
    Tabulated(EnvelopePair),
}

impl EnvelopeSource {
    pub fn eval(&self, xs: &[f64], t: f64) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
        match self {
            EnvelopeSource::Soliton(p) => Ok(gap_soliton(p, xs, t)),
            EnvelopeSource::Tabulated(env) => {
                let it = env
                    .t
                    .iter()
                    .position(|&s| (s - t).abs() <= 1e-12 * t.abs().max(1.0))
                    .ok_or_else(|| Error::Harness(format!("no tabulated envelope at T = {t}")))?;
                let (x0, x1) = (env.x[0], env.x[env.x.len() - 1]);
                if xs.iter().any(|&x| x < x0 || x > x1) {
                    return Err(Error::Harness(format!(
                        "envelope grid [{x0}, {x1}] does not cover the slow range of the x grid"
                    )));
                }
                let h = (x1 - x0) / (env.x.len() - 1) as f64;
                let lerp = |f: &[Complex64], x: f64| {
                    let s = ((x - x0) / h).clamp(0.0, (f.len() - 1) as f64);
                    let j = (s.floor() as usize).min(f.len() - 2);
                    let w = s - j as f64;
                    f[j] * (1.0 - w) + f[j + 1] * w
                };
                Ok((
                    xs.iter().map(|&x| lerp(&env.a_plus[it], x)).collect(),
                    xs.iter().map(|&x| lerp(&env.a_minus[it], x)).collect(),
                ))
            }
        }
    }
}

/// How the carriers are represented: `p_± e^{ik_± x}` on the lattice cell, or
/// `q_± = p_± e^{ik_± x} / √N` as Bloch waves at zero wavenumber on a cell of
/// `N` lattice periods.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CarrierForm {
    P,
    Q { cells: i64 },
}

#[derive(Clone, Debug)]
pub struct AnsatzSpec {
    pub pair: CarrierPair,
    pub envelope: EnvelopeSource,
    pub epsilon: f64,
    pub omega0: f64,
    pub form: CarrierForm,
}

/// `q = p e^{ikx} / √N` as a Fourier series on the reciprocal lattice `g/N`.
pub fn q_function(p: &BlochFunction, k: Rational, cells: i64) -> Result<BlochFunction> {
    let kn = k * cells;
    if !kn.is_integer() {
        return Err(Error::Harness(format!("k = {k} is not a multiple of 1/{cells}")));
    }
    let shift = kn.to_integer();
    let (lo, hi) = p.index_range();
    let first = lo * cells + shift;
    let len = ((hi - lo) * cells + 1) as usize;
    let mut c = vec![Complex64::new(0.0, 0.0); len];
    let s = 1.0 / (cells as f64).sqrt();
    for (m, a) in p.iter() {
        c[((m - lo) * cells) as usize] = a * s;
    }
    Ok(BlochFunction::new(p.lattice() / cells as f64, first, c))
}

fn carrier_samples(pair: &CarrierPair, form: CarrierForm, x: &[f64]) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    match form {
        CarrierForm::P => {
            let (kp, km) = (pair.k_plus_physical(), pair.k_minus_physical());
            let eval = |p: &BlochFunction, k: f64| -> Vec<Complex64> {
                x.par_iter().map(|&y| p.value_at(y) * Complex64::from_polar(1.0, k * y)).collect()
            };
            Ok((eval(&pair.p_plus, kp), eval(&pair.p_minus, km)))
        }
        CarrierForm::Q { cells } => {
            let n = cells as f64;
            let qp = q_function(&pair.p_plus, pair.k_plus, cells)?;
            let qm = q_function(&pair.p_minus, pair.k_minus, cells)?;
            // u_app is written with √N q_± so both forms carry the same envelope
            let eval = |q: &BlochFunction| -> Vec<Complex64> { x.par_iter().map(|&y| q.value_at(y) * n.sqrt()).collect() };
            Ok((eval(&qp), eval(&qm)))
        }
    }
}

/// `ε^{1/2} e^{-iω₀t} (A_+(εx, εt) c_+(x) + A_-(εx, εt) c_-(x))` where `c_±`
/// are the carriers in the chosen form. In the `Q` form the envelopes are
/// those of the cell-scaled system, `A_Q = √N A`.
pub fn build_uapp(spec: &AnsatzSpec, x: &[f64], t: f64) -> Result<Vec<Complex64>> {
    let eps = spec.epsilon;
    if !(eps > 0.0 && eps <= 0.2) {
        return Err(Error::Harness(format!("epsilon = {eps} outside (0, 0.2]")));
    }
    let slow: Vec<f64> = x.iter().map(|&y| eps * y).collect();
    let (ap, am) = spec.envelope.eval(&slow, eps * t)?;
    let (cp, cm) = carrier_samples(&spec.pair, spec.form, x)?;
    let scale = match spec.form {
        CarrierForm::P => 1.0,
        CarrierForm::Q { cells } => 1.0 / (cells as f64).sqrt(),
    };
    let pre = Complex64::from_polar(eps.sqrt() * scale, -spec.omega0 * t);
    Ok((0..x.len()).map(|j| pre * (ap[j] * cp[j] + am[j] * cm[j])).collect())
}

pub fn sup_error(u: &[Complex64], uapp: &[Complex64]) -> Result<f64> {
    if u.len() != uapp.len() {
        return Err(Error::Harness(format!("grid mismatch: {} vs {} points", u.len(), uapp.len())));
    }
    Ok(u.iter().zip(uapp).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
}

pub fn l2_error(u: &[Complex64], uapp: &[Complex64], dx: f64) -> f64 {
    (u.iter().zip(uapp).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() * dx).sqrt()
}

/// Least-squares slope of `log e` against `log ε` and the RMS deviation of the fit.
pub fn fit_rate(epsilons: &[f64], errors: &[f64]) -> Result<(f64, f64)> {
    if epsilons.len() != errors.len() || epsilons.len() < 2 {
        return Err(Error::Harness("rate fit needs at least two matching points".into()));
    }
    if errors.iter().chain(epsilons).any(|&e| !(e > 0.0)) {
        return Err(Error::Harness("rate fit needs positive values".into()));
    }
    let lx: Vec<f64> = epsilons.iter().map(|e| e.ln()).collect();
    let ly: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let rms = (lx
        .iter()
        .zip(&ly)
        .map(|(a, b)| (b - (my + slope * (a - mx))).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok((slope, rms))
}

/// Everything needed to run one convergence experiment.
#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    pub name: String,
    pub v: PeriodicFunction,
    pub w: PeriodicFunction,
    pub sigma: PeriodicFunction,
    pub k0: Rational,
    pub band: usize,
    pub cutoff: usize,
    /// Cell multiple for the rational reduction; `None` uses the smallest.
    pub cells: Option<i64>,
    pub velocity: f64,
    pub delta: f64,
    pub dx: f64,
    pub dt: f64,
    /// `t_end = t_end_factor / ε`.
    pub t_end_factor: f64,
    /// Envelope decay lengths kept between the soliton and the domain edge.
    pub tail_widths: f64,
    /// Fixed half-length of the domain; overrides the envelope-based choice.
    pub half_length: Option<f64>,
    pub epsilons: Vec<f64>,
}

/// Coefficients and envelope parameters for an experiment.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub setup: CmeSetup,
    pub soliton: SolitonParams,
    /// True when nonzero `β`, `γ` were dropped to use the explicit family.
    pub beta_gamma_dropped: bool,
}

pub fn prepare(spec: &ExperimentSpec) -> Result<Prepared> {
    let problem = BlochProblem::new(spec.v.clone(), spec.cutoff)?;
    let setup = build_cme(&problem, spec.k0, spec.band, &spec.w, &spec.sigma, spec.cells)?;
    let sys = setup.coeffs.system();
    let dropped = sys.has_beta_gamma();
    let soliton = SolitonParams::new(spec.velocity, spec.delta, sys.without_beta_gamma())?;
    Ok(Prepared {
        setup,
        soliton,
        beta_gamma_dropped: dropped,
    })
}

impl Prepared {
    pub fn ansatz(&self, epsilon: f64) -> AnsatzSpec {
        AnsatzSpec {
            pair: self.setup.pair.clone(),
            envelope: EnvelopeSource::Soliton(self.soliton),
            epsilon,
            omega0: self.setup.pair.omega0,
            form: CarrierForm::P,
        }
    }

    /// Simulation grid for one ε.
    pub fn config(&self, spec: &ExperimentSpec, epsilon: f64) -> Result<SimulationConfig> {
        let t_end = spec.t_end_factor / epsilon;
        let cell = commensurate_cell(&spec.v, &spec.w, &spec.sigma, *self.setup.pair.k_plus.denom())?;
        let half = match spec.half_length {
            Some(l) => l,
            None => {
                let travel = self.soliton.speed().abs() * epsilon * t_end;
                (travel + spec.tail_widths / self.soliton.decay_rate()) / epsilon
            }
        };
        SimulationConfig::new(
            spec.v.clone(),
            spec.w.clone(),
            spec.sigma.clone(),
            epsilon,
            cell,
            half,
            spec.dx,
            spec.dt,
            t_end,
        )
    }
}

#[derive(Clone, Debug)]
pub struct EpsilonRun {
    pub epsilon: f64,
    pub sup_error: f64,
    pub l2_error: f64,
    pub t_end: f64,
    pub mass_drift: f64,
    pub boundary_magnitude: f64,
    pub n: usize,
    pub half_length: f64,
    pub dx: f64,
    pub dt_adjusted: bool,
    /// `sup |u_app(·, 0)|`, for scale.
    pub initial_sup: f64,
    pub final_sup: f64,
}

/// Simulate from `u_app(·, 0)` to `t_end` and compare with `u_app(·, t_end)`.
pub fn run_epsilon(prep: &Prepared, spec: &ExperimentSpec, epsilon: f64) -> Result<EpsilonRun> {
    let cfg = prep.config(spec, epsilon)?;
    let ansatz = prep.ansatz(epsilon);
    let x = cfg.x_grid();
    let u0 = build_uapp(&ansatz, &x, 0.0)?;
    let traj = simulate(&cfg, &u0, &[])?;
    let u = &traj.last().u;
    let ua = build_uapp(&ansatz, &x, cfg.t_end)?;
    Ok(EpsilonRun {
        epsilon,
        sup_error: sup_error(u, &ua)?,
        l2_error: l2_error(u, &ua, cfg.dx),
        t_end: cfg.t_end,
        mass_drift: traj.mass_drift,
        boundary_magnitude: traj.boundary_magnitude(),
        n: cfg.n,
        half_length: cfg.half_length,
        dx: cfg.dx,
        dt_adjusted: traj.dt_adjusted,
        initial_sup: u0.iter().map(|z| z.norm()).fold(0.0, f64::max),
        final_sup: u.iter().map(|z| z.norm()).fold(0.0, f64::max),
    })
}

#[derive(Clone, Debug)]
pub struct ConvergenceReport {
    pub name: String,
    pub runs: Vec<EpsilonRun>,
    pub epsilons: Vec<f64>,
    pub sup_errors: Vec<f64>,
    pub fitted_rate: f64,
    pub fit_residual: f64,
    /// Errors increase with ε across the sweep.
    pub monotone: bool,
    pub caveat: Option<String>,
}

impl ConvergenceReport {
    pub fn from_runs(name: &str, mut runs: Vec<EpsilonRun>, caveat: Option<String>) -> Result<Self> {
        runs.sort_by(|a, b| a.epsilon.total_cmp(&b.epsilon));
        let epsilons: Vec<f64> = runs.iter().map(|r| r.epsilon).collect();
        let sup_errors: Vec<f64> = runs.iter().map(|r| r.sup_error).collect();
        let (fitted_rate, fit_residual) = fit_rate(&epsilons, &sup_errors)?;
        let monotone = sup_errors.windows(2).all(|w| w[0] < w[1]);
        Ok(Self {
            name: name.to_string(),
            runs,
            epsilons,
            sup_errors,
            fitted_rate,
            fit_residual,
            monotone,
            caveat,
        })
    }

    /// CSV with columns `epsilon, sup_error, t_end, mass_drift`.
    pub fn to_csv(&self, header: &str) -> String {
        let mut s = String::from(header);
        s.push_str("epsilon,sup_error,t_end,mass_drift\n");
        for r in &self.runs {
            let _ = writeln!(s, "{},{},{},{}", fmt_f64(r.epsilon), fmt_f64(r.sup_error), fmt_f64(r.t_end), fmt_f64(r.mass_drift));
        }
        s
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "setup={} fitted_rate={:.4} fit_residual={:.4} monotone={}",
            self.name, self.fitted_rate, self.fit_residual, self.monotone
        );
        if let Some(c) = &self.caveat {
            let _ = write!(s, " caveat=\"{c}\"");
        }
        s
    }
}

/// Run the ε sweep (concurrently) and fit the rate.
pub fn convergence_study(spec: &ExperimentSpec, epsilons: &[f64]) -> Result<ConvergenceReport> {
    if epsilons.len() < 4 {
        return Err(Error::Harness(format!("convergence study needs at least 4 values of epsilon, got {}", epsilons.len())));
    }
    let prep = prepare(spec)?;
    let runs: Result<Vec<EpsilonRun>> = epsilons.par_iter().map(|&e| run_epsilon(&prep, spec, e)).collect();
    let caveat = prep.beta_gamma_dropped.then(|| {
        format!(
            "explicit soliton used with beta = {:.3e}, gamma = {:.3e} set to zero",
            prep.setup.coeffs.beta.norm(),
            prep.setup.coeffs.gamma.norm()
        )
    });
    ConvergenceReport::from_runs(&spec.name, runs?, caveat)
}

/// Double-point study: the same sweep, always flagged because the envelope is
/// the `β = γ = 0` family standing in for the true CME solution.
pub fn case_b_study(spec: &ExperimentSpec, epsilons: &[f64]) -> Result<ConvergenceReport> {
    let mut report = convergence_study(spec, epsilons)?;
    let prep_case = prepare(spec)?.setup.pair.case;
    if prep_case != CarrierCase::DoublePoint {
        return Err(Error::Harness(format!("setup {} is not a double-point carrier", spec.name)));
    }
    if report.caveat.is_none() {
        report.caveat = Some("explicit soliton used as envelope substitute".into());
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_fit_recovers_power() {
        let e = [0.01, 0.02, 0.03, 0.04];
        let err: Vec<f64> = e.iter().map(|x: &f64| 3.0 * x.powf(1.5)).collect();
        let (r, res) = fit_rate(&e, &err).unwrap();
        assert!((r - 1.5).abs() < 1e-12 && res < 1e-12);
        let doubled: Vec<f64> = err.iter().map(|x| 2.0 * x).collect();
        assert!((fit_rate(&e, &doubled).unwrap().0 - r).abs() < 1e-12);
    }

    #[test]
    fn sup_error_basics() {
        let a = vec![Complex64::new(1.0, 0.0); 5];
        assert_eq!(sup_error(&a, &a).unwrap(), 0.0);
        let mut b = a.clone();
        b[3] += Complex64::new(0.0, -0.25);
        assert_eq!(sup_error(&a, &b).unwrap(), 0.25);
        assert!(sup_error(&a, &b[..4]).is_err());
    }

    #[test]
    fn q_function_matches_p_form() {
        let p = BlochFunction::new(1.0, -1, vec![Complex64::new(0.2, 0.1), Complex64::new(0.5, 0.0), Complex64::new(-0.1, 0.3)]);
        let k = Rational::new(2, 5);
        let q = q_function(&p, k, 5).unwrap();
        for &x in &[0.0, 1.3, 7.7] {
            let want = p.value_at(x) * Complex64::from_polar(1.0 / 5f64.sqrt(), 0.4 * x);
            assert!((q.value_at(x) - want).norm() < 1e-14);
        }
        assert!(q_function(&p, k, 3).is_err());
    }
}
