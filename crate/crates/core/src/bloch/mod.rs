//! Bloch eigenvalue problem `-(∂_x + ik)² p + V p = ω p` in a plane-wave basis.
//!
//! The periodic part `p` is expanded in `exp(i m g x)`, `|m| ≤ M`, with
//! `g = 2π/P`. In that basis the operator is the Hermitian matrix with
//! diagonal `(k + g m)²` plus the Toeplitz block `V̂_{m-m'}`. Eigenvectors are
//! returned as [`BlochFunction`]s normalised in `L²(0, P)`.

mod carrier;
mod function;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

pub use carrier::{
    fix_phases, group_velocity, group_velocity_fd, select_carrier_pair, CarrierCase, CarrierPair,
    GAP_TOL,
};
pub use function::BlochFunction;
pub(crate) use carrier::{coupling_cutoff, rational_value};

use crate::error::{Error, Result};
use crate::potentials::PeriodicFunction;

/// Default plane-wave cutoff `M`.
pub const DEFAULT_CUTOFF: usize = 64;
/// Number of top bands treated as truncation-polluted.
pub const TOP_BAND_MARGIN: usize = 4;
/// Default number of k points across the zone.
pub const DEFAULT_K_POINTS: usize = 201;

#[derive(Clone, Debug)]
pub struct BlochProblem {
    potential: PeriodicFunction,
    vhat: BTreeMap<i64, Complex64>,
    cutoff: usize,
    k_grid: Vec<f64>,
}

impl BlochProblem {
    /// The period is taken from the potential's lattice.
    pub fn new(potential: PeriodicFunction, cutoff: usize) -> Result<Self> {
        if cutoff < 8 {
            return Err(Error::Carrier(format!("plane-wave cutoff {cutoff} below 8")));
        }
        if !potential.is_real() {
            return Err(Error::Carrier("potential must be real".into()));
        }
        let vhat = potential.lattice_harmonics()?;
        let g = potential.lattice();
        let k_grid = uniform_zone_grid(g, DEFAULT_K_POINTS);
        Ok(Self {
            potential,
            vhat,
            cutoff,
            k_grid,
        })
    }

    pub fn with_k_grid(mut self, k_grid: Vec<f64>) -> Result<Self> {
        let half = 0.5 * self.lattice();
        for &k in &k_grid {
            if !(k.abs() <= half * (1.0 + 1e-12)) {
                return Err(Error::OutsideBrillouinZone { k, half });
            }
        }
        let mut k_grid = k_grid;
        k_grid.sort_by(f64::total_cmp);
        self.k_grid = k_grid;
        Ok(self)
    }

    /// Add `factor` times more points within `radius` of `center`.
    pub fn densified(self, center: f64, radius: f64, factor: usize) -> Result<Self> {
        let half = 0.5 * self.lattice();
        let mut grid = self.k_grid.clone();
        let base = if grid.len() > 1 { grid[1] - grid[0] } else { radius };
        let h = base / factor as f64;
        let mut k = center - radius;
        while k <= center + radius {
            if k.abs() <= half {
                grid.push(k);
            }
            k += h;
        }
        grid.sort_by(f64::total_cmp);
        grid.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
        self.with_k_grid(grid)
    }

    pub fn potential(&self) -> &PeriodicFunction {
        &self.potential
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn dimension(&self) -> usize {
        2 * self.cutoff + 1
    }

    pub fn lattice(&self) -> f64 {
        self.potential.lattice()
    }

    pub fn period(&self) -> f64 {
        self.potential.period()
    }

    pub fn k_grid(&self) -> &[f64] {
        &self.k_grid
    }

    fn check_k(&self, k: f64) -> Result<()> {
        let half = 0.5 * self.lattice();
        if k.abs() <= half * (1.0 + 1e-12) {
            Ok(())
        } else {
            Err(Error::OutsideBrillouinZone { k, half })
        }
    }
}

/// `n` points spanning the closed zone `[-g/2, g/2]`.
pub fn uniform_zone_grid(lattice: f64, n: usize) -> Vec<f64> {
    let half = 0.5 * lattice;
    if n < 2 {
        return vec![0.0];
    }
    (0..n)
        .map(|j| -half + lattice * j as f64 / (n - 1) as f64)
        .collect()
}

/// Plane-wave matrix of `L(k)`; Hermitian by construction.
pub fn assemble_bloch_matrix(problem: &BlochProblem, k: f64) -> Result<DMatrix<Complex64>> {
    problem.check_k(k)?;
    let m = problem.cutoff as i64;
    let n = problem.dimension();
    let g = problem.lattice();
    let mut a = DMatrix::<Complex64>::zeros(n, n);
    for i in 0..n {
        let mi = i as i64 - m;
        let q = k + g * mi as f64;
        for j in 0..n {
            let mj = j as i64 - m;
            if let Some(v) = problem.vhat.get(&(mi - mj)) {
                a[(i, j)] = *v;
            }
        }
        a[(i, i)] += Complex64::new(q * q, 0.0);
    }
    // V̂_{-n} = conj(V̂_n) holds exactly; pin the diagonal to be real.
    for i in 0..n {
        a[(i, i)].im = 0.0;
    }
    Ok(a)
}

/// Size-ordered eigenpairs at one wavenumber.
pub fn solve_at(problem: &BlochProblem, k: f64, n_bands: usize) -> Result<(Vec<f64>, Vec<BlochFunction>)> {
    let a = assemble_bloch_matrix(problem, k)?;
    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let eig = a.clone().try_symmetric_eigen(f64::EPSILON, 100_000).ok_or_else(|| {
        let diag: Vec<f64> = a.diagonal().iter().map(|z| z.re).collect();
        let lo = diag.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = diag.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Error::Eigensolver {
            k,
            detail: format!("no convergence; max|a_ij| = {scale:e}, diagonal in [{lo:e}, {hi:e}]"),
        }
    })?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let take = n_bands.min(order.len());
    let mut omega = Vec::with_capacity(take);
    let mut modes = Vec::with_capacity(take);
    for &i in order.iter().take(take) {
        omega.push(eig.eigenvalues[i]);
        let v: Vec<Complex64> = eig.eigenvectors.column(i).iter().copied().collect();
        modes.push(BlochFunction::from_eigenvector(problem.lattice(), problem.cutoff, &v));
    }
    Ok((omega, modes))
}

/// Eigenvalue curves and eigenfunctions over the problem's k grid.
#[derive(Clone, Debug)]
pub struct BlochBandSet {
    problem: BlochProblem,
    omega: Vec<Vec<f64>>,
    modes: Vec<Vec<BlochFunction>>,
}

pub fn solve_bands(problem: &BlochProblem, n_bands: usize) -> Result<BlochBandSet> {
    let limit = problem.dimension().saturating_sub(TOP_BAND_MARGIN);
    if n_bands == 0 || n_bands > limit {
        return Err(Error::Carrier(format!(
            "n_bands = {n_bands} must lie in 1..={limit} for cutoff {}",
            problem.cutoff
        )));
    }
    let results: Vec<(Vec<f64>, Vec<BlochFunction>)> = problem
        .k_grid
        .par_iter()
        .map(|&k| solve_at(problem, k, n_bands))
        .collect::<Result<_>>()?;
    let (omega, modes) = results.into_iter().unzip();
    Ok(BlochBandSet {
        problem: problem.clone(),
        omega,
        modes,
    })
}

impl BlochBandSet {
    pub fn problem(&self) -> &BlochProblem {
        &self.problem
    }

    pub fn k_grid(&self) -> &[f64] {
        self.problem.k_grid()
    }

    pub fn n_bands(&self) -> usize {
        self.omega.first().map_or(0, Vec::len)
    }

    /// `ω_n(k_i)`, `n` counted from 1.
    pub fn omega(&self, band: usize, ik: usize) -> f64 {
        self.omega[ik][band - 1]
    }

    pub fn eigenvalues_at(&self, ik: usize) -> &[f64] {
        &self.omega[ik]
    }

    pub fn mode(&self, band: usize, ik: usize) -> &BlochFunction {
        &self.modes[ik][band - 1]
    }

    /// Columns `k, omega_1..omega_N`.
    pub fn to_csv(&self, header: &str) -> String {
        let mut out = String::new();
        if !header.is_empty() {
            out.push_str(header);
        }
        out.push('k');
        for n in 1..=self.n_bands() {
            let _ = write!(out, ",omega_{n}");
        }
        out.push('\n');
        for (k, row) in self.k_grid().iter().zip(&self.omega) {
            let _ = write!(out, "{}", crate::fmt_f64(*k));
            for w in row {
                let _ = write!(out, ",{}", crate::fmt_f64(*w));
            }
            out.push('\n');
        }
        out
    }
}

/// Columns `x, Re p, Im p` on `samples` points of one period.
pub fn eigenfunction_csv(p: &BlochFunction, samples: usize, header: &str) -> String {
    let mut out = String::from(header);
    out.push_str("x,re_p,im_p\n");
    let h = p.period() / samples as f64;
    for j in 0..=samples {
        let x = j as f64 * h;
        let z = p.value_at(x);
        let _ = writeln!(out, "{},{},{}", crate::fmt_f64(x), crate::fmt_f64(z.re), crate::fmt_f64(z.im));
    }
    out
}
