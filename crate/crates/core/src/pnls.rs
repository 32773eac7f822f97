//! Strang split-step Fourier integrator for
//! `i u_t + u_xx - (V + εW) u - σ |u|² u = 0` on a periodic grid `[-L, L)`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;
use num_integer::Integer;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::fmt_f64;
use crate::potentials::PeriodicFunction;

/// Largest relative change of `dx` allowed when fitting the grid to the domain.
pub const DX_ADJUST_TOL: f64 = 0.01;

#[derive(Clone, Debug)]
pub struct SimulationConfig {
    pub half_length: f64,
    pub n: usize,
    pub dx: f64,
    pub dx_requested: f64,
    pub dt: f64,
    pub epsilon: f64,
    pub t_end: f64,
    pub v: PeriodicFunction,
    pub w: PeriodicFunction,
    pub sigma: PeriodicFunction,
}

fn is_five_smooth(mut m: usize) -> bool {
    if m == 0 {
        return false;
    }
    for p in [2, 3, 5] {
        while m.is_multiple_of(p) {
            m /= p;
        }
    }
    m == 1
}

/// 5-smooth point count for a domain of `length` whose spacing stays within
/// [`DX_ADJUST_TOL`] of `dx`; the closest such count wins.
pub fn fft_friendly_points(length: f64, dx: f64) -> Result<usize> {
    let target = length / dx;
    let lo = (target / (1.0 + DX_ADJUST_TOL)).ceil().max(2.0) as usize;
    let hi = (target / (1.0 - DX_ADJUST_TOL)).floor() as usize;
    (lo..=hi)
        .filter(|&m| is_five_smooth(m))
        .min_by(|&a, &b| (a as f64 - target).abs().total_cmp(&(b as f64 - target).abs()))
        .ok_or_else(|| Error::Simulation(format!("no FFT-friendly grid within 1% of dx = {dx} on length {length}")))
}

/// Length of the smallest cell over which `V`, `W`, `σ` and the carriers
/// `e^{ik x}` (for `k` with denominator `carrier_cells`) are all periodic.
pub fn commensurate_cell(
    v: &PeriodicFunction,
    w: &PeriodicFunction,
    sigma: &PeriodicFunction,
    carrier_cells: i64,
) -> Result<f64> {
    let mut cells = carrier_cells.max(1);
    for (name, f) in [("V", v), ("W", w), ("sigma", sigma)] {
        let constant = f.coefficients().keys().all(|&n| n == 0);
        if constant {
            continue;
        }
        if (f.lattice() - v.lattice()).abs() > 1e-12 * v.lattice() {
            return Err(Error::Simulation(format!("{name} does not share the lattice of V")));
        }
        let c = f
            .cells_per_period()
            .ok_or_else(|| Error::Simulation(format!("{name} has an irrational wavenumber; no finite periodic domain")))?;
        cells = cells.lcm(&c);
    }
    Ok(cells as f64 * v.period())
}

impl SimulationConfig {
    /// Smallest domain `[-L, L)` with `L ≥ min_half_length` and `2L` a multiple
    /// of `cell`, with a 5-smooth grid near `dx`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        v: PeriodicFunction,
        w: PeriodicFunction,
        sigma: PeriodicFunction,
        epsilon: f64,
        cell: f64,
        min_half_length: f64,
        dx: f64,
        dt: f64,
        t_end: f64,
    ) -> Result<Self> {
        if !(epsilon >= 0.0 && dx > 0.0 && dt > 0.0 && t_end >= 0.0 && cell > 0.0) {
            return Err(Error::Simulation(format!(
                "invalid knobs: epsilon = {epsilon}, dx = {dx}, dt = {dt}, t_end = {t_end}, cell = {cell}"
            )));
        }
        let cells = (2.0 * min_half_length / cell).ceil().max(1.0);
        let length = cells * cell;
        let n = fft_friendly_points(length, dx)?;
        let cfg = Self {
            half_length: 0.5 * length,
            n,
            dx: length / n as f64,
            dx_requested: dx,
            dt,
            epsilon,
            t_end,
            v,
            w,
            sigma,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let length = 2.0 * self.half_length;
        if ((self.n as f64) * self.dx - length).abs() > 1e-9 * length {
            return Err(Error::Simulation("grid does not tile the domain".into()));
        }
        for (name, f) in [("V", &self.v), ("W", &self.w), ("sigma", &self.sigma)] {
            if !f.is_commensurate(length) {
                return Err(Error::Simulation(format!("domain length {length} is not a multiple of the period of {name}")));
            }
        }
        Ok(())
    }

    pub fn length(&self) -> f64 {
        2.0 * self.half_length
    }

    pub fn x_grid(&self) -> Vec<f64> {
        (0..self.n).map(|j| -self.half_length + j as f64 * self.dx).collect()
    }

    /// `key=value` lines describing the grid.
    pub fn metadata(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "half_length={}", fmt_f64(self.half_length));
        let _ = writeln!(s, "n={}", self.n);
        let _ = writeln!(s, "dx={}", fmt_f64(self.dx));
        let _ = writeln!(s, "dx_requested={}", fmt_f64(self.dx_requested));
        let _ = writeln!(s, "dt={}", fmt_f64(self.dt));
        let _ = writeln!(s, "epsilon={}", fmt_f64(self.epsilon));
        let _ = writeln!(s, "t_end={}", fmt_f64(self.t_end));
        s
    }
}

/// Field on the grid plus its time.
#[derive(Clone, Debug)]
pub struct SimulationState {
    pub x: Vec<f64>,
    pub u: Vec<Complex64>,
    pub t: f64,
    pub mass: f64,
}

pub fn mass(u: &[Complex64], dx: f64) -> f64 {
    u.iter().map(|z| z.norm_sqr()).sum::<f64>() * dx
}

/// Split-step propagator bound to one grid and potential.
pub struct Solver {
    n: usize,
    xi2: Vec<f64>,
    linear: Vec<f64>,
    sigma: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    cache: Vec<(u64, Vec<Complex64>)>,
}

impl Solver {
    pub fn new(cfg: &SimulationConfig) -> Self {
        let x = cfg.x_grid();
        let n = cfg.n;
        let v = cfg.v.evaluate_real(&x);
        let w = cfg.w.evaluate_real(&x);
        let linear = v.iter().zip(&w).map(|(a, b)| a + cfg.epsilon * b).collect();
        Self::from_parts(n, cfg.length(), linear, cfg.sigma.evaluate_real(&x))
    }

    /// Direct construction from sampled `V + εW` and `σ` on `n` points of a
    /// domain of the given length.
    pub fn from_parts(n: usize, length: f64, linear: Vec<f64>, sigma: Vec<f64>) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let scratch = vec![Complex64::new(0.0, 0.0); fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len())];
        let xi2 = (0..n)
            .map(|j| {
                let m = if j < n.div_ceil(2) { j as f64 } else { j as f64 - n as f64 };
                let xi = 2.0 * PI * m / length;
                xi * xi
            })
            .collect();
        Self {
            n,
            xi2,
            linear,
            sigma,
            fwd,
            inv,
            scratch,
            cache: Vec::new(),
        }
    }

    fn kinetic_factors(&mut self, tau: f64) -> usize {
        let key = tau.to_bits();
        if let Some(i) = self.cache.iter().position(|(k, _)| *k == key) {
            return i;
        }
        if self.cache.len() >= 4 {
            self.cache.remove(0);
        }
        let scale = 1.0 / self.n as f64;
        let f = self.xi2.iter().map(|&q| Complex64::from_polar(scale, -q * tau)).collect();
        self.cache.push((key, f));
        self.cache.len() - 1
    }

    /// Exact flow of `i u_t = -u_xx` over `tau`.
    pub fn kinetic_step(&mut self, u: &mut [Complex64], tau: f64) {
        assert_eq!(u.len(), self.n);
        let i = self.kinetic_factors(tau);
        self.fwd.process_with_scratch(u, &mut self.scratch);
        for (z, f) in u.iter_mut().zip(&self.cache[i].1) {
            *z *= f;
        }
        self.inv.process_with_scratch(u, &mut self.scratch);
    }

    /// Exact flow of `i u_t = (V + εW) u + σ|u|² u` over `tau`. Returns false
    /// if a non-finite value was met.
    pub fn potential_nonlinear_step(&self, u: &mut [Complex64], tau: f64) -> bool {
        let mut finite = true;
        for ((z, &l), &s) in u.iter_mut().zip(&self.linear).zip(&self.sigma) {
            let a = z.norm_sqr();
            finite &= a.is_finite();
            *z *= Complex64::from_polar(1.0, -(l + s * a) * tau);
        }
        finite
    }

    /// One Strang step `K(dt/2) N(dt) K(dt/2)`.
    pub fn strang_step(&mut self, u: &mut [Complex64], dt: f64) -> bool {
        self.kinetic_step(u, 0.5 * dt);
        let ok = self.potential_nonlinear_step(u, dt);
        self.kinetic_step(u, 0.5 * dt);
        ok
    }

    /// Steps of sizes `dts` with adjacent kinetic halves fused.
    /// `first_step` is the global index used in error reports.
    pub fn run_steps(&mut self, u: &mut [Complex64], dts: &[f64], first_step: usize) -> Result<()> {
        let Some(&d0) = dts.first() else { return Ok(()) };
        self.kinetic_step(u, 0.5 * d0);
        for (j, &d) in dts.iter().enumerate() {
            if !self.potential_nonlinear_step(u, d) {
                return Err(Error::NonFinite { step: first_step + j });
            }
            let next = dts.get(j + 1).map_or(0.5 * d, |&e| 0.5 * (d + e));
            self.kinetic_step(u, next);
        }
        if u.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite { step: first_step + dts.len() - 1 });
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Snapshot {
    pub t: f64,
    pub u: Vec<Complex64>,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub x: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
    pub steps: usize,
    /// Whether some final substep was shortened to land on a snapshot time.
    pub dt_adjusted: bool,
    pub mass_initial: f64,
    /// Largest relative mass deviation seen at the snapshots.
    pub mass_drift: f64,
}

impl Trajectory {
    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("trajectory has at least the initial snapshot")
    }

    /// Tail magnitude at the domain edges of the last snapshot.
    pub fn boundary_magnitude(&self) -> f64 {
        let u = &self.last().u;
        let k = (u.len() / 100).max(1);
        u[..k].iter().chain(&u[u.len() - k..]).map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Step sizes from `t0` to `t1`: full `dt` steps plus a shortened last one if
/// `t1 - t0` is not a multiple of `dt`.
fn step_plan(t0: f64, t1: f64, dt: f64) -> (Vec<f64>, bool) {
    let span = t1 - t0;
    if span <= 0.0 {
        return (Vec::new(), false);
    }
    let full = (span / dt * (1.0 + 1e-12)).floor() as usize;
    let rest = span - full as f64 * dt;
    let mut steps = vec![dt; full];
    let adjusted = rest > 1e-9 * dt;
    if adjusted {
        steps.push(rest);
    } else if let Some(last) = steps.last_mut() {
        // absorb roundoff so the snapshot time is hit exactly
        *last += rest;
    }
    (steps, adjusted)
}

/// Integrate from `u0` at `t = 0`, recording `u0` and a snapshot at every
/// time in `times` (sorted, positive). `t_end` is always included.
pub fn simulate(cfg: &SimulationConfig, u0: &[Complex64], times: &[f64]) -> Result<Trajectory> {
    if u0.len() != cfg.n {
        return Err(Error::Simulation(format!("initial data has {} points, grid has {}", u0.len(), cfg.n)));
    }
    let mut targets: Vec<f64> = times.iter().copied().filter(|&t| t > 0.0 && t < cfg.t_end).collect();
    targets.push(cfg.t_end);
    targets.sort_by(f64::total_cmp);
    targets.dedup();
    let mut solver = Solver::new(cfg);
    let mut u = u0.to_vec();
    let m0 = mass(&u, cfg.dx);
    let mut snapshots = vec![Snapshot { t: 0.0, u: u.clone() }];
    let (mut t, mut steps, mut adjusted, mut drift) = (0.0, 0usize, false, 0.0f64);
    for &target in &targets {
        if target <= 0.0 {
            continue;
        }
        let (plan, adj) = step_plan(t, target, cfg.dt);
        solver.run_steps(&mut u, &plan, steps)?;
        steps += plan.len();
        adjusted |= adj;
        t = target;
        if m0 > 0.0 {
            drift = drift.max((mass(&u, cfg.dx) - m0).abs() / m0);
        }
        snapshots.push(Snapshot { t, u: u.clone() });
    }
    Ok(Trajectory {
        x: cfg.x_grid(),
        snapshots,
        steps,
        dt_adjusted: adjusted,
        mass_initial: m0,
        mass_drift: drift,
    })
}

/// CSV with columns `x, re_u, im_u, abs_u`.
pub fn snapshot_csv(x: &[f64], u: &[Complex64], header: &str) -> String {
    let mut s = String::with_capacity(80 * x.len());
    s.push_str(header);
    s.push_str("x,re_u,im_u,abs_u\n");
    for (xi, z) in x.iter().zip(u) {
        let _ = writeln!(s, "{},{},{},{}", fmt_f64(*xi), fmt_f64(z.re), fmt_f64(z.im), fmt_f64(z.norm()));
    }
    s
}

/// Key=value sidecar for a run.
pub fn run_metadata(cfg: &SimulationConfig, traj: &Trajectory, header: &str) -> String {
    let mut s = String::from(header);
    s.push_str(&cfg.metadata());
    let _ = writeln!(s, "steps={}", traj.steps);
    let _ = writeln!(s, "dt_adjusted={}", traj.dt_adjusted);
    let _ = writeln!(s, "mass_initial={}", fmt_f64(traj.mass_initial));
    let _ = writeln!(s, "mass_drift={}", fmt_f64(traj.mass_drift));
    let _ = writeln!(s, "boundary_magnitude={}", fmt_f64(traj.boundary_magnitude()));
    let times: Vec<String> = traj.snapshots.iter().map(|p| fmt_f64(p.t)).collect();
    let _ = writeln!(s, "snapshot_times={}", times.join(";"));
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn free(n: usize, length: f64) -> Solver {
        Solver::from_parts(n, length, vec![0.0; n], vec![0.0; n])
    }

    #[test]
    fn five_smooth_grid() {
        assert!(is_five_smooth(2 * 3 * 5 * 16));
        assert!(!is_five_smooth(14));
        let n = fft_friendly_points(3090.0, 0.05).unwrap();
        assert!(is_five_smooth(n));
        assert!(((3090.0 / n as f64) - 0.05).abs() <= 0.01 * 0.05);
    }

    #[test]
    fn plane_wave_phase() {
        let (n, length) = (64, 2.0 * PI);
        let mut s = free(n, length);
        let x: Vec<f64> = (0..n).map(|j| j as f64 * length / n as f64).collect();
        let mut u: Vec<Complex64> = x.iter().map(|&y| Complex64::from_polar(1.0, 3.0 * y)).collect();
        let tau = 0.37;
        s.kinetic_step(&mut u, tau);
        for (z, &y) in u.iter().zip(&x) {
            let want = Complex64::from_polar(1.0, 3.0 * y - 9.0 * tau);
            assert!((z - want).norm() < 1e-13);
        }
    }

    #[test]
    fn constant_is_kinetic_fixed_point() {
        let mut s = free(32, 5.0);
        let mut u = vec![Complex64::new(0.3, -0.2); 32];
        s.kinetic_step(&mut u, 1.3);
        assert!(u.iter().all(|z| (z - Complex64::new(0.3, -0.2)).norm() < 1e-15));
    }

    #[test]
    fn nonlinear_ode_solution() {
        let n = 8;
        let s = Solver::from_parts(n, 1.0, vec![0.0; n], vec![-1.0; n]);
        let c = Complex64::new(0.6, 0.3);
        let mut u = vec![c; n];
        s.potential_nonlinear_step(&mut u, 0.5);
        let want = c * Complex64::from_polar(1.0, c.norm_sqr() * 0.5);
        assert!(u.iter().all(|z| (z - want).norm() < 1e-15));
    }

    #[test]
    fn step_plan_hits_target() {
        let (p, adj) = step_plan(0.0, 1.0, 0.3);
        assert!(adj);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let (p, adj) = step_plan(0.0, 1.0, 0.25);
        assert!(!adj && p.len() == 4);
    }

    #[test]
    fn fused_steps_match_plain_strang() {
        let n = 128;
        let length = 20.0;
        let lin: Vec<f64> = (0..n).map(|j| (j as f64 * 0.1).cos()).collect();
        let mut a = Solver::from_parts(n, length, lin.clone(), vec![-1.0; n]);
        let mut b = Solver::from_parts(n, length, lin, vec![-1.0; n]);
        let u0: Vec<Complex64> = (0..n)
            .map(|j| {
                let x = -10.0 + j as f64 * length / n as f64;
                Complex64::new((-x * x).exp(), 0.0)
            })
            .collect();
        let mut u1 = u0.clone();
        let mut u2 = u0;
        for _ in 0..10 {
            a.strang_step(&mut u1, 0.01);
        }
        b.run_steps(&mut u2, &[0.01; 10], 0).unwrap();
        let d = u1.iter().zip(&u2).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
        assert!(d < 1e-13, "{d}");
    }

    #[test]
    fn nan_aborts_with_step_index() {
        let mut s = free(16, 1.0);
        let mut u = vec![Complex64::new(f64::NAN, 0.0); 16];
        match s.run_steps(&mut u, &[0.1; 3], 7) {
            Err(Error::NonFinite { step }) => assert_eq!(step, 7),
            other => panic!("{other:?}"),
        }
    }
}
