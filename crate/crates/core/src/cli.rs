//! Subcommand orchestration and file output. Each subcommand writes into
//! `<out>/<subcommand>/`, and every file starts with the config hash line.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::bloch::{eigenfunction_csv, rational_value, solve_at, solve_bands, uniform_zone_grid, BlochProblem, CarrierCase};
use crate::cme::build_cme;
use crate::config::{parse_config, RunConfig};
use crate::error::Result;
use crate::fmt_f64;
use crate::harness::{build_uapp, case_b_study, convergence_study, prepare, sup_error};
use crate::pnls::{run_metadata, simulate, snapshot_csv};
use crate::soliton::{gap_soliton, linspace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Bands,
    Coeffs,
    Soliton,
    Simulate,
    Converge,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Bands => "bands",
            Command::Coeffs => "coeffs",
            Command::Soliton => "soliton",
            Command::Simulate => "simulate",
            Command::Converge => "converge",
        }
    }
}

/// What a subcommand produced.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    /// Printed to stdout by the binary.
    pub summary: String,
    /// False when an acceptance window was missed.
    pub success: bool,
}

/// Command-line overrides applied on top of the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub config_text: Option<String>,
    pub setup: Option<String>,
    pub out: Option<PathBuf>,
    pub epsilons: Option<Vec<f64>>,
}

/// Resolve the final configuration from file text, `--setup` and the other flags.
pub fn resolve(o: &Overrides) -> Result<RunConfig> {
    let mut text = String::new();
    if let Some(s) = &o.setup {
        let _ = writeln!(text, "setup = {s}");
    }
    if let Some(c) = &o.config_text {
        text.push_str(c);
    }
    let mut cfg = parse_config(&text)?;
    if let Some(d) = &o.out {
        cfg.out_dir = d.to_string_lossy().into_owned();
    }
    if let Some(e) = &o.epsilons {
        cfg.epsilons = e.clone();
    }
    Ok(cfg)
}

struct Writer {
    dir: PathBuf,
    header: String,
    files: Vec<PathBuf>,
}

impl Writer {
    fn new(dir: PathBuf, cfg: &RunConfig) -> Result<Self> {
        fs::create_dir_all(&dir)?;
        Ok(Self { dir, header: cfg.header(), files: Vec::new() })
    }

    /// `body` must not carry the header yet.
    fn put(&mut self, name: &str, body: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, format!("{}{body}", self.header))?;
        self.files.push(path);
        Ok(())
    }
}

pub fn run(cmd: Command, cfg: &RunConfig) -> Result<Outcome> {
    let dir = Path::new(&cfg.out_dir).join(cmd.name());
    let mut w = Writer::new(dir, cfg)?;
    let (summary, success) = match cmd {
        Command::Bands => bands(cfg, &mut w)?,
        Command::Coeffs => coeffs(cfg, &mut w)?,
        Command::Soliton => soliton(cfg, &mut w)?,
        Command::Simulate => simulate_cmd(cfg, &mut w)?,
        Command::Converge => converge(cfg, &mut w)?,
    };
    Ok(Outcome { files: w.files, summary, success })
}

fn bands(cfg: &RunConfig, w: &mut Writer) -> Result<(String, bool)> {
    let (v, _, _) = cfg.potentials()?;
    let g = v.lattice();
    let problem = BlochProblem::new(v, cfg.cutoff)?.with_k_grid(uniform_zone_grid(g, cfg.k_points))?;
    let set = solve_bands(&problem, cfg.n_bands)?;
    w.put("bands.csv", &set.to_csv(""))?;
    let k = rational_value(cfg.k0) * g;
    let (omega, modes) = solve_at(&problem, k, cfg.band.max(cfg.n_bands))?;
    let omega0 = omega[cfg.band - 1];
    if cfg.eigenfunctions {
        w.put("eigenfunction.csv", &eigenfunction_csv(&modes[cfg.band - 1], 512, ""))?;
    }
    Ok((format!("omega_{}({})={:.6}", cfg.band, cfg.k0, omega0), true))
}

fn coeffs(cfg: &RunConfig, w: &mut Writer) -> Result<(String, bool)> {
    let (v, wp, sigma) = cfg.potentials()?;
    let problem = BlochProblem::new(v, cfg.cutoff)?;
    let set = build_cme(&problem, cfg.k0, cfg.band, &wp, &sigma, cfg.cells)?;
    let mut table = set.coeffs.to_table(true);
    let case = match set.pair.case {
        CarrierCase::SimplePair => "simple_pair",
        CarrierCase::DoublePoint => "double_point",
    };
    let _ = writeln!(table, "case={case}");
    let _ = writeln!(table, "omega0={}", fmt_f64(set.pair.omega0));
    let _ = writeln!(table, "band={}", set.pair.band);
    let _ = writeln!(table, "gap_necessary={}", set.gap.necessary_ok);
    let _ = writeln!(table, "gap_kappa_nonzero={}", set.gap.kappa_nonzero);
    w.put("coeffs.txt", &table)?;
    let c = &set.coeffs;
    Ok((
        format!(
            "c_g={:.6} kappa={:.6} kappa_s={:.6} alpha={:.6} |beta|={:.3e} |gamma|={:.3e}",
            c.c_g,
            c.kappa,
            c.kappa_s,
            c.alpha,
            c.beta.norm(),
            c.gamma.norm()
        ),
        true,
    ))
}

fn soliton(cfg: &RunConfig, w: &mut Writer) -> Result<(String, bool)> {
    let spec = cfg.experiment()?;
    let prep = prepare(&spec)?;
    let p = &prep.soliton;
    let centre = p.speed() * cfg.soliton_time;
    let half = if p.is_degenerate() { 1.0 } else { p.default_half_width() };
    let x = linspace(centre - half, centre + half, cfg.soliton_points);
    let (ap, am) = gap_soliton(p, &x, cfg.soliton_time);
    let mut s = String::from("X,re_a_plus,im_a_plus,re_a_minus,im_a_minus\n");
    for ((xx, a), b) in x.iter().zip(&ap).zip(&am) {
        let _ = writeln!(s, "{},{},{},{},{}", fmt_f64(*xx), fmt_f64(a.re), fmt_f64(a.im), fmt_f64(b.re), fmt_f64(b.im));
    }
    w.put("soliton.csv", &s)?;
    let peak = ap.iter().chain(&am).map(|z| z.norm()).fold(0.0, f64::max);
    let mut summary = format!("T={} max|A|={:.6}", cfg.soliton_time, peak);
    if prep.beta_gamma_dropped {
        summary.push_str(" (beta, gamma set to zero)");
    }
    Ok((summary, true))
}

fn eps_dir(e: f64) -> String {
    format!("eps_{e}")
}

fn simulate_cmd(cfg: &RunConfig, w: &mut Writer) -> Result<(String, bool)> {
    let spec = cfg.experiment()?;
    let prep = prepare(&spec)?;
    let mut lines = Vec::new();
    for &eps in &cfg.epsilons {
        let sim = prep.config(&spec, eps)?;
        let x = sim.x_grid();
        let ansatz = prep.ansatz(eps);
        let u0 = build_uapp(&ansatz, &x, 0.0)?;
        let times: Vec<f64> = (1..=cfg.snapshots).map(|j| sim.t_end * j as f64 / cfg.snapshots as f64).collect();
        let traj = simulate(&sim, &u0, &times)?;
        let final_err = sup_error(&traj.last().u, &build_uapp(&ansatz, &x, sim.t_end)?)?;
        let sub = eps_dir(eps);
        let mut run = Writer::new(w.dir.join(&sub), cfg)?;
        for (j, snap) in traj.snapshots.iter().enumerate() {
            run.put(&format!("snapshot_{j:03}.csv"), &format!("# t={}\n{}", fmt_f64(snap.t), snapshot_csv(&x, &snap.u, "")))?;
        }
        let mut meta = run_metadata(&sim, &traj, "");
        let _ = writeln!(meta, "sup_error_final={}", fmt_f64(final_err));
        run.put("metadata.txt", &meta)?;
        w.files.append(&mut run.files);
        lines.push(format!("epsilon={eps} sup_error={final_err:.4e} mass_drift={:.2e}", traj.mass_drift));
    }
    Ok((lines.join("\n"), true))
}

fn converge(cfg: &RunConfig, w: &mut Writer) -> Result<(String, bool)> {
    let spec = cfg.experiment()?;
    let case = prepare(&spec)?.setup.pair.case;
    let report = match case {
        CarrierCase::SimplePair => convergence_study(&spec, &cfg.epsilons)?,
        CarrierCase::DoublePoint => case_b_study(&spec, &cfg.epsilons)?,
    };
    w.put("converge.csv", &report.to_csv(""))?;
    let ok = cfg.rate_ok(report.fitted_rate);
    let window = match (cfg.rate_min, cfg.rate_max) {
        (None, None) => "none".to_string(),
        (a, b) => format!(
            "[{}, {}]",
            a.map_or("-inf".into(), |r| r.to_string()),
            b.map_or("inf".into(), |r| r.to_string())
        ),
    };
    let summary = format!("{} window={window} pass={ok}", report.summary());
    w.put("summary.txt", &format!("{summary}\n"))?;
    Ok((summary, ok))
}

/// Sampled `u_app` for external comparison; used by the FFI layer.
pub fn sample_ansatz(cfg: &RunConfig, epsilon: f64, t: f64) -> Result<(Vec<f64>, Vec<Complex64>)> {
    let spec = cfg.experiment()?;
    let prep = prepare(&spec)?;
    let sim = prep.config(&spec, epsilon)?;
    let x = sim.x_grid();
    let u = build_uapp(&prep.ansatz(epsilon), &x, t)?;
    Ok((x, u))
}
