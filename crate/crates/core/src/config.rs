//! Run configuration: an INI file with sections `[potential.V]`,
//! `[potential.W]`, `[potential.sigma]`, `[carrier]`, `[soliton]`,
//! `[numerics]`, `[acceptance]` and `[output]`, plus the top-level keys
//! `setup` (expand a named bundle first) and `name`.
//!
//! Parsing is strict: unknown sections and keys are errors, and every problem
//! in the file is reported, not just the first.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use ini::Ini;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::harness::ExperimentSpec;
use crate::potentials::{parse_rational, EllipticParams, PeriodicFunction, Rational, Wavenumber};

pub const SETUP_NAMES: [&str; 3] = ["sec611", "sec612", "sec62"];

#[derive(Clone, Debug, PartialEq)]
pub enum PotentialSpec {
    /// `amplitude · (cos x + offset)` with period 2π.
    CosShifted { amplitude: f64, offset: f64 },
    /// `sn²(x | m)` with period `2K(m)`.
    SnSquared { m: f64, n_max: usize },
    Constant { value: f64 },
    /// `Σ amp cos(n · base · g x)`.
    Cosines { base: Rational, terms: Vec<(i64, f64)> },
    /// Explicit harmonics `(n, re, im)` on `base · g`.
    Harmonics { base: Rational, terms: Vec<(i64, f64, f64)>, real: bool },
}

impl PotentialSpec {
    /// Build on the reciprocal lattice `g` (ignored by the kinds that set their
    /// own period).
    pub fn build(&self, lattice: f64) -> Result<PeriodicFunction> {
        match self {
            PotentialSpec::CosShifted { amplitude, offset } => Ok(PeriodicFunction::cos_shifted(*amplitude, *offset)),
            PotentialSpec::SnSquared { m, n_max } => PeriodicFunction::sn_squared(EllipticParams::new(*m)?, *n_max),
            PotentialSpec::Constant { value } => Ok(PeriodicFunction::constant(lattice, *value)),
            PotentialSpec::Cosines { base, terms } => PeriodicFunction::cosines(lattice, Wavenumber::Exact(*base), terms),
            PotentialSpec::Harmonics { base, terms, real } => PeriodicFunction::new(
                lattice,
                Wavenumber::Exact(*base),
                terms.iter().map(|&(n, re, im)| (n, num_complex::Complex64::new(re, im))),
                *real,
            ),
        }
    }

    fn write(&self, out: &mut String) {
        let _ = match self {
            PotentialSpec::CosShifted { amplitude, offset } => {
                writeln!(out, "kind = cos_shifted\namplitude = {amplitude}\noffset = {offset}")
            }
            PotentialSpec::SnSquared { m, n_max } => writeln!(out, "kind = sn_squared\nm = {m}\nn_max = {n_max}"),
            PotentialSpec::Constant { value } => writeln!(out, "kind = constant\nvalue = {value}"),
            PotentialSpec::Cosines { base, terms } => {
                let t: Vec<String> = terms.iter().map(|(n, a)| format!("{n}:{a}")).collect();
                writeln!(out, "kind = cosines\nbase = {base}\nterms = {}", t.join(", "))
            }
            PotentialSpec::Harmonics { base, terms, real } => {
                let t: Vec<String> = terms.iter().map(|(n, a, b)| format!("{n}:{a}:{b}")).collect();
                writeln!(out, "kind = harmonics\nbase = {base}\nreal = {real}\nterms = {}", t.join(", "))
            }
        };
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub name: String,
    pub v: PotentialSpec,
    pub w: PotentialSpec,
    pub sigma: PotentialSpec,
    pub k0: Rational,
    pub band: usize,
    pub cells: Option<i64>,
    pub velocity: f64,
    pub delta: f64,
    /// Slow time at which the `soliton` subcommand evaluates the envelopes.
    pub soliton_time: f64,
    pub soliton_points: usize,
    pub cutoff: usize,
    pub k_points: usize,
    pub n_bands: usize,
    pub dx: f64,
    pub dt: f64,
    pub t_end_factor: f64,
    pub tail_widths: f64,
    pub half_length: Option<f64>,
    pub epsilons: Vec<f64>,
    pub rate_min: Option<f64>,
    pub rate_max: Option<f64>,
    pub out_dir: String,
    pub snapshots: usize,
    pub eigenfunctions: bool,
}

impl RunConfig {
    fn base() -> Self {
        Self {
            name: "custom".into(),
            v: PotentialSpec::CosShifted { amplitude: 2.0, offset: 1.0 },
            w: PotentialSpec::Cosines { base: Rational::new(2, 5), terms: vec![(1, 1.0)] },
            sigma: PotentialSpec::Constant { value: -1.0 },
            k0: Rational::new(1, 5),
            band: 2,
            cells: None,
            velocity: 0.5,
            delta: PI / 2.0,
            soliton_time: 0.0,
            soliton_points: 2001,
            cutoff: 64,
            k_points: 201,
            n_bands: 6,
            dx: 0.05,
            dt: 0.02,
            t_end_factor: 2.0,
            tail_widths: 20.0,
            half_length: None,
            epsilons: vec![0.01, 0.02, 0.03, 0.04, 0.05],
            rate_min: None,
            rate_max: None,
            out_dir: "out".into(),
            snapshots: 4,
            eigenfunctions: false,
        }
    }

    /// Frozen parameter bundles for the three reference experiments.
    pub fn named(name: &str) -> Result<Self> {
        let b = Self::base();
        match name {
            "sec611" => Ok(Self {
                name: name.into(),
                rate_min: Some(1.45),
                rate_max: Some(1.90),
                ..b
            }),
            "sec612" => Ok(Self {
                name: name.into(),
                w: PotentialSpec::Cosines {
                    base: Rational::new(2, 5),
                    terms: vec![(1, 1.0), (2, 0.5), (5, 1.0 / 3.0)],
                },
                rate_min: Some(1.40),
                rate_max: Some(1.85),
                ..b
            }),
            "sec62" => Ok(Self {
                name: name.into(),
                v: PotentialSpec::SnSquared { m: 0.5, n_max: 32 },
                w: PotentialSpec::Cosines { base: Rational::from_integer(2), terms: vec![(1, 1.0)] },
                k0: Rational::from_integer(0),
                band: 2,
                cells: Some(2),
                t_end_factor: 1.0,
                epsilons: vec![0.01, 0.02, 0.03, 0.04],
                rate_min: Some(1.0),
                rate_max: None,
                ..b
            }),
            _ => Err(Error::Config(vec![format!(
                "unknown setup `{name}` (known: {})",
                SETUP_NAMES.join(", ")
            )])),
        }
    }

    pub fn potentials(&self) -> Result<(PeriodicFunction, PeriodicFunction, PeriodicFunction)> {
        let v = self.v.build(1.0)?;
        let g = v.lattice();
        Ok((v, self.w.build(g)?, self.sigma.build(g)?))
    }

    pub fn experiment(&self) -> Result<ExperimentSpec> {
        let (v, w, sigma) = self.potentials()?;
        Ok(ExperimentSpec {
            name: self.name.clone(),
            v,
            w,
            sigma,
            k0: self.k0,
            band: self.band,
            cutoff: self.cutoff,
            cells: self.cells,
            velocity: self.velocity,
            delta: self.delta,
            dx: self.dx,
            dt: self.dt,
            t_end_factor: self.t_end_factor,
            tail_widths: self.tail_widths,
            half_length: self.half_length,
            epsilons: self.epsilons.clone(),
        })
    }

    pub fn rate_ok(&self, rate: f64) -> bool {
        self.rate_min.is_none_or(|m| rate >= m) && self.rate_max.is_none_or(|m| rate <= m)
    }

    /// Canonical INI text; parsing it gives back an equal config.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "name = {}\n", self.name);
        for (sec, p) in [("V", &self.v), ("W", &self.w), ("sigma", &self.sigma)] {
            let _ = writeln!(s, "[potential.{sec}]");
            p.write(&mut s);
            s.push('\n');
        }
        let _ = writeln!(s, "[carrier]\nk0 = {}\nband = {}", self.k0, self.band);
        if let Some(c) = self.cells {
            let _ = writeln!(s, "cells = {c}");
        }
        let _ = writeln!(
            s,
            "\n[soliton]\nv = {}\ndelta = {}\nt = {}\npoints = {}\n",
            self.velocity, self.delta, self.soliton_time, self.soliton_points
        );
        let eps: Vec<String> = self.epsilons.iter().map(|e| e.to_string()).collect();
        let _ = writeln!(
            s,
            "[numerics]\ncutoff = {}\nk_points = {}\nn_bands = {}\ndx = {}\ndt = {}\nt_end_factor = {}\ntail_widths = {}\nepsilon = {}",
            self.cutoff,
            self.k_points,
            self.n_bands,
            self.dx,
            self.dt,
            self.t_end_factor,
            self.tail_widths,
            eps.join(", ")
        );
        if let Some(l) = self.half_length {
            let _ = writeln!(s, "half_length = {l}");
        }
        if self.rate_min.is_some() || self.rate_max.is_some() {
            s.push_str("\n[acceptance]\n");
            if let Some(r) = self.rate_min {
                let _ = writeln!(s, "rate_min = {r}");
            }
            if let Some(r) = self.rate_max {
                let _ = writeln!(s, "rate_max = {r}");
            }
        }
        let _ = writeln!(
            s,
            "\n[output]\ndir = {}\nsnapshots = {}\neigenfunctions = {}",
            self.out_dir, self.snapshots, self.eigenfunctions
        );
        s
    }

    /// SHA-256 of the canonical text, hex encoded. The output directory is
    /// left out so identical runs in different places hash the same.
    pub fn hash(&self) -> String {
        let canon = Self { out_dir: String::new(), ..self.clone() }.serialize();
        let d = Sha256::digest(canon.as_bytes());
        d.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// First line of every output file.
    pub fn header(&self) -> String {
        format!("# config_hash={}\n", self.hash())
    }
}

fn allowed(section: &str) -> Option<&'static [&'static str]> {
    Some(match section {
        "" => &["setup", "name"],
        "potential.V" | "potential.W" | "potential.sigma" => {
            &["kind", "amplitude", "offset", "m", "n_max", "value", "base", "terms", "real"]
        }
        "carrier" => &["k0", "band", "cells"],
        "soliton" => &["v", "delta", "t", "points"],
        "numerics" => &[
            "cutoff", "k_points", "n_bands", "dx", "dt", "t_end_factor", "tail_widths", "half_length", "epsilon",
        ],
        "acceptance" => &["rate_min", "rate_max"],
        "output" => &["dir", "snapshots", "eigenfunctions"],
        _ => return None,
    })
}

struct Reader<'a> {
    errors: Vec<String>,
    map: BTreeMap<(String, String), &'a str>,
}

impl<'a> Reader<'a> {
    fn get(&self, sec: &str, key: &str) -> Option<&'a str> {
        self.map.get(&(sec.to_string(), key.to_string())).copied()
    }

    fn has_section(&self, sec: &str) -> bool {
        self.map.keys().any(|(s, _)| s == sec)
    }

    fn parse<T: std::str::FromStr>(&mut self, sec: &str, key: &str) -> Option<T> {
        let raw = self.get(sec, key)?;
        match raw.trim().parse() {
            Ok(v) => Some(v),
            Err(_) => {
                self.errors.push(format!("[{sec}] {key}: cannot parse `{raw}`"));
                None
            }
        }
    }

    fn set<T: std::str::FromStr>(&mut self, sec: &str, key: &str, slot: &mut T) {
        if let Some(v) = self.parse(sec, key) {
            *slot = v;
        }
    }

    fn set_opt<T: std::str::FromStr>(&mut self, sec: &str, key: &str, slot: &mut Option<T>) {
        if let Some(v) = self.parse(sec, key) {
            *slot = Some(v);
        }
    }

    fn need<T: std::str::FromStr>(&mut self, sec: &str, key: &str) -> Option<T> {
        if self.get(sec, key).is_none() {
            self.errors.push(format!("[{sec}] missing key `{key}`"));
            return None;
        }
        self.parse(sec, key)
    }

    fn rational(&mut self, sec: &str, key: &str) -> Option<Rational> {
        let raw = self.get(sec, key)?;
        match parse_rational(raw) {
            Ok(r) => Some(r),
            Err(_) => {
                self.errors.push(format!("[{sec}] {key}: malformed rational `{raw}`"));
                None
            }
        }
    }

    fn list<T, F: Fn(&[&str]) -> Option<T>>(&mut self, sec: &str, key: &str, arity: usize, f: F) -> Option<Vec<T>> {
        let raw = self.get(sec, key)?;
        let mut out = Vec::new();
        for item in raw.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let parts: Vec<&str> = item.split(':').map(str::trim).collect();
            match (parts.len() == arity).then(|| f(&parts)).flatten() {
                Some(v) => out.push(v),
                None => {
                    self.errors.push(format!("[{sec}] {key}: malformed entry `{item}`"));
                    return None;
                }
            }
        }
        Some(out)
    }

    fn potential(&mut self, sec: &str, current: &PotentialSpec) -> PotentialSpec {
        if !self.has_section(sec) {
            return current.clone();
        }
        let Some(kind) = self.get(sec, "kind") else {
            self.errors.push(format!("[{sec}] missing key `kind`"));
            return current.clone();
        };
        let used: &[&str] = match kind.trim() {
            "cos_shifted" => &["kind", "amplitude", "offset"],
            "sn_squared" => &["kind", "m", "n_max"],
            "constant" => &["kind", "value"],
            "cosines" => &["kind", "base", "terms"],
            "harmonics" => &["kind", "base", "terms", "real"],
            other => {
                self.errors.push(format!(
                    "[{sec}] unknown kind `{other}` (cos_shifted, sn_squared, constant, cosines, harmonics)"
                ));
                return current.clone();
            }
        };
        let stray: Vec<String> = self
            .map
            .keys()
            .filter(|(s, k)| s == sec && !used.contains(&k.as_str()))
            .map(|(_, k)| k.clone())
            .collect();
        for k in stray {
            self.errors.push(format!("[{sec}] key `{k}` does not apply to kind `{}`", kind.trim()));
        }
        let num = |s: &str| s.parse::<f64>().ok();
        let int = |s: &str| s.parse::<i64>().ok();
        let spec = match kind.trim() {
            "cos_shifted" => Some(PotentialSpec::CosShifted {
                amplitude: self.need(sec, "amplitude").unwrap_or(f64::NAN),
                offset: self.need(sec, "offset").unwrap_or(f64::NAN),
            }),
            "sn_squared" => {
                let m: Option<f64> = self.need(sec, "m");
                if let Some(m) = m {
                    if !(0.0..1.0).contains(&m) {
                        self.errors.push(format!("[{sec}] m = {m} must lie in [0, 1)"));
                    }
                }
                let mut n_max = crate::potentials::DEFAULT_HARMONICS;
                self.set(sec, "n_max", &mut n_max);
                m.map(|m| PotentialSpec::SnSquared { m, n_max })
            }
            "constant" => self.need(sec, "value").map(|value| PotentialSpec::Constant { value }),
            "cosines" => {
                let base = self.rational(sec, "base").unwrap_or(Rational::from_integer(1));
                let terms = self.list(sec, "terms", 2, |p| Some((int(p[0])?, num(p[1])?)));
                terms.map(|terms| PotentialSpec::Cosines { base, terms })
            }
            _ => {
                let base = self.rational(sec, "base").unwrap_or(Rational::from_integer(1));
                let mut real = true;
                self.set(sec, "real", &mut real);
                let terms = self.list(sec, "terms", 3, |p| Some((int(p[0])?, num(p[1])?, num(p[2])?)));
                terms.map(|terms| PotentialSpec::Harmonics { base, terms, real })
            }
        };
        match spec {
            Some(s) => {
                if let Err(e) = s.build(1.0) {
                    self.errors.push(format!("[{sec}] {e}"));
                }
                s
            }
            None => {
                if self.get(sec, "terms").is_none() && matches!(kind.trim(), "cosines" | "harmonics") {
                    self.errors.push(format!("[{sec}] missing key `terms`"));
                }
                current.clone()
            }
        }
    }
}

/// Parse and validate a config text.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let ini = Ini::load_from_str_noescape(text).map_err(|e| Error::Config(vec![format!("syntax: {e}")]))?;
    let mut errors = Vec::new();
    let mut map = BTreeMap::new();
    for (sec, props) in &ini {
        let sec = sec.unwrap_or("");
        let Some(keys) = allowed(sec) else {
            errors.push(format!("unknown section [{sec}]"));
            continue;
        };
        for (k, v) in props.iter() {
            if !keys.contains(&k) {
                errors.push(format!("[{sec}] unknown key `{k}`"));
            } else if map.insert((sec.to_string(), k.to_string()), v).is_some() {
                errors.push(format!("[{sec}] duplicate key `{k}`"));
            }
        }
    }
    let mut r = Reader { errors, map };
    let mut cfg = match r.get("", "setup") {
        Some(name) => match RunConfig::named(name.trim()) {
            Ok(c) => c,
            Err(Error::Config(e)) => {
                r.errors.extend(e);
                RunConfig::base()
            }
            Err(e) => return Err(e),
        },
        None => RunConfig::base(),
    };
    if let Some(n) = r.get("", "name") {
        cfg.name = n.trim().to_string();
    }
    cfg.v = r.potential("potential.V", &cfg.v);
    cfg.w = r.potential("potential.W", &cfg.w);
    cfg.sigma = r.potential("potential.sigma", &cfg.sigma);
    if let Some(k) = r.rational("carrier", "k0") {
        cfg.k0 = k;
    }
    r.set("carrier", "band", &mut cfg.band);
    r.set_opt("carrier", "cells", &mut cfg.cells);
    r.set("soliton", "v", &mut cfg.velocity);
    r.set("soliton", "delta", &mut cfg.delta);
    r.set("soliton", "t", &mut cfg.soliton_time);
    r.set("soliton", "points", &mut cfg.soliton_points);
    r.set("numerics", "cutoff", &mut cfg.cutoff);
    r.set("numerics", "k_points", &mut cfg.k_points);
    r.set("numerics", "n_bands", &mut cfg.n_bands);
    r.set("numerics", "dx", &mut cfg.dx);
    r.set("numerics", "dt", &mut cfg.dt);
    r.set("numerics", "t_end_factor", &mut cfg.t_end_factor);
    r.set("numerics", "tail_widths", &mut cfg.tail_widths);
    r.set_opt("numerics", "half_length", &mut cfg.half_length);
    if let Some(raw) = r.get("numerics", "epsilon") {
        match parse_epsilons(raw) {
            Ok(e) => cfg.epsilons = e,
            Err(Error::Config(e)) => r.errors.extend(e.into_iter().map(|m| format!("[numerics] {m}"))),
            Err(e) => return Err(e),
        }
    }
    r.set_opt("acceptance", "rate_min", &mut cfg.rate_min);
    r.set_opt("acceptance", "rate_max", &mut cfg.rate_max);
    if let Some(d) = r.get("output", "dir") {
        cfg.out_dir = d.trim().to_string();
    }
    r.set("output", "snapshots", &mut cfg.snapshots);
    r.set("output", "eigenfunctions", &mut cfg.eigenfunctions);
    validate(&cfg, &mut r.errors);
    if r.errors.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Config(r.errors))
    }
}

/// Comma-separated list of positive values.
pub fn parse_epsilons(raw: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    let mut errors = Vec::new();
    for item in raw.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match item.parse::<f64>() {
            Ok(e) if e > 0.0 && e <= 0.2 => out.push(e),
            _ => errors.push(format!("epsilon `{item}` must be a number in (0, 0.2]")),
        }
    }
    if out.is_empty() && errors.is_empty() {
        errors.push("epsilon list is empty".into());
    }
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(Error::Config(errors))
    }
}

fn validate(c: &RunConfig, e: &mut Vec<String>) {
    if !(c.velocity.abs() < 1.0) {
        e.push(format!("[soliton] v = {} must satisfy |v| < 1", c.velocity));
    }
    if !(0.0..=PI).contains(&c.delta) {
        e.push(format!("[soliton] delta = {} must lie in [0, pi]", c.delta));
    }
    if c.soliton_points < 5 {
        e.push("[soliton] points must be at least 5".into());
    }
    if c.band == 0 {
        e.push("[carrier] band counts from 1".into());
    }
    if c.cells.is_some_and(|n| n < 1) {
        e.push("[carrier] cells must be positive".into());
    }
    if c.cutoff < 8 {
        e.push(format!("[numerics] cutoff = {} must be at least 8", c.cutoff));
    } else if c.n_bands + crate::bloch::TOP_BAND_MARGIN > 2 * c.cutoff + 1 {
        e.push(format!("[numerics] n_bands = {} too large for cutoff {}", c.n_bands, c.cutoff));
    }
    if c.n_bands == 0 || c.k_points < 2 {
        e.push("[numerics] n_bands must be positive and k_points at least 2".into());
    }
    for (k, v) in [("dx", c.dx), ("dt", c.dt), ("t_end_factor", c.t_end_factor), ("tail_widths", c.tail_widths)] {
        if !(v > 0.0 && v.is_finite()) {
            e.push(format!("[numerics] {k} = {v} must be positive"));
        }
    }
    if c.half_length.is_some_and(|l| !(l > 0.0)) {
        e.push("[numerics] half_length must be positive".into());
    }
    if let (Some(a), Some(b)) = (c.rate_min, c.rate_max) {
        if a > b {
            e.push(format!("[acceptance] rate_min = {a} exceeds rate_max = {b}"));
        }
    }
    if c.out_dir.is_empty() {
        e.push("[output] dir must not be empty".into());
    }
}
