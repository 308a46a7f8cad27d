//! Case configuration: flat `key = value` text grouped in `[section]`s.
//!
//! Every key has a default in [`DEFAULTS`]; unknown keys are rejected so a
//! typo cannot silently fall back to a default. The canonical text (all
//! keys, sorted) is what gets hashed for the run record.

use std::collections::BTreeMap;
use std::path::Path;

use crate::container::sha256_hex;
use crate::error::{Error, Result};

/// `(section.key, default, description)`.
pub const DEFAULTS: &[(&str, &str, &str)] = &[
    ("case.name", "case", "label used in reports"),
    ("case.kind", "single_wavenumber", "single_wavenumber | localized3d"),
    ("case.alpha", "1.0", "streamwise wavenumber (single_wavenumber)"),
    ("case.beta", "1.0", "spanwise wavenumber (single_wavenumber)"),
    ("case.re", "1000", "design Reynolds number"),
    ("case.n", "64", "Chebyshev intervals in y (N + 1 points)"),
    ("case.grid", "custom", "custom | desk | paper16 | paper32 (localized3d presets for nx, n, nz)"),
    ("case.nx", "16", "streamwise Fourier points"),
    ("case.nz", "16", "spanwise Fourier points"),
    ("case.lx", "6.283185307179586", "streamwise period"),
    ("case.lz", "6.283185307179586", "spanwise period"),
    ("input.amplitude", "1.0", "actuator amplitude A"),
    ("input.width", "0.7", "actuator horizontal width α"),
    ("input.width_y", "0.6", "actuator wall-normal width α_y"),
    ("input.optimal_t_max", "60", "search window for the optimal perturbation (single_wavenumber)"),
    ("snapshots.count", "500", "snapshots per run"),
    ("snapshots.schedule", "uniform", "uniform | two_phase"),
    ("snapshots.count_fraction", "0.25", "two_phase: share of snapshots in the first phase"),
    ("snapshots.time_fraction", "0.1", "two_phase: share of the horizon covered by the first phase"),
    ("snapshots.t_end", "auto", "horizon, or auto = first time the energy falls below decay_threshold"),
    ("snapshots.t_max", "2000", "upper limit for the auto horizon search"),
    ("snapshots.dt", "0.004", "RK4 step (reduced automatically when unstable)"),
    ("snapshots.decay_threshold", "1e-4", "terminal/initial energy ratio regarded as decayed"),
    ("models.pod_rank", "30", "POD modes kept"),
    ("models.output_projection_ranks", "4,8", "output projection ranks s (one adjoint run per mode)"),
    ("models.model_ranks", "1..15", "ROM ranks (comma list; a..b is inclusive)"),
    ("models.stream_adjoint", "false", "regenerate adjoint runs instead of storing them"),
    ("models.force_rank", "false", "allow cuts inside groups of equal Hankel singular values"),
    ("evaluation.impulse", "true", "impulse-response error 2-norms"),
    ("evaluation.freq", "true", "frequency responses and H∞ errors"),
    ("evaluation.spectrum", "true", "full and reduced spectra"),
    ("evaluation.bounds", "true", "exact balanced truncation and its error bounds (single_wavenumber)"),
    ("evaluation.traces", "true", "POD/balancing subspace traces"),
    ("evaluation.energy_ranks", "", "ROM ranks whose energy histories are written"),
    ("evaluation.re_sweep", "", "off-design Reynolds numbers"),
    ("evaluation.continuation_ranks", "12", "ROM ranks evaluated off-design"),
    ("evaluation.offdesign_energy", "false", "simulate the full model off-design and compare energies"),
    ("evaluation.b_projection", "false", "input projection norms for ranks 1..5"),
    ("evaluation.omega_min", "1e-3", "frequency sweep lower end"),
    ("evaluation.omega_max", "1e2", "frequency sweep upper end"),
    ("evaluation.omega_count", "400", "log-spaced sweep points"),
    ("run.seed", "20240917", "seed for randomized checks"),
    ("tolerances.pod_first_pair", "0.9045", "criterion 2 target"),
    ("tolerances.pod_first_pair_tol", "0.010", ""),
    ("tolerances.pod_three_pairs", "0.996", ""),
    ("tolerances.pod_three_pairs_tol", "0.003", ""),
    ("tolerances.op4_fraction", "0.983", ""),
    ("tolerances.op4_tol", "0.005", ""),
    ("tolerances.op8_fraction", "0.999", ""),
    ("tolerances.op8_tol", "0.001", ""),
    ("tolerances.hsv_rel", "0.01", "criterion 3: BPOD vs Lyapunov HSVs"),
    ("tolerances.error_ratio", "0.10", "criterion 3: BPOD vs exact BT impulse error"),
    ("tolerances.bound_slack", "0.02", "criterion 4: sweep slack on H∞ bounds"),
    ("tolerances.bound_max_rank", "15", "criterion 4: exact-BT ranks checked"),
    ("tolerances.peak_rel", "0.05", "criterion 5: resonant frequency"),
    ("tolerances.decade_ratio", "0.10", "criterion 5: POD-2 gain a decade below the peak"),
    ("tolerances.response_rel", "0.05", "criterion 5: 10-mode pointwise match"),
    ("tolerances.response_rank", "10", ""),
    ("tolerances.continuation_energy_rel", "0.20", "criterion 6: off-design peak energy"),
    ("tolerances.localized_five_modes", "0.9972", "criterion 7"),
    ("tolerances.localized_five_modes_tol", "0.003", ""),
    ("tolerances.traveling_pair", "0.0040", ""),
    ("tolerances.traveling_pair_tol", "0.001", ""),
    ("tolerances.hsv_pair_rel", "0.02", ""),
    ("tolerances.energy_peak_rel", "0.10", "criterion 7: 3-mode BPOD peak energy"),
    ("tolerances.pod_error_factor", "3.0", "criterion 7: POD vs BPOD peak error"),
    ("tolerances.hsv_invariance", "1e-6", "criterion 8"),
    ("tolerances.biorthogonality", "1e-8", "criterion 9"),
    ("tolerances.lyapunov", "1e-8", ""),
    ("tolerances.adjoint_identity", "1e-10", ""),
    ("tolerances.orthonormality", "1e-8", ""),
    ("tolerances.parseval", "1e-10", ""),
    ("tolerances.idempotence", "1e-10", ""),
    ("tolerances.rk4_ratio_lo", "12", ""),
    ("tolerances.rk4_ratio_hi", "20", ""),
    ("tolerances.streak_fraction", "0.9", "share of peak energy in streamwise-constant modes"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseKind {
    SingleWavenumber,
    Localized3d,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleKind {
    Uniform,
    TwoPhase,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseConfig {
    raw: BTreeMap<String, String>,
    pub name: String,
    pub kind: CaseKind,
    pub alpha: f64,
    pub beta: f64,
    pub re: f64,
    pub n: usize,
    pub nx: usize,
    pub nz: usize,
    pub lx: f64,
    pub lz: f64,
    pub amplitude: f64,
    pub width: f64,
    pub width_y: f64,
    pub optimal_t_max: f64,
    pub count: usize,
    pub schedule: ScheduleKind,
    pub count_fraction: f64,
    pub time_fraction: f64,
    pub t_end: Option<f64>,
    pub t_max: f64,
    pub dt: f64,
    pub decay_threshold: f64,
    pub pod_rank: usize,
    pub output_projection_ranks: Vec<usize>,
    pub model_ranks: Vec<usize>,
    pub stream_adjoint: bool,
    pub force_rank: bool,
    pub impulse: bool,
    pub freq: bool,
    pub spectrum: bool,
    pub bounds: bool,
    pub traces: bool,
    pub energy_ranks: Vec<usize>,
    pub re_sweep: Vec<f64>,
    pub continuation_ranks: Vec<usize>,
    pub offdesign_energy: bool,
    pub b_projection: bool,
    pub omega_min: f64,
    pub omega_max: f64,
    pub omega_count: usize,
    pub seed: u64,
    pub tolerances: BTreeMap<String, f64>,
}

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// Parse `[section]` / `key = value` text into `section.key` entries.
pub fn parse_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    let mut section = String::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| cfg_err(format!("line {}: unterminated section", no + 1)))?;
            section = name.trim().to_string();
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| cfg_err(format!("line {}: expected key = value", no + 1)))?;
        if section.is_empty() {
            return Err(cfg_err(format!("line {}: key outside a section", no + 1)));
        }
        let key = format!("{section}.{}", k.trim());
        if out.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(cfg_err(format!("line {}: duplicate key {key}", no + 1)));
        }
    }
    Ok(out)
}

fn default_of(key: &str) -> Option<&'static str> {
    DEFAULTS.iter().find(|d| d.0 == key).map(|d| d.1)
}

impl Default for CaseConfig {
    fn default() -> Self {
        Self::from_map(BTreeMap::new()).expect("defaults are valid")
    }
}

impl CaseConfig {
    pub fn from_text(text: &str) -> Result<Self> {
        Self::from_map(parse_text(text)?)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| cfg_err(format!("{}: {e}", path.display())))?;
        Self::from_text(&text)
    }

    /// Apply `section.key=value` overrides.
    pub fn with_overrides<'a>(&self, pairs: impl IntoIterator<Item = (&'a str, String)>) -> Result<Self> {
        let mut raw = self.raw.clone();
        for (k, v) in pairs {
            raw.insert(k.to_string(), v);
        }
        Self::from_map(raw)
    }

    pub fn from_map(mut raw: BTreeMap<String, String>) -> Result<Self> {
        for k in raw.keys() {
            if default_of(k).is_none() {
                return Err(cfg_err(format!("unknown key '{k}'")));
            }
        }
        for (k, v, _) in DEFAULTS {
            raw.entry(k.to_string()).or_insert_with(|| v.to_string());
        }
        let g = |k: &str| raw[k].as_str();
        let f = |k: &str| -> Result<f64> { g(k).parse().map_err(|_| cfg_err(format!("{k}: expected a number, got '{}'", g(k)))) };
        let u = |k: &str| -> Result<usize> { g(k).parse().map_err(|_| cfg_err(format!("{k}: expected an integer, got '{}'", g(k)))) };
        let b = |k: &str| -> Result<bool> {
            match g(k) {
                "true" | "yes" | "1" => Ok(true),
                "false" | "no" | "0" => Ok(false),
                s => Err(cfg_err(format!("{k}: expected true/false, got '{s}'"))),
            }
        };
        // comma-separated integers; `a..b` expands to the inclusive range
        let list_u = |k: &str| -> Result<Vec<usize>> {
            let bad = |s: &str| cfg_err(format!("{k}: bad entry '{s}'"));
            let mut out = Vec::new();
            for s in g(k).split(',').map(str::trim).filter(|s| !s.is_empty()) {
                match s.split_once("..") {
                    Some((a, b)) => {
                        let (a, b): (usize, usize) = (a.trim().parse().map_err(|_| bad(s))?, b.trim().parse().map_err(|_| bad(s))?);
                        out.extend(a..=b);
                    }
                    None => out.push(s.parse().map_err(|_| bad(s))?),
                }
            }
            Ok(out)
        };
        let list_f = |k: &str| -> Result<Vec<f64>> {
            g(k).split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| s.parse().map_err(|_| cfg_err(format!("{k}: bad entry '{s}'"))))
                .collect()
        };
        let kind = match g("case.kind") {
            "single_wavenumber" => CaseKind::SingleWavenumber,
            "localized3d" => CaseKind::Localized3d,
            s => return Err(cfg_err(format!("case.kind: unknown '{s}'"))),
        };
        let (mut nx, mut n, mut nz) = (u("case.nx")?, u("case.n")?, u("case.nz")?);
        match g("case.grid") {
            "custom" => {}
            "desk" => (nx, n, nz) = (16, 32, 16),
            "paper16" => (nx, n, nz) = (16, 64, 16),
            "paper32" => (nx, n, nz) = (32, 64, 32),
            s => return Err(cfg_err(format!("case.grid: unknown preset '{s}'"))),
        }
        let schedule = match g("snapshots.schedule") {
            "uniform" => ScheduleKind::Uniform,
            "two_phase" => ScheduleKind::TwoPhase,
            s => return Err(cfg_err(format!("snapshots.schedule: unknown '{s}'"))),
        };
        let t_end = match g("snapshots.t_end") {
            "auto" => None,
            _ => Some(f("snapshots.t_end")?),
        };
        let tolerances = DEFAULTS
            .iter()
            .filter(|d| d.0.starts_with("tolerances."))
            .map(|d| Ok((d.0["tolerances.".len()..].to_string(), f(d.0)?)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        let cfg = CaseConfig {
            name: g("case.name").to_string(),
            kind,
            alpha: f("case.alpha")?,
            beta: f("case.beta")?,
            re: f("case.re")?,
            n,
            nx,
            nz,
            lx: f("case.lx")?,
            lz: f("case.lz")?,
            amplitude: f("input.amplitude")?,
            width: f("input.width")?,
            width_y: f("input.width_y")?,
            optimal_t_max: f("input.optimal_t_max")?,
            count: u("snapshots.count")?,
            schedule,
            count_fraction: f("snapshots.count_fraction")?,
            time_fraction: f("snapshots.time_fraction")?,
            t_end,
            t_max: f("snapshots.t_max")?,
            dt: f("snapshots.dt")?,
            decay_threshold: f("snapshots.decay_threshold")?,
            pod_rank: u("models.pod_rank")?,
            output_projection_ranks: list_u("models.output_projection_ranks")?,
            model_ranks: list_u("models.model_ranks")?,
            stream_adjoint: b("models.stream_adjoint")?,
            force_rank: b("models.force_rank")?,
            impulse: b("evaluation.impulse")?,
            freq: b("evaluation.freq")?,
            spectrum: b("evaluation.spectrum")?,
            bounds: b("evaluation.bounds")?,
            traces: b("evaluation.traces")?,
            energy_ranks: list_u("evaluation.energy_ranks")?,
            re_sweep: list_f("evaluation.re_sweep")?,
            continuation_ranks: list_u("evaluation.continuation_ranks")?,
            offdesign_energy: b("evaluation.offdesign_energy")?,
            b_projection: b("evaluation.b_projection")?,
            omega_min: f("evaluation.omega_min")?,
            omega_max: f("evaluation.omega_max")?,
            omega_count: u("evaluation.omega_count")?,
            seed: g("run.seed").parse().map_err(|_| cfg_err("run.seed: expected an integer"))?,
            tolerances,
            raw,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let positive = [
            ("case.re", self.re),
            ("case.lx", self.lx),
            ("case.lz", self.lz),
            ("input.amplitude", self.amplitude),
            ("input.width", self.width),
            ("input.width_y", self.width_y),
            ("input.optimal_t_max", self.optimal_t_max),
            ("snapshots.dt", self.dt),
            ("snapshots.t_max", self.t_max),
            ("snapshots.decay_threshold", self.decay_threshold),
            ("evaluation.omega_min", self.omega_min),
        ];
        for (k, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(cfg_err(format!("{k} must be positive")));
            }
        }
        if self.kind == CaseKind::SingleWavenumber && !(self.alpha >= 0.0 && self.beta >= 0.0 && self.alpha + self.beta > 0.0) {
            return Err(cfg_err("wavenumbers must be non-negative and not both zero"));
        }
        if self.n < 4 {
            return Err(cfg_err("case.n must be at least 4"));
        }
        if self.count < 2 {
            return Err(cfg_err("snapshots.count must be at least 2"));
        }
        if let Some(t) = self.t_end {
            if !(t > 0.0) {
                return Err(cfg_err("snapshots.t_end must be positive"));
            }
        }
        if !(self.omega_max > self.omega_min) || self.omega_count < 2 {
            return Err(cfg_err("frequency sweep needs omega_max > omega_min and ≥ 2 points"));
        }
        for (k, v) in [
            ("models.output_projection_ranks", &self.output_projection_ranks),
            ("models.model_ranks", &self.model_ranks),
            ("evaluation.energy_ranks", &self.energy_ranks),
            ("evaluation.continuation_ranks", &self.continuation_ranks),
        ] {
            if v.contains(&0) || v.windows(2).any(|w| w[0] >= w[1]) {
                return Err(cfg_err(format!("{k} must be positive and strictly ascending")));
            }
        }
        if self.re_sweep.iter().any(|r| !(*r > 0.0)) {
            return Err(cfg_err("evaluation.re_sweep values must be positive"));
        }
        if self.pod_rank == 0 {
            return Err(cfg_err("models.pod_rank must be positive"));
        }
        if let Some(&s) = self.output_projection_ranks.last() {
            if s > self.pod_rank {
                return Err(cfg_err("output projection rank exceeds models.pod_rank"));
            }
        }
        Ok(())
    }

    pub fn tol(&self, key: &str) -> f64 {
        self.tolerances[key]
    }

    pub fn get_raw(&self, key: &str) -> Option<&str> {
        self.raw.get(key).map(String::as_str)
    }

    /// All keys with their effective values, grouped by section.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut current = "";
        for (k, v) in &self.raw {
            let (sec, key) = k.split_once('.').unwrap();
            if sec != current {
                if !out.is_empty() {
                    out.push('\n');
                }
                out.push_str(&format!("[{sec}]\n"));
                current = sec;
            }
            out.push_str(&format!("{key} = {v}\n"));
        }
        out
    }

    pub fn hash(&self) -> String {
        sha256_hex(self.to_text().as_bytes())
    }

    /// Hash of the keys whose prefixes are listed, for stage skipping.
    pub fn hash_of(&self, prefixes: &[&str]) -> String {
        let text: String = self
            .raw
            .iter()
            .filter(|(k, _)| prefixes.iter().any(|p| k.starts_with(p)))
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect();
        sha256_hex(text.as_bytes())
    }
}

/// Documented defaults as a config file.
pub fn default_text() -> String {
    let mut out = String::new();
    let mut current = "";
    for (k, v, doc) in DEFAULTS {
        let (sec, key) = k.split_once('.').unwrap();
        if sec != current {
            if !out.is_empty() {
                out.push('\n');
            }
            out.push_str(&format!("[{sec}]\n"));
            current = sec;
        }
        if doc.is_empty() {
            out.push_str(&format!("{key} = {v}\n"));
        } else {
            out.push_str(&format!("{key} = {v}  # {doc}\n"));
        }
    }
    out
}
