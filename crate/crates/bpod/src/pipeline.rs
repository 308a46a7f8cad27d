//! Configuration-driven runner: build → simulate → pod → adjoint → bpod →
//! reduce → evaluate, with every artifact recorded in a plain-text manifest.
//!
//! Each stage is keyed by a hash of the configuration keys it depends on.
//! A re-run skips a stage whose hash matches and whose artifacts are intact,
//! loading its results from disk instead.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use crate::analysis::{self, FullModel, FullOutput, ProjectionMode, RomTf, TransferFunction};
use crate::balancing::{self, BalancedRealization, ReducedOrderModel, TIE_TOL};
use crate::channel::{self, Horizon, WavenumberPair};
use crate::config::{CaseConfig, CaseKind, ScheduleKind};
use crate::container::{self, sha256_hex, Record};
use crate::dynamics::{self, Schedule, SnapshotKind, SnapshotSet, StepOptions};
use crate::error::{Error, Result};
use crate::field3d::{self, Box3D, Spectral3D};
use crate::linalg::C64;
use crate::modal::{self, ModeBasis};
use crate::report::{self, ErrorRow, Table};
use crate::spectral;
use crate::system::{BlockSystem, Blocks, Field};

pub const MANIFEST: &str = "manifest.txt";
pub const FORMAT: &str = "BPR1 v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Build,
    Simulate,
    Pod,
    Adjoint,
    Bpod,
    Reduce,
    Evaluate,
}

impl Stage {
    pub const ALL: [Stage; 7] =
        [Stage::Build, Stage::Simulate, Stage::Pod, Stage::Adjoint, Stage::Bpod, Stage::Reduce, Stage::Evaluate];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Build => "build",
            Stage::Simulate => "simulate",
            Stage::Pod => "pod",
            Stage::Adjoint => "adjoint",
            Stage::Bpod => "bpod",
            Stage::Reduce => "reduce",
            Stage::Evaluate => "evaluate",
        }
    }

    pub fn parse(s: &str) -> Option<Stage> {
        Stage::ALL.into_iter().find(|st| st.name() == s)
    }

    /// Configuration keys (by prefix) the stage's output depends on.
    fn prefixes(self) -> &'static [&'static str] {
        match self {
            Stage::Build => &["case.", "input."],
            Stage::Simulate => &["case.", "input.", "snapshots."],
            Stage::Pod => &["case.", "input.", "snapshots.", "models.pod_rank"],
            Stage::Adjoint | Stage::Bpod => {
                &["case.", "input.", "snapshots.", "models.pod_rank", "models.output_projection_ranks", "models.stream_adjoint"]
            }
            Stage::Reduce => &["case.", "input.", "snapshots.", "models.", "evaluation.continuation_ranks", "evaluation.energy_ranks", "evaluation.bounds"],
            Stage::Evaluate => &["case.", "input.", "snapshots.", "models.", "evaluation.", "run."],
        }
    }
}

/// `key: value` run record.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    pub entries: BTreeMap<String, String>,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST);
        if !path.exists() {
            return Ok(Manifest::default());
        }
        let text = std::fs::read_to_string(&path)?;
        let mut entries = BTreeMap::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (k, v) = line.split_once(": ").ok_or_else(|| Error::Format(format!("bad manifest line '{line}'")))?;
            entries.insert(k.to_string(), v.to_string());
        }
        Ok(Manifest { entries })
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let text: String = self.entries.iter().map(|(k, v)| format!("{k}: {v}\n")).collect();
        write_atomic(&dir.join(MANIFEST), text.as_bytes())
    }

    pub fn get(&self, k: &str) -> Option<&str> {
        self.entries.get(k).map(String::as_str)
    }

    pub fn set(&mut self, k: impl Into<String>, v: impl ToString) {
        self.entries.insert(k.into(), v.to_string().replace('\n', " "));
    }

    /// Relative paths of every recorded artifact with its digest.
    pub fn artifacts(&self) -> Vec<(String, String)> {
        self.entries
            .iter()
            .filter_map(|(k, v)| k.strip_prefix("artifact.").map(|p| (p.to_string(), v.clone())))
            .collect()
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(d) = path.parent() {
        std::fs::create_dir_all(d)?;
    }
    let tmp = path.with_extension("partial");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub until: Stage,
    pub quiet: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { until: Stage::Evaluate, quiet: false }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunSummary {
    /// Stage with `true` when it was computed, `false` when loaded.
    pub stages: Vec<(Stage, bool)>,
    pub notes: Vec<String>,
}

struct Pipeline<'a> {
    cfg: &'a CaseConfig,
    dir: PathBuf,
    opts: RunOptions,
    manifest: Manifest,
    summary: BTreeMap<String, String>,
    written: Vec<String>,
    notes: Vec<String>,
    system: Option<BlockSystem>,
    bx: Option<Box3D>,
    direct: Option<SnapshotSet>,
    pod: Option<ModeBasis>,
    adjoint: Option<SnapshotSet>,
    bpod: BTreeMap<usize, ModeBasis>,
    roms: Vec<(String, ReducedOrderModel)>,
    exact_hsv: Option<Vec<f64>>,
}

pub fn pod_label(r: usize) -> String {
    format!("pod_r{r}")
}

pub fn bpod_label(s: usize, r: usize) -> String {
    format!("bpod_s{s}_r{r}")
}

pub fn exact_label(r: usize) -> String {
    format!("exact_bt_r{r}")
}

/// Run the pipeline up to and including `opts.until`.
pub fn run_pipeline(cfg: &CaseConfig, dir: &Path, opts: RunOptions) -> Result<RunSummary> {
    std::fs::create_dir_all(dir)?;
    let mut manifest = Manifest::load(dir)?;
    if let Some(f) = manifest.get("format") {
        if f != FORMAT {
            return Err(Error::Format(format!("workdir was written as '{f}', this build writes '{FORMAT}'")));
        }
    }
    manifest.set("format", FORMAT);
    manifest.set("version", format!("bpod {}", env!("CARGO_PKG_VERSION")));
    manifest.set("case", &cfg.name);
    manifest.set("kind", kind_name(cfg.kind));
    manifest.set("config_hash", cfg.hash());
    write_atomic(&dir.join("config.cfg"), cfg.to_text().as_bytes())?;
    let summary = read_summary(dir)?;
    let mut p = Pipeline {
        cfg,
        dir: dir.to_path_buf(),
        opts,
        manifest,
        summary,
        written: Vec::new(),
        notes: Vec::new(),
        system: None,
        bx: None,
        direct: None,
        pod: None,
        adjoint: None,
        bpod: BTreeMap::new(),
        roms: Vec::new(),
        exact_hsv: None,
    };
    p.manifest.save(dir)?;
    let mut out = RunSummary::default();
    for stage in Stage::ALL {
        if stage > opts.until {
            break;
        }
        let ran = p.stage(stage).map_err(|e| Error::Stage { stage: stage.name().into(), source: Box::new(e) })?;
        out.stages.push((stage, ran));
    }
    out.notes = p.notes;
    Ok(out)
}

pub fn kind_name(k: CaseKind) -> &'static str {
    match k {
        CaseKind::SingleWavenumber => "single_wavenumber",
        CaseKind::Localized3d => "localized3d",
    }
}

fn read_summary(dir: &Path) -> Result<BTreeMap<String, String>> {
    let path = dir.join("reports/summary.txt");
    if !path.exists() {
        return Ok(BTreeMap::new());
    }
    Ok(std::fs::read_to_string(path)?
        .lines()
        .filter_map(|l| l.split_once(": ").map(|(k, v)| (k.to_string(), v.to_string())))
        .collect())
}

/// Scalar diagnostics written by the pipeline.
pub fn load_summary(dir: &Path) -> Result<BTreeMap<String, String>> {
    read_summary(dir)
}

impl Pipeline<'_> {
    fn log(&self, msg: &str) {
        if !self.opts.quiet {
            eprintln!("[{}] {msg}", self.cfg.name);
        }
    }

    fn note(&mut self, msg: String) {
        self.log(&msg);
        self.notes.push(msg);
    }

    fn stage_hash(&self, stage: Stage) -> String {
        sha256_hex(format!("{FORMAT}|{}|{}", stage.name(), self.cfg.hash_of(stage.prefixes())).as_bytes())
    }

    fn artifacts_intact(&self, stage: Stage) -> bool {
        let Some(list) = self.manifest.get(&format!("stage.{}.artifacts", stage.name())) else {
            return false;
        };
        list.split(',').filter(|s| !s.is_empty()).all(|rel| {
            let Some(want) = self.manifest.get(&format!("artifact.{rel}")) else { return false };
            std::fs::read(self.dir.join(rel)).map(|b| sha256_hex(&b) == want).unwrap_or(false)
        })
    }

    fn put(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.dir.join(rel), bytes)?;
        self.manifest.set(format!("artifact.{rel}"), sha256_hex(bytes));
        if !self.written.iter().any(|w| w == rel) {
            self.written.push(rel.to_string());
        }
        Ok(())
    }

    fn put_record(&mut self, rel: &str, rec: &Record) -> Result<()> {
        self.put(rel, &rec.to_bytes())
    }

    fn put_text(&mut self, rel: &str, text: &str) -> Result<()> {
        self.put(rel, text.as_bytes())
    }

    fn record(&self, rel: &str) -> Result<Record> {
        Record::read(&self.dir.join(rel))
    }

    fn sum(&mut self, k: &str, v: impl ToString) {
        self.summary.insert(k.to_string(), v.to_string());
    }

    fn save_summary(&mut self) -> Result<()> {
        let text: String = self.summary.iter().map(|(k, v)| format!("{k}: {v}\n")).collect();
        self.put_text("reports/summary.txt", &text)
    }

    /// Returns whether the stage was computed.
    fn stage(&mut self, stage: Stage) -> Result<bool> {
        let key = format!("stage.{}", stage.name());
        let hash = self.stage_hash(stage);
        if self.manifest.get(&key) == Some(hash.as_str()) && self.artifacts_intact(stage) {
            self.log(&format!("{}: up to date, loading", stage.name()));
            self.load(stage)?;
            return Ok(false);
        }
        self.manifest.set(&key, "incomplete");
        self.manifest.entries.remove(&format!("{key}.error"));
        self.manifest.save(&self.dir)?;
        self.written.clear();
        self.log(&format!("{}: running", stage.name()));
        let res = self.compute(stage).and_then(|_| self.save_summary());
        match res {
            Ok(()) => {
                let list = self.written.join(",");
                self.manifest.set(format!("{key}.artifacts"), list);
                self.manifest.set(&key, hash);
                self.manifest.save(&self.dir)?;
                Ok(true)
            }
            Err(e) => {
                self.manifest.set(&key, "failed");
                self.manifest.set(format!("{key}.error"), &e);
                self.manifest.save(&self.dir)?;
                Err(e)
            }
        }
    }

    fn compute(&mut self, stage: Stage) -> Result<()> {
        match stage {
            Stage::Build => self.build(),
            Stage::Simulate => self.simulate(),
            Stage::Pod => self.run_pod(),
            Stage::Adjoint => self.run_adjoint(),
            Stage::Bpod => self.run_bpod(),
            Stage::Reduce => self.reduce(),
            Stage::Evaluate => self.evaluate(),
        }
    }

    fn load(&mut self, stage: Stage) -> Result<()> {
        match stage {
            Stage::Build => {
                let input = container::snapshots_from_record(&self.record("snapshots/input.bpr")?)?;
                self.assemble_system(input.data)?;
            }
            Stage::Simulate => self.direct = Some(container::snapshots_from_record(&self.record("snapshots/direct.bpr")?)?),
            Stage::Pod => self.pod = Some(container::basis_from_record(&self.record("modes/pod.bpr")?)?),
            Stage::Adjoint => {
                if self.dir.join("snapshots/adjoint.bpr").exists() && !self.cfg.stream_adjoint {
                    self.adjoint = Some(container::snapshots_from_record(&self.record("snapshots/adjoint.bpr")?)?);
                }
            }
            Stage::Bpod => {
                for &s in &self.cfg.output_projection_ranks {
                    let b = container::basis_from_record(&self.record(&format!("modes/bpod_s{s}.bpr"))?)?;
                    self.bpod.insert(s, b);
                }
            }
            Stage::Reduce => {
                let list = self.manifest.get("stage.reduce.artifacts").unwrap_or("").to_string();
                for rel in list.split(',').filter(|r| r.starts_with("roms/")) {
                    let label = rel.trim_start_matches("roms/").trim_end_matches(".bpr").to_string();
                    let rom = container::rom_from_record(&self.record(rel)?)?;
                    self.roms.push((label, rom));
                }
                let hsv = self.dir.join("reports/hsv_exact.csv");
                if hsv.exists() {
                    self.exact_hsv = Some(Table::parse(&std::fs::read_to_string(hsv)?)?.floats("value")?);
                }
            }
            Stage::Evaluate => {}
        }
        Ok(())
    }

    fn system(&self) -> &BlockSystem {
        self.system.as_ref().expect("build stage ran")
    }

    fn direct(&self) -> &SnapshotSet {
        self.direct.as_ref().expect("simulate stage ran")
    }

    fn pod(&self) -> &ModeBasis {
        self.pod.as_ref().expect("pod stage ran")
    }

    fn step_options(&self) -> StepOptions {
        StepOptions { dt: self.cfg.dt, auto_dt: true, decay_threshold: self.cfg.decay_threshold }
    }

    fn schedule(&self) -> Result<Schedule> {
        Schedule::from_times(self.direct().times.clone())
    }

    fn assemble_system(&mut self, input: Blocks) -> Result<()> {
        let c = self.cfg;
        let grid = spectral::chebyshev_grid(c.n)?;
        match c.kind {
            CaseKind::SingleWavenumber => {
                let model = channel::build_os_squire(WavenumberPair::new(c.alpha, c.beta), c.re, &grid)?;
                let model = model.with_input(input.0.into_iter().next().ok_or_else(|| Error::dim("empty input"))?)?;
                self.system = Some(BlockSystem::from_model(&model, Field::Real));
            }
            CaseKind::Localized3d => {
                let bx = Box3D::new(c.lx, c.lz, c.nx, c.nz, grid)?;
                let spec = Spectral3D::from_blocks(&bx, &input, 0)?;
                self.system = Some(field3d::build_system(&bx, c.re, &spec)?);
                self.bx = Some(bx);
            }
        }
        Ok(())
    }

    fn build(&mut self) -> Result<()> {
        let c = self.cfg;
        let grid = spectral::chebyshev_grid(c.n)?;
        let input = match c.kind {
            CaseKind::SingleWavenumber => {
                let model = channel::build_os_squire(WavenumberPair::new(c.alpha, c.beta), c.re, &grid)?;
                let opt = channel::optimal_perturbation(&model, Horizon::Global { t_max: c.optimal_t_max })?;
                self.sum("build.g_max", opt.g_opt);
                self.sum("build.t_opt", opt.t_opt);
                let csv = report::series_csv("t", &opt.curve.times, &[("G".into(), opt.curve.gain.clone())]);
                self.put_text("reports/growth.csv", &csv)?;
                Blocks::single(crate::linalg::CMat::from_column_slice(opt.state.len(), 1, opt.state.as_slice()))
            }
            CaseKind::Localized3d => {
                let bx = Box3D::new(c.lx, c.lz, c.nx, c.nz, grid)?;
                let spec = field3d::actuator_spectrum(&bx, c.amplitude, c.width, c.width_y)?;
                let field = field3d::from_spectral(&spec);
                self.put_record("snapshots/initial_field.bpr", &container::field_to_record(&field))?;
                self.put_text("reports/slice_initial.csv", &field.slice_csv(bx.grid.n / 2))?;
                self.sum("build.blocks", bx.wavenumbers().len());
                self.sum("build.physical_states", bx.n_physical_states());
                spec.to_blocks()
            }
        };
        let set = SnapshotSet {
            data: input.clone(),
            times: vec![0.0],
            weights: vec![1.0],
            kind: SnapshotKind::Direct,
            source: "input".into(),
            runs: 1,
            dt: 0.0,
            decay_threshold: 0.0,
            terminal_ratio: 1.0,
        };
        self.put_record("snapshots/input.bpr", &container::snapshots_to_record(&set))?;
        self.assemble_system(input)?;
        let n = self.system().n_state();
        self.sum("build.n_state", n);
        self.sum("build.abscissa", self.system().abscissa()?);
        Ok(())
    }

    fn simulate(&mut self) -> Result<()> {
        let c = self.cfg;
        let t_end = match c.t_end {
            Some(t) => t,
            None => dynamics::decay_horizon(self.system(), 0, c.decay_threshold, 1.0, c.t_max)?.ok_or_else(|| {
                Error::invalid(format!("response has not decayed to {} by t = {}", c.decay_threshold, c.t_max))
            })?,
        };
        let sched = match c.schedule {
            ScheduleKind::Uniform => Schedule::uniform(c.count, t_end)?,
            ScheduleKind::TwoPhase => Schedule::two_phase(c.count, t_end, c.count_fraction, c.time_fraction)?,
        };
        let set = dynamics::direct_impulse_snapshots(self.system(), 0, &sched, &self.step_options())?;
        self.sum("simulate.t_end", t_end);
        self.sum("simulate.dt", set.dt);
        self.sum("simulate.terminal_ratio", set.terminal_ratio);
        if !set.decayed() {
            self.note(format!("direct run ends at {:.3e} of its initial energy (threshold {})", set.terminal_ratio, c.decay_threshold));
        }
        self.put_record("snapshots/direct.bpr", &container::snapshots_to_record(&set))?;
        self.direct = Some(set);
        Ok(())
    }

    fn run_pod(&mut self) -> Result<()> {
        let e = self.system().e_weights();
        let basis = modal::pod(self.direct(), &e, Field::Real, Some(self.cfg.pod_rank))?;
        if basis.truncated {
            self.note(format!("only {} POD modes are numerically significant", basis.rank()));
        }
        self.put_record("modes/pod.bpr", &container::basis_to_record(&basis))?;
        self.put_text("reports/pod_values.csv", &report::values_csv(&basis.values))?;
        self.sum("pod.rank", basis.rank());
        self.pod = Some(basis);
        Ok(())
    }

    fn run_adjoint(&mut self) -> Result<()> {
        let Some(&s) = self.cfg.output_projection_ranks.last() else { return Ok(()) };
        if self.cfg.stream_adjoint {
            self.sum("adjoint.mode", "streamed");
            return Ok(());
        }
        let set = dynamics::adjoint_impulse_snapshots(self.system(), self.pod(), s, &self.schedule()?, &self.step_options())?;
        self.sum("adjoint.mode", "stored");
        self.sum("adjoint.runs", set.runs);
        self.sum("adjoint.terminal_ratio", set.terminal_ratio);
        self.put_record("snapshots/adjoint.bpr", &container::snapshots_to_record(&set))?;
        self.adjoint = Some(set);
        Ok(())
    }

    fn run_bpod(&mut self) -> Result<()> {
        let m = self.system().m_weights();
        let r = self.cfg.pod_rank;
        for s in self.cfg.output_projection_ranks.clone() {
            let (basis, diag) = match &self.adjoint {
                Some(y) => balancing::bpod_with_field(self.direct(), &y.first_runs(s)?, &m, r, Field::Real)?,
                None => {
                    let system = self.system();
                    let z0 = dynamics::adjoint_initial_conditions(system, self.pod(), s)?;
                    let ops = system.adjoint()?;
                    let sched = self.schedule()?;
                    let opts = self.step_options();
                    let quiet = self.opts.quiet;
                    let mut calls = 0;
                    let res = balancing::bpod_streamed(
                        self.direct(),
                        s,
                        |j| {
                            calls += 1;
                            if !quiet && calls <= s {
                                eprintln!("[{}] adjoint run {}/{s}", self.cfg.name, j + 1);
                            }
                            dynamics::adjoint_run(system, &ops, &z0.columns(j, 1), &sched, &opts, "theta").map(|r| r.data)
                        },
                        &m,
                        r,
                        Field::Real,
                    )?;
                    res
                }
            };
            self.sum(&format!("bpod_s{s}.numerical_rank"), diag.numerical_rank);
            self.sum(&format!("bpod_s{s}.tie_warning"), diag.tie_warning);
            self.put_record(&format!("modes/bpod_s{s}.bpr"), &container::basis_to_record(&basis))?;
            self.put_text(&format!("reports/hsv_s{s}.csv"), &report::values_csv(&basis.values))?;
            self.bpod.insert(s, basis);
        }
        Ok(())
    }

    fn rom_ranks(&self) -> Vec<usize> {
        let c = self.cfg;
        let set: BTreeSet<usize> = c.model_ranks.iter().chain(&c.continuation_ranks).chain(&c.energy_ranks).copied().collect();
        set.into_iter().collect()
    }

    fn cut(&self, values: &[f64], r: usize) -> usize {
        if self.cfg.force_rank {
            r
        } else {
            balancing::pair_boundary(values, r, TIE_TOL)
        }
    }

    fn reduce(&mut self) -> Result<()> {
        let ranks = self.rom_ranks();
        let mut roms: Vec<(String, ReducedOrderModel)> = Vec::new();
        let system = self.system.clone().expect("build stage ran");
        let pod = self.pod().clone();
        for &r in &ranks {
            if r <= pod.rank() {
                roms.push((pod_label(r), balancing::reduce(&system, &pod, r, None)?));
            } else {
                self.note(format!("POD rank {r} unavailable ({} modes)", pod.rank()));
            }
        }
        for (&s, basis) in &self.bpod.clone() {
            let op = modal::output_projection(&pod, s)?;
            for &r in &ranks {
                let rr = self.cut(&basis.values, r);
                if rr != r {
                    self.note(format!("BPOD (s = {s}) rank {r} splits a group of equal HSVs; cut at {rr}"));
                }
                if rr > basis.rank() {
                    self.note(format!("BPOD (s = {s}) rank {rr} unavailable ({} modes)", basis.rank()));
                    continue;
                }
                let label = bpod_label(s, rr);
                if roms.iter().all(|(l, _)| *l != label) {
                    roms.push((label, balancing::reduce(&system, basis, rr, Some(&op))?));
                }
            }
        }
        if self.cfg.kind == CaseKind::SingleWavenumber && self.cfg.bounds {
            let bal = BalancedRealization::new(&system)?;
            let (rc, ro) = bal.residuals();
            self.sum("exact.lyapunov_residual_c", rc);
            self.sum("exact.lyapunov_residual_o", ro);
            self.put_text("reports/hsv_exact.csv", &report::values_csv(bal.hsv()))?;
            for &r in &ranks {
                let rr = self.cut(bal.hsv(), r).min(bal.max_rank());
                let label = exact_label(rr);
                if roms.iter().all(|(l, _)| *l != label) {
                    roms.push((label, bal.truncate(rr)?));
                }
            }
            self.exact_hsv = Some(bal.hsv().to_vec());
        }
        for (label, rom) in &roms {
            self.put_record(&format!("roms/{label}.bpr"), &container::rom_to_record(rom))?;
        }
        self.roms = roms;
        Ok(())
    }

    fn rom(&self, label: &str) -> Option<&ReducedOrderModel> {
        self.roms.iter().find(|(l, _)| l == label).map(|(_, r)| r)
    }

    fn evaluate(&mut self) -> Result<()> {
        let c = self.cfg;
        let system = self.system.clone().expect("build stage ran");
        let direct = self.direct().clone();
        let pod = self.pod().clone();
        let e = system.e_weights();
        let times = direct.times.clone();
        let s_max = c.output_projection_ranks.last().copied();
        let roms = self.roms.clone();

        // reduced impulse responses, shared by several reports
        let mut coeffs: BTreeMap<String, crate::linalg::CMat> = BTreeMap::new();
        if c.impulse || !c.energy_ranks.is_empty() {
            for (label, rom) in &roms {
                coeffs.insert(label.clone(), analysis::rom_impulse(rom, 0, &times)?);
            }
        }

        let full_energy = analysis::snapshot_energy(&direct, &e);
        let (k_peak, e_peak) = full_energy.iter().enumerate().fold((0, f64::NEG_INFINITY), |a, (k, &v)| if v > a.1 { (k, v) } else { a });
        self.sum("evaluate.energy_peak", e_peak);
        self.sum("evaluate.energy_peak_time", times[k_peak]);
        self.sum("evaluate.energy_ratio_final", full_energy.last().unwrap() / full_energy[0]);
        if let Some(bx) = self.bx.clone() {
            let frac = field3d::streamwise_constant_fraction(&system, &direct.data, k_peak);
            self.sum("evaluate.streak_fraction_at_peak", frac);
            let spec = Spectral3D::from_blocks(&bx, &direct.state(k_peak), 0)?;
            let field = field3d::from_spectral(&spec);
            self.put_text("reports/slice_peak.csv", &field.slice_csv(bx.grid.n / 2))?;
            self.put_record("snapshots/peak_field.bpr", &container::field_to_record(&field))?;
        }

        let mut energy_series = vec![("full".to_string(), full_energy.clone())];
        for &r in &c.energy_ranks {
            let mut labels = vec![pod_label(r)];
            if let Some(s) = s_max {
                labels.push(bpod_label(s, r));
            }
            for l in labels {
                if let (Some(rom), Some(a)) = (self.rom(&l), coeffs.get(&l)) {
                    energy_series.push((l.clone(), analysis::rom_energy(rom, &e, a)));
                }
            }
        }
        self.put_text("reports/energy.csv", &report::energy_csv(&times, &energy_series))?;

        if c.spectrum || !c.re_sweep.is_empty() {
            let mut sets: Vec<(String, Vec<C64>)> = vec![("full".into(), full_spectrum(&system)?)];
            if c.spectrum {
                for (label, rom) in &roms {
                    sets.push((label.clone(), rom.spectrum()?));
                }
            }
            let mut cont = String::from("system,re,abscissa,stable\n");
            let mut push = |label: &str, re: f64, a: f64| cont.push_str(&format!("{label},{re},{a:e},{}\n", a < 0.0));
            push("full", c.re, system.abscissa()?);
            for (label, rom) in &roms {
                push(label, c.re, rom.abscissa()?);
            }
            for &re in &c.re_sweep {
                let off = system.at_reynolds(re)?;
                push("full", re, off.abscissa()?);
                sets.push((format!("full@{re}"), full_spectrum(&off)?));
                for &r in &c.continuation_ranks {
                    for (label, rom) in roms.iter().filter(|(l, _)| rank_of(l) == Some(r)) {
                        let moved = analysis::reynolds_continuation(rom, re)?;
                        push(label, re, moved.abscissa()?);
                        sets.push((format!("{label}@{re}"), moved.spectrum()?));
                    }
                }
            }
            if c.spectrum {
                self.put_text("reports/spectrum.csv", &report::spectrum_csv(&sets))?;
            }
            self.put_text("reports/continuation.csv", &cont)?;
        }

        if c.offdesign_energy {
            for &re in &c.re_sweep {
                let off = system.at_reynolds(re)?;
                self.log(&format!("off-design run at Re = {re}"));
                let set = dynamics::direct_impulse_snapshots(&off, 0, &self.schedule()?, &self.step_options())?;
                let mut series = vec![("full".to_string(), analysis::snapshot_energy(&set, &e))];
                for &r in &c.continuation_ranks {
                    for (label, rom) in roms.iter().filter(|(l, _)| rank_of(l) == Some(r) && !l.starts_with("exact")) {
                        let moved = analysis::reynolds_continuation(rom, re)?;
                        let a = analysis::rom_impulse(&moved, 0, &times)?;
                        series.push((label.clone(), analysis::rom_energy(&moved, &e, &a)));
                    }
                }
                self.put_text(&format!("reports/energy_re{re}.csv"), &report::energy_csv(&times, &series))?;
            }
        }

        let omegas = analysis::log_grid(c.omega_min, c.omega_max, c.omega_count);
        let mut rows: Vec<ErrorRow> = Vec::new();
        let mut hinf: BTreeMap<String, f64> = BTreeMap::new();
        if c.freq {
            let full_state = FullModel::new(&system, FullOutput::State)?;
            for (label, rom) in &roms {
                let tf = RomTf::full_state(rom, &e)?;
                let diff = analysis::Difference(&full_state, &tf);
                let (_, h) = analysis::refined_peak(&diff, &omegas)?;
                hinf.insert(label.clone(), h);
            }
            if let Some(s) = s_max {
                let op = modal::output_projection(&pod, s)?;
                let full = FullModel::new(&system, FullOutput::Pod(&op))?;
                let fr = analysis::frequency_response(&full, &omegas)?;
                let (w_full, p_full) = analysis::refined_peak(&full, &omegas)?;
                let w_dec = w_full / 10.0;
                let mut peaks = String::from("system,omega_peak,sigma_peak,sigma_decade_below\n");
                peaks.push_str(&format!("full,{w_full:e},{p_full:e},{:e}\n", analysis::sigma_max(&full.eval(w_dec)?)));
                let mut series = vec![("full".to_string(), fr.sigma_max)];
                for (label, rom) in &roms {
                    let tf = RomTf::projected(rom, &op, &e);
                    let (w, p) = analysis::refined_peak(&tf, &omegas)?;
                    peaks.push_str(&format!("{label},{w:e},{p:e},{:e}\n", analysis::sigma_max(&tf.eval(w_dec)?)));
                    series.push((label.clone(), analysis::frequency_response(&tf, &omegas)?.sigma_max));
                }
                self.sum("evaluate.freq_output_rank", s);
                self.put_text("reports/freq_response.csv", &report::freq_response_csv(&omegas, &series))?;
                self.put_text("reports/peaks.csv", &peaks)?;
            }
        }

        if c.impulse || c.freq {
            let hsv = self.exact_hsv.clone();
            for &s in &c.output_projection_ranks {
                let op = modal::output_projection(&pod, s)?;
                let yfull = analysis::full_outputs(&direct, &op, &e);
                for (label, rom) in &roms {
                    let (family, r) = family_of(label);
                    if family == "bpod" && rom.output_rank != s {
                        continue;
                    }
                    let two = match (c.impulse, coeffs.get(label)) {
                        (true, Some(a)) => {
                            analysis::impulse_error_2norm(&yfull, &analysis::projected_outputs(rom, &op, &e, a, &times))?
                        }
                        _ => f64::NAN,
                    };
                    let (lower, upper) = match &hsv {
                        Some(h) => analysis::ErrorReport::bounds(h, r),
                        None => (f64::NAN, f64::NAN),
                    };
                    rows.push(ErrorRow {
                        family: family.to_string(),
                        output_rank: s,
                        rank: r,
                        two_norm: two,
                        hinf: hinf.get(label).copied().unwrap_or(f64::NAN),
                        lower,
                        upper,
                    });
                }
            }
            self.put_text("reports/error_norms.csv", &report::error_norms_csv(&rows))?;
        }

        if c.traces {
            let mut tr = Vec::new();
            for (&s, basis) in &self.bpod {
                for r in 1..=basis.rank().min(pod.rank()).min(15) {
                    let t = analysis::subspace_trace(&pod.modes.columns(0, r), &basis.modes.columns(0, r), &e, Field::Real)?;
                    tr.push((format!("pod:bpod_s{s}"), r, t));
                    if let Some(ex) = self.rom(&exact_label(r)) {
                        let t = analysis::subspace_trace(&ex.recon, &basis.modes.columns(0, r), &e, Field::Real)?;
                        tr.push((format!("exact_bt:bpod_s{s}"), r, t));
                    }
                }
            }
            self.put_text("reports/trace.csv", &report::trace_csv(&tr))?;
        }

        if c.b_projection {
            if let Some(basis) = s_max.and_then(|s| self.bpod.get(&s)) {
                let b = system.input();
                let mut csv = String::from("rank,orthogonal,petrov\n");
                for r in 1..=5usize.min(basis.rank()).min(pod.rank()) {
                    let o = analysis::input_projection_norm(&pod, &b, &system, r, ProjectionMode::Orthogonal)?;
                    let p = analysis::input_projection_norm(basis, &b, &system, r, ProjectionMode::Petrov)?;
                    csv.push_str(&format!("{r},{o:e},{p:e}\n"));
                }
                self.put_text("reports/b_projection.csv", &csv)?;
            }
        }
        Ok(())
    }
}

fn full_spectrum(system: &BlockSystem) -> Result<Vec<C64>> {
    let mut all = Vec::new();
    for k in 0..system.blocks.len() {
        all.extend(analysis::spectrum(&system.a(k))?);
    }
    all.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    Ok(all)
}

/// `("pod" | "bpod" | "exact_bt", rank)` from a model label.
pub fn family_of(label: &str) -> (&'static str, usize) {
    let r = rank_of(label).unwrap_or(0);
    if label.starts_with("pod_") {
        ("pod", r)
    } else if label.starts_with("bpod_") {
        ("bpod", r)
    } else {
        ("exact_bt", r)
    }
}

fn rank_of(label: &str) -> Option<usize> {
    label.rsplit("_r").next()?.parse().ok()
}

/// Check every recorded artifact: presence, container integrity (format
/// version and internal checksum) and the manifest digest.
pub fn check_artifacts(dir: &Path) -> Result<Manifest> {
    let manifest = Manifest::load(dir)?;
    if manifest.entries.is_empty() {
        return Err(Error::Missing(vec![MANIFEST.into()]));
    }
    match manifest.get("format") {
        Some(FORMAT) => {}
        Some(other) => {
            let found = other.trim_start_matches("BPR1 v").parse().unwrap_or(0);
            return Err(Error::Version { found, expected: container::VERSION });
        }
        None => return Err(Error::Format("manifest has no format entry".into())),
    }
    let mut missing = Vec::new();
    for stage in Stage::ALL {
        if let Some(state) = manifest.get(&format!("stage.{}", stage.name())) {
            if state == "incomplete" || state == "failed" {
                missing.push(format!("stage {} ({state})", stage.name()));
            }
        }
    }
    for (rel, digest) in manifest.artifacts() {
        let path = dir.join(&rel);
        let Ok(bytes) = std::fs::read(&path) else {
            missing.push(rel);
            continue;
        };
        if rel.ends_with(".bpr") {
            Record::from_bytes(&bytes, &rel)?;
        }
        if sha256_hex(&bytes) != digest {
            return Err(Error::Checksum(rel));
        }
    }
    if !missing.is_empty() {
        return Err(Error::Missing(missing));
    }
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> CaseConfig {
        CaseConfig::from_text(
            "[case]\nname = tiny\nn = 16\nre = 500\n[input]\noptimal_t_max = 20\n[snapshots]\ncount = 60\ndt = 0.01\ndecay_threshold = 1e-2\n\
             [models]\npod_rank = 10\noutput_projection_ranks = 2,4\nmodel_ranks = 1,2,4\n\
             [evaluation]\nomega_count = 60\nre_sweep = 800\ncontinuation_ranks = 4\nenergy_ranks = 2\n",
        )
        .unwrap()
    }

    fn tmp(name: &str) -> PathBuf {
        let d = std::env::temp_dir().join(format!("bpod-pipeline-{name}-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&d);
        d
    }

    #[test]
    fn runs_skips_and_is_deterministic() {
        let cfg = tiny();
        let d1 = tmp("a");
        let quiet = RunOptions { quiet: true, ..Default::default() };
        let s1 = run_pipeline(&cfg, &d1, quiet).unwrap();
        assert!(s1.stages.iter().all(|(_, ran)| *ran));
        for f in ["error_norms.csv", "freq_response.csv", "spectrum.csv", "energy.csv", "trace.csv", "pod_values.csv", "hsv_s4.csv", "hsv_exact.csv", "continuation.csv"] {
            assert!(d1.join("reports").join(f).exists(), "{f}");
        }
        check_artifacts(&d1).unwrap();
        let again = run_pipeline(&cfg, &d1, quiet).unwrap();
        assert!(again.stages.iter().all(|(_, ran)| !*ran));
        // an evaluation-only change reruns only the last stage
        let cfg2 = cfg.with_overrides([("evaluation.omega_count", "61".to_string())]).unwrap();
        let s3 = run_pipeline(&cfg2, &d1, quiet).unwrap();
        assert_eq!(s3.stages.iter().filter(|(_, r)| *r).map(|(s, _)| *s).collect::<Vec<_>>(), vec![Stage::Evaluate]);
        let d2 = tmp("b");
        run_pipeline(&cfg2, &d2, quiet).unwrap();
        for f in ["error_norms.csv", "freq_response.csv", "spectrum.csv"] {
            assert_eq!(std::fs::read(d1.join("reports").join(f)).unwrap(), std::fs::read(d2.join("reports").join(f)).unwrap());
        }
        std::fs::remove_dir_all(&d2).unwrap();

        // integrity checks
        let p = d1.join("snapshots/direct.bpr");
        let mut bytes = std::fs::read(&p).unwrap();
        let k = bytes.len() / 3;
        bytes[k] ^= 1;
        std::fs::write(&p, &bytes).unwrap();
        assert!(matches!(check_artifacts(&d1), Err(Error::Checksum(n)) if n.contains("direct.bpr")));
        std::fs::remove_file(&p).unwrap();
        assert!(matches!(check_artifacts(&d1), Err(Error::Missing(v)) if v.iter().any(|m| m.contains("direct.bpr"))));
        std::fs::remove_dir_all(&d1).unwrap();
    }

    #[test]
    fn empty_evaluation_gives_snapshots_and_modes_only() {
        let cfg = tiny()
            .with_overrides([("models.output_projection_ranks", String::new())])
            .unwrap();
        let d = tmp("c");
        run_pipeline(&cfg, &d, RunOptions { until: Stage::Pod, quiet: true }).unwrap();
        assert!(d.join("snapshots/direct.bpr").exists() && d.join("modes/pod.bpr").exists());
        assert!(!d.join("reports/error_norms.csv").exists() && !d.join("roms").exists());
        std::fs::remove_dir_all(&d).unwrap();
    }

    #[test]
    fn older_format_is_rejected() {
        let d = tmp("d");
        std::fs::create_dir_all(&d).unwrap();
        std::fs::write(d.join(MANIFEST), "format: BPR1 v0\n").unwrap();
        assert!(matches!(check_artifacts(&d), Err(Error::Version { found: 0, expected: 1 })));
        assert!(run_pipeline(&tiny(), &d, RunOptions { quiet: true, ..Default::default() }).is_err());
        std::fs::remove_dir_all(&d).unwrap();
    }

    #[test]
    fn labels() {
        assert_eq!(family_of("bpod_s8_r12"), ("bpod", 12));
        assert_eq!(family_of("exact_bt_r3"), ("exact_bt", 3));
        assert_eq!(family_of(&pod_label(7)), ("pod", 7));
    }
}
