use std::path::PathBuf;
use std::process::ExitCode;

use bpod::config::{self, CaseConfig};
use bpod::criteria;
use bpod::pipeline::{self, RunOptions, Stage};
use bpod::Error;
use clap::{Args, Parser, Subcommand};

/// Balanced POD of linearized channel flow: snapshot pipeline and checks.
#[derive(Parser)]
#[command(name = "bpod", version)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Assemble the operators and the input.
    Build(RunArgs),
    /// Direct impulse-response snapshots.
    Simulate(RunArgs),
    /// POD modes of the direct snapshots.
    Pod(RunArgs),
    /// Adjoint snapshots for the output projections.
    Adjoint(RunArgs),
    /// Balancing modes and Hankel singular values.
    Bpod(RunArgs),
    /// Reduced-order models (POD, BPOD, exact balanced truncation).
    Reduce(RunArgs),
    /// Error norms, spectra, frequency responses and other reports.
    Evaluate(RunArgs),
    /// All stages.
    Pipeline(RunArgs),
    /// Check a completed workdir against the acceptance criteria.
    Verify {
        #[arg(long, default_value = "run")]
        workdir: PathBuf,
    },
    /// Print the documented default configuration.
    Defaults,
}

#[derive(Args)]
struct RunArgs {
    /// Case file; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "run")]
    workdir: PathBuf,
    /// Any configuration key, `section.key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    name: Option<String>,
    /// single_wavenumber | localized3d
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    re: Option<f64>,
    /// Chebyshev intervals in y.
    #[arg(long)]
    n: Option<usize>,
    /// custom | desk | paper16 | paper32
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    nx: Option<usize>,
    #[arg(long)]
    nz: Option<usize>,
    /// Snapshots per run.
    #[arg(long)]
    count: Option<usize>,
    /// uniform | two_phase
    #[arg(long)]
    schedule: Option<String>,
    #[arg(long)]
    dt: Option<f64>,
    /// Horizon, or `auto`.
    #[arg(long)]
    t_end: Option<String>,
    #[arg(long)]
    decay_threshold: Option<f64>,
    #[arg(long)]
    pod_rank: Option<usize>,
    /// Comma-separated output projection ranks.
    #[arg(long)]
    output_ranks: Option<String>,
    /// Comma-separated ROM ranks or a range `a..b`.
    #[arg(long)]
    model_ranks: Option<String>,
    /// Comma-separated off-design Reynolds numbers.
    #[arg(long)]
    re_sweep: Option<String>,
    #[arg(long)]
    stream_adjoint: bool,
    /// Allow cuts inside groups of equal Hankel singular values.
    #[arg(long)]
    force_rank: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress progress messages.
    #[arg(long)]
    quiet: bool,
}

impl RunArgs {
    fn overrides(&self) -> Result<Vec<(String, String)>, Error> {
        let mut out = Vec::new();
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                out.push((k.to_string(), v));
            }
        };
        put("case.name", self.name.clone());
        put("case.kind", self.kind.clone());
        put("case.alpha", self.alpha.map(|v| v.to_string()));
        put("case.beta", self.beta.map(|v| v.to_string()));
        put("case.re", self.re.map(|v| v.to_string()));
        put("case.n", self.n.map(|v| v.to_string()));
        put("case.grid", self.grid.clone());
        put("case.nx", self.nx.map(|v| v.to_string()));
        put("case.nz", self.nz.map(|v| v.to_string()));
        put("snapshots.count", self.count.map(|v| v.to_string()));
        put("snapshots.schedule", self.schedule.clone());
        put("snapshots.dt", self.dt.map(|v| v.to_string()));
        put("snapshots.t_end", self.t_end.clone());
        put("snapshots.decay_threshold", self.decay_threshold.map(|v| v.to_string()));
        put("models.pod_rank", self.pod_rank.map(|v| v.to_string()));
        put("models.output_projection_ranks", self.output_ranks.clone());
        put("models.model_ranks", self.model_ranks.clone());
        put("evaluation.re_sweep", self.re_sweep.clone());
        put("models.stream_adjoint", self.stream_adjoint.then(|| "true".into()));
        put("models.force_rank", self.force_rank.then(|| "true".into()));
        put("run.seed", self.seed.map(|v| v.to_string()));
        for s in &self.set {
            let (k, v) = s
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects section.key=value, got '{s}'")))?;
            out.push((k.trim().to_string(), v.trim().to_string()));
        }
        Ok(out)
    }

    fn config(&self) -> Result<CaseConfig, Error> {
        let base = match &self.config {
            Some(p) => CaseConfig::from_file(p)?,
            None => CaseConfig::default(),
        };
        let ov = self.overrides()?;
        base.with_overrides(ov.iter().map(|(k, v)| (k.as_str(), v.clone())))
    }
}

fn run(args: &RunArgs, until: Stage) -> Result<(), Error> {
    let cfg = args.config()?;
    let summary = pipeline::run_pipeline(&cfg, &args.workdir, RunOptions { until, quiet: args.quiet })?;
    for (stage, ran) in &summary.stages {
        println!("{:<9} {}", stage.name(), if *ran { "done" } else { "up to date" });
    }
    for n in &summary.notes {
        println!("note: {n}");
    }
    println!("artifacts in {}", args.workdir.display());
    Ok(())
}

fn verify(dir: &std::path::Path) -> Result<bool, Error> {
    let checks = criteria::verify(dir)?;
    for c in &checks {
        println!("{}", c.line());
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    println!("{} of {} criteria passed", checks.len() - failed, checks.len());
    Ok(failed == 0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.verb {
        Verb::Build(a) => run(a, Stage::Build).map(|_| true),
        Verb::Simulate(a) => run(a, Stage::Simulate).map(|_| true),
        Verb::Pod(a) => run(a, Stage::Pod).map(|_| true),
        Verb::Adjoint(a) => run(a, Stage::Adjoint).map(|_| true),
        Verb::Bpod(a) => run(a, Stage::Bpod).map(|_| true),
        Verb::Reduce(a) => run(a, Stage::Reduce).map(|_| true),
        Verb::Evaluate(a) | Verb::Pipeline(a) => run(a, Stage::Evaluate).map(|_| true),
        Verb::Verify { workdir } => verify(workdir),
        Verb::Defaults => {
            print!("{}", config::default_text());
            Ok(true)
        }
    };
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}
