//! `avm`: command-line driver for the adaptive voter model experiments.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use avm_core::abm::SamplingMode;
use avm_core::experiments::{self as exp, ExperimentConfig, ParamRange, PcStatus};
use avm_core::{Error, OdeMode};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Parser, Debug)]
#[command(name = "avm", version, about = "Adaptive voter model: simulation, moment ODE and generating-function solution")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// γ(t) from the moment ODE and the closed-form solution.
    Timeseries(RunArgs),
    /// Terminal ODE γ against the analytic steady state over a p range.
    Scan(RunArgs),
    /// Fragmentation threshold from the ODE against (κ−1)/(κ+1).
    PcCurve(RunArgs),
    /// Agent-based ensemble with a per-replicate summary.
    Abm(RunArgs),
    /// All layers on a common time grid with pairwise deviations.
    Compare(RunArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Timeseries(_) => "timeseries",
            Command::Scan(_) => "scan",
            Command::PcCurve(_) => "pc-curve",
            Command::Abm(_) => "abm",
            Command::Compare(_) => "compare",
        }
    }

    fn args(&self) -> &RunArgs {
        match self {
            Command::Timeseries(a) | Command::Scan(a) | Command::PcCurve(a) | Command::Abm(a) | Command::Compare(a) => a,
        }
    }

    fn default_t_end(&self) -> f64 {
        match self {
            Command::Timeseries(_) | Command::Compare(_) => 30.0,
            Command::Scan(_) | Command::PcCurve(_) => 300.0,
            Command::Abm(_) => 100.0,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum ModeArg {
    Full,
    PdeMatched,
    Both,
}

impl ModeArg {
    fn modes(self) -> Vec<OdeMode> {
        match self {
            ModeArg::Full => vec![OdeMode::Full],
            ModeArg::PdeMatched => vec![OdeMode::PdeMatched],
            ModeArg::Both => vec![OdeMode::Full, OdeMode::PdeMatched],
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum SamplingArg {
    Uniform,
    RejectionFree,
}

impl From<SamplingArg> for SamplingMode {
    fn from(s: SamplingArg) -> Self {
        match s {
            SamplingArg::Uniform => SamplingMode::Uniform,
            SamplingArg::RejectionFree => SamplingMode::RejectionFree,
        }
    }
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    /// Mean degree of the initial Erdős–Rényi graph.
    #[arg(long)]
    kappa: Option<f64>,
    /// Mean degrees for pc-curve, START:STOP:STEP.
    #[arg(long, value_name = "START:STOP:STEP")]
    kappa_range: Option<String>,
    /// Rewiring probability.
    #[arg(long, conflicts_with = "p_range")]
    p: Option<f64>,
    /// Rewiring probabilities, START:STOP:STEP inclusive.
    #[arg(long, value_name = "START:STOP:STEP")]
    p_range: Option<String>,
    /// Number of nodes in the agent-based model.
    #[arg(long)]
    n: Option<usize>,
    /// Truncation of the degree grid [default: 60].
    #[arg(long)]
    k_max: Option<usize>,
    /// RK4 step size [default: 0.01].
    #[arg(long)]
    dt: Option<f64>,
    /// Time horizon [default: 30, 300 for scan and pc-curve, 100 for abm].
    #[arg(long)]
    t_end: Option<f64>,
    /// Spacing of recorded samples [default: 0.1].
    #[arg(long)]
    sample_interval: Option<f64>,
    /// Master seed for the agent-based model.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of agent-based replicates [default: 10].
    #[arg(long)]
    replicates: Option<u64>,
    /// ODE closure variant [default: full].
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Link sampling in the agent-based model [default: uniform].
    #[arg(long, value_enum)]
    sampling: Option<SamplingArg>,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// TOML file with any of the options above; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Options accepted in a `--config` file, keyed like the flags.
#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct FileConfig {
    kappa: Option<f64>,
    kappa_range: Option<String>,
    p: Option<f64>,
    p_range: Option<String>,
    n: Option<usize>,
    k_max: Option<usize>,
    dt: Option<f64>,
    t_end: Option<f64>,
    sample_interval: Option<f64>,
    seed: Option<u64>,
    replicates: Option<u64>,
    mode: Option<ModeArg>,
    sampling: Option<SamplingArg>,
}

/// Resolved configuration echoed next to the output.
#[derive(Serialize)]
#[serde(rename_all = "kebab-case")]
struct Meta<'a> {
    command: &'a str,
    version: &'a str,
    kappa: f64,
    kappa_values: &'a [f64],
    p_values: &'a [f64],
    n: usize,
    k_max: usize,
    dt: f64,
    t_end: f64,
    sample_interval: f64,
    seed: u64,
    replicates: u64,
    modes: Vec<&'static str>,
    sampling: &'static str,
}

enum Failure {
    Config(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NumericalFailure { .. } | Error::NotConverged { .. } | Error::DegenerateFlow { .. } => {
                Failure::Numerical(e.to_string())
            }
            Error::InvalidParameter { .. } | Error::Io(_) => Failure::Config(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

fn range(spec: &str) -> Result<Vec<f64>, Failure> {
    Ok(spec.parse::<ParamRange>()?.values()?)
}

fn read_file_config(path: &Path) -> Result<FileConfig, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn resolve(command: &Command) -> Result<ExperimentConfig, Failure> {
    let args = command.args();
    let file = match &args.config {
        Some(path) => read_file_config(path)?,
        None => FileConfig::default(),
    };
    let defaults = ExperimentConfig::default();
    let kappa = args.kappa.or(file.kappa).unwrap_or(defaults.kappa);

    // a flag of either spelling overrides both spellings in the file
    let p_values = match (args.p, &args.p_range) {
        (Some(p), _) => vec![p],
        (None, Some(r)) => range(r)?,
        (None, None) => match (file.p, &file.p_range) {
            (Some(_), Some(_)) => return Err(Failure::Config("config file sets both `p` and `p-range`".into())),
            (Some(p), None) => vec![p],
            (None, Some(r)) => range(r)?,
            (None, None) => defaults.p_values,
        },
    };
    let kappa_values = match args.kappa_range.as_ref().or(file.kappa_range.as_ref()) {
        Some(r) => range(r)?,
        None => vec![kappa],
    };

    let cfg = ExperimentConfig {
        kappa,
        p_values,
        kappa_values,
        n: args.n.or(file.n).unwrap_or(defaults.n),
        k_max: args.k_max.or(file.k_max).unwrap_or(defaults.k_max),
        dt: args.dt.or(file.dt).unwrap_or(defaults.dt),
        t_end: args.t_end.or(file.t_end).unwrap_or(command.default_t_end()),
        sample_interval: args.sample_interval.or(file.sample_interval).unwrap_or(defaults.sample_interval),
        seed: args.seed.or(file.seed).unwrap_or(defaults.seed),
        replicates: args.replicates.or(file.replicates).unwrap_or(defaults.replicates),
        modes: args.mode.or(file.mode).map_or(defaults.modes, ModeArg::modes),
        sampling: args.sampling.or(file.sampling).map_or(defaults.sampling, SamplingMode::from),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

fn write_meta(out: &Path, command: &str, cfg: &ExperimentConfig) -> Result<(), Failure> {
    let meta = Meta {
        command,
        version: env!("CARGO_PKG_VERSION"),
        kappa: cfg.kappa,
        kappa_values: &cfg.kappa_values,
        p_values: &cfg.p_values,
        n: cfg.n,
        k_max: cfg.k_max,
        dt: cfg.dt,
        t_end: cfg.t_end,
        sample_interval: cfg.sample_interval,
        seed: cfg.seed,
        replicates: cfg.replicates,
        modes: cfg.modes.iter().map(|m| m.as_str()).collect(),
        sampling: cfg.sampling.as_str(),
    };
    let text = toml::to_string(&meta).map_err(|e| Failure::Config(e.to_string()))?;
    std::fs::write(sibling(out, ".meta.toml"), text)?;
    Ok(())
}

/// Writes `render` to `path`, or to stdout when no path is given.
fn emit(path: Option<&Path>, render: impl FnOnce(&mut dyn Write) -> avm_core::Result<()>) -> Result<(), Failure> {
    match path {
        Some(path) => {
            let file = File::create(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            let mut w = BufWriter::new(file);
            render(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            render(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn execute(command: &Command) -> Result<(), Failure> {
    let cfg = resolve(command)?;
    let out = command.args().out.as_deref();
    let summary_path = out.map(|o| sibling(o, ".summary.csv"));
    log::info!("{} with {cfg:?}", command.name());

    let mut numerical = None;
    match command {
        Command::Timeseries(_) => {
            let rows = exp::cmd_timeseries(&cfg)?;
            emit(out, |w| exp::write_timeseries_csv(w, &rows))?;
        }
        Command::Scan(_) => {
            let rows = exp::cmd_scan(&cfg)?;
            emit(out, |w| exp::write_scan_csv(w, &rows))?;
        }
        Command::PcCurve(_) => {
            let rows = exp::cmd_pc_curve(&cfg)?;
            emit(out, |w| exp::write_pc_curve_csv(w, &rows))?;
            let failed: Vec<String> =
                rows.iter().filter(|r| r.status == PcStatus::NumericalFailure).map(|r| r.kappa.to_string()).collect();
            if !failed.is_empty() {
                numerical = Some(format!("pc search hit a numerical failure at kappa = {}", failed.join(", ")));
            }
        }
        Command::Abm(_) => {
            let (rows, summary) = exp::cmd_abm(&cfg)?;
            emit(out, |w| exp::write_timeseries_csv(&mut *w, &rows))?;
            emit(summary_path.as_deref(), |w| exp::write_abm_summary_csv(w, &summary))?;
        }
        Command::Compare(_) => {
            let (rows, summary) = exp::cmd_compare(&cfg)?;
            emit(out, |w| exp::write_compare_csv(w, &rows))?;
            emit(summary_path.as_deref(), |w| exp::write_summary_csv(w, &summary))?;
        }
    }
    if let Some(out) = out {
        write_meta(out, command.name(), &cfg)?;
    }
    match numerical {
        Some(reason) => Err(Failure::Numerical(reason)),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: invalid configuration: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: numerical failure: {msg}");
            ExitCode::from(2)
        }
    }
}
