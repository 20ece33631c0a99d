//! Command-line front end: `simulate`, `analyze`, `scan`, `render` and
//! `rerun`.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

mod config;
mod io;
mod job;
mod render;
mod report;

pub use config::ConfigFile;
pub use io::{read_trajectory_csv, write_trajectory_csv, TrajectoryTable};
pub use job::{Job, OutputRecord, RunManifest};
pub use render::{render_svg, Plane, RenderOptions};
pub use report::{analyze_report, AnalysisReport};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

pub(crate) type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "lv-surgery", version, about = "Three-species Lotka-Volterra simulations and attractor diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate one trajectory and write it as CSV with a run manifest.
    Simulate(SimulateArgs),
    /// Report equilibria, spectra, stability classes and the chaos gate.
    Analyze(AnalyzeArgs),
    /// Sweep A with B and C fixed and measure the hole around the slow manifold.
    Scan(ScanArgs),
    /// Project a trajectory CSV onto a coordinate plane as SVG.
    Render(RenderArgs),
    /// Re-execute a manifest and compare output hashes.
    Rerun(RerunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendChoice {
    Adaptive,
    Fixed,
}

#[derive(Debug, Clone, Args)]
pub(crate) struct ParamArgs {
    #[arg(long = "A", allow_negative_numbers = true)]
    pub a: Option<f64>,
    #[arg(long = "B", allow_negative_numbers = true)]
    pub b: Option<f64>,
    #[arg(long = "C", allow_negative_numbers = true)]
    pub c: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub(crate) struct StartArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub x0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub y0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub z0: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub(crate) struct SolverArgs {
    #[arg(long)]
    pub rtol: Option<f64>,
    #[arg(long, value_enum)]
    pub backend: Option<BackendChoice>,
    /// Step size for the fixed backend.
    #[arg(long)]
    pub h: Option<f64>,
    /// JSON file with defaults; command-line flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    start: StartArgs,
    #[arg(long, allow_negative_numbers = true)]
    t_end: Option<f64>,
    #[command(flatten)]
    solver: SolverArgs,
    /// Output prefix: writes `<out>.csv` and `<out>.manifest.json`.
    #[arg(long, default_value = "trajectory")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Also estimate the largest Lyapunov exponent.
    #[arg(long)]
    lyapunov: bool,
    #[command(flatten)]
    start: StartArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ScanArgs {
    #[arg(long = "B", allow_negative_numbers = true)]
    b: Option<f64>,
    #[arg(long = "C", allow_negative_numbers = true)]
    c: Option<f64>,
    /// Comma-separated A values.
    #[arg(long = "A-list", value_delimiter = ',', allow_negative_numbers = true, conflicts_with_all = ["a_from", "a_to", "a_steps"])]
    a_list: Option<Vec<f64>>,
    #[arg(long = "A-from", allow_negative_numbers = true, requires_all = ["a_to", "a_steps"])]
    a_from: Option<f64>,
    #[arg(long = "A-to", allow_negative_numbers = true, requires_all = ["a_from", "a_steps"])]
    a_to: Option<f64>,
    /// Number of evenly spaced A values, endpoints included.
    #[arg(long = "A-steps", requires_all = ["a_from", "a_to"])]
    a_steps: Option<usize>,
    #[command(flatten)]
    start: StartArgs,
    #[arg(long, allow_negative_numbers = true)]
    t_end: Option<f64>,
    /// Samples before this time are dropped before measuring.
    #[arg(long, allow_negative_numbers = true)]
    t_cut: Option<f64>,
    #[command(flatten)]
    solver: SolverArgs,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, env = "LV_SURGERY_JOBS")]
    jobs: Option<usize>,
    /// Also write each full trajectory as CSV.
    #[arg(long)]
    keep_trajectories: bool,
    /// Output prefix: writes `<out>.csv`, `<out>.json` and `<out>.manifest.json`.
    #[arg(long, default_value = "scan")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct RenderArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// One of xy, xz, yz.
    #[arg(long)]
    plane: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 800)]
    width: u32,
    #[arg(long, default_value_t = 600)]
    height: u32,
    /// Overlay the slow manifold and the Ss2/Ss3 markers.
    #[arg(long = "mark-L")]
    mark_l: bool,
    /// Parameters for `--mark-L`; read from the sidecar manifest when omitted.
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Debug, Args)]
struct RerunArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Output prefix for the regenerated files.
    #[arg(long)]
    out: PathBuf,
}

/// Parse `args` (including the program name) and execute. Returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let name = cli.command.name();
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Usage(_) = e {
                let mut cmd = Cli::command();
                cmd.build();
                if let Some(sub) = cmd.find_subcommand_mut(name) {
                    eprintln!("\n{}", sub.render_usage());
                }
            }
            e.exit_code()
        }
    }
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Analyze(_) => "analyze",
            Command::Scan(_) => "scan",
            Command::Render(_) => "render",
            Command::Rerun(_) => "rerun",
        }
    }
}

fn dispatch(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::Simulate(args) => {
            let cfg = ConfigFile::load(args.solver.config.as_deref())?;
            let job = job::simulate_job(&cfg, &args.params, &args.start, args.t_end, &args.solver)?;
            let manifest = job::run_and_record(job, &args.out)?;
            for o in &manifest.outputs {
                println!("{}", o.path);
            }
            Ok(())
        }
        Command::Analyze(args) => {
            let cfg = ConfigFile::load(args.solver.config.as_deref())?;
            let text = report::cmd_analyze(&cfg, &args.params, args.lyapunov, &args.start, &args.solver)?;
            match args.out {
                Some(path) => std::fs::write(path, text)?,
                None => println!("{text}"),
            }
            Ok(())
        }
        Command::Scan(args) => {
            let cfg = ConfigFile::load(args.solver.config.as_deref())?;
            let a_values = job::resolve_a_values(&cfg, args.a_list, args.a_from, args.a_to, args.a_steps)?;
            let job = job::scan_job(
                &cfg,
                args.b,
                args.c,
                a_values,
                &args.start,
                args.t_end,
                args.t_cut,
                &args.solver,
                args.keep_trajectories,
            )?;
            let manifest = job::run_and_record_with_jobs(job, &args.out, args.jobs)?;
            for o in &manifest.outputs {
                println!("{}", o.path);
            }
            Ok(())
        }
        Command::Render(args) => render::cmd_render(
            &args.input,
            &args.plane,
            &args.out,
            args.width,
            args.height,
            args.mark_l,
            &args.params,
        ),
        Command::Rerun(args) => job::cmd_rerun(&args.manifest, &args.out),
    }
}
