use std::ffi::OsString;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{positive, ConfigFile, DEFAULT_SIMULATE_T_END};
use super::io::{fmt17, sha256_file, write_text, write_trajectory_csv};
use super::{CliError, CliResult, ParamArgs, SolverArgs, StartArgs};
use crate::integrator::Backend;
use crate::topology::{surgery_scan, BandConfig, BaseParams, ScanOptions, ScanSim, SurgeryScanResult, Thresholds};
use crate::{Params, State};

/// A fully resolved job: everything needed to regenerate its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Job {
    Simulate {
        params: Params,
        initial: State,
        t_end: f64,
        backend: Backend,
    },
    Scan {
        base: BaseParams,
        a_values: Vec<f64>,
        /// Initial state, horizon, resolved transient cut and integrator.
        sim: ScanSim,
        band: BandConfig,
        thresholds: Thresholds,
        keep_trajectories: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputRecord {
    /// Stable name for the artifact within its job, e.g. `trajectory`.
    pub role: String,
    /// File name, relative to the manifest's directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub tool_version: String,
    pub timestamp: String,
    pub job: Job,
    pub outputs: Vec<OutputRecord>,
}

impl RunManifest {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
    }
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s: OsString = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub(crate) fn manifest_path(prefix: &Path) -> PathBuf {
    with_suffix(prefix, ".manifest.json")
}

fn record(role: impl Into<String>, path: &Path) -> CliResult<OutputRecord> {
    let bytes = std::fs::metadata(path)?.len();
    Ok(OutputRecord {
        role: role.into(),
        path: path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
        sha256: sha256_file(path)?,
        bytes,
    })
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub(crate) fn simulate_job(
    cfg: &ConfigFile,
    params: &ParamArgs,
    start: &StartArgs,
    t_end: Option<f64>,
    solver: &SolverArgs,
) -> CliResult<Job> {
    let params = cfg.params(params)?;
    let initial = cfg.initial(start)?;
    let t_end = positive("t-end", t_end.or(cfg.t_end).unwrap_or(DEFAULT_SIMULATE_T_END))?;
    let backend = cfg.backend(solver)?;
    Ok(Job::Simulate { params, initial, t_end, backend })
}

pub(crate) fn resolve_a_values(
    cfg: &ConfigFile,
    list: Option<Vec<f64>>,
    from: Option<f64>,
    to: Option<f64>,
    steps: Option<usize>,
) -> CliResult<Vec<f64>> {
    let values = match (list, from, to, steps) {
        (Some(list), ..) => list,
        (None, Some(from), Some(to), Some(steps)) => {
            if steps == 0 {
                return Err(usage("--A-steps must be at least 1"));
            }
            if steps == 1 {
                vec![from]
            } else {
                let span = to - from;
                let last = (steps - 1) as f64;
                (0..steps).map(|i| if i == steps - 1 { to } else { from + span * i as f64 / last }).collect()
            }
        }
        _ => cfg
            .a_list
            .clone()
            .ok_or_else(|| usage("need --A-list or --A-from/--A-to/--A-steps"))?,
    };
    if values.is_empty() {
        return Err(usage("empty A list"));
    }
    for a in &values {
        positive("A", *a)?;
    }
    if values.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(usage("A values must be strictly increasing"));
    }
    Ok(values)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn scan_job(
    cfg: &ConfigFile,
    b: Option<f64>,
    c: Option<f64>,
    a_values: Vec<f64>,
    start: &StartArgs,
    t_end: Option<f64>,
    t_cut: Option<f64>,
    solver: &SolverArgs,
    keep_trajectories: bool,
) -> CliResult<Job> {
    let b = b.or(cfg.b).ok_or_else(|| usage("missing --B"))?;
    let c = c.or(cfg.c).ok_or_else(|| usage("missing --C"))?;
    Params::new(a_values[0], b, c).map_err(|e| usage(e.to_string()))?;

    let defaults = ScanSim::default();
    let t_end = positive("t-end", t_end.or(cfg.t_end).unwrap_or(defaults.t_end))?;
    let mut sim = ScanSim { initial: cfg.initial(start)?, t_end, t_cut: t_cut.or(cfg.t_cut), backend: cfg.backend(solver)? };
    let cut = sim.resolved_t_cut();
    if !(cut >= 0.0 && cut < t_end) {
        return Err(usage(format!("need 0 <= t-cut < t-end, got {cut} / {t_end}")));
    }
    sim.t_cut = Some(cut);

    let band = cfg.band.unwrap_or_default();
    band.validate().map_err(|e| usage(e.to_string()))?;
    let thresholds = cfg.thresholds.unwrap_or_default();
    thresholds.validate().map_err(|e| usage(e.to_string()))?;

    Ok(Job::Scan { base: BaseParams { b, c }, a_values, sim, band, thresholds, keep_trajectories })
}

/// Run `job`, writing its outputs under `prefix`. Returns the output records.
pub(crate) fn execute(job: &Job, prefix: &Path, jobs: Option<usize>) -> CliResult<Vec<OutputRecord>> {
    match job {
        Job::Simulate { params, initial, t_end, backend } => {
            let tr = backend.run(params, initial, *t_end).map_err(|e| match e.failure_time() {
                Some(t) => CliError::Runtime(format!("integration failed at t = {t}: {e}")),
                None => CliError::Runtime(format!("integration failed: {e}")),
            })?;
            if tr.stats.p3_warnings > 0 {
                log::warn!("{} accepted states left the positive octant", tr.stats.p3_warnings);
            }
            let path = with_suffix(prefix, ".csv");
            write_trajectory_csv(&path, &tr.times, &tr.states)?;
            Ok(vec![record("trajectory", &path)?])
        }
        Job::Scan { base, a_values, sim, band, thresholds, keep_trajectories } => {
            let opts = ScanOptions { jobs, keep_trajectories: *keep_trajectories };
            let result = surgery_scan(base, a_values, sim, band, thresholds, &opts)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            for entry in &result.entries {
                if let crate::topology::ScanOutcome::Failed { error, .. } = &entry.outcome {
                    log::warn!("A = {}: {error}", entry.a);
                }
            }

            let csv_path = with_suffix(prefix, ".csv");
            write_text(&csv_path, &scan_csv(&result))?;
            let json_path = with_suffix(prefix, ".json");
            let json = serde_json::to_string_pretty(&result).map_err(|e| CliError::Runtime(e.to_string()))?;
            write_text(&json_path, &(json + "\n"))?;

            let mut outputs = vec![record("scan_table", &csv_path)?, record("scan_details", &json_path)?];
            for (i, entry) in result.entries.iter().enumerate() {
                if let Some(tr) = &entry.trajectory {
                    let path = with_suffix(prefix, &format!(".run-{}.csv", entry.run_id));
                    write_trajectory_csv(&path, &tr.times, &tr.states)?;
                    outputs.push(record(format!("trajectory:{i}"), &path)?);
                }
            }
            Ok(outputs)
        }
    }
}

/// Columns `A,min_distance,angular_coverage,verdict`; metrics are blank when
/// the entry has none.
pub(crate) fn scan_csv(result: &SurgeryScanResult) -> String {
    let mut out = String::from("A,min_distance,angular_coverage,verdict\n");
    for e in &result.entries {
        let (d, cov) = match e.outcome.metrics() {
            Some(m) => (fmt17(m.min_distance), fmt17(m.angular_coverage)),
            None => (String::new(), String::new()),
        };
        out.push_str(&format!("{},{d},{cov},{}\n", e.a, e.outcome.verdict_label()));
    }
    out
}

fn write_manifest(job: Job, outputs: Vec<OutputRecord>, prefix: &Path) -> CliResult<RunManifest> {
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        job,
        outputs,
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Runtime(e.to_string()))?;
    write_text(&manifest_path(prefix), &(text + "\n"))?;
    Ok(manifest)
}

pub(crate) fn run_and_record(job: Job, prefix: &Path) -> CliResult<RunManifest> {
    run_and_record_with_jobs(job, prefix, None)
}

pub(crate) fn run_and_record_with_jobs(job: Job, prefix: &Path, jobs: Option<usize>) -> CliResult<RunManifest> {
    let outputs = execute(&job, prefix, jobs)?;
    write_manifest(job, outputs, prefix)
}

/// Re-execute the job in `manifest`, write the regenerated files under `out`
/// and compare their hashes with the recorded ones.
pub(crate) fn cmd_rerun(manifest: &Path, out: &Path) -> CliResult<()> {
    let original = RunManifest::load(manifest)?;
    let fresh = run_and_record(original.job.clone(), out)?;

    let mut differing = 0usize;
    for old in &original.outputs {
        match fresh.outputs.iter().find(|n| n.role == old.role) {
            Some(new) if new.sha256 == old.sha256 => println!("identical {} {}", old.role, new.path),
            Some(new) => {
                differing += 1;
                println!("differs {} {} (was {}, now {})", old.role, new.path, old.sha256, new.sha256);
            }
            None => {
                differing += 1;
                println!("missing {}", old.role);
            }
        }
    }
    for new in &fresh.outputs {
        if !original.outputs.iter().any(|o| o.role == new.role) {
            differing += 1;
            println!("extra {} {}", new.role, new.path);
        }
    }
    if differing > 0 {
        return Err(CliError::Runtime(format!("{differing} output(s) do not match the manifest")));
    }
    Ok(())
}
