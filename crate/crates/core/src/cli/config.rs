use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BackendChoice, CliError, CliResult, ParamArgs, SolverArgs, StartArgs};
use crate::analysis::LyapunovConfig;
use crate::integrator::{Backend, IntegratorConfig, DEFAULT_INITIAL_STATE};
use crate::topology::{BandConfig, Thresholds};
use crate::{Params, State};

/// Fixed-backend step when neither flag nor file sets one. Small enough for
/// RK4 to stay stable through the spike that follows the default start.
pub const DEFAULT_FIXED_STEP: f64 = 1e-5;

/// Horizon for `simulate` when none is given.
pub const DEFAULT_SIMULATE_T_END: f64 = 1000.0;

/// Optional JSON defaults. Every field may be omitted.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(rename = "A")]
    pub a: Option<f64>,
    #[serde(rename = "B")]
    pub b: Option<f64>,
    #[serde(rename = "C")]
    pub c: Option<f64>,
    pub initial: Option<State>,
    pub t_end: Option<f64>,
    pub t_cut: Option<f64>,
    pub backend: Option<BackendChoice>,
    pub h: Option<f64>,
    pub integrator: Option<IntegratorConfig>,
    pub band: Option<BandConfig>,
    pub thresholds: Option<Thresholds>,
    pub lyapunov: Option<LyapunovFile>,
    pub a_list: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LyapunovFile {
    pub t_total: Option<f64>,
    pub t_renorm: Option<f64>,
    pub t_transient: Option<f64>,
    pub initial_tangent: Option<[f64; 3]>,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(ConfigFile::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| usage(format!("bad config {}: {e}", path.display())))
    }

    pub(crate) fn params(&self, flags: &ParamArgs) -> CliResult<Params> {
        let pick = |flag: Option<f64>, file: Option<f64>, name: &str| {
            flag.or(file).ok_or_else(|| usage(format!("missing --{name}")))
        };
        let a = pick(flags.a, self.a, "A")?;
        let b = pick(flags.b, self.b, "B")?;
        let c = pick(flags.c, self.c, "C")?;
        Params::new(a, b, c).map_err(|e| usage(e.to_string()))
    }

    pub(crate) fn initial(&self, start: &StartArgs) -> CliResult<State> {
        let base = self.initial.unwrap_or(DEFAULT_INITIAL_STATE);
        let s = State::new(
            start.x0.unwrap_or(base.x),
            start.y0.unwrap_or(base.y),
            start.z0.unwrap_or(base.z),
        );
        if !s.is_finite() || !s.in_p3(0.0) {
            return Err(usage(format!(
                "initial state must be finite and nonnegative, got ({}, {}, {})",
                s.x, s.y, s.z
            )));
        }
        Ok(s)
    }

    pub(crate) fn backend(&self, solver: &SolverArgs) -> CliResult<Backend> {
        let choice = solver.backend.or(self.backend).unwrap_or(BackendChoice::Adaptive);
        let backend = match choice {
            BackendChoice::Adaptive => {
                if solver.h.is_some() {
                    return Err(usage("--h applies only to --backend fixed"));
                }
                let mut cfg = self.integrator.unwrap_or_default();
                if let Some(rtol) = solver.rtol {
                    cfg.rtol = rtol;
                }
                Backend::Adaptive(cfg)
            }
            BackendChoice::Fixed => {
                if solver.rtol.is_some() {
                    return Err(usage("--rtol applies only to --backend adaptive"));
                }
                Backend::Fixed { h: solver.h.or(self.h).unwrap_or(DEFAULT_FIXED_STEP) }
            }
        };
        backend.validate().map_err(|e| usage(e.to_string()))?;
        Ok(backend)
    }

    pub(crate) fn lyapunov(&self, backend: Backend) -> CliResult<LyapunovConfig> {
        let d = LyapunovConfig::default();
        let f = self.lyapunov.clone().unwrap_or_default();
        let cfg = LyapunovConfig {
            t_total: f.t_total.unwrap_or(d.t_total),
            t_renorm: f.t_renorm.unwrap_or(d.t_renorm),
            t_transient: f.t_transient.unwrap_or(d.t_transient),
            backend,
            initial_tangent: f.initial_tangent.unwrap_or(d.initial_tangent),
        };
        cfg.validate().map_err(|e| usage(e.to_string()))?;
        Ok(cfg)
    }
}

pub(crate) fn positive(name: &str, v: f64) -> CliResult<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(usage(format!("{name} must be positive and finite, got {v}")))
    }
}
