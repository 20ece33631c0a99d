use serde::{Deserialize, Serialize};

use super::config::ConfigFile;
use super::{CliError, CliResult, ParamArgs, SolverArgs, StartArgs};
use crate::analysis::{
    chaotic_candidate, classify_point, lyapunov_max, LyapunovConfig, LyapunovEstimate, PointCharacter, RegionReport,
};
use crate::model::{spectrum_closed_form, steady_states, Spectrum, SteadyLabel, SteadyState};
use crate::{Params, State};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEntry {
    pub label: SteadyLabel,
    pub defined: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub spectrum: Option<Spectrum>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub character: Option<PointCharacter>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict")]
pub enum RegionSection {
    #[serde(rename = "undefined ratio")]
    UndefinedRatio { reason: String },
    #[serde(rename = "chaotic candidate")]
    Candidate(RegionReport),
    #[serde(rename = "not a candidate")]
    NotCandidate(RegionReport),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovSection {
    pub initial: State,
    pub config: LyapunovConfig,
    pub result: LyapunovEstimate,
}

/// Equilibria, spectra, stability classes and the chaos gate for one
/// parameter set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub params: Params,
    pub steady_states: Vec<SteadyState>,
    pub spectra: Vec<SpectrumEntry>,
    pub region: RegionSection,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lyapunov: Option<LyapunovSection>,
}

pub fn analyze_report(p: &Params) -> AnalysisReport {
    let spectra = [SteadyLabel::Ss1, SteadyLabel::Ss2, SteadyLabel::Ss3]
        .into_iter()
        .map(|label| match spectrum_closed_form(p, label) {
            Ok(spec) => SpectrumEntry {
                label,
                defined: true,
                character: Some(classify_point(&spec)),
                spectrum: Some(spec),
                reason: None,
            },
            Err(e) => SpectrumEntry { label, defined: false, spectrum: None, character: None, reason: Some(e.to_string()) },
        })
        .collect();
    let region = match chaotic_candidate(p) {
        Ok(r) if r.chaotic_candidate => RegionSection::Candidate(r),
        Ok(r) => RegionSection::NotCandidate(r),
        Err(e) => RegionSection::UndefinedRatio { reason: e.to_string() },
    };
    AnalysisReport {
        params: *p,
        steady_states: steady_states(p).entries.to_vec(),
        spectra,
        region,
        lyapunov: None,
    }
}

pub(crate) fn cmd_analyze(
    cfg: &ConfigFile,
    params: &ParamArgs,
    with_lyapunov: bool,
    start: &StartArgs,
    solver: &SolverArgs,
) -> CliResult<String> {
    let p = cfg.params(params)?;
    let mut report = analyze_report(&p);
    if with_lyapunov {
        let initial = cfg.initial(start)?;
        let config = cfg.lyapunov(cfg.backend(solver)?)?;
        let result = lyapunov_max(&p, &initial, &config)
            .map_err(|e| CliError::Runtime(format!("Lyapunov estimate failed: {e}")))?;
        report.lyapunov = Some(LyapunovSection { initial, config, result });
    }
    serde_json::to_string_pretty(&report).map_err(|e| CliError::Runtime(e.to_string()))
}
