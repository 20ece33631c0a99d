//! Geometric diagnostics for the hole around the slow manifold.
//!
//! Samples are projected onto the slow manifold's axis and its normal plane.
//! The hole is summarised by the closest approach of in-band samples to the
//! axis and by how many angular sectors around the axis the orbit visits.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::integrator::{discard_transient, Backend, Trajectory, DEFAULT_INITIAL_STATE, DEFAULT_TRANSIENT_FRACTION};
use crate::model::{slow_manifold, steady_states, Params, SlowManifold, State, SteadyLabel};

/// A line in space; the axis the hole is measured around.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub base: [f64; 3],
    /// Unit direction.
    pub direction: [f64; 3],
    /// Orthonormal basis of the normal plane, `e1 × e2 = direction`.
    pub e1: [f64; 3],
    pub e2: [f64; 3],
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

impl Axis {
    pub fn from_manifold(l: &SlowManifold) -> Self {
        let (e1, e2) = l.normal_frame();
        Axis { base: l.base_point.to_array(), direction: l.direction, e1, e2 }
    }

    /// The same axis shifted by `v`.
    pub fn translated(&self, v: [f64; 3]) -> Self {
        Axis { base: [self.base[0] + v[0], self.base[1] + v[1], self.base[2] + v[2]], ..*self }
    }

    /// `(axial, u, v)`: position along the axis and in the normal plane.
    pub fn coordinates(&self, s: &State) -> (f64, f64, f64) {
        let r = [s.x - self.base[0], s.y - self.base[1], s.z - self.base[2]];
        (dot(r, self.direction), dot(r, self.e1), dot(r, self.e2))
    }

    pub fn point(&self, axial: f64, u: f64, v: f64) -> State {
        let c = |i: usize| self.base[i] + axial * self.direction[i] + u * self.e1[i] + v * self.e2[i];
        State::new(c(0), c(1), c(2))
    }
}

/// Band settings; `None` fields are resolved from the data or the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BandConfig {
    pub axial_lo: Option<f64>,
    pub axial_hi: Option<f64>,
    /// Defaults to `shell_factor ×` the median axial-band distance.
    pub shell_radius: Option<f64>,
    pub shell_factor: f64,
    /// Fraction trimmed from each end of the `Ss2`–`Ss3` span.
    pub axial_inset: f64,
    pub n_bins: usize,
}

impl Default for BandConfig {
    fn default() -> Self {
        BandConfig {
            axial_lo: None,
            axial_hi: None,
            shell_radius: None,
            shell_factor: 5.0,
            axial_inset: 0.1,
            n_bins: 64,
        }
    }
}

impl BandConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_bins == 0 {
            return Err(Error::domain("n_bins must be positive"));
        }
        if !(0.0..0.5).contains(&self.axial_inset) {
            return Err(Error::domain(format!("axial_inset must lie in [0, 0.5), got {}", self.axial_inset)));
        }
        if !(self.shell_factor > 0.0) {
            return Err(Error::domain("shell_factor must be positive"));
        }
        if let Some(r) = self.shell_radius {
            if !(r > 0.0) {
                return Err(Error::domain(format!("shell_radius must be positive, got {r}")));
            }
        }
        if let (Some(lo), Some(hi)) = (self.axial_lo, self.axial_hi) {
            if !(lo < hi) {
                return Err(Error::domain(format!("need axial_lo < axial_hi, got {lo} / {hi}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub axial_lo: f64,
    pub axial_hi: f64,
    pub shell_radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoleMetrics {
    pub min_distance: f64,
    /// Fraction of occupied angular bins, in `[0, 1]`.
    pub angular_coverage: f64,
    pub n_samples_in_band: usize,
    pub band: Band,
}

/// Axial span between the projections of `Ss2` and `Ss3`, trimmed by `inset`
/// at each end.
pub fn default_axial_band(p: &Params, inset: f64) -> Result<(f64, f64)> {
    let l = slow_manifold(p)?;
    let set = steady_states(p);
    let ss2 = set.point(SteadyLabel::Ss2).expect("Ss2 is always defined");
    let ss3 = set
        .point(SteadyLabel::Ss3)
        .ok_or_else(|| Error::domain("default axial band needs Ss3 (A > 0, B > 0)"))?;
    let (a2, a3) = (l.axial(&ss2), l.axial(&ss3));
    let (lo, hi) = if a2 <= a3 { (a2, a3) } else { (a3, a2) };
    let span = hi - lo;
    Ok((lo + inset * span, hi - inset * span))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Hole metrics of a point cloud around `axis`, for an axial range
/// `[axial_lo, axial_hi]`.
pub fn hole_metrics_on_axis(
    points: &[State],
    axis: &Axis,
    axial_lo: f64,
    axial_hi: f64,
    band: &BandConfig,
) -> Result<HoleMetrics> {
    band.validate()?;
    let in_axial: Vec<(f64, f64)> = points
        .iter()
        .map(|s| axis.coordinates(s))
        .filter(|(a, _, _)| *a >= axial_lo && *a <= axial_hi)
        .map(|(_, u, v)| (u, v))
        .collect();
    if in_axial.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no samples with axial coordinate in [{axial_lo}, {axial_hi}]"
        )));
    }

    let shell_radius = match band.shell_radius {
        Some(r) => r,
        None => {
            let r = band.shell_factor * median(in_axial.iter().map(|(u, v)| u.hypot(*v)).collect());
            if r > 0.0 {
                r
            } else {
                // Every sample sits on the axis; keep them all in the shell.
                f64::MIN_POSITIVE
            }
        }
    };

    let mut occupied = vec![false; band.n_bins];
    let mut min_distance = f64::INFINITY;
    let mut n = 0usize;
    for (u, v) in in_axial {
        let d = u.hypot(v);
        if d > shell_radius {
            continue;
        }
        n += 1;
        min_distance = min_distance.min(d);
        let angle = v.atan2(u);
        let bin = (((angle + PI) / (2.0 * PI)) * band.n_bins as f64).floor() as usize % band.n_bins;
        occupied[bin] = true;
    }
    if n == 0 {
        return Err(Error::InsufficientData(format!("no samples within shell radius {shell_radius}")));
    }
    let covered = occupied.iter().filter(|b| **b).count();
    Ok(HoleMetrics {
        min_distance,
        angular_coverage: covered as f64 / band.n_bins as f64,
        n_samples_in_band: n,
        band: Band { axial_lo, axial_hi, shell_radius },
    })
}

/// Hole metrics of a (post-transient) trajectory around the slow manifold of `p`.
pub fn hole_metrics(tr: &Trajectory, p: &Params, band: &BandConfig) -> Result<HoleMetrics> {
    if tr.is_empty() {
        return Err(Error::InsufficientData("empty trajectory".into()));
    }
    let axis = Axis::from_manifold(&slow_manifold(p)?);
    let (lo, hi) = match (band.axial_lo, band.axial_hi) {
        (Some(lo), Some(hi)) => (lo, hi),
        (lo, hi) => {
            let (dlo, dhi) = default_axial_band(p, band.axial_inset)?;
            (lo.unwrap_or(dlo), hi.unwrap_or(dhi))
        }
    };
    hole_metrics_on_axis(&tr.states, &axis, lo, hi, band)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Sphere-like: the orbit winds around the axis and reaches it.
    Closed,
    /// Torus-like: the orbit winds around the axis and keeps clear of it.
    Open,
    Indeterminate,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Closed => "closed",
            Verdict::Open => "open",
            Verdict::Indeterminate => "indeterminate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeClass {
    pub verdict: Verdict,
    pub eps_hole: f64,
    pub c_min: f64,
}

pub fn classify_shape(m: &HoleMetrics, eps_hole: f64, c_min: f64) -> ShapeClass {
    let winds = m.n_samples_in_band > 0 && m.angular_coverage >= c_min;
    let verdict = match (winds, m.min_distance > eps_hole) {
        (false, _) => Verdict::Indeterminate,
        (true, true) => Verdict::Open,
        (true, false) => Verdict::Closed,
    };
    ShapeClass { verdict, eps_hole, c_min }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    /// Absolute hole threshold; `None` means `eps_factor ×` attractor diameter.
    pub eps_hole: Option<f64>,
    pub eps_factor: f64,
    pub c_min: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { eps_hole: None, eps_factor: 0.02, c_min: 0.9 }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        if !(self.c_min > 0.0 && self.c_min <= 1.0) {
            return Err(Error::domain(format!("c_min must lie in (0, 1], got {}", self.c_min)));
        }
        if let Some(e) = self.eps_hole {
            if !(e > 0.0) {
                return Err(Error::domain(format!("eps_hole must be positive, got {e}")));
            }
        }
        if !(self.eps_factor > 0.0) {
            return Err(Error::domain("eps_factor must be positive"));
        }
        Ok(())
    }

    pub fn resolve_eps(&self, points: &[State]) -> f64 {
        self.eps_hole.unwrap_or_else(|| self.eps_factor * attractor_diameter(points))
    }
}

/// Diagonal of the axis-aligned bounding box of `points`.
pub fn attractor_diameter(points: &[State]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for s in points {
        for (i, v) in s.to_array().into_iter().enumerate() {
            lo[i] = lo[i].min(v);
            hi[i] = hi[i].max(v);
        }
    }
    (0..3).map(|i| (hi[i] - lo[i]).powi(2)).sum::<f64>().sqrt()
}

/// `B` and `C` held fixed during an `A` sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseParams {
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "C")]
    pub c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScanSim {
    pub initial: State,
    pub t_end: f64,
    /// Transient cut; `None` means `DEFAULT_TRANSIENT_FRACTION × t_end`.
    pub t_cut: Option<f64>,
    pub backend: Backend,
}

impl Default for ScanSim {
    fn default() -> Self {
        ScanSim { initial: DEFAULT_INITIAL_STATE, t_end: 40_000.0, t_cut: None, backend: Backend::default() }
    }
}

impl ScanSim {
    pub fn resolved_t_cut(&self) -> f64 {
        self.t_cut.unwrap_or(DEFAULT_TRANSIENT_FRACTION * self.t_end)
    }
}

/// Everything needed to reproduce one entry of a scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRun {
    pub params: Params,
    pub initial: State,
    pub t_end: f64,
    pub t_cut: f64,
    pub backend: Backend,
}

impl ScanRun {
    /// Short content hash identifying this run's configuration.
    pub fn id(&self) -> String {
        let json = serde_json::to_vec(self).expect("scan run serializes");
        let digest = Sha256::digest(&json);
        hex::encode(&digest[..8])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ScanOutcome {
    Measured { metrics: HoleMetrics, shape: ShapeClass },
    /// The orbit never entered the band (e.g. it settled on an equilibrium).
    NoBandSamples { reason: String },
    Failed { error: String, failure_time: Option<f64> },
}

impl ScanOutcome {
    /// Verdict column value: `error` for failed runs.
    pub fn verdict_label(&self) -> &'static str {
        match self {
            ScanOutcome::Measured { shape, .. } => shape.verdict.as_str(),
            ScanOutcome::NoBandSamples { .. } => Verdict::Indeterminate.as_str(),
            ScanOutcome::Failed { .. } => "error",
        }
    }

    pub fn metrics(&self) -> Option<&HoleMetrics> {
        match self {
            ScanOutcome::Measured { metrics, .. } => Some(metrics),
            _ => None,
        }
    }

    pub fn verdict(&self) -> Option<Verdict> {
        match self {
            ScanOutcome::Measured { shape, .. } => Some(shape.verdict),
            ScanOutcome::NoBandSamples { .. } => Some(Verdict::Indeterminate),
            ScanOutcome::Failed { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanEntry {
    pub a: f64,
    pub run: ScanRun,
    pub run_id: String,
    pub outcome: ScanOutcome,
    #[serde(skip)]
    pub trajectory: Option<Trajectory>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurgeryScanResult {
    pub base: BaseParams,
    pub a_values: Vec<f64>,
    pub entries: Vec<ScanEntry>,
    /// Index of the first entry classified open.
    pub transition_index: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ScanOptions {
    /// Worker threads; `None` uses rayon's default pool.
    pub jobs: Option<usize>,
    /// Keep each full trajectory on its entry.
    pub keep_trajectories: bool,
}

fn run_entry(
    base: &BaseParams,
    a: f64,
    sim: &ScanSim,
    band: &BandConfig,
    thresholds: &Thresholds,
    keep: bool,
) -> Result<ScanEntry> {
    let params = Params::new(a, base.b, base.c)?;
    let run = ScanRun {
        params,
        initial: sim.initial,
        t_end: sim.t_end,
        t_cut: sim.resolved_t_cut(),
        backend: sim.backend,
    };
    let run_id = run.id();
    let mut trajectory = None;
    let outcome = match sim.backend.run(&params, &sim.initial, sim.t_end) {
        Err(e) => ScanOutcome::Failed { failure_time: e.failure_time(), error: e.to_string() },
        Ok(tr) => {
            let outcome = match discard_transient(&tr, run.t_cut) {
                Err(e) => ScanOutcome::Failed { failure_time: None, error: e.to_string() },
                Ok(post) => match hole_metrics(&post, &params, band) {
                    Ok(metrics) => {
                        let eps = thresholds.resolve_eps(&post.states);
                        ScanOutcome::Measured { shape: classify_shape(&metrics, eps, thresholds.c_min), metrics }
                    }
                    Err(Error::InsufficientData(reason)) => ScanOutcome::NoBandSamples { reason },
                    Err(e) => ScanOutcome::Failed { failure_time: None, error: e.to_string() },
                },
            };
            if keep {
                trajectory = Some(tr);
            }
            outcome
        }
    };
    Ok(ScanEntry { a, run, run_id, outcome, trajectory })
}

/// Sweep `A` with `B` and `C` fixed, measuring the hole for each value.
///
/// Entries are independent and may run concurrently; results are ordered by
/// `A`. Integration failures are recorded on their entry and the scan
/// continues.
pub fn surgery_scan(
    base: &BaseParams,
    a_values: &[f64],
    sim: &ScanSim,
    band: &BandConfig,
    thresholds: &Thresholds,
    opts: &ScanOptions,
) -> Result<SurgeryScanResult> {
    Params::new(0.0, base.b, base.c)?;
    if a_values.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
        return Err(Error::domain("every A value must be positive and finite"));
    }
    if a_values.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::domain("A values must be strictly increasing"));
    }
    if !(sim.t_end > 0.0) || !sim.t_end.is_finite() {
        return Err(Error::domain(format!("t_end must be positive, got {}", sim.t_end)));
    }
    sim.backend.validate()?;
    band.validate()?;
    thresholds.validate()?;

    let work = || -> Result<Vec<ScanEntry>> {
        a_values
            .par_iter()
            .map(|&a| run_entry(base, a, sim, band, thresholds, opts.keep_trajectories))
            .collect()
    };
    let entries = match opts.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::domain(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    let transition_index = entries.iter().position(|e| e.outcome.verdict() == Some(Verdict::Open));
    Ok(SurgeryScanResult { base: *base, a_values: a_values.to_vec(), entries, transition_index })
}
