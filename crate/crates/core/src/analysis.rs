//! Local stability classes, the chaos-candidate gate on parameter space, and
//! a largest-Lyapunov-exponent estimator.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{
    check_state, fixed_step_count, head3, rk4_step, AdaptiveStepper, Backend, StepStats,
    DEFAULT_INITIAL_STATE,
};
use crate::model::{
    is_real, jacobian_unchecked, rhs, spectrum_closed_form, Params, Spectrum, State, SteadyLabel,
};

/// Real parts with magnitude at or below this count as zero.
pub const DEGENERACY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointKind {
    Saddle,
    StableNode,
    UnstableNode,
    /// Stable focus: spirals inward, attracting along the axis.
    StableVortexIn,
    /// Unstable focus: spirals outward, repelling along the axis.
    UnstableVortexOut,
    /// Spiral out in the plane of the complex pair, attracted along the real axis.
    RepellingPlanarAttractingAxis,
    /// Spiral in within the plane, repelled along the real axis.
    AttractingPlanarRepellingAxis,
    /// At least one real part is zero within tolerance.
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Positive,
    #[serde(rename = "-")]
    Negative,
    #[serde(rename = "0")]
    Zero,
}

impl Sign {
    fn of(x: f64) -> Sign {
        if x > DEGENERACY_TOL {
            Sign::Positive
        } else if x < -DEGENERACY_TOL {
            Sign::Negative
        } else {
            Sign::Zero
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointCharacter {
    pub kind: PointKind,
    pub complex_pair: bool,
    /// Signs of the real parts, in the spectrum's own order.
    pub signs: [Sign; 3],
}

/// Classify an equilibrium from the sign pattern of its eigenvalues.
///
/// | real parts       | complex pair | kind                              |
/// |------------------|--------------|-----------------------------------|
/// | any zero         | –            | degenerate                        |
/// | all −            | no / yes     | stable node / stable vortex in    |
/// | all +            | no / yes     | unstable node / unstable vortex out |
/// | mixed            | no           | saddle                            |
/// | real −, pair +   | yes          | repelling planar, attracting axis |
/// | real +, pair −   | yes          | attracting planar, repelling axis |
pub fn classify_point(spec: &Spectrum) -> PointCharacter {
    classify_eigenvalues(&spec.eigenvalues)
}

pub fn classify_eigenvalues(ev: &[Complex64; 3]) -> PointCharacter {
    let signs = ev.map(|l| Sign::of(l.re));
    let complex_pair = ev.iter().any(|l| !is_real(*l));

    let kind = if signs.contains(&Sign::Zero) {
        PointKind::Degenerate
    } else if signs.iter().all(|s| *s == Sign::Negative) {
        if complex_pair {
            PointKind::StableVortexIn
        } else {
            PointKind::StableNode
        }
    } else if signs.iter().all(|s| *s == Sign::Positive) {
        if complex_pair {
            PointKind::UnstableVortexOut
        } else {
            PointKind::UnstableNode
        }
    } else if !complex_pair {
        PointKind::Saddle
    } else {
        // Mixed signs with a pair: the odd one out is the real eigenvalue.
        let real_sign = ev
            .iter()
            .zip(signs)
            .find(|(l, _)| is_real(**l))
            .map(|(_, s)| s)
            .unwrap_or(Sign::Zero);
        match real_sign {
            Sign::Negative => PointKind::RepellingPlanarAttractingAxis,
            Sign::Positive => PointKind::AttractingPlanarRepellingAxis,
            Sign::Zero => PointKind::Degenerate,
        }
    };
    PointCharacter { kind, complex_pair, signs }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionReport {
    pub params: Params,
    pub ratio: f64,
    pub ss2: PointCharacter,
    /// `None` when `Ss3` is undefined (`B = 0`).
    pub ss3: Option<PointCharacter>,
    pub chaotic_candidate: bool,
    /// `B/A <= 1`: the slow manifold pulls towards the stable side.
    pub stable_side: bool,
}

fn first_real_then_rest(spec: &Spectrum) -> (f64, [f64; 2]) {
    let ev = spec.eigenvalues;
    (ev[0].re, [ev[1].re, ev[2].re])
}

/// Decide whether `(A, B, C)` sits where bounded non-periodic motion is expected.
///
/// True iff `B/A > 1`, `Ss2` has its axis eigenvalue negative with the other
/// two real parts positive, and `Ss3` has the mirrored pattern.
pub fn chaotic_candidate(p: &Params) -> Result<RegionReport> {
    let ratio = p
        .ratio()
        .ok_or_else(|| Error::domain("chaotic_candidate needs A > 0"))?;
    let ss2_spec = spectrum_closed_form(p, SteadyLabel::Ss2)?;
    let ss3_spec = spectrum_closed_form(p, SteadyLabel::Ss3).ok();

    let stable_side = ratio <= 1.0 + DEGENERACY_TOL;
    let (l1, rest) = first_real_then_rest(&ss2_spec);
    let ss2_repels = l1 < -DEGENERACY_TOL && rest.iter().all(|r| *r > DEGENERACY_TOL);
    let ss3_attracts = ss3_spec.as_ref().is_some_and(|s| {
        let (l1, rest) = first_real_then_rest(s);
        l1 > DEGENERACY_TOL && rest.iter().all(|r| *r < -DEGENERACY_TOL)
    });

    Ok(RegionReport {
        params: *p,
        ratio,
        ss2: classify_point(&ss2_spec),
        ss3: ss3_spec.as_ref().map(classify_point),
        chaotic_candidate: !stable_side && ss2_repels && ss3_attracts,
        stable_side,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LyapunovConfig {
    pub t_total: f64,
    pub t_renorm: f64,
    pub t_transient: f64,
    pub backend: Backend,
    /// Initial tangent direction; normalized before use.
    pub initial_tangent: [f64; 3],
}

impl Default for LyapunovConfig {
    fn default() -> Self {
        LyapunovConfig {
            t_total: 5000.0,
            t_renorm: 1.0,
            t_transient: 500.0,
            backend: Backend::default(),
            initial_tangent: [1.0, 1.0, 1.0],
        }
    }
}

impl LyapunovConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_renorm > 0.0) || !self.t_renorm.is_finite() {
            return Err(Error::domain(format!("t_renorm must be > 0, got {}", self.t_renorm)));
        }
        if !(self.t_transient >= 0.0 && self.t_transient < self.t_total) || !self.t_total.is_finite() {
            return Err(Error::domain(format!(
                "need 0 <= t_transient < t_total, got {} / {}",
                self.t_transient, self.t_total
            )));
        }
        let n: f64 = self.initial_tangent.iter().map(|v| v * v).sum();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::domain("initial tangent must be a finite nonzero vector"));
        }
        self.backend.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    /// Mean log growth rate over post-transient windows (1/time).
    pub estimate: f64,
    /// Standard error of the window mean.
    pub standard_error: f64,
    pub windows: usize,
}

/// Orbit plus tangent vector: `(x, v)` with `v' = J(x) v`.
fn variational(p: &Params, w: &[f64; 6]) -> [f64; 6] {
    let x = [w[0], w[1], w[2]];
    let f = rhs(p, &x);
    let j = jacobian_unchecked(p, &x);
    let mut out = [f[0], f[1], f[2], 0.0, 0.0, 0.0];
    for i in 0..3 {
        out[3 + i] = j[i][0] * w[3] + j[i][1] * w[4] + j[i][2] * w[5];
    }
    out
}

fn renormalize(w: &mut [f64; 6]) -> f64 {
    let n = (w[3] * w[3] + w[4] * w[4] + w[5] * w[5]).sqrt();
    for v in &mut w[3..] {
        *v /= n;
    }
    n
}

/// Largest Lyapunov exponent by tangent-space propagation with periodic
/// renormalization.
///
/// The tangent vector is evolved with the analytic Jacobian alongside the
/// orbit and renormalized every `t_renorm`; windows ending after
/// `t_transient` contribute their log growth to the average.
pub fn lyapunov_max(p: &Params, s0: &State, cfg: &LyapunovConfig) -> Result<LyapunovEstimate> {
    s0.check_finite()?;
    cfg.validate()?;

    let f = |w: &[f64; 6]| variational(p, w);
    let mut w = [s0.x, s0.y, s0.z, cfg.initial_tangent[0], cfg.initial_tangent[1], cfg.initial_tangent[2]];
    renormalize(&mut w);

    let n_windows = (cfg.t_total / cfg.t_renorm).floor() as u64;
    let mut rates = Vec::new();
    let mut checks = StepStats::default();
    let mut record = |k: u64, w: &mut [f64; 6]| -> Result<()> {
        let growth = renormalize(w);
        if !(growth > 0.0) || !growth.is_finite() {
            return Err(Error::Overflow { t: (k + 1) as f64 * cfg.t_renorm, state: head3(w) });
        }
        let t_end = (k + 1) as f64 * cfg.t_renorm;
        if t_end > cfg.t_transient {
            rates.push(growth.ln() / cfg.t_renorm);
        }
        Ok(())
    };

    match &cfg.backend {
        Backend::Adaptive(icfg) => {
            let mut stepper = AdaptiveStepper::new(icfg);
            let mut t = 0.0;
            for k in 0..n_windows {
                let target = (k + 1) as f64 * cfg.t_renorm;
                stepper.advance(&f, &mut w, &mut t, target, |t, y| check_state(t, &head3(y), &mut checks))?;
                record(k, &mut w)?;
            }
        }
        Backend::Fixed { h } => {
            let per_window = fixed_step_count(cfg.t_renorm, *h)?;
            let h_eff = cfg.t_renorm / per_window as f64;
            for k in 0..n_windows {
                for i in 0..per_window {
                    let t0 = k as f64 * cfg.t_renorm + i as f64 * h_eff;
                    w = rk4_step(&f, &w, h_eff)
                        .map_err(|(dt, bad)| Error::Overflow { t: t0 + dt, state: head3(&bad) })?;
                    check_state(t0 + h_eff, &head3(&w), &mut checks)?;
                }
                record(k, &mut w)?;
            }
        }
    }

    if rates.is_empty() {
        return Err(Error::InsufficientData("no renormalization windows after the transient".into()));
    }
    let n = rates.len() as f64;
    let mean = rates.iter().sum::<f64>() / n;
    let standard_error = if rates.len() > 1 {
        let var = rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    Ok(LyapunovEstimate { estimate: mean, standard_error, windows: rates.len() })
}

/// [`lyapunov_max`] from the default interior start.
pub fn lyapunov_max_default(p: &Params, cfg: &LyapunovConfig) -> Result<LyapunovEstimate> {
    lyapunov_max(p, &DEFAULT_INITIAL_STATE, cfg)
}
