//! Time stepping: adaptive Dormand–Prince 5(4) and a fixed-step classical
//! RK4 reference.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{rhs, Params, State, P3_TOL};

/// Any accepted state with `‖·‖∞` above this aborts the run.
pub const DIVERGENCE_CAP: f64 = 1e4;

/// Interior start with `Z > 0`, so the second predator takes part.
pub const DEFAULT_INITIAL_STATE: State = State::new(0.5, 1.0, 2.0);

/// Default transient cut as a fraction of the horizon.
pub const DEFAULT_TRANSIENT_FRACTION: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: u64,
    pub safety: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rtol: 1e-9,
            atol: 1e-12,
            h_init: 1e-3,
            h_min: 1e-12,
            h_max: 1.0,
            max_steps: 100_000_000,
            safety: 0.9,
        }
    }
}

impl IntegratorConfig {
    pub fn with_rtol(mut self, rtol: f64) -> Self {
        self.rtol = rtol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::domain(format!("{name} must be positive and finite, got {v}")))
            }
        };
        positive("rtol", self.rtol)?;
        positive("atol", self.atol)?;
        positive("h_init", self.h_init)?;
        positive("h_min", self.h_min)?;
        positive("h_max", self.h_max)?;
        if !(self.h_min <= self.h_init && self.h_init <= self.h_max) {
            return Err(Error::domain(format!(
                "need h_min <= h_init <= h_max, got {} / {} / {}",
                self.h_min, self.h_init, self.h_max
            )));
        }
        if self.max_steps == 0 {
            return Err(Error::domain("max_steps must be positive"));
        }
        if !(self.safety > 0.0 && self.safety < 1.0) {
            return Err(Error::domain(format!("safety must lie in (0, 1), got {}", self.safety)));
        }
        Ok(())
    }
}

/// Which integrator drives a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Backend {
    Adaptive(IntegratorConfig),
    /// Classical RK4 with constant step `h`; bit-reproducible.
    Fixed { h: f64 },
}

impl Default for Backend {
    fn default() -> Self {
        Backend::Adaptive(IntegratorConfig::default())
    }
}

impl Backend {
    pub fn validate(&self) -> Result<()> {
        match self {
            Backend::Adaptive(cfg) => cfg.validate(),
            Backend::Fixed { h } if *h > 0.0 && h.is_finite() => Ok(()),
            Backend::Fixed { h } => Err(Error::domain(format!("fixed step must be > 0, got {h}"))),
        }
    }

    /// Integrate over `[0, t_end]`. The fixed backend takes `ceil(t_end / h)` steps.
    pub fn run(&self, p: &Params, s0: &State, t_end: f64) -> Result<Trajectory> {
        match self {
            Backend::Adaptive(cfg) => integrate(p, s0, t_end, cfg),
            Backend::Fixed { h } => {
                if !(t_end > 0.0) || !t_end.is_finite() {
                    return Err(Error::domain(format!("t_end must be positive, got {t_end}")));
                }
                let n = fixed_step_count(t_end, *h)?;
                integrate_fixed(p, s0, *h, n)
            }
        }
    }
}

pub(crate) fn fixed_step_count(span: f64, h: f64) -> Result<u64> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::domain(format!("fixed step must be > 0, got {h}")));
    }
    // Tolerate representation error in span / h before rounding up.
    Ok(((span / h) * (1.0 - 1e-12)).ceil().max(1.0) as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Method {
    Adaptive(IntegratorConfig),
    FixedRk4 { h: f64, n_steps: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StepStats {
    pub accepted: u64,
    pub rejected: u64,
    /// Accepted states with a coordinate below `-P3_TOL`.
    pub p3_warnings: u64,
}

/// Accepted samples of one run, starting with the initial state at `t = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub params: Params,
    pub method: Method,
    pub stats: StepStats,
}

impl Trajectory {
    /// Build from raw samples, checking ordering, lengths and finiteness.
    pub fn from_samples(
        times: Vec<f64>,
        states: Vec<State>,
        params: Params,
        method: Method,
    ) -> Result<Self> {
        if times.len() != states.len() {
            return Err(Error::domain("times and states differ in length"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain("times must be strictly increasing"));
        }
        if times.iter().any(|t| !t.is_finite()) || states.iter().any(|s| !s.is_finite()) {
            return Err(Error::domain("trajectory contains non-finite samples"));
        }
        Ok(Trajectory { times, states, params, method, stats: StepStats::default() })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_time(&self) -> Option<f64> {
        self.times.last().copied()
    }

    pub fn last_state(&self) -> Option<State> {
        self.states.last().copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbeddedStep {
    pub state5: State,
    pub state4: State,
    /// Weighted max-norm of `state5 - state4`; a step is acceptable when `<= 1`.
    pub error_estimate: f64,
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;

const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;

const E1: f64 = 5179.0 / 57600.0;
const E3: f64 = 7571.0 / 16695.0;
const E4: f64 = 393.0 / 640.0;
const E5: f64 = -92097.0 / 339200.0;
const E6: f64 = 187.0 / 2100.0;
const E7: f64 = 1.0 / 40.0;

/// Stage failure: offset within the step and the offending stage value.
pub(crate) type StageFailure<const N: usize> = (f64, [f64; N]);

fn finite<const N: usize>(v: &[f64; N]) -> bool {
    v.iter().all(|x| x.is_finite())
}

fn combo<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        let mut acc = 0.0;
        for (w, k) in terms {
            acc += w * k[i];
        }
        out[i] += h * acc;
    }
    out
}

/// One Dormand–Prince step; returns the 5th and embedded 4th order solutions.
pub(crate) fn dopri_step<const N: usize, F>(
    f: &F,
    y: &[f64; N],
    h: f64,
) -> std::result::Result<([f64; N], [f64; N]), StageFailure<N>>
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    let eval = |offset: f64, arg: [f64; N]| {
        let k = f(&arg);
        if finite(&arg) && finite(&k) {
            Ok(k)
        } else {
            Err((offset * h, arg))
        }
    };
    let k1 = eval(0.0, *y)?;
    let k2 = eval(C2, combo(y, h, &[(A21, &k1)]))?;
    let k3 = eval(C3, combo(y, h, &[(A31, &k1), (A32, &k2)]))?;
    let k4 = eval(C4, combo(y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]))?;
    let k5 = eval(C5, combo(y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]))?;
    let k6 = eval(
        1.0,
        combo(y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
    )?;
    let y5 = combo(y, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
    let k7 = eval(1.0, y5)?;
    let y4 = combo(y, h, &[(E1, &k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)]);
    Ok((y5, y4))
}

pub(crate) fn error_norm<const N: usize>(
    y0: &[f64; N],
    y5: &[f64; N],
    y4: &[f64; N],
    rtol: f64,
    atol: f64,
) -> f64 {
    (0..N)
        .map(|i| (y5[i] - y4[i]).abs() / (atol + rtol * y0[i].abs().max(y5[i].abs())))
        .fold(0.0, f64::max)
}

pub(crate) fn rk4_step<const N: usize, F>(
    f: &F,
    y: &[f64; N],
    h: f64,
) -> std::result::Result<[f64; N], StageFailure<N>>
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    let eval = |offset: f64, arg: [f64; N]| {
        let k = f(&arg);
        if finite(&arg) && finite(&k) {
            Ok(k)
        } else {
            Err((offset * h, arg))
        }
    };
    let k1 = eval(0.0, *y)?;
    let k2 = eval(0.5, combo(y, h, &[(0.5, &k1)]))?;
    let k3 = eval(0.5, combo(y, h, &[(0.5, &k2)]))?;
    let k4 = eval(1.0, combo(y, h, &[(1.0, &k3)]))?;
    let out = combo(y, h, &[(1.0 / 6.0, &k1), (1.0 / 3.0, &k2), (1.0 / 3.0, &k3), (1.0 / 6.0, &k4)]);
    if finite(&out) {
        Ok(out)
    } else {
        Err((h, out))
    }
}

pub(crate) fn head3<const N: usize>(v: &[f64; N]) -> [f64; 3] {
    [v[0], v[1], v[2]]
}

/// Adaptive stepper whose step size carries over between calls to
/// [`AdaptiveStepper::advance`].
pub(crate) struct AdaptiveStepper<'a> {
    cfg: &'a IntegratorConfig,
    h: f64,
    pub stats: StepStats,
}

impl<'a> AdaptiveStepper<'a> {
    pub fn new(cfg: &'a IntegratorConfig) -> Self {
        AdaptiveStepper { cfg, h: cfg.h_init, stats: StepStats::default() }
    }

    /// Advance `y` from `*t` to exactly `t_target`, calling `on_accept` after
    /// every accepted step.
    pub fn advance<const N: usize, F, A>(
        &mut self,
        f: &F,
        y: &mut [f64; N],
        t: &mut f64,
        t_target: f64,
        mut on_accept: A,
    ) -> Result<()>
    where
        F: Fn(&[f64; N]) -> [f64; N],
        A: FnMut(f64, &[f64; N]) -> Result<()>,
    {
        let cfg = self.cfg;
        while *t < t_target {
            if self.stats.accepted + self.stats.rejected >= cfg.max_steps {
                return Err(Error::StepBudget { max_steps: cfg.max_steps, t: *t });
            }
            let remaining = t_target - *t;
            let last = self.h >= remaining;
            let h = if last { remaining } else { self.h };

            let (y5, y4) = dopri_step(f, y, h).map_err(|(dt, bad)| Error::Overflow {
                t: *t + dt,
                state: head3(&bad),
            })?;
            let err = error_norm(y, &y5, &y4, cfg.rtol, cfg.atol);
            if !err.is_finite() {
                return Err(Error::Overflow { t: *t + h, state: head3(&y5) });
            }
            let proposal = (h * cfg.safety * err.powf(-0.2)).clamp(cfg.h_min, cfg.h_max);

            if err <= 1.0 {
                *t = if last { t_target } else { *t + h };
                *y = y5;
                self.stats.accepted += 1;
                on_accept(*t, y)?;
                // A truncated final step says little about the natural step size.
                self.h = if last { proposal.max(self.h) } else { proposal };
            } else {
                self.stats.rejected += 1;
                if h <= cfg.h_min {
                    return Err(Error::Stiffness { t: *t, h });
                }
                self.h = proposal;
            }
        }
        Ok(())
    }
}

/// Divergence and positivity checks applied to every accepted state.
pub(crate) fn check_state(t: f64, s: &[f64; 3], stats: &mut StepStats) -> Result<()> {
    let state = State::from_array(*s);
    if state.norm_inf() > DIVERGENCE_CAP {
        return Err(Error::LeftRegion { t, state: *s });
    }
    if !state.in_p3(P3_TOL) {
        stats.p3_warnings += 1;
        warn!("state left the positive octant at t = {t}: {s:?}");
    }
    Ok(())
}

/// A single embedded step, with the error measured against the tolerances in `cfg`.
pub fn step(p: &Params, s: &State, h: f64, cfg: &IntegratorConfig) -> Result<EmbeddedStep> {
    s.check_finite()?;
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::domain(format!("step size must be > 0, got {h}")));
    }
    let y = s.to_array();
    let f = |v: &[f64; 3]| rhs(p, v);
    let (y5, y4) = dopri_step(&f, &y, h)
        .map_err(|(dt, bad)| Error::Overflow { t: dt, state: bad })?;
    Ok(EmbeddedStep {
        state5: State::from_array(y5),
        state4: State::from_array(y4),
        error_estimate: error_norm(&y, &y5, &y4, cfg.rtol, cfg.atol),
    })
}

/// Adaptive integration over `[0, t_end]`, recording every accepted step.
pub fn integrate(p: &Params, s0: &State, t_end: f64, cfg: &IntegratorConfig) -> Result<Trajectory> {
    s0.check_finite()?;
    cfg.validate()?;
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(Error::domain(format!("t_end must be positive, got {t_end}")));
    }
    let f = |v: &[f64; 3]| rhs(p, v);
    let mut stepper = AdaptiveStepper::new(cfg);
    let mut y = s0.to_array();
    let mut t = 0.0;
    let mut times = vec![0.0];
    let mut states = vec![*s0];
    let mut warnings = StepStats::default();
    check_state(0.0, &y, &mut warnings)?;
    stepper.advance(&f, &mut y, &mut t, t_end, |t, y| {
        check_state(t, y, &mut warnings)?;
        times.push(t);
        states.push(State::from_array(*y));
        Ok(())
    })?;
    let mut stats = stepper.stats;
    stats.p3_warnings = warnings.p3_warnings;
    Ok(Trajectory { times, states, params: *p, method: Method::Adaptive(*cfg), stats })
}

/// `n_steps` classical RK4 steps of size `h`; sample `k` sits at `t = k h`.
pub fn integrate_fixed(p: &Params, s0: &State, h: f64, n_steps: u64) -> Result<Trajectory> {
    s0.check_finite()?;
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::domain(format!("step size must be > 0, got {h}")));
    }
    if n_steps == 0 {
        return Err(Error::domain("n_steps must be positive"));
    }
    let f = |v: &[f64; 3]| rhs(p, v);
    let mut y = s0.to_array();
    let mut stats = StepStats::default();
    let mut times = Vec::with_capacity(n_steps as usize + 1);
    let mut states = Vec::with_capacity(n_steps as usize + 1);
    check_state(0.0, &y, &mut stats)?;
    times.push(0.0);
    states.push(*s0);
    for k in 1..=n_steps {
        let t0 = (k - 1) as f64 * h;
        y = rk4_step(&f, &y, h).map_err(|(dt, bad)| Error::Overflow { t: t0 + dt, state: bad })?;
        let t = k as f64 * h;
        check_state(t, &y, &mut stats)?;
        stats.accepted += 1;
        times.push(t);
        states.push(State::from_array(y));
    }
    Ok(Trajectory {
        times,
        states,
        params: *p,
        method: Method::FixedRk4 { h, n_steps },
        stats,
    })
}

/// Keep the samples with `t >= t_cut`.
pub fn discard_transient(tr: &Trajectory, t_cut: f64) -> Result<Trajectory> {
    if !(t_cut >= 0.0) || !t_cut.is_finite() {
        return Err(Error::domain(format!("t_cut must be >= 0, got {t_cut}")));
    }
    let t_final = tr
        .final_time()
        .ok_or_else(|| Error::EmptyResult("trajectory has no samples".into()))?;
    if t_cut >= t_final {
        return Err(Error::EmptyResult(format!(
            "t_cut = {t_cut} is not before the final time {t_final}"
        )));
    }
    let start = tr.times.partition_point(|&t| t < t_cut);
    Ok(Trajectory {
        times: tr.times[start..].to_vec(),
        states: tr.states[start..].to_vec(),
        params: tr.params,
        method: tr.method,
        stats: tr.stats,
    })
}
