use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Params, State, P3_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SteadyLabel {
    Ss1,
    Ss2,
    Ss3,
    Ss4,
    Ss5,
}

impl SteadyLabel {
    pub const ALL: [SteadyLabel; 5] = [
        SteadyLabel::Ss1,
        SteadyLabel::Ss2,
        SteadyLabel::Ss3,
        SteadyLabel::Ss4,
        SteadyLabel::Ss5,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SteadyLabel::Ss1 => "Ss1",
            SteadyLabel::Ss2 => "Ss2",
            SteadyLabel::Ss3 => "Ss3",
            SteadyLabel::Ss4 => "Ss4",
            SteadyLabel::Ss5 => "Ss5",
        }
    }
}

impl fmt::Display for SteadyLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SteadyLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SteadyLabel::ALL
            .into_iter()
            .find(|l| l.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown steady-state label {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub label: SteadyLabel,
    /// `None` when the closed form divides by zero for these parameters.
    pub point: Option<State>,
    pub defined: bool,
    /// Defined and inside the positive octant.
    pub admissible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyStateSet {
    pub entries: [SteadyState; 5],
}

impl SteadyStateSet {
    pub fn get(&self, label: SteadyLabel) -> &SteadyState {
        &self.entries[label as usize]
    }

    pub fn point(&self, label: SteadyLabel) -> Option<State> {
        self.get(label).point
    }
}

/// The five equilibria in closed form.
///
/// `Ss4` needs `C > 0`; `Ss3` and `Ss5` need `A > 0` and `AB > 0`. Entries that
/// are undefined for the given parameters are flagged instead of failing.
pub fn steady_states(p: &Params) -> SteadyStateSet {
    let (a, b, c) = (p.a(), p.b(), p.c());
    let root_ratio = (a > 0.0 && a * b > 0.0).then(|| (b / a).sqrt());
    let root_ab = (a * b).sqrt();

    let point = |label| -> Option<State> {
        match label {
            SteadyLabel::Ss1 => Some(State::new(0.0, 0.0, 0.0)),
            SteadyLabel::Ss2 => Some(State::new(1.0, 1.0 + c, 0.0)),
            SteadyLabel::Ss3 => {
                root_ratio.map(|r| State::new(r, 0.0, (1.0 + c * r) / root_ab))
            }
            SteadyLabel::Ss4 => (c > 0.0).then(|| State::new(-1.0 / c, 0.0, 0.0)),
            SteadyLabel::Ss5 => {
                root_ratio.map(|r| State::new(-r, 0.0, (c * r - 1.0) / root_ab))
            }
        }
    };

    let entries = SteadyLabel::ALL.map(|label| {
        let point = point(label).filter(State::is_finite);
        SteadyState {
            label,
            point,
            defined: point.is_some(),
            admissible: point.is_some_and(|s| s.in_p3(P3_TOL)),
        }
    });
    SteadyStateSet { entries }
}
