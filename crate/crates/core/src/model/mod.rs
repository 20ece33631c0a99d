//! The three-species system: right-hand side, Jacobian, equilibria, spectra
//! and the slow manifold.

mod eigen;
mod slow_manifold;
mod spectrum;
mod steady;

pub use eigen::{characteristic_roots, spectrum_numeric};
pub use slow_manifold::{slow_manifold, SlowManifold};
pub use spectrum::{
    is_real, sort_eigenvalues, spectrum_closed_form, Eigenvector, Spectrum, SpectrumSource,
    REALNESS_TOL,
};
pub use steady::{steady_states, SteadyLabel, SteadyState, SteadyStateSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major 3×3 real matrix.
pub type Matrix3 = [[f64; 3]; 3];

/// Default tolerance for membership in the closed positive octant.
pub const P3_TOL: f64 = 1e-9;

/// Model parameters `(A, B, C)`, all nonnegative and finite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct Params {
    a: f64,
    b: f64,
    c: f64,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    #[serde(rename = "A")]
    a: f64,
    #[serde(rename = "B")]
    b: f64,
    #[serde(rename = "C")]
    c: f64,
}

impl TryFrom<RawParams> for Params {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        Params::new(raw.a, raw.b, raw.c)
    }
}

impl From<Params> for RawParams {
    fn from(p: Params) -> Self {
        RawParams { a: p.a, b: p.b, c: p.c }
    }
}

impl Params {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        for (name, v) in [("A", a), ("B", b), ("C", c)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::domain(format!(
                    "parameter {name} must be finite and >= 0, got {v}"
                )));
            }
        }
        Ok(Params { a, b, c })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// `B/A`, or `None` when `A = 0`.
    pub fn ratio(&self) -> Option<f64> {
        (self.a > 0.0).then(|| self.b / self.a)
    }

    /// Same `B` and `C`, different `A`.
    pub fn with_a(&self, a: f64) -> Result<Self> {
        Params::new(a, self.b, self.c)
    }
}

/// A point `(X, Y, Z)` of phase space.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct State {
    #[serde(rename = "X")]
    pub x: f64,
    #[serde(rename = "Y")]
    pub y: f64,
    #[serde(rename = "Z")]
    pub z: f64,
}

impl State {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        State { x, y, z }
    }

    pub const fn from_array(v: [f64; 3]) -> Self {
        State { x: v[0], y: v[1], z: v[2] }
    }

    pub const fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Membership in the closed positive octant, up to `tol`.
    pub fn in_p3(&self, tol: f64) -> bool {
        self.x >= -tol && self.y >= -tol && self.z >= -tol
    }

    pub fn norm_inf(&self) -> f64 {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }

    pub(crate) fn check_finite(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::domain(format!("non-finite state {self:?}")))
        }
    }
}

impl From<[f64; 3]> for State {
    fn from(v: [f64; 3]) -> Self {
        State::from_array(v)
    }
}

/// Unchecked right-hand side; the integrators call this on every stage.
#[inline]
pub(crate) fn rhs(p: &Params, s: &[f64; 3]) -> [f64; 3] {
    let [x, y, z] = *s;
    let x2 = x * x;
    [
        x - x * y + p.c * x2 - p.a * z * x2,
        -y + x * y,
        -p.b * z + p.a * z * x2,
    ]
}

#[inline]
pub(crate) fn jacobian_unchecked(p: &Params, s: &[f64; 3]) -> Matrix3 {
    let [x, y, z] = *s;
    [
        [
            1.0 - y + 2.0 * p.c * x - 2.0 * p.a * z * x,
            -x,
            -p.a * x * x,
        ],
        [y, -1.0 + x, 0.0],
        [2.0 * p.a * z * x, 0.0, -p.b + p.a * x * x],
    ]
}

pub fn vector_field(p: &Params, s: &State) -> Result<[f64; 3]> {
    s.check_finite()?;
    Ok(rhs(p, &s.to_array()))
}

/// Analytic Jacobian of [`vector_field`].
pub fn jacobian(p: &Params, s: &State) -> Result<Matrix3> {
    s.check_finite()?;
    Ok(jacobian_unchecked(p, &s.to_array()))
}

/// Central-difference Jacobian with step `h`; column `j` is
/// `(f(s + h e_j) - f(s - h e_j)) / 2h`.
pub fn jacobian_fd(p: &Params, s: &State, h: f64) -> Result<Matrix3> {
    s.check_finite()?;
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::domain(format!("finite-difference step must be > 0, got {h}")));
    }
    let base = s.to_array();
    let mut jac = [[0.0; 3]; 3];
    for j in 0..3 {
        let mut fwd = base;
        let mut bwd = base;
        fwd[j] += h;
        bwd[j] -= h;
        let (f1, f0) = (rhs(p, &fwd), rhs(p, &bwd));
        for i in 0..3 {
            jac[i][j] = (f1[i] - f0[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}

/// Maximum absolute row sum.
pub fn matrix_norm_inf(m: &Matrix3) -> f64 {
    m.iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}
