use std::cmp::Ordering;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::eigen::{eigen_residual_ok, null_vector};
use super::{jacobian_unchecked, steady_states, Matrix3, Params, SteadyLabel};
use crate::error::{Error, Result};

pub type Eigenvector = [Complex64; 3];

/// An eigenvalue is treated as real when `|Im| <= REALNESS_TOL * (1 + |Re|)`.
pub const REALNESS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumSource {
    ClosedForm,
    Numeric,
}

/// Eigenvalues and (where available) eigenvectors of a Jacobian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub eigenvalues: [Complex64; 3],
    /// `None` marks an eigenvector whose formula is singular or that failed the
    /// residual check.
    pub eigenvectors: [Option<Eigenvector>; 3],
    pub source: SpectrumSource,
}

impl Spectrum {
    /// Eigenvalues in `(Re, Im)` lexicographic order.
    pub fn sorted_eigenvalues(&self) -> [Complex64; 3] {
        sort_eigenvalues(self.eigenvalues)
    }

    pub fn has_complex_pair(&self) -> bool {
        self.eigenvalues.iter().any(|l| !is_real(*l))
    }
}

pub fn is_real(l: Complex64) -> bool {
    l.im.abs() <= REALNESS_TOL * (1.0 + l.re.abs())
}

pub fn sort_eigenvalues(mut ev: [Complex64; 3]) -> [Complex64; 3] {
    ev.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap_or(Ordering::Equal)
            .then(a.im.partial_cmp(&b.im).unwrap_or(Ordering::Equal))
    });
    ev
}

fn csqrt(x: f64) -> Complex64 {
    Complex64::new(x, 0.0).sqrt()
}

fn real_vec(v: [f64; 3]) -> Eigenvector {
    v.map(|x| Complex64::new(x, 0.0))
}

/// Accept the displayed vector when it is finite and passes the residual
/// check; otherwise fall back to a numeric null vector. A formula that
/// divides by zero stays undefined.
fn validated(jac: &Matrix3, lambda: Complex64, v: Eigenvector) -> Option<Eigenvector> {
    if !v.iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
        return None;
    }
    if eigen_residual_ok(jac, lambda, &v) {
        return Some(v);
    }
    null_vector(jac, lambda).filter(|w| eigen_residual_ok(jac, lambda, w))
}

/// Spectra of `Ss1`, `Ss2` and `Ss3` from their closed forms.
///
/// Radicands are always evaluated as complex numbers, so a negative
/// discriminant yields an exact conjugate pair.
pub fn spectrum_closed_form(p: &Params, label: SteadyLabel) -> Result<Spectrum> {
    let (a, b, c) = (p.a(), p.b(), p.c());
    let (eigenvalues, vectors) = match label {
        SteadyLabel::Ss1 => {
            let ev = [1.0, -1.0, -b].map(|x| Complex64::new(x, 0.0));
            let vs = [
                real_vec([1.0, 0.0, 0.0]),
                real_vec([0.0, 1.0, 0.0]),
                real_vec([0.0, 0.0, 1.0]),
            ];
            (ev, vs)
        }
        SteadyLabel::Ss2 => {
            let d = csqrt((c - 2.0).powi(2) - 8.0);
            let one = Complex64::new(1.0, 0.0);
            let zero = Complex64::new(0.0, 0.0);
            let ev = [Complex64::new(a - b, 0.0), (c + d) / 2.0, (c - d) / 2.0];
            let v1 = real_vec([
                1.0,
                (c + 1.0) / (a - b),
                (b + c - a + (c + 1.0) / (b - a)) / a,
            ]);
            let v2 = [one, (c - d) / 2.0, zero];
            let v3 = [one, (c + d) / 2.0, zero];
            (ev, [v1, v2, v3])
        }
        SteadyLabel::Ss3 => {
            if !(a > 0.0 && a * b > 0.0) {
                return Err(Error::domain(format!(
                    "Ss3 is undefined for A = {a}, B = {b} (needs A > 0 and AB > 0)"
                )));
            }
            let r = (b / a).sqrt();
            let k = 1.0 + c * r;
            let s = csqrt(1.0 - 8.0 * b * k);
            let one = Complex64::new(1.0, 0.0);
            let zero = Complex64::new(0.0, 0.0);
            let ev = [Complex64::new(r - 1.0, 0.0), (s - 1.0) / 2.0, (-s - 1.0) / 2.0];
            let v1 = real_vec([
                1.0,
                -1.0 - 2.0 * (a * b).sqrt() * k / (r - 1.0),
                2.0 * k / (r - 1.0),
            ]);
            let v2 = [one, zero, (-s - 1.0) / (2.0 * b)];
            let v3 = [one, zero, (s - 1.0) / (2.0 * b)];
            (ev, [v1, v2, v3])
        }
        SteadyLabel::Ss4 | SteadyLabel::Ss5 => {
            return Err(Error::domain(format!(
                "no closed-form spectrum for {label}; use spectrum_numeric"
            )));
        }
    };

    let point = steady_states(p)
        .point(label)
        .ok_or_else(|| Error::domain(format!("{label} is undefined for {p:?}")))?;
    let jac = jacobian_unchecked(p, &point.to_array());
    let mut eigenvectors = [None; 3];
    for i in 0..3 {
        eigenvectors[i] = validated(&jac, eigenvalues[i], vectors[i]);
    }
    Ok(Spectrum { eigenvalues, eigenvectors, source: SpectrumSource::ClosedForm })
}
