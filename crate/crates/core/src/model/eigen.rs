//! Independent 3×3 eigen-solver: roots of the characteristic cubic plus
//! null-space eigenvectors. Used as the cross-check for the closed forms.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::spectrum::{is_real, Eigenvector, Spectrum, SpectrumSource};
use super::{jacobian, matrix_norm_inf, Matrix3, Params, State};
use crate::error::Result;

/// Relative residual bound for an eigenvector to count as defined.
const EIGVEC_TOL: f64 = 1e-8;

fn det3(m: &Matrix3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Coefficients `(c2, c1, c0)` of `det(λI - M) = λ³ + c2 λ² + c1 λ + c0`.
fn char_poly(m: &Matrix3) -> (f64, f64, f64) {
    let trace = m[0][0] + m[1][1] + m[2][2];
    let minors = m[0][0] * m[1][1] - m[0][1] * m[1][0] + m[0][0] * m[2][2] - m[0][2] * m[2][0]
        + m[1][1] * m[2][2]
        - m[1][2] * m[2][1];
    (-trace, minors, -det3(m))
}

/// Newton polish of a real root; only accepted when it lowers the residual.
fn polish(root: f64, c2: f64, c1: f64, c0: f64) -> f64 {
    let eval = |x: f64| ((x + c2) * x + c1) * x + c0;
    let mut x = root;
    for _ in 0..3 {
        let fx = eval(x);
        let dfx = (3.0 * x + 2.0 * c2) * x + c1;
        if fx == 0.0 || dfx == 0.0 {
            break;
        }
        let next = x - fx / dfx;
        if !next.is_finite() || eval(next).abs() >= fx.abs() {
            break;
        }
        x = next;
    }
    x
}

/// Roots of the characteristic polynomial of `m`.
///
/// Three distinct real roots come from the trigonometric form; otherwise one
/// real root from Cardano's formula and the remaining pair from the deflated
/// quadratic, which makes a complex pair exactly conjugate. Real roots are
/// returned ascending; with a complex pair the real root comes first and the
/// pair follows with positive imaginary part first.
pub fn characteristic_roots(m: &Matrix3) -> [Complex64; 3] {
    let (c2, c1, c0) = char_poly(m);
    let shift = -c2 / 3.0;
    // λ = t + shift  ⇒  t³ + p t + q = 0
    let p = c1 - c2 * c2 / 3.0;
    let q = 2.0 * c2.powi(3) / 27.0 - c2 * c1 / 3.0 + c0;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);

    if disc < 0.0 {
        // p < 0 here.
        let amp = 2.0 * (-p / 3.0).sqrt();
        let arg = ((3.0 * q) / (2.0 * p) * (-3.0 / p).sqrt()).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        let mut roots = [0, 1, 2].map(|k| {
            let t = amp * (phi - 2.0 * PI * k as f64 / 3.0).cos();
            polish(t + shift, c2, c1, c0)
        });
        roots.sort_by(|a, b| a.total_cmp(b));
        return roots.map(|r| Complex64::new(r, 0.0));
    }

    let sq = disc.sqrt();
    // Pick the sign that adds magnitudes to avoid cancellation.
    let w = -q / 2.0 - q.signum() * sq;
    let u = w.cbrt();
    let v = if u != 0.0 { -p / (3.0 * u) } else { 0.0 };
    let real = polish(u + v + shift, c2, c1, c0);

    // Remaining pair: sum and product from Vieta.
    let sum = -c2 - real;
    let prod = c1 - real * sum;
    let qd = sum * sum - 4.0 * prod;
    if qd < 0.0 {
        let im = (-qd).sqrt() / 2.0;
        let re = sum / 2.0;
        [Complex64::new(real, 0.0), Complex64::new(re, im), Complex64::new(re, -im)]
    } else {
        let big = (sum + sum.signum() * qd.sqrt()) / 2.0;
        let (r1, r2) = if big != 0.0 { (big, prod / big) } else { (0.0, 0.0) };
        let mut roots = [real, polish(r1, c2, c1, c0), polish(r2, c2, c1, c0)];
        roots.sort_by(|a, b| a.total_cmp(b));
        roots.map(|r| Complex64::new(r, 0.0))
    }
}

fn cross(a: &Eigenvector, b: &Eigenvector) -> Eigenvector {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm2(v: &Eigenvector) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn norm_inf(v: &Eigenvector) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `‖(J - λI) v‖∞`.
pub(crate) fn eigen_residual(jac: &Matrix3, lambda: Complex64, v: &Eigenvector) -> f64 {
    (0..3)
        .map(|i| {
            let jv: Complex64 = (0..3).map(|j| v[j] * jac[i][j]).sum();
            (jv - lambda * v[i]).norm()
        })
        .fold(0.0, f64::max)
}

pub(crate) fn eigen_residual_ok(jac: &Matrix3, lambda: Complex64, v: &Eigenvector) -> bool {
    let vnorm = norm_inf(v);
    vnorm > 0.0
        && eigen_residual(jac, lambda, v) <= EIGVEC_TOL * matrix_norm_inf(jac).max(1.0) * vnorm
}

/// A null vector of `J - λI`, chosen from the best-conditioned pair of rows.
///
/// Normalized to unit Euclidean length with its largest component real and
/// positive.
pub(crate) fn null_vector(jac: &Matrix3, lambda: Complex64) -> Option<Eigenvector> {
    let rows: [Eigenvector; 3] = [0, 1, 2].map(|i| {
        [0, 1, 2].map(|j| {
            let d = if i == j { lambda } else { Complex64::new(0.0, 0.0) };
            Complex64::new(jac[i][j], 0.0) - d
        })
    });
    let scale = rows.iter().map(norm2).fold(0.0, f64::max);
    if scale == 0.0 {
        // J = λI: every direction is an eigenvector.
        return Some([1.0, 0.0, 0.0].map(|x| Complex64::new(x, 0.0)));
    }

    let candidates = [
        cross(&rows[0], &rows[1]),
        cross(&rows[0], &rows[2]),
        cross(&rows[1], &rows[2]),
    ];
    let best = candidates
        .into_iter()
        .max_by(|a, b| norm2(a).total_cmp(&norm2(b)))
        .expect("three candidates");

    let v = if norm2(&best) > 1e-12 * scale * scale {
        best
    } else {
        // Rank one: anything orthogonal (bilinearly) to the dominant row.
        let row = rows
            .iter()
            .max_by(|a, b| norm2(a).total_cmp(&norm2(b)))
            .expect("three rows");
        let k = (0..3)
            .min_by(|&i, &j| row[i].norm().total_cmp(&row[j].norm()))
            .expect("three components");
        let mut e = [Complex64::new(0.0, 0.0); 3];
        e[k] = Complex64::new(1.0, 0.0);
        cross(row, &e)
    };

    let n = norm2(&v);
    if !(n > 0.0) || !n.is_finite() {
        return None;
    }
    let pivot = v
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .expect("three components");
    let phase = pivot.conj() / pivot.norm();
    Some(v.map(|z| z * phase / n))
}

/// Spectrum of the analytic Jacobian at `s`, independent of the closed forms.
pub fn spectrum_numeric(p: &Params, s: &State) -> Result<Spectrum> {
    let jac = jacobian(p, s)?;
    let mut eigenvalues = characteristic_roots(&jac);
    for l in eigenvalues.iter_mut() {
        if is_real(*l) {
            l.im = 0.0;
        }
    }
    let eigenvectors =
        eigenvalues.map(|l| null_vector(&jac, l).filter(|v| eigen_residual_ok(&jac, l, v)));
    Ok(Spectrum { eigenvalues, eigenvectors, source: SpectrumSource::Numeric })
}
