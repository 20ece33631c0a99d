use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use super::io::{read_trajectory_csv, write_text, TrajectoryTable};
use super::job::{manifest_path, Job, RunManifest};
use super::{CliError, CliResult, ParamArgs};
use crate::model::{slow_manifold, steady_states, SteadyLabel};
use crate::{Params, State};

/// Fraction of each dimension left empty on either side of the data.
const MARGIN: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Plane {
    Xy,
    Xz,
    Yz,
}

impl FromStr for Plane {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "xy" => Ok(Plane::Xy),
            "xz" => Ok(Plane::Xz),
            "yz" => Ok(Plane::Yz),
            other => Err(format!("unknown plane '{other}' (expected xy, xz or yz)")),
        }
    }
}

impl Plane {
    pub fn project(&self, s: &State) -> (f64, f64) {
        match self {
            Plane::Xy => (s.x, s.y),
            Plane::Xz => (s.x, s.z),
            Plane::Yz => (s.y, s.z),
        }
    }

    fn axis_names(&self) -> (&'static str, &'static str) {
        match self {
            Plane::Xy => ("X", "Y"),
            Plane::Xz => ("X", "Z"),
            Plane::Yz => ("Y", "Z"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderOptions {
    pub plane: Plane,
    pub width: u32,
    pub height: u32,
    /// Overlay the slow manifold with `Ss2` and `Ss3` for these parameters.
    pub mark: Option<Params>,
}

/// Maps data coordinates onto the canvas, flipping the vertical axis.
struct Viewport {
    lo: (f64, f64),
    span: (f64, f64),
    w: f64,
    h: f64,
}

impl Viewport {
    fn fit(points: impl Iterator<Item = (f64, f64)>, w: f64, h: f64) -> Self {
        let (mut lo, mut hi) = ((f64::INFINITY, f64::INFINITY), (f64::NEG_INFINITY, f64::NEG_INFINITY));
        for (u, v) in points {
            lo = (lo.0.min(u), lo.1.min(v));
            hi = (hi.0.max(u), hi.1.max(v));
        }
        if !lo.0.is_finite() {
            lo = (0.0, 0.0);
            hi = (0.0, 0.0);
        }
        Viewport { lo, span: (hi.0 - lo.0, hi.1 - lo.1), w, h }
    }

    fn map(&self, (u, v): (f64, f64)) -> (f64, f64) {
        let frac = |x: f64, lo: f64, span: f64| if span > 0.0 { (x - lo) / span } else { 0.5 };
        let inner_w = self.w * (1.0 - 2.0 * MARGIN);
        let inner_h = self.h * (1.0 - 2.0 * MARGIN);
        (
            self.w * MARGIN + frac(u, self.lo.0, self.span.0) * inner_w,
            self.h - self.h * MARGIN - frac(v, self.lo.1, self.span.1) * inner_h,
        )
    }
}

/// Render the projected samples as one polyline, scaled to their bounding
/// box. The overlay, if any, is drawn in the same coordinates and may fall
/// outside the canvas.
pub fn render_svg(table: &TrajectoryTable, opts: &RenderOptions) -> Result<String, crate::Error> {
    let (w, h) = (opts.width as f64, opts.height as f64);
    let vp = Viewport::fit(table.states.iter().map(|s| opts.plane.project(s)), w, h);
    let (xname, yname) = opts.plane.axis_names();

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{0}" height="{1}" viewBox="0 0 {0} {1}">"#,
        opts.width, opts.height
    );
    let _ = writeln!(svg, r#"<title>{xname}-{yname} projection</title>"#);
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);

    let points: Vec<String> = table
        .states
        .iter()
        .map(|s| {
            let (px, py) = vp.map(opts.plane.project(s));
            format!("{px:.3},{py:.3}")
        })
        .collect();
    let _ = writeln!(
        svg,
        r#"<polyline class="trajectory" fill="none" stroke="black" stroke-width="0.5" points="{}"/>"#,
        points.join(" ")
    );

    if let Some(p) = opts.mark {
        let l = slow_manifold(&p)?;
        let ss3 = steady_states(&p)
            .point(SteadyLabel::Ss3)
            .ok_or_else(|| crate::Error::Domain("Ss3 is undefined for these parameters".into()))?;
        let ss2 = l.base_point;
        let (x1, y1) = vp.map(opts.plane.project(&ss2));
        let (x2, y2) = vp.map(opts.plane.project(&l.foot(&ss3)));
        let _ = writeln!(
            svg,
            r#"<line class="slow-manifold" x1="{x1:.3}" y1="{y1:.3}" x2="{x2:.3}" y2="{y2:.3}" stroke="red" stroke-width="1" stroke-dasharray="6 4"/>"#
        );
        for (label, s) in [("Ss2", ss2), ("Ss3", ss3)] {
            let (cx, cy) = vp.map(opts.plane.project(&s));
            let _ = writeln!(
                svg,
                r#"<circle id="{label}" cx="{cx:.3}" cy="{cy:.3}" r="4" fill="none" stroke="blue" stroke-width="1"/>"#
            );
            let _ = writeln!(
                svg,
                r#"<text x="{:.3}" y="{:.3}" font-family="sans-serif" font-size="12" fill="blue">{label}</text>"#,
                cx + 6.0,
                cy - 6.0
            );
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// `run.csv` pairs with `run.manifest.json`; a kept scan trajectory
/// `scan.run-<id>.csv` pairs with `scan.manifest.json`.
fn sidecar_params(input: &Path) -> Option<Params> {
    let name = input.file_name()?.to_str()?;
    let stem = name.strip_suffix(".csv")?;
    let (prefix, run_id) = match stem.rsplit_once(".run-") {
        Some((prefix, id)) => (prefix, Some(id)),
        None => (stem, None),
    };
    let manifest = RunManifest::load(&manifest_path(&input.with_file_name(prefix))).ok()?;
    match (manifest.job, run_id) {
        (Job::Simulate { params, .. }, None) => Some(params),
        (Job::Scan { base, a_values, sim, .. }, Some(id)) => a_values.iter().find_map(|&a| {
            let params = Params::new(a, base.b, base.c).ok()?;
            let run = crate::topology::ScanRun {
                params,
                initial: sim.initial,
                t_end: sim.t_end,
                t_cut: sim.resolved_t_cut(),
                backend: sim.backend,
            };
            (run.id() == id).then_some(params)
        }),
        _ => None,
    }
}

pub(crate) fn cmd_render(
    input: &Path,
    plane: &str,
    out: &Path,
    width: u32,
    height: u32,
    mark_l: bool,
    params: &ParamArgs,
) -> CliResult<()> {
    let plane = Plane::from_str(plane).map_err(CliError::Usage)?;
    if width == 0 || height == 0 {
        return Err(CliError::Usage("width and height must be positive".into()));
    }
    let mark = if mark_l {
        let p = match (params.a, params.b, params.c) {
            (Some(a), Some(b), Some(c)) => Params::new(a, b, c).map_err(|e| CliError::Usage(e.to_string()))?,
            (None, None, None) => sidecar_params(input).ok_or_else(|| {
                CliError::Usage("--mark-L needs --A --B --C or a sidecar manifest next to the input".into())
            })?,
            _ => return Err(CliError::Usage("give all of --A --B --C or none".into())),
        };
        Some(p)
    } else {
        None
    };
    let table = read_trajectory_csv(input)?;
    let svg = render_svg(&table, &RenderOptions { plane, width, height, mark })
        .map_err(|e| CliError::Usage(format!("cannot mark the slow manifold: {e}")))?;
    write_text(out, &svg)
}
