//! Acceptance criteria, one line each. Run with
//! `cargo test -p lv-surgery --test acceptance`; pass criterion numbers as
//! arguments to run a subset.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use lv_surgery::analysis::{lyapunov_max_default, LyapunovConfig};
use lv_surgery::integrator::{integrate, IntegratorConfig, DIVERGENCE_CAP};
use lv_surgery::model::{
    jacobian, jacobian_fd, matrix_norm_inf, slow_manifold, spectrum_closed_form, spectrum_numeric, steady_states,
    vector_field, SteadyLabel,
};
use lv_surgery::topology::{
    hole_metrics_on_axis, surgery_scan, Axis, BandConfig, BaseParams, ScanOptions, ScanOutcome, ScanSim, Thresholds,
};
use lv_surgery::{Error, Params, State};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const REGION_Q: (f64, f64, f64) = (0.01305, 0.0145, 5.5);
const SWEEP_A: [f64; 5] = [0.01305, 0.01335, 0.01365, 0.01395, 0.01425];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn region_q() -> Params {
    Params::new(REGION_Q.0, REGION_Q.1, REGION_Q.2).unwrap()
}

fn random_params(rng: &mut ChaCha8Rng) -> Params {
    Params::new(rng.random_range(1e-3..2.0), rng.random_range(1e-3..2.0), rng.random_range(0.0..10.0)).unwrap()
}

fn steady_residuals() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    let mut checked = 0;
    for _ in 0..1000 {
        let p = random_params(&mut rng);
        for entry in steady_states(&p).entries {
            let Some(s) = entry.point else { continue };
            let f = vector_field(&p, &s).unwrap();
            let r = f.iter().fold(0.0f64, |m, v| m.max(v.abs())) / s.norm_inf().max(1.0);
            worst = worst.max(r);
            checked += 1;
        }
    }
    outcome(worst <= 1e-10, format!("{checked} equilibria, max scaled residual {worst:.3e} (limit 1e-10)"))
}

/// Largest gap under the best pairing of two eigenvalue triples.
fn spectrum_gap(a: &[Complex64; 3], b: &[Complex64; 3]) -> f64 {
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    PERMS
        .iter()
        .map(|p| (0..3).map(|i| (a[i] - b[p[i]]).norm()).fold(0.0, f64::max))
        .fold(f64::INFINITY, f64::min)
}

fn spectrum_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut cases: Vec<Params> = (0..200).map(|_| random_params(&mut rng)).collect();
    // Conjugate pair +-i at Ss2, and a zero eigenvalue at Ss3.
    cases.push(Params::new(0.3, 0.5, 0.0).unwrap());
    cases.push(Params::new(0.0145, 0.0145, 5.5).unwrap());

    let mut worst = 0.0f64;
    for p in &cases {
        for label in [SteadyLabel::Ss1, SteadyLabel::Ss2, SteadyLabel::Ss3] {
            let closed = spectrum_closed_form(p, label).unwrap();
            let point = steady_states(p).point(label).unwrap();
            let numeric = spectrum_numeric(p, &point).unwrap();
            worst = worst.max(spectrum_gap(&closed.eigenvalues, &numeric.eigenvalues));
        }
    }

    let pair = spectrum_closed_form(&cases[200], SteadyLabel::Ss2).unwrap().eigenvalues;
    let has_unit_pair = [Complex64::i(), -Complex64::i()]
        .iter()
        .all(|z| pair.iter().any(|l| (l - z).norm() < 1e-12));
    let zero = spectrum_closed_form(&cases[201], SteadyLabel::Ss3).unwrap().eigenvalues;
    let has_zero = zero.iter().any(|l| l.norm() < 1e-12);

    outcome(
        worst <= 1e-7 && has_unit_pair && has_zero,
        format!(
            "{} triples, max eigenvalue gap {worst:.3e} (limit 1e-7), +-i pair at C=0: {has_unit_pair}, zero at B=A: {has_zero}",
            cases.len()
        ),
    )
}

fn jacobian_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let p = random_params(&mut rng);
        let s = State::new(rng.random_range(0.0..10.0), rng.random_range(0.0..10.0), rng.random_range(0.0..10.0));
        let exact = jacobian(&p, &s).unwrap();
        let fd = jacobian_fd(&p, &s, 1e-5).unwrap();
        let mut diff = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                diff[i][j] = exact[i][j] - fd[i][j];
            }
        }
        worst = worst.max(matrix_norm_inf(&diff) / matrix_norm_inf(&exact).max(1.0));
    }
    outcome(worst <= 1e-5, format!("1000 points, max relative gap {worst:.3e} (limit 1e-5)"))
}

fn slow_manifold_singularity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for k in 0..100 {
        let a = rng.random_range(1e-3..2.0);
        let c = rng.random_range(0.0..10.0);
        let p = Params::new(a, a, c).unwrap();
        // Half built from the line equations directly, half from the parametrization.
        let s = if k % 2 == 0 {
            let z = rng.random_range(0.0..(1.0 + c) / a);
            State::new(1.0, 1.0 + c - a * z, z)
        } else {
            slow_manifold(&p).unwrap().point_at(rng.random_range(-100.0..100.0))
        };
        let f = vector_field(&p, &s).unwrap();
        worst = worst.max(f.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    }
    outcome(worst <= 1e-12, format!("100 points on L with B=A, max |f| {worst:.3e} (limit 1e-12)"))
}

fn positivity_and_boundedness() -> Outcome {
    let p = region_q();
    let cfg = IntegratorConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut below, mut overflow, mut other, mut peak) = (0u64, 0u32, 0u32, 0.0f64);
    for _ in 0..50 {
        let s0 = State::new(rng.random_range(0.1..3.0), rng.random_range(0.1..3.0), rng.random_range(0.1..3.0));
        match integrate(&p, &s0, 1000.0, &cfg) {
            Ok(tr) => {
                below += tr.states.iter().filter(|s| !s.in_p3(1e-9)).count() as u64;
                peak = tr.states.iter().fold(peak, |m, s| m.max(s.norm_inf()));
            }
            Err(Error::Overflow { .. } | Error::LeftRegion { .. }) => overflow += 1,
            Err(e) => {
                eprintln!("  start {s0:?}: {e}");
                other += 1;
            }
        }
    }
    outcome(
        below == 0 && overflow == 0 && other == 0,
        format!(
            "50 starts to t=1000: {below} samples below -1e-9, {overflow} overflow events, {other} other failures, peak |x| {peak:.1} (cap {DIVERGENCE_CAP:e})"
        ),
    )
}

fn invariant_plane_benchmark() -> Outcome {
    let p = region_q();
    let cfg = IntegratorConfig::default();
    let mut worst = [0.0f64; 2];
    for (y0, z0) in [(1.0, 2.0), (0.3, 50.0), (7.0, 0.01)] {
        let s0 = State::new(0.0, y0, z0);
        for (k, (t, _)) in [(1.0, 1e-8), (20.0, 1e-6)].into_iter().enumerate() {
            let end = integrate(&p, &s0, t, &cfg).unwrap().last_state().unwrap();
            let gap = (end.y - y0 * (-t).exp()).abs().max((end.z - z0 * (-p.b() * t).exp()).abs()).max(end.x.abs());
            worst[k] = worst[k].max(gap);
        }
    }
    outcome(
        worst[0] <= 1e-8 && worst[1] <= 1e-6,
        format!("max error {:.3e} at t=1 (limit 1e-8), {:.3e} at t=20 (limit 1e-6)", worst[0], worst[1]),
    )
}

fn chaos_indicator() -> Outcome {
    let cfg = LyapunovConfig::default();
    let chaotic = lyapunov_max_default(&region_q(), &cfg).unwrap();
    let stable = lyapunov_max_default(&Params::new(2.0 * REGION_Q.1, REGION_Q.1, REGION_Q.2).unwrap(), &cfg).unwrap();
    let positive = chaotic.estimate >= 2.0 * chaotic.standard_error && chaotic.estimate > 0.0;
    let nonpositive = stable.estimate <= 2.0 * stable.standard_error;
    outcome(
        positive && nonpositive,
        format!(
            "B/A={:.4}: {:.4} +- {:.4}; B/A=0.5: {:.4} +- {:.4} ({} windows each)",
            REGION_Q.1 / REGION_Q.0,
            chaotic.estimate,
            chaotic.standard_error,
            stable.estimate,
            stable.standard_error,
            chaotic.windows
        ),
    )
}

fn surgery_scan_ordering() -> Outcome {
    let base = BaseParams { b: REGION_Q.1, c: REGION_Q.2 };
    let result = surgery_scan(
        &base,
        &SWEEP_A,
        &ScanSim::default(),
        &BandConfig::default(),
        &Thresholds::default(),
        &ScanOptions::default(),
    )
    .unwrap();
    let mut rows = Vec::new();
    let mut metrics = Vec::new();
    for e in &result.entries {
        match &e.outcome {
            ScanOutcome::Measured { metrics: m, .. } => {
                rows.push(format!("A={} d={:.3e} cov={:.3}", e.a, m.min_distance, m.angular_coverage));
                metrics.push(Some(*m));
            }
            other => {
                rows.push(format!("A={} {}", e.a, other.verdict_label()));
                metrics.push(None);
            }
        }
    }
    let all_measured = metrics.iter().all(Option::is_some);
    let d: Vec<f64> = metrics.iter().flatten().map(|m| m.min_distance).collect();
    let monotone = all_measured && d.windows(2).all(|w| w[1] >= 0.9 * w[0]);
    let grows = all_measured && d[d.len() - 1] > d[0];
    let covered = metrics.last().copied().flatten().is_some_and(|m| m.angular_coverage >= 0.9);
    outcome(
        monotone && grows && covered,
        format!(
            "non-decreasing within 10%: {monotone}, last > first: {grows}, coverage >= 0.9 at largest A: {covered}; {}",
            rows.join(", ")
        ),
    )
}

fn run_cli(args: &[&str], dir: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_lv-surgery"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let jobs: [&[&str]; 2] = [
        &["simulate", "--A", "0.01305", "--B", "0.0145", "--C", "5.5", "--t-end", "1", "--backend", "fixed", "--h", "2e-5", "--out", "sim"],
        &[
            "scan", "--B", "0.0145", "--C", "5.5", "--A-list", "0.01305,0.01425", "--t-end", "2", "--backend", "fixed",
            "--h", "2e-5", "--keep-trajectories", "--out", "scan",
        ],
    ];
    let mut notes = Vec::new();
    let mut pass = true;
    for (job, prefix) in jobs.iter().zip(["sim", "scan"]) {
        let first = run_cli(job, d);
        if !first.status.success() {
            return outcome(false, format!("{prefix}: {}", String::from_utf8_lossy(&first.stderr)));
        }
        let manifest = format!("{prefix}.manifest.json");
        let again = format!("{prefix}-again");
        let rerun = run_cli(&["rerun", "--manifest", &manifest, "--out", &again], d);
        // Compare bytes directly as well as through the recorded hashes.
        let mut csvs = 0;
        for entry in std::fs::read_dir(d).unwrap() {
            let name = entry.unwrap().file_name().into_string().unwrap();
            if let Some(rest) = name.strip_prefix(&format!("{prefix}.")) {
                if rest.ends_with("csv") {
                    let twin = d.join(format!("{again}.{rest}"));
                    let same = std::fs::read(d.join(&name)).unwrap() == std::fs::read(&twin).unwrap_or_default();
                    pass &= same;
                    csvs += 1;
                }
            }
        }
        pass &= rerun.status.success() && csvs > 0;
        notes.push(format!("{prefix}: {csvs} CSV file(s), rerun exit {}", rerun.status.code().unwrap_or(-1)));
    }
    outcome(pass, notes.join("; "))
}

fn synthetic_topology() -> Outcome {
    let axis = Axis::from_manifold(&slow_manifold(&region_q()).unwrap());
    let band = BandConfig::default();
    let circle = |radius: f64, n: usize, frac: f64| -> Vec<State> {
        (0..n)
            .map(|k| {
                let th = -PI + 2.0 * PI * frac * (k as f64 + 0.5) / n as f64;
                axis.point(1.0 + (k % 7) as f64 * 0.1, radius * th.cos(), radius * th.sin())
            })
            .collect()
    };
    let ring = hole_metrics_on_axis(&circle(2.0, 720, 1.0), &axis, 0.0, 2.0, &band).unwrap();
    let arc = hole_metrics_on_axis(&circle(2.0, 360, 0.5), &axis, 0.0, 2.0, &band).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let disc: Vec<State> = (0..20_000)
        .map(|_| {
            let r = 2.0 * rng.random::<f64>().sqrt();
            let th = rng.random_range(-PI..PI);
            axis.point(rng.random_range(0.0..2.0), r * th.cos(), r * th.sin())
        })
        .collect();
    let filled = hole_metrics_on_axis(&disc, &axis, 0.0, 2.0, &band).unwrap();

    let pass = (ring.min_distance - 2.0).abs() <= 1e-12
        && ring.angular_coverage == 1.0
        && arc.angular_coverage == 0.5
        && filled.min_distance <= 0.05
        && filled.angular_coverage == 1.0;
    outcome(
        pass,
        format!(
            "ring ({:.15}, {}), arc (., {}), disc ({:.2e}, {})",
            ring.min_distance, ring.angular_coverage, arc.angular_coverage, filled.min_distance, filled.angular_coverage
        ),
    )
}

type Criterion = (u32, &'static str, fn() -> Outcome, Option<Duration>);

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "steady-state residuals", steady_residuals, Some(Duration::from_secs(1))),
        (2, "spectrum equivalence", spectrum_equivalence, Some(Duration::from_secs(1))),
        (3, "Jacobian check", jacobian_check, Some(Duration::from_secs(1))),
        (4, "slow-manifold singularity", slow_manifold_singularity, Some(Duration::from_millis(100))),
        (5, "positivity and boundedness", positivity_and_boundedness, Some(Duration::from_secs(300))),
        (6, "invariant-plane benchmark", invariant_plane_benchmark, Some(Duration::from_secs(1))),
        (7, "chaos indicator", chaos_indicator, Some(Duration::from_secs(360))),
        (8, "surgery scan ordering", surgery_scan_ordering, Some(Duration::from_secs(600))),
        (9, "manifest determinism", determinism, None),
        (10, "synthetic topology", synthetic_topology, Some(Duration::from_millis(100))),
    ];
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();

    let mut failed = Vec::new();
    for (n, name, check, budget) in criteria {
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|_| outcome(false, "panicked"));
        let elapsed = start.elapsed();
        let in_time = budget.is_none_or(|b| elapsed <= b);
        let pass = result.pass && in_time;
        let budget_note = match budget {
            Some(b) if !in_time => format!(", over budget {b:?}"),
            _ => String::new(),
        };
        println!(
            "{} criterion {n} ({name}): {} [{:.3}s{budget_note}]",
            if pass { "PASS" } else { "FAIL" },
            result.detail,
            elapsed.as_secs_f64()
        );
        if !pass {
            failed.push(n);
        }
    }
    if failed.is_empty() {
        println!("all acceptance criteria passed");
    } else {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
