use std::path::Path;
use std::process::{Command, Output};

use lv_surgery::cli::{read_trajectory_csv, RunManifest};

fn lv(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lv-surgery"))
        .args(args)
        .current_dir(dir)
        .env_remove("LV_SURGERY_JOBS")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

const REGION_Q: [&str; 6] = ["--A", "0.01305", "--B", "0.0145", "--C", "5.5"];

fn with(base: &[&str], extra: &[&str]) -> Vec<String> {
    base.iter().chain(extra).map(|s| s.to_string()).collect()
}

fn lv_owned(dir: &Path, args: &[String]) -> Output {
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    lv(dir, &refs)
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let usage: &[&[&str]] = &[
        &[],
        &["frobnicate"],
        &["simulate"],
        &["simulate", "--A", "-1", "--B", "0.0145", "--C", "5.5"],
        &["simulate", "--A", "x", "--B", "0.0145", "--C", "5.5"],
        &["simulate", "--A", "0.1", "--B", "0.1", "--C", "1", "--t-end", "0"],
        &["simulate", "--A", "0.1", "--B", "0.1", "--C", "1", "--rtol", "0"],
        &["simulate", "--A", "0.1", "--B", "0.1", "--C", "1", "--backend", "rk9"],
        &["simulate", "--A", "0.1", "--B", "0.1", "--C", "1", "--h", "0.1"],
        &["simulate", "--A", "0.1", "--B", "0.1", "--C", "1", "--x0", "-1"],
        &["simulate", "--A", "0.1", "--B", "0.1", "--C", "1", "--config", "missing.json"],
        &["analyze"],
        &["analyze", "--A", "0.1", "--B", "-2", "--C", "1"],
        &["scan", "--C", "5.5", "--A-list", "0.01"],
        &["scan", "--B", "0.0145", "--C", "5.5"],
        &["scan", "--B", "0.0145", "--C", "5.5", "--A-from", "0.01", "--A-to", "0.02", "--A-steps", "0"],
        &["scan", "--B", "0.0145", "--C", "5.5", "--A-from", "0.01", "--A-to", "0.02"],
        &["scan", "--B", "0.0145", "--C", "5.5", "--A-list", "0.02,0.01"],
        &["scan", "--B", "0.0145", "--C", "5.5", "--A-list", "0.01", "--A-from", "0.01", "--A-to", "0.02", "--A-steps", "2"],
        &["scan", "--B", "0.0145", "--C", "5.5", "--A-list", "0.01", "--t-end", "10", "--t-cut", "10"],
        &["render", "--in", "t.csv", "--plane", "xw", "--out", "t.svg"],
        &["render", "--in", "t.csv", "--out", "t.svg"],
        &["rerun"],
    ];
    for args in usage {
        let out = lv(d, args);
        assert_eq!(code(&out), 2, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains("Usage") || err.contains("--help"), "{args:?}: {err}");
    }

    let runtime: &[&[&str]] = &[
        &["render", "--in", "missing.csv", "--plane", "xy", "--out", "t.svg"],
        &["rerun", "--manifest", "missing.manifest.json", "--out", "again"],
        // No predator pressure and C > 0: X blows up in finite time.
        &["simulate", "--A", "0", "--B", "0", "--C", "1", "--x0", "1", "--y0", "0", "--z0", "0", "--t-end", "10"],
    ];
    for args in runtime {
        let out = lv(d, args);
        assert_eq!(code(&out), 1, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }

    assert_eq!(code(&lv(d, &["--help"])), 0);
    assert_eq!(code(&lv(d, &["--version"])), 0);
}

#[test]
fn integration_failure_names_time() {
    let dir = tempfile::tempdir().unwrap();
    let out = lv(
        dir.path(),
        &["simulate", "--A", "0", "--B", "0", "--C", "1", "--x0", "1", "--y0", "0", "--z0", "0", "--t-end", "10"],
    );
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("integration failed at t = "), "{err}");
    assert!(!dir.path().join("trajectory.csv").exists());
}

#[test]
fn simulate_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut args = vec!["simulate"];
    args.extend(REGION_Q);
    args.extend(["--t-end", "1000", "--out", "run1"]);
    let out = lv(d, &args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let table = read_trajectory_csv(&d.join("run1.csv")).unwrap();
    assert_eq!(table.times[0], 0.0);
    assert_eq!(*table.times.last().unwrap(), 1000.0);
    assert!(table.times.windows(2).all(|w| w[1] > w[0]));

    let manifest = RunManifest::load(&d.join("run1.manifest.json")).unwrap();
    assert_eq!(manifest.outputs.len(), 1);
    assert_eq!(manifest.outputs[0].path, "run1.csv");
    let bytes = std::fs::read(d.join("run1.csv")).unwrap();
    assert_eq!(manifest.outputs[0].bytes, bytes.len() as u64);
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("run1.manifest.json")).unwrap()).unwrap();
    assert_eq!(json["job"]["command"], "simulate");
    assert_eq!(json["job"]["params"]["A"], 0.01305);
    assert_eq!(json["job"]["initial"]["X"], 0.5);
    assert_eq!(json["job"]["backend"]["rtol"], 1e-9);
    assert_eq!(json["outputs"][0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn config_file_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("cfg.json"),
        r#"{"A": 0.5, "B": 0.25, "C": 1.0, "t_end": 2.0, "backend": "fixed", "h": 0.01, "initial": {"X": 0.2, "Y": 0.3, "Z": 0.4}}"#,
    )
    .unwrap();
    let out = lv(d, &["simulate", "--config", "cfg.json", "--A", "0.75", "--h", "0.005", "--out", "p"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = RunManifest::load(&d.join("p.manifest.json")).unwrap();
    let json = serde_json::to_value(&manifest.job).unwrap();
    assert_eq!(json["params"]["A"], 0.75);
    assert_eq!(json["params"]["B"], 0.25);
    assert_eq!(json["t_end"], 2.0);
    assert_eq!(json["backend"], serde_json::json!({"kind": "fixed", "h": 0.005}));
    assert_eq!(json["initial"]["Y"], 0.3);
    assert_eq!(read_trajectory_csv(&d.join("p.csv")).unwrap().times.len(), 401);
}

#[test]
fn analyze_reports() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = lv_owned(d, &with(&["analyze"], &REGION_Q));
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["region"]["chaotic_candidate"], true);
    assert_eq!(v["steady_states"].as_array().unwrap().len(), 5);
    let admissible: Vec<bool> = v["steady_states"].as_array().unwrap().iter().map(|s| s["admissible"].as_bool().unwrap()).collect();
    assert_eq!(admissible, [true, true, true, false, false]);
    let ss1: Vec<f64> = v["spectra"][0]["spectrum"]["eigenvalues"]
        .as_array()
        .unwrap()
        .iter()
        .map(|l| l[0].as_f64().unwrap())
        .collect();
    assert_eq!(ss1, [1.0, -1.0, -0.0145]);

    let out = lv(d, &["analyze", "--A", "0", "--B", "0.0145", "--C", "5.5", "--out", "r.json"]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("r.json")).unwrap()).unwrap();
    assert_eq!(v["region"]["verdict"], "undefined ratio");
    assert_eq!(v["steady_states"][2]["defined"], false);
    assert_eq!(v["steady_states"][4]["defined"], false);
}

#[test]
fn analyze_with_lyapunov() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("ly.json"), r#"{"lyapunov": {"t_total": 60.0, "t_transient": 10.0}}"#).unwrap();
    let out = lv(d, &["analyze", "--A", "0.029", "--B", "0.0145", "--C", "5.5", "--lyapunov", "--config", "ly.json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["lyapunov"]["result"]["windows"], 50);
    assert!(v["lyapunov"]["result"]["estimate"].as_f64().unwrap().is_finite());
}

#[test]
fn scan_writes_one_row_per_a() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = lv(
        d,
        &["scan", "--B", "0.0145", "--C", "5.5", "--A-list", "0.01305,0.01335,0.01365,0.01395,0.01425", "--out", "sweep", "--jobs", "2"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(d.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "A,min_distance,angular_coverage,verdict");
    assert_eq!(lines.len(), 6);
    let a: Vec<&str> = lines[1..].iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(a, ["0.01305", "0.01335", "0.01365", "0.01395", "0.01425"]);
    for l in &lines[1..] {
        let verdict = l.rsplit(',').next().unwrap();
        assert!(["closed", "open", "indeterminate", "error"].contains(&verdict), "{l}");
    }
    let manifest = RunManifest::load(&d.join("sweep.manifest.json")).unwrap();
    let roles: Vec<&str> = manifest.outputs.iter().map(|o| o.role.as_str()).collect();
    assert_eq!(roles, ["scan_table", "scan_details"]);
}

#[test]
fn scan_records_failures_as_error_rows() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    // A fixed step far too coarse for the initial spike.
    let out = lv(d, &["scan", "--B", "0.0145", "--C", "5.5", "--A-list", "0.01305", "--t-end", "5", "--backend", "fixed", "--h", "0.05", "--out", "bad"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(d.join("bad.csv")).unwrap();
    assert_eq!(csv.lines().nth(1).unwrap(), "0.01305,,,error");
}

#[test]
fn jobs_env_fallback_and_range() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = Command::new(env!("CARGO_BIN_EXE_lv-surgery"))
        .args(["scan", "--B", "0.0145", "--C", "5.5", "--A-from", "0.013", "--A-to", "0.014", "--A-steps", "3", "--t-end", "100", "--out", "r"])
        .current_dir(d)
        .env("LV_SURGERY_JOBS", "1")
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(d.join("r.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);

    let bad = Command::new(env!("CARGO_BIN_EXE_lv-surgery"))
        .args(["scan", "--B", "0.0145", "--C", "5.5", "--A-list", "0.013", "--out", "r"])
        .current_dir(d)
        .env("LV_SURGERY_JOBS", "many")
        .output()
        .unwrap();
    assert_eq!(code(&bad), 2);
}

#[test]
fn rerun_detects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let args = with(&["simulate"], &REGION_Q);
    let args = with(&args.iter().map(String::as_str).collect::<Vec<_>>(), &["--t-end", "0.3", "--backend", "fixed", "--h", "1e-4", "--out", "fx"]);
    assert_eq!(code(&lv_owned(d, &args)), 0);

    let out = lv(d, &["rerun", "--manifest", "fx.manifest.json", "--out", "fx2"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(std::fs::read(d.join("fx.csv")).unwrap(), std::fs::read(d.join("fx2.csv")).unwrap());

    let mut manifest = RunManifest::load(&d.join("fx.manifest.json")).unwrap();
    manifest.outputs[0].sha256 = "0".repeat(64);
    std::fs::write(d.join("fx.manifest.json"), serde_json::to_string(&manifest).unwrap()).unwrap();
    let out = lv(d, &["rerun", "--manifest", "fx.manifest.json", "--out", "fx3"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stdout).contains("differs trajectory"));
}

fn attr(tag: &str, name: &str) -> f64 {
    let key = format!(" {name}=\"");
    let start = tag.find(&key).unwrap() + key.len();
    let end = start + tag[start..].find('"').unwrap();
    tag[start..end].parse().unwrap()
}

fn element<'a>(svg: &'a str, prefix: &str) -> &'a str {
    svg.lines().find(|l| l.starts_with(prefix)).unwrap_or_else(|| panic!("no {prefix} in svg"))
}

#[test]
fn render_constant_trajectory_is_one_point() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    // Ss2 is an exact equilibrium.
    let out = lv(d, &["simulate", "--A", "0.01305", "--B", "0.0145", "--C", "5.5", "--x0", "1", "--y0", "6.5", "--z0", "0", "--t-end", "5", "--out", "eq"]);
    assert_eq!(code(&out), 0);
    let out = lv(d, &["render", "--in", "eq.csv", "--plane", "xy", "--out", "eq.svg"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let svg = std::fs::read_to_string(d.join("eq.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 1);
    let poly = element(&svg, "<polyline");
    let start = poly.find("points=\"").unwrap() + 8;
    let pts: Vec<&str> = poly[start..poly.rfind('"').unwrap()].split(' ').collect();
    assert!(pts.len() > 1);
    assert!(pts.iter().all(|p| *p == "400.000,300.000"), "{pts:?}");
    assert!(svg.contains(r#"width="800" height="600""#));
}

#[test]
fn render_marks_ss3_on_slow_manifold_at_unit_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = lv(d, &["simulate", "--A", "0.0145", "--B", "0.0145", "--C", "5.5", "--t-end", "50", "--out", "unit"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    // Parameters come from the sidecar manifest.
    let out = lv(d, &["render", "--in", "unit.csv", "--plane", "xz", "--out", "unit.svg", "--mark-L", "--width", "640", "--height", "480"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let svg = std::fs::read_to_string(d.join("unit.svg")).unwrap();
    let line = element(&svg, "<line");
    assert!(line.contains("stroke-dasharray"));
    let (x1, y1, x2, y2) = (attr(line, "x1"), attr(line, "y1"), attr(line, "x2"), attr(line, "y2"));
    let ss3 = element(&svg, r#"<circle id="Ss3""#);
    let (cx, cy) = (attr(ss3, "cx"), attr(ss3, "cy"));
    // Distance from the marker to the dashed segment, in pixels.
    let (dx, dy) = (x2 - x1, y2 - y1);
    let t = (((cx - x1) * dx + (cy - y1) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
    let gap = (cx - x1 - t * dx).hypot(cy - y1 - t * dy);
    assert!(gap <= 0.5, "Ss3 is {gap} px off the line");
    assert!(svg.contains(">Ss2</text>") && svg.contains(">Ss3</text>"));
    assert_eq!(svg.matches("<circle").count(), 2);
}

#[test]
fn render_mark_l_needs_params() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("bare.csv"), "t,X,Y,Z\n0,1,1,1\n1,2,2,2\n").unwrap();
    assert_eq!(code(&lv(d, &["render", "--in", "bare.csv", "--plane", "yz", "--out", "b.svg", "--mark-L"])), 2);
    let out = lv(d, &["render", "--in", "bare.csv", "--plane", "yz", "--out", "b.svg", "--mark-L", "--A", "0.1", "--B", "0.2", "--C", "1"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    std::fs::write(d.join("junk.csv"), "a,b\n").unwrap();
    assert_eq!(code(&lv(d, &["render", "--in", "junk.csv", "--plane", "yz", "--out", "b.svg"])), 1);
}
