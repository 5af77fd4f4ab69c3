use std::path::Path;
use std::process::{Command, Output};

fn zsource(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zsource")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

/// Steady d_s of the summary row whose segment starts at `t0`.
fn segment_ds(summary: &str, t0: &str) -> f64 {
    let line = summary.lines().find(|l| l.trim_start().starts_with(t0)).expect("segment row");
    line.split_whitespace().nth(3).unwrap().parse().unwrap()
}

#[test]
fn simulate_lossless_fig8_reports_boost_duty() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig8.csv");
    let o = zsource(&["simulate", "--scenario", "fig8.json", "--lossless", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let d = segment_ds(&stdout(&o), "1.000");
    assert!((d - 0.15).abs() < 0.01, "{d}");
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    let comment = lines.next().unwrap();
    assert!(comment.starts_with("# zsource ") && comment.contains("sha256="), "{comment}");
    assert!(lines.next().unwrap().starts_with("t,v_w,omega,"));
    assert_eq!(lines.count(), 30_000);
}

#[test]
fn simulate_fig7_keeps_capacitor_voltage_in_band() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let o = zsource(&[
        "simulate",
        "--scenario",
        "fig7",
        "--out",
        out.to_str().unwrap(),
        "--set",
        r#"trace_columns=["t","v_c","v_c_ref"]"#,
    ]);
    assert!(o.status.success());
    let rows = csv_rows(&out);
    assert_eq!(rows[0], ["t", "v_c", "v_c_ref"]);
    for r in &rows[1..] {
        let (t, v, r): (f64, f64, f64) = (r[0].parse().unwrap(), r[1].parse().unwrap(), r[2].parse().unwrap());
        if t >= 0.2 {
            assert!((v / r - 1.0).abs() < 0.05, "t={t} v_c={v}");
        }
    }
}

#[test]
fn overrides_and_dt_change_the_digest() {
    let a = stdout(&zsource(&["validate", "--scenario", "fig8"]));
    let b = stdout(&zsource(&["validate", "--scenario", "fig8", "--set", "params.gains.kp_vc=0.25"]));
    let c = stdout(&zsource(&["validate", "--scenario", "fig8", "--dt", "1e-5"]));
    assert!(a.starts_with("ok: "));
    assert_ne!(a, b);
    assert_ne!(a, c);
}

#[test]
fn resolved_scenario_round_trips_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = zsource(&["validate", "--scenario", "fig7", "--set", "duration=1.5", "--print"]);
    assert!(o.status.success());
    let path = dir.path().join("fig7b.json");
    std::fs::write(&path, &o.stdout).unwrap();
    let again = zsource(&["validate", "--scenario", path.to_str().unwrap(), "--print"]);
    assert_eq!(again.stdout, o.stdout);
    assert!(stdout(&again).contains("\"duration\": 1.5"));
}

#[test]
fn validation_failures_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.json");
    std::fs::write(&empty, "").unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["validate", "--scenario", empty.to_str().unwrap()],
        vec!["validate", "--scenario", "no-such-scenario"],
        vec!["validate", "--set", "params.gains.missing=1"],
        vec!["validate", "--set", "params.gains.d_s_max=0.7"],
        vec!["validate", "--dt", "3e-5"],
        vec!["linearize", "--d-s", "0.5"],
        vec!["linearize"],
        vec!["linearize", "--at", "1.002"],
    ];
    for args in cases {
        let o = zsource(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn runtime_abort_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let o = zsource(&["simulate", "--quiet", "--out", out.to_str().unwrap(), "--set", "wind_profile.points.0.1=1e300"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("t = "));
}

#[test]
fn linearize_reports_right_half_plane_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("lin.csv");
    let o = zsource(&["linearize", "--d-s", "0.2", "--v-dc", "140", "--i-dc", "10", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.contains("right-half-plane zero at s = +"), "{s}");
    for line in s.lines().filter(|l| l.contains("max discrepancy")) {
        let db: f64 = line.split(':').nth(1).unwrap().split_whitespace().next().unwrap().parse().unwrap();
        assert!(db < 1.0);
    }
    let rows = csv_rows(&out);
    assert_eq!(rows[0], ["tf", "source", "part", "power", "coefficient"]);
    assert!(rows.iter().any(|r| r[0] == "vc_ilref" && r[1] == "numeric"));
}

#[test]
fn linearize_at_a_settled_scenario_time() {
    let o = zsource(&["linearize", "--scenario", "fig8", "--at", "1.95", "--quiet"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn bode_csv_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bode.csv");
    let o = zsource(&["bode", "--d-s", "0.15", "--tf", "vc-ilref", "--points", "50", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let rows = csv_rows(&out);
    assert_eq!(rows[0], ["omega_rad_s", "mag_db", "phase_deg"]);
    assert_eq!(rows.len(), 51);
    let first: f64 = rows[1][0].parse().unwrap();
    let last: f64 = rows[50][0].parse().unwrap();
    assert!((first - 0.1).abs() < 1e-12 && (last - 1e4).abs() < 1e-6);
}

#[test]
fn mppt_sweep_rows_are_optimal() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = zsource(&["mppt-sweep", "--scenario", "mppt", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let rows = csv_rows(&out);
    assert_eq!(rows[0][0], "v_w");
    assert_eq!(rows.len(), 8);
    for r in &rows[1..] {
        let lambda_err: f64 = r[5].parse().unwrap();
        let ratio: f64 = r[6].parse().unwrap();
        assert_eq!(r[7], "1");
        assert!(lambda_err.abs() < 0.01 && (0.98..=1.0 + 1e-6).contains(&ratio), "{r:?}");
    }
}

#[test]
fn single_point_sweep_matches_simulation() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = dir.path().join("s.csv");
    let o = zsource(&["mppt-sweep", "--wind-min", "9", "--wind-max", "9", "--scenario", "mppt", "--out", sweep.to_str().unwrap()]);
    assert!(o.status.success());
    let omega_sweep: f64 = csv_rows(&sweep)[1][1].parse().unwrap();
    let trace = dir.path().join("t.csv");
    let o = zsource(&[
        "simulate",
        "--scenario",
        "mppt",
        "--quiet",
        "--out",
        trace.to_str().unwrap(),
        "--set",
        r#"wind_profile.points=[[0, 8.1], [0.1, 9]]"#,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&trace);
    let tail = &rows[rows.len() - rows.len() / 10..];
    let omega_sim = tail.iter().map(|r| r[2].parse::<f64>().unwrap()).sum::<f64>() / tail.len() as f64;
    assert!((omega_sim / omega_sweep - 1.0).abs() < 1e-6, "{omega_sim} vs {omega_sweep}");
}

#[test]
fn pattern_dump_lists_switching_states() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let o = zsource(&["simulate", "--quiet", "--dump-pattern", "--set", "duration=1.5", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.contains("shoot-through") && s.contains("active-1") && s.contains("volt-second error"), "{s}");
}
