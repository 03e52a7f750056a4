use homog3_cli::{run_with, EXIT_INVALID, EXIT_NUMERICAL, EXIT_OK};

fn run(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (vec![], vec![]);
    let mut argv = vec!["homog3"];
    argv.extend_from_slice(args);
    let code = run_with(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn selftest_passes() {
    let (code, out, _) = run(&["selftest"]);
    assert_eq!(code, EXIT_OK, "{out}");
    assert!(out.lines().all(|l| l.starts_with("PASS")));
}

#[test]
fn below_threshold_sphere_is_a_numerical_failure() {
    let (code, _, err) = run(&["sphere", "--space", "h2xr", "--H", "0.4"]);
    assert_eq!(code, EXIT_NUMERICAL);
    let v: serde_json::Value = serde_json::from_str(err.trim()).unwrap();
    assert_eq!(v["kind"], "no_closure");
}

#[test]
fn validation_errors_exit_two() {
    assert_eq!(run(&["frobnicate"]).0, EXIT_INVALID);
    assert_eq!(run(&["sweep", "--bogus-flag"]).0, EXIT_INVALID);
    let (code, _, err) = run(&["sweep", "--space", "h2xr", "--H", "1:0.5:0.1"]);
    assert_eq!(code, EXIT_INVALID);
    assert!(err.contains("invalid_argument"), "{err}");
    let (code, _, err) = run(&["space", "--space", "torus"]);
    assert_eq!(code, EXIT_INVALID);
    assert!(err.contains("\"parse\""), "{err}");
    let (code, _, err) = run(&["sphere", "--space", "sol3", "--H", "1"]);
    assert_eq!(code, EXIT_INVALID, "{err}");
}

#[test]
fn help_lists_defaults() {
    let (code, out, _) = run(&["sweep", "--help"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("--space") && out.contains("[default: euclidean]"), "{out}");
    assert!(out.contains("[default: 0.5:1.5:0.1]"), "{out}");
    let (_, out, _) = run(&["spectrum", "--help"]);
    for flag in ["--grid", "--k", "--H", "--surface", "--nullity-tol"] {
        assert!(out.contains(flag), "{flag} missing:\n{out}");
    }
}

#[test]
fn subgroup_curve_and_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("curve.csv");
    let (code, _, err) = run(&["gaussmap-subgroups", "--lambda", "2,2,1", "--samples", "36", "--out", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK, "{err}");
    let (header, rows) = homog3::io::read_table(&path).unwrap();
    assert_eq!(header, ["theta", "g1", "g2", "g3"]);
    assert_eq!(rows.len(), 36);
    for r in &rows {
        assert!((r[1] * r[1] + r[2] * r[2] + r[3] * r[3] - 1.0).abs() < 1e-12);
    }
    let (code, _, err) = run(&["geodesic", "--space", "nil3", "--steps", "10", "--out", "/nonexistent/x.csv"]);
    assert_eq!(code, EXIT_INVALID);
    assert!(err.contains("/nonexistent/x.csv"), "{err}");
}

#[test]
fn sphere_profile_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("profile.csv");
    let (code, out, err) = run(&["sphere", "--space", "euclidean", "--H", "2", "--samples", "50", "--out", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK, "{err}");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!((v["area"].as_f64().unwrap() - std::f64::consts::PI).abs() < 1e-4);
    let (header, rows) = homog3::io::read_table(&path).unwrap();
    assert_eq!(header, ["s", "x", "y", "phi", "kappa"]);
    assert_eq!(rows.len(), 51);
}

#[test]
fn flux_reports_both_terms() {
    let (code, out, err) = run(&["flux", "--surface", "cylinder", "--H", "0.5", "--K", "Fz", "--segments", "64"]);
    assert_eq!(code, EXIT_OK, "{err}");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let (line, cap, total) = (v["line"].as_f64().unwrap(), v["cap"].as_f64().unwrap(), v["total"].as_f64().unwrap());
    assert_eq!(line + cap, total);
    assert!((total.abs() - std::f64::consts::PI).abs() < 1e-3);
    let (code, _, err) = run(&["flux", "--space", "h3", "--K", "E1"]);
    assert_eq!(code, EXIT_INVALID);
    assert!(err.contains("not_killing"), "{err}");
}

#[test]
fn metric_and_expm_tables() {
    let (code, out, _) = run(&["metric", "--space", "sol3", "--point", "0,0,1"]);
    assert_eq!(code, EXIT_OK);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 4);
    let g11: f64 = lines[1].split(',').next().unwrap().parse().unwrap();
    assert!((g11 - (-2.0f64).exp()).abs() < 1e-15);
    let (_, out, _) = run(&["expm", "--A", "1,0,0,-1", "--z", "0"]);
    assert_eq!(out, "c1,c2\n1.0000000000000000e0,0.0000000000000000e0\n0.0000000000000000e0,1.0000000000000000e0\n");
}
