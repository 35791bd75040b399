use std::path::{Path, PathBuf};
use std::process::Command;

use icr::cli::{run, EXIT_CHECK, EXIT_IO, EXIT_OK, EXIT_USAGE};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn icr(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("icr").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn field(report: &str, key: &str) -> f64 {
    report
        .lines()
        .find_map(|l| l.strip_prefix(key).map(|v| v.trim().parse().unwrap()))
        .unwrap_or_else(|| panic!("no `{key}` in {report}"))
}

// Endpoints from a 1e-4 scan of the fixture, frozen when it was committed.
const GOLDEN_CI95: (f64, f64) = (0.6562, 0.9109);
const GOLDEN_CI90: (f64, f64) = (0.6753, 0.8895);
const GOLDEN_MUE_UP: f64 = 0.7784;

#[test]
fn ci_on_fixture_matches_golden_endpoints() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("ci.json");
    let series = fixture("series_n150.csv");
    let (code, out, _) = icr(&["ci", "--series", series.to_str().unwrap(), "--json", json.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert!((field(&out, "lower") - GOLDEN_CI95.0).abs() <= 1e-3);
    assert!((field(&out, "upper") - GOLDEN_CI95.1).abs() <= 1e-3);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    for key in ["lower", "upper", "alpha", "grid_step", "empty", "disconnected"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert_eq!(v["empty"], false);

    let (code, out, _) = icr(&["ci", "--series", series.to_str().unwrap(), "--alpha", "0.1"]);
    assert_eq!(code, EXIT_OK);
    assert!((field(&out, "lower") - GOLDEN_CI90.0).abs() <= 1e-3);
    assert!((field(&out, "upper") - GOLDEN_CI90.1).abs() <= 1e-3);
}

#[test]
fn mue_on_fixture_matches_golden() {
    let series = fixture("series_n150.csv");
    let (code, out, _) = icr(&["mue", "--series", series.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert!((field(&out, "rho_up") - GOLDEN_MUE_UP).abs() <= 1e-3);
    assert!(field(&out, "rho_low") <= field(&out, "rho_up"));
}

#[test]
fn bad_series_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let short = dir.path().join("short.csv");
    std::fs::write(&short, "y\n1\n2\n3\n4\n").unwrap();
    let (code, _, err) = icr(&["ci", "--series", short.to_str().unwrap()]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("domain"), "{err}");

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "y\n1\n2\n3\nx7\n5\n6\n").unwrap();
    let (code, _, err) = icr(&["ci", "--series", bad.to_str().unwrap()]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains(":5:"), "{err}");

    let series = fixture("series_n150.csv");
    let (code, _, _) = icr(&["ci", "--series", series.to_str().unwrap(), "--alpha", "1.2"]);
    assert_eq!(code, EXIT_USAGE);
    let (code, _, _) = icr(&["ci", "--series", "/nonexistent/series.csv"]);
    assert_eq!(code, EXIT_IO);
    let (code, _, _) = icr(&["ci", "--bogus"]);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn cv_table_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let common = ["--b", "1000", "--n-steps", "100", "--seed", "7"];
    let args = |p: &Path| {
        let mut v = vec!["cv-table"];
        v.extend(common);
        v.extend(["--out", p.to_str().unwrap()]);
        v.into_iter().map(String::from).collect::<Vec<_>>()
    };
    let argv_a = args(&a);
    let argv_b = args(&b);
    let (code, out, _) = icr(&argv_a.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("paths=1000") && out.contains("seed=7"));
    let mut with_threads = argv_b.clone();
    with_threads.extend(["--threads".into(), "1".into()]);
    assert_eq!(icr(&with_threads.iter().map(String::as_str).collect::<Vec<_>>()).0, EXIT_OK);
    let text = std::fs::read(&a).unwrap();
    assert_eq!(text, std::fs::read(&b).unwrap());
    let rows = String::from_utf8(text).unwrap().lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(rows, 1 + 39 * 5);
    assert!(icr::QuantileTable::read_csv(&a).is_ok());

    let (code, _, _) = icr(&["cv-table", "--b", "1000", "--n-steps", "100", "--h-grid", "0,1", "--out", "/nonexistent/dir/t.csv"]);
    assert_eq!(code, EXIT_IO);
}

#[test]
fn mc_single_cell() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cell.toml");
    std::fs::write(&cfg, "seed = 5\nreps = 200\nmodel.rho = 0.5\ninnov.kind = \"iid\"\ninit.kind = \"fixed\"\n").unwrap();
    let csv = dir.path().join("out.csv");
    let txt = dir.path().join("out.txt");
    let (code, out, err) = icr(&[
        "mc", "--config", cfg.to_str().unwrap(), "--out", csv.to_str().unwrap(), "--text", txt.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    let cp: f64 = out.split("cp=").nth(1).unwrap().split_whitespace().next().unwrap().parse().unwrap();
    assert!((0.0..=1.0).contains(&cp));
    let body = std::fs::read_to_string(&csv).unwrap();
    assert!(body.starts_with("cell_id,innov,init,rho,cp,al,amb,empty_ci,mc_se\n"));
    assert_eq!(body.lines().count(), 2);
    assert!(std::fs::read_to_string(&txt).unwrap().contains("Coverage probability"));

    let (code, _, err) = icr(&["mc", "--config", cfg.to_str().unwrap(), "--reps", "0"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("reps"), "{err}");

    std::fs::write(&cfg, "model.rho = 0.5\ninnov.knd = \"iid\"\n").unwrap();
    let (code, _, err) = icr(&["mc", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("innov.knd"), "{err}");
}

#[test]
fn check_passes_and_is_repeatable() {
    let (code, first, _) = icr(&["check"]);
    assert_eq!(code, EXIT_OK, "{first}");
    let (_, second, _) = icr(&["check"]);
    assert_eq!(first, second);
}

#[test]
fn check_names_a_corrupted_table() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    let good = icr::QuantileTable::bundled().to_csv_string();
    // Swap the .025 and .975 values of the h = 1 row.
    let mut lines: Vec<String> = good.lines().map(String::from).collect();
    let lo = lines.iter().position(|l| l.starts_with("1,0.025,")).unwrap();
    let hi = lines.iter().position(|l| l.starts_with("1,0.975,")).unwrap();
    let (a, b) = (lines[lo].rsplit(',').next().unwrap().to_string(), lines[hi].rsplit(',').next().unwrap().to_string());
    lines[lo] = format!("1,0.025,{b}");
    lines[hi] = format!("1,0.975,{a}");
    std::fs::write(&path, lines.join("\n") + "\n").unwrap();
    let (code, out, _) = icr(&["check", "--table", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_CHECK, "{out}");
    assert!(out.contains("FAIL table-monotonicity"), "{out}");
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_icr");
    let status = Command::new(bin).arg("--help").output().unwrap();
    assert_eq!(status.status.code(), Some(EXIT_OK));
    let status = Command::new(bin).args(["ci", "--series", "/nonexistent.csv"]).output().unwrap();
    assert_eq!(status.status.code(), Some(EXIT_IO));
    let status = Command::new(bin).args(["check"]).output().unwrap();
    assert_eq!(status.status.code(), Some(EXIT_OK));
}
