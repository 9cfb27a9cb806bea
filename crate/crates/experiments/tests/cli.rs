use std::fs;
use std::path::Path;
use std::process::Command;

fn aftsim() -> Command {
    Command::new(env!("CARGO_BIN_EXE_aftsim"))
}

fn run(args: &[&str]) -> (i32, String, String) {
    let o = aftsim().args(args).env("RUST_LOG", "warn").output().expect("binary runs");
    (o.status.code().unwrap_or(-1), String::from_utf8_lossy(&o.stdout).into_owned(), String::from_utf8_lossy(&o.stderr).into_owned())
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn list_shows_twelve_scenarios() {
    let (code, out, _) = run(&["list"]);
    assert_eq!(code, 0);
    let tags: Vec<&str> = out.lines().map(|l| l.split_whitespace().next().unwrap()).collect();
    assert_eq!(
        tags,
        ["table1a", "table1b", "fig1", "fig2L", "fig2R", "fig3", "fig5", "figA1", "figA2", "figA3", "suppTable", "caseMixture"]
    );
}

#[test]
fn describe_prints_grids() {
    let (code, out, _) = run(&["describe", "fig1"]);
    assert_eq!(code, 0);
    assert!(out.contains("follow-up horizons"), "{out}");
    assert!(out.contains("c50, c100, c200"), "{out}");
    let (code, out, _) = run(&["describe", "caseMixture"]);
    assert_eq!(code, 0);
    assert!(out.contains("0.5 S0(0.9 t) + 0.5 S0(0.45 t)"), "{out}");
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(run(&["describe", "fig4"]).0, 2);
    assert_eq!(run(&["run", "fig4"]).0, 2);
    assert_eq!(run(&["run", "table1a", "--n-obs", "1"]).0, 2);
    assert_eq!(run(&["bogus"]).0, 2);
}

#[test]
fn verify_without_artifacts_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = run(&["verify", "fig5", "--out", path(dir.path())]);
    assert_eq!(code, 2);
    assert!(err.contains("missing artifact"), "{err}");
}

#[test]
fn run_then_verify_and_rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path());
    assert_eq!(run(&["run", "caseMixture", "--out", out]).0, 0);
    let first: Vec<Vec<u8>> = ["estimates.csv", "oracle.csv", "summary.csv", "manifest.json"]
        .iter()
        .map(|f| fs::read(dir.path().join("caseMixture").join(f)).unwrap())
        .collect();
    let (code, report, _) = run(&["verify", "caseMixture", "--out", out]);
    assert_eq!(code, 0, "{report}");
    assert!(report.lines().last() == Some("PASS"));
    assert_eq!(run(&["run", "caseMixture", "--out", out]).0, 0);
    for (f, bytes) in ["estimates.csv", "oracle.csv", "summary.csv", "manifest.json"].iter().zip(first) {
        assert_eq!(fs::read(dir.path().join("caseMixture").join(f)).unwrap(), bytes, "{f}");
    }
}

#[test]
fn thread_count_does_not_change_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for (p, threads) in [(&a, "1"), (&b, "3")] {
        let (code, _, err) = run(&["run", "table1b", "--n-obs", "200", "--n-sim", "40", "--out", path(p), "--threads", threads]);
        assert_eq!(code, 0, "{err}");
    }
    for f in ["estimates.csv", "oracle.csv", "summary.csv", "manifest.json"] {
        assert_eq!(fs::read(a.join("table1b").join(f)).unwrap(), fs::read(b.join("table1b").join(f)).unwrap(), "{f}");
    }
}

#[test]
fn config_file_overrides_defaults_and_flags_override_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    fs::write(&cfg, "scenario = \"fig5\"\nname = \"fig5-small\"\nn_obs = 2000\nseed = 5\n").unwrap();
    let (code, _, err) = run(&["run", "--config", path(&cfg), "--seed", "9", "--out", path(dir.path())]);
    assert_eq!(code, 0, "{err}");
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("fig5-small/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 9);
    assert_eq!(manifest["config"]["n_obs"], 2000);
    assert_eq!(manifest["exhibit"], "fig5");
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);

    fs::write(&cfg, "scenario = \"fig5\"\nunknown = 1\n").unwrap();
    assert_eq!(run(&["run", "--config", path(&cfg), "--out", path(dir.path())]).0, 2);
}

#[test]
fn failing_check_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path());
    assert_eq!(run(&["run", "caseMixture", "--out", out]).0, 0);
    let oracle = dir.path().join("caseMixture/oracle.csv");
    let text = fs::read_to_string(&oracle).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_owned).collect();
    // Push one oracle value outside the admissible range.
    let mut cells: Vec<&str> = lines[1].split(',').collect();
    cells[4] = "0.95";
    lines[1] = cells.join(",");
    fs::write(&oracle, lines.join("\n") + "\n").unwrap();
    let (code, report, _) = run(&["verify", "caseMixture", "--out", out]);
    assert_eq!(code, 1, "{report}");
    assert!(report.contains("[ FAIL] 8"), "{report}");
}
