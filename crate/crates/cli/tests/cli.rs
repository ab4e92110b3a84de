use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use byzgrad_cli::{generate, GenParams, RunSummary, ScenarioFile};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_byzgrad"));
    cmd.env_remove("BYZGRAD_SEED");
    cmd
}

fn exec(cmd: &mut Command) -> (i32, String, String) {
    let Output {
        status,
        stdout,
        stderr,
    } = cmd.output().unwrap();
    (
        status.code().unwrap_or(-1),
        String::from_utf8(stdout).unwrap(),
        String::from_utf8(stderr).unwrap(),
    )
}

fn small(horizon: usize) -> ScenarioFile {
    generate(
        "redundant_quadratic",
        &GenParams {
            horizon: Some(horizon),
            ..GenParams::default()
        },
    )
    .unwrap()
}

fn write_scenario(dir: &Path, name: &str, file: &ScenarioFile) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, file.to_toml()).unwrap();
    path
}

fn run(path: &Path, out: &Path, extra: &[&str]) -> (i32, String, String) {
    exec(bin()
        .arg("run")
        .arg(path)
        .arg("-o")
        .arg(out)
        .args(extra))
}

fn summary(dir: &Path) -> RunSummary {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn resilience_violation_exits_2_with_message() {
    let tmp = tempfile::tempdir().unwrap();
    let src = small(10).to_toml().replace("n = 10", "n = 4");
    let path = tmp.path().join("bad.toml");
    fs::write(&path, src).unwrap();
    let (code, _, err) = run(&path, &tmp.path().join("out"), &[]);
    assert_eq!(code, 2, "{err}");
    assert!(err.contains("n >= 2f + 1"), "{err}");
    assert!(err.contains("line "), "{err}");
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn unknown_key_exits_2_with_line() {
    let tmp = tempfile::tempdir().unwrap();
    let src = small(10).to_toml().replace("horizon = 10", "horizon = 10\nhorizn = 5");
    let path = tmp.path().join("typo.toml");
    fs::write(&path, &src).unwrap();
    let line = src.lines().position(|l| l.starts_with("horizn")).unwrap() + 1;
    for args in [vec!["check"], vec!["run"]] {
        let mut cmd = bin();
        cmd.args(&args).arg(&path);
        if args[0] == "run" {
            cmd.arg("-o").arg(tmp.path().join("out"));
        }
        let (code, _, err) = exec(&mut cmd);
        assert_eq!(code, 2, "{err}");
        assert!(err.contains(&format!("line {line}")), "{err}");
        assert!(err.contains("horizn"), "{err}");
    }
}

#[test]
fn runtime_abort_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let mut file = small(10);
    file.adversary = byzgrad_cli::scenario_file::AdversarySpec::NormInflate { scale: 1e20 };
    let path = write_scenario(tmp.path(), "inflate.toml", &file);
    let (code, _, err) = run(&path, &tmp.path().join("out"), &[]);
    assert_eq!(code, 3, "{err}");
    assert!(err.contains("round 0"), "{err}");
}

#[test]
fn gen_output_passes_check() {
    for (template, args) in [
        ("redundant_quadratic", vec!["--n", "10", "--f", "2", "--d", "3", "--seed", "7"]),
        ("violated_redundancy", vec!["--n", "5", "--f", "1", "--d", "1"]),
        ("margin_negative", vec!["--n", "10", "--f", "4", "--d", "9"]),
    ] {
        let tmp = tempfile::tempdir().unwrap();
        let (code, toml, err) = exec(bin().arg("gen").arg(template).args(&args));
        assert_eq!(code, 0, "{err}");
        let path = tmp.path().join("gen.toml");
        fs::write(&path, &toml).unwrap();
        let (code, report, err) = exec(bin().arg("check").arg(&path));
        assert_eq!(code, 0, "{template}: {err}");
        for key in ["n = ", "f = ", "d = ", "mu = ", "lambda = ", "zeta = ", "alpha = "] {
            assert!(report.contains(key), "{report}");
        }
        let expected = match template {
            "redundant_quadratic" => ("redundancy: OK", "convergence preconditions: OK"),
            "violated_redundancy" => ("redundancy: FAIL", "convergence preconditions: FAIL"),
            _ => ("redundancy: OK", "convergence preconditions: FAIL (alpha <= 0)"),
        };
        assert!(report.contains(expected.0), "{report}");
        assert!(report.contains(expected.1), "{report}");
    }
}

#[test]
fn gen_unknown_template_exits_2() {
    let (code, _, err) = exec(bin().args(["gen", "mystery"]));
    assert_eq!(code, 2);
    assert!(err.contains("unknown template"), "{err}");
}

#[test]
fn generated_scenario_runs_without_unexpected_warnings() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_scenario(tmp.path(), "s.toml", &small(500));
    let out = tmp.path().join("out");
    let (code, _, err) = run(&path, &out, &[]);
    assert_eq!(code, 0, "{err}");
    let s = summary(&out);
    assert!(s.warnings.is_empty(), "{:?}", s.warnings);
    assert_eq!(s.redundancy, "OK");
    assert_eq!(s.rounds, 500);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_scenario(tmp.path(), "s.toml", &small(300));
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(run(&path, &a, &[]).0, 0);
    assert_eq!(run(&path, &b, &[]).0, 0);
    assert_eq!(
        fs::read(a.join("trace.csv")).unwrap(),
        fs::read(b.join("trace.csv")).unwrap()
    );
    assert_eq!(summary(&a).digest, summary(&b).digest);
}

#[test]
fn trace_has_contract_header_and_stride() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_scenario(tmp.path(), "s.toml", &small(25));
    let out = tmp.path().join("out");
    assert_eq!(run(&path, &out, &["--record-every", "10"]).0, 0);
    let csv = fs::read_to_string(out.join("trace.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,eta,diameter_inf,diameter_l2,V,max_dist,cge_norm_max,zeta_violated"
    );
    let ts: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(ts, ["0", "10", "20", "25"]);
    assert!(csv.ends_with('\n'));
}

#[test]
fn seed_env_override_changes_digest_and_trace() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_scenario(tmp.path(), "s.toml", &small(50));
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(run(&path, &a, &[]).0, 0);
    let (code, _, err) = exec(
        bin()
            .env("BYZGRAD_SEED", "99")
            .arg("run")
            .arg(&path)
            .arg("-o")
            .arg(&b),
    );
    assert_eq!(code, 0, "{err}");
    assert_ne!(summary(&a).digest, summary(&b).digest);
    assert_ne!(
        fs::read(a.join("trace.csv")).unwrap(),
        fs::read(b.join("trace.csv")).unwrap()
    );
    let (code, _, _) = exec(bin().env("BYZGRAD_SEED", "oops").arg("check").arg(&path));
    assert_eq!(code, 2);
}

#[test]
fn sweep_points_match_standalone_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let base = small(200);
    let path = write_scenario(tmp.path(), "base.toml", &base);
    let out = tmp.path().join("sweep");
    let (code, _, err) = run(&path, &out, &["--sweep", "f=0..3", "--jobs", "2"]);
    assert_eq!(code, 0, "{err}");

    let index: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("index.json")).unwrap()).unwrap();
    let points = index["points"].as_array().unwrap();
    assert_eq!(points.len(), 4);
    assert!(index["final_max_dist"]["mean"].is_number());

    for (f, point) in points.iter().enumerate() {
        let dir = out.join(point["dir"].as_str().unwrap());
        assert_eq!(dir, out.join(format!("f_{f}")));
        let standalone = tmp.path().join(format!("solo_{f}"));
        let (code, _, err) = run(&dir.join("scenario.toml"), &standalone, &[]);
        assert_eq!(code, 0, "{err}");
        assert_eq!(
            fs::read(dir.join("trace.csv")).unwrap(),
            fs::read(standalone.join("trace.csv")).unwrap()
        );
        assert_eq!(summary(&dir).digest, summary(&standalone).digest);
        assert_eq!(summary(&dir).f, f);
    }
}

#[test]
fn bad_sweep_spec_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_scenario(tmp.path(), "s.toml", &small(10));
    let (code, _, err) = run(&path, &tmp.path().join("o"), &["--sweep", "colour=1..2"]);
    assert_eq!(code, 2);
    assert!(err.contains("unknown key"), "{err}");
    // n = 4 with f = 2 is rejected before anything runs
    let (code, _, err) = run(&path, &tmp.path().join("o"), &["--sweep", "n=4,10"]);
    assert_eq!(code, 2, "{err}");
}
