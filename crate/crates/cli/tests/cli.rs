use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn tt_rram(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tt-rram")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = tt_rram(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn synth_writes_samples_truth_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("data");
    ok(&["synth", "--dims", "6,6,6", "--r-prime", "2,2", "--rho-omega", "0.3", "--seed", "4", "--out-dir", s(&out)]);
    for f in ["omega.csv", "gamma.csv", "truth.tt", "x0.tt", "manifest.txt"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let omega = fs::read_to_string(out.join("omega.csv")).unwrap();
    assert_eq!(omega.lines().filter(|l| !l.starts_with('#')).count(), 65);
    let manifest = fs::read_to_string(out.join("manifest.txt")).unwrap();
    assert!(manifest.contains("data_seed = 4"));
}

#[test]
fn complete_from_files_then_round() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    ok(&["synth", "--dims", "8,8,8", "--r-prime", "2,2", "--rho-omega", "0.4", "--out-dir", s(&data)]);
    let cfg = dir.path().join("rram.cfg");
    fs::write(&cfg, "# small run\nr_max = 3\nk_max = 6\n").unwrap();
    let run = dir.path().join("run");
    let text = ok(&[
        "complete",
        "--omega",
        s(&data.join("omega.csv")),
        "--gamma",
        s(&data.join("gamma.csv")),
        "--config",
        s(&cfg),
        "--out-dir",
        s(&run),
    ]);
    assert!(text.starts_with("stop-"), "{text}");
    for f in ["trace.csv", "costs.csv", "estimates.csv", "result.tt", "manifest.txt"] {
        assert!(run.join(f).exists(), "{f}");
    }
    let trace = fs::read_to_string(run.join("trace.csv")).unwrap();
    assert!(trace.starts_with("outer,action,ranks,f_omega_rel,f_gamma_rel,inner_iters_cum,wall_ms"));
    assert!(fs::read_to_string(run.join("manifest.txt")).unwrap().contains("r_max = 3"));

    let rounded = dir.path().join("r.tt");
    let msg = ok(&["round", "--input", s(&run.join("result.tt")), "--ranks", "1,1", "--output", s(&rounded)]);
    assert!(msg.trim_end().ends_with("[1, 1]"), "{msg}");
    let msg = ok(&["round", "--input", s(&data.join("truth.tt")), "--delta", "0.999", "--output", s(&rounded)]);
    assert!(msg.trim_end().ends_with("[2, 2]"), "{msg}");
}

#[test]
fn complete_from_generated_data_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = |d: &str| {
        vec![
            "complete".to_string(),
            "--dims=6,6,6".into(),
            "--r-prime=2,2".into(),
            "--rho-omega=0.4".into(),
            "--method=baseline".into(),
            format!("--out-dir={}", dir.path().join(d).display()),
        ]
    };
    let run = |d: &str| {
        let a = args(d);
        ok(&a.iter().map(String::as_str).collect::<Vec<_>>());
        fs::read(dir.path().join(d).join("result.tt")).unwrap()
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn estimate_rank_and_angle_reports() {
    let dir = tempfile::tempdir().unwrap();
    let e = dir.path().join("est");
    let text = ok(&[
        "estimate-rank", "--dims", "8,8,8", "--r-prime", "2,2", "--r0", "1,1", "--rho-omega", "0.3", "--top", "3",
        "--out-dir", s(&e),
    ]);
    assert!(text.starts_with("estimated ranks"));
    let report = fs::read_to_string(e.join("report.csv")).unwrap();
    assert_eq!(report.lines().count(), 1 + 2 * 3);
    assert!(fs::read_to_string(e.join("manifest.txt")).unwrap().contains("estimate = "));

    let a = dir.path().join("angle");
    ok(&["angle", "--trials", "3", "--dims", "5,5,5,5", "--out-dir", s(&a)]);
    let csv = fs::read_to_string(a.join("angle.csv")).unwrap();
    assert!(csv.starts_with("trial,value,omega,residual"));
}

#[test]
fn errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let missing = tt_rram(&["round", "--input", s(&dir.path().join("none.tt")), "--ranks", "1", "--output", "x.tt"]);
    assert!(!missing.status.success());
    assert!(String::from_utf8_lossy(&missing.stderr).starts_with("error:"));

    let bad = tt_rram(&["synth", "--dims", "6,6,6", "--r-prime", "2", "--out-dir", s(dir.path())]);
    assert!(!bad.status.success());

    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "delta = 2\n").unwrap();
    let bad = tt_rram(&["complete", "--dims", "6,6,6", "--r-prime", "2,2", "--config", s(&cfg), "--out-dir", s(dir.path())]);
    assert!(!bad.status.success());

    assert!(!tt_rram(&["round", "--input", "a", "--output", "b"]).status.success());
}
