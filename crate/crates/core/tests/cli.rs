use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn singflow(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_singflow"))
        .args(args)
        .current_dir(dir)
        .env("SINGFLOW_LOG", "quiet")
        .output()
        .unwrap()
}

#[test]
fn evolve_then_verify_then_tamper() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("run.cfg"),
        "mode = \"evolve\"\nu0 = plateau(1)\nw = \"abs\"\nn = 64\ndt = 0.01\nt_end = 0.4\n",
    )
    .unwrap();
    let out = singflow(&["evolve", "--config", "run.cfg", "--out", "o"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let ok = singflow(&["verify", "--report", "o"], tmp.path());
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("all applicable verdicts pass"));

    // raise one energy value so the per-step dissipation check must fail
    let trace = tmp.path().join("o/trace.csv");
    let text = fs::read_to_string(&trace).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_owned).collect();
    let mut cols: Vec<String> = lines[4].split(',').map(str::to_owned).collect();
    cols[1] = format!("{:.16e}", cols[1].parse::<f64>().unwrap() + 1.0);
    lines[4] = cols.join(",");
    fs::write(&trace, lines.join("\n") + "\n").unwrap();

    let bad = singflow(&["verify", "--report", "o"], tmp.path());
    assert_eq!(bad.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&bad.stdout);
    assert!(stdout.contains("FAIL") && stdout.contains("energy_dissipation"), "{stdout}");
}

#[test]
fn config_errors_exit_nonzero_with_line_numbers() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("bad.cfg"), "f = plateau(1)\nh = 0.1\nbogus = 3\n").unwrap();
    let out = singflow(&["elliptic", "--config", "bad.cfg", "--out", "o"], tmp.path());
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bogus") && err.contains('3'), "{err}");
}

#[test]
fn orlicz_mode_writes_phi() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("o.cfg"), "field = sine(2, 1)\nn = 64\n").unwrap();
    let out = singflow(&["orlicz", "--config", "o.cfg", "--out", "o"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let phi: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("o/phi.json")).unwrap()).unwrap();
    assert!(phi.is_object());
    assert!(tmp.path().join("o/manifest.json").is_file());
}
