use std::fs;
use std::process::Command;

use serde_json::Value;

fn zel() -> Command {
    Command::new(env!("CARGO_BIN_EXE_zel"))
}

fn json_lines(out: &[u8]) -> Vec<Value> {
    String::from_utf8_lossy(out)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn gen_solve_eval_project() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.txt");
    let ok = zel()
        .args(["gen", "--n", "64", "--seed", "5", "--out"])
        .arg(&g)
        .status()
        .unwrap();
    assert!(ok.success());
    let sidecar: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("g.txt.json")).unwrap()).unwrap();
    for key in ["terminals", "D", "seed", "removal_log", "diagnostics"] {
        assert!(sidecar.get(key).is_some(), "sidecar lacks {key}");
    }

    let sol = dir.path().join("s.json");
    let out = zel()
        .arg("solve")
        .arg(&g)
        .args(["--method", "local", "--budget", "3000", "--restarts", "2", "--out"])
        .arg(&sol)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let solved = &json_lines(&out.stdout)[0];
    let scored = zel().arg("solve").arg(&g).arg("--eval").arg(&sol).output().unwrap();
    assert!(scored.status.success());
    assert_eq!(json_lines(&scored.stdout)[0]["cost"], solved["cost"]);

    let rows = zel().arg("project").arg(&g).output().unwrap();
    let rows = json_lines(&rows.stdout);
    assert_eq!(rows.len(), 64);
    assert!(rows.iter().all(|r| r["member"] == Value::Bool(true)));

    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"assignment":[0],"delta":"canonical","centers":[0]}"#).unwrap();
    assert!(!zel().arg("solve").arg(&g).arg("--eval").arg(&bad).status().unwrap().success());
}

#[test]
fn gap_honors_out_dir_and_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("gap.conf");
    fs::write(&cfg, "n = 64\nseeds = 2\nmax_iterations = 2000\nrestarts = 2\nout_dir = /nonexistent/never\n").unwrap();
    let out_dir = dir.path().join("out");
    let status = zel().arg("gap").arg(&cfg).env("ZEL_OUT_DIR", &out_dir).status().unwrap();
    assert!(status.success());
    assert!(out_dir.join("gap.csv").exists());
    assert!(out_dir.join("gap.dat").exists());

    // n = 8 is below the minimum size, so every record fails
    fs::write(&cfg, "n = 8\nseeds = 1\n").unwrap();
    let status = zel().arg("gap").arg(&cfg).env("ZEL_OUT_DIR", &out_dir).status().unwrap();
    assert!(!status.success());
}
