use std::process::Command;

fn sftlab(args: &[&str], env: &[(&str, &str)]) -> (i32, String) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sftlab"));
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    let out = cmd.output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

fn tmp(name: &str) -> std::path::PathBuf {
    std::env::temp_dir().join(format!("sftlab-cli-{}-{name}", std::process::id()))
}

#[test]
fn schema_then_config() {
    let (code, out) = sftlab(&["peierls", "--ell-max", "10"], &[]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "# schema: peierls/v1 ell,exact_count,bound,ratio,probability_bound");
    assert!(lines.contains(&"# config: ell-max=10"));
    assert!(lines.contains(&"8,2,5.805663e4,3.444912e-5,1.069210e0"));
}

#[test]
fn every_subcommand_exists() {
    for sub in ["census", "verify", "entropy", "free-energy", "peierls", "sample", "phase-scan", "model", "gluing"] {
        let (code, _) = sftlab(&[sub, "--help"], &[]);
        assert_eq!(code, 0, "{sub}");
    }
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(sftlab(&["census"], &[]).0, 1);
    assert_eq!(sftlab(&["census", "--model", "nope"], &[]).0, 1);
    assert_eq!(sftlab(&["sample", "--model", "vertex", "--size", "0x4"], &[]).0, 1);
    let cfg = tmp("bad.cfg");
    std::fs::write(&cfg, "model=vertex\nvolumes=3x3\n").unwrap();
    assert_eq!(sftlab(&["census", "--config", cfg.to_str().unwrap()], &[]).0, 1);
    let _ = std::fs::remove_file(cfg);
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let cfg = tmp("ok.cfg");
    std::fs::write(&cfg, "# a comment\nell-max=8\nbeta=2.0\n").unwrap();
    let (code, out) = sftlab(&["peierls", "--config", cfg.to_str().unwrap(), "--beta", "1.5"], &[]);
    let _ = std::fs::remove_file(cfg);
    assert_eq!(code, 0);
    assert!(out.contains("# config: ell-max=8\n"));
    assert!(out.contains("# config: beta=1.5\n"));
    assert!(!out.contains("\n10,"));
}

#[test]
fn tolerance_failure_exits_two() {
    let (code, out) = sftlab(&["free-energy", "--beta", "1.0", "--onsager", "--widths", "2..3", "--tolerance", "1e-9"], &[]);
    assert_eq!(code, 2);
    assert!(out.contains("\ndiff,,"));
    assert_eq!(sftlab(&["gluing", "--model", "vertex", "--gap", "1", "--trials", "20"], &[]).0, 2);
}

#[test]
fn budget_exhaustion_exits_three() {
    let (code, _) = sftlab(
        &["verify", "--what", "lemma", "--model", "potts:2", "--cases", "random:2:1", "--volume", "3x3"],
        &[("SFTLAB_BUDGET", "50")],
    );
    assert_eq!(code, 3);
}

#[test]
fn export_round_trips() {
    let path = tmp("vertex.sft");
    let (code, out) = sftlab(&["model", "export", "--name", "vertex", "--out", path.to_str().unwrap()], &[]);
    assert_eq!(code, 0);
    assert!(out.contains("vertex,14,248"));
    let text = std::fs::read_to_string(&path).unwrap();
    let _ = std::fs::remove_file(path);
    let spec = sftlab::sft::parse_spec(&text).unwrap();
    assert_eq!(spec.allowed_count(), Some(248));
}

#[test]
fn verify_writes_json_summary() {
    let path = tmp("summary.json");
    let (code, out) = sftlab(
        &["verify", "--what", "counting", "--model", "vertex", "--N", "2", "--cases", "random:3:2", "--margin", "1", "--json", path.to_str().unwrap()],
        &[],
    );
    assert_eq!(code, 0, "{out}");
    let json = std::fs::read_to_string(&path).unwrap();
    let _ = std::fs::remove_file(path);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["ok"], true);
    assert_eq!(v["cases"].as_array().unwrap().len(), 3);
    assert!(out.lines().any(|l| l.starts_with("# summary: cases=3")));
}

#[test]
fn gnuplot_hint_is_a_comment() {
    let (_, out) = sftlab(&["entropy", "--model", "full:2", "--widths", "2..3", "--gnuplot-hint"], &[]);
    assert!(out.lines().any(|l| l.starts_with("# gnuplot:")));
    assert!(out.contains("\n2,4,0.693147180560,"));
}
