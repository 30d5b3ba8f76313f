use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use mcflow::initial::InitialSpec;
use mcflow::scenario::{preset, CSV_COLUMNS};

fn mcflow(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_mcflow"));
    cmd.args(args).env_remove("MCFLOW_OUT");
    if let Some(dir) = env_out {
        cmd.env("MCFLOW_OUT", dir);
    }
    cmd.output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn incompatible_config(dir: &Path) -> std::path::PathBuf {
    let mut cfg = preset("identity-smoke").unwrap();
    cfg.initial.spec = InitialSpec::Ramp {
        slope: 1.0,
        direction: [1.0, 0.0],
    };
    let path = dir.join("ramp.json");
    fs::write(&path, cfg.to_json()).unwrap();
    path
}

#[test]
fn presets_lists_every_scenario() {
    let out = mcflow(&["presets"], None);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    for p in mcflow::scenario::PRESETS {
        assert!(text.contains(p.name));
    }
}

#[test]
fn dumped_preset_runs_from_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let dump = mcflow(&["presets", "--dump", "forced-decay"], None);
    assert_eq!(code(&dump), 0);
    let cfg_path = dir.path().join("forced.toml");
    fs::write(&cfg_path, dump.stdout).unwrap();
    let out_dir = dir.path().join("out");
    let out = mcflow(
        &[
            "run",
            cfg_path.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for f in [
        "trace.json",
        "trace.csv",
        "report.json",
        "summary.txt",
        "manifest.json",
    ] {
        assert!(out_dir.join(f).is_file(), "{f}");
    }
    let csv = fs::read_to_string(out_dir.join("trace.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), CSV_COLUMNS.join(","));
}

#[test]
fn output_directory_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = mcflow(&["run", "--preset", "identity-smoke"], Some(dir.path()));
    assert_eq!(code(&out), 0);
    assert!(dir.path().join("report.json").is_file());
}

#[test]
fn incompatible_data_exit_with_code_two_unless_overridden() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = incompatible_config(dir.path());
    let out = mcflow(&["run", cfg.to_str().unwrap()], Some(&dir.path().join("a")));
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("boundary condition"));
    let out = mcflow(
        &["run", cfg.to_str().unwrap(), "--override-compatibility"],
        Some(&dir.path().join("b")),
    );
    assert_ne!(code(&out), 2);
    let trace = fs::read_to_string(dir.path().join("b/trace.json")).unwrap();
    assert!(trace.contains("\"compatibility_overridden\":true"));
}

#[test]
fn malformed_config_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "name = \"x\"\n\n[domain]\nkind = \"hexagon\"\n").unwrap();
    let out = mcflow(&["run", path.to_str().unwrap()], Some(dir.path()));
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));
}

#[test]
fn replay_matches_then_detects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let out = mcflow(
        &["run", "--preset", "capillary-monotone", "--reference-mode"],
        Some(dir.path()),
    );
    assert_eq!(code(&out), 0);
    let trace = dir.path().join("trace.json");
    let report = dir.path().join("report.json");
    let args = ["replay", trace.to_str().unwrap(), report.to_str().unwrap()];
    assert_eq!(code(&mcflow(&args, None)), 0);

    let disabled = mcflow(
        &[args[0], args[1], args[2], "--disable", "band_gradient"],
        None,
    );
    assert_eq!(code(&disabled), 0);
    assert!(String::from_utf8_lossy(&disabled.stdout).contains("skipped"));
    let unknown = mcflow(&[args[0], args[1], args[2], "--disable", "nonsense"], None);
    assert_eq!(code(&unknown), 2);

    let text = fs::read_to_string(&report).unwrap();
    fs::write(&report, text.replacen("\"pass\"", "\"fail\"", 1)).unwrap();
    assert_eq!(code(&mcflow(&args, None)), 1);

    fs::write(&trace, "{\"schema\": 99}").unwrap();
    assert_eq!(code(&mcflow(&args, None)), 2);
}
