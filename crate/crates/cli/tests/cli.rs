//! End-to-end tests of the `nfloc` binary: exit codes, file handling and
//! the simulate-to-estimate round trip.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn nfloc() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nfloc"))
}

fn run(args: &[&str]) -> Output {
    nfloc().args(args).output().expect("binary should spawn")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// A small single-source scenario; `seed` controls whether the file pins a
/// master seed.
fn write_config(dir: &Path, name: &str, snr: &str, seeded: bool) -> PathBuf {
    let seed_line = if seeded { "master_seed = 1\n" } else { "" };
    let text = format!(
        r#"
[array]
num_elements = 5
spacing_wl = 0.5
coupling_terms = 3

[truth]
doas_deg = [40.0]
range_wl = 3.3

[grid]
doa_start_deg = 20.0
doa_stop_deg = 70.0
doa_step_deg = 0.5
range_start_wl = 2.0
range_stop_wl = 6.0
range_step_wl = 0.05

[experiment]
snr_db = [{snr}]
snapshots = 100
trials = 3
{seed_line}"#
    );
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn help_exits_zero() {
    let out = run(&["--help"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("mc-rmse"));
}

#[test]
fn unknown_arguments_exit_one() {
    let out = run(&["mc-rmse", "--nonsense"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_config_exits_one_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("rows.csv");
    let out = run(&[
        "mc-rmse",
        "--config",
        dir.path().join("absent.toml").to_str().unwrap(),
        "--seed",
        "1",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1), "stderr: {}", stderr_of(&out));
    assert!(!out_path.exists(), "no partial output may appear");
}

#[test]
fn missing_seed_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "cfg.toml", "10.0", false);
    let out = run(&["mc-rmse", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("seed"));
}

#[test]
fn bad_method_name_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "cfg.toml", "10.0", true);
    let out = run(&[
        "mc-rmse",
        "--config",
        config.to_str().unwrap(),
        "--method",
        "esprit",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn simulate_then_estimate_recovers_the_noiseless_scene() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "cfg.toml", "inf", true);
    let snaps = dir.path().join("snaps.csv");
    let coupling = dir.path().join("coupling.csv");

    let out = run(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--seed",
        "5",
        "--out",
        snaps.to_str().unwrap(),
        "--coupling-out",
        coupling.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));

    let est = dir.path().join("estimates.csv");
    let out = run(&[
        "estimate",
        "--config",
        config.to_str().unwrap(),
        "--in",
        snaps.to_str().unwrap(),
        "--coupling",
        coupling.to_str().unwrap(),
        "--method",
        "all",
        "--format",
        "csv",
        "--out",
        est.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));

    let text = std::fs::read_to_string(&est).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "method,source,doa_deg,range_wl,peak_value,iterations,converged"
    );
    let mut seen = 0;
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        let doa: f64 = fields[2].parse().unwrap();
        let range: f64 = fields[3].parse().unwrap();
        assert!((doa - 40.0).abs() < 1e-9, "{line}");
        assert!((range - 3.3).abs() < 1e-9, "{line}");
        seen += 1;
    }
    assert_eq!(seen, 3, "one row per method");
}

#[test]
fn estimate_music_without_coupling_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "cfg.toml", "inf", true);
    let snaps = dir.path().join("snaps.csv");
    let out = run(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        snaps.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let out = run(&[
        "estimate",
        "--config",
        config.to_str().unwrap(),
        "--in",
        snaps.to_str().unwrap(),
        "--method",
        "music",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("--coupling"));
}

#[test]
fn sweep_output_is_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "cfg.toml", "10.0", true);
    let mut outputs = Vec::new();
    for (name, threads) in [("a.csv", "1"), ("b.csv", "1"), ("c.csv", "4")] {
        let path = dir.path().join(name);
        let out = run(&[
            "mc-rmse",
            "--config",
            config.to_str().unwrap(),
            "--seed",
            "3",
            "--threads",
            threads,
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "stderr: {}", stderr_of(&out));
        outputs.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1], "same run twice must match bytes");
    assert_eq!(outputs[0], outputs[2], "thread count must not change bytes");
}

#[test]
fn flag_overrides_reach_the_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "cfg.toml", "10.0,20.0", true);
    let out = run(&[
        "mc-rmse",
        "--config",
        config.to_str().unwrap(),
        "--seed",
        "2",
        "--method",
        "alg1",
        "--snr-db",
        "0,30",
        "--trials",
        "2",
    ]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let text = String::from_utf8_lossy(&out.stdout).into_owned();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3, "header plus one row per SNR point:\n{text}");
    assert!(lines[1].starts_with("alg1,0,40,3.3,"));
    assert!(lines[2].starts_with("alg1,30,40,3.3,"));
    for row in &lines[1..] {
        assert!(row.ends_with(",2"), "trials_used must be 2: {row}");
    }
}

#[test]
fn bench_reports_three_methods_on_one_grid() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "cfg.toml", "20.0", true);
    let out = run(&["bench", "--config", config.to_str().unwrap(), "--seed", "4"]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let text = String::from_utf8_lossy(&out.stdout).into_owned();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "method,doa_grid_points,range_grid_points,median_time_s,ratio_vs_music"
    );
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("music,101,81,"));
    assert!(lines[1].ends_with(",1"));
    assert!(lines[2].starts_with("alg1,101,81,"));
    assert!(lines[3].starts_with("alg2,101,81,"));
}
