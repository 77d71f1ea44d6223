//! Black-box tests of the `fhks` binary: exit codes, artifact layout, and
//! snapshot read-back.

use std::path::Path;
use std::process::Command;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_fhks")
}

fn run_cli(args: &[&str]) -> std::process::Output {
    Command::new(bin()).args(args).output().unwrap()
}

#[test]
fn check_subcommand_passes() {
    let out = run_cli(&["check"]);
    assert!(out.status.success(), "{out:?}");
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("all invariant checks passed"), "{text}");
}

#[test]
fn invalid_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "[sim]\ns = 1.0\n").unwrap();
    let out = run_cli(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("(0, 1)"), "{err}");
}

#[test]
fn unknown_key_exits_one_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "[sim]\nfoo = 3\n").unwrap();
    let out = run_cli(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("foo") && err.contains("line 2"), "{err}");
}

#[test]
fn missing_config_file_exits_one() {
    let out = run_cli(&["run", "--config", "/nonexistent/path.cfg"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn run_writes_expected_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "[domain]\ncells = 32\n[sim]\nt_end = 0.05\n[output]\ntimes = 0.025\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = run_cli(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    assert!(out_dir.join("series.csv").exists());
    assert!(out_dir.join("config.resolved").exists());
    // t = 0 + two output times
    for i in 0..3 {
        assert!(out_dir.join(format!("snapshot_{i:04}.fhks")).exists());
    }

    // snapshots decode and carry monotone times within [0, 1] bounds
    let mut last_t = -1.0;
    for i in 0..3 {
        let snap =
            fhks::output::read_snapshot(&out_dir.join(format!("snapshot_{i:04}.fhks"))).unwrap();
        assert!(snap.t > last_t - 1e-15);
        assert!(snap.u.min() >= -1e-8 && snap.u.max() <= 1.0 + 1e-8);
        last_t = snap.t;
    }

    // the resolved config re-parses to an equivalent manifest
    let text = std::fs::read_to_string(out_dir.join("config.resolved")).unwrap();
    let manifest = fhks::config::parse_config(&text).unwrap();
    assert_eq!(manifest.domain.cells(), &[32]);
    assert_eq!(manifest.sim.t_end, 0.05);
}

#[test]
fn series_header_matches_documented_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "[domain]\ncells = 32\n[sim]\nt_end = 0.05\n").unwrap();
    let out = run_cli(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let series = std::fs::read_to_string(out_dir.join("series.csv")).unwrap();
    let header = series.lines().next().unwrap();
    assert_eq!(
        header,
        "t,mass,u_min,u_max,c_min,c_max,viscous_energy_cum,\
         entropy_residual_0,entropy_residual_1,entropy_residual_2"
    );
    assert!(!series.contains('\r'));
}

#[test]
fn seed_flag_overrides_preset_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "[domain]\ncells = 32\n[sim]\nt_end = 0.01\n[initial]\npreset = random_clipped\nseed = 1\n",
    )
    .unwrap();
    let run_with = |out: &Path, seed: Option<&str>| {
        let mut args = vec![
            "run".to_string(),
            "--config".into(),
            cfg.to_str().unwrap().into(),
            "--out".into(),
            out.to_str().unwrap().into(),
        ];
        if let Some(s) = seed {
            args.push("--seed".into());
            args.push(s.into());
        }
        let st = Command::new(bin()).args(&args).output().unwrap();
        assert!(st.status.success(), "{st:?}");
        std::fs::read(out.join("snapshot_0000.fhks")).unwrap()
    };
    let base = run_with(&dir.path().join("a"), None);
    let same = run_with(&dir.path().join("b"), Some("1"));
    let other = run_with(&dir.path().join("c"), Some("2"));
    assert_eq!(base, same);
    assert_ne!(base, other);
}

#[test]
fn sweep_without_section_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "[domain]\ncells = 32\n").unwrap();
    let out = run_cli(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn sweep_writes_ordered_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.cfg");
    std::fs::write(
        &cfg,
        "[domain]\ncells = 32\n[sim]\nt_end = 0.05\n[sweep]\naxis = sigma\nvalues = 0, 0.5, 1\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = run_cli(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--threads",
        "4",
    ]);
    assert!(out.status.success(), "{out:?}");
    let table = std::fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    let values: Vec<&str> = table
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap())
        .collect();
    assert_eq!(values.len(), 3);
    let nums: Vec<f64> = values.iter().map(|v| v.parse().unwrap()).collect();
    assert_eq!(nums, vec![0.0, 0.5, 1.0]);
    assert!(table.lines().skip(1).all(|l| l.ends_with(",ok")));
}
