use std::collections::BTreeSet;
use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

fn nhskin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nhskin")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = nhskin(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn preset_list_names_everything() {
    let out = ok(&["preset-list"]);
    let names: Vec<&str> = out.lines().collect();
    assert_eq!(names.len(), 11);
    assert!(names.contains(&"fig2-dqpt-N80") && names.contains(&"supp-c-different"));
}

#[test]
fn evolve_writes_trajectory_and_heatmaps() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    ok(&["evolve", "--preset", "fig1-case1", "--out", d, "--tmax", "3", "--dt", "0.1"]);
    let traj = read(&dir.path().join("trajectory.csv"));
    let mut lines = traj.lines();
    assert_eq!(lines.next().unwrap(), "t,kmax_plus,kmax_minus,com_plus,com_minus,com_total,vg_plus,vg_minus");
    assert_eq!(lines.count(), 31);
    let hk = read(&dir.path().join("heatmap_k.csv"));
    assert_eq!(hk.lines().count(), 31);
    assert_eq!(hk.lines().next().unwrap().split(',').count(), 120);
    let hx = read(&dir.path().join("heatmap_x.csv"));
    assert_eq!(hx.lines().next().unwrap().split(',').count(), 120);
}

#[test]
fn runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        ok(&["dqpt", "--preset", "fig1-case2", "--out", d.path().to_str().unwrap(), "--tmax", "40", "--dt", "0.1"]);
        ok(&["evolve", "--preset", "fig1-case3", "--out", d.path().to_str().unwrap(), "--tmax", "4"]);
    }
    let mut names: Vec<_> = std::fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 9);
    for n in names {
        assert_eq!(std::fs::read(a.path().join(&n)).unwrap(), std::fs::read(b.path().join(&n)).unwrap(), "{n:?}");
    }
}

#[test]
fn ordinary_winding_scan_has_three_regions() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["winding-scan", "--preset", "supp-ordinary-win02pi", "--out", dir.path().to_str().unwrap()]);
    let text = read(&dir.path().join("winding_scan.csv"));
    let values: BTreeSet<String> =
        text.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().to_string()).filter(|w| w != "na").collect();
    assert_eq!(values, BTreeSet::from(["-1".to_string(), "0".to_string(), "1".to_string()]));
    assert_eq!(text.lines().count(), 1 + 121 * 121);
}

#[test]
fn config_file_round_trip_through_cli() {
    let dir = tempfile::tempdir().unwrap();
    let toml = ok(&["show-config", "--preset", "supp-n0-different", "--nk", "64"]);
    let path = dir.path().join("exp.toml");
    std::fs::write(&path, &toml).unwrap();
    assert_eq!(ok(&["show-config", "--config", path.to_str().unwrap()]), toml);
    assert!(toml.contains("n0_plus = 16.0") && toml.contains("n0_minus = 48.0"));
    let out = dir.path().join("out");
    ok(&["gbz", "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let roots = read(&out.join("gbz_roots.csv"));
    assert_eq!(roots.lines().count(), 5);
}

#[test]
fn spectrum_respects_boundary_and_window() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    ok(&["spectrum", "--preset", "fig1-case1", "--nk", "40", "--window", "pm_pi", "--out", d]);
    let bands = read(&dir.path().join("bands.csv"));
    let first_k: f64 = bands.lines().nth(1).unwrap().split(',').next().unwrap().parse().unwrap();
    assert!((first_k + std::f64::consts::PI).abs() < 1e-12);
    assert_eq!(read(&dir.path().join("spectrum.csv")).lines().count(), 81);
}

#[test]
fn errors_name_the_stage() {
    let out = nhskin(&["evolve", "--preset", "fig7"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown preset 'fig7'"));

    let out = nhskin(&["scaling", "--preset", "fig1-case1", "--out", tempfile::tempdir().unwrap().path().to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("scaling: config: analysis.scaling_sizes is empty"));

    let out = nhskin(&["evolve", "--preset", "fig1-case1", "--dt", "0"]);
    assert!(!out.status.success());

    let out = nhskin(&["evolve"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--config"));
}

#[test]
fn every_preset_completes() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let names = ok(&["preset-list"]);
    for name in names.lines() {
        let out = dir.path().join(name);
        let o = out.to_str().unwrap();
        let cmd = if name.starts_with("fig2") { "dqpt" } else { "evolve" };
        ok(&[cmd, "--preset", name, "--out", o]);
        if name == "supp-winding-control" {
            ok(&["spectrum", "--preset", name, "--out", o]);
        }
    }
    ok(&["scaling", "--preset", "fig2-dqpt-N120", "--out", dir.path().to_str().unwrap()]);
    assert!(start.elapsed() < Duration::from_secs(300));
}
