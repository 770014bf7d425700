use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_isac-nomp"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&["simulate", "--seed", "11", "--out", p(&a)]);
    ok(&["simulate", "--seed", "11", "--out", p(&b)]);
    for f in ["measurement.bin", "resources.csv", "truth.json", "config.snapshot"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn snapshot_replays_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&["simulate", "--seed", "4", "--set", "noise.snr_db=3", "--out", p(&a)]);
    ok(&["simulate", "--config", p(&a.join("config.snapshot")), "--out", p(&b)]);
    assert_eq!(fs::read(a.join("measurement.bin")).unwrap(), fs::read(b.join("measurement.bin")).unwrap());
}

#[test]
fn sidelink_occupancy_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sidelink.cfg");
    fs::write(&cfg, "[grid]\npreset = sidelink\n[resources]\neta = 0.01\n").unwrap();
    ok(&["simulate", "--config", p(&cfg), "--out", p(dir.path())]);
    let snap = fs::read_to_string(dir.path().join("config.snapshot")).unwrap();
    assert!(snap.contains("# n_resources = 4368"), "{snap}");
}

#[test]
fn empty_scene_is_pure_noise() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["simulate", "--set", "targets.count=0", "--out", p(dir.path())]);
    let truth = json(&dir.path().join("truth.json"));
    assert_eq!(truth["targets"].as_array().unwrap().len(), 0);
    let bytes = fs::read(dir.path().join("measurement.bin")).unwrap();
    assert_eq!(&bytes[..8], b"SISOCHM1");
    assert!(bytes[16..].iter().any(|b| *b != 0));
}

#[test]
fn detect_finds_the_simulated_targets() {
    let dir = tempfile::tempdir().unwrap();
    let (sim, det) = (dir.path().join("sim"), dir.path().join("det"));
    ok(&["simulate", "--seed", "2", "--set", "noise.snr_db=20", "--out", p(&sim)]);
    for detector in ["nomp", "omp", "fft2d"] {
        ok(&["detect", "--input", p(&sim), "--detector", detector, "--set", "detector.omp_k=2", "--set", "detector.peaks=2", "--out", p(&det)]);
        let assoc = json(&det.join("association.json"));
        assert_eq!(assoc["pod"], 1.0, "{detector}");
    }
    let report = json(&det.join("detections.json"));
    let first = &report["detections"][0];
    for key in ["delay_s", "doppler_hz", "range_m", "velocity_mps"] {
        assert!(first[key].is_f64(), "{key}");
    }
    ok(&["detect", "--input", p(&sim), "--out", p(&det)]);
    let trace = fs::read_to_string(det.join("residual_trace.csv")).unwrap();
    let energies: Vec<f64> = trace.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(energies.windows(2).all(|w| w[1] < w[0]), "{energies:?}");
}

#[test]
fn noise_only_gives_no_detections() {
    let dir = tempfile::tempdir().unwrap();
    let (sim, det) = (dir.path().join("sim"), dir.path().join("det"));
    ok(&["simulate", "--seed", "9", "--set", "targets.count=0", "--out", p(&sim)]);
    ok(&["detect", "--input", p(&sim), "--out", p(&det)]);
    assert_eq!(json(&det.join("detections.json"))["detections"].as_array().unwrap().len(), 0);
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["simulate", "--out", p(dir.path())]);
    let out = run(&["detect", "--input", p(dir.path()), "--detector", "music"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("possible values"));

    let out = run(&["bench", "--scenario", "nope"]);
    assert_eq!(out.status.code(), Some(2));

    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "grid.n_subcarriers = 8\ngrid.colour = red\n").unwrap();
    let out = run(&["simulate", "--config", p(&cfg), "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let out = run(&["simulate", "--out", p(&blocker.join("sub"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_input_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["simulate", "--out", p(dir.path())]);
    let m = dir.path().join("measurement.bin");
    let bytes = fs::read(&m).unwrap();
    fs::write(&m, &bytes[..bytes.len() - 5]).unwrap();
    let out = run(&["detect", "--input", p(dir.path()), "--out", p(&dir.path().join("d"))]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("truncated"));
}

#[test]
fn bench_lists_scenarios() {
    let out = ok(&["bench", "--scenario", "list"]);
    let names: Vec<String> = String::from_utf8(out.stdout).unwrap().lines().map(str::to_string).collect();
    assert_eq!(names, ["pod_vs_swpr", "rmse_vs_snr", "resolution_pair", "convergence", "timing"]);
}

#[test]
fn bench_writes_reproducible_tables() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let args = |out: &Path| {
        vec![
            "bench".to_string(),
            "--scenario".into(),
            "rmse_vs_snr".into(),
            "--trials".into(),
            "10".into(),
            "--seed".into(),
            "5".into(),
            "--set".into(),
            "grid.n_subcarriers=16".into(),
            "--set".into(),
            "grid.n_symbols=16".into(),
            "--set".into(),
            "resources.mode=structured".into(),
            "--threads".into(),
            "1".into(),
            "--out".into(),
            out.to_str().unwrap().into(),
        ]
    };
    for out in [&a, &b] {
        let args = args(out);
        ok(&args.iter().map(String::as_str).collect::<Vec<_>>());
    }
    let csv = fs::read_to_string(a.join("rmse_vs_snr.csv")).unwrap();
    assert_eq!(csv, fs::read_to_string(b.join("rmse_vs_snr.csv")).unwrap());
    let header = csv.lines().next().unwrap();
    assert!(header.contains("crb_range_m") && header.contains("crb_velocity_mps"));
    assert_eq!(csv.lines().count(), 1 + 7 * 2);
    assert!(a.join("rmse_vs_snr.json").exists() && a.join("config.snapshot").exists());
}

#[test]
fn recording_round_trip_through_detect() {
    let dir = tempfile::tempdir().unwrap();
    let (rec, det) = (dir.path().join("rec"), dir.path().join("det"));
    ok(&["synth-recording", "--set", "carousel.n_symbols=1000", "--out", p(&rec)]);
    let traj = fs::read_to_string(rec.join("trajectory.csv")).unwrap();
    assert_eq!(traj.lines().count(), 1 + 5);
    ok(&[
        "detect",
        "--recording",
        p(&rec.join("recording.bin")),
        "--config",
        p(&rec.join("config.snapshot")),
        "--set",
        "resources.eta=0.01",
        "--out",
        p(&det),
    ]);
    let blocks = json(&det.join("detections.json"));
    assert_eq!(blocks.as_array().unwrap().len(), 5);
    assert!(fs::read_to_string(det.join("config.snapshot")).unwrap().contains("# n_resources = 512"));
}
