use isac_nomp::metrics::{run_experiment, DetectorKind, ExperimentConfig, Scenario};

const SEED: u64 = 77;

#[test]
fn on_grid_search_plateaus_at_quantization_floor() {
    let mut cfg = ExperimentConfig::for_scenario(Scenario::RmseVsSnr);
    cfg.detectors = vec![DetectorKind::Omp];
    cfg.detector.oversampling = 1;
    cfg.sweep = vec![30.0];
    let report = run_experiment(Scenario::RmseVsSnr, &cfg, 200, SEED).unwrap();
    let omp = report.point(30.0, "omp").unwrap();
    // Uniform offsets inside a cell: the nearest grid point is off by U(-1/2, 1/2).
    let floor = 1.0 / 12f64.sqrt();
    assert!((omp.rmse_delay_cells / floor - 1.0).abs() < 0.2, "{}", omp.rmse_delay_cells);
    assert!((omp.rmse_doppler_cells / floor - 1.0).abs() < 0.2, "{}", omp.rmse_doppler_cells);
}

#[test]
fn nomp_rmse_does_not_grow_with_snr() {
    let cfg = ExperimentConfig { detectors: vec![DetectorKind::Nomp], ..ExperimentConfig::for_scenario(Scenario::RmseVsSnr) };
    let report = run_experiment(Scenario::RmseVsSnr, &cfg, 200, SEED).unwrap();
    let series = report.series("nomp");
    assert_eq!(series.len(), 7);
    for w in series.windows(2) {
        assert!(w[1].rmse_range_m <= 1.1 * w[0].rmse_range_m, "{} dB: {} > {}", w[1].axis_value, w[1].rmse_range_m, w[0].rmse_range_m);
        assert!(w[1].rmse_velocity_mps <= 1.1 * w[0].rmse_velocity_mps);
    }
    for p in &series {
        assert!(p.crb_range_m > 0.0 && p.crb_velocity_mps > 0.0);
    }
    // The bound falls 10 dB per decade of SNR: a factor √10 in RMSE over 10 dB.
    let (lo, hi) = (report.point(10.0, "nomp").unwrap(), report.point(20.0, "nomp").unwrap());
    assert!((lo.crb_range_m / hi.crb_range_m - 10f64.sqrt()).abs() < 1e-9);
}

#[test]
fn oracle_detector_has_zero_error() {
    let cfg = ExperimentConfig {
        detectors: vec![DetectorKind::Oracle],
        sweep: vec![0.0, 30.0],
        ..ExperimentConfig::for_scenario(Scenario::RmseVsSnr)
    };
    let report = run_experiment(Scenario::RmseVsSnr, &cfg, 20, SEED).unwrap();
    for p in report.series("oracle") {
        assert_eq!(p.pod, 1.0);
        assert_eq!(p.rmse_range_m, 0.0);
        assert_eq!(p.rmse_velocity_mps, 0.0);
    }
}

#[test]
fn equal_power_targets_are_easy_for_everyone() {
    let cfg = ExperimentConfig { sweep: vec![0.0], snr_db: 30.0, ..ExperimentConfig::for_scenario(Scenario::PodVsSwpr) };
    let report = run_experiment(Scenario::PodVsSwpr, &cfg, 50, SEED).unwrap();
    for det in ["nomp", "omp", "fft2d"] {
        let p = report.point(0.0, det).unwrap();
        assert!(p.pod >= 0.95, "{det}: {}", p.pod);
    }
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    let mut cfg = ExperimentConfig { sweep: vec![0.0, 15.0], ..ExperimentConfig::for_scenario(Scenario::PodVsSwpr) };
    cfg.threads = 1;
    let a = run_experiment(Scenario::PodVsSwpr, &cfg, 16, SEED).unwrap();
    cfg.threads = 3;
    let mut b = run_experiment(Scenario::PodVsSwpr, &cfg, 16, SEED).unwrap();
    b.config.threads = 1;
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    let mut csv = Vec::new();
    a.write_csv(&mut csv).unwrap();
    assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 1 + 2 * 3);
}
