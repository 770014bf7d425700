//! Library outputs checked against values computed here from first
//! principles, plus a handful of published reference numbers.

use std::f64::consts::PI;

use isac_nomp::baseline::periodogram;
use isac_nomp::metrics::{crb, CrbParams};
use isac_nomp::pipeline::{background_subtract, BackgroundState, ChannelRecording, RecordingMeta};
use isac_nomp::recovery::{
    cfar_threshold, concentrated_gain, local_objective, nomp_detect, noise_floor_estimate, DetectorConfig,
    DictionarySpec,
};
use isac_nomp::scene::{
    delay_doppler_to_range_velocity, select_resources, synthesize_channel, GridConfig, ResourceMode, ResourceSet,
    Scene, SynthesisPath, TargetTruth,
};
use isac_nomp::Complex64;

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs().max(f64::MIN_POSITIVE)
}

/// e^{-j2πnΔfτ}·e^{j2πmT_oα}, evaluated term by term.
fn oracle_atom(g: &GridConfig, rs: &ResourceSet, delay: f64, doppler: f64) -> Vec<Complex64> {
    rs.indices()
        .iter()
        .map(|&(n, m)| {
            let phase = -2.0 * PI * n as f64 * g.subcarrier_spacing * delay + 2.0 * PI * m as f64 * g.symbol_duration * doppler;
            Complex64::new(phase.cos(), phase.sin())
        })
        .collect()
}

#[test]
fn sidelink_occupancy_and_threshold() {
    let g = GridConfig::sidelink_full_scale();
    assert_eq!((g.n_subcarriers, g.n_symbols), (1560, 280));
    let rs = select_resources(&g, ResourceMode::Elementwise { occupancy: 0.01 }, 1).unwrap();
    assert_eq!(rs.len(), 4368);

    let oracle = (4368f64).ln() - (-(1.0f64 - 0.01).ln()).ln();
    let delta = cfar_threshold(rs.len(), 0.01).unwrap();
    assert!((delta - oracle).abs() < 1e-12);
    assert!((delta - 12.982).abs() < 5e-4, "{delta}");
}

#[test]
fn sidelink_resolution_cells() {
    let g = GridConfig::sidelink_full_scale();
    // c/(NΔf) of bi-static path and λ/(2·M·T_o) of radial speed.
    let range_cell = g.light_speed / (1560.0 * 30e3);
    let speed_cell = g.light_speed / 5.9e9 / (2.0 * 280.0 / 28e3);
    let (r, v) = delay_doppler_to_range_velocity(&g, g.delay_cell(), g.doppler_cell());
    assert!(close(r, range_cell, 1e-12) && close(v, speed_cell, 1e-12));
    assert!((r - 6.41).abs() < 0.01, "{r}");
    assert!((v - 2.54).abs() < 0.01, "{v}");
}

#[test]
fn crb_matches_closed_form() {
    let g = GridConfig::new(64, 32, 30e3, 1.0 / 28e3, 5.9e9).unwrap();
    let rs = select_resources(&g, ResourceMode::Structured { n_sub_used: 16, n_sym_used: 8 }, 3).unwrap();
    let snr = 10f64.powf(1.7);
    let p = CrbParams::from_resources(&g, &rs, snr);
    let b = crb(&p).unwrap();

    let c2 = g.light_speed.powi(2);
    let (n, m) = (16.0f64, 8.0f64);
    let mn = 64.0 * 32.0;
    let range = 3.0 * c2 / (snr * 8.0 * PI * PI * mn * (n * n - 1.0) * 30e3f64.powi(2));
    let vel = 3.0 * c2 / (snr * 8.0 * PI * PI * 5.9e9f64.powi(2) * mn * (m * m - 1.0) * (1.0 / 28e3f64).powi(2));
    assert!(close(b.range_var, range, 1e-12));
    assert!(close(b.velocity_var, vel, 1e-12));

    let bi = crb(&p.bistatic()).unwrap();
    assert!(close(bi.range_var, 4.0 * range, 1e-12));
    let half = crb(&CrbParams { snr: snr / 2.0, ..p }).unwrap();
    assert!(close(half.range_var, 2.0 * range, 1e-12));
}

#[test]
fn on_grid_periodogram_peak() {
    let g = GridConfig::new(16, 12, 30e3, 1.0 / 28e3, 5.9e9).unwrap();
    let rs = ResourceSet::full(16, 12);
    let beta = Complex64::new(0.6, -0.3);
    let t = TargetTruth::new(5.0 * g.delay_cell(), -3.0 * g.doppler_cell(), beta);
    let h = synthesize_channel(&Scene::noiseless(vec![t]), &rs, &g, 0, SynthesisPath::Direct).unwrap();
    let map = periodogram(h.values(), &rs, &g, 1).unwrap();
    let peak = map.magnitudes.iter().copied().fold(0.0, f64::max);
    let oracle = beta.norm_sqr() * (16.0f64 * 12.0).powi(2);
    assert!(close(peak, oracle, 1e-10), "{peak} vs {oracle}");
    let dict = DictionarySpec::new(&g, 1).unwrap();
    let hot = map.magnitudes.iter().filter(|v| **v > 1e-12 * oracle).count();
    assert_eq!(hot, 1, "an on-grid tone lands in exactly one bin of {}", dict.len());
}

#[test]
fn channel_synthesis_is_a_sum_of_atoms() {
    let g = GridConfig::new(24, 20, 30e3, 1.0 / 28e3, 5.9e9).unwrap();
    let rs = select_resources(&g, ResourceMode::Elementwise { occupancy: 0.4 }, 8).unwrap();
    let targets = vec![
        TargetTruth::new(3.3 * g.delay_cell(), 2.7 * g.doppler_cell(), Complex64::new(1.0, 0.5)),
        TargetTruth::new(11.9 * g.delay_cell(), -6.1 * g.doppler_cell(), Complex64::new(-0.2, 0.7)),
    ];
    let h = synthesize_channel(&Scene::noiseless(targets.clone()), &rs, &g, 0, SynthesisPath::Direct).unwrap();
    let mut oracle = vec![Complex64::new(0.0, 0.0); rs.len()];
    for t in &targets {
        for (o, a) in oracle.iter_mut().zip(oracle_atom(&g, &rs, t.delay, t.doppler)) {
            *o += t.gain * a;
        }
    }
    for (x, y) in h.values().iter().zip(&oracle) {
        assert!((x - y).norm() < 1e-12);
    }

    let full = synthesize_channel(&Scene::noiseless(targets), &rs, &g, 0, SynthesisPath::FullTxRx).unwrap();
    for (x, y) in full.values().iter().zip(&oracle) {
        assert!((x - y).norm() < 1e-9);
    }
}

#[test]
fn synthesized_noise_has_requested_power() {
    let g = GridConfig::new(128, 64, 30e3, 1.0 / 28e3, 5.9e9).unwrap();
    let rs = ResourceSet::full(128, 64);
    let sigma2 = 0.37;
    let h = synthesize_channel(&Scene::new(vec![], sigma2).unwrap(), &rs, &g, 21, SynthesisPath::Direct).unwrap();
    let mean = h.energy() / rs.len() as f64;
    // 8192 Exp(σ²) draws: the sample mean is within 4 standard errors.
    assert!((mean - sigma2).abs() < 4.0 * sigma2 / (rs.len() as f64).sqrt(), "{mean}");
    let median = noise_floor_estimate(h.values());
    assert!((median - sigma2).abs() < 0.05 * sigma2, "{median}");
}

#[test]
fn concentrated_gain_is_the_best_gain() {
    let g = GridConfig::new(20, 20, 30e3, 1.0 / 28e3, 5.9e9).unwrap();
    let rs = select_resources(&g, ResourceMode::Elementwise { occupancy: 0.5 }, 2).unwrap();
    let h = synthesize_channel(&Scene::new(vec![], 1.0).unwrap(), &rs, &g, 5, SynthesisPath::Direct).unwrap();
    let (d, a) = (4.4 * g.delay_cell(), 1.3 * g.doppler_cell());
    let atom = oracle_atom(&g, &rs, d, a);
    let c: Complex64 = atom.iter().zip(h.values()).map(|(x, r)| x.conj() * r).sum();
    let best_beta = c / rs.len() as f64;
    let best = c.norm_sqr() / rs.len() as f64;

    let (value, beta) = concentrated_gain(d, a, h.values(), &g, &rs);
    assert!(close(value, best, 1e-12) && (beta - best_beta).norm() < 1e-12);
    assert!(close(local_objective(d, a, beta, h.values(), &g, &rs), best, 1e-10));
    for k in 0..16 {
        let nudge = Complex64::from_polar(0.05, k as f64 * PI / 8.0);
        assert!(local_objective(d, a, beta + nudge, h.values(), &g, &rs) < best);
    }
}

#[test]
fn background_filter_steady_state_gain() {
    let g = GridConfig::desk_scale();
    let lambda = 0.9;
    for alpha in [0.0, 150.0, 600.0, -2500.0, 9000.0] {
        let phi = 2.0 * PI * alpha * g.symbol_duration;
        let m_total = 400;
        let data: Vec<Complex64> = (0..m_total).map(|m| Complex64::from_polar(1.0, phi * m as f64)).collect();
        let rec = ChannelRecording::new(1, m_total, data.clone(), RecordingMeta::default()).unwrap();
        let (out, _) = background_subtract(&rec, lambda, &BackgroundState::new(1, lambda).unwrap()).unwrap();
        let z = Complex64::from_polar(1.0, -phi);
        let oracle = (Complex64::new(1.0, 0.0) - z) / (Complex64::new(1.0, 0.0) - lambda * z);
        let last = m_total - 1;
        let gain = out.data()[last] / data[last];
        assert!((gain - oracle).norm() < 1e-12, "alpha {alpha}: {gain} vs {oracle}");
    }
}

#[test]
fn nomp_recovers_noiseless_off_grid_pair() {
    let g = GridConfig::new(48, 40, 30e3, 1.0 / 28e3, 5.9e9).unwrap();
    let rs = select_resources(&g, ResourceMode::Elementwise { occupancy: 0.3 }, 17).unwrap();
    let targets = vec![
        TargetTruth::from_db(7.31 * g.delay_cell(), 4.62 * g.doppler_cell(), 0.0, 0.4),
        TargetTruth::from_db(29.85 * g.delay_cell(), -12.18 * g.doppler_cell(), -3.0, 2.1),
    ];
    let h = synthesize_channel(&Scene::noiseless(targets.clone()), &rs, &g, 0, SynthesisPath::Direct).unwrap();
    let out = nomp_detect(h.values(), &rs, &g, &DetectorConfig::default()).unwrap();
    assert_eq!(out.detections.len(), 2);
    for t in &targets {
        let d = out
            .detections
            .iter()
            .min_by(|a, b| {
                let da = g.delay_diff(a.delay, t.delay).abs();
                let db = g.delay_diff(b.delay, t.delay).abs();
                da.total_cmp(&db)
            })
            .unwrap();
        assert!(g.delay_diff(d.delay, t.delay).abs() / g.delay_cell() < 1e-6);
        assert!(g.doppler_diff(d.doppler, t.doppler).abs() / g.doppler_cell() < 1e-6);
        assert!((d.gain - t.gain).norm() / t.gain.norm() < 1e-6);
    }
}
