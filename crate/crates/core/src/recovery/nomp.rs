//! Newtonized OMP: grid search, local Newton refinement, joint refinement,
//! least-squares gains, repeated until the CFAR test fails.

use num_complex::Complex64;

use super::correlate::Correlator;
use super::detection::{Detection, DetectorConfig, DetectorOutput, Provenance};
use super::dictionary::DictionarySpec;
use super::lsq::{ls_gains, residual_after};
use super::refine::{refine_global, refine_local};
use crate::error::{Error, Result};
use crate::scene::{GridConfig, ResourceSet};

/// Detections closer than this (in cells, both axes) are the same target.
pub(crate) const MERGE_CELLS: f64 = 1e-3;

pub(crate) fn check_inputs(
    measurement: &[Complex64],
    rs: &ResourceSet,
    config: &GridConfig,
    det: &DetectorConfig,
) -> Result<()> {
    config.validate()?;
    if !rs.fits(config) {
        return Err(Error::invalid(format!(
            "resource set is {}x{} but the grid is {}x{}",
            rs.n_subcarriers(), rs.n_symbols(), config.n_subcarriers, config.n_symbols
        )));
    }
    if measurement.len() != rs.len() {
        return Err(Error::invalid(format!(
            "measurement has {} samples but the resource set has {}",
            measurement.len(),
            rs.len()
        )));
    }
    if measurement.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Numeric("measurement contains non-finite samples".into()));
    }
    det.validate(rs.len())
}

pub(crate) fn noise_floor(measurement: &[Complex64], det: &DetectorConfig) -> f64 {
    let mean = measurement.iter().map(|v| v.norm_sqr()).sum::<f64>() / measurement.len() as f64;
    det.dynamic_range_floor * mean
}

fn energy(r: &[Complex64]) -> f64 {
    r.iter().map(|v| v.norm_sqr()).sum()
}

fn same_target(a: &Detection, b: &Detection, config: &GridConfig) -> bool {
    (config.delay_diff(a.delay, b.delay) / config.delay_cell()).abs() < MERGE_CELLS
        && (config.doppler_diff(a.doppler, b.doppler) / config.doppler_cell()).abs() < MERGE_CELLS
}

/// Joint refinement stops once no target moves by more than this.
pub(crate) const GLOBAL_TOL_CELLS: f64 = 1e-7;

fn cell_distance(a: &Detection, b: &Detection, config: &GridConfig) -> f64 {
    let dt = config.delay_diff(a.delay, b.delay) / config.delay_cell();
    let da = config.doppler_diff(a.doppler, b.doppler) / config.doppler_cell();
    dt.abs().max(da.abs())
}

/// Runs NOMP on the sparse measurement h_s.
pub fn nomp_detect(
    measurement: &[Complex64],
    rs: &ResourceSet,
    config: &GridConfig,
    det: &DetectorConfig,
) -> Result<DetectorOutput> {
    check_inputs(measurement, rs, config, det)?;
    let dict = DictionarySpec::new(config, det.oversampling)?;
    let mut corr = Correlator::new(config, rs, &dict, det.correlation);
    let threshold = det.stopping_threshold(rs.len(), dict.len())?;
    let floor = noise_floor(measurement, det);

    let mut out = DetectorOutput { threshold, ..Default::default() };
    let mut dets: Vec<Detection> = Vec::new();
    let mut residual = measurement.to_vec();
    let mut prev_energy = energy(&residual);
    out.residual_trace.push(prev_energy);

    loop {
        let coarse = corr.coarse_detect(&residual, floor);
        out.peak_metrics.push(coarse.peak_metric);
        if coarse.peak_metric <= threshold {
            break;
        }
        if dets.len() >= det.max_detections {
            out.truncated = true;
            break;
        }
        let start = Detection::new(coarse.delay, coarse.doppler, coarse.gain, Provenance::Coarse);
        let est = refine_local(&start, &residual, config, rs, det.refinement_steps, det.step_guard);

        let mut merged = false;
        if let Some(i) = dets.iter().position(|d| same_target(d, &est, config)) {
            merged = true;
            if est.gain.norm() > dets[i].gain.norm() {
                dets[i] = est;
            }
        } else {
            dets.push(est);
        }

        for _ in 0..det.global_steps {
            let g = refine_global(&dets, measurement, config, rs, det.global_mode, det.step_guard);
            out.singular_blocks += g.singular_blocks;
            out.rank_deficient |= g.rank_deficient;
            let shift = dets.iter().zip(&g.detections).map(|(a, b)| cell_distance(a, b, config)).fold(0.0, f64::max);
            dets = g.detections;
            if shift < GLOBAL_TOL_CELLS || g.energy_after >= g.energy_before {
                break;
            }
        }
        let ls = ls_gains(&dets, measurement, config, rs);
        out.rank_deficient |= ls.rank_deficient;
        for (d, b) in dets.iter_mut().zip(ls.gains) {
            d.gain = b;
        }
        residual = residual_after(&dets, measurement, config, rs);
        let e = energy(&residual);
        out.residual_trace.push(e);
        out.iterations += 1;
        // A merge that changes nothing would repeat forever.
        if merged && e >= prev_energy {
            break;
        }
        prev_energy = e;
    }
    out.detections = dets;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{atom, select_resources, synthesize_channel, ResourceMode, Scene, SynthesisPath, TargetTruth};

    #[test]
    fn noiseless_single_off_grid_target() {
        let g = GridConfig::new(32, 32, 30e3, 1.0 / 28e3, 5.9e9).unwrap();
        let rs = select_resources(&g, ResourceMode::Elementwise { occupancy: 0.3 }, 2).unwrap();
        let (t, a) = (10.4 * g.delay_cell(), -6.7 * g.doppler_cell());
        let h = atom(&g, &rs, t, a).scaled(Complex64::new(0.0, 2.0));
        let out = nomp_detect(h.values(), &rs, &g, &DetectorConfig::default()).unwrap();
        assert_eq!(out.detections.len(), 1);
        let d = out.detections[0];
        assert!((g.delay_diff(d.delay, t) / g.delay_cell()).abs() < 1e-6);
        assert!((g.doppler_diff(d.doppler, a) / g.doppler_cell()).abs() < 1e-6);
        assert_eq!(d.provenance, Provenance::GloballyRefined);
    }

    #[test]
    fn rejects_mismatched_measurement() {
        let g = GridConfig::new(8, 8, 30e3, 1.0 / 28e3, 5.9e9).unwrap();
        let rs = ResourceSet::full(8, 8);
        let det = DetectorConfig::default();
        assert!(nomp_detect(&[Complex64::new(0.0, 0.0); 3], &rs, &g, &det).is_err());
    }

    #[test]
    fn truncation_is_flagged() {
        let g = GridConfig::new(32, 32, 30e3, 1.0 / 28e3, 5.9e9).unwrap();
        let rs = ResourceSet::full(32, 32);
        let targets = (0..3)
            .map(|k| TargetTruth::from_db((4.0 + 9.0 * k as f64) * g.delay_cell(), (3.0 - 6.0 * k as f64) * g.doppler_cell(), 0.0, 0.3 * k as f64))
            .collect();
        let scene = Scene::with_snr_db(targets, 30.0).unwrap();
        let h = synthesize_channel(&scene, &rs, &g, 1, SynthesisPath::Direct).unwrap();
        let det = DetectorConfig { max_detections: 2, ..Default::default() };
        let out = nomp_detect(h.values(), &rs, &g, &det).unwrap();
        assert!(out.truncated);
        assert_eq!(out.detections.len(), 2);
    }
}
