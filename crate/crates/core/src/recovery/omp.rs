//! Plain OMP over the oversampled grid, kept as the on-grid reference.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::correlate::Correlator;
use super::detection::{Detection, DetectorConfig, DetectorOutput, Provenance};
use super::dictionary::DictionarySpec;
use super::lsq::{ls_gains, residual_after};
use super::nomp::{check_inputs, noise_floor};
use crate::scene::{GridConfig, ResourceSet};
use crate::Result;

/// When OMP stops adding atoms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OmpStop {
    /// Exactly this many iterations.
    KKnown(usize),
    /// Same CFAR test as NOMP.
    Cfar,
}

/// Greedy on-grid recovery with a least-squares re-fit over the support
/// after every pick.
pub fn omp_detect(
    measurement: &[Complex64],
    rs: &ResourceSet,
    config: &GridConfig,
    det: &DetectorConfig,
    stop: OmpStop,
) -> Result<DetectorOutput> {
    check_inputs(measurement, rs, config, det)?;
    let dict = DictionarySpec::new(config, det.oversampling)?;
    let mut corr = Correlator::new(config, rs, &dict, det.correlation);
    let threshold = det.stopping_threshold(rs.len(), dict.len())?;
    let floor = noise_floor(measurement, det);
    let limit = match stop {
        OmpStop::KKnown(k) => k.min(det.max_detections),
        OmpStop::Cfar => det.max_detections,
    };

    let mut out = DetectorOutput { threshold, ..Default::default() };
    let mut dets: Vec<Detection> = Vec::new();
    let mut residual = measurement.to_vec();
    out.residual_trace.push(residual.iter().map(|v| v.norm_sqr()).sum());

    loop {
        if matches!(stop, OmpStop::KKnown(_)) && dets.len() >= limit {
            break;
        }
        let coarse = corr.coarse_detect(&residual, floor);
        out.peak_metrics.push(coarse.peak_metric);
        if stop == OmpStop::Cfar && coarse.peak_metric <= threshold {
            break;
        }
        if dets.len() >= limit {
            out.truncated = true;
            break;
        }
        dets.push(Detection::new(coarse.delay, coarse.doppler, coarse.gain, Provenance::Coarse));
        let ls = ls_gains(&dets, measurement, config, rs);
        out.rank_deficient |= ls.rank_deficient;
        for (d, b) in dets.iter_mut().zip(ls.gains) {
            d.gain = b;
        }
        residual = residual_after(&dets, measurement, config, rs);
        out.residual_trace.push(residual.iter().map(|v| v.norm_sqr()).sum());
        out.iterations += 1;
    }
    if let OmpStop::KKnown(k) = stop {
        out.truncated = k > limit;
    }
    out.detections = dets;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::atom;

    #[test]
    fn on_grid_exact() {
        let g = GridConfig::new(16, 16, 30e3, 1.0 / 28e3, 5.9e9).unwrap();
        let rs = ResourceSet::full(16, 16);
        let beta = Complex64::new(-0.3, 1.1);
        let h = atom(&g, &rs, 5.0 * g.delay_cell(), 3.0 * g.doppler_cell()).scaled(beta);
        let det = DetectorConfig { oversampling: 1, ..Default::default() };
        let out = omp_detect(h.values(), &rs, &g, &det, OmpStop::KKnown(1)).unwrap();
        assert_eq!(out.detections.len(), 1);
        assert!((out.detections[0].gain - beta).norm() < 1e-9);
        assert_eq!(out.detections[0].provenance, Provenance::Coarse);
    }
}
