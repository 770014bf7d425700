//! Conventional zero-filled 2D-FFT periodogram and peak picking.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::recovery::{correlate_residual, ind2sub, CorrelationMode, Detection, DictionarySpec, Provenance};
use crate::scene::{GridConfig, ResourceSet};

/// Squared-magnitude delay/Doppler map, column-major (`p + q·n_delay`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RangeDopplerMap {
    pub n_delay: usize,
    pub n_doppler: usize,
    pub magnitudes: Vec<f64>,
    /// Seconds, strictly increasing.
    pub delay_axis: Vec<f64>,
    /// Hz, strictly increasing.
    pub doppler_axis: Vec<f64>,
    /// |Ω_s| of the measurement, used to turn bin values into gains.
    pub n_resources: usize,
}

impl RangeDopplerMap {
    pub fn at(&self, p: usize, q: usize) -> f64 {
        self.magnitudes[p + q * self.n_delay]
    }

    /// Writes `delay_s,doppler_hz,magnitude` rows, delay varying fastest.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "delay_s,doppler_hz,magnitude")?;
        for (q, a) in self.doppler_axis.iter().enumerate() {
            for (p, t) in self.delay_axis.iter().enumerate() {
                writeln!(out, "{t:e},{a:e},{:e}", self.at(p, q))?;
            }
        }
        Ok(())
    }
}

/// Scatters h_s into the zero-filled N×M grid, then IDFT over subcarriers
/// and DFT over symbols, both zero-padded by `oversampling`. No window.
///
/// For a full grid and a single on-grid target the peak equals |β|²(NM)².
pub fn periodogram(
    measurement: &[Complex64],
    rs: &ResourceSet,
    config: &GridConfig,
    oversampling: usize,
) -> Result<RangeDopplerMap> {
    if measurement.len() != rs.len() || !rs.fits(config) {
        return Err(Error::invalid(format!(
            "measurement of {} samples does not match the {}-element resource set",
            measurement.len(),
            rs.len()
        )));
    }
    let dict = DictionarySpec::new(config, oversampling)?;
    let c = correlate_residual(measurement, config, rs, &dict, CorrelationMode::Fft);
    Ok(RangeDopplerMap {
        n_delay: c.n_delay,
        n_doppler: c.n_doppler,
        magnitudes: c.values.iter().map(|v| v.norm_sqr()).collect(),
        delay_axis: dict.delay_points,
        doppler_axis: dict.doppler_points,
        n_resources: rs.len(),
    })
}

/// How many peaks to take from a map.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeakSelect {
    /// The `k` largest local maxima.
    Count(usize),
    /// Every local maximum strictly above this squared magnitude.
    Threshold(f64),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PeakSet {
    /// Largest first; equal peaks by linear index.
    pub detections: Vec<Detection>,
    pub linear_indices: Vec<usize>,
    /// Fewer maxima than requested.
    pub short: bool,
}

fn is_local_max(map: &RangeDopplerMap, p: usize, q: usize) -> bool {
    let v = map.at(p, q);
    if v <= 0.0 {
        return false;
    }
    for dq in [-1i64, 0, 1] {
        for dp in [-1i64, 0, 1] {
            if dp == 0 && dq == 0 {
                continue;
            }
            let pp = (p as i64 + dp).rem_euclid(map.n_delay as i64) as usize;
            let qq = (q as i64 + dq).rem_euclid(map.n_doppler as i64) as usize;
            if map.at(pp, qq) > v {
                return false;
            }
        }
    }
    true
}

fn within_guard(map: &RangeDopplerMap, a: usize, b: usize) -> bool {
    let (pa, qa) = ind2sub(map.n_delay, a);
    let (pb, qb) = ind2sub(map.n_delay, b);
    let near = |x: usize, y: usize, n: usize| {
        let d = x.abs_diff(y);
        d.min(n - d) <= 1
    };
    near(pa, pb, map.n_delay) && near(qa, qb, map.n_doppler)
}

/// Greedy local-maximum extraction with a one-bin guard zone; gains are
/// √|c|²/|Ω_s| with zero phase since the map keeps magnitudes only.
pub fn extract_peaks(map: &RangeDopplerMap, select: PeakSelect) -> Result<PeakSet> {
    let limit = match select {
        PeakSelect::Count(0) => return Err(Error::invalid("peak count must be >= 1")),
        PeakSelect::Count(k) => k,
        PeakSelect::Threshold(t) if !(t > 0.0) => return Err(Error::invalid("peak threshold must be > 0")),
        PeakSelect::Threshold(_) => usize::MAX,
    };
    let floor = match select {
        PeakSelect::Threshold(t) => t,
        PeakSelect::Count(_) => 0.0,
    };
    let mut candidates: Vec<usize> = (0..map.magnitudes.len())
        .filter(|&j| map.magnitudes[j] > floor)
        .filter(|&j| {
            let (p, q) = ind2sub(map.n_delay, j);
            is_local_max(map, p, q)
        })
        .collect();
    candidates.sort_by(|&a, &b| map.magnitudes[b].total_cmp(&map.magnitudes[a]).then(a.cmp(&b)));

    let mut picked: Vec<usize> = Vec::new();
    for j in candidates {
        if picked.len() == limit {
            break;
        }
        if picked.iter().all(|&k| !within_guard(map, j, k)) {
            picked.push(j);
        }
    }
    let norm = map.n_resources.max(1) as f64;
    let detections = picked
        .iter()
        .map(|&j| {
            let (p, q) = ind2sub(map.n_delay, j);
            let gain = Complex64::new(map.magnitudes[j].sqrt() / norm, 0.0);
            Detection::new(map.delay_axis[p], map.doppler_axis[q], gain, Provenance::Coarse)
        })
        .collect();
    Ok(PeakSet {
        short: matches!(select, PeakSelect::Count(k) if picked.len() < k),
        detections,
        linear_indices: picked,
    })
}
