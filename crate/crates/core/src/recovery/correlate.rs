use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::cfar::noise_floor_estimate;
use super::dictionary::{ind2sub, DictionarySpec};
use crate::scene::{GridConfig, ResourceSet};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationMode {
    /// Scatter into a zero-padded grid, IFFT over subcarriers, FFT over symbols.
    #[default]
    Fft,
    /// Explicit Ā^H r, one inner product per dictionary column.
    Direct,
}

/// c = Ā^H r laid out column-major: entry `(p, q)` at `p + q·n_delay`.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationMap {
    pub n_delay: usize,
    pub n_doppler: usize,
    pub values: Vec<Complex64>,
}

impl CorrelationMap {
    /// Linear index and value of max |c|², ties to the smallest index.
    pub fn argmax(&self) -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for (j, v) in self.values.iter().enumerate() {
            let p = v.norm_sqr();
            if p > best.1 {
                best = (j, p);
            }
        }
        best
    }

    pub fn at(&self, p: usize, q: usize) -> Complex64 {
        self.values[p + q * self.n_delay]
    }
}

/// Reusable correlation workspace for one (grid, Ω_s, dictionary) triple.
pub struct Correlator<'a> {
    rs: &'a ResourceSet,
    dict: &'a DictionarySpec,
    mode: CorrelationMode,
    engine: Engine,
}

enum Engine {
    Fft {
        ifft_delay: Arc<dyn Fft<f64>>,
        fft_doppler: Arc<dyn Fft<f64>>,
        grid: Vec<Complex64>,
        row: Vec<Complex64>,
        scratch: Vec<Complex64>,
        used_symbols: Vec<usize>,
    },
    Direct {
        // e^{+j2πnΔfτ̄_p} at n*P + p
        delay_table: Vec<Complex64>,
        // e^{-j2πmT_oᾱ_q} at m*Q + q
        doppler_table: Vec<Complex64>,
    },
}

impl<'a> Correlator<'a> {
    pub fn new(
        config: &'a GridConfig,
        rs: &'a ResourceSet,
        dict: &'a DictionarySpec,
        mode: CorrelationMode,
    ) -> Self {
        assert!(rs.fits(config), "resource set does not match grid");
        let engine = match mode {
            CorrelationMode::Fft => {
                let mut planner = FftPlanner::new();
                let ifft_delay = planner.plan_fft_inverse(dict.fft_delay_len);
                let fft_doppler = planner.plan_fft_forward(dict.fft_doppler_len);
                let scratch_len = ifft_delay
                    .get_inplace_scratch_len()
                    .max(fft_doppler.get_inplace_scratch_len());
                let mut used = vec![false; config.n_symbols];
                for &(_, m) in rs.indices() {
                    used[m] = true;
                }
                Engine::Fft {
                    ifft_delay,
                    fft_doppler,
                    grid: vec![Complex64::new(0.0, 0.0); dict.fft_delay_len * config.n_symbols],
                    row: vec![Complex64::new(0.0, 0.0); dict.fft_doppler_len],
                    scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
                    used_symbols: (0..config.n_symbols).filter(|m| used[*m]).collect(),
                }
            }
            CorrelationMode::Direct => {
                let (np, nq) = (dict.n_delay(), dict.n_doppler());
                let mut delay_table = Vec::with_capacity(config.n_subcarriers * np);
                for n in 0..config.n_subcarriers {
                    for &t in &dict.delay_points {
                        let ph = 2.0 * PI * n as f64 * config.subcarrier_spacing * t;
                        delay_table.push(Complex64::from_polar(1.0, ph));
                    }
                }
                let mut doppler_table = Vec::with_capacity(config.n_symbols * nq);
                for m in 0..config.n_symbols {
                    for &a in &dict.doppler_points {
                        let ph = -2.0 * PI * m as f64 * config.symbol_duration * a;
                        doppler_table.push(Complex64::from_polar(1.0, ph));
                    }
                }
                Engine::Direct { delay_table, doppler_table }
            }
        };
        Correlator { rs, dict, mode, engine }
    }

    pub fn mode(&self) -> CorrelationMode {
        self.mode
    }

    pub fn dictionary(&self) -> &DictionarySpec {
        self.dict
    }

    pub fn correlate(&mut self, residual: &[Complex64]) -> CorrelationMap {
        assert_eq!(residual.len(), self.rs.len(), "residual does not match resource set");
        let (np, nq) = (self.dict.n_delay(), self.dict.n_doppler());
        let mut out = vec![Complex64::new(0.0, 0.0); np * nq];
        match &mut self.engine {
            Engine::Fft { ifft_delay, fft_doppler, grid, row, scratch, used_symbols } => {
                let gn = self.dict.fft_delay_len;
                grid.fill(Complex64::new(0.0, 0.0));
                for (&(n, m), r) in self.rs.indices().iter().zip(residual) {
                    grid[n + m * gn] = *r;
                }
                for &m in used_symbols.iter() {
                    ifft_delay.process_with_scratch(&mut grid[m * gn..(m + 1) * gn], scratch);
                }
                for (p, &bin) in self.dict.delay_bins.iter().enumerate() {
                    row.fill(Complex64::new(0.0, 0.0));
                    for &m in used_symbols.iter() {
                        row[m] = grid[bin + m * gn];
                    }
                    fft_doppler.process_with_scratch(row, scratch);
                    for (q, &dbin) in self.dict.doppler_bins.iter().enumerate() {
                        out[p + q * np] = row[dbin];
                    }
                }
            }
            Engine::Direct { delay_table, doppler_table } => {
                for q in 0..nq {
                    let col = &mut out[q * np..(q + 1) * np];
                    for (&(n, m), r) in self.rs.indices().iter().zip(residual) {
                        let w = r * doppler_table[m * nq + q];
                        let dt = &delay_table[n * np..(n + 1) * np];
                        for (c, e) in col.iter_mut().zip(dt) {
                            *c += w * e;
                        }
                    }
                }
            }
        }
        CorrelationMap { n_delay: np, n_doppler: nq, values: out }
    }

    /// Grid search step: argmax |c|², its grid point and the single-atom
    /// gain β̂ = a^H r / ‖a‖².
    ///
    /// `peak_metric` is max|c|² / (σ̂²·‖a‖²) with σ̂² the median-based noise
    /// estimate of `residual`, never below `noise_floor`.
    pub fn coarse_detect(&mut self, residual: &[Complex64], noise_floor: f64) -> CoarseEstimate {
        let map = self.correlate(residual);
        let (linear, power) = map.argmax();
        let (p, q) = ind2sub(map.n_delay, linear);
        let norm = self.rs.len() as f64;
        let sigma2 = noise_floor_estimate(residual).max(noise_floor);
        let peak_metric = if power > 0.0 { power / (sigma2 * norm) } else { 0.0 };
        CoarseEstimate {
            delay: self.dict.delay_points[p],
            doppler: self.dict.doppler_points[q],
            gain: map.values[linear] / norm,
            peak_metric,
            peak_power: power,
            linear_index: linear,
            noise_estimate: sigma2,
        }
    }

}

/// Output of the grid search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoarseEstimate {
    pub delay: f64,
    pub doppler: f64,
    pub gain: Complex64,
    pub peak_metric: f64,
    pub peak_power: f64,
    pub linear_index: usize,
    pub noise_estimate: f64,
}

/// One-off c = Ā^H r.
pub fn correlate_residual(
    residual: &[Complex64],
    config: &GridConfig,
    rs: &ResourceSet,
    dict: &DictionarySpec,
    mode: CorrelationMode,
) -> CorrelationMap {
    Correlator::new(config, rs, dict, mode).correlate(residual)
}

/// One-off grid search with no noise floor.
pub fn coarse_detect(
    residual: &[Complex64],
    config: &GridConfig,
    rs: &ResourceSet,
    dict: &DictionarySpec,
) -> CoarseEstimate {
    Correlator::new(config, rs, dict, CorrelationMode::Fft).coarse_detect(residual, 0.0)
}
