use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::GridConfig;

/// Discretised delay/Doppler grids of the dictionary Ā.
///
/// Delay points are `p/(γNΔf)` over `[0, 1/Δf)`; Doppler points are
/// `(q - ⌊γM/2⌋)/(γM·T_o)` over `[-1/(2T_o), 1/(2T_o))`. Optional physical
/// caps drop points beyond `d_max/c` and `2 v_max/λ`. Each point remembers
/// the FFT bin it comes from so the correlation can be read straight off a
/// zero-padded 2D transform.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DictionarySpec {
    pub oversampling: usize,
    pub delay_points: Vec<f64>,
    pub doppler_points: Vec<f64>,
    pub(crate) delay_bins: Vec<usize>,
    pub(crate) doppler_bins: Vec<usize>,
    pub fft_delay_len: usize,
    pub fft_doppler_len: usize,
}

impl DictionarySpec {
    pub fn new(config: &GridConfig, oversampling: usize) -> Result<Self> {
        Self::with_caps(config, oversampling, None, None)
    }

    /// `max_range` in meters of bi-static path, `max_velocity` in m/s.
    pub fn with_caps(
        config: &GridConfig,
        oversampling: usize,
        max_range: Option<f64>,
        max_velocity: Option<f64>,
    ) -> Result<Self> {
        if oversampling == 0 {
            return Err(Error::invalid("oversampling must be >= 1"));
        }
        let gn = oversampling * config.n_subcarriers;
        let gm = oversampling * config.n_symbols;
        let delay_step = 1.0 / (gn as f64 * config.subcarrier_spacing);
        let doppler_step = 1.0 / (gm as f64 * config.symbol_duration);
        let max_delay = max_range.map(|d| d / config.light_speed);
        let max_doppler = max_velocity.map(|v| 2.0 * v / config.wavelength);

        let (delay_bins, delay_points): (Vec<usize>, Vec<f64>) = (0..gn)
            .map(|p| (p, p as f64 * delay_step))
            .filter(|(_, t)| max_delay.is_none_or(|d| *t <= d * (1.0 + 1e-12)))
            .unzip();
        let half = gm / 2;
        let (doppler_bins, doppler_points): (Vec<usize>, Vec<f64>) = (0..gm)
            .map(|q| {
                let k = q as i64 - half as i64;
                (k.rem_euclid(gm as i64) as usize, k as f64 * doppler_step)
            })
            .filter(|(_, a)| max_doppler.is_none_or(|d| a.abs() <= d * (1.0 + 1e-12)))
            .unzip();
        if delay_points.is_empty() || doppler_points.is_empty() {
            return Err(Error::invalid("dictionary caps remove every grid point"));
        }
        Ok(DictionarySpec {
            oversampling,
            delay_points,
            doppler_points,
            delay_bins,
            doppler_bins,
            fft_delay_len: gn,
            fft_doppler_len: gm,
        })
    }

    pub fn n_delay(&self) -> usize {
        self.delay_points.len()
    }

    pub fn n_doppler(&self) -> usize {
        self.doppler_points.len()
    }

    pub fn len(&self) -> usize {
        self.n_delay() * self.n_doppler()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Grid point `(τ̄_p, ᾱ_q)` of a column-major linear index.
    pub fn point(&self, linear: usize) -> (f64, f64) {
        let (p, q) = ind2sub(self.n_delay(), linear);
        (self.delay_points[p], self.doppler_points[q])
    }
}

/// 0-based linear index `j = p + q·rows` to `(p, q)`.
pub fn ind2sub(rows: usize, linear: usize) -> (usize, usize) {
    (linear % rows, linear / rows)
}

pub fn sub2ind(rows: usize, p: usize, q: usize) -> usize {
    p + q * rows
}

/// 1-based bookkeeping form: `p = Π - (⌈Π/N⌉ - 1)N`, `q = ⌈Π/N⌉`.
pub fn ind2sub_one_based(rows: usize, linear: usize) -> (usize, usize) {
    assert!(linear >= 1, "1-based index must be >= 1");
    let q = linear.div_ceil(rows);
    (linear - (q - 1) * rows, q)
}

pub fn sub2ind_one_based(rows: usize, p: usize, q: usize) -> usize {
    p + (q - 1) * rows
}
