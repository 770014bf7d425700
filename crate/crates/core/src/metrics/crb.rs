use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::{GridConfig, ResourceSet};

/// Inputs of the range/velocity bounds. Every factor is a plain field so
/// alternative readings (totals instead of occupied counts, a different
/// propagation constant) can be evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrbParams {
    /// Linear per-element SNR |β|²/σ².
    pub snr: f64,
    /// n: occupied subcarriers per occupied symbol.
    pub n_sub_used: usize,
    /// m: occupied symbols.
    pub n_sym_used: usize,
    pub n_subcarriers: usize,
    pub n_symbols: usize,
    pub subcarrier_spacing: f64,
    pub symbol_duration: f64,
    pub carrier_freq: f64,
    pub light_speed: f64,
}

impl CrbParams {
    /// Counts taken from `rs`, constants from `config`.
    pub fn from_resources(config: &GridConfig, rs: &ResourceSet, snr: f64) -> Self {
        CrbParams {
            snr,
            n_sub_used: rs.subcarriers_per_symbol(),
            n_sym_used: rs.symbols_used(),
            n_subcarriers: config.n_subcarriers,
            n_symbols: config.n_symbols,
            subcarrier_spacing: config.subcarrier_spacing,
            symbol_duration: config.symbol_duration,
            carrier_freq: config.carrier_freq,
            light_speed: config.light_speed,
        }
    }

    /// The range bound as printed is for c·τ/2. Doubling c gives the bound
    /// for the bi-static path length c·τ.
    pub fn bistatic(self) -> Self {
        CrbParams { light_speed: 2.0 * self.light_speed, ..self }
    }
}

/// Variances, m² and (m/s)².
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrbBounds {
    pub range_var: f64,
    pub velocity_var: f64,
}

/// σ²_range ≥ 3c²/(SNR·8π²·M·N·(n²−1)·Δf²),
/// σ²_velocity ≥ 3c²/(SNR·8π²·f_c²·M·N·(m²−1)·T_o²).
pub fn crb(p: &CrbParams) -> Result<CrbBounds> {
    if p.n_sub_used < 2 || p.n_sym_used < 2 {
        return Err(Error::invalid(format!(
            "bounds need n >= 2 and m >= 2, got n = {}, m = {}",
            p.n_sub_used, p.n_sym_used
        )));
    }
    let positive = [p.snr, p.subcarrier_spacing, p.symbol_duration, p.carrier_freq, p.light_speed];
    if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) || p.n_subcarriers == 0 || p.n_symbols == 0 {
        return Err(Error::invalid("bound parameters must be positive and finite"));
    }
    let mn = (p.n_symbols * p.n_subcarriers) as f64;
    let c2 = p.light_speed * p.light_speed;
    let n = p.n_sub_used as f64;
    let m = p.n_sym_used as f64;
    let common = p.snr * 8.0 * PI * PI * mn;
    Ok(CrbBounds {
        range_var: 3.0 * c2 / (common * (n * n - 1.0) * p.subcarrier_spacing.powi(2)),
        velocity_var: 3.0 * c2 / (common * p.carrier_freq.powi(2) * (m * m - 1.0) * p.symbol_duration.powi(2)),
    })
}
