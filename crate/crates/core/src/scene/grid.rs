use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// OFDM frame dimensions and the physical constants needed to map
/// grid-domain delay/Doppler onto range and velocity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub n_subcarriers: usize,
    pub n_symbols: usize,
    /// Δf in Hz.
    pub subcarrier_spacing: f64,
    /// T_o in seconds, cyclic prefix included.
    pub symbol_duration: f64,
    pub carrier_freq: f64,
    pub wavelength: f64,
    pub light_speed: f64,
}

impl GridConfig {
    pub fn new(
        n_subcarriers: usize,
        n_symbols: usize,
        subcarrier_spacing: f64,
        symbol_duration: f64,
        carrier_freq: f64,
    ) -> Result<Self> {
        Self::with_light_speed(
            n_subcarriers,
            n_symbols,
            subcarrier_spacing,
            symbol_duration,
            carrier_freq,
            SPEED_OF_LIGHT,
        )
    }

    pub fn with_light_speed(
        n_subcarriers: usize,
        n_symbols: usize,
        subcarrier_spacing: f64,
        symbol_duration: f64,
        carrier_freq: f64,
        light_speed: f64,
    ) -> Result<Self> {
        let cfg = GridConfig {
            n_subcarriers,
            n_symbols,
            subcarrier_spacing,
            symbol_duration,
            carrier_freq,
            wavelength: light_speed / carrier_freq,
            light_speed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// 1560 x 280 grid at 30 kHz and 5.9 GHz. One frame of 280 symbols
    /// lasts 10 ms, so T_o = 1/28 ms.
    pub fn sidelink_full_scale() -> Self {
        Self::new(1560, 280, 30e3, 1.0 / 28e3, 5.9e9).expect("valid preset")
    }

    /// 64 x 64 desk-scale grid with the same numerology as the full-scale preset.
    pub fn desk_scale() -> Self {
        Self::new(64, 64, 30e3, 1.0 / 28e3, 5.9e9).expect("valid preset")
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_subcarriers < 2 || self.n_symbols < 2 {
            return Err(Error::invalid(format!(
                "grid must be at least 2x2, got {}x{}",
                self.n_subcarriers, self.n_symbols
            )));
        }
        let finite = [
            self.subcarrier_spacing,
            self.symbol_duration,
            self.carrier_freq,
            self.wavelength,
            self.light_speed,
        ]
        .iter()
        .all(|v| v.is_finite() && *v > 0.0);
        if !finite {
            return Err(Error::invalid("grid physical parameters must be finite and positive"));
        }
        // Allow for rounding when T_o is given as exactly 1/Δf.
        if self.symbol_duration * self.subcarrier_spacing < 1.0 - 1e-12 {
            return Err(Error::invalid(format!(
                "symbol duration {} s is shorter than 1/Δf = {} s",
                self.symbol_duration,
                1.0 / self.subcarrier_spacing
            )));
        }
        let rel = (self.wavelength * self.carrier_freq - self.light_speed).abs() / self.light_speed;
        if rel > 1e-12 {
            return Err(Error::invalid("wavelength * carrier_freq must equal light_speed"));
        }
        Ok(())
    }

    pub fn n_cells(&self) -> usize {
        self.n_subcarriers * self.n_symbols
    }

    /// Delay resolution 1/(NΔf).
    pub fn delay_cell(&self) -> f64 {
        1.0 / (self.n_subcarriers as f64 * self.subcarrier_spacing)
    }

    /// Doppler resolution 1/(M T_o).
    pub fn doppler_cell(&self) -> f64 {
        1.0 / (self.n_symbols as f64 * self.symbol_duration)
    }

    /// Unambiguous delay span 1/Δf.
    pub fn delay_span(&self) -> f64 {
        1.0 / self.subcarrier_spacing
    }

    /// Unambiguous Doppler span 1/T_o, centred on zero.
    pub fn doppler_span(&self) -> f64 {
        1.0 / self.symbol_duration
    }

    /// Reduces a delay into `[0, 1/Δf)`.
    pub fn wrap_delay(&self, delay: f64) -> f64 {
        let span = self.delay_span();
        let w = delay.rem_euclid(span);
        if w >= span {
            0.0
        } else {
            w
        }
    }

    /// Reduces a Doppler shift into `[-1/(2T_o), 1/(2T_o))`.
    pub fn wrap_doppler(&self, doppler: f64) -> f64 {
        let span = self.doppler_span();
        let w = (doppler + 0.5 * span).rem_euclid(span) - 0.5 * span;
        if w >= 0.5 * span {
            -0.5 * span
        } else {
            w
        }
    }

    /// Shortest signed delay difference `a - b` on the delay circle.
    pub fn delay_diff(&self, a: f64, b: f64) -> f64 {
        let span = self.delay_span();
        let d = (a - b).rem_euclid(span);
        if d >= 0.5 * span {
            d - span
        } else {
            d
        }
    }

    /// Shortest signed Doppler difference `a - b` on the Doppler circle.
    pub fn doppler_diff(&self, a: f64, b: f64) -> f64 {
        let span = self.doppler_span();
        let d = (a - b).rem_euclid(span);
        if d >= 0.5 * span {
            d - span
        } else {
            d
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_grids() {
        assert!(GridConfig::new(1, 8, 30e3, 1.0 / 28e3, 5.9e9).is_err());
        assert!(GridConfig::new(8, 8, 0.0, 1.0 / 28e3, 5.9e9).is_err());
        assert!(GridConfig::new(8, 8, 30e3, 1e-6, 5.9e9).is_err());
        assert!(GridConfig::new(8, 8, 30e3, 1.0 / 30e3, 5.9e9).is_ok());
    }

    #[test]
    fn wavelength_consistent() {
        let g = GridConfig::desk_scale();
        assert!((g.wavelength * g.carrier_freq - g.light_speed).abs() / g.light_speed < 1e-12);
    }

    #[test]
    fn wrapping_stays_in_span() {
        let g = GridConfig::desk_scale();
        for k in -5..5 {
            let d = g.wrap_delay(0.3 * g.delay_span() + k as f64 * g.delay_span());
            assert!((d - 0.3 * g.delay_span()).abs() < 1e-15);
            let a = g.wrap_doppler(0.49 * g.doppler_span() + k as f64 * g.doppler_span());
            assert!(a >= -0.5 * g.doppler_span() && a < 0.5 * g.doppler_span());
        }
        assert!(g.delay_diff(0.01 * g.delay_span(), 0.99 * g.delay_span()) > 0.0);
    }
}
