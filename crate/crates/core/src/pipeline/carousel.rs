//! Two metal spheres on a rotating beam, seen by a bi-static pair: an
//! analytic stand-in for a turntable Doppler emulator recording.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::recording::{ChannelRecording, RecordingMeta};
use crate::error::{Error, Result};
use crate::rng;
use crate::scene::SPEED_OF_LIGHT;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CarouselConfig {
    pub n_subcarriers: usize,
    pub subcarrier_spacing: f64,
    pub symbol_duration: f64,
    pub carrier_freq: f64,
    pub n_symbols: usize,
    /// Tip-to-tip span; the spheres sit at ± half of it from the axis.
    pub beam_length_m: f64,
    pub rpm: f64,
    pub sphere_gain_db: f64,
    /// Beam angle at symbol 0, radians.
    pub initial_angle: f64,
    /// Positions relative to the rotation axis, metres.
    pub tx_position: [f64; 2],
    pub rx_position: [f64; 2],
    /// Fixed scatterers as (bi-static range in m, gain in dB).
    pub static_reflectors: Vec<(f64, f64)>,
    /// Per-element noise power relative to one sphere, dB; `None` is noiseless.
    pub snr_db: Option<f64>,
    pub seed: u64,
}

impl Default for CarouselConfig {
    /// 3 m beam at 30 rpm seen at 5.9 GHz with a 64 µs symbol period.
    fn default() -> Self {
        CarouselConfig {
            n_subcarriers: 256,
            subcarrier_spacing: 120e3,
            symbol_duration: 64e-6,
            carrier_freq: 5.9e9,
            n_symbols: 4000,
            beam_length_m: 3.0,
            rpm: 30.0,
            sphere_gain_db: 0.0,
            initial_angle: 0.3,
            tx_position: [15.0, -1.5],
            rx_position: [15.0, 1.5],
            static_reflectors: vec![(35.0, 10.0), (52.0, 6.0)],
            snr_db: Some(15.0),
            seed: 1,
        }
    }
}

/// Bi-static delay and Doppler of one sphere at one instant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereState {
    pub delay: f64,
    pub doppler: f64,
}

impl CarouselConfig {
    fn validate(&self) -> Result<()> {
        let positive = [self.subcarrier_spacing, self.symbol_duration, self.carrier_freq, self.beam_length_m];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) || self.n_subcarriers == 0 || self.n_symbols == 0 {
            return Err(Error::invalid("carousel dimensions and numerology must be positive"));
        }
        if !self.rpm.is_finite() {
            return Err(Error::invalid("rpm must be finite"));
        }
        Ok(())
    }

    /// Both spheres at time `t` (seconds from symbol 0).
    pub fn spheres_at(&self, t: f64) -> [SphereState; 2] {
        let omega = 2.0 * PI * self.rpm / 60.0;
        let r = 0.5 * self.beam_length_m;
        let wavelength = SPEED_OF_LIGHT / self.carrier_freq;
        let state = |k: usize| {
            let theta = self.initial_angle + omega * t + k as f64 * PI;
            let s = [r * theta.cos(), r * theta.sin()];
            let vel = [-r * omega * theta.sin(), r * omega * theta.cos()];
            let mut d = 0.0;
            let mut rate = 0.0;
            for p in [self.tx_position, self.rx_position] {
                let diff = [s[0] - p[0], s[1] - p[1]];
                let len = diff[0].hypot(diff[1]);
                d += len;
                rate += (diff[0] * vel[0] + diff[1] * vel[1]) / len;
            }
            SphereState { delay: d / SPEED_OF_LIGHT, doppler: -rate / wavelength }
        };
        [state(0), state(1)]
    }

    /// Trajectory at the middle of block `b` of `block_len` symbols.
    pub fn block_truth(&self, block: usize, block_len: usize) -> [SphereState; 2] {
        let mid = (block * block_len) as f64 + 0.5 * (block_len as f64 - 1.0);
        self.spheres_at(mid * self.symbol_duration)
    }

    pub fn sphere_gain(&self) -> f64 {
        10f64.powf(self.sphere_gain_db / 20.0)
    }

    pub fn noise_power(&self) -> f64 {
        self.snr_db
            .map_or(0.0, |snr| self.sphere_gain().powi(2) / 10f64.powf(snr / 10.0))
    }
}

#[derive(Clone, Debug)]
pub struct CarouselRecording {
    pub recording: ChannelRecording,
    pub config: CarouselConfig,
}

/// H[n, m] = Σ_k g·e^{−j2π(f_c + nΔf)τ_k(t_m)} + static paths + noise, with
/// τ_k the exact bi-static path delay, so Doppler arises from the carrier
/// phase rather than a linearised model.
pub fn synthesize_carousel(config: &CarouselConfig) -> Result<CarouselRecording> {
    config.validate()?;
    let n_sub = config.n_subcarriers;
    let gain = config.sphere_gain();
    let sigma = (0.5 * config.noise_power()).sqrt();
    let mut rng = rng::from_seed(config.seed);

    let statics: Vec<(f64, f64)> = config
        .static_reflectors
        .iter()
        .map(|&(range, db)| (range / SPEED_OF_LIGHT, 10f64.powf(db / 20.0)))
        .collect();
    let mut static_col = vec![Complex64::new(0.0, 0.0); n_sub];
    for &(tau, g) in &statics {
        for (n, v) in static_col.iter_mut().enumerate() {
            let f = config.carrier_freq + n as f64 * config.subcarrier_spacing;
            *v += Complex64::from_polar(g, -2.0 * PI * f * tau);
        }
    }

    let mut data = Vec::with_capacity(n_sub * config.n_symbols);
    for m in 0..config.n_symbols {
        let spheres = config.spheres_at(m as f64 * config.symbol_duration);
        for (n, s) in static_col.iter().enumerate() {
            let f = config.carrier_freq + n as f64 * config.subcarrier_spacing;
            let mut v = *s;
            for sp in &spheres {
                v += Complex64::from_polar(gain, -2.0 * PI * f * sp.delay);
            }
            if sigma > 0.0 {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                v += Complex64::new(sigma * re, sigma * im);
            }
            data.push(v);
        }
    }
    let meta = RecordingMeta {
        subcarrier_spacing: config.subcarrier_spacing,
        symbol_duration: config.symbol_duration,
        carrier_freq: config.carrier_freq,
        start_time: 0.0,
    };
    Ok(CarouselRecording {
        recording: ChannelRecording::new(n_sub, config.n_symbols, data, meta)?,
        config: config.clone(),
    })
}
