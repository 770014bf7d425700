use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::recording::ChannelRecording;
use crate::error::{Error, Result};

/// λ_bg used when none is configured.
pub const DEFAULT_FORGETTING: f64 = 0.9;

/// Per-subcarrier running average B, carried from symbol to symbol and
/// across calls.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackgroundState {
    pub average: Vec<Complex64>,
    pub forgetting: f64,
}

impl BackgroundState {
    pub fn new(n_subcarriers: usize, forgetting: f64) -> Result<Self> {
        if !(forgetting > 0.0 && forgetting < 1.0) {
            return Err(Error::invalid(format!("forgetting factor {forgetting} outside (0, 1)")));
        }
        Ok(BackgroundState { average: vec![Complex64::new(0.0, 0.0); n_subcarriers], forgetting })
    }
}

/// Exponential-averaging background removal along symbols:
/// out_m = H_m − B_{m−1}, B_m = λ·B_{m−1} + (1−λ)·H_m.
///
/// A static column decays as λ^m. A component rotating by φ = 2παT_o per
/// symbol settles to the gain (1 − e^{−jφ}) / (1 − λ·e^{−jφ}).
pub fn background_subtract(
    recording: &ChannelRecording,
    forgetting: f64,
    state: &BackgroundState,
) -> Result<(ChannelRecording, BackgroundState)> {
    if !(forgetting > 0.0 && forgetting < 1.0) {
        return Err(Error::invalid(format!("forgetting factor {forgetting} outside (0, 1)")));
    }
    let n = recording.n_subcarriers();
    if state.average.len() != n {
        return Err(Error::invalid(format!(
            "background has {} subcarriers, recording {n}",
            state.average.len()
        )));
    }
    let mut avg = state.average.clone();
    let mut out = recording.clone();
    for m in 0..recording.n_symbols() {
        let col = recording.symbol(m);
        let dst = &mut out.data_mut()[m * n..(m + 1) * n];
        for k in 0..n {
            dst[k] = col[k] - avg[k];
            avg[k] = forgetting * avg[k] + (1.0 - forgetting) * col[k];
        }
    }
    Ok((out, BackgroundState { average: avg, forgetting }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::RecordingMeta;

    #[test]
    fn static_channel_decays_geometrically() {
        let v = Complex64::new(0.3, -1.2);
        let rec = ChannelRecording::new(2, 30, vec![v; 60], RecordingMeta::default()).unwrap();
        let state = BackgroundState::new(2, 0.9).unwrap();
        let (out, next) = background_subtract(&rec, 0.9, &state).unwrap();
        for m in 0..30 {
            let expected = v * 0.9f64.powi(m as i32);
            assert!((out.at(1, m) - expected).norm() < 1e-12);
        }
        assert!((next.average[0] - v * (1.0 - 0.9f64.powi(30))).norm() < 1e-12);
    }

    #[test]
    fn zero_stays_zero_and_bad_lambda() {
        let rec = ChannelRecording::zeros(4, 5, RecordingMeta::default()).unwrap();
        let state = BackgroundState::new(4, 0.5).unwrap();
        let (out, next) = background_subtract(&rec, 0.5, &state).unwrap();
        assert!(out.data().iter().all(|v| v.norm() == 0.0));
        assert!(next.average.iter().all(|v| v.norm() == 0.0));
        assert!(background_subtract(&rec, 1.0, &state).is_err());
        assert!(BackgroundState::new(4, 0.0).is_err());
    }

    #[test]
    fn rotating_component_steady_state_gain() {
        let lambda = 0.9;
        let phi = 0.7f64;
        let data: Vec<Complex64> = (0..400).map(|m| Complex64::from_polar(1.0, phi * m as f64)).collect();
        let rec = ChannelRecording::new(1, 400, data, RecordingMeta::default()).unwrap();
        let (out, _) = background_subtract(&rec, lambda, &BackgroundState::new(1, lambda).unwrap()).unwrap();
        let e = Complex64::from_polar(1.0, -phi);
        let gain = (Complex64::new(1.0, 0.0) - e) / (Complex64::new(1.0, 0.0) - e * lambda);
        assert!((out.at(0, 399) - rec.at(0, 399) * gain).norm() < 1e-12);
    }
}
