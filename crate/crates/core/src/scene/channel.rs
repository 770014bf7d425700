use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{GridConfig, ResourceSet};
use crate::error::{Error, Result};
use crate::rng::{self, Rng};

/// One point scatterer: bi-static delay τ, Doppler shift α and complex gain β.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetTruth {
    pub delay: f64,
    pub doppler: f64,
    pub gain: Complex64,
}

impl TargetTruth {
    pub fn new(delay: f64, doppler: f64, gain: Complex64) -> Self {
        TargetTruth { delay, doppler, gain }
    }

    /// Gain given as power in dB relative to 1 and a phase in radians.
    pub fn from_db(delay: f64, doppler: f64, gain_db: f64, phase_rad: f64) -> Self {
        let mag = 10f64.powf(gain_db / 20.0);
        TargetTruth { delay, doppler, gain: Complex64::from_polar(mag, phase_rad) }
    }

    pub fn validate(&self, config: &GridConfig) -> Result<()> {
        let half = 0.5 * config.doppler_span();
        if !(self.delay >= 0.0 && self.delay < config.delay_span()) {
            return Err(Error::invalid(format!(
                "delay {} s outside unambiguous span [0, {})",
                self.delay,
                config.delay_span()
            )));
        }
        if !(self.doppler >= -half && self.doppler < half) {
            return Err(Error::invalid(format!(
                "Doppler {} Hz outside unambiguous span [{}, {})",
                self.doppler, -half, half
            )));
        }
        if !(self.gain.norm() > 0.0) || !self.gain.is_finite() {
            return Err(Error::invalid("target gain must be finite and nonzero"));
        }
        Ok(())
    }
}

/// K targets plus the per-element noise power σ².
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub targets: Vec<TargetTruth>,
    pub noise_power: f64,
    /// Index of the target whose |β|²/σ² is reported as the SNR; the
    /// strongest target when `None`.
    pub snr_reference: Option<usize>,
}

impl Scene {
    pub fn new(targets: Vec<TargetTruth>, noise_power: f64) -> Result<Self> {
        if !(noise_power >= 0.0) || !noise_power.is_finite() {
            return Err(Error::invalid(format!("noise power {noise_power} must be finite and >= 0")));
        }
        Ok(Scene { targets, noise_power, snr_reference: None })
    }

    /// Sets σ² so that |β_ref|²/σ² equals `snr_db`, β_ref the strongest target.
    pub fn with_snr_db(targets: Vec<TargetTruth>, snr_db: f64) -> Result<Self> {
        let reference = strongest(&targets)
            .ok_or_else(|| Error::invalid("an SNR needs at least one target; give sigma2 instead"))?;
        let power = targets[reference].gain.norm_sqr();
        let mut scene = Scene::new(targets, power / 10f64.powf(snr_db / 10.0))?;
        scene.snr_reference = Some(reference);
        Ok(scene)
    }

    pub fn noiseless(targets: Vec<TargetTruth>) -> Self {
        Scene { targets, noise_power: 0.0, snr_reference: None }
    }

    /// Per-element SNR in dB, `None` without targets or noise.
    pub fn snr_db(&self) -> Option<f64> {
        let idx = self.snr_reference.or_else(|| strongest(&self.targets))?;
        let p = self.targets.get(idx)?.gain.norm_sqr();
        (self.noise_power > 0.0).then(|| 10.0 * (p / self.noise_power).log10())
    }
}

fn strongest(targets: &[TargetTruth]) -> Option<usize> {
    targets
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.gain.norm_sqr().total_cmp(&b.1.gain.norm_sqr()).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
}

/// The compressed measurement `h_s`, ordered like the resource set that
/// produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelVector {
    values: Vec<Complex64>,
}

impl ChannelVector {
    pub fn new(values: Vec<Complex64>, rs: &ResourceSet) -> Result<Self> {
        if values.len() != rs.len() {
            return Err(Error::invalid(format!(
                "channel vector has {} entries, resource set has {}",
                values.len(),
                rs.len()
            )));
        }
        Ok(ChannelVector { values })
    }

    pub fn zeros(rs: &ResourceSet) -> Self {
        ChannelVector { values: vec![Complex64::new(0.0, 0.0); rs.len()] }
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// ‖h‖₂².
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn scaled(&self, k: Complex64) -> Self {
        ChannelVector { values: self.values.iter().map(|v| v * k).collect() }
    }
}

/// Response vector a(τ, α) over Ω_s: entries e^{-j2πnΔfτ}·e^{j2πmT_oα},
/// unnormalised, so ‖a‖₂² = |Ω_s|.
pub fn atom(config: &GridConfig, rs: &ResourceSet, delay: f64, doppler: f64) -> ChannelVector {
    let mut out = vec![Complex64::new(0.0, 0.0); rs.len()];
    atom_into(config, rs, delay, doppler, &mut out);
    ChannelVector { values: out }
}

/// [`atom`] into a caller-provided buffer of length |Ω_s|.
pub fn atom_into(config: &GridConfig, rs: &ResourceSet, delay: f64, doppler: f64, out: &mut [Complex64]) {
    assert_eq!(out.len(), rs.len());
    let dn = -2.0 * PI * config.subcarrier_spacing * delay;
    let dm = 2.0 * PI * config.symbol_duration * doppler;
    let sub: Vec<Complex64> = (0..rs.n_subcarriers())
        .map(|n| Complex64::from_polar(1.0, dn * n as f64))
        .collect();
    let sym: Vec<Complex64> = (0..rs.n_symbols())
        .map(|m| Complex64::from_polar(1.0, dm * m as f64))
        .collect();
    for (o, &(n, m)) in out.iter_mut().zip(rs.indices()) {
        *o = sub[n] * sym[m];
    }
}

/// Unit-modulus modulation alphabet.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Constellation {
    Qpsk,
    Psk(usize),
    Custom(Vec<Complex64>),
}

impl Constellation {
    pub fn points(&self) -> Result<Vec<Complex64>> {
        let pts = match self {
            Constellation::Qpsk => (0..4)
                .map(|k| Complex64::from_polar(1.0, PI / 4.0 + k as f64 * PI / 2.0))
                .collect(),
            Constellation::Psk(order) => {
                if *order == 0 {
                    return Err(Error::invalid("PSK order must be >= 1"));
                }
                (0..*order)
                    .map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / *order as f64))
                    .collect()
            }
            Constellation::Custom(p) => p.clone(),
        };
        if pts.is_empty() {
            return Err(Error::invalid("constellation is empty"));
        }
        // Division by a non-unit symbol would colour the noise.
        if let Some(bad) = pts.iter().find(|p| (p.norm() - 1.0).abs() > 1e-12) {
            return Err(Error::invalid(format!("constellation point {bad} is not unit-modulus")));
        }
        Ok(pts)
    }
}

/// Transmitted symbols X on Ω_s, in resource-set order. Cells outside Ω_s
/// carry zero; [`ModSymbolGrid::to_grid`] materialises that.
#[derive(Clone, Debug, PartialEq)]
pub struct ModSymbolGrid {
    pub symbols: Vec<Complex64>,
}

impl ModSymbolGrid {
    pub fn draw(rs: &ResourceSet, constellation: &Constellation, rng: &mut Rng) -> Result<Self> {
        let pts = constellation.points()?;
        let symbols = (0..rs.len()).map(|_| pts[rng.random_range(0..pts.len())]).collect();
        Ok(ModSymbolGrid { symbols })
    }

    pub fn to_grid(&self, rs: &ResourceSet) -> Vec<Complex64> {
        rs.scatter(&self.symbols)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthesisPath {
    /// h_s = Σ β_k a(τ_k, α_k) + z̃.
    Direct,
    /// Draw QPSK symbols, form Y = X·H + Z on the grid, then divide by X.
    FullTxRx,
}

fn complex_gaussian(rng: &mut Rng, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// Synthesises h_s for `scene` on `rs`. Deterministic per seed.
pub fn synthesize_channel(
    scene: &Scene,
    rs: &ResourceSet,
    config: &GridConfig,
    seed: u64,
    path: SynthesisPath,
) -> Result<ChannelVector> {
    if !rs.fits(config) {
        return Err(Error::invalid("resource set does not match grid dimensions"));
    }
    for t in &scene.targets {
        t.validate(config)?;
    }
    let mut clean = vec![Complex64::new(0.0, 0.0); rs.len()];
    let mut buf = vec![Complex64::new(0.0, 0.0); rs.len()];
    for t in &scene.targets {
        atom_into(config, rs, t.delay, t.doppler, &mut buf);
        for (c, a) in clean.iter_mut().zip(&buf) {
            *c += t.gain * a;
        }
    }
    let mut rng = rng::from_seed(seed);
    let values = match path {
        SynthesisPath::Direct => {
            if scene.noise_power > 0.0 {
                for c in clean.iter_mut() {
                    *c += complex_gaussian(&mut rng, scene.noise_power);
                }
            }
            clean
        }
        SynthesisPath::FullTxRx => {
            let x = ModSymbolGrid::draw(rs, &Constellation::Qpsk, &mut rng)?;
            clean
                .iter()
                .zip(&x.symbols)
                .map(|(h, xs)| {
                    let z = if scene.noise_power > 0.0 {
                        complex_gaussian(&mut rng, scene.noise_power)
                    } else {
                        Complex64::new(0.0, 0.0)
                    };
                    let y = xs * h + z;
                    y / xs
                })
                .collect()
        }
    };
    Ok(ChannelVector { values })
}
