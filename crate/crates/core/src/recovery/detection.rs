use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::cfar::cfar_threshold;
use super::correlate::CorrelationMode;
use crate::error::{Error, Result};
use crate::scene::GridConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Coarse,
    LocallyRefined,
    GloballyRefined,
}

/// One estimated scatterer (τ̂, α̂, β̂).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub delay: f64,
    pub doppler: f64,
    pub gain: Complex64,
    pub provenance: Provenance,
}

impl Detection {
    pub fn new(delay: f64, doppler: f64, gain: Complex64, provenance: Provenance) -> Self {
        Detection { delay, doppler, gain, provenance }
    }

    pub(crate) fn wrapped(mut self, config: &GridConfig) -> Self {
        self.delay = config.wrap_delay(self.delay);
        self.doppler = config.wrap_doppler(self.doppler);
        self
    }
}

pub type DetectionSet = Vec<Detection>;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GlobalMode {
    /// Keep only the 2x2 diagonal blocks of the joint Hessian.
    #[default]
    BlockDiagonal,
    /// Solve the complete 2K x 2K system.
    FullBlock,
}

/// Number of hypotheses fed to the CFAR formula.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CfarCells {
    /// |Ω_s|, one hypothesis per measurement.
    Resources,
    /// Every dictionary column the coarse search scans. The peak is a
    /// maximum over this many correlated statistics, so this count keeps
    /// the empirical false-alarm rate at or below p_fa.
    #[default]
    Dictionary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    /// Local Newton steps R_s per new detection.
    pub refinement_steps: usize,
    pub false_alarm_prob: f64,
    pub oversampling: usize,
    pub max_detections: usize,
    pub global_mode: GlobalMode,
    /// Cap on joint Newton updates per detection round; the loop exits
    /// early once no estimate moves.
    pub global_steps: usize,
    pub step_guard: bool,
    pub correlation: CorrelationMode,
    /// Lower bound on the noise estimate, relative to the mean per-element
    /// power of the measurement. Keeps noiseless inputs from dividing by
    /// round-off.
    pub dynamic_range_floor: f64,
    pub cfar_cells: CfarCells,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            refinement_steps: 5,
            false_alarm_prob: 0.01,
            oversampling: 4,
            max_detections: 32,
            global_mode: GlobalMode::BlockDiagonal,
            global_steps: 100,
            step_guard: true,
            correlation: CorrelationMode::Fft,
            dynamic_range_floor: 1e-10,
            cfar_cells: CfarCells::Dictionary,
        }
    }
}

impl DetectorConfig {
    /// δ for a search over `dict_len` columns with `n_resources` measurements.
    pub fn stopping_threshold(&self, n_resources: usize, dict_len: usize) -> Result<f64> {
        let count = match self.cfar_cells {
            CfarCells::Resources => n_resources,
            CfarCells::Dictionary => dict_len,
        };
        cfar_threshold(count, self.false_alarm_prob)
    }

    pub fn validate(&self, n_resources: usize) -> Result<()> {
        if !(self.false_alarm_prob > 0.0 && self.false_alarm_prob < 1.0) {
            return Err(Error::invalid("false_alarm_prob must lie in (0, 1)"));
        }
        if self.oversampling == 0 {
            return Err(Error::invalid("oversampling must be >= 1"));
        }
        if self.max_detections == 0 || self.max_detections > n_resources {
            return Err(Error::invalid(format!(
                "max_detections {} outside [1, {}]",
                self.max_detections, n_resources
            )));
        }
        if !(self.dynamic_range_floor >= 0.0) {
            return Err(Error::invalid("dynamic_range_floor must be >= 0"));
        }
        Ok(())
    }
}

/// Detections plus the bookkeeping a caller needs to judge them.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DetectorOutput {
    pub detections: DetectionSet,
    /// ‖h_r‖² before the first round and after every round.
    pub residual_trace: Vec<f64>,
    /// Detection rounds that added a target.
    pub iterations: usize,
    /// The detection cap stopped the loop before the threshold did.
    pub truncated: bool,
    /// Joint-refinement blocks skipped as singular.
    pub singular_blocks: usize,
    /// A least-squares gain fit fell back to the minimum-norm solution.
    pub rank_deficient: bool,
    /// Normalised peak metric at each coarse search, including the final one.
    pub peak_metrics: Vec<f64>,
    pub threshold: f64,
}
