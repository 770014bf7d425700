//! Flat `key = value` configuration files.
//!
//! ```text
//! # comment
//! grid.n_subcarriers = 64
//! [noise]            # prefixes the following keys with "noise."
//! snr_db = 10
//! ```
//!
//! Keys are dotted paths; a `[section]` line prefixes the keys after it and
//! `[]` clears the prefix. Later assignments override earlier ones, and
//! command-line flags override the file. Unknown keys are errors.
//!
//! | key | meaning |
//! |-----|---------|
//! | `grid.preset` | `desk` (64x64, default) or `sidelink` (1560x280) |
//! | `grid.n_subcarriers`, `grid.n_symbols` | N, M |
//! | `grid.subcarrier_spacing_hz`, `grid.symbol_duration_s`, `grid.carrier_freq_hz` | numerology |
//! | `targets.count` | K; optional, checked against the indices given |
//! | `targets.<i>.delay_s` or `targets.<i>.range_m` | bi-static delay or path length |
//! | `targets.<i>.doppler_hz` or `targets.<i>.velocity_mps` | Doppler or radial velocity |
//! | `targets.<i>.gain_db`, `targets.<i>.phase_rad` | complex gain |
//! | `noise.snr_db` or `noise.sigma2` | per-element SNR of the strongest target, or σ² |
//! | `resources.mode` | `elementwise`, `structured` or `full` |
//! | `resources.eta` | occupancy for `elementwise` |
//! | `resources.n_sub_used`, `resources.n_sym_used` | counts for `structured` |
//! | `resources.seed` | Ω_s draw; defaults to the run seed |
//! | `synthesis.path` | `direct` or `full_tx_rx` |
//! | `detector.kind` | `nomp`, `omp` or `fft2d` |
//! | `detector.p_fa`, `detector.oversampling`, `detector.refinement_steps` | |
//! | `detector.max_detections`, `detector.global_steps`, `detector.step_guard` | |
//! | `detector.global_mode` | `block_diagonal` or `full_block` |
//! | `detector.correlation` | `fft` or `direct` |
//! | `detector.cfar_cells` | `dictionary` (default) or `resources`: cell count behind the CFAR level |
//! | `detector.omp_k` | fixed OMP iteration count; CFAR stop when absent |
//! | `detector.peaks` | fft2d peak count; CFAR-free, defaults to 1 |
//! | `experiment.*` | see [`experiment_config`] |
//! | `recording.*`, `carousel.*` | see [`recording_options`] and [`carousel_config`] |
//! | `run.seed` | master seed |

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::metrics::{DetectorKind, ExperimentConfig, Scenario, SeparationAxis};
use crate::pipeline::{CarouselConfig, RecordingFormat, DEFAULT_FORGETTING};
use crate::recovery::{CfarCells, CorrelationMode, DetectorConfig, GlobalMode};
use crate::scene::{
    range_to_delay, velocity_to_doppler, GridConfig, ResourceMode, Scene, SynthesisPath, TargetTruth,
};

const SCALAR_KEYS: &[&str] = &[
    "grid.preset",
    "grid.n_subcarriers",
    "grid.n_symbols",
    "grid.subcarrier_spacing_hz",
    "grid.symbol_duration_s",
    "grid.carrier_freq_hz",
    "targets.count",
    "noise.snr_db",
    "noise.sigma2",
    "resources.mode",
    "resources.eta",
    "resources.n_sub_used",
    "resources.n_sym_used",
    "resources.seed",
    "synthesis.path",
    "detector.kind",
    "detector.p_fa",
    "detector.oversampling",
    "detector.refinement_steps",
    "detector.max_detections",
    "detector.global_mode",
    "detector.global_steps",
    "detector.step_guard",
    "detector.correlation",
    "detector.cfar_cells",
    "detector.omp_k",
    "detector.peaks",
    "experiment.trials",
    "experiment.sweep",
    "experiment.detectors",
    "experiment.snr_db",
    "experiment.n_targets",
    "experiment.min_separation_cells",
    "experiment.separation_axis",
    "experiment.success_tolerance_cells",
    "experiment.timing_reps",
    "experiment.threads",
    "experiment.keep_trials",
    "recording.format",
    "recording.block_len",
    "recording.forgetting",
    "recording.subcarrier_spacing_hz",
    "recording.symbol_duration_s",
    "recording.carrier_freq_hz",
    "carousel.n_subcarriers",
    "carousel.subcarrier_spacing_hz",
    "carousel.symbol_duration_s",
    "carousel.carrier_freq_hz",
    "carousel.n_symbols",
    "carousel.beam_length_m",
    "carousel.rpm",
    "carousel.sphere_gain_db",
    "carousel.initial_angle_rad",
    "carousel.snr_db",
    "run.seed",
];

const TARGET_FIELDS: &[&str] = &["delay_s", "range_m", "doppler_hz", "velocity_mps", "gain_db", "phase_rad"];

fn known(key: &str) -> bool {
    if SCALAR_KEYS.contains(&key) {
        return true;
    }
    let parts: Vec<&str> = key.split('.').collect();
    parts.len() == 3 && parts[0] == "targets" && parts[1].parse::<usize>().is_ok() && TARGET_FIELDS.contains(&parts[2])
}

/// Parsed key/value pairs with the line each came from (0 for overrides).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfigMap {
    entries: BTreeMap<String, (String, usize)>,
}

impl ConfigMap {
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = ConfigMap::default();
        let mut prefix = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(section) = line.strip_prefix('[') {
                let section = section
                    .strip_suffix(']')
                    .ok_or_else(|| Error::Parse { line: line_no, message: "unterminated section header".into() })?
                    .trim();
                prefix = if section.is_empty() { String::new() } else { format!("{section}.") };
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse { line: line_no, message: format!("expected key = value, got '{line}'") })?;
            let key = format!("{prefix}{}", key.trim());
            if !known(&key) {
                return Err(Error::Parse { line: line_no, message: format!("unknown key '{key}'") });
            }
            map.entries.insert(key, (value.trim().to_string(), line_no));
        }
        Ok(map)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Override from the command line.
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        if !known(key) {
            return Err(Error::invalid(format!("unknown key '{key}'")));
        }
        self.entries.insert(key.to_string(), (value.into(), 0));
        Ok(())
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((v, line)) => v.parse::<T>().map(Some).map_err(|_| {
                let message = format!("cannot parse '{v}' for {key}");
                if *line > 0 {
                    Error::Parse { line: *line, message }
                } else {
                    Error::invalid(message)
                }
            }),
        }
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Sorted `key = value` lines that parse back to the same map.
    pub fn snapshot(&self) -> String {
        let mut out = String::new();
        for (k, (v, _)) in &self.entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}

fn bool_value(map: &ConfigMap, key: &str, default: bool) -> Result<bool> {
    match map.raw(key) {
        None => Ok(default),
        Some("true" | "yes" | "1") => Ok(true),
        Some("false" | "no" | "0") => Ok(false),
        Some(v) => Err(Error::invalid(format!("{key} must be true or false, got '{v}'"))),
    }
}

pub fn grid_config(map: &ConfigMap) -> Result<GridConfig> {
    let base = match map.raw("grid.preset").unwrap_or("desk") {
        "desk" => GridConfig::desk_scale(),
        "sidelink" => GridConfig::sidelink_full_scale(),
        other => return Err(Error::invalid(format!("unknown grid preset '{other}'"))),
    };
    GridConfig::new(
        map.get_or("grid.n_subcarriers", base.n_subcarriers)?,
        map.get_or("grid.n_symbols", base.n_symbols)?,
        map.get_or("grid.subcarrier_spacing_hz", base.subcarrier_spacing)?,
        map.get_or("grid.symbol_duration_s", base.symbol_duration)?,
        map.get_or("grid.carrier_freq_hz", base.carrier_freq)?,
    )
}

fn default_targets(grid: &GridConfig) -> Vec<TargetTruth> {
    vec![
        TargetTruth::from_db(range_to_delay(grid, 600.0), velocity_to_doppler(grid, 10.0), 0.0, 0.0),
        TargetTruth::from_db(range_to_delay(grid, 1100.0), velocity_to_doppler(grid, -15.0), -6.0, 1.0),
    ]
}

/// Targets from `targets.<i>.*`; a two-target demo scene when none are given.
pub fn targets(map: &ConfigMap, grid: &GridConfig) -> Result<Vec<TargetTruth>> {
    let mut indices: Vec<usize> = map
        .keys()
        .filter_map(|k| k.strip_prefix("targets."))
        .filter_map(|rest| rest.split_once('.'))
        .filter_map(|(i, _)| i.parse().ok())
        .collect();
    indices.sort_unstable();
    indices.dedup();
    let count: Option<usize> = map.get("targets.count")?;
    if indices.is_empty() {
        return Ok(match count {
            Some(0) => Vec::new(),
            Some(k) => return Err(Error::invalid(format!("targets.count = {k} but no targets given"))),
            None => default_targets(grid),
        });
    }
    if indices.iter().enumerate().any(|(pos, &i)| pos != i) {
        return Err(Error::invalid("target indices must run 0, 1, 2, ... without gaps"));
    }
    if let Some(k) = count {
        if k != indices.len() {
            return Err(Error::invalid(format!("targets.count = {k} but {} targets given", indices.len())));
        }
    }
    let mut out = Vec::with_capacity(indices.len());
    for i in indices {
        let key = |f: &str| format!("targets.{i}.{f}");
        let delay = match (map.get::<f64>(&key("delay_s"))?, map.get::<f64>(&key("range_m"))?) {
            (Some(_), Some(_)) => return Err(Error::invalid(format!("target {i}: give delay_s or range_m, not both"))),
            (Some(d), None) => d,
            (None, Some(r)) => range_to_delay(grid, r),
            (None, None) => return Err(Error::invalid(format!("target {i}: missing delay_s or range_m"))),
        };
        let doppler = match (map.get::<f64>(&key("doppler_hz"))?, map.get::<f64>(&key("velocity_mps"))?) {
            (Some(_), Some(_)) => {
                return Err(Error::invalid(format!("target {i}: give doppler_hz or velocity_mps, not both")))
            }
            (Some(a), None) => a,
            (None, Some(v)) => velocity_to_doppler(grid, v),
            (None, None) => 0.0,
        };
        let t = TargetTruth::from_db(
            delay,
            doppler,
            map.get_or(&key("gain_db"), 0.0)?,
            map.get_or(&key("phase_rad"), 0.0)?,
        );
        t.validate(grid)?;
        out.push(t);
    }
    Ok(out)
}

/// Scene with noise from `noise.snr_db` (default 10 dB) or `noise.sigma2`.
/// Without targets the noise power defaults to 1.
pub fn scene(map: &ConfigMap, grid: &GridConfig) -> Result<Scene> {
    let targets = targets(map, grid)?;
    match (map.get::<f64>("noise.snr_db")?, map.get::<f64>("noise.sigma2")?) {
        (Some(_), Some(_)) => Err(Error::invalid("give noise.snr_db or noise.sigma2, not both")),
        (None, Some(s)) => Scene::new(targets, s),
        (snr, None) if !targets.is_empty() => Scene::with_snr_db(targets, snr.unwrap_or(10.0)),
        (Some(_), None) => Err(Error::invalid("noise.snr_db needs at least one target; use noise.sigma2")),
        (None, None) => Scene::new(targets, 1.0),
    }
}

pub fn resource_mode(map: &ConfigMap, grid: &GridConfig) -> Result<ResourceMode> {
    match map.raw("resources.mode").unwrap_or("elementwise") {
        "elementwise" => Ok(ResourceMode::Elementwise { occupancy: map.get_or("resources.eta", 0.25)? }),
        "structured" => Ok(ResourceMode::Structured {
            n_sub_used: map.get_or("resources.n_sub_used", (grid.n_subcarriers / 4).max(1))?,
            n_sym_used: map.get_or("resources.n_sym_used", (grid.n_symbols / 2).max(1))?,
        }),
        "full" => Ok(ResourceMode::Elementwise { occupancy: 1.0 }),
        other => Err(Error::invalid(format!("unknown resources.mode '{other}'"))),
    }
}

pub fn synthesis_path(map: &ConfigMap) -> Result<SynthesisPath> {
    match map.raw("synthesis.path").unwrap_or("direct") {
        "direct" => Ok(SynthesisPath::Direct),
        "full_tx_rx" => Ok(SynthesisPath::FullTxRx),
        other => Err(Error::invalid(format!("unknown synthesis.path '{other}'"))),
    }
}

pub fn detector_config(map: &ConfigMap) -> Result<DetectorConfig> {
    let d = DetectorConfig::default();
    Ok(DetectorConfig {
        refinement_steps: map.get_or("detector.refinement_steps", d.refinement_steps)?,
        false_alarm_prob: map.get_or("detector.p_fa", d.false_alarm_prob)?,
        oversampling: map.get_or("detector.oversampling", d.oversampling)?,
        max_detections: map.get_or("detector.max_detections", d.max_detections)?,
        global_mode: match map.raw("detector.global_mode") {
            None => d.global_mode,
            Some("block_diagonal") => GlobalMode::BlockDiagonal,
            Some("full_block") => GlobalMode::FullBlock,
            Some(o) => return Err(Error::invalid(format!("unknown detector.global_mode '{o}'"))),
        },
        global_steps: map.get_or("detector.global_steps", d.global_steps)?,
        step_guard: bool_value(map, "detector.step_guard", d.step_guard)?,
        correlation: match map.raw("detector.correlation") {
            None => d.correlation,
            Some("fft") => CorrelationMode::Fft,
            Some("direct") => CorrelationMode::Direct,
            Some(o) => return Err(Error::invalid(format!("unknown detector.correlation '{o}'"))),
        },
        dynamic_range_floor: d.dynamic_range_floor,
        cfar_cells: match map.raw("detector.cfar_cells") {
            None => d.cfar_cells,
            Some("dictionary") => CfarCells::Dictionary,
            Some("resources") => CfarCells::Resources,
            Some(o) => return Err(Error::invalid(format!("unknown detector.cfar_cells '{o}'"))),
        },
    })
}

fn list<T: FromStr>(map: &ConfigMap, key: &str) -> Result<Option<Vec<T>>> {
    let Some(raw) = map.raw(key) else { return Ok(None) };
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|_| Error::invalid(format!("cannot parse '{s}' in {key}"))))
        .collect::<Result<Vec<T>>>()
        .map(Some)
}

/// Scenario defaults overridden by `grid.*`, `resources.*`, `detector.*`
/// and `experiment.{sweep, detectors, snr_db, n_targets,
/// min_separation_cells, separation_axis, success_tolerance_cells,
/// timing_reps, threads, keep_trials}`. Grid and resource keys only apply
/// when present, so each scenario keeps its own defaults otherwise.
pub fn experiment_config(map: &ConfigMap, scenario: Scenario) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::for_scenario(scenario);
    if map.keys().any(|k| k.starts_with("grid.")) {
        cfg.grid = grid_config(map)?;
    }
    if map.keys().any(|k| k.starts_with("resources.") && k != "resources.seed") {
        cfg.resources = resource_mode(map, &cfg.grid)?;
    }
    if map.keys().any(|k| k.starts_with("synthesis.")) {
        cfg.synthesis = synthesis_path(map)?;
    }
    cfg.detector = detector_config(map)?;
    if let Some(s) = list::<f64>(map, "experiment.sweep")? {
        cfg.sweep = s;
    }
    if let Some(d) = list::<DetectorKind>(map, "experiment.detectors")? {
        cfg.detectors = d;
    }
    cfg.snr_db = map.get_or("experiment.snr_db", cfg.snr_db)?;
    cfg.n_targets = map.get_or("experiment.n_targets", cfg.n_targets)?;
    cfg.min_separation_cells = map.get_or("experiment.min_separation_cells", cfg.min_separation_cells)?;
    cfg.separation_axis = match map.raw("experiment.separation_axis") {
        None => cfg.separation_axis,
        Some("delay") => SeparationAxis::Delay,
        Some("doppler") => SeparationAxis::Doppler,
        Some(o) => return Err(Error::invalid(format!("unknown experiment.separation_axis '{o}'"))),
    };
    cfg.success_tolerance_cells = map.get_or("experiment.success_tolerance_cells", cfg.success_tolerance_cells)?;
    cfg.timing_reps = map.get_or("experiment.timing_reps", cfg.timing_reps)?;
    cfg.threads = map.get_or("experiment.threads", cfg.threads)?;
    cfg.keep_trials = bool_value(map, "experiment.keep_trials", cfg.keep_trials)?;
    Ok(cfg)
}

/// How a recording is read and cut into blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct RecordingOptions {
    pub format: Option<RecordingFormat>,
    pub block_len: usize,
    pub forgetting: f64,
    pub subcarrier_spacing: Option<f64>,
    pub symbol_duration: Option<f64>,
    pub carrier_freq: Option<f64>,
}

/// `recording.{format, block_len (200), forgetting (0.9),
/// subcarrier_spacing_hz, symbol_duration_s, carrier_freq_hz}`.
pub fn recording_options(map: &ConfigMap) -> Result<RecordingOptions> {
    Ok(RecordingOptions {
        format: map.get("recording.format")?,
        block_len: map.get_or("recording.block_len", 200)?,
        forgetting: map.get_or("recording.forgetting", DEFAULT_FORGETTING)?,
        subcarrier_spacing: map.get("recording.subcarrier_spacing_hz")?,
        symbol_duration: map.get("recording.symbol_duration_s")?,
        carrier_freq: map.get("recording.carrier_freq_hz")?,
    })
}

/// `carousel.*` over [`CarouselConfig::default`]; the noise seed is `seed`.
pub fn carousel_config(map: &ConfigMap, seed: u64) -> Result<CarouselConfig> {
    let d = CarouselConfig::default();
    Ok(CarouselConfig {
        n_subcarriers: map.get_or("carousel.n_subcarriers", d.n_subcarriers)?,
        subcarrier_spacing: map.get_or("carousel.subcarrier_spacing_hz", d.subcarrier_spacing)?,
        symbol_duration: map.get_or("carousel.symbol_duration_s", d.symbol_duration)?,
        carrier_freq: map.get_or("carousel.carrier_freq_hz", d.carrier_freq)?,
        n_symbols: map.get_or("carousel.n_symbols", d.n_symbols)?,
        beam_length_m: map.get_or("carousel.beam_length_m", d.beam_length_m)?,
        rpm: map.get_or("carousel.rpm", d.rpm)?,
        sphere_gain_db: map.get_or("carousel.sphere_gain_db", d.sphere_gain_db)?,
        initial_angle: map.get_or("carousel.initial_angle_rad", d.initial_angle)?,
        snr_db: map.get("carousel.snr_db")?.or(d.snr_db),
        seed,
        ..d
    })
}

/// Complex gain of a target as (dB, rad), for reports.
pub fn gain_db_phase(g: Complex64) -> (f64, f64) {
    (20.0 * g.norm().log10(), g.arg())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_comments_and_overrides() {
        let text = "# demo\ngrid.n_subcarriers = 32\n[noise]\nsnr_db = 5 # trailing\n[]\nrun.seed=7\n";
        let mut map = ConfigMap::parse(text).unwrap();
        assert_eq!(map.raw("noise.snr_db"), Some("5"));
        assert_eq!(map.get::<u64>("run.seed").unwrap(), Some(7));
        map.set("grid.n_subcarriers", "16").unwrap();
        assert_eq!(grid_config(&map).unwrap().n_subcarriers, 16);
        assert_eq!(ConfigMap::parse(&map.snapshot()).unwrap().snapshot(), map.snapshot());
    }

    #[test]
    fn errors_name_the_line() {
        assert!(matches!(ConfigMap::parse("a = 1\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(ConfigMap::parse("\ngrid.n_symbols 3\n"), Err(Error::Parse { line: 2, .. })));
        let map = ConfigMap::parse("grid.n_symbols = x\n").unwrap();
        assert!(matches!(grid_config(&map), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn targets_by_range_and_velocity() {
        let map = ConfigMap::parse("targets.0.range_m = 300\ntargets.0.velocity_mps = 30\ntargets.0.gain_db = -3\n").unwrap();
        let grid = grid_config(&map).unwrap();
        let t = targets(&map, &grid).unwrap();
        assert_eq!(t.len(), 1);
        assert!((t[0].delay * grid.light_speed - 300.0).abs() < 1e-9);
        assert!((t[0].doppler - 2.0 * 30.0 / grid.wavelength).abs() < 1e-9);
        let empty = ConfigMap::parse("targets.count = 0\nnoise.sigma2 = 2\n").unwrap();
        let s = scene(&empty, &grid).unwrap();
        assert!(s.targets.is_empty() && s.noise_power == 2.0);
        assert!(targets(&ConfigMap::parse("targets.1.delay_s = 0\n").unwrap(), &grid).is_err());
    }

    #[test]
    fn detector_and_experiment_keys() {
        let map = ConfigMap::parse(
            "detector.p_fa = 0.05\ndetector.global_mode = full_block\nexperiment.sweep = 0, 10\nexperiment.detectors = nomp,fft2d\n",
        )
        .unwrap();
        let d = detector_config(&map).unwrap();
        assert_eq!(d.false_alarm_prob, 0.05);
        assert_eq!(d.global_mode, GlobalMode::FullBlock);
        let e = experiment_config(&map, Scenario::PodVsSwpr).unwrap();
        assert_eq!(e.sweep, vec![0.0, 10.0]);
        assert_eq!(e.detectors, vec![DetectorKind::Nomp, DetectorKind::Fft2d]);
        assert!(detector_config(&ConfigMap::parse("detector.correlation = slow\n").unwrap()).is_err());
    }
}
