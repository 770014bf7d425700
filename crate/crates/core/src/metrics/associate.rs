use serde::{Deserialize, Serialize};

use crate::recovery::Detection;
use crate::scene::{GridConfig, TargetTruth};

/// Half-widths of the acceptance window, in resolution cells.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gates {
    pub delay_cells: f64,
    pub doppler_cells: f64,
}

impl Default for Gates {
    fn default() -> Self {
        Gates { delay_cells: 0.5, doppler_cells: 0.5 }
    }
}

/// A detection paired with a truth. Errors are estimate minus truth,
/// wrapped to the unambiguous spans, in seconds and Hz.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Match {
    pub detection: usize,
    pub truth: usize,
    pub delay_error: f64,
    pub doppler_error: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Association {
    pub matches: Vec<Match>,
    pub false_alarms: Vec<usize>,
    pub misses: Vec<usize>,
}

impl Association {
    pub fn match_for_truth(&self, truth: usize) -> Option<&Match> {
        self.matches.iter().find(|m| m.truth == truth)
    }
}

/// Greedy nearest-neighbour matching in cell-normalised distance. Pairs
/// outside the gates never match; among equal distances the earlier truth,
/// then the earlier detection, wins.
pub fn associate(detections: &[Detection], truths: &[TargetTruth], config: &GridConfig, gates: Gates) -> Association {
    let mut pairs = Vec::new();
    for (t, truth) in truths.iter().enumerate() {
        for (d, det) in detections.iter().enumerate() {
            let dt = config.delay_diff(det.delay, truth.delay);
            let da = config.doppler_diff(det.doppler, truth.doppler);
            let (ct, ca) = (dt / config.delay_cell(), da / config.doppler_cell());
            if ct.abs() <= gates.delay_cells && ca.abs() <= gates.doppler_cells {
                pairs.push((ct.hypot(ca), t, d, dt, da));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut truth_used = vec![false; truths.len()];
    let mut det_used = vec![false; detections.len()];
    let mut matches = Vec::new();
    for (_, t, d, dt, da) in pairs {
        if !truth_used[t] && !det_used[d] {
            truth_used[t] = true;
            det_used[d] = true;
            matches.push(Match { detection: d, truth: t, delay_error: dt, doppler_error: da });
        }
    }
    matches.sort_by_key(|m| m.truth);
    Association {
        matches,
        false_alarms: (0..detections.len()).filter(|d| !det_used[*d]).collect(),
        misses: (0..truths.len()).filter(|t| !truth_used[*t]).collect(),
    }
}
