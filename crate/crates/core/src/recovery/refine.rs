//! Local (per-target) and global (joint) Newton refinement.
//!
//! Steps are computed in resolution-cell units: u = τ/(1/NΔf), v = α/(1/MT_o).
//! Newton's method is affine invariant, so this only affects conditioning,
//! the one-cell step clamp and the gradient fallback.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::detection::{Detection, GlobalMode, Provenance};
use super::lsq::ls_gains;
use super::objective::{concentrated_gain, joint_derivatives_with, objective_derivatives_with, Weights};
use crate::scene::{GridConfig, ResourceSet};

const MAX_HALVINGS: usize = 6;
// Fraction of the curvature-scaled gradient step tried when Newton fails.
const GRADIENT_FRACTION: f64 = 0.125;

fn cells(config: &GridConfig) -> [f64; 2] {
    [config.delay_cell(), config.doppler_cell()]
}

/// Newton step −H⁻¹g for a 2x2 block in cell units, `None` unless H is
/// negative definite (S is maximised).
fn newton_2x2(g: [f64; 2], h: [[f64; 2]; 2]) -> Option<[f64; 2]> {
    let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
    if !(h[0][0] < 0.0 && h[1][1] < 0.0 && det > 1e-12 * (h[0][0] * h[1][1]).abs()) {
        return None;
    }
    Some([
        -(h[1][1] * g[0] - h[0][1] * g[1]) / det,
        -(-h[1][0] * g[0] + h[0][0] * g[1]) / det,
    ])
}

fn is_singular(h: [[f64; 2]; 2]) -> bool {
    let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
    let scale = h[0][0].abs().max(h[1][1].abs()).max(h[0][1].abs());
    !(scale > 0.0) || det.abs() <= 1e-12 * scale * scale || !det.is_finite()
}

/// Ascent step g/D with D the Gauss-Newton curvature 2|β|²Σw², in cell units.
fn gradient_step(g: [f64; 2], curvature: [f64; 2]) -> [f64; 2] {
    let mut d = [0.0; 2];
    for k in 0..2 {
        if curvature[k] > 0.0 {
            d[k] = g[k] / curvature[k];
        }
    }
    d
}

/// Scales a step so neither axis moves more than one cell.
fn clamp_cells(step: &mut [f64]) {
    let worst = step.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    if worst > 1.0 {
        step.iter_mut().for_each(|s| *s /= worst);
    }
}

fn curvature(w: &Weights, cell: [f64; 2], beta: Complex64) -> [f64; 2] {
    let b2 = beta.norm_sqr();
    let sd: f64 = w.delay.iter().map(|x| x * x).sum();
    let sa: f64 = w.doppler.iter().map(|x| x * x).sum();
    [2.0 * b2 * sd * cell[0] * cell[0], 2.0 * b2 * sa * cell[1] * cell[1]]
}

/// R_s Newton iterations on S(τ, α) for one target, with β re-estimated as
/// a^H h_r/‖a‖² after each step.
///
/// `residual` is h_r with every other target removed and this one still in
/// it; it is not modified. With `guard` set, a step is accepted only if it
/// does not decrease S; otherwise it is halved up to six times, then a short
/// gradient step is tried, and failing that the estimate stays put.
pub fn refine_local(
    est: &Detection,
    residual: &[Complex64],
    config: &GridConfig,
    rs: &ResourceSet,
    steps: usize,
    guard: bool,
) -> Detection {
    let w = Weights::centered(config, rs);
    let cell = cells(config);
    let (mut tau, mut alpha, mut beta) = (est.delay, est.doppler, est.gain);
    let mut current = concentrated_gain(tau, alpha, residual, config, rs).0;

    for _ in 0..steps {
        let ev = objective_derivatives_with(&w, tau, alpha, beta, residual, config, rs);
        let g = [ev.gradient[0] * cell[0], ev.gradient[1] * cell[1]];
        let mut h = ev.hessian;
        for (k, row) in h.iter_mut().enumerate() {
            for (l, v) in row.iter_mut().enumerate() {
                *v *= cell[k] * cell[l];
            }
        }
        let curv = curvature(&w, cell, beta);
        let mut step = newton_2x2(g, h).unwrap_or_else(|| gradient_step(g, curv));
        clamp_cells(&mut step);

        let moved = |t: f64, s: &[f64; 2]| (tau + t * s[0] * cell[0], alpha + t * s[1] * cell[1]);
        if !guard {
            (tau, alpha) = moved(1.0, &step);
        } else {
            let mut accepted = None;
            let mut t = 1.0;
            for _ in 0..=MAX_HALVINGS {
                let (ct, ca) = moved(t, &step);
                let gain = concentrated_gain(ct, ca, residual, config, rs).0;
                if gain >= current {
                    accepted = Some((ct, ca, gain));
                    break;
                }
                t *= 0.5;
            }
            if accepted.is_none() {
                let gs = gradient_step(g, curv);
                let (ct, ca) = moved(GRADIENT_FRACTION, &gs);
                let gain = concentrated_gain(ct, ca, residual, config, rs).0;
                if gain > current {
                    accepted = Some((ct, ca, gain));
                }
            }
            match accepted {
                Some((ct, ca, gain)) => {
                    (tau, alpha, current) = (ct, ca, gain);
                }
                None => break,
            }
        }
        tau = config.wrap_delay(tau);
        alpha = config.wrap_doppler(alpha);
        beta = concentrated_gain(tau, alpha, residual, config, rs).1;
        if !guard {
            current = concentrated_gain(tau, alpha, residual, config, rs).0;
        }
    }
    Detection::new(tau, alpha, beta, Provenance::LocallyRefined).wrapped(config)
}

/// Result of one joint Newton update.
#[derive(Clone, Debug, PartialEq)]
pub struct GlobalRefinement {
    /// Updated (τ″, α″) with least-squares gains b = A† h_s.
    pub detections: Vec<Detection>,
    /// Diagonal blocks skipped as singular.
    pub singular_blocks: usize,
    /// `FullBlock` was requested but −H was not positive definite, so the
    /// block-diagonal step was used.
    pub full_block_fallback: bool,
    pub rank_deficient: bool,
    /// ‖h_s − A b‖² before and after, both with least-squares gains.
    pub energy_before: f64,
    pub energy_after: f64,
}

fn with_ls_gains(
    dets: &[Detection],
    measurement: &[Complex64],
    config: &GridConfig,
    rs: &ResourceSet,
) -> (Vec<Detection>, f64, bool) {
    let sol = ls_gains(dets, measurement, config, rs);
    let out: Vec<Detection> = dets
        .iter()
        .zip(&sol.gains)
        .map(|(d, b)| Detection { gain: *b, ..*d })
        .collect();
    let energy = super::objective::joint_residual_energy(&out, measurement, config, rs);
    (out, energy, sol.rank_deficient)
}

/// One joint Newton update of every (τ̂′, α̂′) against the full measurement,
/// gains held at their current values while the step is computed.
pub fn refine_global(
    detections: &[Detection],
    measurement: &[Complex64],
    config: &GridConfig,
    rs: &ResourceSet,
    mode: GlobalMode,
    guard: bool,
) -> GlobalRefinement {
    let w = Weights::centered(config, rs);
    let cell = cells(config);
    let k = detections.len();
    let dim = 2 * k;
    let ev = joint_derivatives_with(&w, detections, measurement, config, rs);
    let g: Vec<f64> = (0..dim).map(|i| ev.gradient[i] * cell[i % 2]).collect();
    let hs = |r: usize, c: usize| ev.hessian[r * dim + c] * cell[r % 2] * cell[c % 2];

    let mut singular_blocks = 0;
    let mut full_block_fallback = false;
    let mut step: Option<Vec<f64>> = None;
    if mode == GlobalMode::FullBlock && k > 0 {
        let neg_h = DMatrix::from_fn(dim, dim, |r, c| -hs(r, c));
        match neg_h.cholesky() {
            Some(chol) => step = Some(chol.solve(&DVector::from_vec(g.clone())).iter().copied().collect()),
            None => full_block_fallback = true,
        }
    }
    let step = step.unwrap_or_else(|| {
        let mut s = vec![0.0; dim];
        for l in 0..k {
            let block = [[hs(2 * l, 2 * l), hs(2 * l, 2 * l + 1)], [hs(2 * l + 1, 2 * l), hs(2 * l + 1, 2 * l + 1)]];
            let gl = [g[2 * l], g[2 * l + 1]];
            let sl = if is_singular(block) {
                singular_blocks += 1;
                [0.0, 0.0]
            } else {
                newton_2x2(gl, block).unwrap_or_else(|| gradient_step(gl, curvature(&w, cell, detections[l].gain)))
            };
            s[2 * l] = sl[0];
            s[2 * l + 1] = sl[1];
        }
        s
    });
    let mut step = step;
    for l in 0..k {
        clamp_cells(&mut step[2 * l..2 * l + 2]);
    }

    let moved = |t: f64, s: &[f64]| -> Vec<Detection> {
        detections
            .iter()
            .enumerate()
            .map(|(l, d)| {
                Detection::new(
                    d.delay + t * s[2 * l] * cell[0],
                    d.doppler + t * s[2 * l + 1] * cell[1],
                    d.gain,
                    Provenance::GloballyRefined,
                )
                .wrapped(config)
            })
            .collect()
    };

    let (start, energy_before, rd0) = with_ls_gains(detections, measurement, config, rs);
    let (result, energy_after, rank_deficient) = if !guard {
        with_ls_gains(&moved(1.0, &step), measurement, config, rs)
    } else {
        let mut accepted = None;
        let mut t = 1.0;
        for _ in 0..=MAX_HALVINGS {
            let cand = with_ls_gains(&moved(t, &step), measurement, config, rs);
            if cand.1 <= energy_before {
                accepted = Some(cand);
                break;
            }
            t *= 0.5;
        }
        if accepted.is_none() {
            let mut gs = vec![0.0; dim];
            for l in 0..k {
                let sl = gradient_step([g[2 * l], g[2 * l + 1]], curvature(&w, cell, detections[l].gain));
                gs[2 * l] = sl[0];
                gs[2 * l + 1] = sl[1];
                clamp_cells(&mut gs[2 * l..2 * l + 2]);
            }
            let cand = with_ls_gains(&moved(GRADIENT_FRACTION, &gs), measurement, config, rs);
            if cand.1 <= energy_before {
                accepted = Some(cand);
            }
        }
        accepted.unwrap_or_else(|| {
            let kept = start
                .iter()
                .map(|d| Detection { provenance: Provenance::GloballyRefined, ..*d })
                .collect();
            (kept, energy_before, rd0)
        })
    };
    GlobalRefinement {
        detections: result,
        singular_blocks,
        full_block_fallback,
        rank_deficient,
        energy_before,
        energy_after,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{atom, select_resources, synthesize_channel, ResourceMode, Scene, SynthesisPath, TargetTruth};

    #[test]
    fn fixed_point_at_on_grid_truth() {
        let g = GridConfig::new(32, 32, 30e3, 1.0 / 28e3, 5.9e9).unwrap();
        let rs = select_resources(&g, ResourceMode::Elementwise { occupancy: 0.3 }, 1).unwrap();
        let (t, a) = (12.0 * g.delay_cell(), -5.0 * g.doppler_cell());
        let beta = Complex64::new(0.8, 0.6);
        let h = atom(&g, &rs, t, a).scaled(beta);
        let start = Detection::new(t, a, beta, Provenance::Coarse);
        let out = refine_local(&start, h.values(), &g, &rs, 5, true);
        assert!((out.delay - t).abs() <= 1e-12 * g.delay_cell());
        assert!((out.doppler - a).abs() <= 1e-12 * g.doppler_cell());
        assert!((out.gain - beta).norm() <= 1e-12);
    }

    #[test]
    fn off_grid_converges() {
        let g = GridConfig::desk_scale();
        let rs = ResourceSet::full(64, 64);
        let (t, a) = (20.37 * g.delay_cell(), 3.37 * g.doppler_cell());
        let h = atom(&g, &rs, t, a);
        let start = Detection::new(20.0 * g.delay_cell(), 3.0 * g.doppler_cell(), Complex64::new(0.5, 0.0), Provenance::Coarse);
        let (_, b0) = concentrated_gain(start.delay, start.doppler, h.values(), &g, &rs);
        let out = refine_local(&Detection { gain: b0, ..start }, h.values(), &g, &rs, 5, true);
        assert!(((out.delay - t) / g.delay_cell()).abs() < 1e-3);
        assert!(((out.doppler - a) / g.doppler_cell()).abs() < 1e-3);
    }

    #[test]
    fn guarded_local_steps_never_lose_objective() {
        let g = GridConfig::new(32, 32, 30e3, 1.0 / 28e3, 5.9e9).unwrap();
        let rs = select_resources(&g, ResourceMode::Elementwise { occupancy: 0.2 }, 3).unwrap();
        let scene = Scene::with_snr_db(vec![TargetTruth::from_db(7.6 * g.delay_cell(), 2.2 * g.doppler_cell(), 0.0, 1.0)], 0.0).unwrap();
        let h = synthesize_channel(&scene, &rs, &g, 5, SynthesisPath::Direct).unwrap();
        let mut est = Detection::new(7.0 * g.delay_cell(), 2.5 * g.doppler_cell(), Complex64::new(0.0, 0.0), Provenance::Coarse);
        est.gain = concentrated_gain(est.delay, est.doppler, h.values(), &g, &rs).1;
        let mut prev = concentrated_gain(est.delay, est.doppler, h.values(), &g, &rs).0;
        for _ in 0..8 {
            est = refine_local(&est, h.values(), &g, &rs, 1, true);
            let now = concentrated_gain(est.delay, est.doppler, h.values(), &g, &rs).0;
            assert!(now >= prev);
            prev = now;
        }
    }

    #[test]
    fn single_target_modes_agree() {
        let g = GridConfig::new(32, 32, 30e3, 1.0 / 28e3, 5.9e9).unwrap();
        let rs = select_resources(&g, ResourceMode::Elementwise { occupancy: 0.25 }, 4).unwrap();
        let h = atom(&g, &rs, 9.3 * g.delay_cell(), 4.6 * g.doppler_cell());
        let d = Detection::new(9.2 * g.delay_cell(), 4.5 * g.doppler_cell(), Complex64::new(0.9, 0.1), Provenance::LocallyRefined);
        let a = refine_global(&[d], h.values(), &g, &rs, GlobalMode::BlockDiagonal, true);
        let b = refine_global(&[d], h.values(), &g, &rs, GlobalMode::FullBlock, true);
        assert!(!b.full_block_fallback);
        assert!((a.detections[0].delay - b.detections[0].delay).abs() <= 1e-12 * g.delay_cell());
        assert!((a.detections[0].doppler - b.detections[0].doppler).abs() <= 1e-12 * g.doppler_cell());
        assert!(a.energy_after <= a.energy_before);
    }

    #[test]
    fn helpers() {
        assert!(newton_2x2([1.0, 1.0], [[1.0, 0.0], [0.0, -1.0]]).is_none());
        let s = newton_2x2([1.0, -2.0], [[-2.0, 0.0], [0.0, -4.0]]).unwrap();
        assert_eq!(s, [0.5, -0.5]);
        assert!(is_singular([[1.0, 1.0], [1.0, 1.0]]));
        let mut st = [3.0, -1.0];
        clamp_cells(&mut st);
        assert_eq!(st, [1.0, -1.0 / 3.0]);
    }
}
