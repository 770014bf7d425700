//! Objective functions of the Newton refinements and their analytic
//! derivatives.
//!
//! The atom derivatives are elementwise products: ∂a/∂τ = (−j2πnΔf)·a and
//! ∂a/∂α = (j2πmT_o)·a. Writing w_τ = −2πnΔf and w_α = 2πmT_o, every first
//! derivative is j·w·a and every second derivative is −w_x·w_y·a.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::detection::Detection;
use crate::scene::{atom_into, GridConfig, ResourceSet};

/// S, ∇S and ∇²S of the single-target objective, β held fixed.
/// Index 0 is delay, index 1 is Doppler.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObjectiveEval {
    pub value: f64,
    pub gradient: [f64; 2],
    pub hessian: [[f64; 2]; 2],
}

pub(crate) struct Weights {
    pub delay: Vec<f64>,
    pub doppler: Vec<f64>,
}

impl Weights {
    pub fn new(config: &GridConfig, rs: &ResourceSet) -> Self {
        let (delay, doppler) = rs
            .indices()
            .iter()
            .map(|&(n, m)| {
                (
                    -2.0 * PI * config.subcarrier_spacing * n as f64,
                    2.0 * PI * config.symbol_duration * m as f64,
                )
            })
            .unzip();
        Weights { delay, doppler }
    }

    /// Weights with their mean removed. Derivatives taken with these are
    /// those of S for the atom re-referenced to the centroid of Ω_s, whose
    /// phase offset β absorbs; the concentrated objective is unchanged but
    /// a β-fixed Newton step no longer under-shoots.
    pub fn centered(config: &GridConfig, rs: &ResourceSet) -> Self {
        let mut w = Self::new(config, rs);
        for v in [&mut w.delay, &mut w.doppler] {
            let mean = v.iter().sum::<f64>() / v.len().max(1) as f64;
            v.iter_mut().for_each(|x| *x -= mean);
        }
        w
    }

    fn axis(&self, k: usize) -> &[f64] {
        if k == 0 {
            &self.delay
        } else {
            &self.doppler
        }
    }
}

const J: Complex64 = Complex64::new(0.0, 1.0);

/// S(τ, α, β) = 2Re{h_r^H a β} − |β|²‖a‖².
pub fn local_objective(
    delay: f64,
    doppler: f64,
    gain: Complex64,
    residual: &[Complex64],
    config: &GridConfig,
    rs: &ResourceSet,
) -> f64 {
    let mut a = vec![Complex64::new(0.0, 0.0); rs.len()];
    atom_into(config, rs, delay, doppler, &mut a);
    let inner: Complex64 = residual.iter().zip(&a).map(|(r, x)| r.conj() * x).sum();
    2.0 * (inner * gain).re - gain.norm_sqr() * rs.len() as f64
}

/// max_β S = |a^H h_r|²/‖a‖² and the maximising β.
pub fn concentrated_gain(
    delay: f64,
    doppler: f64,
    residual: &[Complex64],
    config: &GridConfig,
    rs: &ResourceSet,
) -> (f64, Complex64) {
    let mut a = vec![Complex64::new(0.0, 0.0); rs.len()];
    atom_into(config, rs, delay, doppler, &mut a);
    let c: Complex64 = a.iter().zip(residual).map(|(x, r)| x.conj() * r).sum();
    let norm = rs.len() as f64;
    (c.norm_sqr() / norm, c / norm)
}

/// Analytic gradient and Hessian of S at `est`, with `residual` the
/// measurement minus every other target (this target still included).
pub fn objective_derivatives(
    est: &Detection,
    residual: &[Complex64],
    config: &GridConfig,
    rs: &ResourceSet,
) -> ObjectiveEval {
    let w = Weights::new(config, rs);
    objective_derivatives_with(&w, est.delay, est.doppler, est.gain, residual, config, rs)
}

pub(crate) fn objective_derivatives_with(
    w: &Weights,
    delay: f64,
    doppler: f64,
    beta: Complex64,
    residual: &[Complex64],
    config: &GridConfig,
    rs: &ResourceSet,
) -> ObjectiveEval {
    assert_eq!(residual.len(), rs.len());
    let mut a = vec![Complex64::new(0.0, 0.0); rs.len()];
    atom_into(config, rs, delay, doppler, &mut a);

    let mut inner = Complex64::new(0.0, 0.0);
    // Σ conj(e)·(j w_k a)·β and Σ conj(e)·(−w_k w_l a)·β with e = h_r − aβ
    let mut g = [Complex64::new(0.0, 0.0); 2];
    let mut h = [[Complex64::new(0.0, 0.0); 2]; 2];
    // Σ (∂a/∂θ_k)^H (∂a/∂θ_l)
    let mut dd = [[0.0f64; 2]; 2];
    for i in 0..a.len() {
        let ai = a[i];
        let ec = (residual[i] - ai * beta).conj();
        inner += residual[i].conj() * ai;
        let ws = [w.delay[i], w.doppler[i]];
        for k in 0..2 {
            g[k] += ec * J * ws[k] * ai * beta;
            for l in k..2 {
                h[k][l] += ec * (-ws[k] * ws[l]) * ai * beta;
                dd[k][l] += ((J * ws[k] * ai).conj() * (J * ws[l] * ai)).re;
            }
        }
    }
    let b2 = beta.norm_sqr();
    let value = 2.0 * (inner * beta).re - b2 * rs.len() as f64;
    let gradient = [2.0 * g[0].re, 2.0 * g[1].re];
    let mut hessian = [[0.0; 2]; 2];
    for k in 0..2 {
        for l in k..2 {
            hessian[k][l] = 2.0 * (h[k][l].re - b2 * dd[k][l]);
            hessian[l][k] = hessian[k][l];
        }
    }
    ObjectiveEval { value, gradient, hessian }
}

/// Derivatives of the joint objective −‖h_s − Σ a_ℓ β_ℓ‖² with respect to
/// all (τ_ℓ, α_ℓ), gains held fixed. Parameters are ordered
/// `[τ_1, α_1, τ_2, α_2, ...]`; the Hessian is row-major 2K x 2K.
#[derive(Clone, Debug, PartialEq)]
pub struct JointEval {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub hessian: Vec<f64>,
}

impl JointEval {
    pub fn dim(&self) -> usize {
        self.gradient.len()
    }

    pub fn h(&self, r: usize, c: usize) -> f64 {
        self.hessian[r * self.dim() + c]
    }

    /// The 2x2 block coupling targets `l` and `k`.
    pub fn block(&self, l: usize, k: usize) -> [[f64; 2]; 2] {
        [
            [self.h(2 * l, 2 * k), self.h(2 * l, 2 * k + 1)],
            [self.h(2 * l + 1, 2 * k), self.h(2 * l + 1, 2 * k + 1)],
        ]
    }
}

pub fn joint_residual_energy(
    detections: &[Detection],
    measurement: &[Complex64],
    config: &GridConfig,
    rs: &ResourceSet,
) -> f64 {
    let mut r = measurement.to_vec();
    let mut a = vec![Complex64::new(0.0, 0.0); rs.len()];
    for d in detections {
        atom_into(config, rs, d.delay, d.doppler, &mut a);
        for (ri, ai) in r.iter_mut().zip(&a) {
            *ri -= ai * d.gain;
        }
    }
    r.iter().map(|v| v.norm_sqr()).sum()
}

/// Block gradient and block Hessian of the joint objective.
///
/// Diagonal blocks: 2Re{r^H ∂²a_ℓ β_ℓ − |β_ℓ|² ∂a_ℓ^H ∂a_ℓ}.
/// Off-diagonal blocks: −2Re{(∂a_k β_k)^H ∂a_ℓ β_ℓ}.
pub fn joint_derivatives(
    detections: &[Detection],
    measurement: &[Complex64],
    config: &GridConfig,
    rs: &ResourceSet,
) -> JointEval {
    let w = Weights::new(config, rs);
    joint_derivatives_with(&w, detections, measurement, config, rs)
}

pub(crate) fn joint_derivatives_with(
    w: &Weights,
    detections: &[Detection],
    measurement: &[Complex64],
    config: &GridConfig,
    rs: &ResourceSet,
) -> JointEval {
    let k_targets = detections.len();
    let dim = 2 * k_targets;
    let len = rs.len();
    // β_ℓ·a_ℓ for each target
    let mut scaled: Vec<Vec<Complex64>> = Vec::with_capacity(k_targets);
    let mut r = measurement.to_vec();
    let mut a = vec![Complex64::new(0.0, 0.0); len];
    for d in detections {
        atom_into(config, rs, d.delay, d.doppler, &mut a);
        let s: Vec<Complex64> = a.iter().map(|x| x * d.gain).collect();
        for (ri, si) in r.iter_mut().zip(&s) {
            *ri -= si;
        }
        scaled.push(s);
    }
    let value = -r.iter().map(|v| v.norm_sqr()).sum::<f64>();
    let mut gradient = vec![0.0; dim];
    let mut hessian = vec![0.0; dim * dim];

    for (l, sl) in scaled.iter().enumerate() {
        let b2 = detections[l].gain.norm_sqr();
        for x in 0..2 {
            let wx = w.axis(x);
            let mut g = Complex64::new(0.0, 0.0);
            for i in 0..len {
                g += r[i].conj() * J * wx[i] * sl[i];
            }
            gradient[2 * l + x] = 2.0 * g.re;
            for y in x..2 {
                let wy = w.axis(y);
                let mut curv = Complex64::new(0.0, 0.0);
                let mut dd = 0.0;
                for i in 0..len {
                    curv += r[i].conj() * (-wx[i] * wy[i]) * sl[i];
                    dd += wx[i] * wy[i];
                }
                let v = 2.0 * (curv.re - b2 * dd);
                hessian[(2 * l + x) * dim + 2 * l + y] = v;
                hessian[(2 * l + y) * dim + 2 * l + x] = v;
            }
        }
        for (k, sk) in scaled.iter().enumerate().skip(l + 1) {
            for x in 0..2 {
                let wx = w.axis(x);
                for y in 0..2 {
                    let wy = w.axis(y);
                    let mut c = Complex64::new(0.0, 0.0);
                    for i in 0..len {
                        c += (J * wx[i] * sk[i]).conj() * (J * wy[i] * sl[i]);
                    }
                    // ∂²/∂θ_{k,x}∂θ_{l,y}
                    let v = -2.0 * c.re;
                    hessian[(2 * k + x) * dim + 2 * l + y] = v;
                    hessian[(2 * l + y) * dim + 2 * k + x] = v;
                }
            }
        }
    }
    JointEval { value, gradient, hessian }
}
