use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::detection::Detection;
use crate::scene::{atom_into, GridConfig, ResourceSet};

#[derive(Clone, Debug, PartialEq)]
pub struct LsSolution {
    pub gains: Vec<Complex64>,
    /// The atoms were (numerically) dependent and `gains` is the
    /// minimum-norm solution.
    pub rank_deficient: bool,
}

fn atom_matrix(detections: &[Detection], config: &GridConfig, rs: &ResourceSet) -> DMatrix<Complex64> {
    let mut a = DMatrix::zeros(rs.len(), detections.len());
    let mut buf = vec![Complex64::new(0.0, 0.0); rs.len()];
    for (k, d) in detections.iter().enumerate() {
        atom_into(config, rs, d.delay, d.doppler, &mut buf);
        a.column_mut(k).copy_from_slice(&buf);
    }
    a
}

/// b = A† h_s over the atoms of `detections`.
///
/// Solves the normal equations by Cholesky; when the Gram matrix is
/// numerically singular it falls back to an SVD pseudo-inverse.
pub fn ls_gains(
    detections: &[Detection],
    measurement: &[Complex64],
    config: &GridConfig,
    rs: &ResourceSet,
) -> LsSolution {
    if detections.is_empty() {
        return LsSolution { gains: Vec::new(), rank_deficient: false };
    }
    let a = atom_matrix(detections, config, rs);
    let h = DVector::from_column_slice(measurement);
    let gram = a.adjoint() * &a;
    let rhs = a.adjoint() * &h;
    let scale = rs.len() as f64;
    if let Some(chol) = gram.clone().cholesky() {
        let l = chol.l();
        let min_pivot = (0..l.nrows()).map(|i| l[(i, i)].re).fold(f64::INFINITY, f64::min);
        if min_pivot * min_pivot > 1e-10 * scale {
            let b = chol.solve(&rhs);
            return LsSolution { gains: b.iter().copied().collect(), rank_deficient: false };
        }
    }
    let svd = a.svd(true, true);
    let tol = 1e-8 * svd.singular_values.max();
    let b = svd.solve(&h, tol).expect("both factors requested");
    LsSolution { gains: b.iter().copied().collect(), rank_deficient: true }
}

/// h_s − Σ β_k a(τ_k, α_k).
pub fn residual_after(
    detections: &[Detection],
    measurement: &[Complex64],
    config: &GridConfig,
    rs: &ResourceSet,
) -> Vec<Complex64> {
    let mut r = measurement.to_vec();
    let mut buf = vec![Complex64::new(0.0, 0.0); rs.len()];
    for d in detections {
        atom_into(config, rs, d.delay, d.doppler, &mut buf);
        for (ri, ai) in r.iter_mut().zip(&buf) {
            *ri -= ai * d.gain;
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recovery::Provenance;
    use crate::scene::{atom, ResourceSet};

    fn det(t: f64, a: f64) -> Detection {
        Detection::new(t, a, Complex64::new(0.0, 0.0), Provenance::Coarse)
    }

    #[test]
    fn single_atom_at_truth() {
        let g = GridConfig::desk_scale();
        let rs = ResourceSet::full(64, 64);
        let beta = Complex64::new(-0.3, 2.0);
        let (t, a) = (5.3 * g.delay_cell(), 7.9 * g.doppler_cell());
        let h = atom(&g, &rs, t, a).scaled(beta);
        let sol = ls_gains(&[det(t, a)], h.values(), &g, &rs);
        assert!(!sol.rank_deficient);
        assert!((sol.gains[0] - beta).norm() / beta.norm() < 1e-10);
    }

    #[test]
    fn orthogonal_atoms_decouple() {
        let g = GridConfig::new(16, 8, 30e3, 1.0 / 28e3, 5.9e9).unwrap();
        let rs = ResourceSet::full(16, 8);
        let dets = [det(2.0 * g.delay_cell(), 0.0), det(5.0 * g.delay_cell(), 3.0 * g.doppler_cell())];
        let h: Vec<Complex64> = (0..rs.len()).map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
        let sol = ls_gains(&dets, &h, &g, &rs);
        for (d, b) in dets.iter().zip(&sol.gains) {
            let a = atom(&g, &rs, d.delay, d.doppler);
            let proj: Complex64 = a.values().iter().zip(&h).map(|(x, y)| x.conj() * y).sum::<Complex64>() / rs.len() as f64;
            assert!((proj - b).norm() < 1e-12);
        }
    }

    #[test]
    fn duplicate_atoms_fall_back_to_min_norm() {
        let g = GridConfig::new(16, 8, 30e3, 1.0 / 28e3, 5.9e9).unwrap();
        let rs = ResourceSet::full(16, 8);
        let d = det(2.5 * g.delay_cell(), 1.0 * g.doppler_cell());
        let h = atom(&g, &rs, d.delay, d.doppler);
        let sol = ls_gains(&[d, d], h.values(), &g, &rs);
        assert!(sol.rank_deficient);
        // Minimum norm splits the unit gain evenly.
        for b in &sol.gains {
            assert!((b - Complex64::new(0.5, 0.0)).norm() < 1e-8);
        }
    }

    #[test]
    fn empty_set() {
        let g = GridConfig::desk_scale();
        let rs = ResourceSet::full(64, 64);
        let sol = ls_gains(&[], &vec![Complex64::new(1.0, 0.0); rs.len()], &g, &rs);
        assert!(sol.gains.is_empty());
    }
}
