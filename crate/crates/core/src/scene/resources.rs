use std::collections::HashSet;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::GridConfig;
use crate::error::{Error, Result};
use crate::rng;

/// The occupied subset Ω_s of an N x M grid.
///
/// The order of `indices` is fixed at construction. Every channel vector and
/// every response vector built from this set uses the same element order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceSet {
    n_subcarriers: usize,
    n_symbols: usize,
    indices: Vec<(usize, usize)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ResourceMode {
    /// ⌊η·N·M⌋ cells drawn uniformly without replacement.
    Elementwise { occupancy: f64 },
    /// `n_sym_used` random symbols, each with `n_sub_used` random subcarriers.
    Structured { n_sub_used: usize, n_sym_used: usize },
}

impl ResourceSet {
    /// Validates and wraps an explicit `(n, m)` list, keeping its order.
    pub fn new(n_subcarriers: usize, n_symbols: usize, indices: Vec<(usize, usize)>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::invalid("resource set is empty"));
        }
        let mut seen = HashSet::with_capacity(indices.len());
        for &(n, m) in &indices {
            if n >= n_subcarriers || m >= n_symbols {
                return Err(Error::invalid(format!(
                    "resource ({n}, {m}) outside {n_subcarriers}x{n_symbols} grid"
                )));
            }
            if !seen.insert((n, m)) {
                return Err(Error::invalid(format!("duplicate resource ({n}, {m})")));
            }
        }
        Ok(ResourceSet { n_subcarriers, n_symbols, indices })
    }

    /// Every cell of the grid, ascending (m, n).
    pub fn full(n_subcarriers: usize, n_symbols: usize) -> Self {
        let indices = (0..n_symbols)
            .flat_map(|m| (0..n_subcarriers).map(move |n| (n, m)))
            .collect();
        ResourceSet { n_subcarriers, n_symbols, indices }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[(usize, usize)] {
        &self.indices
    }

    pub fn n_subcarriers(&self) -> usize {
        self.n_subcarriers
    }

    pub fn n_symbols(&self) -> usize {
        self.n_symbols
    }

    /// η = |Ω_s| / (N·M).
    pub fn occupancy(&self) -> f64 {
        self.indices.len() as f64 / (self.n_subcarriers * self.n_symbols) as f64
    }

    pub fn fits(&self, config: &GridConfig) -> bool {
        self.n_subcarriers == config.n_subcarriers && self.n_symbols == config.n_symbols
    }

    /// Number of distinct occupied symbols.
    pub fn symbols_used(&self) -> usize {
        let mut used = vec![false; self.n_symbols];
        for &(_, m) in &self.indices {
            used[m] = true;
        }
        used.iter().filter(|u| **u).count()
    }

    /// Mean number of occupied subcarriers per occupied symbol, rounded.
    pub fn subcarriers_per_symbol(&self) -> usize {
        let m = self.symbols_used().max(1);
        (self.indices.len() as f64 / m as f64).round() as usize
    }

    /// Places `values` onto a zero-filled N x M grid, column-major by
    /// symbol (cell (n, m) at `n + m*N`).
    pub fn scatter(&self, values: &[num_complex::Complex64]) -> Vec<num_complex::Complex64> {
        assert_eq!(values.len(), self.len(), "vector does not match resource set");
        let mut grid = vec![num_complex::Complex64::new(0.0, 0.0); self.n_subcarriers * self.n_symbols];
        for (&(n, m), v) in self.indices.iter().zip(values) {
            grid[n + m * self.n_subcarriers] = *v;
        }
        grid
    }

    /// Inverse of [`scatter`](Self::scatter): reads the occupied cells in set order.
    pub fn gather(&self, grid: &[num_complex::Complex64]) -> Vec<num_complex::Complex64> {
        assert_eq!(grid.len(), self.n_subcarriers * self.n_symbols, "grid shape mismatch");
        self.indices.iter().map(|&(n, m)| grid[n + m * self.n_subcarriers]).collect()
    }
}

/// Draws the occupied set Ω_s. Output is sorted ascending by (m, n) and is
/// a pure function of `(config, mode, seed)`.
pub fn select_resources(config: &GridConfig, mode: ResourceMode, seed: u64) -> Result<ResourceSet> {
    let (n_total, m_total) = (config.n_subcarriers, config.n_symbols);
    let mut rng = rng::from_seed(seed);
    let mut linear: Vec<usize> = match mode {
        ResourceMode::Elementwise { occupancy } => {
            if !(occupancy > 0.0 && occupancy <= 1.0) {
                return Err(Error::invalid(format!("occupancy {occupancy} outside (0, 1]")));
            }
            let cells = n_total * m_total;
            // The small bias keeps e.g. 0.01 * 436800 from rounding down to 4367.
            let count = ((occupancy * cells as f64) + 1e-9).floor() as usize;
            if count == 0 {
                return Err(Error::invalid("occupancy resolves to zero cells"));
            }
            let count = count.min(cells);
            // Draw over m*N + n so sorting gives (m, n) order directly.
            sample(&mut rng, cells, count).into_vec()
        }
        ResourceMode::Structured { n_sub_used, n_sym_used } => {
            if n_sub_used == 0 || n_sym_used == 0 {
                return Err(Error::invalid("structured counts must be at least 1"));
            }
            if n_sub_used > n_total || n_sym_used > m_total {
                return Err(Error::invalid(format!(
                    "structured counts {n_sub_used}x{n_sym_used} exceed grid {n_total}x{m_total}"
                )));
            }
            let symbols = sample(&mut rng, m_total, n_sym_used).into_vec();
            let mut out = Vec::with_capacity(n_sub_used * n_sym_used);
            for m in symbols {
                for n in sample(&mut rng, n_total, n_sub_used) {
                    out.push(m * n_total + n);
                }
            }
            out
        }
    };
    linear.sort_unstable();
    let indices = linear.into_iter().map(|l| (l % n_total, l / n_total)).collect();
    Ok(ResourceSet { n_subcarriers: n_total, n_symbols: m_total, indices })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use proptest::prelude::*;

    #[test]
    fn table_one_structured_counts() {
        let g = GridConfig::sidelink_full_scale();
        let rs = select_resources(&g, ResourceMode::Structured { n_sub_used: 78, n_sym_used: 56 }, 1).unwrap();
        assert_eq!(rs.len(), 4368);
        assert!((rs.occupancy() - 0.01).abs() < 1e-12);
        assert_eq!(rs.symbols_used(), 56);
        assert_eq!(rs.subcarriers_per_symbol(), 78);
    }

    #[test]
    fn elementwise_one_percent_of_table_one() {
        let g = GridConfig::sidelink_full_scale();
        let rs = select_resources(&g, ResourceMode::Elementwise { occupancy: 0.01 }, 3).unwrap();
        assert_eq!(rs.len(), 4368);
    }

    #[test]
    fn full_occupancy_is_whole_grid() {
        let g = GridConfig::new(8, 6, 30e3, 1.0 / 28e3, 5.9e9).unwrap();
        let rs = select_resources(&g, ResourceMode::Elementwise { occupancy: 1.0 }, 9).unwrap();
        assert_eq!(rs, ResourceSet::full(8, 6));
    }

    #[test]
    fn exhaustive_structured_is_whole_grid() {
        let g = GridConfig::new(8, 8, 30e3, 1.0 / 28e3, 5.9e9).unwrap();
        for seed in 0..5 {
            let rs = select_resources(&g, ResourceMode::Structured { n_sub_used: 8, n_sym_used: 8 }, seed).unwrap();
            assert_eq!(rs, ResourceSet::full(8, 8));
        }
    }

    #[test]
    fn rejects_bad_requests() {
        let g = GridConfig::new(8, 8, 30e3, 1.0 / 28e3, 5.9e9).unwrap();
        assert!(select_resources(&g, ResourceMode::Elementwise { occupancy: 0.001 }, 0).is_err());
        assert!(select_resources(&g, ResourceMode::Elementwise { occupancy: 0.0 }, 0).is_err());
        assert!(select_resources(&g, ResourceMode::Elementwise { occupancy: 1.5 }, 0).is_err());
        assert!(select_resources(&g, ResourceMode::Structured { n_sub_used: 9, n_sym_used: 2 }, 0).is_err());
        assert!(select_resources(&g, ResourceMode::Structured { n_sub_used: 0, n_sym_used: 2 }, 0).is_err());
        assert!(ResourceSet::new(4, 4, vec![(0, 0), (0, 0)]).is_err());
        assert!(ResourceSet::new(4, 4, vec![(4, 0)]).is_err());
        assert!(ResourceSet::new(4, 4, vec![]).is_err());
    }

    #[test]
    fn seeds_are_deterministic_and_distinct() {
        let g = GridConfig::desk_scale();
        let mode = ResourceMode::Elementwise { occupancy: 0.1 };
        let a = select_resources(&g, mode, 42).unwrap();
        let b = select_resources(&g, mode, 42).unwrap();
        let c = select_resources(&g, mode, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    proptest! {
        #[test]
        fn sorted_by_symbol_then_subcarrier(seed in any::<u64>(), eta in 0.02f64..1.0) {
            let g = GridConfig::new(16, 12, 30e3, 1.0 / 28e3, 5.9e9).unwrap();
            let rs = select_resources(&g, ResourceMode::Elementwise { occupancy: eta }, seed).unwrap();
            for w in rs.indices().windows(2) {
                prop_assert!((w[0].1, w[0].0) < (w[1].1, w[1].0));
            }
        }

        #[test]
        fn scatter_gather_round_trip(seed in any::<u64>(), re in proptest::collection::vec(-1.0f64..1.0, 40)) {
            let g = GridConfig::new(16, 12, 30e3, 1.0 / 28e3, 5.9e9).unwrap();
            let rs = select_resources(&g, ResourceMode::Elementwise { occupancy: 40.0 / 192.0 }, seed).unwrap();
            let v: Vec<Complex64> = re.iter().enumerate().map(|(i, r)| Complex64::new(*r, i as f64)).collect();
            prop_assert_eq!(rs.gather(&rs.scatter(&v)), v);
        }
    }
}
