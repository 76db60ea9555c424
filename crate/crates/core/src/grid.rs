//! Uniform grid on the unit torus and its integer frequency lattice.
//!
//! The torus is `[0,1)^2` with total measure 1. A grid of `n` points per
//! axis samples `x_j = j/n` and carries the frequency set
//! `{-n/2, ..., n/2 - 1}^2` in standard FFT layout (index `i` maps to
//! frequency `i` for `i < n/2`, else `i - n`).

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TorusGrid {
    n: usize,
}

impl TorusGrid {
    /// `n` must be even and at least 4 so the frequency set is symmetric
    /// apart from the single unpaired Nyquist row/column.
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 || n % 2 != 0 {
            return Err(Error::InvalidGridSize(n));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Measure of one grid cell; cells tile the unit torus exactly.
    pub fn cell_measure(&self) -> f64 {
        1.0 / (self.n * self.n) as f64
    }

    /// Signed integer frequency for array index `i` (standard FFT order).
    pub fn freq(&self, i: usize) -> i64 {
        debug_assert!(i < self.n);
        if i < self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Array index holding frequency `k`, or `None` when `k` is outside
    /// the truncation.
    pub fn index_of(&self, k: i64) -> Option<usize> {
        let half = (self.n / 2) as i64;
        if k >= 0 && k < half {
            Some(k as usize)
        } else if k >= -half && k < 0 {
            Some((k + self.n as i64) as usize)
        } else {
            None
        }
    }

    /// The unpaired mode `k = -n/2` (either axis) has no conjugate partner
    /// in the truncation; odd multipliers zero it.
    pub fn is_nyquist(&self, k: i64) -> bool {
        k == -((self.n / 2) as i64)
    }

    /// Physical coordinate of grid index `j`.
    pub fn point(&self, j: usize) -> f64 {
        j as f64 / self.n as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_odd_and_tiny_sizes() {
        assert!(TorusGrid::new(3).is_err());
        assert!(TorusGrid::new(7).is_err());
        assert!(TorusGrid::new(2).is_err());
        assert!(TorusGrid::new(4).is_ok());
    }

    #[test]
    fn cell_measures_tile_the_torus() {
        for n in [4, 6, 64, 100] {
            let g = TorusGrid::new(n).unwrap();
            let total: f64 = (0..n * n).map(|_| g.cell_measure()).sum();
            assert!((total - 1.0).abs() <= 1e-12, "n={n}: total={total}");
        }
    }

    #[test]
    fn frequency_layout_round_trips() {
        let g = TorusGrid::new(8).unwrap();
        let freqs: Vec<i64> = (0..8).map(|i| g.freq(i)).collect();
        assert_eq!(freqs, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        for i in 0..8 {
            assert_eq!(g.index_of(g.freq(i)), Some(i));
        }
        assert!(g.is_nyquist(-4));
        assert!(!g.is_nyquist(4));
        assert_eq!(g.index_of(4), None);
    }
}
