//! Fourier-multiplier operators: Leray projection, heat semigroup,
//! tensor divergence, and the 2/3-rule dealiasing mask.
//!
//! Conventions: Laplacian multiplier `-4 pi^2 |k|^2`, derivative multiplier
//! `2 pi i k_l`. Odd multipliers (derivatives, projection) zero the unpaired
//! Nyquist modes `k = -n/2` so real fields stay real.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{tensor_to_spectral, PhysicalTensorField, SpectralVectorField};
use crate::grid::TorusGrid;

/// Leray projection onto divergence-free fields: `I - k k^T / |k|^2` for
/// `k != 0`, identity on the mean mode. Fields already tagged divergence-free
/// are returned unchanged, which makes the projector exactly idempotent.
pub fn leray_project(v: &SpectralVectorField) -> SpectralVectorField {
    if v.is_divfree_tagged() {
        return v.clone();
    }
    let grid = v.grid();
    let n = grid.n();
    let mut c0 = Array2::zeros((n, n));
    let mut c1 = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            let k1 = grid.freq(i);
            let k2 = grid.freq(j);
            if k1 == 0 && k2 == 0 {
                c0[(i, j)] = v.coeffs[0][(i, j)];
                c1[(i, j)] = v.coeffs[1][(i, j)];
                continue;
            }
            if grid.is_nyquist(k1) || grid.is_nyquist(k2) {
                continue;
            }
            // Project onto the perpendicular direction u = (-k2, k1); the
            // output is u * (u.v)/|k|^2, so its computed divergence vanishes
            // to rounding at every mode.
            let (k1f, k2f) = (k1 as f64, k2 as f64);
            let ksq = k1f * k1f + k2f * k2f;
            let s = (v.coeffs[0][(i, j)] * (-k2f) + v.coeffs[1][(i, j)] * k1f) / ksq;
            c0[(i, j)] = s * (-k2f);
            c1[(i, j)] = s * k1f;
        }
    }
    SpectralVectorField::from_coeffs(grid, [c0, c1], true)
}

/// Heat semigroup `e^{t Delta}`: multiply each coefficient by
/// `exp(-4 pi^2 |k|^2 t)`. Rejects negative times.
pub fn heat_semigroup(t: f64, v: &SpectralVectorField) -> Result<SpectralVectorField> {
    if !(t >= 0.0) {
        return Err(Error::NegativeTime(t));
    }
    let grid = v.grid();
    let n = grid.n();
    let mut out = v.clone();
    for i in 0..n {
        for j in 0..n {
            let factor = heat_factor(grid, i, j, t);
            out.coeffs[0][(i, j)] *= factor;
            out.coeffs[1][(i, j)] *= factor;
        }
    }
    Ok(out)
}

pub(crate) fn heat_factor(grid: TorusGrid, i: usize, j: usize, t: f64) -> f64 {
    let k1 = grid.freq(i) as f64;
    let k2 = grid.freq(j) as f64;
    (-4.0 * std::f64::consts::PI * std::f64::consts::PI * (k1 * k1 + k2 * k2) * t).exp()
}

/// Divergence of a tensor field: component `m` gets
/// `sum_l 2 pi i k_l Fhat_{ml}(k)`.
pub fn divergence_of_tensor(f: &PhysicalTensorField) -> SpectralVectorField {
    let fh = tensor_to_spectral(f);
    divergence_of_spectral_tensor(f.grid(), &fh)
}

pub(crate) fn divergence_of_spectral_tensor(
    grid: TorusGrid,
    fh: &[[Array2<Complex64>; 2]; 2],
) -> SpectralVectorField {
    let n = grid.n();
    let mut c0 = Array2::zeros((n, n));
    let mut c1 = Array2::zeros((n, n));
    let two_pi = 2.0 * std::f64::consts::PI;
    for i in 0..n {
        for j in 0..n {
            let k1 = grid.freq(i);
            let k2 = grid.freq(j);
            if grid.is_nyquist(k1) || grid.is_nyquist(k2) {
                continue;
            }
            let d1 = Complex64::new(0.0, two_pi * k1 as f64);
            let d2 = Complex64::new(0.0, two_pi * k2 as f64);
            c0[(i, j)] = d1 * fh[0][0][(i, j)] + d2 * fh[0][1][(i, j)];
            c1[(i, j)] = d1 * fh[1][0][(i, j)] + d2 * fh[1][1][(i, j)];
        }
    }
    SpectralVectorField::from_coeffs(grid, [c0, c1], false)
}

/// Cauchy-Schwarz lattice bound for the heat smoothing estimate on
/// mean-free data: `||e^{t Delta} f||_inf <= (sum_{k != 0} e^{-8 pi^2 |k|^2 t})^{1/2} ||f||_2`
/// over the grid's truncated frequency set.
pub fn heat_lattice_bound(grid: TorusGrid, t: f64) -> f64 {
    let n = grid.n();
    let c = 8.0 * std::f64::consts::PI * std::f64::consts::PI * t;
    let mut acc = crate::norms::Compensated::new();
    for i in 0..n {
        for j in 0..n {
            let k1 = grid.freq(i) as f64;
            let k2 = grid.freq(j) as f64;
            let ksq = k1 * k1 + k2 * k2;
            if ksq > 0.0 {
                acc.add((-c * ksq).exp());
            }
        }
    }
    acc.value().sqrt()
}

/// 2/3-rule mask: keep mode `k` iff `3 |k_i| < n` on both axes.
pub(crate) fn keep_mode_23(grid: TorusGrid, k1: i64, k2: i64) -> bool {
    let n = grid.n() as i64;
    3 * k1.abs() < n && 3 * k2.abs() < n
}

/// Zero the top third of modes in each direction (aliasing-prone band).
pub fn dealias_23(v: &SpectralVectorField) -> SpectralVectorField {
    let grid = v.grid();
    let n = grid.n();
    let mut out = v.clone();
    for i in 0..n {
        for j in 0..n {
            if !keep_mode_23(grid, grid.freq(i), grid.freq(j)) {
                out.coeffs[0][(i, j)] = Complex64::default();
                out.coeffs[1][(i, j)] = Complex64::default();
            }
        }
    }
    out
}

pub(crate) fn dealias_spectral_tensor(grid: TorusGrid, fh: &mut [[Array2<Complex64>; 2]; 2]) {
    let n = grid.n();
    for i in 0..n {
        for j in 0..n {
            if !keep_mode_23(grid, grid.freq(i), grid.freq(j)) {
                for row in fh.iter_mut() {
                    for c in row.iter_mut() {
                        c[(i, j)] = Complex64::default();
                    }
                }
            }
        }
    }
}
