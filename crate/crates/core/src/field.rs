//! Velocity and tensor fields in physical and spectral representation.
//!
//! Spectral coefficients follow the Fourier-series convention on the unit
//! torus: `f(x) = sum_k fhat(k) exp(2 pi i k.x)`, so the forward transform
//! carries the `1/n^2` factor and Parseval reads
//! `||f||_2^2 = sum_k |fhat(k)|^2`.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::{fft2, Direction};
use crate::grid::TorusGrid;

/// Real velocity field sampled on the grid.
#[derive(Debug, Clone)]
pub struct PhysicalVectorField {
    grid: TorusGrid,
    pub components: [Array2<f64>; 2],
}

/// Fourier coefficients of a real velocity field.
///
/// The `divfree` tag marks fields known to satisfy `k . vhat(k) = 0`; it is
/// set by the Leray projector and by constructors that build divergence-free
/// data exactly. Projection short-circuits on tagged fields, which makes it
/// bitwise idempotent.
#[derive(Debug, Clone)]
pub struct SpectralVectorField {
    grid: TorusGrid,
    pub coeffs: [Array2<Complex64>; 2],
    divfree: bool,
}

/// Real 2x2 tensor field (e.g. `v (x) v`) sampled on the grid.
#[derive(Debug, Clone)]
pub struct PhysicalTensorField {
    grid: TorusGrid,
    pub components: [[Array2<f64>; 2]; 2],
}

impl PhysicalVectorField {
    pub fn new(grid: TorusGrid, components: [Array2<f64>; 2]) -> Self {
        let n = grid.n();
        for c in &components {
            assert_eq!(c.dim(), (n, n), "component shape must match the grid");
        }
        Self { grid, components }
    }

    pub fn zero(grid: TorusGrid) -> Self {
        let n = grid.n();
        Self {
            grid,
            components: [Array2::zeros((n, n)), Array2::zeros((n, n))],
        }
    }

    /// Sample `f(x1, x2) -> [v1, v2]` at the grid points.
    pub fn from_fn(grid: TorusGrid, f: impl Fn(f64, f64) -> [f64; 2]) -> Self {
        let n = grid.n();
        let mut c0 = Array2::zeros((n, n));
        let mut c1 = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                let v = f(grid.point(i), grid.point(j));
                c0[(i, j)] = v[0];
                c1[(i, j)] = v[1];
            }
        }
        Self::new(grid, [c0, c1])
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn all_finite(&self) -> bool {
        self.components
            .iter()
            .all(|c| c.iter().all(|x| x.is_finite()))
    }

    /// Pointwise Euclidean magnitude as a scalar field.
    pub fn magnitude(&self) -> Array2<f64> {
        let [a, b] = &self.components;
        let mut out = a * a;
        out += &(b * b);
        out.mapv_inplace(f64::sqrt);
        out
    }
}

impl SpectralVectorField {
    pub fn zero(grid: TorusGrid) -> Self {
        let n = grid.n();
        Self {
            grid,
            coeffs: [Array2::zeros((n, n)), Array2::zeros((n, n))],
            divfree: true,
        }
    }

    pub(crate) fn from_coeffs(
        grid: TorusGrid,
        coeffs: [Array2<Complex64>; 2],
        divfree: bool,
    ) -> Self {
        let n = grid.n();
        for c in &coeffs {
            assert_eq!(c.dim(), (n, n), "coefficient shape must match the grid");
        }
        Self {
            grid,
            coeffs,
            divfree,
        }
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn is_divfree_tagged(&self) -> bool {
        self.divfree
    }

    pub(crate) fn set_divfree(&mut self, divfree: bool) {
        self.divfree = divfree;
    }

    /// Coefficient at integer frequency `k`, or zero outside the truncation.
    pub fn mode(&self, k: [i64; 2]) -> [Complex64; 2] {
        match (self.grid.index_of(k[0]), self.grid.index_of(k[1])) {
            (Some(i), Some(j)) => [self.coeffs[0][(i, j)], self.coeffs[1][(i, j)]],
            _ => [Complex64::default(); 2],
        }
    }

    pub fn set_mode(&mut self, k: [i64; 2], value: [Complex64; 2]) {
        let i = self.grid.index_of(k[0]).expect("k out of range");
        let j = self.grid.index_of(k[1]).expect("k out of range");
        self.coeffs[0][(i, j)] = value[0];
        self.coeffs[1][(i, j)] = value[1];
    }

    /// L2 norm through Parseval: sqrt of the coefficient energy.
    pub fn parseval_l2(&self) -> f64 {
        let mut acc = crate::norms::Compensated::new();
        for c in &self.coeffs {
            for z in c.iter() {
                acc.add(z.norm_sqr());
            }
        }
        acc.value().sqrt()
    }

    /// Largest relative violation of conjugate symmetry over paired modes.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.grid.n();
        let mut worst = 0.0_f64;
        let mut scale = 0.0_f64;
        for c in &self.coeffs {
            for i in 0..n {
                for j in 0..n {
                    let k = [self.grid.freq(i), self.grid.freq(j)];
                    scale = scale.max(c[(i, j)].norm());
                    if let (Some(ii), Some(jj)) =
                        (self.grid.index_of(-k[0]), self.grid.index_of(-k[1]))
                    {
                        worst = worst.max((c[(ii, jj)] - c[(i, j)].conj()).norm());
                    }
                }
            }
        }
        if scale == 0.0 {
            0.0
        } else {
            worst / scale
        }
    }

    /// Divergence residual `max_k |k . vhat(k)| / |k|`, normalized by the
    /// largest coefficient magnitude. Zero for exactly solenoidal fields.
    pub fn divergence_residual(&self) -> f64 {
        let n = self.grid.n();
        let mut worst = 0.0_f64;
        let mut scale = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                let k1 = self.grid.freq(i) as f64;
                let k2 = self.grid.freq(j) as f64;
                let v1 = self.coeffs[0][(i, j)];
                let v2 = self.coeffs[1][(i, j)];
                scale = scale.max(v1.norm().max(v2.norm()));
                let ksq = k1 * k1 + k2 * k2;
                if ksq > 0.0 {
                    worst = worst.max((v1 * k1 + v2 * k2).norm() / ksq.sqrt());
                }
            }
        }
        if scale == 0.0 {
            0.0
        } else {
            worst / scale
        }
    }

    pub fn check_divfree(&self, tol: f64) -> Result<()> {
        if self.divfree {
            return Ok(());
        }
        let residual = self.divergence_residual();
        if residual <= tol {
            Ok(())
        } else {
            Err(Error::NotDivergenceFree { residual, tol })
        }
    }

    /// `self + scale * other`; the divfree tag survives only if both carry it.
    pub fn add_scaled(&self, other: &Self, scale: f64) -> Self {
        assert_eq!(self.grid, other.grid);
        let coeffs = [
            &self.coeffs[0] + &(&other.coeffs[0] * Complex64::new(scale, 0.0)),
            &self.coeffs[1] + &(&other.coeffs[1] * Complex64::new(scale, 0.0)),
        ];
        Self::from_coeffs(self.grid, coeffs, self.divfree && other.divfree)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add_scaled(other, -1.0)
    }

    pub fn scaled(&self, scale: f64) -> Self {
        let s = Complex64::new(scale, 0.0);
        Self::from_coeffs(
            self.grid,
            [&self.coeffs[0] * s, &self.coeffs[1] * s],
            self.divfree,
        )
    }
}

impl PhysicalTensorField {
    pub fn new(grid: TorusGrid, components: [[Array2<f64>; 2]; 2]) -> Self {
        let n = grid.n();
        for row in &components {
            for c in row {
                assert_eq!(c.dim(), (n, n), "component shape must match the grid");
            }
        }
        Self { grid, components }
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    /// Outer product `(v (x) v)_{ij} = v_i v_j`.
    pub fn outer(v: &PhysicalVectorField) -> Self {
        Self::outer_pair(v, v)
    }

    pub fn outer_pair(a: &PhysicalVectorField, b: &PhysicalVectorField) -> Self {
        assert_eq!(a.grid, b.grid);
        let c = |i: usize, j: usize| &a.components[i] * &b.components[j];
        Self::new(a.grid, [[c(0, 0), c(0, 1)], [c(1, 0), c(1, 1)]])
    }

    pub fn all_finite(&self) -> bool {
        self.components
            .iter()
            .flatten()
            .all(|c| c.iter().all(|x| x.is_finite()))
    }
}

/// Forward transform of a real velocity field; carries the `1/n^2` factor so
/// a constant field `(c, 0)` maps to coefficient `c` at `k = 0`.
pub fn to_spectral(f: &PhysicalVectorField) -> SpectralVectorField {
    let grid = f.grid();
    let coeffs = [
        forward_scalar(grid, &f.components[0]),
        forward_scalar(grid, &f.components[1]),
    ];
    SpectralVectorField::from_coeffs(grid, coeffs, false)
}

/// Inverse transform back to grid samples; imaginary parts (rounding noise
/// for Hermitian inputs) are discarded.
pub fn to_physical(f: &SpectralVectorField) -> PhysicalVectorField {
    let grid = f.grid();
    PhysicalVectorField::new(
        grid,
        [
            inverse_scalar(&f.coeffs[0]),
            inverse_scalar(&f.coeffs[1]),
        ],
    )
}

pub(crate) fn forward_scalar(grid: TorusGrid, f: &Array2<f64>) -> Array2<Complex64> {
    let n = grid.n();
    let mut buf = f.mapv(|x| Complex64::new(x, 0.0));
    fft2(&mut buf, Direction::Forward);
    let scale = Complex64::new(1.0 / (n * n) as f64, 0.0);
    buf.mapv_inplace(|z| z * scale);
    buf
}

pub(crate) fn inverse_scalar(c: &Array2<Complex64>) -> Array2<f64> {
    let mut buf = c.clone();
    fft2(&mut buf, Direction::Inverse);
    buf.mapv(|z| z.re)
}

pub(crate) fn tensor_to_spectral(f: &PhysicalTensorField) -> [[Array2<Complex64>; 2]; 2] {
    let g = f.grid();
    [
        [
            forward_scalar(g, &f.components[0][0]),
            forward_scalar(g, &f.components[0][1]),
        ],
        [
            forward_scalar(g, &f.components[1][0]),
            forward_scalar(g, &f.components[1][1]),
        ],
    ]
}
