//! Pseudo-spectral toolkit for the incompressible Navier-Stokes equations on
//! the unit torus, built around the mild (Duhamel) formulation.
//!
//! The crate provides four layers:
//!
//! - [`grid`], [`field`], [`ops`], [`norms`]: the spectral substrate — torus
//!   grids, FFT-backed field transforms, the Leray projector, heat semigroup,
//!   tensor divergence, and grid-quadrature norms;
//! - [`oseen`]: exact spectral synthesis of the periodic kernel of
//!   `e^{t Delta} P div`, its L1/Linf norm profiles, and the empirical
//!   kernel constant `C_hat`;
//! - [`lorentz`]: decreasing rearrangements, segment-exact Lorentz norms,
//!   and the embedding / product inequality checks;
//! - [`solver`], [`diagnostics`]: Duhamel time stepping with exact discrete
//!   restarts, the smoothing functional `M(delta)`, the Beta-integral
//!   quadrature, the Volterra inequality check, and the short-time L2
//!   stability experiment.
//!
//! # Conventions
//!
//! Unit-volume torus `[0,1)^2`, Fourier basis `exp(2 pi i k.x)` over the
//! integer lattice, Laplacian multiplier `-4 pi^2 |k|^2`, forward transforms
//! carrying the `1/n^2` factor, Nyquist modes zeroed in odd multipliers,
//! Frobenius magnitudes for tensors. All reported constants depend on these
//! choices; [`convention`] returns the block that output files embed.

pub mod diagnostics;
pub mod error;
pub mod fft;
pub mod field;
pub mod grid;
pub mod lorentz;
pub mod norms;
pub mod ops;
pub mod oseen;
pub mod solver;

pub use error::{Error, Result};
pub use field::{
    to_physical, to_spectral, PhysicalTensorField, PhysicalVectorField, SpectralVectorField,
};
pub use grid::TorusGrid;

/// The normalization and norm conventions every reported constant depends on,
/// as serializable key/value pairs for embedding in output files.
pub fn convention() -> Vec<(&'static str, &'static str)> {
    vec![
        ("torus", "unit square [0,1)^2, total measure 1"),
        ("fourier_basis", "exp(2*pi*i*k.x), integer lattice"),
        ("coefficients", "forward transform carries 1/n^2"),
        ("laplacian_multiplier", "-4*pi^2*|k|^2"),
        ("nyquist", "k = -n/2 zeroed in derivative/projection multipliers"),
        ("tensor_magnitude", "frobenius"),
        ("norm_quadrature", "rectangle rule on the periodic grid"),
    ]
}
