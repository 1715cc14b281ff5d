//! Trefftz discontinuous Galerkin solver for 2D quasi-periodic Helmholtz
//! scattering by diffraction gratings.
//!
//! The discrete space consists of plane waves `exp(i kappa d_j . x)` on each
//! element of a quasi-periodic mesh of the periodic cell `(0,L) x (-H,H)`.
//! Radiation conditions on the top and bottom boundaries are imposed through
//! truncated Dirichlet-to-Neumann (DtN) operators, diagonal in the
//! quasi-periodic Fourier basis. All system entries are closed-form segment
//! integrals of complex exponentials; no quadrature is used in assembly.
//!
//! All numerical kernels are generic over the real scalar type via the
//! [`scalar::Real`] trait; `f64` aliases for the main types are exported at
//! the crate root.

pub mod analysis;
pub mod assembly;
pub mod basis;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod oracles;
pub mod scalar;
pub mod scenario;
pub mod solver;
pub mod spectral;

pub use error::Error;
pub use scalar::Real;

/// Complex scalar over a generic real type.
pub type Cplx<R> = num_complex::Complex<R>;

/// Double-precision complex scalar.
pub type C64 = num_complex::Complex<f64>;
/// Single-precision complex scalar.
pub type C32 = num_complex::Complex<f32>;

pub type ProblemConfig64 = geometry::ProblemConfig<f64>;
pub type Mesh64 = geometry::Mesh<f64>;
pub type SpectralLadder64 = spectral::SpectralLadder<f64>;
pub type GlobalBasis64 = basis::GlobalBasis<f64>;
pub type TdgSystem64 = assembly::TdgSystem<f64>;
pub type DiscreteSolution64 = solver::DiscreteSolution<f64>;
