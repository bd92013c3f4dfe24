//! Pseudo-spectral harmonic analysis and a mild-solution Navier-Stokes
//! solver on the periodic torus `[0, 2*pi)^d`, `d = 2, 3`.
//!
//! The toolkit provides, in dependency order:
//!
//! - grids, coefficient-space fields, and exact spectral multipliers
//!   (Leray projection, heat semigroup, derivative tensors);
//! - a dyadic frequency decomposition with an exact discrete partition of
//!   unity, and the Besov / mixed time-space norms built from it;
//! - low/high frequency paraproducts whose two-term splitting reproduces
//!   pointwise products exactly at full resolution;
//! - the Duhamel (Oseen) integral with exponential-integrator quadrature,
//!   and Picard iteration for mild solutions of the incompressible
//!   Navier-Stokes system with unit viscosity;
//! - an experiment harness measuring smallness, regularity, uniqueness,
//!   and blow-up indicators on solver runs, against constants frozen by a
//!   calibration pass.
//!
//! Conventions: coefficients are Fourier-series coefficients
//! (`f(x) = sum_k fhat(k) exp(i k.x)`); wavenumbers per axis run over
//! `{-N/2+1, ..., N/2}`; Lebesgue norms use the collocation quadrature with
//! volume element `(2*pi/N)^d`; viscosity is fixed to 1; first-derivative
//! symbols zero the Nyquist wavenumber so real fields stay real.

pub mod calibrate;
pub mod config;
pub mod constants;
pub mod corpus;
pub mod criteria;
pub mod dyadic;
pub mod error;
mod fft;
pub mod field;
pub mod grid;
pub mod io;
pub mod norms;
pub mod ops;
pub mod paraproduct;
pub mod report;
pub mod solver;

pub use error::{Error, Result};
pub use field::{FourierField, TensorField, TensorTrace, TimeTrace};
pub use grid::TorusGrid;
