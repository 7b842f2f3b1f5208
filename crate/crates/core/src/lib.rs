//! Mild solutions of the incompressible Navier-Stokes equations on the
//! 3-torus, computed by Picard iteration on the Duhamel formulation, together
//! with a scalar majorant whose Fourier coefficients bound the velocity's
//! coefficients with an extra `exp(-nu t |k| / 2)` decay factor.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certification;
pub mod conv;
pub mod error;
pub mod field;
pub mod grid;
pub mod harness;
pub mod majorant;
pub mod mild;
pub mod operators;
pub mod wave;

pub use error::{Error, Result};
pub use field::{SpectralScalarField, SpectralVectorField};
pub use wave::WaveVector;
