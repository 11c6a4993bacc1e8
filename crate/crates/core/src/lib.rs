//! Exact rotational self-similar solutions of the isentropic compressible
//! Euler equations in two and three dimensions.
//!
//! The solution family is `rho = f(s) / (a² b)` with the linear velocity
//! `u = (a'/a x - xi/a² y, xi/a² x + a'/a y, b'/b z)`, where the scale
//! factors `a(t)`, `b(t)` obey the Emden system and `f` is the density
//! profile in the self-similar variable `s = (x²+y²)/a² + z²/b²`.
//!
//! Modules:
//! - [`params`], [`profile`], [`similarity`]: constants and the profile `f(s)`.
//! - [`emden`]: the Emden ODEs, their first integrals and the integrator.
//! - [`fields`]: pointwise evaluation of density, velocity and pressure.
//! - [`verification`]: finite-difference residuals and mass quadrature.
//! - [`classification`]: blowup/global decision table and periodicity checks.
//! - [`config`], [`run`]: the batch front end behind the `rotsol` binary.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classification;
pub mod config;
pub mod emden;
mod error;
pub mod fields;
pub mod ode;
pub mod params;
pub mod profile;
pub mod run;
pub mod similarity;
pub mod verification;

pub use error::{Error, Result};
pub use params::PhysParams;
pub use profile::DensityProfile;
