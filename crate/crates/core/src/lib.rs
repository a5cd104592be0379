//! Constructive machinery for Bernstein widths of anisotropic smoothness
//! classes: dyadic piecewise-polynomial projectors, shift-averaged moduli
//! with the Nikolskii/Besov-type norms built on them, exact
//! finite-dimensional widths of diagonal ellipsoids, and the upper/lower
//! rate pipelines that reproduce the asymptotic width exponents at desk
//! scale.
//!
//! The `bernwidths` binary exposes the rate sweeps (`rates`), ellipsoid
//! width reports (`widths`), the invariant suites (`verify`) and norm
//! evaluation of catalog functions (`norm`).

pub mod asymptotics;
pub mod error;
pub mod fdwidths;
pub mod harness;
pub mod indexgrid;
pub mod moduli;
pub mod polyspace;
pub mod projectors;
pub mod quad;

pub use error::{Error, Result};
