//! Orr–Sommerfeld solvers and resolvent diagnostics for shear flows of
//! Prandtl type on the half-plane.
//!
//! The crate is organised bottom-up: [`profile`] and [`grid`] provide the
//! background flow and the discretisation, [`helmholtz`], [`airy`],
//! [`modified_airy`] and [`rayleigh`] are the scalar building blocks, [`os`]
//! assembles the fourth-order solvers and the boundary corrector, and [`ns`]
//! maps everything back to Fourier modes of the steady Navier–Stokes
//! perturbation problem.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod airy;
pub mod cli;
pub mod error;
pub mod estimates;
pub mod grid;
pub mod helmholtz;
pub mod linalg;
pub mod modified_airy;
pub mod ns;
pub mod os;
pub mod par;
pub mod profile;
pub mod rayleigh;
pub mod report;

#[cfg(test)]
mod oracle_tests;
#[cfg(test)]
mod property_tests;

pub use error::{Error, Result};
pub use grid::{Field, Grid, GridKind};
pub use num_complex::Complex64 as C64;
pub use profile::{make_profile, ProfileKind, ShearProfile};
