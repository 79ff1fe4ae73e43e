//! Numerical laboratory for scale-invariant Strichartz estimates on
//! rectangular tori.
//!
//! The crate evaluates the frequency-localized Schrödinger kernel, checks its
//! dispersive and off-major-arc bounds, measures space-time Lebesgue norms of
//! free evolutions against the scale-invariant exponent, provides the
//! arithmetic toolkit (Dirichlet approximation, Farey atoms, dyadic divisor
//! counts) those checks rest on, and integrates the energy-critical NLS.

// `!(x > 0.0)` style guards are intentional: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arithmetic;
pub mod dispersive;
pub mod error;
pub mod io;
pub mod nls;
pub mod numerics;
pub mod propagator;
pub mod spectral;
pub mod strichartz;
pub mod torus;

pub use error::{Error, Result};
pub use propagator::{free_evolve, kernel_direct, kernel_grid, KernelEvaluation, SpaceTimeGrid};
pub use torus::{CutoffProfile, Dyadic, FrequencyField, LpMode, Sobolev, TorusGeometry};

/// Upper bound on the number of grid cells an operation may allocate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget(Option<u128>);

impl Budget {
    pub const DEFAULT_CELLS: u128 = 1 << 28;

    pub fn new(cells: u128) -> Self {
        Self(Some(cells))
    }

    pub fn unlimited() -> Self {
        Self(None)
    }

    pub fn check(self, requested: u128) -> Result<()> {
        match self.0 {
            Some(budget) if requested > budget => Err(Error::Budget { requested, budget }),
            _ => Ok(()),
        }
    }
}

impl Default for Budget {
    fn default() -> Self {
        Self::new(Self::DEFAULT_CELLS)
    }
}

/// Crate version, embedded in experiment outputs.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
