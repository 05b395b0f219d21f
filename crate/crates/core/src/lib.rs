//! Littlewood-Paley analysis on the periodic grid: fractional multipliers, weighted
//! function-space quasi-norms, bilinear multipliers with paraproduct expansions, and
//! ratio checks of Leibniz-type and scattering estimates.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bilinear;
pub mod error;
pub mod grid_field;
pub mod harness;
pub mod littlewood_paley;
pub mod nikolskij;
pub mod scattering;
pub mod spaces;
pub mod weights;

pub use error::{Error, Result};
pub use grid_field::{Field, Grid};
