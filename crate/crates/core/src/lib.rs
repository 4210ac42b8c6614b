//! Steady periodic stratified water waves in Ter-Krikorov variables.
//!
//! The crate is `no_std` and only needs an allocator. It covers the density
//! model, the derived Bernoulli data, the critical spectrum, a conservative
//! discretization of the quasilinear elliptic problem with Newton
//! continuation, and the transforms back to physical fields.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bernoulli;
pub mod density;
pub mod fields;
pub mod flux;
pub mod grid;
pub mod linear;
pub mod quadrature;
pub mod solver;
pub mod spectrum;
pub mod stratification;
pub mod study;
pub mod wave;

pub use density::{DensityError, DensityProfile, FlowParameters, ZetaMap};
pub use stratification::{RescaledDensity, Side, Stratification};
