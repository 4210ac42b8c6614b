//! Conservative discretization of the Ter-Krikorov problem and the Newton
//! and continuation drivers built on it.

mod continuation;
mod diagnostics;
mod discretization;
mod manufactured;
mod newton;

pub use continuation::{branch_continuation, density_continuation, BranchOptions, BranchRecord, DensityRecord};
pub use diagnostics::{diagnostics, Check, Diagnostics};
pub use discretization::{Discretization, Linearization};
pub use manufactured::{manufactured_source, Jet, ManufacturedSolution};
pub use newton::{newton_solve, NewtonOptions, SolveReport};

use crate::grid::GridError;
use crate::linear::LinearError;
use crate::spectrum::SpectrumError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error("stagnation in cell ({i}, {j}): 1 + w_zeta = {margin}")]
    Stagnation { i: usize, j: usize, margin: f64 },
    #[error(transparent)]
    Linear(#[from] LinearError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error("field and discretization use different grids")]
    GridMismatch,
    #[error("source has {found} entries, expected {expected}")]
    SourceLength { expected: usize, found: usize },
    #[error("manufactured sources need a density without interfaces")]
    LayeredSource,
    #[error("amplitude {amplitude} must lie in (0, {cap}]")]
    Amplitude { amplitude: f64, cap: f64 },
    #[error("continuation stayed on the trivial branch (sup |w| = {sup})")]
    TrivialBranch { sup: f64 },
    #[error("continuation failed at amplitude {amplitude} after {halvings} step halvings")]
    BranchStalled { amplitude: f64, halvings: usize },
}
