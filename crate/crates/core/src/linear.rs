//! Sparse direct solves with a fixed sparsity pattern.

use alloc::vec::Vec;

use faer::prelude::*;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{Argsort, Pair, SparseColMat, SymbolicSparseColMat};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinearError {
    #[error("sparse structure could not be built: {0}")]
    Structure(alloc::string::String),
    #[error("sparse factorization failed: {0}")]
    Factorization(alloc::string::String),
}

/// Square sparsity pattern given as a list of (row, column) entries; the
/// list may repeat entries, whose values are summed.
pub struct SparsePattern {
    n: usize,
    entries: Vec<(usize, usize)>,
    symbolic: SymbolicSparseColMat<usize>,
    argsort: Argsort<usize>,
    lu: SymbolicLu<usize>,
}

impl SparsePattern {
    pub fn new(n: usize, entries: Vec<(usize, usize)>) -> Result<Self, LinearError> {
        let pairs: Vec<Pair<usize, usize>> = entries.iter().map(|&(row, col)| Pair { row, col }).collect();
        let (symbolic, argsort) = SymbolicSparseColMat::try_new_from_indices(n, n, &pairs)
            .map_err(|e| LinearError::Structure(alloc::format!("{e:?}")))?;
        let lu = SymbolicLu::try_new(symbolic.as_ref()).map_err(|e| LinearError::Structure(alloc::format!("{e:?}")))?;
        Ok(Self { n, entries, symbolic, argsort, lu })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[(usize, usize)] {
        &self.entries
    }

    /// Numeric factorization for values listed in pattern order.
    pub fn factor(&self, values: &[f64]) -> Result<Factored<'_>, LinearError> {
        assert_eq!(values.len(), self.entries.len());
        let matrix = SparseColMat::new_from_argsort(self.symbolic.clone(), &self.argsort, values)
            .map_err(|e| LinearError::Structure(alloc::format!("{e:?}")))?;
        let lu = Lu::try_new_with_symbolic(self.lu.clone(), matrix.as_ref())
            .map_err(|e| LinearError::Factorization(alloc::format!("{e:?}")))?;
        Ok(Factored { pattern: self, values: values.to_vec(), lu })
    }
}

/// A factorized matrix together with its values for residual checks.
pub struct Factored<'a> {
    pattern: &'a SparsePattern,
    values: Vec<f64>,
    lu: Lu<usize, f64>,
}

impl Factored<'_> {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = alloc::vec![0.0; self.pattern.n];
        for (&(row, col), v) in self.pattern.entries.iter().zip(&self.values) {
            y[row] += v * x[col];
        }
        y
    }

    fn raw_solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut b = Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
        self.lu.solve_in_place(b.as_mut());
        (0..rhs.len()).map(|i| b[(i, 0)]).collect()
    }

    /// Solves `A x = rhs` with one step of iterative refinement.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = self.raw_solve(rhs);
        let ax = self.apply(&x);
        let defect: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let correction = self.raw_solve(&defect);
        x.iter_mut().zip(&correction).for_each(|(x, c)| *x += c);
        x
    }
}
