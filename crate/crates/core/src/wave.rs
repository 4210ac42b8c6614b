//! The Ter-Krikorov unknown `w` on a strip grid.

use alloc::vec::Vec;

use crate::grid::StripGrid;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WaveError {
    #[error("expected {expected} values, found {found}")]
    Length { expected: usize, found: usize },
    #[error("bed value at column {column} is {value}, expected 0")]
    Bed { column: usize, value: f64 },
    #[error("non-finite value at node ({i}, {j})")]
    NonFinite { i: usize, j: usize },
}

/// Nodal values of `w` (bed row included) with the Richardson number and
/// provenance of the density.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveField {
    grid: StripGrid,
    values: Vec<f64>,
    pub lambda: f64,
    pub density_id: u64,
    /// Penalization scale in force when the field was produced.
    pub penalization: Option<f64>,
}

impl WaveField {
    pub fn zeros(grid: StripGrid, lambda: f64, density_id: u64) -> Self {
        let values = alloc::vec![0.0; grid.node_count()];
        Self { grid, values, lambda, density_id, penalization: None }
    }

    /// Takes all nodal values in row-major order, bed row first.
    pub fn from_values(grid: StripGrid, values: Vec<f64>, lambda: f64, density_id: u64) -> Result<Self, WaveError> {
        if values.len() != grid.node_count() {
            return Err(WaveError::Length { expected: grid.node_count(), found: values.len() });
        }
        for (k, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(WaveError::NonFinite { i: k % grid.nx(), j: k / grid.nx() });
            }
        }
        if let Some(column) = (0..grid.nx()).find(|&i| values[i] != 0.0) {
            return Err(WaveError::Bed { column, value: values[column] });
        }
        Ok(Self { grid, values, lambda, density_id, penalization: None })
    }

    /// Samples `f(xi, zeta)` at the nodes and zeroes the bed row.
    pub fn from_fn(grid: StripGrid, lambda: f64, density_id: u64, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut values = alloc::vec![0.0; grid.node_count()];
        for j in 1..grid.rows().len() {
            for i in 0..grid.nx() {
                values[grid.node(i, j)] = f(grid.xi(i), grid.rows()[j]);
            }
        }
        Self { grid, values, lambda, density_id, penalization: None }
    }

    pub fn grid(&self) -> &StripGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.node(i, j)]
    }

    /// Values above the bed, in unknown order.
    pub fn unknowns(&self) -> &[f64] {
        &self.values[self.grid.nx()..]
    }

    pub fn set_unknowns(&mut self, unknowns: &[f64]) {
        let nx = self.grid.nx();
        self.values[nx..].copy_from_slice(unknowns);
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest nodal difference to another field on the same grid.
    pub fn sup_distance(&self, other: &WaveField) -> f64 {
        self.values.iter().zip(&other.values).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Piecewise-linear value in `zeta` at column `i`.
    pub fn column_value(&self, i: usize, zeta: f64) -> f64 {
        let rows = self.grid.rows();
        let j = rows.partition_point(|&z| z <= zeta).clamp(1, rows.len() - 1);
        let t = (zeta - rows[j - 1]) / (rows[j] - rows[j - 1]);
        (1.0 - t) * self.at(i, j - 1) + t * self.at(i, j)
    }

    /// Same field on another grid with identical columns, interpolated
    /// linearly in `zeta` column by column.
    pub fn resample_rows(&self, grid: StripGrid) -> Self {
        assert_eq!(grid.nx(), self.grid.nx());
        let mut values = alloc::vec![0.0; grid.node_count()];
        for j in 1..grid.rows().len() {
            let zeta = grid.rows()[j];
            for i in 0..grid.nx() {
                values[grid.node(i, j)] = self.column_value(i, zeta);
            }
        }
        Self { grid, values, lambda: self.lambda, density_id: self.density_id, penalization: self.penalization }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bed_row_is_zero() {
        let grid = StripGrid::uniform(16, 4, 4.0).unwrap();
        let w = WaveField::from_fn(grid.clone(), 0.5, 1, |x, z| x + z + 2.0);
        assert!((0..16).all(|i| w.at(i, 0) == 0.0));
        assert_eq!(w.at(8, 4), 2.0);
        let mut bad = w.values().to_vec();
        bad[3] = 1.0;
        assert!(matches!(WaveField::from_values(grid, bad, 0.5, 1), Err(WaveError::Bed { column: 3, .. })));
    }

    #[test]
    fn resampling_is_exact_for_linear_columns() {
        let grid = StripGrid::uniform(16, 4, 4.0).unwrap();
        let w = WaveField::from_fn(grid.clone(), 0.5, 1, |x, z| (1.0 + z) * (1.0 + x * x));
        let finer = StripGrid::new(16, 4.0, alloc::vec![-1.0, -0.7, -0.4, -0.1, 0.0], &[]).unwrap();
        let resampled = w.resample_rows(finer.clone());
        let direct = WaveField::from_fn(finer, 0.5, 1, |x, z| (1.0 + z) * (1.0 + x * x));
        assert!(resampled.sup_distance(&direct) < 1e-14);
    }
}
