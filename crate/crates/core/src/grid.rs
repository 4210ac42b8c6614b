//! Tensor grids on the periodic strip `[-L/d, L/d) × [-1, 0]`.

use alloc::vec::Vec;

/// Relative tolerance used to match grid rows with interfaces.
const ROW_MATCH: f64 = 1e-12;
/// Largest allowed ratio between adjacent row spacings.
const MAX_SPACING_RATIO: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GridError {
    #[error("nx must be even and at least 16, found {nx}")]
    Columns { nx: usize },
    #[error("need at least one interval per layer ({layers} layers, {intervals} intervals)")]
    TooCoarse { layers: usize, intervals: usize },
    #[error("rows must increase strictly from -1 to 0 (row {row})")]
    Rows { row: usize },
    #[error("adjacent spacing ratio {ratio} at row {row} exceeds 4")]
    SpacingRatio { row: usize, ratio: f64 },
    #[error("interface at zeta = {zeta} is not a grid row")]
    NotAligned { zeta: f64 },
    #[error("half-period must be positive, found {half_period}")]
    HalfPeriod { half_period: f64 },
}

/// Splits `[-1, 0]` into `m` intervals with a node on every interface:
/// intervals are shared out in proportion to layer thickness (largest
/// remainder, at least one each) and spaced uniformly inside each layer.
pub fn partition(interfaces: &[f64], m: usize) -> Result<Vec<f64>, GridError> {
    let mut edges = Vec::with_capacity(interfaces.len() + 2);
    edges.push(-1.0);
    edges.extend_from_slice(interfaces);
    edges.push(0.0);
    let layers = edges.len() - 1;
    if m < layers {
        return Err(GridError::TooCoarse { layers, intervals: m });
    }
    let thickness: Vec<f64> = edges.windows(2).map(|w| w[1] - w[0]).collect();
    let spare = (m - layers) as f64;
    let ideal: Vec<f64> = thickness.iter().map(|t| t * spare).collect();
    let mut counts: Vec<usize> = ideal.iter().map(|x| 1 + *x as usize).collect();
    let mut assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..layers).collect();
    order.sort_by(|&a, &b| {
        let ra = ideal[a] - (ideal[a] as usize) as f64;
        let rb = ideal[b] - (ideal[b] as usize) as f64;
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    let mut k = 0;
    while assigned < m {
        counts[order[k % layers]] += 1;
        assigned += 1;
        k += 1;
    }
    let mut rows = Vec::with_capacity(m + 1);
    for layer in 0..layers {
        let (a, b) = (edges[layer], edges[layer + 1]);
        for step in 0..counts[layer] {
            rows.push(a + (b - a) * step as f64 / counts[layer] as f64);
        }
    }
    rows.push(0.0);
    Ok(rows)
}

/// Periodic columns times interface-aligned rows.
#[derive(Debug, Clone, PartialEq)]
pub struct StripGrid {
    nx: usize,
    half_period: f64,
    rows: Vec<f64>,
}

impl StripGrid {
    /// Grid with explicit rows; every interface must be one of the rows.
    pub fn new(nx: usize, half_period: f64, rows: Vec<f64>, interfaces: &[f64]) -> Result<Self, GridError> {
        if nx < 16 || !nx.is_multiple_of(2) {
            return Err(GridError::Columns { nx });
        }
        if !(half_period > 0.0) {
            return Err(GridError::HalfPeriod { half_period });
        }
        if rows.len() < 2 || rows[0] != -1.0 {
            return Err(GridError::Rows { row: 0 });
        }
        if rows[rows.len() - 1] != 0.0 {
            return Err(GridError::Rows { row: rows.len() - 1 });
        }
        for row in 1..rows.len() {
            if !(rows[row] > rows[row - 1]) {
                return Err(GridError::Rows { row });
            }
        }
        for row in 1..rows.len() - 1 {
            let below = rows[row] - rows[row - 1];
            let above = rows[row + 1] - rows[row];
            let ratio = (below / above).max(above / below);
            if ratio > MAX_SPACING_RATIO * (1.0 + 1e-12) {
                return Err(GridError::SpacingRatio { row, ratio });
            }
        }
        let grid = Self { nx, half_period, rows };
        for &zeta in interfaces {
            if grid.row_of(zeta).is_none() {
                return Err(GridError::NotAligned { zeta });
            }
        }
        Ok(grid)
    }

    /// `nz` intervals distributed over the layers bounded by `interfaces`.
    pub fn aligned(nx: usize, nz: usize, half_period: f64, interfaces: &[f64]) -> Result<Self, GridError> {
        let rows = partition(interfaces, nz)?;
        Self::new(nx, half_period, rows, interfaces)
    }

    pub fn uniform(nx: usize, nz: usize, half_period: f64) -> Result<Self, GridError> {
        Self::aligned(nx, nz, half_period, &[])
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    /// Number of row intervals.
    pub fn nz(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn half_period(&self) -> f64 {
        self.half_period
    }

    pub fn rows(&self) -> &[f64] {
        &self.rows
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_period / self.nx as f64
    }

    pub fn xi(&self, i: usize) -> f64 {
        -self.half_period + self.dx() * i as f64
    }

    /// Spacing between rows `j` and `j + 1`.
    pub fn dz(&self, j: usize) -> f64 {
        self.rows[j + 1] - self.rows[j]
    }

    /// Column holding the mirror image `-xi` of column `i`.
    pub fn mirror(&self, i: usize) -> usize {
        (self.nx - i) % self.nx
    }

    /// Column index of `xi = 0`.
    pub fn crest(&self) -> usize {
        self.nx / 2
    }

    /// Row index matching `zeta` up to a relative tolerance.
    pub fn row_of(&self, zeta: f64) -> Option<usize> {
        let j = self.rows.partition_point(|&z| z < zeta);
        [j.saturating_sub(1), j, (j + 1).min(self.rows.len() - 1)]
            .into_iter()
            .find(|&k| k < self.rows.len() && (self.rows[k] - zeta).abs() <= ROW_MATCH)
    }

    /// Number of nodes including the bottom row.
    pub fn node_count(&self) -> usize {
        self.nx * self.rows.len()
    }

    /// Number of unknowns (the bottom row is fixed).
    pub fn unknown_count(&self) -> usize {
        self.nx * self.nz()
    }

    pub fn node(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// Unknown index of node `(i, j)` for `j >= 1`.
    pub fn unknown(&self, i: usize, j: usize) -> usize {
        (j - 1) * self.nx + i
    }

    /// Same columns, different rows.
    pub fn with_rows(&self, rows: Vec<f64>, interfaces: &[f64]) -> Result<Self, GridError> {
        Self::new(self.nx, self.half_period, rows, interfaces)
    }
}
