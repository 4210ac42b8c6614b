//! Height, velocity, stream function and pressure reconstructed from a
//! Ter-Krikorov field.

use alloc::vec::Vec;

use crate::bernoulli::BernoulliData;
use crate::density::{DensityError, DensityProfile, FlowParameters, ParameterError, ZetaMap};
use crate::grid::StripGrid;
use crate::wave::{WaveError, WaveField};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FieldError {
    #[error(transparent)]
    Density(#[from] DensityError),
    #[error(transparent)]
    Parameters(#[from] ParameterError),
    #[error(transparent)]
    Wave(#[from] WaveError),
    #[error("field was computed for density {found:016x}, not {expected:016x}")]
    DensityMismatch { expected: u64, found: u64 },
    #[error("grid rows do not match the density interfaces")]
    Rows,
    #[error("stagnation at node ({i}, {j}): h_p = {h_p}")]
    Stagnation { i: usize, j: usize, h_p: f64 },
    #[error("stream function integration failed at depth y = {y}")]
    Integration { y: f64 },
    #[error("column {column} out of range")]
    Column { column: usize },
}

/// Parameters with gravity set so that `g d / c^2 = lambda` for the speed
/// the density determines.
pub fn implied_parameters(
    rho: &DensityProfile,
    params: &FlowParameters,
    lambda: f64,
) -> Result<FlowParameters, ParameterError> {
    let c = ZetaMap::new(rho).speed(params);
    FlowParameters::new(params.depth, lambda * c * c / params.depth, params.half_period, params.p_atm)
}

/// `h(q, p)` on the streamline-coordinate rectangle; rows are the streamlines
/// `p_j` matching the strip rows `zeta_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightField {
    grid: StripGrid,
    map: ZetaMap,
    params: FlowParameters,
    p_rows: Vec<f64>,
    /// Row index ranges `(first, last)` of each layer, bottom to top.
    layers: Vec<(usize, usize)>,
    values: Vec<f64>,
}

fn layer_ranges(grid: &StripGrid, map: &ZetaMap) -> Result<Vec<(usize, usize)>, FieldError> {
    let breaks = map.zeta_breaks();
    let mut rows = Vec::with_capacity(breaks.len());
    for &zeta in breaks {
        rows.push(grid.row_of(zeta).ok_or(FieldError::Rows)?);
    }
    Ok(rows.windows(2).map(|w| (w[0], w[1])).collect())
}

impl HeightField {
    /// Heights given on the strip grid; `p` rows follow from the density.
    pub fn new(
        grid: StripGrid,
        rho: &DensityProfile,
        params: &FlowParameters,
        values: Vec<f64>,
    ) -> Result<Self, FieldError> {
        params.validate()?;
        if values.len() != grid.node_count() {
            return Err(WaveError::Length { expected: grid.node_count(), found: values.len() }.into());
        }
        let map = ZetaMap::new(rho);
        let layers = layer_ranges(&grid, &map)?;
        let mut p_rows: Vec<f64> = grid.rows().iter().map(|&z| map.p_of_zeta(z)).collect::<Result<_, _>>()?;
        for (layer, &(first, _)) in layers.iter().enumerate() {
            p_rows[first] = rho.breakpoints()[layer];
        }
        p_rows[grid.nz()] = 0.0;
        Ok(Self { grid, map, params: *params, p_rows, layers, values })
    }

    pub fn grid(&self) -> &StripGrid {
        &self.grid
    }

    pub fn profile(&self) -> &DensityProfile {
        self.map.profile()
    }

    pub fn params(&self) -> &FlowParameters {
        &self.params
    }

    pub fn speed(&self) -> f64 {
        self.map.speed(&self.params)
    }

    pub fn p_rows(&self) -> &[f64] {
        &self.p_rows
    }

    pub fn layers(&self) -> &[(usize, usize)] {
        &self.layers
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.node(i, j)]
    }

    /// Horizontal coordinate `q = d xi` of column `i`.
    pub fn q(&self, i: usize) -> f64 {
        self.params.depth * self.grid.xi(i)
    }

    fn zeta_rows(&self) -> &[f64] {
        self.grid.rows()
    }

    /// `w = h/d - 1 - zeta` at a node.
    fn w_at(&self, i: usize, j: usize) -> f64 {
        self.at(i, j) / self.params.depth - 1.0 - self.zeta_rows()[j]
    }

    /// `w_zeta` at row `j` from within `layer`, by three-point differences
    /// that never reach across the layer boundary.
    fn w_zeta(&self, i: usize, j: usize, layer: usize) -> f64 {
        let (first, last) = self.layers[layer];
        let z = self.zeta_rows();
        let w = |k: usize| self.w_at(i, k);
        if last - first == 1 {
            return (w(last) - w(first)) / (z[last] - z[first]);
        }
        let (a, b, c) = if j == first {
            (first, first + 1, first + 2)
        } else if j == last {
            (last - 2, last - 1, last)
        } else {
            (j - 1, j, j + 1)
        };
        // Derivative at z[j] of the quadratic through the three points.
        let (za, zb, zc, x) = (z[a], z[b], z[c], z[j]);
        let la = ((x - zb) + (x - zc)) / ((za - zb) * (za - zc));
        let lb = ((x - za) + (x - zc)) / ((zb - za) * (zb - zc));
        let lc = ((x - za) + (x - zb)) / ((zc - za) * (zc - zb));
        la * w(a) + lb * w(b) + lc * w(c)
    }

    /// `h_q` by periodic centred differences.
    pub fn h_q(&self, i: usize, j: usize) -> f64 {
        let nx = self.grid.nx();
        let dq = self.params.depth * self.grid.dx();
        (self.at((i + 1) % nx, j) - self.at((i + nx - 1) % nx, j)) / (2.0 * dq)
    }

    /// `h_p = (1 + w_zeta) / (c sqrt(rho))` from within `layer`.
    pub fn h_p(&self, i: usize, j: usize, layer: usize) -> f64 {
        let rho = self.profile().value_in(layer, self.p_rows[j]);
        (1.0 + self.w_zeta(i, j, layer)) / (self.speed() * rho.sqrt())
    }

    /// Every (row, layer) pair; interface rows appear once per adjacent layer.
    pub fn layered_rows(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.layers.iter().enumerate().flat_map(|(layer, &(first, last))| (first..=last).map(move |j| (j, layer)))
    }

    /// `h(q_i, p)` from the cubic Hermite interpolant of the column.
    pub fn value_at(&self, i: usize, p: f64) -> f64 {
        let j = self.p_rows.partition_point(|&r| r <= p).clamp(1, self.p_rows.len() - 1) - 1;
        self.piece(i, j).basis(p).0
    }

    fn piece(&self, i: usize, j: usize) -> Hermite {
        let layer = self.layers.iter().position(|&(first, last)| first <= j && j < last).expect("row inside a layer");
        Hermite {
            p0: self.p_rows[j],
            p1: self.p_rows[j + 1],
            h0: self.at(i, j),
            h1: self.at(i, j + 1),
            s0: self.h_p(i, j, layer),
            s1: self.h_p(i, j + 1, layer),
        }
    }

    fn check_positive(&self) -> Result<(), FieldError> {
        for (j, layer) in self.layered_rows() {
            for i in 0..self.grid.nx() {
                let h_p = self.h_p(i, j, layer);
                if !(h_p > 0.0) {
                    return Err(FieldError::Stagnation { i, j, h_p });
                }
            }
        }
        Ok(())
    }
}

/// `h = d (w + zeta) + d` on the streamlines matching the strip rows.
pub fn w_to_height(w: &WaveField, rho: &DensityProfile, params: &FlowParameters) -> Result<HeightField, FieldError> {
    if w.density_id != rho.id() {
        return Err(FieldError::DensityMismatch { expected: rho.id(), found: w.density_id });
    }
    let grid = w.grid().clone();
    let d = params.depth;
    let mut values = alloc::vec![0.0; grid.node_count()];
    for j in 1..grid.rows().len() {
        let zeta = grid.rows()[j];
        for i in 0..grid.nx() {
            values[grid.node(i, j)] = d * (w.at(i, j) + zeta) + d;
        }
    }
    HeightField::new(grid, rho, params, values)
}

/// Inverse of [`w_to_height`]; `lambda` is taken from the parameters.
pub fn height_to_w(h: &HeightField) -> Result<WaveField, FieldError> {
    h.check_positive()?;
    let grid = h.grid().clone();
    let mut values = alloc::vec![0.0; grid.node_count()];
    for j in 1..grid.rows().len() {
        for i in 0..grid.nx() {
            values[grid.node(i, j)] = h.w_at(i, j);
        }
    }
    let c = h.speed();
    let lambda = h.params.gravity * h.params.depth / (c * c);
    Ok(WaveField::from_values(grid, values, lambda, h.profile().id())?)
}

/// Velocity sample at a node, taken from within one layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeSample {
    pub i: usize,
    pub j: usize,
    pub layer: usize,
    pub p: f64,
    pub x: f64,
    pub y: f64,
    pub u: f64,
    pub v: f64,
    /// Stream function `-p`.
    pub psi: f64,
    pub h_p: f64,
}

/// Velocities in the frame of the laboratory at every node, with the
/// physical position of the node.
#[derive(Debug, Clone, PartialEq)]
pub struct EulerianFields {
    pub speed: f64,
    pub nx: usize,
    /// Layer by layer, row by row, column by column.
    pub samples: Vec<NodeSample>,
    /// `(x, eta)` along the free surface.
    pub surface: Vec<(f64, f64)>,
}

impl EulerianFields {
    /// `∫ sqrt(rho) (u - c) dy` down column `i`, trapezoidal in `y` within
    /// each layer.
    pub fn mass_flux(&self, column: usize, rho: &DensityProfile) -> f64 {
        let mut total = 0.0;
        let column_samples: Vec<&NodeSample> = self.samples.iter().filter(|s| s.i == column).collect();
        for pair in column_samples.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if a.layer != b.layer {
                continue;
            }
            let fa = rho.value_in(a.layer, a.p).sqrt() * (a.u - self.speed);
            let fb = rho.value_in(b.layer, b.p).sqrt() * (b.u - self.speed);
            total += 0.5 * (fa + fb) * (b.y - a.y);
        }
        total
    }
}

/// `u = c - 1/(sqrt(rho) h_p)`, `v = -h_q / h_p`, positions `(q, h - d)`.
pub fn height_to_velocity(h: &HeightField) -> Result<EulerianFields, FieldError> {
    h.check_positive()?;
    let c = h.speed();
    let d = h.params.depth;
    let mut samples = Vec::new();
    for (j, layer) in h.layered_rows() {
        let p = h.p_rows[j];
        let root = h.profile().value_in(layer, p).sqrt();
        for i in 0..h.grid.nx() {
            let h_p = h.h_p(i, j, layer);
            samples.push(NodeSample {
                i,
                j,
                layer,
                p,
                x: h.q(i),
                y: h.at(i, j) - d,
                u: c - 1.0 / (root * h_p),
                v: -h.h_q(i, j) / h_p,
                psi: -p,
                h_p,
            });
        }
    }
    let top = h.grid.nz();
    let surface = (0..h.grid.nx()).map(|i| (h.q(i), h.at(i, top) - d)).collect();
    Ok(EulerianFields { speed: c, nx: h.grid.nx(), samples, surface })
}

/// Cubic Hermite interpolant of `h(p)` on one interval.
#[derive(Debug, Clone, Copy)]
struct Hermite {
    p0: f64,
    p1: f64,
    h0: f64,
    h1: f64,
    s0: f64,
    s1: f64,
}

impl Hermite {
    fn basis(&self, p: f64) -> (f64, f64) {
        let dp = self.p1 - self.p0;
        let t = (p - self.p0) / dp;
        let (t2, t3) = (t * t, t * t * t);
        let value = (2.0 * t3 - 3.0 * t2 + 1.0) * self.h0
            + (t3 - 2.0 * t2 + t) * dp * self.s0
            + (-2.0 * t3 + 3.0 * t2) * self.h1
            + (t3 - t2) * dp * self.s1;
        let slope = (6.0 * t2 - 6.0 * t) * self.h0 / dp
            + (3.0 * t2 - 4.0 * t + 1.0) * self.s0
            + (-6.0 * t2 + 6.0 * t) * self.h1 / dp
            + (3.0 * t2 - 2.0 * t) * self.s1;
        (value, slope)
    }
}

/// Stream function down one column.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamColumn {
    pub x: f64,
    /// Depths, from the surface down to the bed.
    pub y: Vec<f64>,
    pub psi: Vec<f64>,
    /// Defect `y - (H(-psi) - d)` at every sample, `H` being the height
    /// interpolant the integration used.
    pub identity_defect: Vec<f64>,
    pub steps: usize,
}

impl StreamColumn {
    pub fn bed_value(&self) -> f64 {
        *self.psi.last().expect("non-empty column")
    }
}

const ODE_TOLERANCE: f64 = 1e-12;

/// Dormand-Prince 5(4) integration of the autonomous scalar ODE
/// `psi' = rhs(psi)` from `y0` to `y1`.
fn integrate(mut psi: f64, y0: f64, y1: f64, rhs: &dyn Fn(f64) -> f64, steps: &mut usize) -> Result<f64, FieldError> {
    const C: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const E: [f64; 7] =
        [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];
    let span = y1 - y0;
    if span == 0.0 {
        return Ok(psi);
    }
    let mut y = y0;
    let mut h = span / 4.0;
    for _ in 0..100_000 {
        if (y1 - y) * span.signum() <= 0.0 {
            return Ok(psi);
        }
        if (y + h - y1) * span.signum() > 0.0 {
            h = y1 - y;
        }
        let mut k = [0.0; 7];
        k[0] = rhs(psi);
        for s in 0..6 {
            let inc: f64 = (0..=s).map(|m| C[s][m] * k[m]).sum();
            k[s + 1] = rhs(psi + h * inc);
        }
        let next = psi + h * (0..6).map(|m| C[5][m] * k[m]).sum::<f64>();
        let err = (h * (0..7).map(|m| E[m] * k[m]).sum::<f64>()).abs();
        let scale = ODE_TOLERANCE * (1.0 + psi.abs());
        if !err.is_finite() {
            return Err(FieldError::Integration { y });
        }
        if err <= scale {
            y = if (y + h - y1) * span.signum() >= 0.0 { y1 } else { y + h };
            psi = next;
            *steps += 1;
        }
        let factor = if err == 0.0 { 4.0 } else { (0.9 * (scale / err).powf(0.2)).clamp(0.2, 4.0) };
        h *= factor;
        if h.abs() < 1e-15 * span.abs() {
            return Err(FieldError::Integration { y });
        }
    }
    Err(FieldError::Integration { y })
}

/// Integrates `psi_y = -1/h_p(x0, -psi)` from the surface, where `psi = 0`,
/// down to the bed, layer by layer, recording `psi` at every node depth
/// and at `refine - 1` extra depths between consecutive nodes.
pub fn reconstruct_streamfunction(h: &HeightField, column: usize, refine: usize) -> Result<StreamColumn, FieldError> {
    if column >= h.grid.nx() {
        return Err(FieldError::Column { column });
    }
    h.check_positive()?;
    let d = h.params.depth;
    let refine = refine.max(1);
    let mut out =
        StreamColumn { x: h.q(column), y: Vec::new(), psi: Vec::new(), identity_defect: Vec::new(), steps: 0 };
    let mut psi = 0.0;
    let top = h.grid.nz();
    out.y.push(h.at(column, top) - d);
    out.psi.push(psi);
    out.identity_defect.push(0.0);
    for &(first, last) in h.layers.iter().rev() {
        for j in (first..last).rev() {
            let piece = h.piece(column, j);
            let rhs = |psi: f64| -1.0 / piece.basis(-psi).1;
            let (y_top, y_bottom) = (piece.h1 - d, piece.h0 - d);
            for k in 1..=refine {
                let start = y_top + (y_bottom - y_top) * (k - 1) as f64 / refine as f64;
                let end = if k == refine { y_bottom } else { y_top + (y_bottom - y_top) * k as f64 / refine as f64 };
                psi = integrate(psi, start, end, &rhs, &mut out.steps)?;
                out.y.push(end);
                out.psi.push(psi);
                out.identity_defect.push(end - (piece.basis(-psi).0 - d));
            }
        }
    }
    Ok(out)
}

/// Pressure on the streamline grid with one value per node; interface rows
/// carry the value from the layer above, and the mismatch with the layer
/// below is kept separately.
#[derive(Debug, Clone, PartialEq)]
pub struct PressureField {
    pub nx: usize,
    pub q: Vec<f64>,
    pub p_rows: Vec<f64>,
    pub values: Vec<f64>,
    /// Largest `|P_below - P_above|` on each interior interface row.
    pub interface_jumps: Vec<f64>,
}

impl PressureField {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx + i]
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest deviation from `p_atm` along the surface row.
    pub fn surface_defect(&self, p_atm: f64) -> f64 {
        let top = self.p_rows.len() - 1;
        (0..self.nx).fold(0.0, |m, i| m.max((self.at(i, top) - p_atm).abs()))
    }
}

/// `P = K_l + P_atm - (1 + h_q^2)/(2 h_p^2) - g rho h + B(p) + g d (rho(p) - rho_l^top)`
/// in layer `l`, where `K_l` is the cumulative layer constant and
/// `rho_l^top` the density at the top of the layer.
pub fn pressure_field(h: &HeightField, bdata: &BernoulliData) -> Result<PressureField, FieldError> {
    h.check_positive()?;
    let rho = h.profile();
    let params = &h.params;
    let g = params.gravity;
    let nx = h.grid.nx();
    let rows = h.p_rows.len();
    let mut values = alloc::vec![0.0; nx * rows];
    let mut interface_jumps = alloc::vec![0.0; h.layers.len() - 1];
    let mut below: Vec<f64> = Vec::new();
    for (layer, &(first, last)) in h.layers.iter().enumerate() {
        let top_density = rho.value_in(layer, rho.breakpoints()[layer + 1]);
        for j in first..=last {
            let p = h.p_rows[j];
            let density = rho.value_in(layer, p);
            let b = bdata.bernoulli_integral(p)?;
            for i in 0..nx {
                let h_p = h.h_p(i, j, layer);
                let h_q = h.h_q(i, j);
                let value = bdata.layer_constant(layer) + params.p_atm
                    - (1.0 + h_q * h_q) / (2.0 * h_p * h_p)
                    - g * density * h.at(i, j)
                    + b
                    + g * params.depth * (density - top_density);
                if j == first && layer > 0 {
                    let jump = (value - below[i]).abs();
                    interface_jumps[layer - 1] = f64::max(interface_jumps[layer - 1], jump);
                }
                if j == last && layer + 1 < h.layers.len() {
                    if i == 0 {
                        below.clear();
                    }
                    below.push(value);
                }
                values[j * nx + i] = value;
            }
        }
    }
    let q = (0..nx).map(|i| h.q(i)).collect();
    Ok(PressureField { nx, q, p_rows: h.p_rows.clone(), values, interface_jumps })
}

/// Largest residual of the divergence-form height equation
/// `(-(1 + h_q^2)/(2 h_p^2) + B - g rho (h - d))_p + (h_q/h_p)_q + g rho h_p`
/// over rows strictly inside a layer, by centred differences.
pub fn height_equation_residual(h: &HeightField, bdata: &BernoulliData) -> Result<f64, FieldError> {
    h.check_positive()?;
    let rho = h.profile();
    let (g, d) = (h.params.gravity, h.params.depth);
    let nx = h.grid.nx();
    let dq = d * h.grid.dx();
    let mut worst: f64 = 0.0;
    for (layer, &(first, last)) in h.layers.iter().enumerate() {
        let potential = |i: usize, j: usize| -> Result<f64, FieldError> {
            let (h_p, h_q) = (h.h_p(i, j, layer), h.h_q(i, j));
            let p = h.p_rows[j];
            Ok(-(1.0 + h_q * h_q) / (2.0 * h_p * h_p) + bdata.bernoulli_integral(p)?
                - g * rho.value_in(layer, p) * (h.at(i, j) - d))
        };
        let slope = |i: usize, j: usize| h.h_q(i, j) / h.h_p(i, j, layer);
        for j in first + 1..last {
            let (pa, pb, pc) = (h.p_rows[j - 1], h.p_rows[j], h.p_rows[j + 1]);
            let la = (pb - pc) / ((pa - pb) * (pa - pc));
            let lb = ((pb - pa) + (pb - pc)) / ((pb - pa) * (pb - pc));
            let lc = (pb - pa) / ((pc - pa) * (pc - pb));
            for i in 0..nx {
                let dp = la * potential(i, j - 1)? + lb * potential(i, j)? + lc * potential(i, j + 1)?;
                let dq_term = (slope((i + 1) % nx, j) - slope((i + nx - 1) % nx, j)) / (2.0 * dq);
                let r = dp + dq_term + g * rho.value_in(layer, pb) * h.h_p(i, j, layer);
                worst = worst.max(r.abs());
            }
        }
    }
    Ok(worst)
}

/// `(q, P(q, p0))` along the bed.
pub fn bed_pressure_trace(pf: &PressureField) -> Vec<(f64, f64)> {
    (0..pf.nx).map(|i| (pf.q[i], pf.at(i, 0))).collect()
}
