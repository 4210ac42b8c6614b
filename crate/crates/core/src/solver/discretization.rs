use alloc::vec::Vec;

use super::SolverError;
use crate::flux::{Flux, FluxEval};
use crate::grid::StripGrid;
use crate::quadrature::GAUSS2_UNIT;
use crate::stratification::{Side, Stratification};
use crate::wave::WaveField;

/// Local offsets in a cell at which the density is cached.
const RHO_OFFSETS: [f64; 5] = [0.25, 0.5, 0.75, GAUSS2_UNIT[0], GAUSS2_UNIT[1]];

/// Sub-faces of the median dual inside a cell: local position, normal
/// direction (0 for xi, 1 for zeta), cached density slot, and the corners
/// on either side (flux leaves `from` and enters `to`).
const FACES: [(f64, f64, usize, usize, usize, usize); 4] =
    [(0.5, 0.25, 0, 0, 0, 1), (0.5, 0.75, 0, 2, 2, 3), (0.25, 0.5, 1, 1, 0, 2), (0.75, 0.5, 1, 1, 1, 3)];

/// Quarter-cell centers paired with the corner owning them.
const QUARTERS: [(f64, f64, usize); 4] = [(0.25, 0.25, 0), (0.75, 0.25, 0), (0.25, 0.75, 2), (0.75, 0.75, 2)];

struct Shape {
    value: [f64; 4],
    dxi: [f64; 4],
    dzeta: [f64; 4],
}

fn shape(x: f64, y: f64, hx: f64, hz: f64) -> Shape {
    Shape {
        value: [(1.0 - x) * (1.0 - y), x * (1.0 - y), (1.0 - x) * y, x * y],
        dxi: [-(1.0 - y) / hx, (1.0 - y) / hx, -y / hx, y / hx],
        dzeta: [-(1.0 - x) / hz, -x / hz, (1.0 - x) / hz, x / hz],
    }
}

fn dot(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

/// Residual, Jacobian values (in [`Discretization::pattern_entries`] order)
/// and the derivative of the residual with respect to `lambda`.
#[derive(Debug, Clone)]
pub struct Linearization {
    pub residual: Vec<f64>,
    pub jacobian: Vec<f64>,
    pub lambda_derivative: Vec<f64>,
}

/// Vertex-centred finite volumes on a strip grid with the density cached
/// inside every cell row. Rows coincide with interfaces, so every cached
/// value is a one-sided sample from a single layer.
#[derive(Debug, Clone)]
pub struct Discretization {
    grid: StripGrid,
    rho: Vec<[f64; 5]>,
    rho_top: f64,
}

impl Discretization {
    pub fn new(grid: StripGrid, density: &dyn Stratification) -> Self {
        let rho = (0..grid.nz())
            .map(|j| {
                let (z0, hz) = (grid.rows()[j], grid.dz(j));
                RHO_OFFSETS.map(|t| density.density(z0 + t * hz, Side::Above))
            })
            .collect();
        let rho_top = density.density(0.0, Side::Below);
        Self { grid, rho, rho_top }
    }

    pub fn grid(&self) -> &StripGrid {
        &self.grid
    }

    pub fn surface_density(&self) -> f64 {
        self.rho_top
    }

    /// Area of the control volume around a node of row `j >= 1`.
    pub fn control_area(&self, j: usize) -> f64 {
        let hx = self.grid.dx();
        if j == self.grid.nz() {
            hx * self.grid.dz(j - 1) / 2.0
        } else {
            hx * (self.grid.dz(j - 1) + self.grid.dz(j)) / 2.0
        }
    }

    fn corners(&self, i: usize, j: usize) -> [usize; 4] {
        let ip = (i + 1) % self.grid.nx();
        let g = &self.grid;
        [g.node(i, j), g.node(ip, j), g.node(i, j + 1), g.node(ip, j + 1)]
    }

    fn unknown_of(&self, node: usize) -> Option<usize> {
        node.checked_sub(self.grid.nx())
    }

    /// Jacobian entries in assembly order; repeated entries are summed.
    pub fn pattern_entries(&self) -> Vec<(usize, usize)> {
        let mut entries = Vec::with_capacity(16 * self.grid.nx() * self.grid.nz());
        for j in 0..self.grid.nz() {
            for i in 0..self.grid.nx() {
                let corners = self.corners(i, j);
                for a in corners {
                    let Some(row) = self.unknown_of(a) else { continue };
                    for b in corners {
                        if let Some(col) = self.unknown_of(b) {
                            entries.push((row, col));
                        }
                    }
                }
            }
        }
        entries
    }

    fn check(&self, values: &[f64]) -> Result<(), SolverError> {
        if values.len() != self.grid.node_count() {
            return Err(SolverError::GridMismatch);
        }
        Ok(())
    }

    fn eval(flux: &Flux, p1: f64, p2: f64, i: usize, j: usize) -> Result<FluxEval, SolverError> {
        flux.eval(p1, p2).map_err(|_| SolverError::Stagnation { i, j, margin: 1.0 + p2 })
    }

    /// Cell loop shared by the residual and its linearization. Returns the
    /// unscaled residual at every node (bed row included).
    fn assemble(
        &self,
        values: &[f64],
        lambda: f64,
        flux: &Flux,
        mut jacobian: Option<&mut Vec<f64>>,
        lambda_derivative: Option<&mut Vec<f64>>,
    ) -> Result<Vec<f64>, SolverError> {
        self.check(values)?;
        let g = &self.grid;
        let hx = g.dx();
        let mut raw = alloc::vec![0.0; g.node_count()];
        let mut dlam_raw = alloc::vec![0.0; g.node_count()];
        for j in 0..g.nz() {
            let hz = g.dz(j);
            let rho = &self.rho[j];
            let quarter_area = hx * hz / 4.0;
            for i in 0..g.nx() {
                let corners = self.corners(i, j);
                let w = corners.map(|n| values[n]);
                let mut res = [0.0; 4];
                let mut dlam = [0.0; 4];
                let mut local = [[0.0; 4]; 4];
                for &(x, y, dir, slot, from, to) in &FACES {
                    let s = shape(x, y, hx, hz);
                    let (p1, p2) = (dot(&s.dxi, &w), dot(&s.dzeta, &w));
                    let a = Self::eval(flux, p1, p2, i, j)?;
                    let r = rho[slot];
                    let (flow, dflow, dl) = if dir == 0 {
                        let d: [f64; 4] = core::array::from_fn(|b| {
                            r * (a.hess[0][0] * s.dxi[b] + a.hess[0][1] * s.dzeta[b]) * hz / 2.0
                        });
                        (r * a.grad[0] * hz / 2.0, d, 0.0)
                    } else {
                        let wv = dot(&s.value, &w);
                        let d: [f64; 4] = core::array::from_fn(|b| {
                            r * (a.hess[1][0] * s.dxi[b] + a.hess[1][1] * s.dzeta[b] - lambda * s.value[b]) * hx / 2.0
                        });
                        (r * (a.grad[1] - lambda * wv) * hx / 2.0, d, -r * wv * hx / 2.0)
                    };
                    res[from] += flow;
                    res[to] -= flow;
                    dlam[from] += dl;
                    dlam[to] -= dl;
                    for b in 0..4 {
                        local[from][b] += dflow[b];
                        local[to][b] -= dflow[b];
                    }
                }
                for (q, &(x, y, slot)) in QUARTERS.iter().enumerate() {
                    let s = shape(x, y, hx, hz);
                    let r = rho[slot] * quarter_area;
                    let p2 = dot(&s.dzeta, &w);
                    res[q] += lambda * r * p2;
                    dlam[q] += r * p2;
                    for (entry, dz) in local[q].iter_mut().zip(&s.dzeta) {
                        *entry += lambda * r * dz;
                    }
                }
                for a in 0..4 {
                    raw[corners[a]] += res[a];
                    dlam_raw[corners[a]] += dlam[a];
                }
                if let Some(jac) = jacobian.as_deref_mut() {
                    for a in 0..4 {
                        let Some(_) = self.unknown_of(corners[a]) else { continue };
                        let scale = 1.0 / self.control_area(j + a / 2);
                        for b in 0..4 {
                            if self.unknown_of(corners[b]).is_some() {
                                jac.push(local[a][b] * scale);
                            }
                        }
                    }
                }
            }
        }
        if let Some(out) = lambda_derivative {
            out.clear();
            out.extend(self.scaled(&dlam_raw));
        }
        Ok(raw)
    }

    fn scaled(&self, raw: &[f64]) -> Vec<f64> {
        let nx = self.grid.nx();
        (nx..raw.len()).map(|n| raw[n] / self.control_area(n / nx)).collect()
    }

    fn subtract_source(&self, residual: &mut [f64], source: Option<&[f64]>) -> Result<(), SolverError> {
        if let Some(source) = source {
            if source.len() != residual.len() {
                return Err(SolverError::SourceLength { expected: residual.len(), found: source.len() });
            }
            residual.iter_mut().zip(source).for_each(|(r, s)| *r -= s);
        }
        Ok(())
    }

    /// Residual at the unknowns, each control-volume balance divided by
    /// the volume's area, minus `source` when given.
    pub fn residual_values(
        &self,
        values: &[f64],
        lambda: f64,
        flux: &Flux,
        source: Option<&[f64]>,
    ) -> Result<Vec<f64>, SolverError> {
        let raw = self.assemble(values, lambda, flux, None, None)?;
        let mut residual = self.scaled(&raw);
        self.subtract_source(&mut residual, source)?;
        Ok(residual)
    }

    pub fn residual(
        &self,
        w: &WaveField,
        lambda: f64,
        flux: &Flux,
        source: Option<&[f64]>,
    ) -> Result<Vec<f64>, SolverError> {
        if w.grid() != &self.grid {
            return Err(SolverError::GridMismatch);
        }
        self.residual_values(w.values(), lambda, flux, source)
    }

    /// Unscaled balances at every node, the bed row included.
    pub fn balances(&self, values: &[f64], lambda: f64, flux: &Flux) -> Result<Vec<f64>, SolverError> {
        self.assemble(values, lambda, flux, None, None)
    }

    /// Discrete integral of the non-divergence term `lambda rho w_zeta`.
    pub fn transport_integral(&self, values: &[f64], lambda: f64) -> f64 {
        let g = &self.grid;
        let hx = g.dx();
        let mut sum = 0.0;
        for j in 0..g.nz() {
            let hz = g.dz(j);
            for i in 0..g.nx() {
                let w = self.corners(i, j).map(|n| values[n]);
                for &(x, y, slot) in &QUARTERS {
                    let s = shape(x, y, hx, hz);
                    sum += lambda * self.rho[j][slot] * dot(&s.dzeta, &w) * hx * hz / 4.0;
                }
            }
        }
        sum
    }

    pub fn linearization(
        &self,
        values: &[f64],
        lambda: f64,
        flux: &Flux,
        source: Option<&[f64]>,
    ) -> Result<Linearization, SolverError> {
        let mut jacobian = Vec::with_capacity(16 * self.grid.nx() * self.grid.nz());
        let mut lambda_derivative = Vec::new();
        let raw = self.assemble(values, lambda, flux, Some(&mut jacobian), Some(&mut lambda_derivative))?;
        let mut residual = self.scaled(&raw);
        self.subtract_source(&mut residual, source)?;
        Ok(Linearization { residual, jacobian, lambda_derivative })
    }

    /// Largest `|grad w|^2` over the flux integration points.
    pub fn max_gradient_sq(&self, values: &[f64]) -> f64 {
        let g = &self.grid;
        let hx = g.dx();
        let mut worst: f64 = 0.0;
        for j in 0..g.nz() {
            let hz = g.dz(j);
            for i in 0..g.nx() {
                let w = self.corners(i, j).map(|n| values[n]);
                for &(x, y, ..) in &FACES {
                    let s = shape(x, y, hx, hz);
                    let (p1, p2) = (dot(&s.dxi, &w), dot(&s.dzeta, &w));
                    worst = worst.max(p1 * p1 + p2 * p2);
                }
            }
        }
        worst
    }

    /// `∫ rho |grad w|^2 / (1 + w_zeta)` by 2×2 Gauss per cell, with its
    /// gradient with respect to the unknowns.
    pub fn energy_with_gradient(&self, values: &[f64]) -> Result<(f64, Vec<f64>), SolverError> {
        self.check(values)?;
        let g = &self.grid;
        let hx = g.dx();
        let mut energy = 0.0;
        let mut grad = alloc::vec![0.0; g.node_count()];
        for j in 0..g.nz() {
            let hz = g.dz(j);
            let weight = hx * hz / 4.0;
            for i in 0..g.nx() {
                let corners = self.corners(i, j);
                let w = corners.map(|n| values[n]);
                for (gy, &y) in GAUSS2_UNIT.iter().enumerate() {
                    let r = self.rho[j][3 + gy] * weight;
                    for &x in &GAUSS2_UNIT {
                        let s = shape(x, y, hx, hz);
                        let (p1, p2) = (dot(&s.dxi, &w), dot(&s.dzeta, &w));
                        let u = 1.0 + p2;
                        if !(u > 0.0) {
                            return Err(SolverError::Stagnation { i, j, margin: u });
                        }
                        let norm2 = p1 * p1 + p2 * p2;
                        energy += r * norm2 / u;
                        let d1 = r * 2.0 * p1 / u;
                        let d2 = r * (2.0 * p2 / u - norm2 / (u * u));
                        for b in 0..4 {
                            grad[corners[b]] += d1 * s.dxi[b] + d2 * s.dzeta[b];
                        }
                    }
                }
            }
        }
        Ok((energy, grad[g.nx()..].to_vec()))
    }

    pub fn energy(&self, values: &[f64]) -> Result<f64, SolverError> {
        self.energy_with_gradient(values).map(|(e, _)| e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::DensityProfile;
    use crate::flux::Penalization;
    use crate::stratification::RescaledDensity;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn smooth() -> RescaledDensity {
        RescaledDensity::new(&DensityProfile::new(vec![-1.0, 0.0], vec![vec![1.0, -0.1]]).unwrap()).unwrap()
    }

    fn layered() -> RescaledDensity {
        RescaledDensity::new(
            &DensityProfile::new(vec![-1.0, -0.5, 0.0], vec![vec![1.1, -0.2], vec![1.0, -0.1]]).unwrap(),
        )
        .unwrap()
    }

    fn setup(density: &dyn Stratification, nx: usize, nz: usize) -> Discretization {
        let grid = StripGrid::aligned(nx, nz, 4.0, density.interfaces()).unwrap();
        Discretization::new(grid, density)
    }

    fn bump(disc: &Discretization, amplitude: f64) -> Vec<f64> {
        let hp = disc.grid().half_period();
        WaveField::from_fn(disc.grid().clone(), 0.0, 0, |x, z| {
            amplitude * (1.0 + z) * (1.2 + (core::f64::consts::PI * x / hp).cos()) * (1.0 + 0.3 * z * z)
        })
        .values()
        .to_vec()
    }

    #[test]
    fn trivial_state_has_zero_residual() {
        for density in [&smooth() as &dyn Stratification, &layered()] {
            let disc = setup(density, 16, 8);
            let zeros = vec![0.0; disc.grid().node_count()];
            for lambda in [0.1, 0.9, 3.0] {
                let r = disc.residual_values(&zeros, lambda, &Flux::Physical, None).unwrap();
                assert!(r.iter().all(|&v| v == 0.0));
            }
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let density = layered();
        let disc = setup(&density, 16, 8);
        let values = bump(&disc, 0.05);
        let lambda = 0.7;
        let flux = Flux::Physical;
        let lin = disc.linearization(&values, lambda, &flux, None).unwrap();
        let entries = disc.pattern_entries();
        let n = disc.grid().unknown_count();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let dir: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut jv = vec![0.0; n];
            for (&(r, c), v) in entries.iter().zip(&lin.jacobian) {
                jv[r] += v * dir[c];
            }
            let h = 1e-6;
            let shift = |sign: f64| {
                let mut v = values.clone();
                let nx = disc.grid().nx();
                v[nx..].iter_mut().zip(&dir).for_each(|(x, d)| *x += sign * h * d);
                disc.residual_values(&v, lambda, &flux, None).unwrap()
            };
            let (plus, minus) = (shift(1.0), shift(-1.0));
            let fd: Vec<f64> = plus.iter().zip(&minus).map(|(p, m)| (p - m) / (2.0 * h)).collect();
            let scale = jv.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let err = jv.iter().zip(&fd).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(err <= 1e-6 * scale, "{err} vs {scale}");
        }
        let h = 1e-6;
        let plus = disc.residual_values(&values, lambda + h, &flux, None).unwrap();
        let minus = disc.residual_values(&values, lambda - h, &flux, None).unwrap();
        for k in 0..n {
            let fd = (plus[k] - minus[k]) / (2.0 * h);
            assert!((fd - lin.lambda_derivative[k]).abs() <= 1e-7 * (1.0 + fd.abs()));
        }
    }

    #[test]
    fn penalized_branch_coincides_for_small_gradients() {
        let density = smooth();
        let disc = setup(&density, 16, 8);
        let values = bump(&disc, 0.01);
        let pen = Penalization::new(0.25).unwrap();
        assert!(disc.max_gradient_sq(&values) <= pen.scale());
        let a = disc.residual_values(&values, 0.8, &Flux::Physical, None).unwrap();
        let b = disc.residual_values(&values, 0.8, &Flux::Penalized(pen), None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn divergence_part_telescopes() {
        let density = layered();
        let disc = setup(&density, 16, 8);
        let values = bump(&disc, 0.05);
        let lambda = 0.6;
        let balances = disc.balances(&values, lambda, &Flux::Physical).unwrap();
        let total: f64 = balances.iter().sum();
        let transport = disc.transport_integral(&values, lambda);
        assert!((total - transport).abs() < 1e-14 * (1.0 + transport.abs()), "{total} vs {transport}");
    }

    #[test]
    fn energy_gradient_matches_finite_differences() {
        let density = smooth();
        let disc = setup(&density, 16, 8);
        let values = bump(&disc, 0.05);
        let (e, grad) = disc.energy_with_gradient(&values).unwrap();
        assert!(e > 0.0);
        let nx = disc.grid().nx();
        for k in [0, 17, 60, 127] {
            let h = 1e-6;
            let mut v = values.clone();
            v[nx + k] += h;
            let ep = disc.energy(&v).unwrap();
            v[nx + k] -= 2.0 * h;
            let em = disc.energy(&v).unwrap();
            assert!(((ep - em) / (2.0 * h) - grad[k]).abs() < 1e-8);
        }
    }

    #[test]
    fn ramp_energy_is_exact() {
        let density = RescaledDensity::new(&DensityProfile::constant(-1.0, 1.0).unwrap()).unwrap();
        let disc = setup(&density, 16, 8);
        let a = 0.02;
        let values = WaveField::from_fn(disc.grid().clone(), 0.0, 0, |_, z| a * (1.0 + z)).values().to_vec();
        let e = disc.energy(&values).unwrap();
        assert!((e - 2.0 * 4.0 * a * a / (1.0 + a)).abs() < 1e-15);
    }

    #[test]
    fn stagnation_is_reported() {
        let density = smooth();
        let disc = setup(&density, 16, 8);
        let values = WaveField::from_fn(disc.grid().clone(), 0.0, 0, |_, z| -1.5 * (1.0 + z)).values().to_vec();
        assert!(matches!(
            disc.residual_values(&values, 0.5, &Flux::Physical, None),
            Err(SolverError::Stagnation { .. })
        ));
        let pen = Flux::Penalized(Penalization::default());
        assert!(disc.residual_values(&values, 0.5, &pen, None).is_ok());
    }
}
