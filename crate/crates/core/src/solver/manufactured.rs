use alloc::vec::Vec;
use core::f64::consts::PI;

use super::discretization::Discretization;
use super::SolverError;
use crate::flux::Flux;
use crate::quadrature::GAUSS2_UNIT;
use crate::stratification::{Side, Stratification};

/// Value and derivatives up to second order of a field at a point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet {
    pub w: f64,
    pub w_xi: f64,
    pub w_zeta: f64,
    pub w_xixi: f64,
    pub w_xizeta: f64,
    pub w_zetazeta: f64,
}

/// `w_m = eps (1 + zeta) cos(pi xi / half_period)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedSolution {
    pub amplitude: f64,
    pub half_period: f64,
}

impl ManufacturedSolution {
    pub fn jet(&self, xi: f64, zeta: f64) -> Jet {
        let k = PI / self.half_period;
        let (s, c) = (k * xi).sin_cos();
        let e = self.amplitude;
        let r = 1.0 + zeta;
        Jet {
            w: e * r * c,
            w_xi: -e * r * k * s,
            w_zeta: e * c,
            w_xixi: -e * r * k * k * c,
            w_xizeta: -e * k * s,
            w_zetazeta: 0.0,
        }
    }
}

/// Control-volume integrals of the continuous operator applied to a smooth
/// field, minus the conormal flux it leaves on the surface, scaled like the
/// discrete residual. Solving `residual = source` then recovers the field
/// up to discretization error.
pub fn manufactured_source(
    disc: &Discretization,
    density: &dyn Stratification,
    lambda: f64,
    flux: &Flux,
    solution: &dyn Fn(f64, f64) -> Jet,
) -> Result<Vec<f64>, SolverError> {
    if !density.interfaces().is_empty() {
        return Err(SolverError::LayeredSource);
    }
    let grid = disc.grid();
    let (nx, hx) = (grid.nx(), grid.dx());
    let mut raw = alloc::vec![0.0; grid.node_count()];
    let operator = |xi: f64, zeta: f64| -> Result<f64, SolverError> {
        let jet = solution(xi, zeta);
        let a = flux.eval(jet.w_xi, jet.w_zeta).map_err(|_| SolverError::Stagnation {
            i: 0,
            j: 0,
            margin: 1.0 + jet.w_zeta,
        })?;
        let rho = density.density(zeta, Side::Above);
        let drho = density.density_slope(zeta, Side::Above);
        Ok(rho * (a.hess[0][0] * jet.w_xixi + 2.0 * a.hess[0][1] * jet.w_xizeta + a.hess[1][1] * jet.w_zetazeta)
            + drho * (a.grad[1] - lambda * jet.w))
    };
    for j in 0..grid.nz() {
        let (z0, hz) = (grid.rows()[j], grid.dz(j));
        for i in 0..nx {
            let x0 = grid.xi(i);
            for (corner, (qx, qz)) in [(0.0, 0.0), (0.5, 0.0), (0.0, 0.5), (0.5, 0.5)].into_iter().enumerate() {
                let mut sum = 0.0;
                for gz in GAUSS2_UNIT {
                    for gx in GAUSS2_UNIT {
                        sum += operator(x0 + (qx + 0.5 * gx) * hx, z0 + (qz + 0.5 * gz) * hz)?;
                    }
                }
                let (ci, cj) = ((i + corner % 2) % nx, j + corner / 2);
                raw[grid.node(ci, cj)] += sum * hx * hz / 16.0;
            }
        }
    }
    let top = grid.nz();
    let rho_top = density.density(0.0, Side::Below);
    for i in 0..nx {
        let x0 = grid.xi(i) - 0.5 * hx;
        let mut sum = 0.0;
        for half in [0.0, 0.5] {
            for g in GAUSS2_UNIT {
                let jet = solution(x0 + (half + 0.5 * g) * hx, 0.0);
                let a = flux.eval(jet.w_xi, jet.w_zeta).map_err(|_| SolverError::Stagnation {
                    i,
                    j: top,
                    margin: 1.0 + jet.w_zeta,
                })?;
                sum += rho_top * (a.grad[1] - lambda * jet.w);
            }
        }
        raw[grid.node(i, top)] -= sum * hx / 4.0;
    }
    Ok((nx..raw.len()).map(|n| raw[n] / disc.control_area(n / nx)).collect())
}
