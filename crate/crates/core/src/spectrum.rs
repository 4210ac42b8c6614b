//! Critical Richardson number from the linearization at the laminar flow.
//!
//! For each horizontal wavenumber `k` the quotient
//! `∫ rho (v'^2 + kappa^2 v^2) / (-∫ rho' v^2 + Σ [rho]_i v(zeta_i)^2 + rho(0) v(0)^2)`
//! is minimized over piecewise-linear `v` with `v(-1) = 0`, which leads to a
//! symmetric tridiagonal pencil with a diagonal (lumped) mass form.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::density::FlowParameters;
use crate::grid::{partition, GridError};
use crate::quadrature::gauss4;
use crate::stratification::{Side, Stratification};

/// Hard cap on the wavenumber search.
const MAX_WAVENUMBER: usize = 100_000;
const INVERSE_ITERATION_CAP: usize = 200;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpectrumError {
    #[error("at least 8 intervals are required, found {m}")]
    TooFewIntervals { m: usize },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("interface at zeta = {zeta} is not a node of the eigenvalue grid")]
    NotAligned { zeta: f64 },
    #[error("nodes must increase strictly from -1 to 0")]
    Nodes,
    #[error("inverse iteration for wavenumber {wavenumber} did not converge; last quotient {quotient}")]
    NotConverged { wavenumber: usize, quotient: f64 },
    #[error("wavenumber search exceeded {MAX_WAVENUMBER}")]
    SearchExhausted,
}

/// Element integrals that do not depend on the wavenumber.
#[derive(Debug, Clone, Copy)]
struct Element {
    /// `∫ rho` over the element divided by its length squared.
    gradient: f64,
    /// `∫ rho phi_a^2`, `∫ rho phi_a phi_b`, `∫ rho phi_b^2`.
    lower: f64,
    cross: f64,
    upper: f64,
    /// `-∫ rho' phi_a`, `-∫ rho' phi_b`.
    mass_lower: f64,
    mass_upper: f64,
}

/// One-dimensional eigenvalue problem on interface-aligned nodes.
#[derive(Debug, Clone)]
pub struct RayleighProblem {
    half_period: f64,
    nodes: Vec<f64>,
    elements: Vec<Element>,
    /// Point masses at each node (interfaces and the surface).
    point_mass: Vec<f64>,
}

/// Stiffness (tridiagonal) and lumped mass over the nodes above the bed.
#[derive(Debug, Clone, PartialEq)]
pub struct RayleighForms {
    pub diagonal: Vec<f64>,
    pub off_diagonal: Vec<f64>,
    pub mass: Vec<f64>,
}

impl RayleighProblem {
    /// `m` intervals distributed over the layers of `density`.
    pub fn new(density: &dyn Stratification, half_period: f64, m: usize) -> Result<Self, SpectrumError> {
        if m < 8 {
            return Err(SpectrumError::TooFewIntervals { m });
        }
        let nodes = partition(density.interfaces(), m)?;
        Self::on_nodes(density, half_period, nodes)
    }

    /// Uses the given nodes; every interface must be one of them.
    /// Nodes within `1e-12` of an interface are moved onto it.
    pub fn on_nodes(
        density: &dyn Stratification,
        half_period: f64,
        mut nodes: Vec<f64>,
    ) -> Result<Self, SpectrumError> {
        if nodes.len() < 2
            || nodes[0] != -1.0
            || nodes[nodes.len() - 1] != 0.0
            || nodes.windows(2).any(|w| !(w[1] > w[0]))
        {
            return Err(SpectrumError::Nodes);
        }
        for &zeta in density.interfaces() {
            let node =
                nodes.iter_mut().find(|z| (**z - zeta).abs() <= 1e-12).ok_or(SpectrumError::NotAligned { zeta })?;
            *node = zeta;
        }
        let elements = nodes
            .windows(2)
            .map(|w| {
                let (a, b) = (w[0], w[1]);
                let h = b - a;
                let rho = |z: f64| density.density(z, Side::Above);
                let drho = |z: f64| density.density_slope(z, Side::Above);
                let down = |z: f64| (b - z) / h;
                let up = |z: f64| (z - a) / h;
                Element {
                    gradient: gauss4(a, b, rho) / (h * h),
                    lower: gauss4(a, b, |z| rho(z) * down(z) * down(z)),
                    cross: gauss4(a, b, |z| rho(z) * down(z) * up(z)),
                    upper: gauss4(a, b, |z| rho(z) * up(z) * up(z)),
                    mass_lower: -gauss4(a, b, |z| drho(z) * down(z)),
                    mass_upper: -gauss4(a, b, |z| drho(z) * up(z)),
                }
            })
            .collect();
        let last = nodes.len() - 1;
        let point_mass = nodes
            .iter()
            .enumerate()
            .map(|(j, &z)| {
                if j == last {
                    density.density(0.0, Side::Below)
                } else if j == 0 {
                    0.0
                } else {
                    density.jump(z)
                }
            })
            .collect();
        Ok(Self { half_period, nodes, elements, point_mass })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn half_period(&self) -> f64 {
        self.half_period
    }

    pub fn wavenumber(&self, k: usize) -> f64 {
        k as f64 * PI / self.half_period
    }

    /// Assembles the forms for wavenumber `k` with the bed node eliminated.
    pub fn forms(&self, k: usize) -> RayleighForms {
        let kappa2 = self.wavenumber(k).powi(2);
        let n = self.nodes.len() - 1;
        let mut diagonal = alloc::vec![0.0; n];
        let mut off_diagonal = alloc::vec![0.0; n.saturating_sub(1)];
        let mut mass: Vec<f64> = self.point_mass[1..].to_vec();
        for (e, el) in self.elements.iter().enumerate() {
            let h = self.nodes[e + 1] - self.nodes[e];
            let _ = h;
            // Nodes e and e + 1 map to unknowns e - 1 and e.
            let k_aa = el.gradient + kappa2 * el.lower;
            let k_bb = el.gradient + kappa2 * el.upper;
            let k_ab = -el.gradient + kappa2 * el.cross;
            diagonal[e] += k_bb;
            mass[e] += el.mass_upper;
            if e > 0 {
                diagonal[e - 1] += k_aa;
                off_diagonal[e - 1] += k_ab;
                mass[e - 1] += el.mass_lower;
            }
        }
        RayleighForms { diagonal, off_diagonal, mass }
    }
}

/// Assembles the stiffness and mass forms for wavenumber `k`.
pub fn assemble_rayleigh(problem: &RayleighProblem, k: usize) -> RayleighForms {
    problem.forms(k)
}

impl RayleighForms {
    /// Number of eigenvalues of the pencil below `sigma` (Sylvester inertia
    /// of the tridiagonal `K - sigma M`).
    pub fn count_below(&self, sigma: f64) -> usize {
        let mut count = 0;
        let mut pivot = 0.0;
        for i in 0..self.diagonal.len() {
            let coupling = if i == 0 { 0.0 } else { self.off_diagonal[i - 1].powi(2) / pivot };
            pivot = self.diagonal[i] - sigma * self.mass[i] - coupling;
            if pivot == 0.0 {
                pivot = -f64::EPSILON * self.diagonal[i].abs().max(1.0);
            }
            if pivot < 0.0 {
                count += 1;
            }
        }
        count
    }

    pub fn stiffness_form(&self, v: &[f64]) -> f64 {
        let mut sum = 0.0;
        for i in 0..v.len() {
            sum += self.diagonal[i] * v[i] * v[i];
            if i + 1 < v.len() {
                sum += 2.0 * self.off_diagonal[i] * v[i] * v[i + 1];
            }
        }
        sum
    }

    pub fn mass_form(&self, v: &[f64]) -> f64 {
        v.iter().zip(&self.mass).map(|(x, m)| m * x * x).sum()
    }

    /// Rayleigh quotient of a trial vector over the nodes above the bed.
    pub fn quotient(&self, v: &[f64]) -> f64 {
        self.stiffness_form(v) / self.mass_form(v)
    }

    /// Solves `(K - sigma M) x = b` in place (Thomas algorithm).
    fn shifted_solve(&self, sigma: f64, b: &mut [f64]) {
        let n = b.len();
        let mut upper = alloc::vec![0.0; n];
        let mut pivot = self.diagonal[0] - sigma * self.mass[0];
        if n > 1 {
            upper[0] = self.off_diagonal[0] / pivot;
        }
        b[0] /= pivot;
        for i in 1..n {
            pivot = self.diagonal[i] - sigma * self.mass[i] - self.off_diagonal[i - 1] * upper[i - 1];
            if i + 1 < n {
                upper[i] = self.off_diagonal[i] / pivot;
            }
            b[i] = (b[i] - self.off_diagonal[i - 1] * b[i - 1]) / pivot;
        }
        for i in (0..n - 1).rev() {
            b[i] -= upper[i] * b[i + 1];
        }
    }

    /// Smallest eigenvalue by bisection on the inertia count, then its mode
    /// by inverse iteration with a shift just below it.
    pub fn smallest(&self, wavenumber: usize, nodes: &[f64]) -> Result<(f64, Vec<f64>), SpectrumError> {
        let trial: Vec<f64> = nodes[1..].iter().map(|z| 1.0 + z).collect();
        let mut hi = self.quotient(&trial);
        let mut lo = 0.0;
        if self.count_below(hi) == 0 {
            hi *= 1.0 + 1e-12;
        }
        while hi - lo > 1e-15 * hi {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) == 0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let shift = lo * (1.0 - 1e-10);
        let norm = self.mass_form(&trial).sqrt();
        let mut v: Vec<f64> = trial.iter().map(|x| x / norm).collect();
        for _ in 0..INVERSE_ITERATION_CAP {
            let mut next: Vec<f64> = v.iter().zip(&self.mass).map(|(x, m)| m * x).collect();
            self.shifted_solve(shift, &mut next);
            let overlap: f64 = next.iter().zip(&v).zip(&self.mass).map(|((a, b), m)| a * b * m).sum();
            let scale = self.mass_form(&next).sqrt().copysign(overlap);
            next.iter_mut().for_each(|x| *x /= scale);
            let change: Vec<f64> = next.iter().zip(&v).map(|(a, b)| a - b).collect();
            v = next;
            if self.mass_form(&change).sqrt() <= 1e-11 {
                return Ok((self.quotient(&v), v));
            }
        }
        Err(SpectrumError::NotConverged { wavenumber, quotient: self.quotient(&v) })
    }
}

/// Minimizing wavenumber, critical value and the normalized mode.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    pub lambda_crit: f64,
    /// Minimizing wavenumber index `k` (ties go to the smaller index).
    pub wavenumber: usize,
    /// Horizontal wavenumber `k pi d / L` of the mode.
    pub kappa: f64,
    /// Node positions, bed included.
    pub nodes: Vec<f64>,
    /// Mode values at the nodes (zero at the bed), scaled so the mass
    /// form equals one and the largest entry is positive.
    pub mode: Vec<f64>,
    /// Smallest eigenvalue for every wavenumber examined.
    pub per_wavenumber: Vec<f64>,
}

impl EigenResult {
    /// `c_crit = sqrt(g d / lambda_crit)`.
    pub fn critical_speed(&self, params: &FlowParameters) -> f64 {
        (params.gravity * params.depth / self.lambda_crit).sqrt()
    }
}

/// Minimizes the smallest eigenvalue over wavenumbers until `kappa^2` alone
/// exceeds ten times the incumbent.
pub fn lambda_crit(problem: &RayleighProblem) -> Result<EigenResult, SpectrumError> {
    let mut per_wavenumber = Vec::new();
    let mut best: Option<(usize, f64, Vec<f64>)> = None;
    for k in 0..=MAX_WAVENUMBER {
        if let Some((_, value, _)) = &best {
            if problem.wavenumber(k).powi(2) > 10.0 * value {
                let (wavenumber, lambda_crit, interior) = best.unwrap();
                let mut mode = alloc::vec![0.0];
                mode.extend(interior);
                let peak = mode.iter().copied().fold(0.0, |acc: f64, x| if x.abs() > acc.abs() { x } else { acc });
                if peak < 0.0 {
                    mode.iter_mut().for_each(|x| *x = -*x);
                }
                return Ok(EigenResult {
                    lambda_crit,
                    wavenumber,
                    kappa: problem.wavenumber(wavenumber),
                    nodes: problem.nodes.clone(),
                    mode,
                    per_wavenumber,
                });
            }
        }
        let forms = problem.forms(k);
        let (value, v) = forms.smallest(k, &problem.nodes)?;
        per_wavenumber.push(value);
        if best.as_ref().is_none_or(|(_, incumbent, _)| value < *incumbent) {
            best = Some((k, value, v));
        }
    }
    Err(SpectrumError::SearchExhausted)
}

/// Extrapolates values computed on grids refined by factors of two,
/// using the observed order when it is meaningful and 2 otherwise.
pub fn richardson(coarse: f64, medium: f64, fine: f64) -> f64 {
    let d1 = medium - coarse;
    let d2 = fine - medium;
    if d2 == 0.0 || d1 == 0.0 {
        return fine;
    }
    let ratio = d1 / d2;
    let factor = if ratio > 1.5 && ratio.is_finite() { ratio } else { 4.0 };
    fine + d2 / (factor - 1.0)
}

/// Outcome of comparing a Richardson number with the critical one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Supercriticality {
    pub supercritical: bool,
    pub margin: f64,
}

pub fn supercriticality_check(lambda: f64, result: &EigenResult) -> Supercriticality {
    Supercriticality { supercritical: lambda < result.lambda_crit, margin: result.lambda_crit - lambda }
}
