use alloc::vec::Vec;

use super::discretization::Discretization;
use super::SolverError;
use crate::flux::{Flux, Penalization};
use crate::linear::SparsePattern;
use crate::stratification::Stratification;
use crate::wave::WaveField;

/// Newton settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    /// Sup-norm residual tolerance.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Penalization used until `max |grad w|^2 < s/2`; `None` runs the
    /// physical flux throughout.
    pub penalization: Option<Penalization>,
    /// Sufficient-decrease constant of the backtracking line search.
    pub armijo: f64,
    /// Smallest step length tried before giving up.
    pub min_step: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 30,
            penalization: Some(Penalization::default()),
            armijo: 1e-4,
            min_step: 1.0 / 1024.0,
        }
    }
}

/// Trace of a Newton solve.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveReport {
    /// Loop passes, each starting with a residual evaluation.
    pub iterations: usize,
    /// Accepted Newton corrections.
    pub corrections: usize,
    /// Sup-norm residual at the start of every pass.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    /// Set when the history fails to decrease strictly after the first
    /// correction or the line search stalls.
    pub flagged: bool,
    /// Pass at which the penalization was switched off.
    pub penalization_off_at: Option<usize>,
}

impl SolveReport {
    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(f64::NAN)
    }

    pub(crate) fn check_monotone(&mut self) {
        if self.residual_history.windows(2).skip(1).any(|w| !(w[1] < w[0])) {
            self.flagged = true;
        }
    }
}

pub(crate) fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub(crate) fn initial_flux(disc: &Discretization, values: &[f64], options: &NewtonOptions) -> Flux {
    match options.penalization {
        Some(pen) if disc.max_gradient_sq(values) >= pen.scale() / 2.0 => Flux::Penalized(pen),
        _ => Flux::Physical,
    }
}

/// Damped Newton iteration at fixed `lambda`.
pub fn newton_solve(
    initial: &WaveField,
    density: &dyn Stratification,
    lambda: f64,
    options: &NewtonOptions,
    source: Option<&[f64]>,
) -> Result<(WaveField, SolveReport), SolverError> {
    let disc = Discretization::new(initial.grid().clone(), density);
    let pattern = SparsePattern::new(disc.grid().unknown_count(), disc.pattern_entries())?;
    newton_with(&disc, &pattern, initial, density.id(), lambda, options, source)
}

pub(crate) fn newton_with(
    disc: &Discretization,
    pattern: &SparsePattern,
    initial: &WaveField,
    density_id: u64,
    lambda: f64,
    options: &NewtonOptions,
    source: Option<&[f64]>,
) -> Result<(WaveField, SolveReport), SolverError> {
    if initial.grid() != disc.grid() {
        return Err(SolverError::GridMismatch);
    }
    let mut values = initial.values().to_vec();
    let nx = disc.grid().nx();
    let mut flux = initial_flux(disc, &values, options);
    let mut report = SolveReport::default();
    if flux == Flux::Physical && options.penalization.is_some() {
        report.penalization_off_at = Some(0);
    }
    for pass in 1..=options.max_iterations {
        report.iterations = pass;
        if let Flux::Penalized(pen) = flux {
            if disc.max_gradient_sq(&values) < pen.scale() / 2.0 {
                flux = Flux::Physical;
                report.penalization_off_at = Some(pass);
            }
        }
        let lin = disc.linearization(&values, lambda, &flux, source)?;
        let norm = sup(&lin.residual);
        report.residual_history.push(norm);
        if norm <= options.tolerance {
            if flux == Flux::Physical {
                report.converged = true;
                break;
            }
            // Converged with the penalization still active: the gradient
            // bound was never met, so the physical problem is unsolved.
            report.flagged = true;
            break;
        }
        let factored = pattern.factor(&lin.jacobian)?;
        let rhs: Vec<f64> = lin.residual.iter().map(|r| -r).collect();
        let step = factored.solve(&rhs);
        let mut t = 1.0;
        let mut accepted = false;
        let mut stagnation = None;
        while t >= options.min_step {
            let mut trial = values.clone();
            trial[nx..].iter_mut().zip(&step).for_each(|(x, d)| *x += t * d);
            match disc.residual_values(&trial, lambda, &flux, source) {
                Ok(r) if sup(&r) <= (1.0 - options.armijo * t) * norm => {
                    values = trial;
                    accepted = true;
                    break;
                }
                Ok(_) => {}
                Err(e @ SolverError::Stagnation { .. }) => stagnation = Some(e),
                Err(e) => return Err(e),
            }
            t /= 2.0;
        }
        if !accepted {
            if let Some(e) = stagnation {
                return Err(e);
            }
            report.flagged = true;
            break;
        }
        report.corrections += 1;
    }
    report.check_monotone();
    let mut out = initial.clone();
    out.set_unknowns(&values[nx..]);
    out.lambda = lambda;
    out.density_id = density_id;
    out.penalization = match flux {
        Flux::Physical => None,
        Flux::Penalized(pen) => Some(pen.scale()),
    };
    Ok((out, report))
}
