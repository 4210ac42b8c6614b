use alloc::vec::Vec;
use core::f64::consts::PI;

use super::discretization::Discretization;
use super::newton::{initial_flux, newton_with, sup, NewtonOptions, SolveReport};
use super::SolverError;
use crate::flux::Flux;
use crate::grid::{GridError, StripGrid};
use crate::linear::SparsePattern;
use crate::spectrum::{lambda_crit, EigenResult, RayleighProblem};
use crate::stratification::{sup_distance, Blend, Stratification};
use crate::wave::WaveField;

/// Settings for departing the trivial branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchOptions {
    /// Largest amplitude accepted.
    pub amplitude_cap: f64,
    /// Number of equal amplitude steps tried first.
    pub initial_steps: usize,
    /// Step halvings allowed before giving up.
    pub max_halvings: usize,
    pub newton: NewtonOptions,
}

impl Default for BranchOptions {
    fn default() -> Self {
        Self { amplitude_cap: 0.2, initial_steps: 4, max_halvings: 8, newton: NewtonOptions::default() }
    }
}

/// Path followed from the bifurcation point.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchRecord {
    pub lambda_crit: f64,
    /// Wavenumber index of the mode used as predictor.
    pub wavenumber: usize,
    pub amplitudes: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub halvings: usize,
    pub solves: Vec<SolveReport>,
    /// Final `∫ rho |grad w|^2 / (1 + w_zeta)`.
    pub energy: f64,
}

impl BranchRecord {
    /// `(lambda_crit - lambda) / R^(4/3)` at the final amplitude.
    pub fn supercritical_ratio(&self) -> f64 {
        match (self.amplitudes.last(), self.lambdas.last()) {
            (Some(r), Some(l)) => (self.lambda_crit - l) / r.powf(4.0 / 3.0),
            _ => f64::NAN,
        }
    }
}

/// Critical mode of `density` on the rows of `grid`, extended in `xi` as
/// `v(zeta) cos(k pi xi / half_period)`.
fn mode_field(grid: &StripGrid, eigen: &EigenResult) -> Vec<f64> {
    let mut values = alloc::vec![0.0; grid.node_count()];
    let k = eigen.wavenumber as f64 * PI / grid.half_period();
    for j in 1..grid.rows().len() {
        for i in 0..grid.nx() {
            values[grid.node(i, j)] = eigen.mode[j] * (k * grid.xi(i)).cos();
        }
    }
    values
}

/// Newton on `R(w, lambda) = 0`, `sqrt(E(w)) = target` with `lambda`
/// unknown; the bordered system is reduced by block elimination.
fn bordered_newton(
    disc: &Discretization,
    pattern: &SparsePattern,
    mut values: Vec<f64>,
    mut lambda: f64,
    target: f64,
    options: &NewtonOptions,
) -> Result<(Vec<f64>, f64, SolveReport), SolverError> {
    let nx = disc.grid().nx();
    let mut flux = initial_flux(disc, &values, options);
    let mut report = SolveReport::default();
    let evaluate = |values: &[f64], lambda: f64, flux: &Flux| -> Result<f64, SolverError> {
        let r = disc.residual_values(values, lambda, flux, None)?;
        let e = disc.energy(values)?;
        Ok(sup(&r).max((e.sqrt() - target).abs()))
    };
    for pass in 1..=options.max_iterations {
        report.iterations = pass;
        if let Flux::Penalized(pen) = flux {
            if disc.max_gradient_sq(&values) < pen.scale() / 2.0 {
                flux = Flux::Physical;
                report.penalization_off_at = Some(pass);
            }
        }
        let lin = disc.linearization(&values, lambda, &flux, None)?;
        let (energy, grad) = disc.energy_with_gradient(&values)?;
        let root = energy.sqrt();
        let constraint = root - target;
        let norm = sup(&lin.residual).max(constraint.abs());
        report.residual_history.push(norm);
        if norm <= options.tolerance {
            report.converged = flux == Flux::Physical;
            report.flagged |= !report.converged;
            break;
        }
        let factored = pattern.factor(&lin.jacobian)?;
        let rhs: Vec<f64> = lin.residual.iter().map(|r| -r).collect();
        let a = factored.solve(&rhs);
        let b = factored.solve(&lin.lambda_derivative);
        let g: Vec<f64> = grad.iter().map(|x| x / (2.0 * root)).collect();
        let ga: f64 = g.iter().zip(&a).map(|(x, y)| x * y).sum();
        let gb: f64 = g.iter().zip(&b).map(|(x, y)| x * y).sum();
        let dlambda = (ga + constraint) / gb;
        let step: Vec<f64> = a.iter().zip(&b).map(|(a, b)| a - dlambda * b).collect();
        let mut t = 1.0;
        let mut accepted = false;
        while t >= options.min_step {
            let mut trial = values.clone();
            trial[nx..].iter_mut().zip(&step).for_each(|(x, d)| *x += t * d);
            let trial_lambda = lambda + t * dlambda;
            if let Ok(n) = evaluate(&trial, trial_lambda, &flux) {
                if n <= (1.0 - options.armijo * t) * norm {
                    values = trial;
                    lambda = trial_lambda;
                    accepted = true;
                    break;
                }
            }
            t /= 2.0;
        }
        if !accepted {
            report.flagged = true;
            break;
        }
        report.corrections += 1;
    }
    report.check_monotone();
    Ok((values, lambda, report))
}

/// Follows the branch bifurcating from the critical Richardson number up
/// to the energy amplitude `amplitude`, with `lambda` as an unknown.
pub fn branch_continuation(
    grid: &StripGrid,
    density: &dyn Stratification,
    amplitude: f64,
    options: &BranchOptions,
) -> Result<(WaveField, BranchRecord), SolverError> {
    if !(amplitude > 0.0 && amplitude <= options.amplitude_cap) {
        return Err(SolverError::Amplitude { amplitude, cap: options.amplitude_cap });
    }
    let problem = RayleighProblem::on_nodes(density, grid.half_period(), grid.rows().to_vec())?;
    let eigen = lambda_crit(&problem)?;
    let disc = Discretization::new(grid.clone(), density);
    let pattern = SparsePattern::new(grid.unknown_count(), disc.pattern_entries())?;
    let mode = mode_field(grid, &eigen);
    let probe = 1e-4;
    let scaled: Vec<f64> = mode.iter().map(|v| probe * v).collect();
    let mode_amplitude = disc.energy(&scaled)?.sqrt() / probe;

    let mut record = BranchRecord {
        lambda_crit: eigen.lambda_crit,
        wavenumber: eigen.wavenumber,
        amplitudes: Vec::new(),
        lambdas: Vec::new(),
        halvings: 0,
        solves: Vec::new(),
        energy: 0.0,
    };
    let initial_step = amplitude / options.initial_steps.max(1) as f64;
    let mut step = initial_step;
    let mut successes = 0;
    // Last two accepted points; the bifurcation point stands in for the
    // first of them.
    let mut previous = (0.0, alloc::vec![0.0; grid.node_count()], eigen.lambda_crit);
    let mut current: Option<(f64, Vec<f64>, f64)> = None;
    loop {
        let reached = current.as_ref().map_or(0.0, |c| c.0);
        if reached >= amplitude {
            break;
        }
        let next = (reached + step).min(amplitude);
        let (guess, guess_lambda) = match &current {
            None => (mode.iter().map(|v| v * next / mode_amplitude).collect::<Vec<f64>>(), eigen.lambda_crit),
            Some((r, w, l)) => {
                let s = (next - r) / (r - previous.0);
                let w: Vec<f64> = w.iter().zip(&previous.1).map(|(a, b)| a + s * (a - b)).collect();
                (w, l + s * (l - previous.2))
            }
        };
        let attempt = bordered_newton(&disc, &pattern, guess, guess_lambda, next, &options.newton);
        match attempt {
            Ok((values, lambda, report)) if report.converged => {
                record.amplitudes.push(next);
                record.lambdas.push(lambda);
                record.solves.push(report);
                if let Some(c) = current.take() {
                    previous = c;
                }
                current = Some((next, values, lambda));
                successes += 1;
                if successes >= 3 && step < initial_step {
                    step = (2.0 * step).min(initial_step);
                    successes = 0;
                }
            }
            _ => {
                record.halvings += 1;
                successes = 0;
                step /= 2.0;
                if record.halvings > options.max_halvings {
                    return Err(SolverError::BranchStalled { amplitude: next, halvings: record.halvings });
                }
            }
        }
    }
    let (_, values, lambda) = current.expect("at least one accepted step");
    let mut wave = WaveField::zeros(grid.clone(), lambda, density.id());
    wave.set_unknowns(&values[grid.nx()..]);
    let sup_w = wave.sup_norm();
    if sup_w < 1e-8 {
        return Err(SolverError::TrivialBranch { sup: sup_w });
    }
    record.energy = disc.energy(wave.values())?;
    Ok((wave, record))
}

/// Outcome of a homotopy in the density at fixed `lambda`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityRecord {
    pub solves: Vec<SolveReport>,
    /// Homotopy parameter of the first failing step.
    pub failed_at: Option<f64>,
    /// Sup distance between the two densities in `zeta`.
    pub density_distance: f64,
    /// Sup distance between the returned field and the starting one.
    pub wave_distance: f64,
}

impl DensityRecord {
    pub fn corrections(&self) -> usize {
        self.solves.iter().map(|s| s.corrections).sum()
    }

    pub fn converged(&self) -> bool {
        self.failed_at.is_none()
    }
}

/// Deforms the density from `rho_star` to `rho_target` in `steps` equal
/// increments, re-solving at each one from the previous field.
pub fn density_continuation(
    w_star: &WaveField,
    rho_star: &dyn Stratification,
    rho_target: &dyn Stratification,
    lambda: f64,
    steps: usize,
    options: &NewtonOptions,
) -> Result<(WaveField, DensityRecord), SolverError> {
    let grid = w_star.grid();
    for &zeta in rho_star.interfaces().iter().chain(rho_target.interfaces()) {
        if grid.row_of(zeta).is_none() {
            return Err(GridError::NotAligned { zeta }.into());
        }
    }
    let pattern =
        SparsePattern::new(grid.unknown_count(), Discretization::new(grid.clone(), rho_star).pattern_entries())?;
    let steps = steps.max(1);
    let mut record = DensityRecord {
        solves: Vec::new(),
        failed_at: None,
        density_distance: sup_distance(rho_star, rho_target, 4096),
        wave_distance: 0.0,
    };
    let mut wave = w_star.clone();
    for k in 1..=steps {
        let t = k as f64 / steps as f64;
        let blend = Blend::new(rho_star, rho_target, t);
        let disc = Discretization::new(grid.clone(), &blend);
        let (next, report) = newton_with(&disc, &pattern, &wave, blend.id(), lambda, options, None)?;
        let converged = report.converged;
        record.solves.push(report);
        wave = next;
        if !converged {
            record.failed_at = Some(t);
            break;
        }
    }
    record.wave_distance = wave.sup_distance(w_star);
    Ok((wave, record))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::DensityProfile;
    use crate::stratification::RescaledDensity;
    use alloc::vec;

    fn unit() -> RescaledDensity {
        RescaledDensity::new(&DensityProfile::constant(-1.0, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn small_branch_matches_uniform_ramp() {
        // The critical mode is xi-independent, and so is the branch: a
        // ramp w = a (1 + zeta) with lambda = (2 + a) / (2 (1 + a)^2).
        let density = unit();
        let grid = StripGrid::uniform(16, 8, 8.0).unwrap();
        let amplitude = 0.05;
        let (wave, record) = branch_continuation(&grid, &density, amplitude, &BranchOptions::default()).unwrap();
        assert_eq!(record.wavenumber, 0);
        let a = wave.at(0, 8);
        assert!((2.0 * 8.0 * a * a / (1.0 + a) - amplitude * amplitude).abs() < 1e-12);
        let lambda = *record.lambdas.last().unwrap();
        assert!((lambda - (2.0 + a) / (2.0 * (1.0 + a) * (1.0 + a))).abs() < 1e-10);
        for j in 0..=8 {
            for i in 0..16 {
                assert!((wave.at(i, j) - a * (1.0 + grid.rows()[j])).abs() < 1e-10);
            }
        }
        assert!(((record.energy - amplitude * amplitude) / (amplitude * amplitude)).abs() < 1e-8);
        assert!(lambda < record.lambda_crit);
    }

    #[test]
    fn amplitude_cap_is_enforced() {
        let grid = StripGrid::uniform(16, 8, 8.0).unwrap();
        let err = branch_continuation(&grid, &unit(), 0.3, &BranchOptions::default()).unwrap_err();
        assert!(matches!(err, SolverError::Amplitude { .. }));
    }

    #[test]
    fn identical_densities_leave_the_wave_alone() {
        let density = unit();
        let grid = StripGrid::uniform(16, 8, 8.0).unwrap();
        let (wave, _) = branch_continuation(&grid, &density, 0.05, &BranchOptions::default()).unwrap();
        let (same, record) =
            density_continuation(&wave, &density, &density, wave.lambda, 3, &NewtonOptions::default()).unwrap();
        assert_eq!(record.corrections(), 0);
        assert!(record.converged());
        assert_eq!(same.values(), wave.values());
        assert_eq!(record.density_distance, 0.0);
    }

    #[test]
    fn homotopy_to_a_layered_density() {
        let smooth =
            RescaledDensity::new(&DensityProfile::new(vec![-1.0, 0.0], vec![vec![1.0, -0.1]]).unwrap()).unwrap();
        let layered_profile = crate::density::layer_quantize(smooth.profile(), 2).unwrap().profile;
        let layered = RescaledDensity::new(&layered_profile).unwrap();
        let grid = StripGrid::aligned(16, 16, 8.0, layered.interfaces()).unwrap();
        let (w_star, _) = branch_continuation(&grid, &smooth, 0.05, &BranchOptions::default()).unwrap();
        let (w, record) =
            density_continuation(&w_star, &smooth, &layered, w_star.lambda, 4, &NewtonOptions::default()).unwrap();
        assert!(record.converged());
        assert_eq!(w.density_id, layered.id());
        let ratio = record.wave_distance / record.density_distance;
        assert!(ratio.is_finite() && ratio > 0.0);
    }
}
