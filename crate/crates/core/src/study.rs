//! Convergence of many-layered waves to a continuously stratified one.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::bernoulli::BernoulliData;
use crate::density::{
    layer_quantize, wave_speed, wave_speed_delta, DensityError, DensityProfile, FlowParameters, ParameterError,
};
use crate::fields::{bed_pressure_trace, implied_parameters, pressure_field, w_to_height, FieldError, HeightField};
use crate::grid::StripGrid;
use crate::solver::{branch_continuation, density_continuation, diagnostics, newton_solve, BranchOptions, SolverError};
use crate::spectrum::{lambda_crit, RayleighProblem};
use crate::stratification::{RescaledDensity, Stratification};
use crate::wave::WaveField;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StudyError {
    #[error(transparent)]
    Density(#[from] DensityError),
    #[error(transparent)]
    Parameters(#[from] ParameterError),
    #[error("reference wave: {0}")]
    Reference(#[from] SolverError),
    #[error("reference fields: {0}")]
    Fields(#[from] FieldError),
    #[error("layer counts must be positive and strictly increasing")]
    Sweep,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    /// Depth, half-period and reference pressure; gravity is implied by the
    /// frozen `lambda` of the reference wave.
    pub params: FlowParameters,
    pub amplitude: f64,
    pub layers: Vec<usize>,
    pub nx: usize,
    pub nz: usize,
    /// Increments of the density homotopy for each layered wave.
    pub homotopy_steps: usize,
    pub branch: BranchOptions,
}

impl StudyConfig {
    pub fn new(params: FlowParameters, amplitude: f64, layers: Vec<usize>, nx: usize, nz: usize) -> Self {
        Self { params, amplitude, layers, nx, nz, homotopy_steps: 4, branch: BranchOptions::default() }
    }
}

/// Distances between the `n`-layer wave and the reference wave.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct StudyRow {
    pub layers: usize,
    /// `sup_p |rho_N - rho*|`.
    pub density_error: f64,
    pub wave_error: f64,
    pub height_error: f64,
    /// `|c_N - c*|` from the two speeds.
    pub speed_error: f64,
    /// `c_N - c*` from the combined integrand.
    pub speed_delta: f64,
    pub bed_pressure_error: f64,
    pub wave_ratio: f64,
    pub height_ratio: f64,
    pub bed_pressure_ratio: f64,
    pub corrections: usize,
    pub converged: bool,
    pub diagnostics_pass: bool,
    pub failure: Option<String>,
}

impl StudyRow {
    /// Discrepancy between the two ways of computing the speed change.
    pub fn speed_identity_error(&self) -> f64 {
        (self.speed_error - self.speed_delta.abs()).abs()
    }

    fn failed(layers: usize, density_error: f64, reason: String) -> Self {
        Self {
            layers,
            density_error,
            wave_error: f64::NAN,
            height_error: f64::NAN,
            speed_error: f64::NAN,
            speed_delta: f64::NAN,
            bed_pressure_error: f64::NAN,
            wave_ratio: f64::NAN,
            height_ratio: f64::NAN,
            bed_pressure_ratio: f64::NAN,
            corrections: 0,
            converged: false,
            diagnostics_pass: false,
            failure: Some(reason),
        }
    }
}

/// Least-squares slopes of `log error` against `log N`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct StudySlopes {
    pub density: f64,
    pub wave: f64,
    pub height: f64,
    pub bed_pressure: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ConvergenceRecord {
    pub lambda: f64,
    pub lambda_crit: f64,
    pub amplitude: f64,
    pub reference_speed: f64,
    pub reference_corrections: usize,
    pub rows: Vec<StudyRow>,
    pub slopes: StudySlopes,
}

impl ConvergenceRecord {
    /// Every wave ratio stays within `factor` times the first one.
    pub fn wave_ratio_bounded(&self, factor: f64) -> bool {
        match self.rows.first() {
            Some(first) if first.wave_ratio.is_finite() => {
                self.rows.iter().all(|r| r.wave_ratio <= factor * first.wave_ratio)
            }
            _ => false,
        }
    }

    pub fn bed_pressure_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].bed_pressure_error < w[0].bed_pressure_error)
    }

    pub fn worst_speed_identity(&self) -> f64 {
        self.rows
            .iter()
            .map(StudyRow::speed_identity_error)
            .fold(0.0, |m, e| if e.is_nan() { f64::NAN } else { m.max(e) })
    }

    pub fn all_converged(&self) -> bool {
        self.rows.iter().all(|r| r.converged)
    }
}

fn slope(points: impl Iterator<Item = (f64, f64)>) -> f64 {
    let samples: Vec<(f64, f64)> =
        points.filter(|&(_, e)| e > 0.0 && e.is_finite()).map(|(n, e)| (n.ln(), e.ln())).collect();
    if samples.len() < 2 {
        return f64::NAN;
    }
    let count = samples.len() as f64;
    let (mx, my) = samples.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / count, b + y / count));
    let (sxy, sxx) =
        samples.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + (x - mx) * (y - my), b + (x - mx) * (x - mx)));
    sxy / sxx
}

fn ratio(numerator: f64, denominator: f64) -> f64 {
    if denominator == 0.0 && numerator == 0.0 {
        0.0
    } else {
        numerator / denominator
    }
}

fn sup_difference(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x.1 - y.1).abs()))
}

/// Heights of `layered` compared with `reference` on the streamlines of
/// `layered`.
fn height_distance(layered: &HeightField, reference: &HeightField) -> f64 {
    let grid = layered.grid();
    let mut worst: f64 = 0.0;
    for (j, &p) in layered.p_rows().iter().enumerate() {
        for i in 0..grid.nx() {
            worst = worst.max((layered.at(i, j) - reference.value_at(i, p)).abs());
        }
    }
    worst
}

struct Reference<'a> {
    profile: &'a DensityProfile,
    density: RescaledDensity,
    wave: WaveField,
    lambda: f64,
    config: &'a StudyConfig,
}

impl Reference<'_> {
    fn row(&self, n: usize) -> StudyRow {
        let approximation = match layer_quantize(self.profile, n) {
            Ok(a) => a,
            Err(e) => return StudyRow::failed(n, f64::NAN, format!("{e}")),
        };
        let density_error = approximation.sup_error;
        match self.compare(&approximation.profile, density_error) {
            Ok(mut row) => {
                row.layers = n;
                row
            }
            Err(e) => StudyRow::failed(n, density_error, format!("{e}")),
        }
    }

    fn compare(&self, profile: &DensityProfile, density_error: f64) -> Result<StudyRow, StudyError> {
        let config = self.config;
        let layered = RescaledDensity::new(profile)?;
        let mut interfaces: Vec<f64> = layered.interfaces().iter().chain(self.density.interfaces()).copied().collect();
        interfaces.sort_by(f64::total_cmp);
        interfaces.dedup();
        let grid =
            StripGrid::aligned(config.nx, config.nz, config.params.aspect(), &interfaces).map_err(SolverError::from)?;

        let start = self.wave.resample_rows(grid.clone());
        let (star, report) = newton_solve(&start, &self.density, self.lambda, &config.branch.newton, None)?;
        let mut corrections = report.corrections;
        let mut converged = report.converged;
        let (wave, record) = density_continuation(
            &star,
            &self.density,
            &layered,
            self.lambda,
            config.homotopy_steps,
            &config.branch.newton,
        )?;
        corrections += record.corrections();
        converged &= record.converged();

        let star_params = implied_parameters(self.profile, &config.params, self.lambda)?;
        let layered_params = implied_parameters(profile, &config.params, self.lambda)?;
        let star_height = w_to_height(&star, self.profile, &star_params)?;
        let layered_height = w_to_height(&wave, profile, &layered_params)?;
        let star_bed =
            bed_pressure_trace(&pressure_field(&star_height, &BernoulliData::new(self.profile, &star_params))?);
        let layered_bed =
            bed_pressure_trace(&pressure_field(&layered_height, &BernoulliData::new(profile, &layered_params))?);

        let wave_error = wave.sup_distance(&star);
        let height_error = height_distance(&layered_height, &star_height);
        let bed_pressure_error = sup_difference(&layered_bed, &star_bed);
        let speed_error = (wave_speed(profile, &config.params) - wave_speed(self.profile, &config.params)).abs();
        let speed_delta = wave_speed_delta(profile, self.profile, &config.params)?;

        let crit = RayleighProblem::on_nodes(&layered, grid.half_period(), grid.rows().to_vec())
            .and_then(|problem| lambda_crit(&problem))
            .map(|e| e.lambda_crit)
            .unwrap_or(f64::NAN);
        let diagnostics_pass = diagnostics(&wave, &layered, self.lambda, crit).asserted_pass();

        Ok(StudyRow {
            layers: 0,
            density_error,
            wave_error,
            height_error,
            speed_error,
            speed_delta,
            bed_pressure_error,
            wave_ratio: ratio(wave_error, density_error),
            height_ratio: ratio(height_error, density_error),
            bed_pressure_ratio: ratio(bed_pressure_error, density_error),
            corrections,
            converged,
            diagnostics_pass,
            failure: None,
        })
    }
}

/// Solves the reference wave of amplitude `config.amplitude`, then for each
/// layer count quantizes the density, carries the wave over at the same
/// `lambda`, and measures every distance. A failed layered solve is
/// recorded in its row and the sweep continues.
pub fn run_convergence_study(
    reference: &DensityProfile,
    config: &StudyConfig,
) -> Result<ConvergenceRecord, StudyError> {
    if config.layers.is_empty() || config.layers[0] == 0 || config.layers.windows(2).any(|w| w[1] <= w[0]) {
        return Err(StudyError::Sweep);
    }
    config.params.validate()?;
    let density = RescaledDensity::new(reference)?;
    let grid = StripGrid::aligned(config.nx, config.nz, config.params.aspect(), density.interfaces())
        .map_err(SolverError::from)?;
    let (wave, branch) = branch_continuation(&grid, &density, config.amplitude, &config.branch)?;
    let lambda = wave.lambda;
    let study = Reference { profile: reference, density, wave, lambda, config };
    let rows: Vec<StudyRow> = config.layers.iter().map(|&n| study.row(n)).collect();
    let series = |f: fn(&StudyRow) -> f64| slope(rows.iter().map(|r| (r.layers as f64, f(r))));
    let slopes = StudySlopes {
        density: series(|r| r.density_error),
        wave: series(|r| r.wave_error),
        height: series(|r| r.height_error),
        bed_pressure: series(|r| r.bed_pressure_error),
    };
    Ok(ConvergenceRecord {
        lambda,
        lambda_crit: branch.lambda_crit,
        amplitude: config.amplitude,
        reference_speed: wave_speed(reference, &config.params),
        reference_corrections: branch.solves.iter().map(|s| s.corrections).sum(),
        rows,
        slopes,
    })
}
