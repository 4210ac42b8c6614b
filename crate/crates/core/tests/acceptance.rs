//! Acceptance suite: one line per criterion, nonzero exit on any failure.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;
use stratwave_core::bernoulli::BernoulliData;
use stratwave_core::density::{wave_speed, wave_speed_delta, DensityProfile, FlowParameters};
use stratwave_core::fields::{
    height_to_velocity, height_to_w, implied_parameters, pressure_field, reconstruct_streamfunction, w_to_height,
};
use stratwave_core::flux::{Flux, Penalization, PENALIZATION_MAX};
use stratwave_core::grid::StripGrid;
use stratwave_core::solver::{
    branch_continuation, diagnostics, manufactured_source, newton_solve, BranchOptions, Discretization,
    ManufacturedSolution, NewtonOptions,
};
use stratwave_core::spectrum::{lambda_crit, richardson, RayleighProblem};
use stratwave_core::stratification::{RescaledDensity, Side, Stratification};
use stratwave_core::study::{run_convergence_study, StudyConfig};
use stratwave_core::wave::WaveField;

use common::{random_profile, random_profile_with, rng, unit_params};

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: String) -> Self {
        Self { passed, detail }
    }

    fn failed(detail: impl ToString) -> Self {
        Self { passed: false, detail: detail.to_string() }
    }
}

fn sci(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|v| format!("{v:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn unit_density() -> DensityProfile {
    DensityProfile::constant(-1.0, 1.0).unwrap()
}

fn two_layer_density() -> DensityProfile {
    DensityProfile::layered(vec![-1.0, -0.5, 0.0], &[2.0, 1.0]).unwrap()
}

fn linear_density() -> DensityProfile {
    DensityProfile::new(vec![-1.0, 0.0], vec![vec![1.0, -0.1]]).unwrap()
}

fn speed_identity() -> Outcome {
    let mut r = rng(20_240_601);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let p0 = -r.random_range(0.5..2.0);
        let depth = r.random_range(0.5..3.0);
        let (n, n_star) = (r.random_range(1..=4), r.random_range(1..=4));
        let rho = random_profile_with(&mut r, p0, n);
        let rho_star = random_profile_with(&mut r, p0, n_star);
        let params = FlowParameters::new(depth, 1.0, 8.0 * depth, 0.0).unwrap();
        let delta = match wave_speed_delta(&rho, &rho_star, &params) {
            Ok(delta) => delta,
            Err(e) => return Outcome::failed(e),
        };
        worst = worst.max((delta - (wave_speed(&rho, &params) - wave_speed(&rho_star, &params))).abs());
    }
    Outcome::new(worst <= 1e-11, format!("worst |delta - (c - c*)| = {worst:.2e} over 50 pairs"))
}

fn extrapolated_lambda_crit(density: &dyn Stratification) -> Result<(f64, [f64; 3]), String> {
    let mut values = [0.0; 3];
    for (slot, m) in values.iter_mut().zip([64, 128, 256]) {
        let problem = RayleighProblem::new(density, 8.0, m).map_err(|e| e.to_string())?;
        *slot = lambda_crit(&problem).map_err(|e| e.to_string())?.lambda_crit;
    }
    Ok((richardson(values[0], values[1], values[2]), values))
}

fn constant_density_lambda_crit() -> Outcome {
    let density = RescaledDensity::new(&unit_density()).unwrap();
    match extrapolated_lambda_crit(&density) {
        Ok((value, _)) => Outcome::new((value - 1.0).abs() <= 1e-6, format!("lambda_crit = {value:.12}")),
        Err(e) => Outcome::failed(e),
    }
}

/// Smallest eigenvalue of the pencil obtained with hat functions at the
/// interface and the surface, bed value zero.
fn two_by_two(z1: f64, below: f64, above: f64) -> f64 {
    let (h1, h2) = (z1 + 1.0, -z1);
    let (a, b, c) = (below / h1 + above / h2, -above / h2, above / h2);
    let (m1, m2) = (below - above, above);
    let qa = m1 * m2;
    let qb = -(a * m2 + c * m1);
    let qc = a * c - b * b;
    (-qb - (qb * qb - 4.0 * qa * qc).sqrt()) / (2.0 * qa)
}

fn two_layer_lambda_crit() -> Outcome {
    let density = RescaledDensity::new(&two_layer_density()).unwrap();
    let z1 = density.interfaces()[0];
    let oracle = two_by_two(z1, density.density(z1, Side::Below), density.density(z1, Side::Above));
    match extrapolated_lambda_crit(&density) {
        Ok((value, fine)) => Outcome::new(
            (value - oracle).abs() <= 1e-6,
            format!("lambda_crit = {value:.12} (M = 256: {:.12}), closed form {oracle:.12}", fine[2]),
        ),
        Err(e) => Outcome::failed(e),
    }
}

fn trivial_branch() -> Outcome {
    let mut r = rng(4_412);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let density = RescaledDensity::new(&random_profile(&mut r)).unwrap();
        let lambda = r.random_range(0.05..5.0);
        let grid = match StripGrid::aligned(32, 32, 8.0, density.interfaces()) {
            Ok(grid) => grid,
            Err(e) => return Outcome::failed(e),
        };
        let disc = Discretization::new(grid.clone(), &density);
        match disc.residual_values(&vec![0.0; grid.node_count()], lambda, &Flux::Physical, None) {
            Ok(res) => worst = res.iter().fold(worst, |m, v| m.max(v.abs())),
            Err(e) => return Outcome::failed(e),
        }
    }
    Outcome::new(worst <= f64::EPSILON, format!("worst |R(0)| = {worst:.2e} over 20 densities"))
}

fn manufactured_order() -> Outcome {
    let density = RescaledDensity::new(&linear_density()).unwrap();
    let m = ManufacturedSolution { amplitude: 0.1, half_period: 4.0 };
    let lambda = 0.5;
    let mut errors = Vec::new();
    for nz in [8, 16, 32, 64] {
        let grid = StripGrid::uniform(2 * nz, nz, 4.0).unwrap();
        let disc = Discretization::new(grid.clone(), &density);
        let source = match manufactured_source(&disc, &density, lambda, &Flux::Physical, &|x, z| m.jet(x, z)) {
            Ok(source) => source,
            Err(e) => return Outcome::failed(e),
        };
        let exact = WaveField::from_fn(grid.clone(), lambda, density.id(), |x, z| m.jet(x, z).w);
        let start = WaveField::zeros(grid, lambda, density.id());
        match newton_solve(&start, &density, lambda, &NewtonOptions::default(), Some(&source)) {
            Ok((w, report)) if report.converged => errors.push(w.sup_distance(&exact)),
            Ok((_, report)) => {
                return Outcome::failed(format!("Newton stalled at nz = {nz}: {:.2e}", report.final_residual()))
            }
            Err(e) => return Outcome::failed(e),
        }
    }
    let orders: Vec<f64> = errors.windows(2).map(|e| (e[0] / e[1]).log2()).collect();
    let worst = orders.iter().copied().fold(f64::INFINITY, f64::min);
    Outcome::new(worst >= 1.9, format!("errors {}, orders {orders:.3?}", sci(&errors)))
}

fn solve(rho: &DensityProfile, nx: usize, nz: usize) -> Result<WaveField, String> {
    let density = RescaledDensity::new(rho).map_err(|e| e.to_string())?;
    let grid = StripGrid::aligned(nx, nz, 8.0, density.interfaces()).map_err(|e| e.to_string())?;
    let (wave, _) = branch_continuation(&grid, &density, 0.05, &BranchOptions::default()).map_err(|e| e.to_string())?;
    Ok(wave)
}

fn qualitative(waves: &mut Vec<(DensityProfile, WaveField)>) -> Outcome {
    let rho = unit_density();
    let density = RescaledDensity::new(&rho).unwrap();
    let grid = StripGrid::aligned(256, 128, 8.0, density.interfaces()).unwrap();
    let (wave, record) = match branch_continuation(&grid, &density, 0.05, &BranchOptions::default()) {
        Ok(solved) => solved,
        Err(e) => return Outcome::failed(e),
    };
    let checks = diagnostics(&wave, &density, wave.lambda, record.lambda_crit);
    let names = ["evenness", "elevation", "supercritical", "monotone_decay", "derivative_control"];
    let mut passed = record.solves.last().is_some_and(|s| s.converged);
    let mut detail = format!("lambda = {:.10}, lambda_crit = {:.10};", wave.lambda, record.lambda_crit);
    for name in names {
        match checks.get(name) {
            Some(check) => {
                passed &= check.passed;
                detail.push_str(&format!(
                    " {name} {:.2e} (bound {:.2e}) {};",
                    check.value,
                    check.bound,
                    if check.passed { "ok" } else { "FAIL" }
                ));
            }
            None => {
                passed = false;
                detail.push_str(&format!(" {name} missing;"));
            }
        }
    }
    waves.push((rho, wave));
    Outcome::new(passed, detail)
}

fn convergence_study() -> Outcome {
    let config = StudyConfig::new(unit_params(), 0.05, vec![2, 4, 8, 16, 32], 64, 64);
    let record = match run_convergence_study(&linear_density(), &config) {
        Ok(record) => record,
        Err(e) => return Outcome::failed(e),
    };
    let ratios: Vec<f64> = record.rows.iter().map(|r| r.wave_ratio).collect();
    let bed: Vec<f64> = record.rows.iter().map(|r| r.bed_pressure_error).collect();
    let identity = record.worst_speed_identity();
    let passed = record.all_converged()
        && record.wave_ratio_bounded(3.0)
        && identity <= 1e-10
        && record.bed_pressure_decreasing();
    Outcome::new(
        passed,
        format!(
            "ratios {ratios:.4?} (bound {:.4}), speed identity {identity:.1e}, bed pressure errors {}",
            3.0 * ratios[0],
            sci(&bed)
        ),
    )
}

#[derive(Default)]
struct RoundTrips {
    height: f64,
    stream_bed: f64,
    surface: f64,
    jumps: f64,
    exact_flux: f64,
}

fn round_trip_wave(rho: &DensityProfile, wave: &WaveField, totals: &mut RoundTrips) -> Result<f64, String> {
    let params = implied_parameters(rho, &unit_params(), wave.lambda).map_err(|e| e.to_string())?;
    let height = w_to_height(wave, rho, &params).map_err(|e| e.to_string())?;
    let back = height_to_w(&height).map_err(|e| e.to_string())?;
    totals.height = totals.height.max(back.sup_distance(wave)).max((back.lambda - wave.lambda).abs());
    let nx = wave.grid().nx();
    for column in [0, nx / 8, nx / 4, nx / 2] {
        let psi = reconstruct_streamfunction(&height, column, 4).map_err(|e| e.to_string())?;
        totals.stream_bed = totals.stream_bed.max((psi.bed_value() + rho.p0()).abs());
    }
    let pressure = pressure_field(&height, &BernoulliData::new(rho, &params)).map_err(|e| e.to_string())?;
    totals.surface = totals.surface.max(pressure.surface_defect(params.p_atm));
    let jump = pressure.interface_jumps.iter().fold(0.0f64, |m, &j| m.max(j));
    totals.jumps = totals.jumps.max(jump / pressure.sup_norm());
    let eulerian = height_to_velocity(&height).map_err(|e| e.to_string())?;
    Ok((0..nx).map(|i| (eulerian.mass_flux(i, rho) - rho.p0()).abs()).fold(0.0, f64::max))
}

fn round_trips(waves: &mut Vec<(DensityProfile, WaveField)>) -> Outcome {
    let mut totals = RoundTrips::default();
    for rho in [unit_density(), two_layer_density()] {
        let wave = match solve(&rho, 128, 64) {
            Ok(wave) => wave,
            Err(e) => return Outcome::failed(e),
        };
        match round_trip_wave(&rho, &wave, &mut totals) {
            Ok(flux) => totals.exact_flux = totals.exact_flux.max(flux),
            Err(e) => return Outcome::failed(e),
        }
        waves.push((rho, wave));
    }
    let rho = linear_density();
    let mut fluxes = Vec::new();
    for nz in [64, 128, 256] {
        let wave = match solve(&rho, 32, nz) {
            Ok(wave) => wave,
            Err(e) => return Outcome::failed(e),
        };
        let mut per_grid = RoundTrips::default();
        match round_trip_wave(&rho, &wave, &mut per_grid) {
            Ok(flux) => fluxes.push(flux),
            Err(e) => return Outcome::failed(e),
        }
        totals.height = totals.height.max(per_grid.height);
        totals.stream_bed = totals.stream_bed.max(per_grid.stream_bed);
        totals.jumps = totals.jumps.max(per_grid.jumps);
        if nz == 256 {
            totals.surface = totals.surface.max(per_grid.surface);
            waves.push((rho.clone(), wave));
        }
    }
    let orders: Vec<f64> = fluxes.windows(2).map(|f| (f[0] / f[1]).log2()).collect();
    let flux_ok = orders.iter().all(|&o| o >= 1.9) && totals.exact_flux <= 1e-12;
    let passed = totals.height <= 1e-12
        && totals.stream_bed <= 1e-8
        && flux_ok
        && totals.surface <= 1e-8
        && totals.jumps <= 1e-8;
    Outcome::new(
        passed,
        format!(
            "w<->h {:.1e}, psi bed {:.1e}, mass flux {} (orders {:.2?}; layered {:.1e}), surface {:.1e}, jumps/|P| {:.1e}",
            totals.height, totals.stream_bed, sci(&fluxes), orders, totals.exact_flux, totals.surface, totals.jumps
        ),
    )
}

fn penalization_coincidence(waves: &[(DensityProfile, WaveField)]) -> Outcome {
    if waves.is_empty() {
        return Outcome::failed("no converged waves available");
    }
    let mut worst = 0.0f64;
    let mut compared = 0;
    for (rho, wave) in waves {
        let density = RescaledDensity::new(rho).unwrap();
        let disc = Discretization::new(wave.grid().clone(), &density);
        let g2 = disc.max_gradient_sq(wave.values());
        let physical = match disc.residual_values(wave.values(), wave.lambda, &Flux::Physical, None) {
            Ok(r) => r,
            Err(e) => return Outcome::failed(e),
        };
        for s in [g2 * (1.0 + 1e-9), 0.25, 0.5] {
            if s < g2 || s >= PENALIZATION_MAX {
                continue;
            }
            let flux = Flux::Penalized(Penalization::new(s).unwrap());
            let penalized = match disc.residual_values(wave.values(), wave.lambda, &flux, None) {
                Ok(r) => r,
                Err(e) => return Outcome::failed(e),
            };
            worst = physical.iter().zip(&penalized).fold(worst, |m, (a, b)| m.max((a - b).abs()));
            compared += 1;
        }
    }
    Outcome::new(
        worst <= f64::EPSILON && compared > 0,
        format!("worst difference {worst:.1e} over {compared} comparisons"),
    )
}

fn main() -> ExitCode {
    let mut waves = Vec::new();
    let mut all_passed = true;
    let mut report = |index: usize, name: &str, limit: Option<Duration>, run: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let in_time = limit.is_none_or(|l| elapsed <= l);
        let passed = outcome.passed && in_time;
        all_passed &= passed;
        let budget = limit.map_or(String::new(), |l| format!(" of {:.0} s", l.as_secs_f64()));
        println!(
            "{} [{index}] {name}: {} ({:.2} s{budget})",
            if passed { "PASS" } else { "FAIL" },
            outcome.detail,
            elapsed.as_secs_f64()
        );
    };
    let secs = |s: u64| Some(Duration::from_secs(s));
    report(1, "speed identity", secs(1), &mut speed_identity);
    report(2, "constant density lambda_crit", secs(10), &mut constant_density_lambda_crit);
    report(3, "two-layer lambda_crit", secs(10), &mut two_layer_lambda_crit);
    report(4, "trivial branch", None, &mut trivial_branch);
    report(5, "manufactured order", secs(120), &mut manufactured_order);
    report(6, "qualitative properties", secs(300), &mut || qualitative(&mut waves));
    report(7, "layered convergence study", secs(1800), &mut convergence_study);
    report(8, "round trips", secs(60), &mut || round_trips(&mut waves));
    report(9, "penalization coincidence", None, &mut || penalization_coincidence(&waves));
    if all_passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
