//! Subcommand implementations. Each writes its tables through [`Outputs`]
//! and returns the summary document together with the headline lines
//! printed on stdout.

use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use stratwave_core::bernoulli::BernoulliData;
use stratwave_core::density::{layer_quantize, wave_speed, wave_speed_delta, DensityProfile, FlowParameters};
use stratwave_core::fields::{
    bed_pressure_trace, height_equation_residual, height_to_velocity, height_to_w, implied_parameters, pressure_field,
    reconstruct_streamfunction, w_to_height, EulerianFields, HeightField, PressureField,
};
use stratwave_core::grid::StripGrid;
use stratwave_core::solver::{branch_continuation, diagnostics, BranchOptions, BranchRecord, Diagnostics};
use stratwave_core::spectrum::{lambda_crit, richardson, RayleighProblem};
use stratwave_core::stratification::{RescaledDensity, Stratification};
use stratwave_core::study::{run_convergence_study, StudyConfig};
use stratwave_core::wave::WaveField;

use crate::config::{ExperimentConfig, GridSize};
use crate::error::CliError;
use crate::output::{fmt_number, Outputs, Table};
use crate::wavefile::{load_wave, wave_table};

pub struct Report {
    pub summary: Value,
    pub lines: Vec<String>,
}

fn line(key: &str, value: impl std::fmt::Display) -> String {
    format!("{key} = {value}")
}

fn num_line(key: &str, value: f64) -> String {
    line(key, fmt_number(value))
}

/// `null` for non-finite numbers, which JSON cannot hold.
fn number(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

pub fn speed(config: &ExperimentConfig, out: &mut Outputs) -> Result<Report, CliError> {
    let rho = &config.density;
    let flow = &config.flow;
    let uniform = DensityProfile::constant(rho.p0(), 1.0)?;
    let c = wave_speed(rho, flow);
    let c_uniform = wave_speed(&uniform, flow);
    let delta = wave_speed_delta(rho, &uniform, flow)?;
    let bdata = BernoulliData::new(rho, flow);
    let summary = json!({
        "command": "speed",
        "density_id": format!("{:016x}", rho.id()),
        "speed": c,
        "uniform_speed": c_uniform,
        "speed_delta": delta,
        "identity_error": (delta - (c - c_uniform)).abs(),
        "lambda": bdata.lambda,
        "heads": bdata.heads,
    });
    out.write_json("summary.json", &summary)?;
    Ok(Report { lines: vec![num_line("c", c), num_line("delta_c", delta), num_line("lambda", bdata.lambda)], summary })
}

pub fn crit(config: &ExperimentConfig, out: &mut Outputs) -> Result<Report, CliError> {
    let density = RescaledDensity::new(&config.density)?;
    let mut results = Vec::new();
    for &m in &config.spectrum.intervals {
        results.push(lambda_crit(&RayleighProblem::new(&density, config.flow.aspect(), m)?)?);
    }
    let lambdas: Vec<f64> = results.iter().map(|r| r.lambda_crit).collect();
    let extrapolated = richardson(lambdas[0], lambdas[1], lambdas[2]);
    let finest = results.last().expect("three resolutions");
    let c_crit = (config.flow.gravity * config.flow.depth / extrapolated).sqrt();

    let map = density.map();
    let mut mode = Table::new(&["zeta [-]", "p [L^2/T]", "v [-]"])
        .meta("wavenumber", finest.wavenumber)
        .meta("intervals", finest.nodes.len() - 1);
    for (zeta, v) in finest.nodes.iter().zip(&finest.mode) {
        mode.push_numbers(&[*zeta, map.p_of_zeta(*zeta)?, *v]);
    }
    out.write_table("mode.csv", &mode)?;
    let mut spectrum = Table::new(&["k", "kappa [1/L]", "lambda_k [-]"]);
    for (k, lambda) in finest.per_wavenumber.iter().enumerate() {
        spectrum.push(vec![
            k.to_string(),
            fmt_number(k as f64 * std::f64::consts::PI / config.flow.aspect()),
            fmt_number(*lambda),
        ]);
    }
    out.write_table("spectrum.csv", &spectrum)?;
    let summary = json!({
        "command": "crit",
        "intervals": config.spectrum.intervals,
        "lambda_crit_per_grid": lambdas,
        "lambda_crit": extrapolated,
        "c_crit": c_crit,
        "wavenumber": finest.wavenumber,
        "kappa": finest.kappa,
    });
    out.write_json("summary.json", &summary)?;
    Ok(Report {
        lines: vec![
            num_line("lambda_crit", extrapolated),
            num_line("c_crit", c_crit),
            line("wavenumber", finest.wavenumber),
        ],
        summary,
    })
}

fn aligned_grid(size: GridSize, config: &ExperimentConfig, density: &RescaledDensity) -> Result<StripGrid, CliError> {
    Ok(StripGrid::aligned(size.nx, size.nz, config.flow.aspect(), density.interfaces())?)
}

fn solve_wave(config: &ExperimentConfig, grid: GridSize) -> Result<(WaveField, BranchRecord, Diagnostics), CliError> {
    let density = RescaledDensity::new(&config.density)?;
    let grid = aligned_grid(grid, config, &density)?;
    let (wave, record) = branch_continuation(&grid, &density, config.wave.amplitude, &BranchOptions::default())?;
    let checks = diagnostics(&wave, &density, wave.lambda, record.lambda_crit);
    Ok((wave, record, checks))
}

fn diagnostics_json(d: &Diagnostics) -> Value {
    Value::Array(
        d.checks
            .iter()
            .map(|c| {
                json!({
                    "name": c.name,
                    "asserted": c.asserted,
                    "passed": c.passed,
                    "value": number(c.value),
                    "bound": number(c.bound),
                    "location": c.location,
                })
            })
            .collect(),
    )
}

pub fn solve(config: &ExperimentConfig, grid: GridSize, out: &mut Outputs) -> Result<Report, CliError> {
    let start = Instant::now();
    let (wave, record, checks) = solve_wave(config, grid)?;
    out.write_table("wave.csv", &wave_table(&wave))?;
    let mut branch = Table::new(&["step", "amplitude [-]", "lambda [-]", "iterations", "corrections", "residual [-]"]);
    for (step, ((r, l), s)) in record.amplitudes.iter().zip(&record.lambdas).zip(&record.solves).enumerate() {
        branch.push(vec![
            step.to_string(),
            fmt_number(*r),
            fmt_number(*l),
            s.iterations.to_string(),
            s.corrections.to_string(),
            fmt_number(s.final_residual()),
        ]);
    }
    out.write_table("branch.csv", &branch)?;
    let summary = json!({
        "command": "solve",
        "grid": [grid.nx, grid.nz],
        "amplitude": config.wave.amplitude,
        "lambda": wave.lambda,
        "lambda_crit": record.lambda_crit,
        "wavenumber": record.wavenumber,
        "halvings": record.halvings,
        "supercritical_ratio": number(record.supercritical_ratio()),
        "diagnostics": diagnostics_json(&checks),
        "diagnostics_pass": checks.asserted_pass(),
        "elapsed_seconds": start.elapsed().as_secs_f64(),
    });
    out.write_json("summary.json", &summary)?;
    Ok(Report {
        lines: vec![
            num_line("lambda", wave.lambda),
            num_line("lambda_crit", record.lambda_crit),
            line("diagnostics", if checks.asserted_pass() { "pass" } else { "fail" }),
        ],
        summary,
    })
}

pub fn approx_layers(config: &ExperimentConfig, out: &mut Outputs) -> Result<Report, CliError> {
    let rho = &config.density;
    let c_star = wave_speed(rho, &config.flow);
    let mut table = Table::new(&["N", "density_error [-]", "c_N [L/T]", "c_N - c* [L/T]", "delta_c [L/T]"])
        .meta("density_id", format!("{:016x}", rho.id()));
    let mut rows = Vec::new();
    for &n in &config.study.layers {
        let approx = layer_quantize(rho, n)?;
        let c = wave_speed(&approx.profile, &config.flow);
        let delta = wave_speed_delta(&approx.profile, rho, &config.flow)?;
        table.push_numbers(&[n as f64, approx.sup_error, c, c - c_star, delta]);
        let doc = toml::to_string(&approx.profile).map_err(|e| CliError::Config(e.to_string()))?;
        out.write(&format!("density_{n}.toml"), doc.as_bytes())?;
        rows.push(json!({ "layers": n, "density_error": approx.sup_error, "speed": c, "speed_delta": delta }));
    }
    out.write_table("layers.csv", &table)?;
    let summary = json!({ "command": "approx-layers", "reference_speed": c_star, "rows": rows });
    out.write_json("summary.json", &summary)?;
    Ok(Report { lines: vec![line("layer_counts", format!("{:?}", config.study.layers))], summary })
}

pub fn converge(config: &ExperimentConfig, grid: GridSize, out: &mut Outputs) -> Result<Report, CliError> {
    let start = Instant::now();
    let mut study = StudyConfig::new(config.flow, config.wave.amplitude, config.study.layers.clone(), grid.nx, grid.nz);
    study.homotopy_steps = config.study.homotopy_steps;
    let record = run_convergence_study(&config.density, &study)?;
    let mut table = Table::new(&[
        "N",
        "density_error [-]",
        "wave_error [-]",
        "height_error [L]",
        "speed_error [L/T]",
        "speed_delta [L/T]",
        "bed_pressure_error [L^2/T^2]",
        "wave_ratio",
        "height_ratio",
        "bed_pressure_ratio",
        "corrections",
        "converged",
    ])
    .meta("density_id", format!("{:016x}", config.density.id()))
    .meta("lambda", fmt_number(record.lambda))
    .meta("grid", format!("{}x{}", grid.nx, grid.nz));
    for row in &record.rows {
        let mut cells: Vec<String> = [
            row.layers as f64,
            row.density_error,
            row.wave_error,
            row.height_error,
            row.speed_error,
            row.speed_delta,
            row.bed_pressure_error,
            row.wave_ratio,
            row.height_ratio,
            row.bed_pressure_ratio,
        ]
        .iter()
        .map(|&v| fmt_number(v))
        .collect();
        cells.push(row.corrections.to_string());
        cells.push(row.converged.to_string());
        table.push(cells);
    }
    out.write_table("convergence.csv", &table)?;
    let summary = json!({
        "command": "converge",
        "grid": [grid.nx, grid.nz],
        "record": serde_json::to_value(&record).expect("record serializes"),
        "wave_ratio_bounded": record.wave_ratio_bounded(3.0),
        "bed_pressure_decreasing": record.bed_pressure_decreasing(),
        "worst_speed_identity": number(record.worst_speed_identity()),
        "all_converged": record.all_converged(),
        "elapsed_seconds": start.elapsed().as_secs_f64(),
    });
    out.write_json("summary.json", &summary)?;
    Ok(Report {
        lines: vec![
            num_line("lambda", record.lambda),
            num_line("wave_slope", record.slopes.wave),
            line("wave_ratio_bounded", record.wave_ratio_bounded(3.0)),
            line("bed_pressure_decreasing", record.bed_pressure_decreasing()),
        ],
        summary,
    })
}

/// The wave from `--wave` if given, otherwise a fresh solve.
pub fn obtain_wave(config: &ExperimentConfig, grid: GridSize, wave: Option<&Path>) -> Result<WaveField, CliError> {
    match wave {
        Some(path) => {
            let density = RescaledDensity::new(&config.density)?;
            load_wave(path, density.interfaces())
        }
        None => Ok(solve_wave(config, grid)?.0),
    }
}

struct Reconstruction {
    params: FlowParameters,
    height: HeightField,
    eulerian: EulerianFields,
    pressure: PressureField,
}

fn reconstruct(config: &ExperimentConfig, wave: &WaveField) -> Result<Reconstruction, CliError> {
    let params = implied_parameters(&config.density, &config.flow, wave.lambda)?;
    let height = w_to_height(wave, &config.density, &params)?;
    let eulerian = height_to_velocity(&height)?;
    let pressure = pressure_field(&height, &BernoulliData::new(&config.density, &params))?;
    Ok(Reconstruction { params, height, eulerian, pressure })
}

fn max_mass_flux_defect(r: &Reconstruction, rho: &DensityProfile) -> f64 {
    (0..r.eulerian.nx).map(|i| (r.eulerian.mass_flux(i, rho) - rho.p0()).abs()).fold(0.0, f64::max)
}

fn bed_evenness(trace: &[(f64, f64)]) -> f64 {
    let n = trace.len();
    (0..n).map(|i| (trace[i].1 - trace[(n - i) % n].1).abs()).fold(0.0, f64::max)
}

pub fn pressure(
    config: &ExperimentConfig,
    grid: GridSize,
    wave: Option<&Path>,
    out: &mut Outputs,
) -> Result<Report, CliError> {
    let wave = obtain_wave(config, grid, wave)?;
    let r = reconstruct(config, &wave)?;
    let id = format!("{:016x}", config.density.id());

    let mut height =
        Table::new(&["q [L]", "p [L^2/T]", "h [L]"]).meta("density_id", &id).meta("lambda", fmt_number(wave.lambda));
    for j in 0..r.height.p_rows().len() {
        for i in 0..r.height.grid().nx() {
            height.push_numbers(&[r.height.q(i), r.height.p_rows()[j], r.height.at(i, j)]);
        }
    }
    out.write_table("height.csv", &height)?;
    let mut eulerian = Table::new(&["x [L]", "y [L]", "u [L/T]", "v [L/T]", "psi [L^2/T]", "layer"])
        .meta("speed", fmt_number(r.eulerian.speed));
    for s in &r.eulerian.samples {
        let mut cells: Vec<String> = [s.x, s.y, s.u, s.v, s.psi].iter().map(|&v| fmt_number(v)).collect();
        cells.push(s.layer.to_string());
        eulerian.push(cells);
    }
    out.write_table("eulerian.csv", &eulerian)?;
    let mut surface = Table::new(&["x [L]", "eta [L]"]);
    for &(x, eta) in &r.eulerian.surface {
        surface.push_numbers(&[x, eta]);
    }
    out.write_table("surface.csv", &surface)?;
    let mut pressure = Table::new(&["q [L]", "p [L^2/T]", "P [L^2/T^2]"])
        .meta("p_atm", fmt_number(r.params.p_atm))
        .meta("gravity", fmt_number(r.params.gravity));
    for j in 0..r.pressure.p_rows.len() {
        for i in 0..r.pressure.nx {
            pressure.push_numbers(&[r.pressure.q[i], r.pressure.p_rows[j], r.pressure.at(i, j)]);
        }
    }
    out.write_table("pressure.csv", &pressure)?;
    let trace = bed_pressure_trace(&r.pressure);
    let mut bed = Table::new(&["q [L]", "P_b [L^2/T^2]"]);
    for &(q, p) in &trace {
        bed.push_numbers(&[q, p]);
    }
    out.write_table("bed.csv", &bed)?;

    let surface_defect = r.pressure.surface_defect(r.params.p_atm);
    let summary = json!({
        "command": "pressure",
        "lambda": wave.lambda,
        "gravity": r.params.gravity,
        "surface_defect": surface_defect,
        "interface_jumps": r.pressure.interface_jumps,
        "pressure_sup": r.pressure.sup_norm(),
        "mass_flux_defect": max_mass_flux_defect(&r, &config.density),
        "bed_evenness": bed_evenness(&trace),
        "bed_max": trace.iter().map(|t| t.1).fold(f64::NEG_INFINITY, f64::max),
        "bed_crest": trace[0].1,
    });
    out.write_json("summary.json", &summary)?;
    Ok(Report { lines: vec![num_line("surface_defect", surface_defect), num_line("bed_crest", trace[0].1)], summary })
}

const ROUND_TRIP_TOLERANCE: f64 = 1e-12;
const VELOCITY_TOLERANCE: f64 = 1e-10;
const STREAM_TOLERANCE: f64 = 1e-8;
const SAMPLED_COLUMNS: usize = 4;

pub fn transform(
    config: &ExperimentConfig,
    grid: GridSize,
    wave: Option<&Path>,
    seed: u64,
    out: &mut Outputs,
) -> Result<Report, CliError> {
    let wave = obtain_wave(config, grid, wave)?;
    let r = reconstruct(config, &wave)?;
    let rho = &config.density;

    let round_trip = height_to_w(&r.height)?.sup_distance(&wave);
    let velocity = r
        .eulerian
        .samples
        .iter()
        .map(|s| (1.0 / (rho.value_in(s.layer, s.p).sqrt() * (r.eulerian.speed - s.u)) - s.h_p).abs() / s.h_p)
        .fold(0.0, f64::max);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nx = r.height.grid().nx();
    let mut columns = Table::new(&["column", "x [L]", "bed_psi_error", "identity_defect", "steps"]).meta("seed", seed);
    let (mut bed_worst, mut identity_worst): (f64, f64) = (0.0, 0.0);
    for _ in 0..SAMPLED_COLUMNS {
        let column = rng.random_range(0..nx);
        let psi = reconstruct_streamfunction(&r.height, column, 4)?;
        let bed = (psi.bed_value() + rho.p0()).abs();
        let identity = psi.identity_defect.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        bed_worst = bed_worst.max(bed);
        identity_worst = identity_worst.max(identity);
        columns.push(vec![
            column.to_string(),
            fmt_number(psi.x),
            fmt_number(bed),
            fmt_number(identity),
            psi.steps.to_string(),
        ]);
    }
    out.write_table("stream.csv", &columns)?;

    let checks = [
        ("w_height_round_trip", round_trip, ROUND_TRIP_TOLERANCE),
        ("velocity_round_trip", velocity, VELOCITY_TOLERANCE),
        ("stream_bed_value", bed_worst, STREAM_TOLERANCE),
        ("stream_identity", identity_worst, STREAM_TOLERANCE),
    ];
    let failed: Vec<&str> = checks.iter().filter(|(_, v, t)| !(v <= t)).map(|(n, _, _)| *n).collect();
    let summary = json!({
        "command": "transform",
        "seed": seed,
        "checks": checks.iter().map(|(n, v, t)| json!({ "name": n, "value": v, "tolerance": t, "passed": v <= t })).collect::<Vec<_>>(),
        "monitored": {
            "mass_flux_defect": max_mass_flux_defect(&r, rho),
            "surface_pressure_defect": r.pressure.surface_defect(r.params.p_atm),
            "interface_jumps": r.pressure.interface_jumps,
            "pressure_sup": r.pressure.sup_norm(),
            "height_equation_residual": height_equation_residual(&r.height, &BernoulliData::new(rho, &r.params))?,
        },
    });
    out.write_json("summary.json", &summary)?;
    if !failed.is_empty() {
        return Err(CliError::Checks(failed.join(", ")));
    }
    Ok(Report { lines: checks.iter().map(|(n, v, _)| num_line(n, *v)).collect(), summary })
}
