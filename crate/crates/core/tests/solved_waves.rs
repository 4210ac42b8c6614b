mod common;

use stratwave_core::bernoulli::BernoulliData;
use stratwave_core::density::DensityProfile;
use stratwave_core::fields::{height_equation_residual, implied_parameters, pressure_field, w_to_height};
use stratwave_core::grid::StripGrid;
use stratwave_core::solver::{branch_continuation, diagnostics, BranchOptions};
use stratwave_core::stratification::{RescaledDensity, Stratification};
use stratwave_core::wave::WaveField;

use common::unit_params;

fn solve(rho: &DensityProfile, nx: usize, nz: usize) -> WaveField {
    let density = RescaledDensity::new(rho).unwrap();
    let grid = StripGrid::aligned(nx, nz, 8.0, density.interfaces()).unwrap();
    let (wave, record) = branch_continuation(&grid, &density, 0.05, &BranchOptions::default()).unwrap();
    assert!(diagnostics(&wave, &density, wave.lambda, record.lambda_crit).asserted_pass());
    wave
}

fn residual(rho: &DensityProfile, wave: &WaveField) -> f64 {
    let params = implied_parameters(rho, &unit_params(), wave.lambda).unwrap();
    let height = w_to_height(wave, rho, &params).unwrap();
    height_equation_residual(&height, &BernoulliData::new(rho, &params)).unwrap()
}

#[test]
fn height_equation_residual_shrinks_under_refinement() {
    let rho = DensityProfile::new(vec![-1.0, 0.0], vec![vec![1.0, -0.1]]).unwrap();
    let coarse = residual(&rho, &solve(&rho, 32, 32));
    let fine = residual(&rho, &solve(&rho, 32, 64));
    let finer = residual(&rho, &solve(&rho, 32, 128));
    // One-sided h_p on the rows next to the bed and surface limits this to first order.
    assert!(fine < coarse / 1.8 && finer < fine / 1.8, "{coarse:e} -> {fine:e} -> {finer:e}");
}

#[test]
fn layered_waves_keep_pressure_continuous() {
    let rho = DensityProfile::layered(vec![-1.0, -0.6, -0.3, 0.0], &[1.4, 1.2, 1.0]).unwrap();
    let wave = solve(&rho, 32, 48);
    let params = implied_parameters(&rho, &unit_params(), wave.lambda).unwrap();
    let height = w_to_height(&wave, &rho, &params).unwrap();
    let pressure = pressure_field(&height, &BernoulliData::new(&rho, &params)).unwrap();
    assert_eq!(pressure.interface_jumps.len(), 2);
    assert!(pressure.interface_jumps.iter().all(|&j| j <= 1e-12 * pressure.sup_norm()));
    assert!(pressure.surface_defect(params.p_atm) <= 1e-12);
    assert!(residual(&rho, &wave) <= 1e-9);
}
