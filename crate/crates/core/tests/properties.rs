mod common;

use proptest::prelude::*;
use rand::Rng;
use stratwave_core::density::{layer_quantize, wave_speed, wave_speed_delta, DensityProfile, FlowParameters, ZetaMap};
use stratwave_core::fields::{height_to_w, implied_parameters, w_to_height};
use stratwave_core::flux::{Flux, Penalization};
use stratwave_core::grid::StripGrid;
use stratwave_core::solver::Discretization;
use stratwave_core::spectrum::{lambda_crit, RayleighProblem};
use stratwave_core::stratification::{RescaledDensity, Stratification};
use stratwave_core::wave::WaveField;

use common::{random_layered, random_profile, random_profile_with, rng, unit_params};

fn smooth_bump(grid: StripGrid, lambda: f64, id: u64, amplitude: f64, phase: f64) -> WaveField {
    let l = grid.half_period();
    WaveField::from_fn(grid, lambda, id, |x, z| {
        amplitude * (1.0 + z) * (1.0 + 0.3 * z * z) * (core::f64::consts::PI * x / l + phase).cos().powi(2)
    })
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn speed_identity_is_exact(seed in any::<u64>(), depth in 0.2f64..5.0) {
        let mut r = rng(seed);
        let p0 = -r.random_range(0.5..2.0);
        let (n, n_star) = (r.random_range(1..=4), r.random_range(1..=4));
        let rho = random_profile_with(&mut r, p0, n);
        let rho_star = random_profile_with(&mut r, p0, n_star);
        let params = FlowParameters::new(depth, 1.0, 8.0 * depth, 0.0).unwrap();
        let delta = wave_speed_delta(&rho, &rho_star, &params).unwrap();
        let direct = wave_speed(&rho, &params) - wave_speed(&rho_star, &params);
        prop_assert!((delta - direct).abs() <= 1e-11, "{delta} vs {direct}");
    }

    #[test]
    fn limiting_height_reaches_depth(seed in any::<u64>(), depth in 0.2f64..5.0) {
        let rho = random_profile(&mut rng(seed));
        let params = FlowParameters::new(depth, 1.0, 8.0 * depth, 0.0).unwrap();
        let map = ZetaMap::new(&rho);
        prop_assert!((map.limiting_height(0.0, &params).unwrap() - depth).abs() <= 1e-12 * depth);
        prop_assert_eq!(map.limiting_height(rho.p0(), &params).unwrap(), 0.0);
    }

    #[test]
    fn zeta_round_trip(seed in any::<u64>(), t in 0.0f64..=1.0) {
        let rho = random_profile(&mut rng(seed));
        let map = ZetaMap::new(&rho);
        let p = rho.p0() * (1.0 - t);
        let back = map.p_of_zeta(map.zeta(p).unwrap()).unwrap();
        prop_assert!((back - p).abs() <= 1e-11, "{p} -> {back}");
        for &b in rho.breakpoints() {
            prop_assert!((map.p_of_zeta(map.zeta(b).unwrap()).unwrap() - b).abs() <= 1e-11);
        }
    }

    #[test]
    fn quantization_error_does_not_grow(seed in any::<u64>()) {
        let rho = random_profile(&mut rng(seed));
        let errors: Vec<f64> = [2, 4, 8, 16].iter().map(|&n| layer_quantize(&rho, n).unwrap().sup_error).collect();
        for pair in errors.windows(2) {
            prop_assert!(pair[1] <= pair[0] + 1e-14, "{errors:?}");
        }
    }

    #[test]
    fn total_is_invariant_under_layer_splitting(seed in any::<u64>(), t in 0.05f64..0.95) {
        let rho = random_profile(&mut rng(seed));
        let layer = (seed as usize) % rho.layer_count();
        let (a, b) = (rho.breakpoints()[layer], rho.breakpoints()[layer + 1]);
        let split = split_layer(&rho, layer, a + t * (b - a));
        let (q, q_split) = (ZetaMap::new(&rho).total(), ZetaMap::new(&split).total());
        prop_assert!((q - q_split).abs() <= 1e-13 * q, "{q} vs {q_split}");
    }
}

fn split_layer(rho: &DensityProfile, layer: usize, at: f64) -> DensityProfile {
    let mut breakpoints = rho.breakpoints().to_vec();
    breakpoints.insert(layer + 1, at);
    let mut pieces: Vec<Vec<f64>> = rho.pieces().iter().map(|piece| piece.trimmed().to_vec()).collect();
    pieces.insert(layer, pieces[layer].clone());
    DensityProfile::new(breakpoints, pieces).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn splitting_a_constant_layer_keeps_lambda_crit(seed in any::<u64>(), layers in 1usize..4, t in 0.2f64..0.8) {
        let mut r = rng(seed);
        let rho = random_layered(&mut r, -1.0, layers);
        let layer = r.random_range(0..layers);
        let (a, b) = (rho.breakpoints()[layer], rho.breakpoints()[layer + 1]);
        let split = split_layer(&rho, layer, a + t * (b - a));
        let (plain, refined) = (RescaledDensity::new(&rho).unwrap(), RescaledDensity::new(&split).unwrap());
        let nodes = RayleighProblem::new(&refined, 8.0, 64).unwrap().nodes().to_vec();
        let one = lambda_crit(&RayleighProblem::on_nodes(&plain, 8.0, nodes.clone()).unwrap()).unwrap();
        let two = lambda_crit(&RayleighProblem::on_nodes(&refined, 8.0, nodes).unwrap()).unwrap();
        prop_assert!((one.lambda_crit - two.lambda_crit).abs() <= 1e-10, "{} vs {}", one.lambda_crit, two.lambda_crit);
    }

    #[test]
    fn trial_quotients_bound_lambda_crit(seed in any::<u64>()) {
        let mut r = rng(seed);
        let density = RescaledDensity::new(&random_profile(&mut r)).unwrap();
        let problem = RayleighProblem::new(&density, 8.0, 32).unwrap();
        let result = lambda_crit(&problem).unwrap();
        for k in 0..4 {
            let forms = problem.forms(k);
            for _ in 0..8 {
                let trial: Vec<f64> = problem.nodes()[1..].iter().map(|z| (1.0 + z) * r.random_range(0.1..2.0)).collect();
                prop_assert!(forms.quotient(&trial) >= result.lambda_crit - 1e-10);
            }
        }
    }

    #[test]
    fn eigenvalues_grow_with_wavenumber(seed in any::<u64>()) {
        let density = RescaledDensity::new(&random_profile(&mut rng(seed))).unwrap();
        let problem = RayleighProblem::new(&density, 8.0, 32).unwrap();
        let values: Vec<f64> = (0..6).map(|k| problem.forms(k).smallest(k, problem.nodes()).unwrap().0).collect();
        for pair in values.windows(2) {
            prop_assert!(pair[1] >= pair[0] * (1.0 - 1e-12), "{values:?}");
        }
    }

    #[test]
    fn trivial_state_solves_every_problem(seed in any::<u64>(), lambda in 0.01f64..5.0) {
        let density = RescaledDensity::new(&random_profile(&mut rng(seed))).unwrap();
        let grid = StripGrid::aligned(16, 32, 4.0, density.interfaces()).unwrap();
        let disc = Discretization::new(grid.clone(), &density);
        let zeros = vec![0.0; grid.node_count()];
        let r = disc.residual_values(&zeros, lambda, &Flux::Physical, None).unwrap();
        prop_assert!(r.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn penalized_residual_coincides_below_the_scale(seed in any::<u64>(), amplitude in 0.0f64..0.05, lambda in 0.1f64..2.0) {
        let density = RescaledDensity::new(&random_profile(&mut rng(seed))).unwrap();
        let grid = StripGrid::aligned(16, 32, 4.0, density.interfaces()).unwrap();
        let disc = Discretization::new(grid.clone(), &density);
        let w = smooth_bump(grid, lambda, density.id(), amplitude, 0.3);
        let g2 = disc.max_gradient_sq(w.values());
        let s = (1.01 * g2).max(1e-3);
        prop_assume!(s < stratwave_core::flux::PENALIZATION_MAX);
        let pen = Penalization::new(s).unwrap();
        let a = disc.residual_values(w.values(), lambda, &Flux::Physical, None).unwrap();
        let b = disc.residual_values(w.values(), lambda, &Flux::Penalized(pen), None).unwrap();
        prop_assert!(sup_diff(&a, &b) == 0.0);
    }

    #[test]
    fn jacobian_agrees_with_differences(seed in any::<u64>(), lambda in 0.2f64..2.0) {
        let mut r = rng(seed);
        let density = RescaledDensity::new(&random_profile(&mut r)).unwrap();
        let grid = StripGrid::aligned(16, 24, 4.0, density.interfaces()).unwrap();
        let disc = Discretization::new(grid.clone(), &density);
        let w = smooth_bump(grid.clone(), lambda, density.id(), 0.04, 0.0);
        let flux = Flux::Physical;
        let lin = disc.linearization(w.values(), lambda, &flux, None).unwrap();
        let n = grid.unknown_count();
        let dir: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
        let mut jv = vec![0.0; n];
        for (&(row, col), v) in disc.pattern_entries().iter().zip(&lin.jacobian) {
            jv[row] += v * dir[col];
        }
        let h = 1e-6;
        let shifted = |sign: f64| {
            let mut v = w.values().to_vec();
            v[grid.nx()..].iter_mut().zip(&dir).for_each(|(x, d)| *x += sign * h * d);
            disc.residual_values(&v, lambda, &flux, None).unwrap()
        };
        let (plus, minus) = (shifted(1.0), shifted(-1.0));
        let fd: Vec<f64> = plus.iter().zip(&minus).map(|(p, m)| (p - m) / (2.0 * h)).collect();
        let scale = jv.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!(sup_diff(&jv, &fd) <= 1e-6 * scale.max(1.0));
    }

    #[test]
    fn height_round_trip(seed in any::<u64>(), amplitude in -0.1f64..0.1, lambda in 0.2f64..2.0) {
        let rho = random_profile(&mut rng(seed));
        let density = RescaledDensity::new(&rho).unwrap();
        let params = implied_parameters(&rho, &unit_params(), lambda).unwrap();
        let grid = StripGrid::aligned(16, 32, params.half_period, density.interfaces()).unwrap();
        let w = smooth_bump(grid, lambda, rho.id(), amplitude, 0.0);
        let back = height_to_w(&w_to_height(&w, &rho, &params).unwrap()).unwrap();
        prop_assert!(back.sup_distance(&w) <= 1e-12, "{}", back.sup_distance(&w));
        prop_assert!((back.lambda - lambda).abs() <= 1e-12 * lambda);
    }
}
