#![allow(dead_code)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stratwave_core::density::{DensityProfile, FlowParameters};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn unit_params() -> FlowParameters {
    FlowParameters::new(1.0, 1.0, 8.0, 0.0).unwrap()
}

/// Coefficients in `p` of `v - a (p - b) - c (p - b)^3`.
fn expand(v: f64, a: f64, b: f64, c: f64) -> Vec<f64> {
    vec![v + a * b + c * b * b * b, -a - 3.0 * c * b * b, 3.0 * c * b, -c]
}

fn evaluate(coeffs: &[f64], p: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, k| acc * p + k)
}

/// A stable profile with `layers` cubic pieces over `[p0, 0]`, equal to one
/// at the surface, decreasing upward inside layers and jumping up (or not)
/// going down across breakpoints.
pub fn random_profile_with(rng: &mut ChaCha8Rng, p0: f64, layers: usize) -> DensityProfile {
    let width = 1.0 / layers as f64;
    let mut breakpoints = vec![p0];
    for k in (1..layers).rev() {
        breakpoints.push(p0 * width * (k as f64 + rng.random_range(-0.3..0.3)));
    }
    breakpoints.push(0.0);
    let n = breakpoints.len() - 1;
    let mut pieces = vec![Vec::new(); n];
    let mut above = 1.0;
    for layer in (0..n).rev() {
        let top = breakpoints[layer + 1];
        let jump = if layer + 1 == n || rng.random_bool(0.3) { 0.0 } else { rng.random_range(0.0..0.5) };
        let a = if rng.random_bool(0.2) { 0.0 } else { rng.random_range(0.0..0.4) };
        let c = if rng.random_bool(0.5) { 0.0 } else { rng.random_range(0.0..0.3) };
        let coeffs = expand(above + jump, a, top, c);
        above = evaluate(&coeffs, breakpoints[layer]);
        pieces[layer] = coeffs;
    }
    DensityProfile::new(breakpoints, pieces).unwrap()
}

pub fn random_profile(rng: &mut ChaCha8Rng) -> DensityProfile {
    let p0 = -rng.random_range(0.5..2.0);
    let layers = rng.random_range(1..=4);
    random_profile_with(rng, p0, layers)
}

/// Piecewise constant stable profile with `layers` layers.
pub fn random_layered(rng: &mut ChaCha8Rng, p0: f64, layers: usize) -> DensityProfile {
    let mut breakpoints: Vec<f64> = (0..layers).map(|k| p0 * (1.0 - k as f64 / layers as f64)).collect();
    breakpoints.push(0.0);
    let mut values = vec![1.0; layers];
    for k in (0..layers - 1).rev() {
        values[k] = values[k + 1] + rng.random_range(0.0..0.5);
    }
    DensityProfile::layered(breakpoints, &values).unwrap()
}
