//! Bernoulli function, its antiderivative, and the head constants.

use alloc::vec::Vec;

use serde::Serialize;

use crate::density::{DensityError, DensityProfile, FlowParameters, ZetaMap};
use crate::quadrature::gauss16;

/// Surface head, interface heads and the additive constant of each layer.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeadConstants {
    pub surface: f64,
    /// One entry per interior interface, bottom to top.
    pub interfaces: Vec<f64>,
    /// One entry per layer, bottom to top.
    pub layer_constants: Vec<f64>,
}

/// Data determined by the density for waves that decay away from the crest.
#[derive(Debug, Clone, Serialize)]
pub struct BernoulliData {
    pub speed: f64,
    /// Richardson number `g d / c^2`.
    pub lambda: f64,
    pub heads: HeadConstants,
    #[serde(skip)]
    map: ZetaMap,
    #[serde(skip)]
    params: FlowParameters,
}

impl BernoulliData {
    pub fn new(rho: &DensityProfile, params: &FlowParameters) -> Self {
        let map = ZetaMap::new(rho);
        let speed = map.speed(params);
        let lambda = params.gravity * params.depth / (speed * speed);
        let heads = compute_heads(&map, params, speed);
        Self { speed, lambda, heads, map, params: *params }
    }

    pub fn profile(&self) -> &DensityProfile {
        self.map.profile()
    }

    pub fn map(&self) -> &ZetaMap {
        &self.map
    }

    pub fn params(&self) -> &FlowParameters {
        &self.params
    }

    fn beta_in(&self, layer: usize, p: f64) -> f64 {
        let rho = self.map.profile();
        let slope = rho.slope_in(layer, p);
        if slope == 0.0 {
            return 0.0;
        }
        let height = self.map.limiting_height(p, &self.params).expect("p inside the layer");
        slope * (0.5 * self.speed * self.speed + self.params.gravity * (height - self.params.depth))
    }

    /// `beta(-p)`; undefined on interfaces.
    pub fn beta(&self, p: f64) -> Result<f64, DensityError> {
        let rho = self.map.profile();
        rho.check_range(p)?;
        if rho.is_interface(p) {
            return Err(DensityError::InterfacePoint { p });
        }
        Ok(self.beta_in(rho.layer_of(p), p))
    }

    /// `B(p) = ∫_0^p beta(-s) ds`, layer by layer; interface jumps are
    /// carried by the layer constants instead.
    pub fn bernoulli_integral(&self, p: f64) -> Result<f64, DensityError> {
        let rho = self.map.profile();
        rho.check_range(p)?;
        let breaks = rho.breakpoints();
        let mut total = 0.0;
        for layer in (0..rho.layer_count()).rev() {
            let (a, b) = (breaks[layer], breaks[layer + 1]);
            if b <= p {
                break;
            }
            if rho.pieces()[layer].is_constant() {
                continue;
            }
            let lower = a.max(p);
            total -= gauss16(lower, b, |s| self.beta_in(layer, s));
        }
        Ok(total)
    }

    /// Additive pressure constant of the layer containing `p` (the layer
    /// above when `p` is an interface, unless `below` is set).
    pub fn layer_constant(&self, layer: usize) -> f64 {
        self.heads.layer_constants[layer]
    }
}

fn compute_heads(map: &ZetaMap, params: &FlowParameters, speed: f64) -> HeadConstants {
    let rho = map.profile();
    let c2 = speed * speed;
    let g = params.gravity;
    let top = rho.surface_density();
    let surface = top * c2 + 2.0 * g * top * params.depth;
    let n = rho.layer_count();
    let interfaces: Vec<f64> = (1..n)
        .map(|index| {
            let q = rho.breakpoints()[index];
            let height = map.limiting_height(q, params).expect("breakpoint in range");
            rho.jump(index) * (c2 + 2.0 * g * height)
        })
        .collect();
    let mut layer_constants = alloc::vec![0.0; n];
    layer_constants[n - 1] = 0.5 * surface;
    for layer in (0..n - 1).rev() {
        layer_constants[layer] = layer_constants[layer + 1] + 0.5 * interfaces[layer];
    }
    HeadConstants { surface, interfaces, layer_constants }
}

/// `beta(-p)` for a single evaluation.
pub fn bernoulli_function(rho: &DensityProfile, params: &FlowParameters, p: f64) -> Result<f64, DensityError> {
    BernoulliData::new(rho, params).beta(p)
}

/// `B(p)` for a single evaluation.
pub fn bernoulli_integral(rho: &DensityProfile, params: &FlowParameters, p: f64) -> Result<f64, DensityError> {
    BernoulliData::new(rho, params).bernoulli_integral(p)
}

pub fn head_constants(rho: &DensityProfile, params: &FlowParameters) -> HeadConstants {
    BernoulliData::new(rho, params).heads
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn unit() -> FlowParameters {
        FlowParameters::new(1.0, 1.0, 8.0, 0.0).unwrap()
    }

    fn linear() -> DensityProfile {
        DensityProfile::new(vec![-1.0, 0.0], vec![vec![1.0, -0.1]]).unwrap()
    }

    #[test]
    fn constant_density_has_no_bernoulli_function() {
        let one = DensityProfile::constant(-1.0, 1.0).unwrap();
        let data = BernoulliData::new(&one, &unit());
        assert_eq!(data.beta(-0.3).unwrap(), 0.0);
        assert_eq!(data.bernoulli_integral(-1.0).unwrap(), 0.0);
        assert_eq!(data.heads.surface, 3.0);
        assert!(data.heads.interfaces.is_empty());
        assert_eq!(data.heads.layer_constants, vec![1.5]);
        assert_eq!(data.lambda, 1.0);
    }

    #[test]
    fn linear_profile_surface_value() {
        let data = BernoulliData::new(&linear(), &unit());
        let c = data.speed;
        assert!((data.beta(0.0).unwrap() - (-0.1 * 0.5 * c * c)).abs() < 1e-14);
        assert_eq!(data.bernoulli_integral(0.0).unwrap(), 0.0);
    }

    #[test]
    fn layered_profile_values() {
        let profile = DensityProfile::layered(vec![-1.0, -0.5, 0.0], &[2.0, 1.0]).unwrap();
        let data = BernoulliData::new(&profile, &unit());
        let c = 0.5 + 2.0f64.sqrt() / 4.0;
        let h1 = 0.5 / 2.0f64.sqrt() / c;
        assert!((data.heads.surface - (c * c + 2.0)).abs() < 1e-14);
        assert!((data.heads.interfaces[0] - (c * c + 2.0 * h1)).abs() < 1e-14);
        let lc = &data.heads.layer_constants;
        assert!((lc[0] - lc[1] - 0.5 * data.heads.interfaces[0]).abs() < 1e-15);
        assert!(matches!(data.beta(-0.5), Err(DensityError::InterfacePoint { .. })));
        assert_eq!(data.beta(-0.7).unwrap(), 0.0);
        assert_eq!(data.bernoulli_integral(-0.9).unwrap(), 0.0);
    }

    #[test]
    fn splitting_a_layer_adds_no_head() {
        let whole = DensityProfile::layered(vec![-1.0, -0.5, 0.0], &[2.0, 1.0]).unwrap();
        let split = DensityProfile::layered(vec![-1.0, -0.5, -0.25, 0.0], &[2.0, 1.0, 1.0]).unwrap();
        let a = head_constants(&whole, &unit());
        let b = head_constants(&split, &unit());
        assert_eq!(b.interfaces[1], 0.0);
        assert!((a.surface - b.surface).abs() < 1e-15);
        assert!((a.interfaces[0] - b.interfaces[0]).abs() < 1e-14);
    }

    #[test]
    fn bernoulli_integral_of_linear_profile() {
        // beta(-s) = -0.1 (c^2/2 + g(h(s) - d)) with h from the square-root
        // antiderivative; integrate the closed form by composite Simpson.
        let data = BernoulliData::new(&linear(), &unit());
        let c = data.speed;
        let h = |s: f64| (2.0 / 0.1) * ((1.1f64).sqrt() - (1.0 - 0.1 * s).sqrt()) / c;
        let beta = |s: f64| -0.1 * (0.5 * c * c + (h(s) - 1.0));
        let p = -0.8;
        let n = 2000;
        let step = (0.0 - p) / n as f64;
        let mut simpson = beta(p) + beta(0.0);
        for k in 1..n {
            let s = p + step * k as f64;
            simpson += if k % 2 == 1 { 4.0 } else { 2.0 } * beta(s);
        }
        let oracle = -simpson * step / 3.0;
        assert!((data.bernoulli_integral(p).unwrap() - oracle).abs() < 1e-10);
    }
}
