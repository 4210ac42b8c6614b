//! Densities as functions of the rescaled vertical coordinate `zeta ∈ [-1, 0]`.

use alloc::vec::Vec;

use crate::density::{DensityError, DensityProfile, FlowParameters, ZetaMap};

/// Which one-sided limit to take at an interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Below,
    Above,
}

/// A stable density profile in the rescaled coordinate.
pub trait Stratification {
    /// Interior interfaces, strictly increasing inside (-1, 0).
    fn interfaces(&self) -> &[f64];
    /// Density, taking the one-sided limit `side` at interfaces.
    fn density(&self, zeta: f64, side: Side) -> f64;
    /// Derivative with respect to `zeta` within the layer selected by `side`.
    fn density_slope(&self, zeta: f64, side: Side) -> f64;

    /// Lower minus upper limit at `zeta`; zero away from interfaces.
    fn jump(&self, zeta: f64) -> f64 {
        self.density(zeta, Side::Below) - self.density(zeta, Side::Above)
    }

    /// Identifier of the underlying profile for provenance records.
    fn id(&self) -> u64;
}

/// `rho(p(zeta))` for a normalized [`DensityProfile`].
#[derive(Debug, Clone, PartialEq)]
pub struct RescaledDensity {
    map: ZetaMap,
    interfaces: Vec<f64>,
    id: u64,
}

impl RescaledDensity {
    pub fn new(profile: &DensityProfile) -> Result<Self, DensityError> {
        profile.check_normalized()?;
        let map = ZetaMap::new(profile);
        let breaks = map.zeta_breaks();
        let interfaces = breaks[1..breaks.len() - 1].to_vec();
        Ok(Self { map, interfaces, id: profile.id() })
    }

    pub fn map(&self) -> &ZetaMap {
        &self.map
    }

    pub fn profile(&self) -> &DensityProfile {
        self.map.profile()
    }

    fn locate(&self, zeta: f64, side: Side) -> (usize, f64) {
        let zeta = zeta.clamp(-1.0, 0.0);
        let layer = self.map.layer_of_zeta(zeta, side == Side::Below);
        let p = self.map.p_of_zeta(zeta).expect("zeta clamped to [-1, 0]");
        (layer, p)
    }
}

/// Rescales a normalized profile onto `[-1, 0]`.
pub fn rescale_density(rho: &DensityProfile, _params: &FlowParameters) -> Result<RescaledDensity, DensityError> {
    RescaledDensity::new(rho)
}

impl Stratification for RescaledDensity {
    fn interfaces(&self) -> &[f64] {
        &self.interfaces
    }

    fn density(&self, zeta: f64, side: Side) -> f64 {
        let (layer, p) = self.locate(zeta, side);
        self.map.profile().value_in(layer, p)
    }

    fn density_slope(&self, zeta: f64, side: Side) -> f64 {
        let (layer, p) = self.locate(zeta, side);
        self.map.profile().slope_in(layer, p) * self.map.stretch(layer, p)
    }

    fn id(&self) -> u64 {
        self.id
    }
}

/// Convex combination `(1 - t) a + t b` of two stratifications.
pub struct Blend<'a> {
    start: &'a dyn Stratification,
    end: &'a dyn Stratification,
    t: f64,
    interfaces: Vec<f64>,
}

impl<'a> Blend<'a> {
    pub fn new(start: &'a dyn Stratification, end: &'a dyn Stratification, t: f64) -> Self {
        let mut interfaces: Vec<f64> = start.interfaces().iter().chain(end.interfaces()).copied().collect();
        interfaces.sort_by(|a, b| a.partial_cmp(b).unwrap());
        interfaces.dedup();
        Self { start, end, t, interfaces }
    }
}

impl Stratification for Blend<'_> {
    fn interfaces(&self) -> &[f64] {
        &self.interfaces
    }

    fn density(&self, zeta: f64, side: Side) -> f64 {
        let a = self.start.density(zeta, side);
        let b = self.end.density(zeta, side);
        if self.t == 0.0 {
            a
        } else if self.t == 1.0 {
            b
        } else {
            (1.0 - self.t) * a + self.t * b
        }
    }

    fn density_slope(&self, zeta: f64, side: Side) -> f64 {
        let a = self.start.density_slope(zeta, side);
        let b = self.end.density_slope(zeta, side);
        if self.t == 0.0 {
            a
        } else if self.t == 1.0 {
            b
        } else {
            (1.0 - self.t) * a + self.t * b
        }
    }

    fn id(&self) -> u64 {
        if self.t == 0.0 {
            self.start.id()
        } else if self.t == 1.0 {
            self.end.id()
        } else {
            crate::density::fnv1a(
                &[self.start.id().to_le_bytes(), self.end.id().to_le_bytes(), self.t.to_bits().to_le_bytes()].concat(),
            )
        }
    }
}

/// Sup-norm distance in `zeta`, sampled uniformly and at one-sided limits
/// on every interface of either stratification.
pub fn sup_distance(a: &dyn Stratification, b: &dyn Stratification, samples: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for k in 0..=samples {
        let zeta = -1.0 + k as f64 / samples as f64;
        for side in [Side::Below, Side::Above] {
            worst = worst.max((a.density(zeta, side) - b.density(zeta, side)).abs());
        }
    }
    for &zeta in a.interfaces().iter().chain(b.interfaces()) {
        for side in [Side::Below, Side::Above] {
            worst = worst.max((a.density(zeta, side) - b.density(zeta, side)).abs());
        }
    }
    worst
}
