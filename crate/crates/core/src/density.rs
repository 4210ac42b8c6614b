//! Streamline density profiles and the scalar quantities they determine.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::quadrature::gauss16;

/// Number of sample points per piece used by the monotonicity check.
const MONOTONE_SAMPLES: usize = 64;
/// Slack allowed when comparing sampled densities.
const MONOTONE_SLACK: f64 = 1e-13;
/// Allowed deviation of the surface density from one.
const SURFACE_TOL: f64 = 1e-12;
/// Number of uniform samples used when measuring sup-norm distances.
const SUP_SAMPLES: usize = 1024;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DensityError {
    #[error("a profile needs at least one layer")]
    NoLayers,
    #[error("breakpoints must start below zero and increase strictly to zero (index {index})")]
    Breakpoints { index: usize },
    #[error("expected {expected} pieces for the given breakpoints, found {found}")]
    PieceCount { expected: usize, found: usize },
    #[error("piece {piece} has {len} coefficients; at most 4 are allowed")]
    Degree { piece: usize, len: usize },
    #[error("non-finite coefficient in piece {piece}")]
    NonFinite { piece: usize },
    #[error("density is not positive in piece {piece} (rho({p}) = {value})")]
    NonPositive { piece: usize, p: f64, value: f64 },
    #[error("density increases with p inside piece {piece} near p = {p}")]
    Increasing { piece: usize, p: f64 },
    #[error("density jumps upward across breakpoint {index} ({below} below, {above} above)")]
    JumpUp { index: usize, below: f64, above: f64 },
    #[error("surface density must equal 1, found {value}")]
    SurfaceDensity { value: f64 },
    #[error("p0 field {stated} disagrees with the first breakpoint {first}")]
    InconsistentP0 { stated: f64, first: f64 },
    #[error("streamline coordinate {p} lies outside [{p0}, 0]")]
    OutOfRange { p: f64, p0: f64 },
    #[error("rescaled coordinate {zeta} lies outside [-1, 0]")]
    ZetaOutOfRange { zeta: f64 },
    #[error("profiles have different bed labels ({left} and {right})")]
    MismatchedP0 { left: f64, right: f64 },
    #[error("p = {p} is an interface point")]
    InterfacePoint { p: f64 },
    #[error("layer count must be positive")]
    ZeroLayers,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParameterError {
    #[error("{name} must be finite and positive, found {value}")]
    NotPositive { name: &'static str, value: f64 },
    #[error("reference pressure must be finite")]
    NonFinitePressure,
    #[error("half-period to depth ratio {ratio} is below the minimum of 4")]
    ShortPeriod { ratio: f64 },
}

/// Cubic polynomial in the streamline coordinate, constant coefficient first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    coeffs: [f64; 4],
}

impl Piece {
    pub fn new(coeffs: &[f64]) -> Option<Self> {
        if coeffs.len() > 4 {
            return None;
        }
        let mut c = [0.0; 4];
        c[..coeffs.len()].copy_from_slice(coeffs);
        Some(Self { coeffs: c })
    }

    pub fn constant(value: f64) -> Self {
        Self { coeffs: [value, 0.0, 0.0, 0.0] }
    }

    pub fn coefficients(&self) -> &[f64; 4] {
        &self.coeffs
    }

    /// Coefficients with trailing zeros removed (at least one kept).
    pub fn trimmed(&self) -> &[f64] {
        let mut len = 4;
        while len > 1 && self.coeffs[len - 1] == 0.0 {
            len -= 1;
        }
        &self.coeffs[..len]
    }

    pub fn value(&self, p: f64) -> f64 {
        let c = &self.coeffs;
        ((c[3] * p + c[2]) * p + c[1]) * p + c[0]
    }

    pub fn slope(&self, p: f64) -> f64 {
        let c = &self.coeffs;
        (3.0 * c[3] * p + 2.0 * c[2]) * p + c[1]
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs[1] == 0.0 && self.coeffs[2] == 0.0 && self.coeffs[3] == 0.0
    }
}

/// Piecewise-polynomial, non-increasing density as a function of the
/// streamline label `p` on `[p0, 0]`.
///
/// Layer `i` occupies `[breakpoints[i], breakpoints[i + 1]]`; layer 0 touches
/// the bed. Interface `k` (for `1 <= k < layers`) is the breakpoint between
/// layers `k - 1` and `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProfileDocument", into = "ProfileDocument")]
pub struct DensityProfile {
    breakpoints: Vec<f64>,
    pieces: Vec<Piece>,
}

/// Serialized form: `p0`, `breakpoints` and `pieces`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileDocument {
    p0: f64,
    breakpoints: Vec<f64>,
    pieces: Vec<Vec<f64>>,
}

impl TryFrom<ProfileDocument> for DensityProfile {
    type Error = DensityError;

    fn try_from(doc: ProfileDocument) -> Result<Self, Self::Error> {
        if let Some(&first) = doc.breakpoints.first() {
            if first != doc.p0 {
                return Err(DensityError::InconsistentP0 { stated: doc.p0, first });
            }
        }
        DensityProfile::new(doc.breakpoints, doc.pieces)
    }
}

impl From<DensityProfile> for ProfileDocument {
    fn from(profile: DensityProfile) -> Self {
        ProfileDocument {
            p0: profile.p0(),
            pieces: profile.pieces.iter().map(|piece| piece.trimmed().to_vec()).collect(),
            breakpoints: profile.breakpoints,
        }
    }
}

impl DensityProfile {
    /// Builds and validates a profile. The surface density is not required
    /// to be one here; see [`DensityProfile::check_normalized`].
    pub fn new(breakpoints: Vec<f64>, pieces: Vec<Vec<f64>>) -> Result<Self, DensityError> {
        let mut converted = Vec::with_capacity(pieces.len());
        for (index, coeffs) in pieces.iter().enumerate() {
            let piece = Piece::new(coeffs).ok_or(DensityError::Degree { piece: index, len: coeffs.len() })?;
            converted.push(piece);
        }
        Self::from_pieces(breakpoints, converted)
    }

    pub fn from_pieces(breakpoints: Vec<f64>, pieces: Vec<Piece>) -> Result<Self, DensityError> {
        if breakpoints.len() < 2 {
            return Err(DensityError::NoLayers);
        }
        if !(breakpoints[0] < 0.0) || !breakpoints[0].is_finite() {
            return Err(DensityError::Breakpoints { index: 0 });
        }
        for index in 1..breakpoints.len() {
            if !(breakpoints[index] > breakpoints[index - 1]) {
                return Err(DensityError::Breakpoints { index });
            }
        }
        if *breakpoints.last().unwrap() != 0.0 {
            return Err(DensityError::Breakpoints { index: breakpoints.len() - 1 });
        }
        if pieces.len() != breakpoints.len() - 1 {
            return Err(DensityError::PieceCount { expected: breakpoints.len() - 1, found: pieces.len() });
        }
        for (index, piece) in pieces.iter().enumerate() {
            if piece.coeffs.iter().any(|c| !c.is_finite()) {
                return Err(DensityError::NonFinite { piece: index });
            }
        }
        let profile = Self { breakpoints, pieces };
        profile.check_stable()?;
        Ok(profile)
    }

    /// Constant density on `[p0, 0]`.
    pub fn constant(p0: f64, value: f64) -> Result<Self, DensityError> {
        Self::from_pieces(alloc::vec![p0, 0.0], alloc::vec![Piece::constant(value)])
    }

    /// Piecewise-constant layers; `values[i]` is the density of layer `i`.
    pub fn layered(breakpoints: Vec<f64>, values: &[f64]) -> Result<Self, DensityError> {
        Self::from_pieces(breakpoints, values.iter().map(|&v| Piece::constant(v)).collect())
    }

    fn check_stable(&self) -> Result<(), DensityError> {
        for (index, piece) in self.pieces.iter().enumerate() {
            let (a, b) = (self.breakpoints[index], self.breakpoints[index + 1]);
            let scale = piece.value(a).abs().max(piece.value(b).abs()).max(1.0);
            let mut previous = f64::INFINITY;
            for k in 0..=MONOTONE_SAMPLES {
                let p = if k == MONOTONE_SAMPLES { b } else { a + (b - a) * k as f64 / MONOTONE_SAMPLES as f64 };
                let value = piece.value(p);
                if !(value > 0.0) {
                    return Err(DensityError::NonPositive { piece: index, p, value });
                }
                if value > previous + MONOTONE_SLACK * scale {
                    return Err(DensityError::Increasing { piece: index, p });
                }
                previous = value;
            }
            let slope_slack = MONOTONE_SLACK * scale / (b - a);
            for p in [a, b] {
                if piece.slope(p) > slope_slack {
                    return Err(DensityError::Increasing { piece: index, p });
                }
            }
        }
        for index in 1..self.pieces.len() {
            let q = self.breakpoints[index];
            let below = self.pieces[index - 1].value(q);
            let above = self.pieces[index].value(q);
            if above > below + MONOTONE_SLACK * below.abs().max(1.0) {
                return Err(DensityError::JumpUp { index, below, above });
            }
        }
        Ok(())
    }

    /// Requires `rho(0) = 1`, the normalization assumed by the wave problem.
    pub fn check_normalized(&self) -> Result<(), DensityError> {
        let value = self.surface_density();
        if (value - 1.0).abs() > SURFACE_TOL {
            return Err(DensityError::SurfaceDensity { value });
        }
        Ok(())
    }

    pub fn p0(&self) -> f64 {
        self.breakpoints[0]
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn layer_count(&self) -> usize {
        self.pieces.len()
    }

    pub fn surface_density(&self) -> f64 {
        self.pieces[self.pieces.len() - 1].value(0.0)
    }

    pub fn bed_density(&self) -> f64 {
        self.pieces[0].value(self.p0())
    }

    pub fn check_range(&self, p: f64) -> Result<(), DensityError> {
        if !(p >= self.p0() && p <= 0.0) {
            return Err(DensityError::OutOfRange { p, p0: self.p0() });
        }
        Ok(())
    }

    /// Layer containing `p`; a breakpoint belongs to the layer above it
    /// (except the surface, which belongs to the top layer).
    pub fn layer_of(&self, p: f64) -> usize {
        let n = self.pieces.len();
        let upper = self.breakpoints[1..n].partition_point(|&q| q <= p);
        upper.min(n - 1)
    }

    /// Whether `p` coincides with an interior breakpoint.
    pub fn is_interface(&self, p: f64) -> bool {
        self.breakpoints[1..self.pieces.len()].contains(&p)
    }

    pub fn value(&self, p: f64) -> f64 {
        self.pieces[self.layer_of(p)].value(p)
    }

    pub fn value_in(&self, layer: usize, p: f64) -> f64 {
        self.pieces[layer].value(p)
    }

    pub fn slope_in(&self, layer: usize, p: f64) -> f64 {
        self.pieces[layer].slope(p)
    }

    /// Density jump (lower minus upper limit) across interior breakpoint `index`.
    pub fn jump(&self, index: usize) -> f64 {
        let q = self.breakpoints[index];
        self.pieces[index - 1].value(q) - self.pieces[index].value(q)
    }

    /// Sup-norm distance by sampling `SUP_SAMPLES + 1` uniform points plus
    /// one-sided limits at every breakpoint of either profile.
    pub fn sup_distance(&self, other: &DensityProfile) -> Result<f64, DensityError> {
        if self.p0() != other.p0() {
            return Err(DensityError::MismatchedP0 { left: self.p0(), right: other.p0() });
        }
        let p0 = self.p0();
        let mut worst: f64 = 0.0;
        for k in 0..=SUP_SAMPLES {
            let p = p0 - p0 * k as f64 / SUP_SAMPLES as f64;
            worst = worst.max((self.value(p) - other.value(p)).abs());
        }
        for q in merged_breakpoints(self, other) {
            let a = self.one_sided(q);
            let b = other.one_sided(q);
            worst = worst.max((a.0 - b.0).abs()).max((a.1 - b.1).abs());
        }
        Ok(worst)
    }

    /// Limits from below and above at `p`.
    fn one_sided(&self, p: f64) -> (f64, f64) {
        let upper = self.layer_of(p);
        let lower = if upper > 0 && self.breakpoints[upper] == p { upper - 1 } else { upper };
        (self.pieces[lower].value(p), self.pieces[upper].value(p))
    }

    /// Canonical text used for identification: shortest round-trip decimals.
    pub fn canonical_text(&self) -> String {
        let mut text = String::new();
        let _ = write!(text, "p0={};breakpoints=", self.p0());
        for (k, q) in self.breakpoints.iter().enumerate() {
            let _ = write!(text, "{}{}", if k == 0 { "" } else { "," }, q);
        }
        text.push_str(";pieces=");
        for (k, piece) in self.pieces.iter().enumerate() {
            text.push_str(if k == 0 { "[" } else { ",[" });
            for (m, c) in piece.trimmed().iter().enumerate() {
                let _ = write!(text, "{}{}", if m == 0 { "" } else { "," }, c);
            }
            text.push(']');
        }
        text
    }

    /// 64-bit FNV-1a hash of [`DensityProfile::canonical_text`].
    pub fn id(&self) -> u64 {
        fnv1a(self.canonical_text().as_bytes())
    }

    /// `∫ rho^{-1/2}` over `[a, b]` inside one layer.
    fn inverse_root_integral(&self, layer: usize, a: f64, b: f64) -> f64 {
        let piece = &self.pieces[layer];
        gauss16(a, b, |s| 1.0 / piece.value(s).sqrt())
    }
}

pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn merged_breakpoints(a: &DensityProfile, b: &DensityProfile) -> Vec<f64> {
    let mut all: Vec<f64> = a.breakpoints.iter().chain(b.breakpoints.iter()).copied().collect();
    all.sort_by(|x, y| x.partial_cmp(y).unwrap());
    all.dedup();
    all
}

/// Physical scales of the flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowParameters {
    /// Depth of the undisturbed fluid.
    pub depth: f64,
    pub gravity: f64,
    /// Half the wavelength.
    pub half_period: f64,
    /// Pressure above the free surface.
    #[serde(default)]
    pub p_atm: f64,
}

impl FlowParameters {
    pub fn new(depth: f64, gravity: f64, half_period: f64, p_atm: f64) -> Result<Self, ParameterError> {
        let params = Self { depth, gravity, half_period, p_atm };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), ParameterError> {
        for (name, value) in [("depth", self.depth), ("gravity", self.gravity), ("half_period", self.half_period)] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(ParameterError::NotPositive { name, value });
            }
        }
        if !self.p_atm.is_finite() {
            return Err(ParameterError::NonFinitePressure);
        }
        let ratio = self.half_period / self.depth;
        if ratio < 4.0 {
            return Err(ParameterError::ShortPeriod { ratio });
        }
        Ok(())
    }

    /// Half-period measured in depths, the horizontal extent of the strip.
    pub fn aspect(&self) -> f64 {
        self.half_period / self.depth
    }
}

/// Wave speed `c = (1/d) ∫ rho^{-1/2} dp`.
pub fn wave_speed(rho: &DensityProfile, params: &FlowParameters) -> f64 {
    total_inverse_root(rho) / params.depth
}

fn total_inverse_root(rho: &DensityProfile) -> f64 {
    (0..rho.layer_count())
        .map(|layer| rho.inverse_root_integral(layer, rho.breakpoints[layer], rho.breakpoints[layer + 1]))
        .sum()
}

/// Speed difference `c(rho) - c(rho_star)` from the combined integrand,
/// integrated over the union of both breakpoint sets.
pub fn wave_speed_delta(
    rho: &DensityProfile,
    rho_star: &DensityProfile,
    params: &FlowParameters,
) -> Result<f64, DensityError> {
    if rho.p0() != rho_star.p0() {
        return Err(DensityError::MismatchedP0 { left: rho.p0(), right: rho_star.p0() });
    }
    let knots = merged_breakpoints(rho, rho_star);
    let mut total = 0.0;
    for pair in knots.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let mid = 0.5 * (a + b);
        let (la, lb) = (rho.layer_of(mid), rho_star.layer_of(mid));
        let (pa, pb) = (&rho.pieces[la], &rho_star.pieces[lb]);
        total += gauss16(a, b, |s| {
            let r = pa.value(s);
            let rs = pb.value(s);
            (rs - r) / (r * rs.sqrt() + rs * r.sqrt())
        });
    }
    Ok(total / params.depth)
}

/// Precomputed map between the streamline label `p` and the rescaled
/// vertical coordinate `zeta = h_laminar(p)/d - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZetaMap {
    profile: DensityProfile,
    /// `∫_{p0}^{q_i} rho^{-1/2}` at every breakpoint.
    cumulative: Vec<f64>,
    /// Breakpoints in the rescaled coordinate.
    zeta_breaks: Vec<f64>,
}

impl ZetaMap {
    pub fn new(profile: &DensityProfile) -> Self {
        let n = profile.layer_count();
        let mut cumulative = Vec::with_capacity(n + 1);
        cumulative.push(0.0);
        for layer in 0..n {
            let part = profile.inverse_root_integral(layer, profile.breakpoints[layer], profile.breakpoints[layer + 1]);
            cumulative.push(cumulative[layer] + part);
        }
        let total = cumulative[n];
        let mut zeta_breaks: Vec<f64> = cumulative.iter().map(|c| c / total - 1.0).collect();
        zeta_breaks[0] = -1.0;
        zeta_breaks[n] = 0.0;
        Self { profile: profile.clone(), cumulative, zeta_breaks }
    }

    pub fn profile(&self) -> &DensityProfile {
        &self.profile
    }

    /// `∫_{p0}^{0} rho^{-1/2}`, equal to `c d`.
    pub fn total(&self) -> f64 {
        self.cumulative[self.cumulative.len() - 1]
    }

    pub fn speed(&self, params: &FlowParameters) -> f64 {
        self.total() / params.depth
    }

    /// Breakpoints in the rescaled coordinate, from -1 to 0.
    pub fn zeta_breaks(&self) -> &[f64] {
        &self.zeta_breaks
    }

    fn partial(&self, p: f64) -> f64 {
        let layer = self.profile.layer_of(p);
        let start = self.profile.breakpoints[layer];
        if p == start {
            return self.cumulative[layer];
        }
        self.cumulative[layer] + self.profile.inverse_root_integral(layer, start, p)
    }

    pub fn zeta(&self, p: f64) -> Result<f64, DensityError> {
        self.profile.check_range(p)?;
        if p == 0.0 {
            return Ok(0.0);
        }
        Ok(self.partial(p) / self.total() - 1.0)
    }

    /// Laminar height `∫_{p0}^{p} 1/(c sqrt(rho))`.
    pub fn limiting_height(&self, p: f64, params: &FlowParameters) -> Result<f64, DensityError> {
        self.profile.check_range(p)?;
        Ok(self.partial(p) * params.depth / self.total())
    }

    /// Inverse of [`ZetaMap::zeta`] by bracketed Newton iteration.
    pub fn p_of_zeta(&self, zeta: f64) -> Result<f64, DensityError> {
        if !(-1.0..=0.0).contains(&zeta) {
            return Err(DensityError::ZetaOutOfRange { zeta });
        }
        let n = self.profile.layer_count();
        let upper = self.zeta_breaks[1..n].partition_point(|&z| z <= zeta);
        let layer = upper.min(n - 1);
        if zeta == self.zeta_breaks[layer] {
            return Ok(self.profile.breakpoints[layer]);
        }
        if zeta == self.zeta_breaks[layer + 1] {
            return Ok(self.profile.breakpoints[layer + 1]);
        }
        let target = (zeta + 1.0) * self.total() - self.cumulative[layer];
        let (mut lo, mut hi) = (self.profile.breakpoints[layer], self.profile.breakpoints[layer + 1]);
        let span = self.cumulative[layer + 1] - self.cumulative[layer];
        let piece = self.profile.pieces[layer];
        let mut p = lo + (hi - lo) * (target / span).clamp(0.0, 1.0);
        let tol = 1e-13 * (hi - lo).max(f64::MIN_POSITIVE);
        for _ in 0..100 {
            let g = self.profile.inverse_root_integral(layer, self.profile.breakpoints[layer], p) - target;
            if g == 0.0 {
                break;
            }
            if g > 0.0 {
                hi = p;
            } else {
                lo = p;
            }
            let step = g * piece.value(p).sqrt();
            let mut next = p - step;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            let moved = (next - p).abs();
            p = next;
            if moved <= tol || hi - lo <= tol {
                break;
            }
        }
        Ok(p)
    }

    /// Derivative `dp/dzeta = c d sqrt(rho(p))` in `layer`.
    pub fn stretch(&self, layer: usize, p: f64) -> f64 {
        self.total() * self.profile.value_in(layer, p).sqrt()
    }

    /// Layer index for a rescaled coordinate; a breakpoint belongs to the
    /// layer above unless `below` is set.
    pub fn layer_of_zeta(&self, zeta: f64, below: bool) -> usize {
        let n = self.profile.layer_count();
        let upper = self.zeta_breaks[1..n].partition_point(|&z| z <= zeta).min(n - 1);
        if below && upper > 0 && self.zeta_breaks[upper] == zeta {
            upper - 1
        } else {
            upper
        }
    }
}

/// `h_laminar(p)` for a single evaluation.
pub fn limiting_height(rho: &DensityProfile, params: &FlowParameters, p: f64) -> Result<f64, DensityError> {
    ZetaMap::new(rho).limiting_height(p, params)
}

/// Rescaled vertical coordinate of the streamline `p`.
pub fn zeta_map(rho: &DensityProfile, _params: &FlowParameters, p: f64) -> Result<f64, DensityError> {
    ZetaMap::new(rho).zeta(p)
}

/// Inverse of [`zeta_map`].
pub fn p_of_zeta(rho: &DensityProfile, _params: &FlowParameters, zeta: f64) -> Result<f64, DensityError> {
    ZetaMap::new(rho).p_of_zeta(zeta)
}

/// Piecewise-constant approximation with its measured sup-norm error.
#[derive(Debug, Clone, PartialEq)]
pub struct LayeredApproximation {
    pub profile: DensityProfile,
    pub sup_error: f64,
}

/// Approximates `rho_star` by `n` equal-width constant layers using the
/// midpoint value of each layer, clamped to be non-increasing upward, with
/// the top layer pinned to the surface density.
pub fn layer_quantize(rho_star: &DensityProfile, n: usize) -> Result<LayeredApproximation, DensityError> {
    if n == 0 {
        return Err(DensityError::ZeroLayers);
    }
    let p0 = rho_star.p0();
    let width = -p0 / n as f64;
    let mut breakpoints: Vec<f64> = (0..n).map(|k| p0 + width * k as f64).collect();
    breakpoints.push(0.0);
    let mut values = Vec::with_capacity(n);
    for k in 0..n {
        let mid = 0.5 * (breakpoints[k] + breakpoints[k + 1]);
        let value = rho_star.value(mid);
        let clamped = match values.last() {
            Some(&below) if value > below => below,
            _ => value,
        };
        values.push(clamped);
    }
    values[n - 1] = rho_star.surface_density();
    let profile = DensityProfile::layered(breakpoints, &values)?;
    let sup_error = profile.sup_distance(rho_star)?;
    Ok(LayeredApproximation { profile, sup_error })
}
