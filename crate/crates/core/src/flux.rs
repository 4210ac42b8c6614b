//! The flux density `f` of the Ter-Krikorov problem and its penalized
//! replacement `a`, which is globally defined and uniformly elliptic.

/// Upper bound on the penalization scale.
pub const PENALIZATION_MAX: f64 = core::f64::consts::FRAC_1_SQRT_2;
/// Default penalization scale.
pub const PENALIZATION_DEFAULT: f64 = 0.25;
/// The cutoff vanishes for arguments beyond this value.
const CUTOFF_END: f64 = 1.4;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum FluxError {
    #[error("stagnation: 1 + p2 = {margin} is not positive")]
    Stagnation { margin: f64 },
    #[error("penalization scale {s} must lie in (0, 1/sqrt(2))")]
    InvalidScale { s: f64 },
}

/// Value, gradient and Hessian of a flux density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxEval {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [[f64; 2]; 2],
}

/// `f(p) = (p1^2 + p2^2) / (2 (1 + p2))`.
pub fn flux_f(p1: f64, p2: f64) -> Result<FluxEval, FluxError> {
    let u = 1.0 + p2;
    if !(u > 0.0) {
        return Err(FluxError::Stagnation { margin: u });
    }
    let inv = 1.0 / u;
    let inv2 = inv * inv;
    let value = 0.5 * (p1 * p1 + p2 * p2) * inv;
    let f1 = p1 * inv;
    let f2 = 0.5 - 0.5 * (1.0 + p1 * p1) * inv2;
    let f11 = inv;
    let f12 = -p1 * inv2;
    let f22 = (1.0 + p1 * p1) * inv2 * inv;
    Ok(FluxEval { value, grad: [f1, f2], hess: [[f11, f12], [f12, f22]] })
}

/// Smooth cutoff equal to one on `[0, 1]` and zero from `CUTOFF_END` on,
/// returned with its first two derivatives.
pub fn cutoff(t: f64) -> (f64, f64, f64) {
    let t = t.abs();
    if t <= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    if t >= CUTOFF_END {
        return (0.0, 0.0, 0.0);
    }
    // a(t) = psi(CUTOFF_END - t), b(t) = psi(t - 1), psi(x) = exp(-1/x).
    let (xa, xb) = (CUTOFF_END - t, t - 1.0);
    let (a, a1, a2) = bump(xa);
    let (b, b1, b2) = bump(xb);
    let (a1, a2) = (-a1, a2);
    let sum = a + b;
    let sum1 = a1 + b1;
    let num = a1 * b - a * b1;
    let num1 = a2 * b - a * b2;
    let phi = a / sum;
    let phi1 = num / (sum * sum);
    let phi2 = num1 / (sum * sum) - 2.0 * num * sum1 / (sum * sum * sum);
    (phi, phi1, phi2)
}

/// `exp(-1/x)` and its first two derivatives for `x > 0`.
fn bump(x: f64) -> (f64, f64, f64) {
    let v = (-1.0 / x).exp();
    let x2 = x * x;
    (v, v / x2, v * (1.0 / (x2 * x2) - 2.0 / (x2 * x)))
}

/// Penalization scale `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Penalization {
    s: f64,
}

impl Penalization {
    pub fn new(s: f64) -> Result<Self, FluxError> {
        if !(s > 0.0 && s < PENALIZATION_MAX) {
            return Err(FluxError::InvalidScale { s });
        }
        Ok(Self { s })
    }

    pub fn scale(&self) -> f64 {
        self.s
    }
}

impl Default for Penalization {
    fn default() -> Self {
        Self { s: PENALIZATION_DEFAULT }
    }
}

/// `a = Φ(|p|²/s) f + (1 − Φ(|p|²/s)) |p|²/2`.
pub fn penalized_a(p1: f64, p2: f64, penalization: &Penalization) -> FluxEval {
    let s = penalization.s;
    let norm2 = p1 * p1 + p2 * p2;
    let t = norm2 / s;
    let quadratic = FluxEval { value: 0.5 * norm2, grad: [p1, p2], hess: [[1.0, 0.0], [0.0, 1.0]] };
    if t >= CUTOFF_END {
        return quadratic;
    }
    // Inside the support |p|^2 < 1.4 s < 1, so 1 + p2 stays positive.
    let f = flux_f(p1, p2).expect("penalization support excludes stagnation");
    if t <= 1.0 {
        return f;
    }
    let (phi, phi1, phi2) = cutoff(t);
    let diff = f.value - quadratic.value;
    let dgrad = [f.grad[0] - p1, f.grad[1] - p2];
    let tgrad = [2.0 * p1 / s, 2.0 * p2 / s];
    let value = quadratic.value + phi * diff;
    let grad = [p1 + phi * dgrad[0] + phi1 * diff * tgrad[0], p2 + phi * dgrad[1] + phi1 * diff * tgrad[1]];
    let mut hess = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let identity = if i == j { 1.0 } else { 0.0 };
            hess[i][j] = identity
                + phi * (f.hess[i][j] - identity)
                + phi1 * (tgrad[i] * dgrad[j] + dgrad[i] * tgrad[j])
                + phi2 * diff * tgrad[i] * tgrad[j]
                + phi1 * diff * 2.0 * identity / s;
        }
    }
    FluxEval { value, grad, hess }
}

/// Choice between the physical flux density and its penalized form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Flux {
    Physical,
    Penalized(Penalization),
}

impl Flux {
    pub fn eval(&self, p1: f64, p2: f64) -> Result<FluxEval, FluxError> {
        match self {
            Flux::Physical => flux_f(p1, p2),
            Flux::Penalized(pen) => Ok(penalized_a(p1, p2, pen)),
        }
    }

    pub fn scale(&self) -> Option<f64> {
        match self {
            Flux::Physical => None,
            Flux::Penalized(pen) => Some(pen.s),
        }
    }
}
