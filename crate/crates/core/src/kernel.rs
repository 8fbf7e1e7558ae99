//! The surface kernel of the forward map and its derivatives.
//!
//! The potential of a dipole layer on the fault, observed on the
//! boundary `x3 = 0` of the half-space, has density kernel
//!
//! ```text
//! H(x, y) = [grad_y phi(X, Y) + grad_y phi(Xb, Y)] . (-a, -b, 1) * chi(t)
//! ```
//!
//! where `phi(x, y) = 1 / (4 pi |x - y|)`, `X = (x1, x2, 0)` is the
//! observation point, `Xb` its mirror image across the surface,
//! `Y = (y1, y2, t)` the fault point with `t = a*y1 + b*y2 + d`, and the
//! vector `(-a, -b, 1)` folds the unit normal and the surface measure of
//! the fault graph into one factor. On the surface `Xb = X`, so the
//! bracket is twice the single gradient; both forms are kept evaluable.
//!
//! The cutoff `chi` switches the layer off where the fault plane climbs
//! above the depth `d0 < 0`: it is a smooth monotone blend equal to 1
//! for `t <= 2*d0` and 0 for `t >= d0`. This keeps the kernel bounded
//! for every parameter triple in the admissible box even when the plane
//! `y3 = a*y1 + b*y2 + d` would otherwise pierce the surface over the
//! wide source region.

use crate::geometry::{fault_point, FaultParams};
use crate::{Error, Result};

const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

/// Points closer than this are treated as coincident (singular).
const MIN_DIST_SQ: f64 = 1e-24;

/// Kernel evaluation settings.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct KernelConfig {
    /// Whether the depth cutoff is applied.
    pub cutoff_enabled: bool,
    /// Cutoff depth `d0 < 0`: the kernel vanishes for fault points with
    /// `y3 >= d0` and is untouched below `2*d0`.
    pub d0: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            cutoff_enabled: true,
            d0: -5.0,
        }
    }
}

impl KernelConfig {
    /// Check the cutoff depth is strictly below the surface.
    pub fn validate(&self) -> Result<()> {
        if !(self.d0.is_finite() && self.d0 < 0.0) {
            return Err(Error::invalid(format!(
                "cutoff depth d0 must be finite and negative, got {}",
                self.d0
            )));
        }
        Ok(())
    }

    /// Cutoff value at fault depth `t` (1 when disabled).
    pub fn chi(&self, t: f64) -> f64 {
        if self.cutoff_enabled {
            chi_unchecked(t, self.d0)
        } else {
            1.0
        }
    }

    /// Cutoff value and its `t`-derivative (`(1, 0)` when disabled).
    pub fn chi_and_deriv(&self, t: f64) -> (f64, f64) {
        if self.cutoff_enabled {
            (chi_unchecked(t, self.d0), chi_deriv_unchecked(t, self.d0))
        } else {
            (1.0, 0.0)
        }
    }
}

/// Fundamental solution `1 / (4 pi |x - y|)` of the Laplacian.
pub fn green_phi(x: [f64; 3], y: [f64; 3]) -> Result<f64> {
    let r2 = dist_sq(x, y);
    if r2 < MIN_DIST_SQ {
        return Err(singularity(x, y));
    }
    Ok(1.0 / (FOUR_PI * r2.sqrt()))
}

/// Gradient of [`green_phi`] in its second argument:
/// `(x - y) / (4 pi |x - y|^3)`.
pub fn green_phi_grad_y(x: [f64; 3], y: [f64; 3]) -> Result<[f64; 3]> {
    let r2 = dist_sq(x, y);
    if r2 < MIN_DIST_SQ {
        return Err(singularity(x, y));
    }
    let scale = 1.0 / (FOUR_PI * r2 * r2.sqrt());
    Ok([
        (x[0] - y[0]) * scale,
        (x[1] - y[1]) * scale,
        (x[2] - y[2]) * scale,
    ])
}

/// Kernel `H(x, y)` for surface observation `x` in `V` and source
/// coordinate `y` in `R`.
pub fn kernel_h(m: &FaultParams, x: [f64; 2], y: [f64; 2], cfg: &KernelConfig) -> Result<f64> {
    cfg.validate()?;
    let yf = fault_point(m, y[0], y[1]);
    let chi = cfg.chi(yf[2]);
    if chi == 0.0 {
        // The layer is switched off here; nothing to evaluate, no
        // singularity even if the plane meets the surface.
        return Ok(0.0);
    }
    let xs = [x[0], x[1], 0.0];
    let r2 = dist_sq(xs, yf);
    if r2 < MIN_DIST_SQ {
        return Err(singularity(xs, yf));
    }
    // On the surface the mirrored gradient equals the direct one.
    let r = r2.sqrt();
    let dot = normal_dot(m, xs, yf);
    Ok(2.0 * dot / (FOUR_PI * r2 * r) * chi)
}

/// Gradient of `H` in the surface coordinates `(x1, x2)`.
pub fn kernel_h_grad_x(
    m: &FaultParams,
    x: [f64; 2],
    y: [f64; 2],
    cfg: &KernelConfig,
) -> Result<[f64; 2]> {
    cfg.validate()?;
    let yf = fault_point(m, y[0], y[1]);
    let chi = cfg.chi(yf[2]);
    if chi == 0.0 {
        return Ok([0.0, 0.0]);
    }
    let xs = [x[0], x[1], 0.0];
    let r2 = dist_sq(xs, yf);
    if r2 < MIN_DIST_SQ {
        return Err(singularity(xs, yf));
    }
    let r3 = r2 * r2.sqrt();
    let r5 = r3 * r2;
    let dot = normal_dot(m, xs, yf);
    let g = |nu_i: f64, r_i: f64| 2.0 * chi * (nu_i / (FOUR_PI * r3) - 3.0 * r_i * dot / (FOUR_PI * r5));
    Ok([g(-m.a, xs[0] - yf[0]), g(-m.b, xs[1] - yf[1])])
}

/// Gradient of `H` in the fault parameters `(a, b, d)`.
///
/// Both the fault point `Y` (through its depth `t`), the normal factor
/// `(-a, -b, 1)`, and the cutoff `chi(t)` move with `m`; all three
/// contributions are included.
pub fn kernel_h_dm(
    m: &FaultParams,
    x: [f64; 2],
    y: [f64; 2],
    cfg: &KernelConfig,
) -> Result<[f64; 3]> {
    cfg.validate()?;
    let yf = fault_point(m, y[0], y[1]);
    let (chi, chi_d) = cfg.chi_and_deriv(yf[2]);
    if chi == 0.0 && chi_d == 0.0 {
        // Identically zero on a neighbourhood of this parameter point.
        return Ok([0.0, 0.0, 0.0]);
    }
    let xs = [x[0], x[1], 0.0];
    let r2 = dist_sq(xs, yf);
    if r2 < MIN_DIST_SQ {
        return Err(singularity(xs, yf));
    }
    let r = r2.sqrt();
    let r3 = r2 * r;
    let dot = normal_dot(m, xs, yf);
    let w = dot / (FOUR_PI * r3);
    // d/dt of the single-gradient dot product, t the fault depth.
    let r3c = xs[2] - yf[2];
    let dw_dt = (3.0 * r3c * dot / r2 - 1.0) / (FOUR_PI * r3);
    let g1 = (xs[0] - yf[0]) / (FOUR_PI * r3);
    let g2 = (xs[1] - yf[1]) / (FOUR_PI * r3);
    let da = 2.0 * (chi * (y[0] * dw_dt - g1) + w * chi_d * y[0]);
    let db = 2.0 * (chi * (y[1] * dw_dt - g2) + w * chi_d * y[1]);
    let dd = 2.0 * (chi * dw_dt + w * chi_d);
    Ok([da, db, dd])
}

/// Smooth depth cutoff: 1 for `t <= 2*d0`, 0 for `t >= d0`, and a
/// strictly monotone `C^inf` blend in between. Requires `d0 < 0`.
pub fn cutoff_chi(t: f64, d0: f64) -> Result<f64> {
    validate_d0(d0)?;
    Ok(chi_unchecked(t, d0))
}

/// Derivative of [`cutoff_chi`] in `t`.
pub fn cutoff_chi_deriv(t: f64, d0: f64) -> Result<f64> {
    validate_d0(d0)?;
    Ok(chi_deriv_unchecked(t, d0))
}

fn validate_d0(d0: f64) -> Result<()> {
    if !(d0.is_finite() && d0 < 0.0) {
        return Err(Error::invalid(format!(
            "cutoff depth d0 must be finite and negative, got {d0}"
        )));
    }
    Ok(())
}

/// `exp(-1/s)` extended by zero for `s <= 0`.
fn bump(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else {
        (-1.0 / s).exp()
    }
}

fn chi_unchecked(t: f64, d0: f64) -> f64 {
    // s runs from 0 at t = d0 to 1 at t = 2*d0 (d0 is negative).
    let s = (t - d0) / d0;
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        let f = bump(s);
        let fc = bump(1.0 - s);
        f / (f + fc)
    }
}

fn chi_deriv_unchecked(t: f64, d0: f64) -> f64 {
    let s = (t - d0) / d0;
    if s <= 0.0 || s >= 1.0 {
        return 0.0;
    }
    let f = bump(s);
    let fc = bump(1.0 - s);
    // d/ds of f/(f + fc), with f'(u) = f(u)/u^2.
    let fd = f / (s * s);
    let fcd = fc / ((1.0 - s) * (1.0 - s));
    let denom = f + fc;
    let g_prime = (fd * fc + f * fcd) / (denom * denom);
    g_prime / d0
}

fn dist_sq(x: [f64; 3], y: [f64; 3]) -> f64 {
    let d0 = x[0] - y[0];
    let d1 = x[1] - y[1];
    let d2 = x[2] - y[2];
    d0 * d0 + d1 * d1 + d2 * d2
}

/// Dot product of `x - y` with the scaled normal `(-a, -b, 1)`.
fn normal_dot(m: &FaultParams, x: [f64; 3], y: [f64; 3]) -> f64 {
    -m.a * (x[0] - y[0]) - m.b * (x[1] - y[1]) + (x[2] - y[2])
}

fn singularity(x: [f64; 3], y: [f64; 3]) -> Error {
    Error::Singularity {
        x1: x[0],
        x2: x[1],
        y1: y[0],
        y2: y[1],
        y3: y[2],
    }
}
