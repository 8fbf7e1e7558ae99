//! Problem geometry: fault parameters, source and observation regions,
//! and the sine basis used for slip densities.
//!
//! The source region `R = [-L, L]^2` (default `L = 150`) carries the slip
//! density; the observation patch `V = [-200, 200]^2` carries the data.
//! Slip densities live in `H^1_0(R)` and are expanded in products of
//! sines that vanish on the boundary of `R`. Each basis function is
//! scaled to unit `H^1_0` seminorm, so norms and inner products of
//! densities reduce to Euclidean operations on coefficient vectors.

pub mod quadrature;

use crate::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use quadrature::{composite_gauss_legendre, gauss_legendre, Rule2d};

/// Half-width of the observation patch `V`.
pub const OBSERVATION_HALF_WIDTH: f64 = 200.0;

/// Default half-width of the source region `R`.
pub const SOURCE_HALF_WIDTH: f64 = 150.0;

/// Fault-plane parameters: the graph `y3 = a*y1 + b*y2 + d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaultParams {
    /// Slope along the first horizontal axis.
    pub a: f64,
    /// Slope along the second horizontal axis.
    pub b: f64,
    /// Depth offset at the origin (negative below the surface).
    pub d: f64,
}

impl FaultParams {
    /// Validated constructor: all components must be finite.
    pub fn new(a: f64, b: f64, d: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && d.is_finite()) {
            return Err(Error::invalid(format!(
                "fault parameters must be finite, got ({a}, {b}, {d})"
            )));
        }
        Ok(FaultParams { a, b, d })
    }

    /// Components as an array `[a, b, d]`.
    pub fn as_array(&self) -> [f64; 3] {
        [self.a, self.b, self.d]
    }

    /// Euclidean distance to another parameter triple.
    pub fn distance(&self, other: &FaultParams) -> f64 {
        let da = self.a - other.a;
        let db = self.b - other.b;
        let dd = self.d - other.d;
        (da * da + db * db + dd * dd).sqrt()
    }
}

impl std::fmt::Display for FaultParams {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}, {})", self.a, self.b, self.d)
    }
}

/// Point of the fault plane above `(y1, y2)`.
pub fn fault_point(m: &FaultParams, y1: f64, y2: f64) -> [f64; 3] {
    [y1, y2, m.a * y1 + m.b * y2 + m.d]
}

/// Axis-aligned box of admissible fault parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamBox {
    /// Range of the slope `a`.
    pub a: (f64, f64),
    /// Range of the slope `b`.
    pub b: (f64, f64),
    /// Range of the depth `d` (entirely below the surface).
    pub d: (f64, f64),
}

impl Default for ParamBox {
    fn default() -> Self {
        ParamBox {
            a: (-2.0, 2.0),
            b: (-2.0, 2.0),
            d: (-60.0, -10.0),
        }
    }
}

impl ParamBox {
    /// Validated constructor: each range must be finite and non-empty,
    /// and the depth range must stay below the surface.
    pub fn new(a: (f64, f64), b: (f64, f64), d: (f64, f64)) -> Result<Self> {
        for (name, (lo, hi)) in [("a", a), ("b", b), ("d", d)] {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::invalid(format!(
                    "parameter box range for {name} must satisfy lo < hi, got [{lo}, {hi}]"
                )));
            }
        }
        if d.1 >= 0.0 {
            return Err(Error::invalid(format!(
                "depth range must stay below the surface, got upper bound {}",
                d.1
            )));
        }
        Ok(ParamBox { a, b, d })
    }

    /// Whether `m` lies inside the closed box.
    pub fn contains(&self, m: &FaultParams) -> bool {
        self.a.0 <= m.a
            && m.a <= self.a.1
            && self.b.0 <= m.b
            && m.b <= self.b.1
            && self.d.0 <= m.d
            && m.d <= self.d.1
    }

    /// Uniform sample from the box.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> FaultParams {
        FaultParams {
            a: rng.gen_range(self.a.0..self.a.1),
            b: rng.gen_range(self.b.0..self.b.1),
            d: rng.gen_range(self.d.0..self.d.1),
        }
    }

    /// Affine map of `m` onto `[0, 1]^3`, component-wise.
    pub fn normalize(&self, m: &FaultParams) -> [f64; 3] {
        [
            (m.a - self.a.0) / (self.a.1 - self.a.0),
            (m.b - self.b.0) / (self.b.1 - self.b.0),
            (m.d - self.d.0) / (self.d.1 - self.d.0),
        ]
    }

    /// Inverse of [`ParamBox::normalize`].
    pub fn denormalize(&self, t: &[f64; 3]) -> FaultParams {
        FaultParams {
            a: self.a.0 + t[0] * (self.a.1 - self.a.0),
            b: self.b.0 + t[1] * (self.b.1 - self.b.0),
            d: self.d.0 + t[2] * (self.d.1 - self.d.0),
        }
    }

    /// Component ranges as `[(lo, hi); 3]` in `(a, b, d)` order.
    pub fn ranges(&self) -> [(f64, f64); 3] {
        [self.a, self.b, self.d]
    }
}

/// The square source region `R = [-L, L]^2` with its quadrature mesh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceRegion {
    /// Half-width `L`.
    pub half_width: f64,
    /// Cells per axis of the composite quadrature mesh.
    pub cells: usize,
}

impl Default for SourceRegion {
    fn default() -> Self {
        SourceRegion {
            half_width: SOURCE_HALF_WIDTH,
            cells: 8,
        }
    }
}

impl SourceRegion {
    /// Validated constructor.
    pub fn new(half_width: f64, cells: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::invalid(format!(
                "source half-width must be positive and finite, got {half_width}"
            )));
        }
        if cells == 0 {
            return Err(Error::invalid("source region needs at least one cell"));
        }
        Ok(SourceRegion { half_width, cells })
    }

    /// Composite Gauss-Legendre rule over the region with the given
    /// per-cell order.
    pub fn quadrature(&self, order: usize) -> Result<Rule2d> {
        composite_gauss_legendre(self.half_width, self.cells, order)
    }
}

/// Uniform observation grid on `V` with trapezoid quadrature weights.
///
/// Point `(i, j)` sits at `(-200 + i*h, -200 + j*h)` with
/// `h = 400 / (n - 1)`; flat index is `i * n + j`. Weights are `h^2` at
/// interior points, `h^2 / 2` on edges, and `h^2 / 4` at corners, so they
/// sum to the area of `V`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationGrid {
    /// Points per axis.
    pub n_per_axis: usize,
    /// Grid points, flat row-major.
    pub points: Vec<[f64; 2]>,
    /// Trapezoid weights matching `points`.
    pub weights: Vec<f64>,
}

/// Build the `n x n` observation grid on `V`.
pub fn observation_grid(n_per_axis: usize) -> Result<ObservationGrid> {
    if n_per_axis < 2 {
        return Err(Error::invalid(format!(
            "observation grid needs at least 2 points per axis, got {n_per_axis}"
        )));
    }
    let n = n_per_axis;
    let h = 2.0 * OBSERVATION_HALF_WIDTH / (n - 1) as f64;
    let coord = |i: usize| -OBSERVATION_HALF_WIDTH + i as f64 * h;
    let axis_weight = |i: usize| if i == 0 || i == n - 1 { h / 2.0 } else { h };
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            points.push([coord(i), coord(j)]);
            weights.push(axis_weight(i) * axis_weight(j));
        }
    }
    Ok(ObservationGrid {
        n_per_axis: n,
        points,
        weights,
    })
}

impl ObservationGrid {
    /// Number of grid points.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// Whether the grid is empty (never true for constructed grids).
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Grid spacing.
    pub fn spacing(&self) -> f64 {
        2.0 * OBSERVATION_HALF_WIDTH / (self.n_per_axis - 1) as f64
    }

    /// Flat indices of this grid's points inside a denser grid, when the
    /// dense grid refines this one exactly (`n_dense = 2*n - 1`).
    pub fn subset_indices_in(&self, dense: &ObservationGrid) -> Result<Vec<usize>> {
        let n = self.n_per_axis;
        let nd = dense.n_per_axis;
        if nd != 2 * n - 1 {
            return Err(Error::invalid(format!(
                "grid with {nd} points per axis does not refine one with {n}: expected {}",
                2 * n - 1
            )));
        }
        let mut idx = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                idx.push(2 * i * nd + 2 * j);
            }
        }
        Ok(idx)
    }
}

/// Tensor-sine basis on `R`, scaled to unit `H^1_0` seminorm.
///
/// Raw mode `(k, l)` is `sin(k*pi*(y1 + L)/(2L)) * sin(l*pi*(y2 + L)/(2L))`
/// with `H^1_0` seminorm `(pi/2) * sqrt(k^2 + l^2)` independent of `L`;
/// the stored normalization divides it out. Modes are indexed flat as
/// `(k - 1) * k_max + (l - 1)` for `k, l` in `1..=k_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct SineBasis {
    /// Largest frequency per axis.
    pub k_max: usize,
    /// Half-width `L` of the supporting region.
    pub half_width: f64,
    norms: Vec<f64>,
}

/// Build the sine basis with frequencies `1..=k_max` per axis.
pub fn sine_basis(k_max: usize, half_width: f64) -> Result<SineBasis> {
    if k_max == 0 {
        return Err(Error::invalid("sine basis needs k_max >= 1"));
    }
    if !(half_width.is_finite() && half_width > 0.0) {
        return Err(Error::invalid(format!(
            "sine basis half-width must be positive and finite, got {half_width}"
        )));
    }
    let mut norms = Vec::with_capacity(k_max * k_max);
    for k in 1..=k_max {
        for l in 1..=k_max {
            let kl = ((k * k + l * l) as f64).sqrt();
            norms.push(std::f64::consts::FRAC_PI_2 * kl);
        }
    }
    Ok(SineBasis {
        k_max,
        half_width,
        norms,
    })
}

impl SineBasis {
    /// Number of modes, `k_max^2`.
    pub fn len(&self) -> usize {
        self.k_max * self.k_max
    }

    /// Whether the basis is empty (never true for constructed bases).
    pub fn is_empty(&self) -> bool {
        self.k_max == 0
    }

    /// Frequencies `(k, l)` of a flat mode index.
    pub fn mode(&self, index: usize) -> (usize, usize) {
        (index / self.k_max + 1, index % self.k_max + 1)
    }

    /// Raw (unnormalized) mode value at `y`.
    pub fn eval_raw(&self, index: usize, y: [f64; 2]) -> f64 {
        let (k, l) = self.mode(index);
        let s = std::f64::consts::PI / (2.0 * self.half_width);
        ((k as f64) * s * (y[0] + self.half_width)).sin()
            * ((l as f64) * s * (y[1] + self.half_width)).sin()
    }

    /// Raw mode gradient at `y`.
    pub fn grad_raw(&self, index: usize, y: [f64; 2]) -> [f64; 2] {
        let (k, l) = self.mode(index);
        let s = std::f64::consts::PI / (2.0 * self.half_width);
        let u = (k as f64) * s * (y[0] + self.half_width);
        let v = (l as f64) * s * (y[1] + self.half_width);
        [
            (k as f64) * s * u.cos() * v.sin(),
            (l as f64) * s * u.sin() * v.cos(),
        ]
    }

    /// `H^1_0` seminorm of the raw mode.
    pub fn raw_h1_norm(&self, index: usize) -> f64 {
        self.norms[index]
    }

    /// Normalized mode value at `y` (unit `H^1_0` seminorm).
    pub fn eval(&self, index: usize, y: [f64; 2]) -> f64 {
        self.eval_raw(index, y) / self.norms[index]
    }

    /// Density value at `y` of the expansion with the given coefficients.
    pub fn expand(&self, coeffs: &[f64], y: [f64; 2]) -> Result<f64> {
        if coeffs.len() != self.len() {
            return Err(Error::dims(format!(
                "expected {} coefficients, got {}",
                self.len(),
                coeffs.len()
            )));
        }
        Ok(coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * self.eval(i, y))
            .sum())
    }
}

/// `H^1_0` seminorm of a density given by basis coefficients.
///
/// The basis is orthonormal in `H^1_0`, so this is the Euclidean norm of
/// the coefficient vector.
pub fn h1_norm(basis: &SineBasis, coeffs: &[f64]) -> Result<f64> {
    if coeffs.len() != basis.len() {
        return Err(Error::dims(format!(
            "expected {} coefficients, got {}",
            basis.len(),
            coeffs.len()
        )));
    }
    Ok(coeffs.iter().map(|c| c * c).sum::<f64>().sqrt())
}
