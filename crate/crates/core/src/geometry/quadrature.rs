//! Gauss-Legendre quadrature: reference rules on `[-1, 1]` and composite
//! tensor rules on centered squares.
//!
//! Nodes are the roots of the Legendre polynomial `P_n`, found by Newton
//! iteration from the Chebyshev-based initial guess; weights follow from
//! the derivative value at each root. A composite rule subdivides each
//! axis into equal cells and maps the reference rule affinely into each
//! cell, which keeps the order of accuracy while shrinking the mesh size.

use crate::{Error, Result};

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
///
/// Exact for polynomials of degree `2n - 1`. Nodes are returned in
/// ascending order.
pub fn gauss_legendre(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::invalid("Gauss-Legendre rule needs n >= 1"));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    // Roots are symmetric about 0; solve for the non-negative half.
    let half = n.div_ceil(2);
    for i in 0..half {
        // Tricomi-style initial guess, accurate enough for Newton.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_deriv(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                let (p2, d2) = legendre_with_deriv(n, x);
                dp = d2;
                x -= p2 / d2;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = w;
        nodes[i] = -x;
        weights[i] = w;
    }
    if n % 2 == 1 {
        // Central node of an odd rule is exactly zero.
        nodes[n / 2] = 0.0;
    }
    Ok((nodes, weights))
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre_with_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// A two-dimensional quadrature rule: points with matching weights.
#[derive(Debug, Clone)]
pub struct Rule2d {
    /// Quadrature points `(y1, y2)`.
    pub points: Vec<[f64; 2]>,
    /// Weights, summing to the area of the integration domain.
    pub weights: Vec<f64>,
}

impl Rule2d {
    /// Number of points.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// Whether the rule is empty (never true for constructed rules).
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Apply the rule to `f`.
    pub fn integrate(&self, mut f: impl FnMut([f64; 2]) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * f(*p))
            .sum()
    }
}

/// Composite tensor Gauss-Legendre rule on `[-hw, hw]^2` with
/// `cells x cells` equal square cells and an `order`-point rule per axis
/// in each cell.
pub fn composite_gauss_legendre(half_width: f64, cells: usize, order: usize) -> Result<Rule2d> {
    if !(half_width.is_finite() && half_width > 0.0) {
        return Err(Error::invalid(format!(
            "composite rule half-width must be positive and finite, got {half_width}"
        )));
    }
    if cells == 0 {
        return Err(Error::invalid("composite rule needs at least one cell"));
    }
    if order < 2 {
        return Err(Error::invalid(format!(
            "composite rule order must be >= 2, got {order}"
        )));
    }
    let (ref_nodes, ref_weights) = gauss_legendre(order)?;
    let cell = 2.0 * half_width / cells as f64;
    let scale = cell / 2.0;
    // 1-D composite nodes/weights along one axis.
    let mut nodes_1d = Vec::with_capacity(cells * order);
    let mut weights_1d = Vec::with_capacity(cells * order);
    for c in 0..cells {
        let center = -half_width + (c as f64 + 0.5) * cell;
        for (x, w) in ref_nodes.iter().zip(&ref_weights) {
            nodes_1d.push(center + scale * x);
            weights_1d.push(scale * w);
        }
    }
    let np = nodes_1d.len();
    let mut points = Vec::with_capacity(np * np);
    let mut weights = Vec::with_capacity(np * np);
    for i in 0..np {
        for j in 0..np {
            points.push([nodes_1d[i], nodes_1d[j]]);
            weights.push(weights_1d[i] * weights_1d[j]);
        }
    }
    Ok(Rule2d { points, weights })
}
