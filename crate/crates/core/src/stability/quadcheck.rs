//! Convergence-order check of the trapezoid data quadrature.
//!
//! The discrete data norm replaces the integral over `V` by a trapezoid
//! sum on an `n x n` grid, so its error on smooth integrands should
//! shrink like `1 / M_n` with `M_n = n^2` measurements. The check
//! integrates test functions with known integrals on a ladder of grid
//! sizes and fits the error decay slope on a log-log scale; a slope
//! near -1 confirms first-order behavior in the measurement count.

use crate::geometry::{
    composite_gauss_legendre, fault_point, observation_grid, FaultParams, SineBasis, SourceRegion,
    OBSERVATION_HALF_WIDTH,
};
use crate::kernel::{kernel_h, KernelConfig};
use crate::{Error, Result};

/// A test integrand over `V` with its exact integral.
pub struct QuadTestFunction {
    /// Label used in reports.
    pub name: String,
    /// The integrand.
    pub eval: Box<dyn Fn([f64; 2]) -> f64>,
    /// Exact integral over `V`.
    pub exact: f64,
}

impl std::fmt::Debug for QuadTestFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("QuadTestFunction")
            .field("name", &self.name)
            .field("exact", &self.exact)
            .finish()
    }
}

/// Fitted decay order, or the degenerate exactly-integrated case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SlopeEstimate {
    /// Least-squares slope of `log(error)` against `log(n^2)`.
    Fitted(f64),
    /// Every grid size integrated the function to roundoff; no slope
    /// can be fitted (the trapezoid rule is exact for constants).
    ExactlyIntegrated,
}

impl SlopeEstimate {
    /// The fitted slope, when one exists.
    pub fn fitted(&self) -> Option<f64> {
        match self {
            SlopeEstimate::Fitted(s) => Some(*s),
            SlopeEstimate::ExactlyIntegrated => None,
        }
    }
}

/// Per-function outcome of the order check.
#[derive(Debug, Clone)]
pub struct FunctionCheck {
    /// Function label.
    pub name: String,
    /// `(n, |trapezoid sum - exact|)` per grid size.
    pub errors: Vec<(usize, f64)>,
    /// Fitted decay order.
    pub slope: SlopeEstimate,
}

/// Relative error below which a function counts as exactly integrated.
const EXACT_REL_TOL: f64 = 1e-12;

/// Run the order check for each function over the given grid sizes.
///
/// Requires at least three strictly increasing sizes so a slope fit is
/// meaningful.
pub fn quadrature_order_check(
    funcs: &[QuadTestFunction],
    n_list: &[usize],
) -> Result<Vec<FunctionCheck>> {
    if funcs.is_empty() {
        return Err(Error::invalid("no test functions given"));
    }
    if n_list.len() < 3 {
        return Err(Error::invalid(format!(
            "need at least 3 grid sizes to fit a decay slope, got {}",
            n_list.len()
        )));
    }
    for w in n_list.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::invalid(format!(
                "grid sizes must be strictly increasing, got {} after {}",
                w[1], w[0]
            )));
        }
    }
    let grids = n_list
        .iter()
        .map(|&n| observation_grid(n))
        .collect::<Result<Vec<_>>>()?;
    let mut checks = Vec::with_capacity(funcs.len());
    for func in funcs {
        let mut errors = Vec::with_capacity(grids.len());
        for grid in &grids {
            let sum: f64 = grid
                .points
                .iter()
                .zip(grid.weights.iter())
                .map(|(p, w)| w * (func.eval)(*p))
                .sum();
            errors.push((grid.n_per_axis, (sum - func.exact).abs()));
        }
        let scale = func.exact.abs().max(1.0);
        let slope = if errors.iter().all(|(_, e)| *e <= EXACT_REL_TOL * scale) {
            SlopeEstimate::ExactlyIntegrated
        } else {
            SlopeEstimate::Fitted(fit_slope(&errors))
        };
        checks.push(FunctionCheck {
            name: func.name.clone(),
            errors,
            slope,
        });
    }
    Ok(checks)
}

/// Least-squares slope of `ln(error)` against `ln(n^2)`.
fn fit_slope(errors: &[(usize, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = errors
        .iter()
        .map(|&(n, e)| {
            let x = 2.0 * (n as f64).ln();
            let y = e.max(f64::MIN_POSITIVE).ln();
            (x, y)
        })
        .collect();
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Constant test function; the trapezoid rule integrates it exactly.
pub fn constant(c: f64) -> QuadTestFunction {
    let area = (2.0 * OBSERVATION_HALF_WIDTH) * (2.0 * OBSERVATION_HALF_WIDTH);
    QuadTestFunction {
        name: "constant".into(),
        eval: Box::new(move |_| c),
        exact: c * area,
    }
}

/// Smooth product-cosine test function with a closed-form integral:
/// `cos(x1/50) cos(x2/50)` integrates to `(100 sin 4)^2` over `V`.
pub fn closed_form_cosine() -> QuadTestFunction {
    let one_d = 100.0 * 4.0f64.sin();
    QuadTestFunction {
        name: "cosine".into(),
        eval: Box::new(|x| (x[0] / 50.0).cos() * (x[1] / 50.0).cos()),
        exact: one_d * one_d,
    }
}

/// Reference rule used to compute the "exact" integral of the forward
/// data in [`forward_data_probe`]: a composite Gauss rule with `cells`
/// cells per axis of the given `order`, which converges much faster
/// than the trapezoid sums under test.
#[derive(Debug, Clone, Copy)]
pub struct OracleRule {
    pub cells: usize,
    pub order: usize,
}

impl Default for OracleRule {
    fn default() -> Self {
        Self {
            cells: 16,
            order: 8,
        }
    }
}

/// Forward-data test function: the data `x -> (A_m u)(x)` of a fixed
/// density, evaluated through the same source quadrature the assembly
/// uses. Its exact integral over `V` has no closed form, so it is taken
/// from the dense composite Gauss rule described by `oracle`.
pub fn forward_data_probe(
    m: &FaultParams,
    coeffs: &[f64],
    basis: &SineBasis,
    region: &SourceRegion,
    cfg: &KernelConfig,
    quad_order: usize,
    oracle: OracleRule,
) -> Result<QuadTestFunction> {
    cfg.validate()?;
    if !cfg.cutoff_enabled {
        let reach = m.a.abs() * region.half_width + m.b.abs() * region.half_width;
        if m.d + reach >= 0.0 {
            return Err(Error::invalid(format!(
                "fault plane at {m} reaches the surface with the cutoff disabled"
            )));
        }
    }
    let rule = region.quadrature(quad_order)?;
    let mut nodes: Vec<([f64; 2], f64)> = Vec::with_capacity(rule.points.len());
    for (y, w) in rule.points.iter().zip(rule.weights.iter()) {
        let depth = fault_point(m, y[0], y[1])[2];
        if cfg.chi(depth) == 0.0 {
            continue;
        }
        nodes.push((*y, w * basis.expand(coeffs, *y)?));
    }
    let m = *m;
    let cfg = *cfg;
    let eval = move |x: [f64; 2]| -> f64 {
        nodes
            .iter()
            .map(|(y, c)| {
                c * kernel_h(&m, x, *y, &cfg)
                    .expect("kernel is regular away from the fault plane")
            })
            .sum()
    };
    let oracle = composite_gauss_legendre(OBSERVATION_HALF_WIDTH, oracle.cells, oracle.order)?;
    let exact = oracle.integrate(&eval);
    Ok(QuadTestFunction {
        name: "forward_data".into(),
        eval: Box::new(eval),
        exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{sine_basis, SOURCE_HALF_WIDTH};

    const LADDER: [usize; 4] = [6, 11, 21, 41];

    #[test]
    fn constants_are_integrated_exactly() {
        let checks = quadrature_order_check(&[constant(3.0)], &LADDER).unwrap();
        assert_eq!(checks[0].slope, SlopeEstimate::ExactlyIntegrated);
        for (_, e) in &checks[0].errors {
            assert!(*e <= 1e-12 * 480000.0, "constant error {e}");
        }
    }

    #[test]
    fn cosine_error_decays_first_order_in_measurements() {
        let checks = quadrature_order_check(&[closed_form_cosine()], &LADDER).unwrap();
        let slope = checks[0].slope.fitted().expect("cosine is not exact");
        assert!(
            (-1.3..=-0.8).contains(&slope),
            "cosine slope {slope} outside [-1.3, -0.8]"
        );
        let errs = &checks[0].errors;
        assert!(errs.last().unwrap().1 < errs[0].1);
    }

    #[test]
    fn forward_data_error_decays_first_order_in_measurements() {
        let basis = sine_basis(3, SOURCE_HALF_WIDTH).unwrap();
        let region = SourceRegion::new(SOURCE_HALF_WIDTH, 4).unwrap();
        let cfg = KernelConfig::default();
        let m = FaultParams::new(0.3, -0.2, -25.0).unwrap();
        let coeffs: Vec<f64> = (0..basis.len())
            .map(|i| ((i + 1) as f64 * 0.61).cos())
            .collect();
        let probe =
            forward_data_probe(
                &m,
                &coeffs,
                &basis,
                &region,
                &cfg,
                4,
                OracleRule { cells: 8, order: 6 },
            )
            .unwrap();
        let checks = quadrature_order_check(&[probe], &LADDER).unwrap();
        let slope = checks[0].slope.fitted().expect("data is not exact");
        assert!(
            (-1.3..=-0.8).contains(&slope),
            "forward data slope {slope} outside [-1.3, -0.8]"
        );
    }

    #[test]
    fn rejects_short_or_unsorted_ladders() {
        assert!(quadrature_order_check(&[constant(1.0)], &[6, 11]).is_err());
        assert!(quadrature_order_check(&[constant(1.0)], &[6, 11, 11]).is_err());
        assert!(quadrature_order_check(&[constant(1.0)], &[11, 6, 21]).is_err());
        assert!(quadrature_order_check(&[], &[6, 11, 21]).is_err());
    }

    #[test]
    fn probe_rejects_surface_piercing_plane_without_cutoff() {
        let basis = sine_basis(2, SOURCE_HALF_WIDTH).unwrap();
        let region = SourceRegion::new(SOURCE_HALF_WIDTH, 2).unwrap();
        let cfg = KernelConfig {
            cutoff_enabled: false,
            ..KernelConfig::default()
        };
        let m = FaultParams::new(0.5, 0.5, -20.0).unwrap();
        let coeffs = vec![1.0; basis.len()];
        let oracle = OracleRule { cells: 4, order: 4 };
        assert!(forward_data_probe(&m, &coeffs, &basis, &region, &cfg, 3, oracle).is_err());
    }

    #[test]
    fn slope_fit_recovers_synthetic_order() {
        // err = C * n^-2 should fit slope -1 against M = n^2 exactly.
        let errors: Vec<(usize, f64)> = LADDER
            .iter()
            .map(|&n| (n, 7.5 / (n as f64 * n as f64)))
            .collect();
        let s = fit_slope(&errors);
        assert!((s + 1.0).abs() < 1e-12, "synthetic slope {s}");
    }
}
