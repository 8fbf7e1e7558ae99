//! Scaled conjugate gradient minimization.
//!
//! Møller's algorithm: conjugate directions where the curvature along
//! the search direction is estimated from a finite difference of
//! gradients at scale `sigma`, regularized by a Levenberg-style damping
//! `lambda` that adapts through the comparison ratio between predicted
//! and actual decrease. No line search is performed; a step is either
//! accepted (the objective decreased the quadratic model's way) or
//! rejected, in which case only `lambda` changes.

use crate::{Error, Result};
use nalgebra::DVector;

/// Gradient-difference scale.
const SIGMA: f64 = 1e-4;

/// Initial damping.
const LAMBDA_INIT: f64 = 1e-6;

/// Damping ceiling; beyond this the iteration is stalled.
const LAMBDA_MAX: f64 = 1e20;

/// Gradient norm under which the minimizer stops.
const GRAD_TOL: f64 = 1e-14;

/// Minimize `f` from `w0` for at most `max_iters` iterations.
///
/// `f` returns the objective value and its gradient. Returns the final
/// point and the objective trace: entry 0 is the initial value, entry
/// `k` the value after iteration `k`. Accepted steps never increase the
/// objective, so the trace is non-increasing; rejected steps repeat the
/// previous value.
///
/// Fails with a training error naming the iteration if the objective
/// or gradient turns non-finite.
pub fn scg_minimize(
    mut f: impl FnMut(&DVector<f64>) -> (f64, DVector<f64>),
    w0: DVector<f64>,
    max_iters: usize,
) -> Result<(DVector<f64>, Vec<f64>)> {
    if max_iters == 0 {
        return Err(Error::invalid("iteration budget must be >= 1"));
    }
    let n = w0.len();
    if n == 0 {
        return Err(Error::invalid("cannot minimize over zero weights"));
    }
    let check = |iteration: usize, j: f64, g: &DVector<f64>| -> Result<()> {
        if !j.is_finite() {
            return Err(Error::TrainingDiverged {
                iteration,
                detail: format!("objective is {j}"),
            });
        }
        if !g.iter().all(|v| v.is_finite()) {
            return Err(Error::TrainingDiverged {
                iteration,
                detail: "gradient has non-finite entries".into(),
            });
        }
        Ok(())
    };
    let mut w = w0;
    let (mut j_cur, mut grad) = f(&w);
    check(0, j_cur, &grad)?;
    let mut r = -grad.clone();
    let mut p = r.clone();
    let mut trace = Vec::with_capacity(max_iters + 1);
    trace.push(j_cur);
    let mut lambda = LAMBDA_INIT;
    let mut lambda_bar = 0.0;
    let mut success = true;
    let mut delta_raw = 0.0;
    for k in 1..=max_iters {
        let p_sq = p.norm_squared();
        if p_sq == 0.0 || r.norm() <= GRAD_TOL {
            break;
        }
        if success {
            // Curvature along p from a gradient difference.
            let sigma_k = SIGMA / p_sq.sqrt();
            let (j_s, g_s) = f(&(&w + &p * sigma_k));
            check(k, j_s, &g_s)?;
            delta_raw = p.dot(&((g_s - &grad) / sigma_k));
        }
        let mut delta = delta_raw + (lambda - lambda_bar) * p_sq;
        if delta <= 0.0 {
            // Make the curvature estimate positive definite.
            lambda_bar = 2.0 * (lambda - delta / p_sq);
            delta = -delta + lambda * p_sq;
            lambda = lambda_bar;
        }
        let mu = p.dot(&r);
        let alpha = mu / delta;
        let w_new = &w + &p * alpha;
        let (j_new, g_new) = f(&w_new);
        check(k, j_new, &g_new)?;
        let comparison = 2.0 * delta * (j_cur - j_new) / (mu * mu);
        if comparison.is_finite() && comparison >= 0.0 {
            // Accept the step.
            w = w_new;
            j_cur = j_new;
            grad = g_new;
            let r_new = -grad.clone();
            let beta = (r_new.norm_squared() - r_new.dot(&r)) / mu;
            r = r_new;
            p = if k % n == 0 {
                r.clone()
            } else {
                &r + &p * beta
            };
            lambda_bar = 0.0;
            success = true;
            if comparison >= 0.75 {
                lambda = (0.25 * lambda).max(f64::MIN_POSITIVE);
            }
        } else {
            lambda_bar = lambda;
            success = false;
        }
        if !comparison.is_finite() || comparison < 0.25 {
            let ratio = if comparison.is_finite() { comparison } else { 0.0 };
            lambda += delta * (1.0 - ratio) / p_sq;
            if !lambda.is_finite() {
                lambda = LAMBDA_MAX;
            }
        }
        trace.push(j_cur);
        if lambda > LAMBDA_MAX {
            break;
        }
    }
    Ok((w, trace))
}
