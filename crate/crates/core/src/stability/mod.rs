//! Randomized verification of the stability properties of the forward
//! family `m -> A_m`.
//!
//! The central quantity is the empirical Lipschitz-type lower bound
//!
//! ```text
//! c_hat = min over pairs  |A_m u - A_m' v| / |m - m'|
//! ```
//!
//! where `v` ranges over the admissible slip cone of `E_m'` (data norm
//! at least `A1`, slip norm at most `A2`) and `u` is chosen worst-case
//! by least squares over `E_m`. A positive `c_hat` over many random
//! pairs is evidence that the parameters are stably determined by the
//! data. Each trial evaluates the ratio in two norms: on a dense grid
//! standing in for the continuum, and on a coarse grid that is an exact
//! subset of the dense one, mirroring the discrete form of the bound.
//!
//! The module also checks the trapezoid data quadrature is first order
//! in the number of measurements, bounds the parameter sensitivity of
//! the subspace projector, and estimates the local stability constant
//! from the operator and projector derivatives.

pub mod quadcheck;

pub use quadcheck::{
    quadrature_order_check, FunctionCheck, QuadTestFunction, SlopeEstimate,
};

use crate::geometry::{observation_grid, FaultParams, ParamBox, SineBasis, SourceRegion};
use crate::kernel::KernelConfig;
use crate::operator::{svd_subspace, AssemblyContext, OperatorMatrix, SvdSubspace};
use crate::seeding::stream_rng;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Stream index base for pilot samples, clear of trial indices.
const PILOT_STREAM_BASE: u64 = 1 << 40;

/// Pilot sample count used to calibrate the default `A1`.
const PILOT_COUNT: usize = 32;

/// Relative spectral gap demanded of the projector checks.
const PROJECTION_GAP_MIN: f64 = 0.10;

/// Relative spectral gap below which projector derivatives are refused.
const DERIVATIVE_GAP_MIN: f64 = 0.01;

/// Resampling cap when enforcing the pair separation.
const SEPARATION_RETRIES: usize = 1000;

/// Histogram bin count for ratio distributions.
const HISTOGRAM_BINS: usize = 30;

/// Configuration of the randomized stability estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityConfig {
    /// Minimum admissible data norm; `None` calibrates it as 0.05 times
    /// the median data norm of pilot unit slips.
    pub a1: Option<f64>,
    /// Maximum slip norm.
    pub a2: f64,
    /// Retained subspace rank.
    pub q: usize,
    /// Number of random pairs.
    pub trials: usize,
    /// Master seed; every trial derives its own stream.
    pub seed: u64,
    /// Minimum parameter separation of a pair.
    pub pair_separation_min: f64,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        StabilityConfig {
            a1: None,
            a2: 1.0,
            q: 5,
            trials: 1000,
            seed: 7575,
            pair_separation_min: 0.1,
        }
    }
}

impl StabilityConfig {
    /// Validate ranges.
    pub fn validate(&self) -> Result<()> {
        if let Some(a1) = self.a1 {
            if !(a1.is_finite() && a1 > 0.0) {
                return Err(Error::invalid(format!(
                    "A1 must be positive and finite, got {a1}"
                )));
            }
        }
        if !(self.a2.is_finite() && self.a2 > 0.0) {
            return Err(Error::invalid(format!(
                "A2 must be positive and finite, got {}",
                self.a2
            )));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials must be >= 1"));
        }
        if !(self.pair_separation_min.is_finite() && self.pair_separation_min > 0.0) {
            return Err(Error::invalid(format!(
                "pair separation must be positive, got {}",
                self.pair_separation_min
            )));
        }
        if self.q == 0 {
            return Err(Error::invalid("subspace rank q must be >= 1"));
        }
        Ok(())
    }
}

/// Coarse-grid extraction plan: the coarse grid is an exact subset of
/// the dense grid, so coarse rows are dense rows reweighted.
#[derive(Debug, Clone)]
pub struct CoarsePlan {
    /// Coarse points per axis.
    pub n_per_axis: usize,
    /// Flat dense indices of the coarse points.
    pub indices: Vec<usize>,
    sqrt_weights: DVector<f64>,
}

/// Geometry and operator context shared by the stability estimators.
#[derive(Debug, Clone)]
pub struct StabilityContext {
    /// Assembly context on the dense grid (the continuum stand-in).
    pub assembly: AssemblyContext,
    /// Optional coarse grid for the discrete form of the bound.
    pub coarse: Option<CoarsePlan>,
    /// Admissible parameter box.
    pub param_box: ParamBox,
}

impl StabilityContext {
    /// Build a context; the coarse grid, when given, must refine-align
    /// with the dense one (`dense_n = 2 * coarse_n - 1`).
    pub fn new(
        basis: SineBasis,
        region: SourceRegion,
        cfg: KernelConfig,
        quad_order: usize,
        dense_n: usize,
        coarse_n: Option<usize>,
        param_box: ParamBox,
    ) -> Result<Self> {
        let dense = observation_grid(dense_n)?;
        let coarse = match coarse_n {
            Some(nc) => {
                let grid = observation_grid(nc)?;
                let indices = grid.subset_indices_in(&dense)?;
                let sqrt_weights =
                    DVector::from_iterator(grid.len(), grid.weights.iter().map(|w| w.sqrt()));
                Some(CoarsePlan {
                    n_per_axis: nc,
                    indices,
                    sqrt_weights,
                })
            }
            None => None,
        };
        let assembly = AssemblyContext::new(basis, region, dense, cfg, quad_order)?;
        Ok(StabilityContext {
            assembly,
            coarse,
            param_box,
        })
    }

    /// Default context: dense 65 x 65 grid standing in for the
    /// continuum, coarse 33 x 33 subset, frequencies up to 8, default
    /// source mesh and kernel settings.
    pub fn with_defaults() -> Result<Self> {
        StabilityContext::new(
            crate::geometry::sine_basis(8, crate::geometry::SOURCE_HALF_WIDTH)?,
            SourceRegion::default(),
            KernelConfig::default(),
            4,
            65,
            Some(33),
            ParamBox::default(),
        )
    }

    /// Weighted coarse matrix extracted from a dense assembly.
    fn coarse_weighted(&self, op: &OperatorMatrix) -> Option<DMatrix<f64>> {
        let plan = self.coarse.as_ref()?;
        let cols = op.cols();
        let mut out = DMatrix::zeros(plan.indices.len(), cols);
        for (row, &di) in plan.indices.iter().enumerate() {
            let scale = plan.sqrt_weights[row] / op.sqrt_weights[di];
            for c in 0..cols {
                out[(row, c)] = op.weighted[(di, c)] * scale;
            }
        }
        Some(out)
    }

    fn diameter(&self) -> f64 {
        let r = self.param_box.ranges();
        r.iter()
            .map(|(lo, hi)| (hi - lo) * (hi - lo))
            .sum::<f64>()
            .sqrt()
    }
}

/// Why a trial was skipped rather than scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkipReason {
    /// The drawn slip produced data below the `A1` floor.
    DataNormBelowA1,
    /// No second parameter at the required separation was found.
    SeparationUnattainable,
}

impl std::fmt::Display for SkipReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SkipReason::DataNormBelowA1 => write!(f, "data_norm_below_a1"),
            SkipReason::SeparationUnattainable => write!(f, "separation_unattainable"),
        }
    }
}

/// One scored or skipped trial.
#[derive(Debug, Clone)]
pub struct TrialRecord {
    /// Trial index (also the RNG stream index).
    pub index: usize,
    /// First parameter of the pair.
    pub m: FaultParams,
    /// Second parameter of the pair.
    pub m_prime: FaultParams,
    /// Euclidean parameter separation.
    pub separation: f64,
    /// Data norm of the drawn slip at `m_prime` (dense grid).
    pub data_norm: f64,
    /// Dense-grid ratio, when scored.
    pub ratio: Option<f64>,
    /// Coarse-grid ratio, when scored and a coarse plan exists.
    pub ratio_coarse: Option<f64>,
    /// Skip reason, when skipped.
    pub skipped: Option<SkipReason>,
}

/// The pair attaining the minimum ratio.
#[derive(Debug, Clone)]
pub struct ArgMin {
    /// Trial index of the minimizer.
    pub trial: usize,
    /// First parameter.
    pub m: FaultParams,
    /// Second parameter.
    pub m_prime: FaultParams,
    /// Separation of the pair.
    pub separation: f64,
    /// The minimal dense-grid ratio (equals `c_hat`).
    pub ratio: f64,
    /// Least-squares optimal slip coefficients over `E_m`.
    pub u: Vec<f64>,
    /// Drawn slip coefficients at `m_prime`.
    pub v: Vec<f64>,
}

/// Fixed-width histogram of scored ratios.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// Lower edge.
    pub lo: f64,
    /// Upper edge.
    pub hi: f64,
    /// Bin counts.
    pub counts: Vec<u64>,
}

impl Histogram {
    /// Build from values (empty input yields a single empty bin).
    pub fn from_values(values: &[f64], bins: usize) -> Histogram {
        if values.is_empty() || bins == 0 {
            return Histogram {
                lo: 0.0,
                hi: 0.0,
                counts: vec![0],
            };
        }
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let span = (hi - lo).max(f64::MIN_POSITIVE);
        let mut counts = vec![0u64; bins];
        for &v in values {
            let b = (((v - lo) / span) * bins as f64) as usize;
            counts[b.min(bins - 1)] += 1;
        }
        Histogram { lo, hi, counts }
    }

    /// Total mass.
    pub fn mass(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// What a report describes.
#[derive(Debug, Clone, PartialEq)]
pub enum ReportKind {
    /// Random pairs `(m, m')`.
    Pairs,
    /// Random `m` against a fixed target `(m0, v0)`.
    FixedTarget {
        /// The fixed parameter.
        m0: FaultParams,
        /// Data norm of the fixed slip at `m0`.
        target_data_norm: f64,
    },
}

/// Outcome of a randomized stability run.
#[derive(Debug, Clone)]
pub struct StabilityReport {
    /// What was estimated.
    pub kind: ReportKind,
    /// Empirical minimum dense-grid ratio.
    pub c_hat: f64,
    /// Empirical minimum coarse-grid ratio, when a coarse plan exists.
    pub c_hat_coarse: Option<f64>,
    /// Minimum over pairs of coarse ratio / dense ratio.
    pub min_coarse_over_dense: Option<f64>,
    /// The minimizing pair with its slips.
    pub argmin: ArgMin,
    /// Distribution of scored dense ratios.
    pub histogram: Histogram,
    /// Every trial, scored or skipped.
    pub trials: Vec<TrialRecord>,
    /// Scored trial count.
    pub completed: usize,
    /// Skipped trial count.
    pub skipped: usize,
    /// The `A1` actually applied (pilot-calibrated when not given).
    pub a1_effective: f64,
    /// The `A2` applied.
    pub a2: f64,
    /// Subspace rank.
    pub q: usize,
    /// Master seed.
    pub seed: u64,
    /// Minimum pair separation enforced.
    pub pair_separation_min: f64,
    /// Dense grid points per axis.
    pub grid_dense_n: usize,
    /// Coarse grid points per axis, when present.
    pub grid_coarse_n: Option<usize>,
    /// Basis frequencies per axis.
    pub basis_k_max: usize,
    /// Source mesh cells per axis.
    pub region_cells: usize,
    /// Per-cell quadrature order.
    pub quad_order: usize,
    /// Whether the depth cutoff was applied.
    pub cutoff_enabled: bool,
    /// Cutoff depth.
    pub cutoff_d0: f64,
}

impl StabilityReport {
    /// Machine-readable `key = value` report. Contains no timings, so
    /// re-runs under the same seed are byte-identical.
    pub fn write_kv<W: std::io::Write>(&self, out: &mut W) -> std::io::Result<()> {
        match &self.kind {
            ReportKind::Pairs => writeln!(out, "kind = pairs")?,
            ReportKind::FixedTarget {
                m0,
                target_data_norm,
            } => {
                writeln!(out, "kind = fixed_target")?;
                writeln!(out, "m0 = {} {} {}", m0.a, m0.b, m0.d)?;
                writeln!(out, "target_data_norm = {target_data_norm}")?;
            }
        }
        writeln!(out, "trials = {}", self.trials.len())?;
        writeln!(out, "completed = {}", self.completed)?;
        writeln!(out, "skipped = {}", self.skipped)?;
        writeln!(out, "c_hat = {}", self.c_hat)?;
        match self.c_hat_coarse {
            Some(c) => writeln!(out, "c_hat_coarse = {c}")?,
            None => writeln!(out, "c_hat_coarse = none")?,
        }
        match self.min_coarse_over_dense {
            Some(c) => writeln!(out, "min_coarse_over_dense = {c}")?,
            None => writeln!(out, "min_coarse_over_dense = none")?,
        }
        writeln!(out, "a1_effective = {}", self.a1_effective)?;
        writeln!(out, "a2 = {}", self.a2)?;
        writeln!(out, "q = {}", self.q)?;
        writeln!(out, "seed = {}", self.seed)?;
        writeln!(out, "pair_separation_min = {}", self.pair_separation_min)?;
        writeln!(out, "grid_dense_n = {}", self.grid_dense_n)?;
        match self.grid_coarse_n {
            Some(n) => writeln!(out, "grid_coarse_n = {n}")?,
            None => writeln!(out, "grid_coarse_n = none")?,
        }
        writeln!(out, "basis_k_max = {}", self.basis_k_max)?;
        writeln!(out, "region_cells = {}", self.region_cells)?;
        writeln!(out, "quad_order = {}", self.quad_order)?;
        writeln!(out, "cutoff_enabled = {}", self.cutoff_enabled)?;
        writeln!(out, "cutoff_d0 = {}", self.cutoff_d0)?;
        writeln!(out, "argmin_trial = {}", self.argmin.trial)?;
        writeln!(
            out,
            "argmin_m = {} {} {}",
            self.argmin.m.a, self.argmin.m.b, self.argmin.m.d
        )?;
        writeln!(
            out,
            "argmin_m_prime = {} {} {}",
            self.argmin.m_prime.a, self.argmin.m_prime.b, self.argmin.m_prime.d
        )?;
        writeln!(out, "argmin_separation = {}", self.argmin.separation)?;
        writeln!(out, "argmin_ratio = {}", self.argmin.ratio)?;
        writeln!(out, "histogram_lo = {}", self.histogram.lo)?;
        writeln!(out, "histogram_hi = {}", self.histogram.hi)?;
        let counts: Vec<String> = self.histogram.counts.iter().map(|c| c.to_string()).collect();
        writeln!(out, "histogram_counts = {}", counts.join(","))?;
        Ok(())
    }

    /// Per-trial CSV (no timings; byte-identical across re-runs).
    pub fn write_trials_csv<W: std::io::Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(
            out,
            "trial,a,b,d,a_prime,b_prime,d_prime,separation,data_norm,ratio_dense,ratio_coarse,skipped"
        )?;
        for t in &self.trials {
            let ratio = t.ratio.map(|r| r.to_string()).unwrap_or_default();
            let ratio_c = t.ratio_coarse.map(|r| r.to_string()).unwrap_or_default();
            let skip = t.skipped.map(|s| s.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                t.index,
                t.m.a,
                t.m.b,
                t.m.d,
                t.m_prime.a,
                t.m_prime.b,
                t.m_prime.d,
                t.separation,
                t.data_norm,
                ratio,
                ratio_c,
                skip
            )?;
        }
        Ok(())
    }

    /// The `key = value` report as a string.
    pub fn kv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_kv(&mut buf).expect("write to Vec cannot fail");
        String::from_utf8(buf).expect("report is UTF-8")
    }
}

/// Least squares of `rhs` over the columns of `mat` (tall, full rank):
/// returns the coefficient vector and the residual norm.
fn lsq(mat: &DMatrix<f64>, rhs: &DVector<f64>) -> (DVector<f64>, f64) {
    let gram = mat.transpose() * mat;
    let proj = mat.transpose() * rhs;
    let w = match gram.clone().cholesky() {
        Some(ch) => ch.solve(&proj),
        None => {
            // Rank-deficient corner: fall back to the pseudo-inverse.
            let eig = nalgebra::SymmetricEigen::new(gram);
            let tol = eig.eigenvalues.amax() * 1e-12;
            let mut w = DVector::zeros(proj.len());
            for i in 0..proj.len() {
                if eig.eigenvalues[i] > tol {
                    let vi = eig.eigenvectors.column(i);
                    w += vi * (vi.dot(&proj) / eig.eigenvalues[i]);
                }
            }
            w
        }
    };
    let resid = (mat * &w - rhs).norm();
    (w, resid)
}

/// Optimal slip over the retained subspace for weighted data `b`:
/// coefficients of `V_q Sigma_q^-1 U_q^T b` in the full basis.
fn lsq_slip(sub: &SvdSubspace, b: &DVector<f64>) -> Vec<f64> {
    let mut w = sub.left_q().transpose() * b;
    for i in 0..sub.q {
        let s = sub.singular_values[i];
        if s > 0.0 {
            w[i] /= s;
        } else {
            w[i] = 0.0;
        }
    }
    let u = sub.right_q() * w;
    u.as_slice().to_vec()
}

fn sample_separated(
    pbox: &ParamBox,
    anchor: &FaultParams,
    rng: &mut ChaCha8Rng,
    sep_min: f64,
) -> Option<(FaultParams, f64)> {
    for _ in 0..SEPARATION_RETRIES {
        let cand = pbox.sample(rng);
        let sep = anchor.distance(&cand);
        if sep >= sep_min {
            return Some((cand, sep));
        }
    }
    None
}

/// Calibrate the effective `A1`: the configured value, or 0.05 times
/// the median dense-grid data norm of pilot unit slips.
fn effective_a1(ctx: &StabilityContext, cfg: &StabilityConfig) -> Result<(f64, f64)> {
    let mut norms = Vec::with_capacity(PILOT_COUNT);
    for i in 0..PILOT_COUNT {
        let mut rng = stream_rng(cfg.seed, PILOT_STREAM_BASE + i as u64);
        let m = ctx.param_box.sample(&mut rng);
        let op = ctx.assembly.assemble(&m)?;
        let sub = svd_subspace(&op, cfg.q)?;
        let v = sub.random_unit_member(&mut rng);
        norms.push(op.data_norm(&v)?);
    }
    norms.sort_by(|a, b| a.partial_cmp(b).expect("norms are finite"));
    let median = norms[norms.len() / 2];
    let max = norms[norms.len() - 1];
    let a1 = cfg.a1.unwrap_or(0.05 * median);
    if a1 > max * cfg.a2 {
        return Err(Error::invalid(format!(
            "A1 = {a1} is unattainable: pilot unit slips reach at most {max} (A2 = {})",
            cfg.a2
        )));
    }
    Ok((a1, max))
}

struct RatioPair {
    dense: f64,
    coarse: Option<f64>,
}

/// Score one (m, m', v) configuration in both norms.
fn score_pair(
    ctx: &StabilityContext,
    sub_m: &SvdSubspace,
    op_m: &OperatorMatrix,
    op_mp: &OperatorMatrix,
    v: &[f64],
    separation: f64,
) -> Result<(RatioPair, f64, Vec<f64>)> {
    let b_dense = op_mp.forward_weighted(v)?;
    let data_norm = b_dense.norm();
    let resid_dense = sub_m.lsq_residual(&b_dense)?;
    let u = lsq_slip(sub_m, &b_dense);
    let coarse = match &ctx.coarse {
        Some(_) => {
            let ac_m = ctx.coarse_weighted(op_m).expect("coarse plan exists");
            let ac_mp = ctx.coarse_weighted(op_mp).expect("coarse plan exists");
            let b_coarse = ac_mp * DVector::from_column_slice(v);
            let basis_c = ac_m * sub_m.right_q();
            let (_, resid_coarse) = lsq(&basis_c, &b_coarse);
            Some(resid_coarse / separation)
        }
        None => None,
    };
    Ok((
        RatioPair {
            dense: resid_dense / separation,
            coarse,
        },
        data_norm,
        u,
    ))
}

fn build_report(
    ctx: &StabilityContext,
    cfg: &StabilityConfig,
    kind: ReportKind,
    trials: Vec<TrialRecord>,
    argmin: Option<ArgMin>,
    a1_effective: f64,
) -> Result<StabilityReport> {
    let completed = trials.iter().filter(|t| t.ratio.is_some()).count();
    let skipped = trials.len() - completed;
    let argmin = argmin.ok_or_else(|| {
        Error::invalid(format!(
            "all {} trials were skipped; constraints are effectively unsatisfiable",
            trials.len()
        ))
    })?;
    let dense_ratios: Vec<f64> = trials.iter().filter_map(|t| t.ratio).collect();
    let c_hat = argmin.ratio;
    let coarse_ratios: Vec<f64> = trials.iter().filter_map(|t| t.ratio_coarse).collect();
    let c_hat_coarse = coarse_ratios
        .iter()
        .cloned()
        .fold(None, |acc: Option<f64>, r| {
            Some(acc.map_or(r, |a| a.min(r)))
        });
    let min_coarse_over_dense = trials
        .iter()
        .filter_map(|t| match (t.ratio, t.ratio_coarse) {
            (Some(d), Some(c)) if d > 0.0 => Some(c / d),
            _ => None,
        })
        .fold(None, |acc: Option<f64>, r| {
            Some(acc.map_or(r, |a| a.min(r)))
        });
    let histogram = Histogram::from_values(&dense_ratios, HISTOGRAM_BINS);
    Ok(StabilityReport {
        kind,
        c_hat,
        c_hat_coarse,
        min_coarse_over_dense,
        argmin,
        histogram,
        completed,
        skipped,
        trials,
        a1_effective,
        a2: cfg.a2,
        q: cfg.q,
        seed: cfg.seed,
        pair_separation_min: cfg.pair_separation_min,
        grid_dense_n: ctx.assembly.grid.n_per_axis,
        grid_coarse_n: ctx.coarse.as_ref().map(|c| c.n_per_axis),
        basis_k_max: ctx.assembly.basis.k_max,
        region_cells: ctx.assembly.region.cells,
        quad_order: ctx.assembly.quad_order,
        cutoff_enabled: ctx.assembly.cfg.cutoff_enabled,
        cutoff_d0: ctx.assembly.cfg.d0,
    })
}

fn check_common(ctx: &StabilityContext, cfg: &StabilityConfig) -> Result<()> {
    cfg.validate()?;
    if cfg.q >= ctx.assembly.basis.len() {
        return Err(Error::invalid(format!(
            "rank q = {} must be below the mode count {}",
            cfg.q,
            ctx.assembly.basis.len()
        )));
    }
    if cfg.pair_separation_min >= ctx.diameter() {
        return Err(Error::invalid(format!(
            "pair separation {} is not attainable in a box of diameter {}",
            cfg.pair_separation_min,
            ctx.diameter()
        )));
    }
    Ok(())
}

/// Estimate the empirical Lipschitz lower bound over random pairs.
pub fn empirical_lipschitz(
    ctx: &StabilityContext,
    cfg: &StabilityConfig,
) -> Result<StabilityReport> {
    check_common(ctx, cfg)?;
    let (a1, _) = effective_a1(ctx, cfg)?;
    let mut trials = Vec::with_capacity(cfg.trials);
    let mut argmin: Option<ArgMin> = None;
    for index in 0..cfg.trials {
        let mut rng = stream_rng(cfg.seed, index as u64);
        let m = ctx.param_box.sample(&mut rng);
        let Some((m_prime, separation)) =
            sample_separated(&ctx.param_box, &m, &mut rng, cfg.pair_separation_min)
        else {
            trials.push(TrialRecord {
                index,
                m,
                m_prime: m,
                separation: 0.0,
                data_norm: 0.0,
                ratio: None,
                ratio_coarse: None,
                skipped: Some(SkipReason::SeparationUnattainable),
            });
            continue;
        };
        let op_m = ctx.assembly.assemble(&m)?;
        let op_mp = ctx.assembly.assemble(&m_prime)?;
        let sub_m = svd_subspace(&op_m, cfg.q)?;
        let sub_mp = svd_subspace(&op_mp, cfg.q)?;
        let v: Vec<f64> = sub_mp
            .random_unit_member(&mut rng)
            .iter()
            .map(|c| c * cfg.a2)
            .collect();
        let (ratios, data_norm, u) = score_pair(ctx, &sub_m, &op_m, &op_mp, &v, separation)?;
        if data_norm < a1 {
            trials.push(TrialRecord {
                index,
                m,
                m_prime,
                separation,
                data_norm,
                ratio: None,
                ratio_coarse: None,
                skipped: Some(SkipReason::DataNormBelowA1),
            });
            continue;
        }
        if argmin.as_ref().is_none_or(|a| ratios.dense < a.ratio) {
            argmin = Some(ArgMin {
                trial: index,
                m,
                m_prime,
                separation,
                ratio: ratios.dense,
                u,
                v: v.clone(),
            });
        }
        trials.push(TrialRecord {
            index,
            m,
            m_prime,
            separation,
            data_norm,
            ratio: Some(ratios.dense),
            ratio_coarse: ratios.coarse,
            skipped: None,
        });
    }
    build_report(ctx, cfg, ReportKind::Pairs, trials, argmin, a1)
}

/// Estimate the Lipschitz lower bound against one fixed target datum
/// `A_{m0} v0`. `v0` may have support outside any retained subspace.
pub fn fixed_target_lipschitz(
    ctx: &StabilityContext,
    m0: &FaultParams,
    v0: &[f64],
    cfg: &StabilityConfig,
) -> Result<StabilityReport> {
    check_common(ctx, cfg)?;
    if v0.len() != ctx.assembly.basis.len() {
        return Err(Error::dims(format!(
            "expected {} coefficients for v0, got {}",
            ctx.assembly.basis.len(),
            v0.len()
        )));
    }
    let v0_norm: f64 = v0.iter().map(|c| c * c).sum::<f64>().sqrt();
    if v0_norm == 0.0 {
        return Err(Error::invalid("fixed target slip v0 must be nonzero"));
    }
    if !ctx.param_box.contains(m0) {
        return Err(Error::invalid(format!(
            "fixed target parameters {m0} lie outside the admissible box"
        )));
    }
    let op_m0 = ctx.assembly.assemble(m0)?;
    let b0_dense = op_m0.forward_weighted(v0)?;
    let target_data_norm = b0_dense.norm();
    let b0_coarse = ctx
        .coarse_weighted(&op_m0)
        .map(|ac| ac * DVector::from_column_slice(v0));
    let mut trials = Vec::with_capacity(cfg.trials);
    let mut argmin: Option<ArgMin> = None;
    for index in 0..cfg.trials {
        let mut rng = stream_rng(cfg.seed, index as u64);
        let Some((m, separation)) =
            sample_separated(&ctx.param_box, m0, &mut rng, cfg.pair_separation_min)
        else {
            trials.push(TrialRecord {
                index,
                m: *m0,
                m_prime: *m0,
                separation: 0.0,
                data_norm: target_data_norm,
                ratio: None,
                ratio_coarse: None,
                skipped: Some(SkipReason::SeparationUnattainable),
            });
            continue;
        };
        let op_m = ctx.assembly.assemble(&m)?;
        let sub_m = svd_subspace(&op_m, cfg.q)?;
        let resid_dense = sub_m.lsq_residual(&b0_dense)?;
        let u = lsq_slip(&sub_m, &b0_dense);
        let ratio = resid_dense / separation;
        let ratio_coarse = match (&b0_coarse, &ctx.coarse) {
            (Some(b0c), Some(_)) => {
                let ac_m = ctx.coarse_weighted(&op_m).expect("coarse plan exists");
                let basis_c = ac_m * sub_m.right_q();
                let (_, resid_coarse) = lsq(&basis_c, b0c);
                Some(resid_coarse / separation)
            }
            _ => None,
        };
        if argmin.as_ref().is_none_or(|a| ratio < a.ratio) {
            argmin = Some(ArgMin {
                trial: index,
                m,
                m_prime: *m0,
                separation,
                ratio,
                u,
                v: v0.to_vec(),
            });
        }
        trials.push(TrialRecord {
            index,
            m,
            m_prime: *m0,
            separation,
            data_norm: target_data_norm,
            ratio: Some(ratio),
            ratio_coarse,
            skipped: None,
        });
    }
    build_report(
        ctx,
        cfg,
        ReportKind::FixedTarget {
            m0: *m0,
            target_data_norm,
        },
        trials,
        argmin,
        0.0,
    )
}

/// Outcome of the projector sensitivity check.
#[derive(Debug, Clone)]
pub struct ProjectionCheck {
    /// Per-trial ratios `|P_m - P_m0| / |m - m0|`.
    pub ratios: Vec<f64>,
    /// Largest ratio.
    pub max_ratio: f64,
    /// Median ratio.
    pub median_ratio: f64,
    /// Relative spectral gap at `m0`.
    pub gap_m0: f64,
    /// Rank checked.
    pub q: usize,
}

fn demand_gap(sub: &SvdSubspace, floor: f64, at: &FaultParams) -> Result<()> {
    let gap = sub.rel_gap();
    if gap < floor {
        return Err(Error::invalid(format!(
            "spectral gap precondition violated at m = {at}: sigma_{} = {}, sigma_{} = {} (relative gap {gap:.3e} < {floor})",
            sub.q,
            sub.sigma_q(),
            sub.q + 1,
            sub.singular_values[sub.q],
        )));
    }
    Ok(())
}

fn projector(sub: &SvdSubspace) -> DMatrix<f64> {
    let vq = sub.right_q();
    vq * vq.transpose()
}

fn operator_norm_symmetric(mat: &DMatrix<f64>) -> f64 {
    let eig = nalgebra::SymmetricEigen::new(mat.clone());
    eig.eigenvalues.iter().cloned().fold(0.0, |a, l| a.max(l.abs()))
}

/// Bound the sensitivity of the rank-`q` projector around `m0` by
/// sampling parameters within `radius`.
pub fn projection_lipschitz_check(
    ctx: &StabilityContext,
    m0: &FaultParams,
    radius: f64,
    trials: usize,
    q: usize,
    seed: u64,
) -> Result<ProjectionCheck> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::invalid(format!(
            "radius must be positive, got {radius}"
        )));
    }
    if trials == 0 {
        return Err(Error::invalid("trials must be >= 1"));
    }
    let op0 = ctx.assembly.assemble(m0)?;
    let sub0 = svd_subspace(&op0, q)?;
    demand_gap(&sub0, PROJECTION_GAP_MIN, m0)?;
    let p0 = projector(&sub0);
    let mut ratios = Vec::with_capacity(trials);
    for index in 0..trials {
        let mut rng = stream_rng(seed, index as u64);
        let m = loop {
            let delta = [
                rng.gen_range(-radius..radius),
                rng.gen_range(-radius..radius),
                rng.gen_range(-radius..radius),
            ];
            let norm = delta.iter().map(|d| d * d).sum::<f64>().sqrt();
            if norm > radius || norm < radius * 1e-6 {
                continue;
            }
            let cand = FaultParams {
                a: m0.a + delta[0],
                b: m0.b + delta[1],
                d: m0.d + delta[2],
            };
            if ctx.param_box.contains(&cand) {
                break cand;
            }
        };
        let op = ctx.assembly.assemble(&m)?;
        let sub = svd_subspace(&op, q)?;
        demand_gap(&sub, PROJECTION_GAP_MIN, &m)?;
        let diff = projector(&sub) - &p0;
        ratios.push(operator_norm_symmetric(&diff) / m0.distance(&m));
    }
    let mut sorted = ratios.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("ratios are finite"));
    Ok(ProjectionCheck {
        max_ratio: sorted[sorted.len() - 1],
        median_ratio: sorted[sorted.len() / 2],
        ratios,
        gap_m0: sub0.rel_gap(),
        q,
    })
}

/// Local stability constant at `(m, q_dir)`.
#[derive(Debug, Clone)]
pub struct LocalConstant {
    /// The distance estimate (positive under the stability hypothesis).
    pub value: f64,
    /// Smallest retained singular value at `m`.
    pub sigma_q: f64,
    /// Relative spectral gap at `m`.
    pub rel_gap: f64,
    /// Whether the whole unit sphere of `E_m` was admissible (true when
    /// `sigma_q * A2 >= A1`); otherwise the cone was sampled.
    pub cone_full: bool,
}

/// Estimate the local stability constant: the distance between the
/// image of the admissible cone under the parameter derivative of
/// `m -> A_m P_m` and the data range `A_m E_m`.
///
/// The derivative of the projector is taken by central finite
/// differences of the assembled projectors (step 1e-4); the projector
/// is basis-invariant, so the difference quotient is well defined as
/// long as the spectral gap stays open at both evaluation points.
pub fn local_constant(
    ctx: &StabilityContext,
    m: &FaultParams,
    q_dir: [f64; 3],
    cfg: &StabilityConfig,
) -> Result<LocalConstant> {
    check_common(ctx, cfg)?;
    let op = ctx.assembly.assemble(m)?;
    let sub = svd_subspace(&op, cfg.q)?;
    demand_gap(&sub, DERIVATIVE_GAP_MIN, m)?;
    let da = ctx.assembly.directional_derivative(m, q_dir)?;
    let h = 1e-4;
    let shifted = |s: f64| FaultParams {
        a: m.a + s * q_dir[0],
        b: m.b + s * q_dir[1],
        d: m.d + s * q_dir[2],
    };
    let mp = shifted(h);
    let mm = shifted(-h);
    let sub_p = svd_subspace(&ctx.assembly.assemble(&mp)?, cfg.q)?;
    demand_gap(&sub_p, DERIVATIVE_GAP_MIN, &mp)?;
    let sub_m = svd_subspace(&ctx.assembly.assemble(&mm)?, cfg.q)?;
    demand_gap(&sub_m, DERIVATIVE_GAP_MIN, &mm)?;
    let dp = (projector(&sub_p) - projector(&sub_m)) / (2.0 * h);
    let vq = sub.right_q();
    // G = dA V_q + A (dP V_q): how data of subspace slips move with m.
    let g = &da.weighted * vq + &op.weighted * (&dp * vq);
    // Remove the component representable inside A_m E_m.
    let uq = sub.left_q();
    let resid = &g - uq * (uq.transpose() * &g);
    let a1 = cfg.a1.unwrap_or(0.0);
    let cone_full = sub.sigma_q() * cfg.a2 >= a1;
    let value = if cone_full {
        // Minimum over the whole unit sphere: smallest singular value.
        let gram = resid.transpose() * &resid;
        let eig = nalgebra::SymmetricEigen::new(gram);
        eig.eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
            .max(0.0)
            .sqrt()
    } else {
        // Sample admissible unit slips: |A_m (V_q w)| >= A1 / A2.
        let mut best = f64::INFINITY;
        let mut feasible = 0usize;
        let mut rng = stream_rng(cfg.seed, 1u64 << 41);
        for _ in 0..2000 {
            let mut w = DVector::zeros(cfg.q);
            for i in 0..cfg.q {
                w[i] = rng.sample::<f64, _>(rand_distr::StandardNormal);
            }
            let n = w.norm();
            if n == 0.0 {
                continue;
            }
            w /= n;
            let data: f64 = (0..cfg.q)
                .map(|i| (sub.singular_values[i] * w[i]).powi(2))
                .sum::<f64>()
                .sqrt();
            if data * cfg.a2 < a1 {
                continue;
            }
            feasible += 1;
            best = best.min((&resid * &w).norm());
        }
        if feasible == 0 {
            return Err(Error::invalid(format!(
                "admissible cone at m = {m} is empty: sigma_q = {} with A1 = {a1}, A2 = {}",
                sub.sigma_q(),
                cfg.a2
            )));
        }
        best
    };
    Ok(LocalConstant {
        value,
        sigma_q: sub.sigma_q(),
        rel_gap: sub.rel_gap(),
        cone_full,
    })
}
