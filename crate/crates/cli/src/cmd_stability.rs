//! `stability`: estimate the empirical stability constant of the
//! parameter-to-data map over random pairs, writing the key-value
//! report, the per-trial CSV, and a histogram of the dense-grid ratios.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use faultstab::geometry::{sine_basis, ParamBox, SourceRegion, SOURCE_HALF_WIDTH};
use faultstab::kernel::KernelConfig;
use faultstab::stability::{empirical_lipschitz, StabilityConfig, StabilityContext};
use serde::{Deserialize, Serialize};

use crate::config::{self, fmt_f64, FileConfig};
use crate::svg;
use crate::{numerical, usage, CliError};

/// Effective `stability` parameters, echoed as the `[stability]` section.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilityParams {
    /// Number of random pairs.
    pub trials: usize,
    /// Master seed; trial `i` uses stream `i`.
    pub seed: u64,
    /// Subspace rank the slips are drawn from.
    pub q: usize,
    /// Data-norm floor, as an absolute value; calibrated from a pilot
    /// run when omitted.
    pub a1: Option<f64>,
    /// Slip-norm cap.
    pub a2: f64,
    /// Minimum parameter separation of a scored pair.
    pub pair_separation_min: f64,
    /// Dense observation grid points per axis.
    pub dense_n: usize,
    /// Coarse observation grid points per axis (must embed in dense).
    pub coarse_n: usize,
    /// Basis frequencies per axis.
    pub k_max: usize,
    /// Source quadrature cells per axis.
    pub cells: usize,
    /// Gauss order inside each source cell.
    pub quad_order: usize,
    /// Output file prefix.
    pub prefix: String,
}

impl Default for StabilityParams {
    fn default() -> Self {
        let cfg = StabilityConfig::default();
        StabilityParams {
            trials: cfg.trials,
            seed: cfg.seed,
            q: cfg.q,
            a1: None,
            a2: cfg.a2,
            pair_separation_min: cfg.pair_separation_min,
            dense_n: 65,
            coarse_n: 33,
            k_max: 8,
            cells: 8,
            quad_order: 4,
            prefix: "stability".to_string(),
        }
    }
}

#[derive(Debug, Args)]
pub struct StabilityArgs {
    /// Number of random pairs
    #[arg(long)]
    trials: Option<usize>,
    /// Master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Subspace rank the slips are drawn from
    #[arg(long)]
    q: Option<usize>,
    /// Data-norm floor (pilot-calibrated when omitted)
    #[arg(long, allow_negative_numbers = true)]
    a1: Option<f64>,
    /// Slip-norm cap
    #[arg(long, allow_negative_numbers = true)]
    a2: Option<f64>,
    /// Minimum parameter separation of a scored pair
    #[arg(long, allow_negative_numbers = true)]
    pair_separation_min: Option<f64>,
    /// Dense observation grid points per axis
    #[arg(long)]
    dense_n: Option<usize>,
    /// Coarse observation grid points per axis
    #[arg(long)]
    coarse_n: Option<usize>,
    /// Basis frequencies per axis
    #[arg(long)]
    k_max: Option<usize>,
    /// Source quadrature cells per axis
    #[arg(long)]
    cells: Option<usize>,
    /// Gauss order inside each source cell
    #[arg(long)]
    quad_order: Option<usize>,
    /// Output file prefix
    #[arg(long)]
    prefix: Option<String>,
}

fn merge(args: StabilityArgs, file: Option<StabilityParams>) -> StabilityParams {
    let mut p = file.unwrap_or_default();
    macro_rules! take {
        ($($field:ident),*) => {
            $(if let Some(v) = args.$field { p.$field = v; })*
        };
    }
    take!(trials, seed, q, a2, pair_separation_min, dense_n, coarse_n);
    take!(k_max, cells, quad_order, prefix);
    if args.a1.is_some() {
        p.a1 = args.a1;
    }
    p
}

pub fn run(
    args: StabilityArgs,
    file: &FileConfig,
    out_dir: Option<PathBuf>,
) -> Result<(), CliError> {
    let p = merge(args, file.stability.clone());
    let out_dir = config::resolve_out_dir(out_dir, file.out_dir.clone())?;
    config::echo_config("stability", &out_dir, &p)?;

    let cfg = StabilityConfig {
        a1: p.a1,
        a2: p.a2,
        q: p.q,
        trials: p.trials,
        seed: p.seed,
        pair_separation_min: p.pair_separation_min,
    };
    cfg.validate().map_err(usage)?;
    let basis = sine_basis(p.k_max, SOURCE_HALF_WIDTH).map_err(usage)?;
    let region = SourceRegion {
        half_width: SOURCE_HALF_WIDTH,
        cells: p.cells,
    };
    let ctx = StabilityContext::new(
        basis,
        region,
        KernelConfig::default(),
        p.quad_order,
        p.dense_n,
        Some(p.coarse_n),
        ParamBox::default(),
    )
    .map_err(usage)?;
    if p.q >= p.k_max * p.k_max {
        return Err(CliError::Usage(format!(
            "q must lie in 1..{} for k_max = {}, got {}",
            p.k_max * p.k_max,
            p.k_max,
            p.q
        )));
    }

    let started = Instant::now();
    let report = empirical_lipschitz(&ctx, &cfg).map_err(numerical)?;
    let elapsed = started.elapsed().as_secs_f64();

    let report_path = out_dir.join(format!("{}_report.txt", p.prefix));
    config::write_text(&report_path, &report.kv_string())?;

    let trials_path = out_dir.join(format!("{}_trials.csv", p.prefix));
    let mut trials_out = config::create_file(&trials_path)?;
    report
        .write_trials_csv(&mut trials_out)
        .and_then(|_| trials_out.flush())
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", trials_path.display())))?;

    let hist_path = out_dir.join(format!("{}_ratios.svg", p.prefix));
    let hist = svg::histogram_from_counts(
        &format!("dense-grid stability ratios (q = {})", report.q),
        "|A_m u - A_m' v| / |m - m'|",
        report.histogram.lo,
        report.histogram.hi,
        &report.histogram.counts,
    );
    config::write_text(&hist_path, &hist)?;

    println!("# c_hat = {}", fmt_f64(report.c_hat));
    if let Some(c) = report.c_hat_coarse {
        println!("# c_hat_coarse = {}", fmt_f64(c));
    }
    if let Some(r) = report.min_coarse_over_dense {
        println!("# min coarse/dense ratio = {}", fmt_f64(r));
    }
    println!(
        "# trials: {} scored, {} skipped; a1_effective = {}",
        report.completed,
        report.skipped,
        fmt_f64(report.a1_effective)
    );
    println!(
        "# argmin: trial {} at m = ({}, {}, {})",
        report.argmin.trial,
        fmt_f64(report.argmin.m.a),
        fmt_f64(report.argmin.m.b),
        fmt_f64(report.argmin.m.d)
    );
    println!(
        "# report -> {}, trials -> {}, histogram -> {}",
        report_path.display(),
        trials_path.display(),
        hist_path.display()
    );
    println!("# elapsed: {elapsed:.3} s");
    Ok(())
}
