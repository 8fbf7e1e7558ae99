//! `gen`: draw random fault parameters, synthesize their normalized
//! surface measurements, and write the dataset CSV plus its metadata
//! sidecar.

use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use faultstab::dataset::{self, DatasetContext};
use faultstab::geometry::{sine_basis, ParamBox, SourceRegion, SOURCE_HALF_WIDTH};
use faultstab::kernel::KernelConfig;
use serde::{Deserialize, Serialize};

use crate::config::{self, FileConfig};
use crate::{numerical, usage, CliError};

/// Effective `gen` parameters, echoed verbatim as the `[gen]` section.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenParams {
    /// Number of samples to generate.
    pub count: usize,
    /// Singular functions mixed into each sample.
    pub q: usize,
    /// Master seed; sample `i` uses stream `first_index + i`.
    pub seed: u64,
    /// Stream offset, for splitting one logical dataset across runs.
    pub first_index: u64,
    /// Observation grid points per axis.
    pub grid_n: usize,
    /// Basis frequencies per axis.
    pub k_max: usize,
    /// Source quadrature cells per axis.
    pub cells: usize,
    /// Gauss order inside each source cell.
    pub quad_order: usize,
    /// Optional sup-norm noise fraction added to each sample.
    pub noise: Option<f64>,
    /// Seed for the noise draws; defaults to `seed`.
    pub noise_seed: Option<u64>,
    /// Parameter box the fault triples are drawn from.
    pub a_min: f64,
    pub a_max: f64,
    pub b_min: f64,
    pub b_max: f64,
    pub d_min: f64,
    pub d_max: f64,
    /// Output file name inside the output directory; a `.gz` suffix
    /// enables gzip compression.
    pub out: String,
}

impl Default for GenParams {
    fn default() -> Self {
        let bx = ParamBox::default();
        GenParams {
            count: 1000,
            q: 5,
            seed: 7,
            first_index: 0,
            grid_n: 11,
            k_max: 8,
            cells: 8,
            quad_order: 4,
            noise: None,
            noise_seed: None,
            a_min: bx.a.0,
            a_max: bx.a.1,
            b_min: bx.b.0,
            b_max: bx.b.1,
            d_min: bx.d.0,
            d_max: bx.d.1,
            out: "train.csv".to_string(),
        }
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Number of samples to generate
    #[arg(long)]
    count: Option<usize>,
    /// Singular functions mixed into each sample
    #[arg(long)]
    q: Option<usize>,
    /// Master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Stream offset for splitting a dataset across runs
    #[arg(long)]
    first_index: Option<u64>,
    /// Observation grid points per axis
    #[arg(long)]
    grid_n: Option<usize>,
    /// Basis frequencies per axis
    #[arg(long)]
    k_max: Option<usize>,
    /// Source quadrature cells per axis
    #[arg(long)]
    cells: Option<usize>,
    /// Gauss order inside each source cell
    #[arg(long)]
    quad_order: Option<usize>,
    /// Sup-norm noise fraction added to each sample
    #[arg(long, allow_negative_numbers = true)]
    noise: Option<f64>,
    /// Seed for the noise draws (defaults to --seed)
    #[arg(long)]
    noise_seed: Option<u64>,
    /// Lower bound for the slope a
    #[arg(long, allow_negative_numbers = true)]
    a_min: Option<f64>,
    /// Upper bound for the slope a
    #[arg(long, allow_negative_numbers = true)]
    a_max: Option<f64>,
    /// Lower bound for the slope b
    #[arg(long, allow_negative_numbers = true)]
    b_min: Option<f64>,
    /// Upper bound for the slope b
    #[arg(long, allow_negative_numbers = true)]
    b_max: Option<f64>,
    /// Lower bound for the depth d
    #[arg(long, allow_negative_numbers = true)]
    d_min: Option<f64>,
    /// Upper bound for the depth d
    #[arg(long, allow_negative_numbers = true)]
    d_max: Option<f64>,
    /// Output file name inside the output directory
    #[arg(long)]
    out: Option<String>,
}

fn merge(args: GenArgs, file: Option<GenParams>) -> GenParams {
    let mut p = file.unwrap_or_default();
    macro_rules! take {
        ($($field:ident),*) => {
            $(if let Some(v) = args.$field { p.$field = v; })*
        };
    }
    take!(count, q, seed, first_index, grid_n, k_max, cells, quad_order);
    take!(a_min, a_max, b_min, b_max, d_min, d_max, out);
    if args.noise.is_some() {
        p.noise = args.noise;
    }
    if args.noise_seed.is_some() {
        p.noise_seed = args.noise_seed;
    }
    p
}

pub fn run(args: GenArgs, file: &FileConfig, out_dir: Option<PathBuf>) -> Result<(), CliError> {
    let p = merge(args, file.gen.clone());
    let out_dir = config::resolve_out_dir(out_dir, file.out_dir.clone())?;
    config::echo_config("gen", &out_dir, &p)?;

    if p.count == 0 {
        return Err(CliError::Usage("count must be at least 1".into()));
    }
    if p.q == 0 || p.q >= p.k_max * p.k_max {
        return Err(CliError::Usage(format!(
            "q must lie in 1..{} for k_max = {}, got {}",
            p.k_max * p.k_max,
            p.k_max,
            p.q
        )));
    }
    if let Some(level) = p.noise {
        if !(level.is_finite() && level > 0.0) {
            return Err(CliError::Usage(format!(
                "noise must be positive and finite, got {level}"
            )));
        }
    }
    let param_box = ParamBox::new((p.a_min, p.a_max), (p.b_min, p.b_max), (p.d_min, p.d_max))
        .map_err(usage)?;
    let basis = sine_basis(p.k_max, SOURCE_HALF_WIDTH).map_err(usage)?;
    let region = SourceRegion {
        half_width: SOURCE_HALF_WIDTH,
        cells: p.cells,
    };
    let ctx = DatasetContext::new(
        basis,
        region,
        KernelConfig::default(),
        p.quad_order,
        p.grid_n,
        param_box,
    )
    .map_err(usage)?;

    let started = Instant::now();
    let mut ds =
        dataset::generate_offset(&ctx, p.first_index, p.count, p.q, p.seed).map_err(numerical)?;
    if let Some(level) = p.noise {
        ds = ds
            .with_noise(level, p.noise_seed.unwrap_or(p.seed))
            .map_err(numerical)?;
    }
    let path = out_dir.join(&p.out);
    dataset::save(&ds, &path).map_err(usage)?;

    println!(
        "# wrote {} samples (q = {}, seed = {}) -> {}",
        ds.len(),
        p.q,
        p.seed,
        path.display()
    );
    println!("# metadata -> {}", dataset::sidecar_path(&path).display());
    println!("# elapsed: {:.3} s", started.elapsed().as_secs_f64());
    Ok(())
}
