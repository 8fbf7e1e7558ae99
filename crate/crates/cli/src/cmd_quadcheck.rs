//! `quadcheck`: measure how fast the observation-grid trapezoid sums
//! converge on analytically integrable functions and on a forward-data
//! probe with a dense Gauss oracle, and fit the log-log decay slope.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use faultstab::geometry::{sine_basis, FaultParams, SourceRegion, SOURCE_HALF_WIDTH};
use faultstab::kernel::KernelConfig;
use faultstab::stability::quadcheck::{
    closed_form_cosine, constant, forward_data_probe, quadrature_order_check, OracleRule,
    SlopeEstimate,
};
use serde::{Deserialize, Serialize};

use crate::config::{self, fmt_f64, FileConfig};
use crate::{numerical, usage, CliError};

/// Basis frequencies per axis for the probe density.
const PROBE_K_MAX: usize = 3;
/// Source quadrature for the probe data.
const PROBE_CELLS: usize = 8;
const PROBE_ORDER: usize = 4;

/// Effective `quadcheck` parameters, echoed as the `[quadcheck]` section.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadcheckParams {
    /// Grid sizes per axis, strictly increasing.
    pub n_list: Vec<usize>,
    /// Fault parameters (a, b, d) of the forward-data probe.
    pub probe_m: Vec<f64>,
}

impl Default for QuadcheckParams {
    fn default() -> Self {
        QuadcheckParams {
            n_list: vec![6, 11, 21, 41],
            probe_m: vec![0.3, -0.2, -25.0],
        }
    }
}

#[derive(Debug, Args)]
pub struct QuadcheckArgs {
    /// Grid sizes per axis, comma separated and strictly increasing
    #[arg(long, value_delimiter = ',')]
    n_list: Option<Vec<usize>>,
    /// Fault parameters a,b,d of the forward-data probe
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    probe_m: Option<Vec<f64>>,
}

fn merge(args: QuadcheckArgs, file: Option<QuadcheckParams>) -> QuadcheckParams {
    let mut p = file.unwrap_or_default();
    if let Some(v) = args.n_list {
        p.n_list = v;
    }
    if let Some(v) = args.probe_m {
        p.probe_m = v;
    }
    p
}

pub fn run(
    args: QuadcheckArgs,
    file: &FileConfig,
    out_dir: Option<PathBuf>,
) -> Result<(), CliError> {
    let p = merge(args, file.quadcheck.clone());
    let out_dir = config::resolve_out_dir(out_dir, file.out_dir.clone())?;
    config::echo_config("quadcheck", &out_dir, &p)?;

    if p.probe_m.len() != 3 {
        return Err(CliError::Usage(format!(
            "probe_m must list exactly a,b,d, got {} values",
            p.probe_m.len()
        )));
    }
    let m = FaultParams::new(p.probe_m[0], p.probe_m[1], p.probe_m[2]).map_err(usage)?;
    let basis = sine_basis(PROBE_K_MAX, SOURCE_HALF_WIDTH).map_err(usage)?;
    let region = SourceRegion {
        half_width: SOURCE_HALF_WIDTH,
        cells: PROBE_CELLS,
    };
    // Fixed decaying coefficient density: deterministic and mixing all
    // probe frequencies.
    let coeffs: Vec<f64> = (0..PROBE_K_MAX * PROBE_K_MAX)
        .map(|i| 1.0 / (1.0 + i as f64))
        .collect();

    let started = Instant::now();
    let probe = forward_data_probe(
        &m,
        &coeffs,
        &basis,
        &region,
        &KernelConfig::default(),
        PROBE_ORDER,
        OracleRule::default(),
    )
    .map_err(numerical)?;
    let funcs = [constant(3.0), closed_form_cosine(), probe];
    let checks = quadrature_order_check(&funcs, &p.n_list).map_err(usage)?;
    let elapsed = started.elapsed().as_secs_f64();

    let errors_path = out_dir.join("quadcheck_errors.csv");
    let mut errors_out = config::create_file(&errors_path)?;
    (|| -> std::io::Result<()> {
        writeln!(errors_out, "function,n,measurements,abs_error")?;
        for check in &checks {
            for (n, e) in &check.errors {
                writeln!(errors_out, "{},{n},{},{}", check.name, n * n, fmt_f64(*e))?;
            }
        }
        errors_out.flush()
    })()
    .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", errors_path.display())))?;

    let slopes_path = out_dir.join("quadcheck_slopes.csv");
    let mut slopes_out = config::create_file(&slopes_path)?;
    (|| -> std::io::Result<()> {
        writeln!(slopes_out, "function,exactly_integrated,slope")?;
        for check in &checks {
            match check.slope {
                SlopeEstimate::ExactlyIntegrated => {
                    writeln!(slopes_out, "{},true,", check.name)?;
                }
                SlopeEstimate::Fitted(s) => {
                    writeln!(slopes_out, "{},false,{}", check.name, fmt_f64(s))?;
                }
            }
        }
        slopes_out.flush()
    })()
    .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", slopes_path.display())))?;

    for check in &checks {
        match check.slope {
            SlopeEstimate::ExactlyIntegrated => {
                println!("# {}: integrated to round-off on every grid", check.name);
            }
            SlopeEstimate::Fitted(s) => {
                println!(
                    "# {}: error ~ measurements^slope with slope = {}",
                    check.name,
                    fmt_f64(s)
                );
            }
        }
    }
    println!(
        "# errors -> {}, slopes -> {}",
        errors_path.display(),
        slopes_path.display()
    );
    println!("# elapsed: {elapsed:.3} s");
    Ok(())
}
