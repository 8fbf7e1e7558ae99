//! `train`: fit the MLP regressor to a dataset with scaled conjugate
//! gradients and persist the model plus its objective trace.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use faultstab::dataset;
use faultstab::regressor::{save_model, train_mlp};
use serde::{Deserialize, Serialize};

use crate::config::{self, FileConfig};
use crate::{numerical, usage, CliError};

/// Effective `train` parameters, echoed as the `[train]` section.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainParams {
    /// Training dataset CSV (with its metadata sidecar). Required.
    pub data: Option<PathBuf>,
    /// Hidden layer widths.
    pub hidden: Vec<usize>,
    /// Weight-penalty fraction of the objective, in [0, 1].
    pub gamma: f64,
    /// Maximum optimizer iterations.
    pub iters: usize,
    /// Weight initialization seed.
    pub seed: u64,
    /// Model output file name inside the output directory.
    pub model_out: String,
    /// Objective trace CSV name inside the output directory.
    pub trace_out: String,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            data: None,
            hidden: vec![64, 32, 16],
            gamma: 0.2,
            iters: 2000,
            seed: 1,
            model_out: "mlp.model".to_string(),
            trace_out: "loss_trace.csv".to_string(),
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training dataset CSV (with its metadata sidecar)
    #[arg(long)]
    data: Option<PathBuf>,
    /// Hidden layer widths, comma separated (e.g. 64,32,16)
    #[arg(long, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
    /// Weight-penalty fraction of the objective, in [0, 1]
    #[arg(long, allow_negative_numbers = true)]
    gamma: Option<f64>,
    /// Maximum optimizer iterations
    #[arg(long)]
    iters: Option<usize>,
    /// Weight initialization seed
    #[arg(long)]
    seed: Option<u64>,
    /// Model output file name inside the output directory
    #[arg(long)]
    model_out: Option<String>,
    /// Objective trace CSV name inside the output directory
    #[arg(long)]
    trace_out: Option<String>,
}

fn merge(args: TrainArgs, file: Option<TrainParams>) -> TrainParams {
    let mut p = file.unwrap_or_default();
    if args.data.is_some() {
        p.data = args.data;
    }
    if let Some(v) = args.hidden {
        p.hidden = v;
    }
    if let Some(v) = args.gamma {
        p.gamma = v;
    }
    if let Some(v) = args.iters {
        p.iters = v;
    }
    if let Some(v) = args.seed {
        p.seed = v;
    }
    if let Some(v) = args.model_out {
        p.model_out = v;
    }
    if let Some(v) = args.trace_out {
        p.trace_out = v;
    }
    p
}

pub fn run(args: TrainArgs, file: &FileConfig, out_dir: Option<PathBuf>) -> Result<(), CliError> {
    let p = merge(args, file.train.clone());
    let Some(data_path) = p.data.clone() else {
        return Err(CliError::Usage(
            "missing required flag --data (or train.data in a --config file)\n\
             usage: faultstab train --data <PATH> [options]"
                .into(),
        ));
    };
    let out_dir = config::resolve_out_dir(out_dir, file.out_dir.clone())?;
    config::echo_config("train", &out_dir, &p)?;

    if !(0.0..=1.0).contains(&p.gamma) || !p.gamma.is_finite() {
        return Err(CliError::Usage(format!(
            "gamma must lie in [0, 1], got {}",
            p.gamma
        )));
    }
    if p.hidden.is_empty() || p.hidden.contains(&0) {
        return Err(CliError::Usage(
            "hidden must list at least one positive layer width".into(),
        ));
    }
    if p.iters == 0 {
        return Err(CliError::Usage("iters must be at least 1".into()));
    }

    let train_set = dataset::load(&data_path).map_err(usage)?;
    println!(
        "# loaded {} samples with {} features from {}",
        train_set.len(),
        train_set.feature_count(),
        data_path.display()
    );

    let started = Instant::now();
    let model =
        train_mlp(&train_set, &p.hidden, p.gamma, p.iters, p.seed).map_err(numerical)?;
    let train_seconds = started.elapsed().as_secs_f64();

    let model_path = out_dir.join(&p.model_out);
    save_model(&model, &model_path).map_err(usage)?;
    let trace_path = out_dir.join(&p.trace_out);
    let mut trace = std::io::BufWriter::new(
        std::fs::File::create(&trace_path)
            .map_err(|e| CliError::Usage(format!("cannot create {}: {e}", trace_path.display())))?,
    );
    (|| -> std::io::Result<()> {
        writeln!(trace, "iteration,objective")?;
        for (i, loss) in model.loss_trace.iter().enumerate() {
            writeln!(trace, "{i},{}", config::fmt_f64(*loss))?;
        }
        trace.flush()
    })()
    .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", trace_path.display())))?;

    println!(
        "# trained dims {:?} ({} parameters) in {} iterations",
        model.dims,
        model.parameter_count(),
        model.iterations
    );
    println!("# final objective: {}", config::fmt_f64(model.final_loss));
    println!("# model -> {}", model_path.display());
    println!("# trace -> {}", trace_path.display());
    println!("# elapsed: {train_seconds:.3} s");
    Ok(())
}
