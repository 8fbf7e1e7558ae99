//! `eval`: compare the trained MLP against nearest-neighbor lookup over
//! the full sample bank and over a small random subsample, on a held-out
//! test set. Emits per-method prediction CSVs, a comparison table, and
//! per-parameter error histograms.
//!
//! Timings go to stdout and to the plain-text table only; CSV outputs
//! carry no timings so that identical runs are byte-identical.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use faultstab::dataset::{self, Dataset};
use faultstab::regressor::{evaluate_mlp, evaluate_nn, load_model, Evaluation, SampleBank};
use serde::{Deserialize, Serialize};

use crate::config::{self, fmt_f64, FileConfig};
use crate::svg;
use crate::{numerical, usage, CliError};

const PARAM_NAMES: [&str; 3] = ["a", "b", "d"];

/// Effective `eval` parameters, echoed as the `[eval]` section.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalParams {
    /// Trained model file. Required.
    pub model: Option<PathBuf>,
    /// Training dataset CSV used as the nearest-neighbor bank. Required.
    pub train_data: Option<PathBuf>,
    /// Held-out test dataset CSV. Required.
    pub test_data: Option<PathBuf>,
    /// Size of the random nearest-neighbor subsample bank.
    pub subsample: usize,
    /// Seed for drawing the subsample.
    pub subsample_seed: u64,
    /// Histogram bins for the error SVGs.
    pub bins: usize,
}

impl Default for EvalParams {
    fn default() -> Self {
        EvalParams {
            model: None,
            train_data: None,
            test_data: None,
            subsample: 2000,
            subsample_seed: 1,
            bins: 30,
        }
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Trained model file
    #[arg(long)]
    model: Option<PathBuf>,
    /// Training dataset CSV used as the nearest-neighbor bank
    #[arg(long)]
    train_data: Option<PathBuf>,
    /// Held-out test dataset CSV
    #[arg(long)]
    test_data: Option<PathBuf>,
    /// Size of the random nearest-neighbor subsample bank
    #[arg(long)]
    subsample: Option<usize>,
    /// Seed for drawing the subsample
    #[arg(long)]
    subsample_seed: Option<u64>,
    /// Histogram bins for the error SVGs
    #[arg(long)]
    bins: Option<usize>,
}

fn merge(args: EvalArgs, file: Option<EvalParams>) -> EvalParams {
    let mut p = file.unwrap_or_default();
    if args.model.is_some() {
        p.model = args.model;
    }
    if args.train_data.is_some() {
        p.train_data = args.train_data;
    }
    if args.test_data.is_some() {
        p.test_data = args.test_data;
    }
    if let Some(v) = args.subsample {
        p.subsample = v;
    }
    if let Some(v) = args.subsample_seed {
        p.subsample_seed = v;
    }
    if let Some(v) = args.bins {
        p.bins = v;
    }
    p
}

fn require(path: &Option<PathBuf>, flag: &str, key: &str) -> Result<PathBuf, CliError> {
    path.clone().ok_or_else(|| {
        CliError::Usage(format!(
            "missing required flag --{flag} (or eval.{key} in a --config file)\n\
             usage: faultstab eval --model <PATH> --train-data <PATH> --test-data <PATH> [options]"
        ))
    })
}

fn write_eval_csv(path: &Path, ev: &Evaluation) -> Result<(), CliError> {
    let mut out = config::create_file(path)?;
    ev.write_csv(&mut out)
        .and_then(|_| out.flush())
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

fn mean_mae(ev: &Evaluation) -> f64 {
    (ev.mae[0] + ev.mae[1] + ev.mae[2]) / 3.0
}

pub fn run(args: EvalArgs, file: &FileConfig, out_dir: Option<PathBuf>) -> Result<(), CliError> {
    let p = merge(args, file.eval.clone());
    let model_path = require(&p.model, "model", "model")?;
    let train_path = require(&p.train_data, "train-data", "train_data")?;
    let test_path = require(&p.test_data, "test-data", "test_data")?;
    let out_dir = config::resolve_out_dir(out_dir, file.out_dir.clone())?;
    config::echo_config("eval", &out_dir, &p)?;

    if p.bins == 0 {
        return Err(CliError::Usage("bins must be at least 1".into()));
    }

    let started = Instant::now();
    let model = load_model(&model_path).map_err(usage)?;
    let model_load_seconds = started.elapsed().as_secs_f64();

    let started = Instant::now();
    let train_set: Dataset = dataset::load(&train_path).map_err(usage)?;
    let bank = SampleBank::from_dataset(&train_set, "s").map_err(usage)?;
    let bank_load_seconds = started.elapsed().as_secs_f64();
    let sub_bank = bank.subsample(p.subsample, p.subsample_seed).map_err(usage)?;

    let test_set = dataset::load(&test_path).map_err(usage)?;
    println!(
        "# bank: {} rows, subsample: {} rows, test: {} rows",
        bank.len(),
        sub_bank.len(),
        test_set.len()
    );

    let ev_mlp = evaluate_mlp(&model, &test_set).map_err(numerical)?;
    let ev_nn = evaluate_nn(&bank, &test_set).map_err(numerical)?;
    let ev_sub = evaluate_nn(&sub_bank, &test_set).map_err(numerical)?;

    write_eval_csv(&out_dir.join("eval_mlp.csv"), &ev_mlp)?;
    write_eval_csv(&out_dir.join("eval_nn_full.csv"), &ev_nn)?;
    write_eval_csv(&out_dir.join("eval_nn_sub.csv"), &ev_sub)?;

    let rows = [
        (&ev_mlp, model_load_seconds),
        (&ev_nn, bank_load_seconds),
        (&ev_sub, bank_load_seconds),
    ];

    let comparison_path = out_dir.join("comparison.csv");
    let mut comparison = config::create_file(&comparison_path)?;
    (|| -> std::io::Result<()> {
        writeln!(comparison, "method,err_a,err_b,err_d,err_mean")?;
        for (ev, _) in &rows {
            writeln!(
                comparison,
                "{},{},{},{},{}",
                ev.label,
                fmt_f64(ev.mae[0]),
                fmt_f64(ev.mae[1]),
                fmt_f64(ev.mae[2]),
                fmt_f64(mean_mae(ev))
            )?;
        }
        comparison.flush()
    })()
    .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", comparison_path.display())))?;

    let mut table = String::new();
    table.push_str(&format!(
        "{:<12} {:>10} {:>10} {:>10}\n",
        "method", "err_mean", "load_s", "run_s"
    ));
    for (ev, load_s) in &rows {
        table.push_str(&format!(
            "{:<12} {:>10.6} {:>10.3} {:>10.6}\n",
            ev.label,
            mean_mae(ev),
            load_s,
            ev.batch_seconds
        ));
    }
    config::write_text(&out_dir.join("comparison.txt"), &table)?;
    for line in table.lines() {
        println!("# {line}");
    }

    for (i, name) in PARAM_NAMES.iter().enumerate() {
        let errors: Vec<f64> = ev_mlp
            .rows
            .iter()
            .map(|r| r.predicted[i] - r.target[i])
            .collect();
        let svg_text = svg::histogram_from_values(
            &format!("mlp signed error: {name}"),
            "predicted - true (normalized scale)",
            &errors,
            p.bins,
        )
        .map_err(CliError::Numerical)?;
        config::write_text(&out_dir.join(format!("hist_{name}.svg")), &svg_text)?;
    }

    println!("# tables -> {}, comparison.txt", comparison_path.display());
    println!("# histograms -> hist_a.svg, hist_b.svg, hist_d.svg in {}", out_dir.display());
    Ok(())
}
