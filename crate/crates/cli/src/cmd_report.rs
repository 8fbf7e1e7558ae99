//! `report`: re-render histograms and summary tables from CSVs written
//! by `eval` or `stability`, without recomputing any predictions. Useful
//! for re-binning figures or summarizing archived runs.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use crate::config::{self, fmt_f64, FileConfig};
use crate::svg;
use crate::CliError;

const PARAM_NAMES: [&str; 3] = ["a", "b", "d"];
const EVAL_HEADER: &str = "a_true,b_true,d_true,a_pred,b_pred,d_pred,abs_err_a,abs_err_b,abs_err_d";
const TRIALS_HEADER: &str =
    "trial,a,b,d,a_prime,b_prime,d_prime,separation,data_norm,ratio_dense,ratio_coarse,skipped";

/// Effective `report` parameters, echoed as the `[report]` section.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportParams {
    /// Prediction CSVs written by `eval`.
    pub eval: Vec<PathBuf>,
    /// Per-trial CSV written by `stability`.
    pub stability_trials: Option<PathBuf>,
    /// Histogram bins.
    pub bins: usize,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Prediction CSV written by `eval`; repeatable
    #[arg(long = "eval")]
    eval: Vec<PathBuf>,
    /// Per-trial CSV written by `stability`
    #[arg(long)]
    stability_trials: Option<PathBuf>,
    /// Histogram bins
    #[arg(long)]
    bins: Option<usize>,
}

fn merge(args: ReportArgs, file: Option<ReportParams>) -> ReportParams {
    let mut p = file.unwrap_or_default();
    if p.bins == 0 {
        p.bins = 30;
    }
    if !args.eval.is_empty() {
        p.eval = args.eval;
    }
    if args.stability_trials.is_some() {
        p.stability_trials = args.stability_trials;
    }
    if let Some(v) = args.bins {
        p.bins = v;
    }
    p
}

/// File name without any extensions, used to label derived artifacts.
fn label_of(path: &Path) -> String {
    let mut stem = path.to_path_buf();
    while stem.extension().is_some() {
        stem = stem.with_extension("");
    }
    stem.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "input".to_string())
}

fn parse_field(path: &Path, line: usize, field: &str, name: &str) -> Result<f64, CliError> {
    field.parse::<f64>().map_err(|_| {
        CliError::Usage(format!(
            "parse error in {} at line {line}: bad {name} value {field:?}",
            path.display()
        ))
    })
}

/// One prediction row: true and predicted parameter triples.
type PredictionRow = ([f64; 3], [f64; 3]);

/// Rows of an `eval` CSV as `(target, predicted)` triples.
fn read_eval_csv(path: &Path) -> Result<Vec<PredictionRow>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header != EVAL_HEADER {
        return Err(CliError::Usage(format!(
            "{} does not look like an eval CSV: header {header:?}",
            path.display()
        )));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(CliError::Usage(format!(
                "parse error in {} at line {line_no}: expected 9 fields, got {}",
                path.display(),
                fields.len()
            )));
        }
        let mut values = [0.0_f64; 6];
        for (j, v) in values.iter_mut().enumerate() {
            *v = parse_field(path, line_no, fields[j], "numeric")?;
        }
        rows.push((
            [values[0], values[1], values[2]],
            [values[3], values[4], values[5]],
        ));
    }
    if rows.is_empty() {
        return Err(CliError::Usage(format!(
            "{} contains no data rows",
            path.display()
        )));
    }
    Ok(rows)
}

/// Scored dense-grid ratios of a `stability` trials CSV.
fn read_trial_ratios(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header != TRIALS_HEADER {
        return Err(CliError::Usage(format!(
            "{} does not look like a stability trials CSV: header {header:?}",
            path.display()
        )));
    }
    let mut ratios = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 12 {
            return Err(CliError::Usage(format!(
                "parse error in {} at line {line_no}: expected 12 fields, got {}",
                path.display(),
                fields.len()
            )));
        }
        if !fields[11].is_empty() || fields[9].is_empty() {
            continue;
        }
        ratios.push(parse_field(path, line_no, fields[9], "ratio_dense")?);
    }
    if ratios.is_empty() {
        return Err(CliError::Usage(format!(
            "{} contains no scored trials",
            path.display()
        )));
    }
    Ok(ratios)
}

pub fn run(args: ReportArgs, file: &FileConfig, out_dir: Option<PathBuf>) -> Result<(), CliError> {
    let p = merge(args, file.report.clone());
    let out_dir = config::resolve_out_dir(out_dir, file.out_dir.clone())?;
    config::echo_config("report", &out_dir, &p)?;

    if p.eval.is_empty() && p.stability_trials.is_none() {
        return Err(CliError::Usage(
            "nothing to report: pass --eval <CSV> (repeatable) and/or --stability-trials <CSV>\n\
             usage: faultstab report [--eval <CSV>]... [--stability-trials <CSV>] [options]"
                .into(),
        ));
    }
    if p.bins == 0 {
        return Err(CliError::Usage("bins must be at least 1".into()));
    }

    let mut summary_rows = Vec::new();
    for path in &p.eval {
        let rows = read_eval_csv(path)?;
        let label = label_of(path);
        let mut mae = [0.0_f64; 3];
        for (target, predicted) in &rows {
            for i in 0..3 {
                mae[i] += (predicted[i] - target[i]).abs();
            }
        }
        for v in &mut mae {
            *v /= rows.len() as f64;
        }
        for (i, name) in PARAM_NAMES.iter().enumerate() {
            let errors: Vec<f64> = rows.iter().map(|(t, pr)| pr[i] - t[i]).collect();
            let svg_text = svg::histogram_from_values(
                &format!("{label} signed error: {name}"),
                "predicted - true (normalized scale)",
                &errors,
                p.bins,
            )
            .map_err(CliError::Usage)?;
            config::write_text(&out_dir.join(format!("hist_{label}_{name}.svg")), &svg_text)?;
        }
        println!(
            "# {label}: {} rows, mae = ({}, {}, {})",
            rows.len(),
            fmt_f64(mae[0]),
            fmt_f64(mae[1]),
            fmt_f64(mae[2])
        );
        summary_rows.push((label, rows.len(), mae));
    }

    if !summary_rows.is_empty() {
        let summary_path = out_dir.join("report_summary.csv");
        let mut out = config::create_file(&summary_path)?;
        (|| -> std::io::Result<()> {
            writeln!(out, "label,rows,err_a,err_b,err_d,err_mean")?;
            for (label, rows, mae) in &summary_rows {
                writeln!(
                    out,
                    "{label},{rows},{},{},{},{}",
                    fmt_f64(mae[0]),
                    fmt_f64(mae[1]),
                    fmt_f64(mae[2]),
                    fmt_f64((mae[0] + mae[1] + mae[2]) / 3.0)
                )?;
            }
            out.flush()
        })()
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", summary_path.display())))?;
        println!("# summary -> {}", summary_path.display());
    }

    if let Some(path) = &p.stability_trials {
        let ratios = read_trial_ratios(path)?;
        let label = label_of(path);
        let svg_text = svg::histogram_from_values(
            &format!("{label}: dense-grid stability ratios"),
            "|A_m u - A_m' v| / |m - m'|",
            &ratios,
            p.bins,
        )
        .map_err(CliError::Usage)?;
        let hist_path = out_dir.join(format!("{label}_ratios.svg"));
        config::write_text(&hist_path, &svg_text)?;
        println!(
            "# {label}: {} scored ratios, histogram -> {}",
            ratios.len(),
            hist_path.display()
        );
    }
    Ok(())
}
