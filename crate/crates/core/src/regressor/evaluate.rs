//! Held-out evaluation of the regressors.
//!
//! Errors are reported per parameter as mean absolute error on the
//! `[0, 1]` scale, alongside the wall-clock time of the whole
//! prediction batch. Timings are kept out of the CSV rows so the files
//! are byte-identical across re-runs.

use super::mlp::MlpModel;
use super::nn::SampleBank;
use crate::dataset::Dataset;
use crate::{Error, Result};
use std::io::Write;
use std::time::Instant;

/// One evaluated test case.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    /// True rescaled parameters.
    pub target: [f64; 3],
    /// Predicted rescaled parameters.
    pub predicted: [f64; 3],
}

impl EvalRow {
    /// Componentwise absolute errors.
    pub fn abs_err(&self) -> [f64; 3] {
        [
            (self.predicted[0] - self.target[0]).abs(),
            (self.predicted[1] - self.target[1]).abs(),
            (self.predicted[2] - self.target[2]).abs(),
        ]
    }
}

/// Evaluation outcome for one method on one test set.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// Method label.
    pub label: String,
    /// Mean absolute error per parameter, on the `[0, 1]` scale.
    pub mae: [f64; 3],
    /// Wall-clock seconds for the whole prediction batch.
    pub batch_seconds: f64,
    /// Per-case rows.
    pub rows: Vec<EvalRow>,
}

impl Evaluation {
    /// Worst of the three per-parameter errors.
    pub fn max_mae(&self) -> f64 {
        self.mae.iter().cloned().fold(0.0, f64::max)
    }

    /// Per-case CSV (no timings; byte-identical across re-runs).
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(
            out,
            "a_true,b_true,d_true,a_pred,b_pred,d_pred,abs_err_a,abs_err_b,abs_err_d"
        )?;
        for r in &self.rows {
            let e = r.abs_err();
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.target[0],
                r.target[1],
                r.target[2],
                r.predicted[0],
                r.predicted[1],
                r.predicted[2],
                e[0],
                e[1],
                e[2]
            )?;
        }
        Ok(())
    }
}

fn evaluate_with(
    label: String,
    test: &Dataset,
    predict: impl FnOnce(&[Vec<f64>]) -> Result<Vec<[f64; 3]>>,
) -> Result<Evaluation> {
    if test.is_empty() {
        return Err(Error::invalid("test set is empty"));
    }
    let queries: Vec<Vec<f64>> = test.samples.iter().map(|s| s.features.clone()).collect();
    let start = Instant::now();
    let predictions = predict(&queries)?;
    let batch_seconds = start.elapsed().as_secs_f64();
    let rows: Vec<EvalRow> = test
        .samples
        .iter()
        .zip(predictions)
        .map(|(s, predicted)| EvalRow {
            target: s.target,
            predicted,
        })
        .collect();
    let n = rows.len() as f64;
    let mut mae = [0.0; 3];
    for r in &rows {
        let e = r.abs_err();
        for i in 0..3 {
            mae[i] += e[i] / n;
        }
    }
    Ok(Evaluation {
        label,
        mae,
        batch_seconds,
        rows,
    })
}

/// Evaluate an MLP on a test set (timed as one prediction batch).
pub fn evaluate_mlp(model: &MlpModel, test: &Dataset) -> Result<Evaluation> {
    evaluate_with("mlp".into(), test, |q| model.predict_batch(q))
}

/// Evaluate a nearest-neighbor bank on a test set.
pub fn evaluate_nn(bank: &SampleBank, test: &Dataset) -> Result<Evaluation> {
    evaluate_with(format!("nn_{}", bank.label), test, |q| {
        q.iter().map(|f| bank.nn_search(f)).collect()
    })
}
