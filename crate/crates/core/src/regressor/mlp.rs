//! Feed-forward network mapping unit-norm data vectors to rescaled
//! parameter triples.
//!
//! Hidden layers use the hyperbolic tangent, the output layer is
//! linear, and predictions are clamped to `[0, 1]^3` so the unscaled
//! parameters stay inside the physical box. Training minimizes
//!
//! ```text
//! J(w) = gamma * mean(w^2) + (1 - gamma) * MSE
//! ```
//!
//! by scaled conjugate gradient, where the weight-decay mean runs over
//! connection weights only (biases are exempt) and the MSE averages
//! over every output entry.

use super::scg::scg_minimize;
use crate::dataset::Dataset;
use crate::seeding::stream_rng;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector, DVectorView};
use rand::Rng;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

/// Output dimension: the three plane parameters.
const OUT_DIM: usize = 3;

/// Model file magic line.
const MODEL_MAGIC: &str = "mlp-model v1";

/// Trained network together with the settings that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    /// Layer widths, input first, output (3) last.
    pub dims: Vec<usize>,
    /// Connection weights, one `d_l x d_{l-1}` matrix per layer.
    weights: Vec<DMatrix<f64>>,
    /// Biases, one `d_l` vector per layer.
    biases: Vec<DVector<f64>>,
    /// Weight-decay mixing factor used in training.
    pub gamma: f64,
    /// Iterations the optimizer ran.
    pub iterations: usize,
    /// Seed the initial weights were drawn from.
    pub seed: u64,
    /// Final objective value.
    pub final_loss: f64,
    /// Objective value per iteration (entry 0 is the initial value).
    /// Not persisted by [`save_model`].
    pub loss_trace: Vec<f64>,
}

impl MlpModel {
    /// Input dimension.
    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    /// Total number of trainable parameters.
    pub fn parameter_count(&self) -> usize {
        self.dims
            .windows(2)
            .map(|w| w[1] * w[0] + w[1])
            .sum()
    }

    fn forward_one(&self, x: DVectorView<'_, f64>) -> [f64; 3] {
        let mut a = x.clone_owned();
        let last = self.weights.len() - 1;
        for (l, (w, b)) in self.weights.iter().zip(self.biases.iter()).enumerate() {
            a = w * a + b;
            if l < last {
                a.apply(|v| *v = v.tanh());
            }
        }
        [
            a[0].clamp(0.0, 1.0),
            a[1].clamp(0.0, 1.0),
            a[2].clamp(0.0, 1.0),
        ]
    }

    fn prepare(&self, features: &[f64]) -> Result<(DVector<f64>, bool)> {
        if features.len() != self.input_dim() {
            return Err(Error::dims(format!(
                "model takes {} features, got {}",
                self.input_dim(),
                features.len()
            )));
        }
        let x = DVector::from_column_slice(features);
        let norm = x.norm();
        if norm < 1e-14 {
            return Err(Error::invalid("feature vector is numerically zero"));
        }
        if (norm - 1.0).abs() > 1e-9 {
            Ok((x / norm, true))
        } else {
            Ok((x, false))
        }
    }

    /// Predict the rescaled parameters, clamped to `[0, 1]^3`, plus a
    /// flag that is true when the input had to be re-normalized.
    pub fn predict_flagged(&self, features: &[f64]) -> Result<([f64; 3], bool)> {
        let (x, renormalized) = self.prepare(features)?;
        Ok((self.forward_one(x.as_view()), renormalized))
    }

    /// Predict the rescaled parameters, clamped to `[0, 1]^3`.
    pub fn predict(&self, features: &[f64]) -> Result<[f64; 3]> {
        Ok(self.predict_flagged(features)?.0)
    }

    /// Predict a batch; identical to calling [`MlpModel::predict`] per
    /// row.
    pub fn predict_batch(&self, rows: &[Vec<f64>]) -> Result<Vec<[f64; 3]>> {
        rows.iter().map(|r| self.predict(r)).collect()
    }
}

/// Flat parameter vector layout: per layer, the weight matrix row-major
/// followed by the biases.
struct Layout {
    dims: Vec<usize>,
    total: usize,
}

impl Layout {
    fn new(dims: &[usize]) -> Layout {
        let total = dims.windows(2).map(|w| w[1] * w[0] + w[1]).sum();
        Layout {
            dims: dims.to_vec(),
            total,
        }
    }

    fn unpack(&self, flat: &DVector<f64>) -> (Vec<DMatrix<f64>>, Vec<DVector<f64>>) {
        let mut weights = Vec::with_capacity(self.dims.len() - 1);
        let mut biases = Vec::with_capacity(self.dims.len() - 1);
        let mut off = 0;
        for pair in self.dims.windows(2) {
            let (rows, cols) = (pair[1], pair[0]);
            let mut w = DMatrix::zeros(rows, cols);
            for r in 0..rows {
                for c in 0..cols {
                    w[(r, c)] = flat[off + r * cols + c];
                }
            }
            off += rows * cols;
            let b = DVector::from_column_slice(&flat.as_slice()[off..off + rows]);
            off += rows;
            weights.push(w);
            biases.push(b);
        }
        (weights, biases)
    }

    fn pack(&self, weights: &[DMatrix<f64>], biases: &[DVector<f64>]) -> DVector<f64> {
        let mut flat = DVector::zeros(self.total);
        let mut off = 0;
        for (w, b) in weights.iter().zip(biases.iter()) {
            for r in 0..w.nrows() {
                for c in 0..w.ncols() {
                    flat[off + r * w.ncols() + c] = w[(r, c)];
                }
            }
            off += w.nrows() * w.ncols();
            flat.rows_mut(off, b.len()).copy_from(b);
            off += b.len();
        }
        flat
    }

    /// Number of connection weights (bias entries are exempt from the
    /// decay penalty).
    fn weight_count(&self) -> usize {
        self.dims.windows(2).map(|w| w[1] * w[0]).sum()
    }

    /// Sum of squared connection weights and the penalty gradient
    /// contribution folded into `grad`.
    fn penalty(&self, flat: &DVector<f64>, grad: &mut DVector<f64>, scale: f64) -> f64 {
        let mut sum = 0.0;
        let mut off = 0;
        for pair in self.dims.windows(2) {
            let n_w = pair[1] * pair[0];
            for i in off..off + n_w {
                sum += flat[i] * flat[i];
                grad[i] += scale * 2.0 * flat[i];
            }
            off += n_w + pair[1];
        }
        sum
    }
}

/// Batched objective and gradient: forward pass, squared-error loss,
/// backpropagation, weight-decay penalty.
fn objective(
    layout: &Layout,
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    gamma: f64,
    flat: &DVector<f64>,
) -> (f64, DVector<f64>) {
    let (weights, biases) = layout.unpack(flat);
    let n = x.ncols() as f64;
    let last = weights.len() - 1;
    // Forward, keeping activations for the backward sweep.
    let mut activations: Vec<DMatrix<f64>> = Vec::with_capacity(weights.len() + 1);
    activations.push(x.clone());
    for (l, (w, b)) in weights.iter().zip(biases.iter()).enumerate() {
        let mut z = w * activations.last().unwrap();
        for mut col in z.column_iter_mut() {
            col += b;
        }
        if l < last {
            z.apply(|v| *v = v.tanh());
        }
        activations.push(z);
    }
    let diff = activations.last().unwrap() - y;
    let mse = diff.norm_squared() / (OUT_DIM as f64 * n);
    // Backward sweep.
    let mut grad_w: Vec<DMatrix<f64>> = Vec::with_capacity(weights.len());
    let mut grad_b: Vec<DVector<f64>> = Vec::with_capacity(weights.len());
    let mut delta = diff * (2.0 * (1.0 - gamma) / (OUT_DIM as f64 * n));
    for l in (0..weights.len()).rev() {
        grad_w.push(&delta * activations[l].transpose());
        grad_b.push(
            DVector::from_iterator(delta.nrows(), delta.row_iter().map(|r| r.sum())),
        );
        if l > 0 {
            let mut back = weights[l].transpose() * delta;
            back.zip_apply(&activations[l], |g, a| *g *= 1.0 - a * a);
            delta = back;
        }
    }
    grad_w.reverse();
    grad_b.reverse();
    let mut grad = layout.pack(&grad_w, &grad_b);
    let n_w = layout.weight_count() as f64;
    let w_sq = layout.penalty(flat, &mut grad, gamma / n_w);
    let j = gamma * w_sq / n_w + (1.0 - gamma) * mse;
    (j, grad)
}

fn dataset_matrices(ds: &Dataset) -> (DMatrix<f64>, DMatrix<f64>) {
    let m = ds.feature_count();
    let n = ds.len();
    let mut x = DMatrix::zeros(m, n);
    let mut y = DMatrix::zeros(OUT_DIM, n);
    for (j, s) in ds.samples.iter().enumerate() {
        for (i, v) in s.features.iter().enumerate() {
            x[(i, j)] = *v;
        }
        for i in 0..OUT_DIM {
            y[(i, j)] = s.target[i];
        }
    }
    (x, y)
}

/// Train an MLP with the given hidden layer widths on a dataset.
///
/// The full layer stack is `[features, hidden..., 3]`. Initial weights
/// are uniform with fan-scaled limits, drawn from `seed`; biases start
/// at zero. The returned model carries the loss trace; accepted
/// optimizer steps never increase the objective.
pub fn train_mlp(
    train: &Dataset,
    hidden: &[usize],
    gamma: f64,
    max_iters: usize,
    seed: u64,
) -> Result<MlpModel> {
    if train.is_empty() {
        return Err(Error::invalid("training set is empty"));
    }
    if !(0.0..=1.0).contains(&gamma) || !gamma.is_finite() {
        return Err(Error::invalid(format!(
            "gamma must lie in [0, 1], got {gamma}"
        )));
    }
    if hidden.contains(&0) {
        return Err(Error::invalid("hidden layer widths must be >= 1"));
    }
    let mut dims = Vec::with_capacity(hidden.len() + 2);
    dims.push(train.feature_count());
    dims.extend_from_slice(hidden);
    dims.push(OUT_DIM);
    let layout = Layout::new(&dims);
    // Fan-scaled uniform initialization, biases zero.
    let mut rng = stream_rng(seed, 0);
    let mut w0 = DVector::zeros(layout.total);
    let mut off = 0;
    for pair in dims.windows(2) {
        let (fan_out, fan_in) = (pair[1], pair[0]);
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        for i in 0..fan_out * fan_in {
            w0[off + i] = rng.gen_range(-limit..limit);
        }
        off += fan_out * fan_in + fan_out;
    }
    let (x, y) = dataset_matrices(train);
    let (flat, trace) = scg_minimize(
        |w| objective(&layout, &x, &y, gamma, w),
        w0,
        max_iters,
    )?;
    let (weights, biases) = layout.unpack(&flat);
    let final_loss = *trace.last().expect("trace is never empty");
    Ok(MlpModel {
        dims,
        weights,
        biases,
        gamma,
        iterations: trace.len() - 1,
        seed,
        final_loss,
        loss_trace: trace,
    })
}

/// Largest observed ratio `|predict(f1) - predict(f2)| / |f1 - f2|`
/// over random unit-vector pairs: an empirical witness that the learned
/// map has a finite Lipschitz constant.
pub fn lipschitz_probe(model: &MlpModel, pairs: usize, seed: u64) -> Result<f64> {
    if pairs == 0 {
        return Err(Error::invalid("need at least one pair"));
    }
    let dim = model.input_dim();
    let mut max_ratio: f64 = 0.0;
    for i in 0..pairs {
        let mut rng = stream_rng(seed, i as u64);
        let mut draw = || {
            let mut v: Vec<f64> = (0..dim)
                .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
                .collect();
            let n: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            for x in v.iter_mut() {
                *x /= n;
            }
            v
        };
        let f1 = draw();
        let f2 = draw();
        let dist: f64 = f1
            .iter()
            .zip(f2.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if dist < 1e-12 {
            continue;
        }
        let p1 = model.predict(&f1)?;
        let p2 = model.predict(&f2)?;
        let out: f64 = p1
            .iter()
            .zip(p2.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        max_ratio = max_ratio.max(out / dist);
    }
    Ok(max_ratio)
}

/// Write a model: text header (dims, activation, training meta), then
/// the parameters as little-endian 64-bit floats, weights row-major and
/// biases per layer. The loss trace is not persisted.
pub fn save_model(model: &MlpModel, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut out = BufWriter::new(file);
    writeln!(out, "{MODEL_MAGIC}")?;
    let dims: Vec<String> = model.dims.iter().map(|d| d.to_string()).collect();
    writeln!(out, "dims: {}", dims.join(" "))?;
    writeln!(out, "activation: tanh,identity")?;
    writeln!(out, "gamma: {}", model.gamma)?;
    writeln!(out, "seed: {}", model.seed)?;
    writeln!(out, "iterations: {}", model.iterations)?;
    writeln!(out, "final_loss: {}", model.final_loss)?;
    writeln!(out, "binary: f64-le weights row-major, then biases, per layer")?;
    for (w, b) in model.weights.iter().zip(model.biases.iter()) {
        for r in 0..w.nrows() {
            for c in 0..w.ncols() {
                out.write_all(&w[(r, c)].to_le_bytes())?;
            }
        }
        for v in b.iter() {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

fn header_line(
    reader: &mut impl BufRead,
    path: &Path,
    key: &str,
) -> Result<String> {
    let mut buf = Vec::new();
    reader.read_until(b'\n', &mut buf)?;
    let line = String::from_utf8(buf).map_err(|_| Error::Format {
        path: path.display().to_string(),
        detail: format!("header line {key:?} is not UTF-8"),
    })?;
    let line = line.trim_end_matches('\n');
    if key.is_empty() {
        return Ok(line.to_string());
    }
    let prefix = format!("{key}: ");
    line.strip_prefix(&prefix)
        .map(str::to_string)
        .ok_or_else(|| Error::Format {
            path: path.display().to_string(),
            detail: format!("expected header line {key:?}, got {line:?}"),
        })
}

/// Read a model written by [`save_model`].
pub fn load_model(path: &Path) -> Result<MlpModel> {
    let file = std::fs::File::open(path)?;
    let mut reader = BufReader::new(file);
    let display = path.display().to_string();
    let fmt_err = |detail: String| Error::Format {
        path: display.clone(),
        detail,
    };
    let magic = header_line(&mut reader, path, "")?;
    if magic != MODEL_MAGIC {
        return Err(fmt_err(format!(
            "bad magic {magic:?}, expected {MODEL_MAGIC:?}"
        )));
    }
    let dims: Vec<usize> = header_line(&mut reader, path, "dims")?
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| fmt_err(format!("bad dims: {e}")))?;
    if dims.len() < 2 || dims.contains(&0) || dims[dims.len() - 1] != OUT_DIM {
        return Err(fmt_err(format!("implausible dims {dims:?}")));
    }
    let activation = header_line(&mut reader, path, "activation")?;
    if activation != "tanh,identity" {
        return Err(fmt_err(format!("unsupported activation {activation:?}")));
    }
    let gamma: f64 = header_line(&mut reader, path, "gamma")?
        .parse()
        .map_err(|e| fmt_err(format!("bad gamma: {e}")))?;
    let seed: u64 = header_line(&mut reader, path, "seed")?
        .parse()
        .map_err(|e| fmt_err(format!("bad seed: {e}")))?;
    let iterations: usize = header_line(&mut reader, path, "iterations")?
        .parse()
        .map_err(|e| fmt_err(format!("bad iterations: {e}")))?;
    let final_loss: f64 = header_line(&mut reader, path, "final_loss")?
        .parse()
        .map_err(|e| fmt_err(format!("bad final_loss: {e}")))?;
    header_line(&mut reader, path, "binary")?;
    let mut weights = Vec::with_capacity(dims.len() - 1);
    let mut biases = Vec::with_capacity(dims.len() - 1);
    let mut buf = [0u8; 8];
    let mut read_f64 = |reader: &mut BufReader<std::fs::File>| -> Result<f64> {
        reader.read_exact(&mut buf).map_err(|_| Error::Format {
            path: display.clone(),
            detail: "binary payload ended early".into(),
        })?;
        let v = f64::from_le_bytes(buf);
        if !v.is_finite() {
            return Err(Error::Format {
                path: display.clone(),
                detail: format!("non-finite parameter {v}"),
            });
        }
        Ok(v)
    };
    for pair in dims.windows(2) {
        let (rows, cols) = (pair[1], pair[0]);
        let mut w = DMatrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                w[(r, c)] = read_f64(&mut reader)?;
            }
        }
        let mut b = DVector::zeros(rows);
        for r in 0..rows {
            b[r] = read_f64(&mut reader)?;
        }
        weights.push(w);
        biases.push(b);
    }
    let mut trailing = [0u8; 1];
    if reader.read(&mut trailing)? != 0 {
        return Err(Error::Format {
            path: display,
            detail: "trailing bytes after the binary payload".into(),
        });
    }
    Ok(MlpModel {
        dims,
        weights,
        biases,
        gamma,
        iterations,
        seed,
        final_loss,
        loss_trace: Vec::new(),
    })
}
