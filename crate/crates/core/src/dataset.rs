//! Synthetic training data for the parameter regressors.
//!
//! Each sample pairs a measured surface field with the plane that
//! produced it: a random parameter triple `m` is drawn uniformly from
//! the admissible box, a random slip is drawn from the retained
//! subspace `E_m` with standard normal coefficients, and the surface
//! data at the observation grid points is normalized to a unit feature
//! vector. Targets are the parameters rescaled affinely to `[0, 1]^3`.
//!
//! Generation is schedule-independent: sample `i` depends only on the
//! master seed and its global index, so datasets can be regenerated
//! exactly, extended, or split without overlap by index ranges.

use crate::geometry::{observation_grid, FaultParams, ParamBox, SineBasis, SourceRegion};
use crate::kernel::KernelConfig;
use crate::operator::{svd_subspace, AssemblyContext};
use crate::seeding::stream_rng;
use crate::{Error, Result};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

/// Norm floor under which a data vector counts as degenerate.
const DEGENERATE_NORM: f64 = 1e-14;

/// Redraw attempts for a degenerate slip before giving up.
const DEGENERATE_RETRIES: usize = 8;

/// Sidecar metadata format version.
const FORMAT_VERSION: u32 = 1;

/// One labeled observation: unit feature vector and rescaled target.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// Normalized surface data at the grid points, unit Euclidean norm.
    pub features: Vec<f64>,
    /// Parameters rescaled to `[0, 1]^3` by the box bounds.
    pub target: [f64; 3],
    /// The parameters in physical units.
    pub raw_m: FaultParams,
    /// Rank of the subspace the slip was drawn from.
    pub source_rank: usize,
}

/// Everything needed to regenerate a dataset exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    /// Sidecar format version.
    pub format_version: u32,
    /// Master seed.
    pub seed: u64,
    /// Global index of the first sample (splits use disjoint ranges).
    pub first_index: u64,
    /// Sample count.
    pub count: usize,
    /// Subspace rank slips were drawn from.
    pub q: usize,
    /// Feature vector length (observation grid size).
    pub feature_count: usize,
    /// Observation grid points per axis.
    pub grid_n: usize,
    /// Basis frequencies per axis.
    pub basis_k_max: usize,
    /// Basis half-width.
    pub basis_half_width: f64,
    /// Source mesh cells per axis.
    pub region_cells: usize,
    /// Source region half-width.
    pub region_half_width: f64,
    /// Per-cell quadrature order.
    pub quad_order: usize,
    /// Whether the depth cutoff was applied.
    pub cutoff_enabled: bool,
    /// Cutoff depth.
    pub cutoff_d0: f64,
    /// Parameter box targets were rescaled by.
    pub param_box: ParamBox,
    /// Noise level applied to features, when any.
    pub noise_level: Option<f64>,
    /// Seed of the noise streams, when noise was applied.
    pub noise_seed: Option<u64>,
}

/// A generated dataset with its regeneration metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// The samples, in index order.
    pub samples: Vec<Sample>,
    /// Regeneration metadata.
    pub meta: DatasetMeta,
}

impl Dataset {
    /// Sample count.
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    /// Whether the dataset is empty.
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Feature vector length.
    pub fn feature_count(&self) -> usize {
        self.meta.feature_count
    }

    /// A copy with per-sample Gaussian noise added to the features
    /// (re-normalized to unit norm). Each sample uses its own noise
    /// stream derived from `(seed, global index)`.
    pub fn with_noise(&self, level: f64, seed: u64) -> Result<Dataset> {
        let mut out = self.clone();
        for (i, sample) in out.samples.iter_mut().enumerate() {
            let mut rng = stream_rng(seed, self.meta.first_index + i as u64);
            sample.features = add_noise_with_rng(&sample.features, level, &mut rng)?;
        }
        out.meta.noise_level = Some(level);
        out.meta.noise_seed = Some(seed);
        Ok(out)
    }
}

/// Geometry and operator context for data generation.
#[derive(Debug, Clone)]
pub struct DatasetContext {
    /// Assembly context on the observation grid data is sampled at.
    pub assembly: AssemblyContext,
    /// Box parameters are drawn from.
    pub param_box: ParamBox,
}

impl DatasetContext {
    /// Build a context from its parts.
    pub fn new(
        basis: SineBasis,
        region: SourceRegion,
        cfg: KernelConfig,
        quad_order: usize,
        grid_n: usize,
        param_box: ParamBox,
    ) -> Result<Self> {
        let grid = observation_grid(grid_n)?;
        let assembly = AssemblyContext::new(basis, region, grid, cfg, quad_order)?;
        Ok(DatasetContext {
            assembly,
            param_box,
        })
    }

    /// Default context: 11 x 11 observation grid (121 features),
    /// frequencies up to 8, default source mesh and kernel settings.
    pub fn with_defaults() -> Result<Self> {
        DatasetContext::new(
            crate::geometry::sine_basis(8, crate::geometry::SOURCE_HALF_WIDTH)?,
            SourceRegion::default(),
            KernelConfig::default(),
            4,
            11,
            ParamBox::default(),
        )
    }

    fn meta(&self, seed: u64, first_index: u64, count: usize, q: usize) -> DatasetMeta {
        DatasetMeta {
            format_version: FORMAT_VERSION,
            seed,
            first_index,
            count,
            q,
            feature_count: self.assembly.rows(),
            grid_n: self.assembly.grid.n_per_axis,
            basis_k_max: self.assembly.basis.k_max,
            basis_half_width: self.assembly.basis.half_width,
            region_cells: self.assembly.region.cells,
            region_half_width: self.assembly.region.half_width,
            quad_order: self.assembly.quad_order,
            cutoff_enabled: self.assembly.cfg.cutoff_enabled,
            cutoff_d0: self.assembly.cfg.d0,
            param_box: self.param_box,
            noise_level: None,
            noise_seed: None,
        }
    }
}

/// Build one sample from explicit subspace coefficients (test hook;
/// generation draws them from a standard normal).
pub fn sample_from_weights(
    ctx: &DatasetContext,
    m: &FaultParams,
    weights: &[f64],
    q: usize,
) -> Result<Sample> {
    let op = ctx.assembly.assemble(m)?;
    let sub = svd_subspace(&op, q)?;
    if weights.len() != q {
        return Err(Error::dims(format!(
            "expected {q} subspace coefficients, got {}",
            weights.len()
        )));
    }
    let w = nalgebra::DVector::from_column_slice(weights);
    let coeffs = sub.right_q() * w;
    let data = op.forward(coeffs.as_slice())?;
    let norm: f64 = data.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm < DEGENERATE_NORM {
        return Err(Error::invalid(format!(
            "degenerate data vector (norm {norm:.3e}) at m = {m}"
        )));
    }
    Ok(Sample {
        features: data.iter().map(|v| v / norm).collect(),
        target: ctx.param_box.normalize(m),
        raw_m: *m,
        source_rank: q,
    })
}

fn draw_sample(
    ctx: &DatasetContext,
    q: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Sample> {
    use rand::Rng;
    let m = ctx.param_box.sample(rng);
    let op = ctx.assembly.assemble(&m)?;
    let sub = svd_subspace(&op, q)?;
    for _ in 0..DEGENERATE_RETRIES {
        let mut w = nalgebra::DVector::zeros(q);
        for wi in w.iter_mut() {
            *wi = rng.sample::<f64, _>(rand_distr::StandardNormal);
        }
        let coeffs = sub.right_q() * &w;
        let data = op.forward(coeffs.as_slice())?;
        let norm: f64 = data.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm >= DEGENERATE_NORM {
            return Ok(Sample {
                features: data.iter().map(|v| v / norm).collect(),
                target: ctx.param_box.normalize(&m),
                raw_m: m,
                source_rank: q,
            });
        }
    }
    Err(Error::invalid(format!(
        "degenerate data vector after {DEGENERATE_RETRIES} slip draws at m = {m}"
    )))
}

/// Generate `count` samples with global indices starting at
/// `first_index`. Sample `i` depends only on `(seed, first_index + i)`,
/// so disjoint index ranges give disjoint, merge-safe datasets.
pub fn generate_offset(
    ctx: &DatasetContext,
    first_index: u64,
    count: usize,
    q: usize,
    seed: u64,
) -> Result<Dataset> {
    if count == 0 {
        return Err(Error::invalid("sample count must be >= 1"));
    }
    if q == 0 || q >= ctx.assembly.cols() {
        return Err(Error::invalid(format!(
            "rank q = {q} must be in 1..{}",
            ctx.assembly.cols()
        )));
    }
    let mut samples = Vec::with_capacity(count);
    for i in 0..count {
        let mut rng = stream_rng(seed, first_index + i as u64);
        samples.push(draw_sample(ctx, q, &mut rng)?);
    }
    Ok(Dataset {
        samples,
        meta: ctx.meta(seed, first_index, count, q),
    })
}

/// Generate `count` samples at indices `0..count`.
pub fn generate(ctx: &DatasetContext, count: usize, q: usize, seed: u64) -> Result<Dataset> {
    generate_offset(ctx, 0, count, q, seed)
}

fn add_noise_with_rng(features: &[f64], level: f64, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    use rand::Rng;
    if features.is_empty() {
        return Err(Error::invalid("cannot add noise to an empty vector"));
    }
    if !(level.is_finite() && level > 0.0) {
        return Err(Error::invalid(format!(
            "noise level must be positive and finite, got {level}"
        )));
    }
    let sup = features.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let sigma = sup * level;
    for _ in 0..DEGENERATE_RETRIES {
        let noisy: Vec<f64> = features
            .iter()
            .map(|v| v + sigma * rng.sample::<f64, _>(rand_distr::StandardNormal))
            .collect();
        let norm: f64 = noisy.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm >= DEGENERATE_NORM {
            return Ok(noisy.iter().map(|v| v / norm).collect());
        }
    }
    Err(Error::invalid(
        "noise repeatedly cancelled the data vector; level is far too large",
    ))
}

/// Add Gaussian measurement noise to a feature vector and re-normalize.
///
/// The noise deviation is `level` times the sup-norm of the vector
/// (default level 1/20), applied componentwise.
pub fn add_noise(features: &[f64], level: f64, seed: u64) -> Result<Vec<f64>> {
    add_noise_with_rng(features, level, &mut stream_rng(seed, 0))
}

/// Sidecar metadata path: the data file's extensions are replaced by
/// `.meta.json` (`train.csv` and `train.csv.gz` both map to
/// `train.meta.json`).
pub fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut stem = path.to_path_buf();
    while stem.extension().is_some() {
        stem = stem.with_extension("");
    }
    let mut name = stem.into_os_string();
    name.push(".meta.json");
    std::path::PathBuf::from(name)
}

fn is_gz(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "gz")
}

/// Write a dataset: CSV body (header `a,b,d,f_1..f_M`, parameters in
/// physical units) plus a JSON metadata sidecar. A `.gz` suffix
/// compresses the body; the sidecar stays plain.
pub fn save(dataset: &Dataset, path: &Path) -> Result<()> {
    let meta_json = serde_json::to_string_pretty(&dataset.meta).map_err(|e| Error::Format {
        path: sidecar_path(path).display().to_string(),
        detail: format!("metadata serialization failed: {e}"),
    })?;
    std::fs::write(sidecar_path(path), meta_json + "\n")?;
    let file = std::fs::File::create(path)?;
    let mut out: Box<dyn Write> = if is_gz(path) {
        Box::new(BufWriter::new(flate2::write::GzEncoder::new(
            file,
            flate2::Compression::default(),
        )))
    } else {
        Box::new(BufWriter::new(file))
    };
    write_csv(dataset, &mut out)?;
    out.flush()?;
    Ok(())
}

fn write_csv(dataset: &Dataset, out: &mut dyn Write) -> Result<()> {
    let mut header = String::from("a,b,d");
    for i in 1..=dataset.meta.feature_count {
        header.push_str(&format!(",f_{i}"));
    }
    writeln!(out, "{header}")?;
    let mut line = String::new();
    for s in &dataset.samples {
        line.clear();
        line.push_str(&format!("{},{},{}", s.raw_m.a, s.raw_m.b, s.raw_m.d));
        for f in &s.features {
            line.push_str(&format!(",{f}"));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Read a dataset written by [`save`], validating it against its
/// metadata sidecar.
pub fn load(path: &Path) -> Result<Dataset> {
    let meta_path = sidecar_path(path);
    let meta_text = std::fs::read_to_string(&meta_path).map_err(|e| Error::Format {
        path: meta_path.display().to_string(),
        detail: format!("cannot read metadata sidecar: {e}"),
    })?;
    let meta: DatasetMeta = serde_json::from_str(&meta_text).map_err(|e| Error::Format {
        path: meta_path.display().to_string(),
        detail: format!("malformed metadata: {e}"),
    })?;
    if meta.format_version != FORMAT_VERSION {
        return Err(Error::Format {
            path: meta_path.display().to_string(),
            detail: format!(
                "unsupported format version {} (this build reads {FORMAT_VERSION})",
                meta.format_version
            ),
        });
    }
    let file = std::fs::File::open(path)?;
    let reader: Box<dyn Read> = if is_gz(path) {
        Box::new(flate2::read::GzDecoder::new(file))
    } else {
        Box::new(file)
    };
    let reader = BufReader::new(reader);
    let display = path.display().to_string();
    let parse_err = |line: usize, detail: String| Error::Parse {
        path: display.clone(),
        line,
        detail,
    };
    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(h) => h?,
        None => return Err(parse_err(1, "file is empty".into())),
    };
    let expected_cols = 3 + meta.feature_count;
    let header_cols = header.split(',').count();
    if !header.starts_with("a,b,d") || header_cols != expected_cols {
        return Err(parse_err(
            1,
            format!(
                "header has {header_cols} columns, metadata promises {expected_cols}"
            ),
        ));
    }
    let mut samples = Vec::with_capacity(meta.count);
    for (row, line) in lines.enumerate() {
        let line_no = row + 2;
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let mut values = Vec::with_capacity(expected_cols);
        for field in line.split(',') {
            let v: f64 = field.parse().map_err(|e| {
                parse_err(line_no, format!("bad float {field:?}: {e}"))
            })?;
            values.push(v);
        }
        if values.len() != expected_cols {
            return Err(parse_err(
                line_no,
                format!(
                    "row has {} columns, metadata promises {expected_cols}",
                    values.len()
                ),
            ));
        }
        let raw_m = FaultParams::new(values[0], values[1], values[2])
            .map_err(|e| parse_err(line_no, format!("bad parameters: {e}")))?;
        let features = values[3..].to_vec();
        let norm: f64 = features.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(parse_err(
                line_no,
                format!("feature vector norm {norm} is not 1"),
            ));
        }
        samples.push(Sample {
            features,
            target: meta.param_box.normalize(&raw_m),
            raw_m,
            source_rank: meta.q,
        });
    }
    if samples.len() != meta.count {
        return Err(parse_err(
            samples.len() + 2,
            format!(
                "expected {} data rows, found {}",
                meta.count,
                samples.len()
            ),
        ));
    }
    Ok(Dataset { samples, meta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{sine_basis, SOURCE_HALF_WIDTH};

    fn tiny_ctx() -> DatasetContext {
        DatasetContext::new(
            sine_basis(2, SOURCE_HALF_WIDTH).unwrap(),
            SourceRegion::new(SOURCE_HALF_WIDTH, 2).unwrap(),
            KernelConfig::default(),
            2,
            3,
            ParamBox::default(),
        )
        .unwrap()
    }

    #[test]
    fn generation_is_deterministic_and_normalized() {
        let ctx = tiny_ctx();
        let d1 = generate(&ctx, 12, 2, 99).unwrap();
        let d2 = generate(&ctx, 12, 2, 99).unwrap();
        assert_eq!(d1, d2);
        for s in &d1.samples {
            let norm: f64 = s.features.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() <= 1e-12, "norm {norm}");
            for t in s.target {
                assert!((0.0..=1.0).contains(&t), "target {t}");
            }
            assert_eq!(s.source_rank, 2);
        }
    }

    #[test]
    fn samples_depend_only_on_global_index() {
        let ctx = tiny_ctx();
        let all = generate(&ctx, 8, 2, 41).unwrap();
        let tail = generate_offset(&ctx, 5, 3, 2, 41).unwrap();
        assert_eq!(&all.samples[5..], &tail.samples[..]);
    }

    #[test]
    fn held_out_split_is_disjoint() {
        let ctx = tiny_ctx();
        let train = generate(&ctx, 10, 2, 7).unwrap();
        let held = generate_offset(&ctx, 10, 10, 2, 7).unwrap();
        for t in &train.samples {
            for h in &held.samples {
                assert_ne!(t.raw_m, h.raw_m);
            }
        }
    }

    #[test]
    fn forced_first_mode_gives_top_vector_data() {
        let ctx = tiny_ctx();
        let m = FaultParams::new(0.4, -0.3, -22.0).unwrap();
        let mut w = vec![0.0; 2];
        w[0] = 1.0;
        let sample = sample_from_weights(&ctx, &m, &w, 2).unwrap();
        let op = ctx.assembly.assemble(&m).unwrap();
        let sub = svd_subspace(&op, 2).unwrap();
        let top: Vec<f64> = sub.right_q().column(0).iter().cloned().collect();
        let data = op.forward(&top).unwrap();
        let norm: f64 = data.iter().map(|v| v * v).sum::<f64>().sqrt();
        for (got, want) in sample.features.iter().zip(data.iter()) {
            assert!((got - want / norm).abs() <= 1e-12);
        }
    }

    #[test]
    fn zero_weights_are_degenerate() {
        let ctx = tiny_ctx();
        let m = FaultParams::new(0.0, 0.0, -30.0).unwrap();
        let err = sample_from_weights(&ctx, &m, &[0.0, 0.0], 2);
        assert!(matches!(err, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn invalid_generation_arguments_are_rejected() {
        let ctx = tiny_ctx();
        assert!(generate(&ctx, 0, 2, 1).is_err());
        assert!(generate(&ctx, 1, 0, 1).is_err());
        assert!(generate(&ctx, 1, ctx.assembly.cols(), 1).is_err());
    }

    #[test]
    fn targets_are_uniform_over_the_box() {
        let ctx = tiny_ctx();
        let ds = generate(&ctx, 10_000, 2, 1234).unwrap();
        // 99.9% chi-square quantile at 19 degrees of freedom.
        const CHI2_999_DF19: f64 = 43.8202;
        for axis in 0..3 {
            let mut bins = [0usize; 20];
            for s in &ds.samples {
                let b = (s.target[axis] * 20.0) as usize;
                bins[b.min(19)] += 1;
            }
            let expect = ds.len() as f64 / 20.0;
            let chi2: f64 = bins
                .iter()
                .map(|&c| {
                    let d = c as f64 - expect;
                    d * d / expect
                })
                .sum();
            assert!(chi2 < CHI2_999_DF19, "axis {axis} chi2 {chi2}");
        }
    }

    #[test]
    fn noise_preserves_unit_norm_and_determinism() {
        let ctx = tiny_ctx();
        let ds = generate(&ctx, 4, 2, 5).unwrap();
        let f = &ds.samples[0].features;
        let n1 = add_noise(f, 0.05, 77).unwrap();
        let n2 = add_noise(f, 0.05, 77).unwrap();
        assert_eq!(n1, n2);
        let norm: f64 = n1.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() <= 1e-12);
        assert_ne!(&n1, f, "noise left the vector unchanged");
    }

    #[test]
    fn vanishing_noise_level_returns_the_input() {
        let ctx = tiny_ctx();
        let ds = generate(&ctx, 1, 2, 5).unwrap();
        let f = &ds.samples[0].features;
        let n = add_noise(f, 1e-14, 77).unwrap();
        let diff: f64 = n
            .iter()
            .zip(f.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(diff <= 1e-12, "diff {diff}");
        assert!(add_noise(f, 0.0, 77).is_err());
        assert!(add_noise(&[], 0.1, 77).is_err());
    }

    #[test]
    fn dataset_noise_uses_per_sample_streams() {
        let ctx = tiny_ctx();
        let ds = generate(&ctx, 6, 2, 5).unwrap();
        let noisy = ds.with_noise(0.05, 88).unwrap();
        assert_eq!(noisy.meta.noise_level, Some(0.05));
        assert_eq!(noisy.meta.noise_seed, Some(88));
        // Per-sample streams: each sample matches a direct stream draw.
        for (i, (clean, noised)) in ds.samples.iter().zip(noisy.samples.iter()).enumerate() {
            let mut rng = stream_rng(88, i as u64);
            let expect = add_noise_with_rng(&clean.features, 0.05, &mut rng).unwrap();
            assert_eq!(noised.features, expect);
            assert_eq!(noised.raw_m, clean.raw_m);
        }
    }

    #[test]
    fn sidecar_paths_strip_extension_chains() {
        assert_eq!(
            sidecar_path(Path::new("/tmp/train.csv")),
            Path::new("/tmp/train.meta.json")
        );
        assert_eq!(
            sidecar_path(Path::new("/tmp/train.csv.gz")),
            Path::new("/tmp/train.meta.json")
        );
        assert_eq!(
            sidecar_path(Path::new("data")),
            Path::new("data.meta.json")
        );
    }

    #[test]
    fn save_load_round_trip_is_exact() {
        let ctx = tiny_ctx();
        let ds = generate(&ctx, 9, 2, 31).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("train.csv");
        save(&ds, &path).unwrap();
        let back = load(&path).unwrap();
        assert_eq!(ds, back);
    }

    #[test]
    fn gzip_round_trip_is_exact() {
        let ctx = tiny_ctx();
        let ds = generate(&ctx, 5, 2, 31).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("train.csv.gz");
        save(&ds, &path).unwrap();
        let back = load(&path).unwrap();
        assert_eq!(ds, back);
        // The body really is gzip: it must start with the magic bytes.
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..2], &[0x1f, 0x8b]);
    }

    #[test]
    fn truncated_body_errors_with_line_number() {
        let ctx = tiny_ctx();
        let ds = generate(&ctx, 6, 2, 31).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("train.csv");
        save(&ds, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let kept: Vec<&str> = text.lines().take(4).collect();
        std::fs::write(&path, kept.join("\n") + "\n").unwrap();
        match load(&path) {
            Err(Error::Parse { line, detail, .. }) => {
                assert_eq!(line, 5);
                assert!(detail.contains("expected 6 data rows"), "{detail}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_rows_error_with_line_number() {
        let ctx = tiny_ctx();
        let ds = generate(&ctx, 3, 2, 31).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("train.csv");
        save(&ds, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        lines[2] = lines[2].replacen(',', ",oops,", 1);
        std::fs::write(&path, lines.join("\n") + "\n").unwrap();
        match load(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn header_and_version_mismatches_are_rejected() {
        let ctx = tiny_ctx();
        let ds = generate(&ctx, 3, 2, 31).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("train.csv");
        save(&ds, &path).unwrap();
        // Drop a feature column from the header only.
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        let short = lines[0].rsplit_once(',').unwrap().0.to_string();
        lines[0] = short;
        std::fs::write(&path, lines.join("\n") + "\n").unwrap();
        assert!(matches!(load(&path), Err(Error::Parse { line: 1, .. })));
        // Restore, then bump the sidecar version.
        save(&ds, &path).unwrap();
        let meta_path = sidecar_path(&path);
        let meta = std::fs::read_to_string(&meta_path)
            .unwrap()
            .replace("\"format_version\": 1", "\"format_version\": 9");
        std::fs::write(&meta_path, meta).unwrap();
        assert!(matches!(load(&path), Err(Error::Format { .. })));
        // Missing sidecar.
        std::fs::remove_file(&meta_path).unwrap();
        assert!(matches!(load(&path), Err(Error::Format { .. })));
    }
}
