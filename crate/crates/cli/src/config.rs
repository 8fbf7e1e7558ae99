//! Run configuration plumbing shared by every subcommand.
//!
//! Precedence for each parameter: command-line flag, then the matching
//! section of the `--config` TOML file, then the built-in default. The
//! output directory additionally falls back to `FAULTSTAB_OUT_DIR` and
//! finally to the current directory.
//!
//! Each command starts by printing its full effective configuration as
//! TOML, with every later status line prefixed by `#`, so captured
//! stdout is itself a valid config file that reproduces the run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::{
    cmd_eval::EvalParams, cmd_gen::GenParams, cmd_quadcheck::QuadcheckParams,
    cmd_report::ReportParams, cmd_stability::StabilityParams, cmd_train::TrainParams, CliError,
};

/// Environment variable supplying the default output directory.
pub const OUT_DIR_ENV: &str = "FAULTSTAB_OUT_DIR";

/// Top-level layout of a `--config` file. Every section is optional,
/// so one file can configure several subcommands; unknown keys are
/// rejected to catch typos.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub out_dir: Option<PathBuf>,
    pub gen: Option<GenParams>,
    pub train: Option<TrainParams>,
    pub eval: Option<EvalParams>,
    pub stability: Option<StabilityParams>,
    pub quadcheck: Option<QuadcheckParams>,
    pub report: Option<ReportParams>,
}

/// Parse the `--config` file when one was given.
pub fn load_file_config(path: Option<&Path>) -> Result<FileConfig, CliError> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config file {}: {e}", path.display())))?;
    toml::from_str(&text)
        .map_err(|e| CliError::Usage(format!("config file {}: {e}", path.display())))
}

/// Resolve the output directory (flag, file, environment, `.`) and make
/// sure it exists.
pub fn resolve_out_dir(
    flag: Option<PathBuf>,
    file: Option<PathBuf>,
) -> Result<PathBuf, CliError> {
    let dir = flag
        .or(file)
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).map_err(|e| {
        CliError::Usage(format!(
            "cannot create output directory {}: {e}",
            dir.display()
        ))
    })?;
    Ok(dir)
}

/// Print the effective configuration of a command as a reusable TOML
/// document: a top-level `out_dir` plus one `[section]` table.
pub fn echo_config<T: Serialize>(
    section: &str,
    out_dir: &Path,
    params: &T,
) -> Result<(), CliError> {
    let value = toml::Value::try_from(params).map_err(|e| {
        CliError::Usage(format!("cannot serialize effective {section} config: {e}"))
    })?;
    let mut root = toml::map::Map::new();
    root.insert(
        "out_dir".to_string(),
        toml::Value::String(out_dir.display().to_string()),
    );
    root.insert(section.to_string(), value);
    let doc = toml::to_string(&toml::Value::Table(root)).map_err(|e| {
        CliError::Usage(format!("cannot serialize effective {section} config: {e}"))
    })?;
    println!("# effective configuration (reuse with --config)");
    print!("{doc}");
    Ok(())
}

/// Format a float the way every CSV in this workspace does: shortest
/// representation that parses back to the identical bits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Create a buffered output file, reporting failures as usage errors.
pub fn create_file(path: &Path) -> Result<std::io::BufWriter<std::fs::File>, CliError> {
    let file = std::fs::File::create(path)
        .map_err(|e| CliError::Usage(format!("cannot create {}: {e}", path.display())))?;
    Ok(std::io::BufWriter::new(file))
}

/// Write a whole text file, reporting failures as usage errors.
pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}
