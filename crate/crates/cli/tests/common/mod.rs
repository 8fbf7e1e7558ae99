//! Helpers for driving the compiled binary in integration tests.
//! Each test target compiles its own copy, so some helpers are unused
//! in some targets.
#![allow(dead_code)]

use std::path::Path;
use std::process::Command;

pub struct Run {
    pub status: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Run `faultstab` with the given arguments from `dir`, with the output
/// directory environment override cleared so tests stay hermetic.
pub fn faultstab(dir: &Path, args: &[&str]) -> Run {
    faultstab_env(dir, args, &[])
}

/// Same as [`faultstab`], with extra environment variables.
pub fn faultstab_env(dir: &Path, args: &[&str], envs: &[(&str, &str)]) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_faultstab"));
    cmd.args(args).current_dir(dir).env_remove("FAULTSTAB_OUT_DIR");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("failed to spawn faultstab");
    Run {
        status: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

/// Arguments generating a small dataset quickly; callers append
/// overrides (later flags win within clap, but prefer distinct flags).
pub const TINY_GEN: &[&str] = &[
    "gen",
    "--count",
    "20",
    "--q",
    "3",
    "--seed",
    "7",
    "--grid-n",
    "5",
    "--k-max",
    "3",
    "--cells",
    "3",
    "--quad-order",
    "3",
];

pub fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("cannot read {}: {e}", path.display()))
}

pub fn assert_same_bytes(a: &Path, b: &Path) {
    assert_eq!(
        read(a),
        read(b),
        "{} and {} differ",
        a.display(),
        b.display()
    );
}
