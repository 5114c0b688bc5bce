//! Scenario runner behind the `aah` binary.
//!
//! A run reads a scenario, computes every artifact in memory and only then
//! writes them, so a failed run leaves no partial files behind. Numbers are
//! written with 17 significant digits in a fixed, locale-free format, which
//! makes equal scenarios produce byte-identical CSVs.

pub mod config;
mod tasks;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::error::Error;

pub use config::{parse_pairs, parse_real, InitialKind, Scenario, SweepAxis, Task};

/// Environment variable bounding the worker pool; unset means automatic.
pub const THREADS_ENV: &str = "AAH_THREADS";

/// Version tag of each CSV layout, echoed into the manifest.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(Error),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io { .. } => 1,
        }
    }

    /// Classifies a library error raised while a task runs.
    pub(crate) fn runtime(e: Error) -> Self {
        match e {
            Error::InvalidParameter { .. } | Error::SizeCap { .. } => CliError::Config(e.to_string()),
            other => CliError::Numerical(other),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Config(e.to_string())
    }
}

/// One output file, held in memory until the run has succeeded.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

/// What a finished run produced.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub scenario: Scenario,
    pub artifacts: Vec<Artifact>,
    pub summary: String,
}

/// `{:.16e}`: 17 significant digits, `.` decimal point, no locale.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

pub(crate) struct Csv {
    text: String,
}

impl Csv {
    pub(crate) fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Self { text }
    }

    pub(crate) fn row(&mut self, fields: &[String]) {
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }

    pub(crate) fn into_artifact(self, name: &str) -> Artifact {
        Artifact { name: name.into(), contents: self.text }
    }
}

/// Worker count from `AAH_THREADS`, or `None` for rayon's default.
pub fn thread_limit() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) if v.trim().is_empty() => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Config(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        },
    }
}

/// Reads a scenario file and applies `key=value` overrides in order.
pub fn load_scenario(path: &Path, overrides: &[String]) -> Result<Scenario, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut pairs = parse_pairs(&text)?;
    for o in overrides {
        let single = parse_pairs(o).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("--set {}", msg.trim_start_matches("line 1: "))),
            other => other,
        })?;
        if single.is_empty() {
            return Err(CliError::Config(format!("override `{o}` is not key=value")));
        }
        pairs.extend(single);
    }
    Scenario::from_pairs(&pairs)
}

/// Computes every artifact of `scenario` without touching the file system.
pub fn compute(scenario: &Scenario) -> Result<RunOutput, CliError> {
    let threads = thread_limit()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))?;
    let (artifacts, summary) = pool.install(|| tasks::run(scenario))?;
    Ok(RunOutput { scenario: scenario.clone(), artifacts, summary })
}

fn manifest(out: &RunOutput, elapsed: f64) -> String {
    let mut m = String::new();
    for (k, v) in out.scenario.to_pairs() {
        let _ = writeln!(m, "{k}={v}");
    }
    let _ = writeln!(m, "meta.tool={}", env!("CARGO_PKG_NAME"));
    let _ = writeln!(m, "meta.version={}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(m, "meta.schema_version={SCHEMA_VERSION}");
    let files: Vec<&str> = out.artifacts.iter().map(|a| a.name.as_str()).collect();
    let _ = writeln!(m, "meta.files={}", files.join(","));
    let threads = rayon::current_num_threads();
    let _ = writeln!(m, "meta.threads={}", thread_limit().ok().flatten().unwrap_or(threads));
    let _ = writeln!(m, "meta.elapsed_seconds={elapsed:.3}");
    m
}

/// Writes the artifacts, `summary.txt` and `manifest` into the scenario's
/// output directory. Files already written are removed if a later write fails.
pub fn write_outputs(out: &RunOutput, elapsed: f64) -> Result<Vec<PathBuf>, CliError> {
    let dir = &out.scenario.out_dir;
    fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.clone(), source })?;
    let mut files: Vec<(String, String)> =
        out.artifacts.iter().map(|a| (a.name.clone(), a.contents.clone())).collect();
    files.push(("summary.txt".into(), out.summary.clone()));
    files.push(("manifest".into(), manifest(out, elapsed)));
    let mut written = Vec::new();
    for (name, contents) in files {
        let path = dir.join(&name);
        if let Err(source) = fs::write(&path, contents) {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            return Err(CliError::Io { path, source });
        }
        written.push(path);
    }
    Ok(written)
}

/// Full `run` command: load, compute, write.
pub fn run_scenario(path: &Path, overrides: &[String]) -> Result<RunOutput, CliError> {
    let start = Instant::now();
    let scenario = load_scenario(path, overrides)?;
    let out = compute(&scenario)?;
    write_outputs(&out, start.elapsed().as_secs_f64())?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_is_fixed() {
        assert_eq!(fmt_num(1.0), "1.0000000000000000e0");
        assert_eq!(fmt_num(-0.5), "-5.0000000000000000e-1");
        assert_eq!(fmt_num(f64::NAN), "nan");
        let x = 0.1 + 0.2;
        assert_eq!(fmt_num(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        assert_eq!(CliError::Numerical(Error::Eigensolver).exit_code(), 3);
        assert_eq!(CliError::runtime(Error::SizeCap { dim: 9, cap: 1 }).exit_code(), 2);
    }
}
