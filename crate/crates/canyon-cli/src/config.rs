//! Run configuration, parameter overrides and error-to-exit-code mapping.

use std::env;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use canyon_core::geometry::Site;
use canyon_core::{AnalyzeParams, Error, QdModelParams};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub(crate) const THREADS_VAR: &str = "CANYON_QD_THREADS";

#[derive(Debug)]
pub(crate) enum CliError {
    /// The caller supplied something unusable: flags, files or field values.
    Input(String),
    /// A pipeline stage failed on input that passed the front-end checks.
    Core(Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(msg) => write!(f, "{msg}"),
            CliError::Core(err) => {
                write!(f, "{err}")?;
                let mut source = std::error::Error::source(err);
                while let Some(inner) = source {
                    write!(f, ": {inner}")?;
                    source = inner.source();
                }
                Ok(())
            }
        }
    }
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        CliError::Core(err)
    }
}

impl CliError {
    /// 2 for anything the caller can fix by changing the invocation or the
    /// input files, 1 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Core(err) => match err {
                Error::Io { .. } | Error::InvalidContainer { .. } | Error::PayloadLength { .. } => 2,
                Error::Stage { stage, .. } if *stage == "load" => 2,
                _ => 1,
            },
        }
    }

    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }
}

/// Builds the global thread pool when `CANYON_QD_THREADS` caps parallelism.
pub(crate) fn init_thread_pool() -> Result<(), CliError> {
    let Ok(raw) = env::var(THREADS_VAR) else { return Ok(()) };
    let threads: usize = raw
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::input(format!("{THREADS_VAR} must be a positive integer, got `{raw}`")))?;
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

/// Applies a JSON override file on top of `base`. Every key must name an
/// existing field; values are checked by deserializing the merged object.
pub(crate) fn apply_overrides<T>(base: &T, path: &Path) -> Result<T, CliError>
where
    T: Serialize + DeserializeOwned,
{
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::input(format!("{} is not valid JSON: {e}", path.display())))?;
    let overrides = value
        .as_object()
        .ok_or_else(|| CliError::input(format!("{} must hold a JSON object", path.display())))?;

    let mut tree = serde_json::to_value(base).expect("parameters serialize to JSON");
    let fields = tree.as_object_mut().expect("parameters form a JSON object");
    for (key, v) in overrides {
        if !fields.contains_key(key) {
            return Err(CliError::input(format!(
                "unknown parameter `{key}` in {}",
                path.display()
            )));
        }
        fields.insert(key.clone(), v.clone());
    }
    serde_json::from_value(tree)
        .map_err(|e| CliError::input(format!("invalid parameter value in {}: {e}", path.display())))
}

/// Rejects a `--params` file for commands that take no overrides.
pub(crate) fn reject_params(cli: &crate::Cli, command: &str) -> Result<(), CliError> {
    match &cli.params {
        Some(_) => Err(CliError::input(format!("`{command}` takes no --params overrides"))),
        None => Ok(()),
    }
}

/// One synthesized band: its artifact label, derived seed and full model.
#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct SynthBand {
    pub label: String,
    pub seed: u64,
    pub model: QdModelParams,
}

/// The resolved settings of one invocation; `run.json` holds exactly this.
#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub(crate) enum RunConfig {
    Analyze {
        band: String,
        out_dir: PathBuf,
        inputs: Vec<PathBuf>,
        single_band: bool,
        params: AnalyzeParams,
    },
    Synthesize {
        band: String,
        out_dir: PathBuf,
        count: usize,
        width_m: f64,
        tx: Site,
        rx: Site,
        bands: Vec<SynthBand>,
    },
    Fit {
        band: String,
        out_dir: PathBuf,
        input: PathBuf,
        model: String,
    },
    Report {
        band: String,
        out_dir: PathBuf,
        input: PathBuf,
    },
}

pub(crate) fn write_run_json(dir: &Path, config: &RunConfig) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::input(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join("run.json");
    let mut text = serde_json::to_string_pretty(config).expect("run config serializes");
    text.push('\n');
    fs::write(&path, text).map_err(|e| Error::Io { path: path.clone(), source: e })?;
    Ok(path)
}
